//! Turning an advice-taking learner into a decider, one arity at a time,
//! for function families that reduce downward and self-correct at random
//! points.

use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::Arc;

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::boolean::{BooleanError, TruthTable};
use crate::hypothesis::Hypothesis;
use crate::oracle::{MembershipOracle, OracleError};
use crate::rng::{self, Rng};

/// Largest arity the bootstrap materializes.
pub const MAX_BOOTSTRAP_ARITY: usize = 16;

#[derive(Debug, Error)]
pub enum BootstrapError {
    #[error("no candidate reached the selection floor {floor} at arity {arity} (best {best})")]
    Failed { arity: usize, best: f64, floor: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("downward reduction at arity {arity} asked for arity {asked}")]
    Reduction { arity: usize, asked: usize },
    #[error("learner failed: {0}")]
    Learner(String),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Boolean(#[from] BooleanError),
}

impl BootstrapError {
    pub fn is_contract_failure(&self) -> bool {
        matches!(self, BootstrapError::Failed { .. })
    }
}

pub type Result<T> = std::result::Result<T, BootstrapError>;

/// Computes `f` at arity `n` from `f` at smaller arities.
pub trait Dsr: Send + Sync {
    /// Arities up to this one are given by [`Dsr::base_table`].
    fn base_arity(&self) -> usize;
    fn base_table(&self, n: usize) -> TruthTable;
    /// `lower(m, y)` answers `f_m(y)`; only `m < n` is allowed.
    fn reduce(&self, n: usize, x: u64, lower: &mut dyn FnMut(usize, u64) -> bool) -> bool;
}

/// Computes `f(x)` from `f` at points that are each uniform for uniform `r`.
pub trait Rsr: Send + Sync {
    fn queries(&self, n: usize) -> usize;
    /// At most 64.
    fn randomness_bits(&self, n: usize) -> usize;
    fn query(&self, i: usize, n: usize, x: u64, r: u64) -> u64;
    fn combine(&self, n: usize, x: u64, r: u64, answers: &[bool]) -> bool;
}

/// A learner that is only required to succeed on one advice string per arity.
pub trait AdviceLearner: Send + Sync {
    fn name(&self) -> String;
    fn advice_bits(&self, n: usize) -> usize;
    fn learn(&self, advice: u64, oracle: &mut MembershipOracle, rng: &mut Rng) -> Result<Hypothesis>;
}

/// `f(x) = constant xor <mask, x>`, restricted to the first `n` mask bits
/// at arity `n`. Parity is the all-ones mask.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinearInstance {
    pub mask: Vec<bool>,
    #[serde(default)]
    pub constant: bool,
}

impl LinearInstance {
    pub fn parity(max_n: usize) -> Self {
        LinearInstance {
            mask: vec![true; max_n],
            constant: false,
        }
    }

    /// Parses `{"family": "linear", "mask": [..], "constant": ..}`; masks
    /// may be given as bools or 0/1.
    pub fn from_json(v: &serde_json::Value) -> Result<Self> {
        match v.get("family").and_then(|f| f.as_str()) {
            Some("linear") => {}
            Some(other) => {
                return Err(BootstrapError::InvalidParameter(format!(
                    "unsupported family {other:?}; only \"linear\" is available"
                )))
            }
            None => return Err(BootstrapError::InvalidParameter("missing \"family\"".into())),
        }
        let mask = v
            .get("mask")
            .and_then(|m| m.as_array())
            .ok_or_else(|| BootstrapError::InvalidParameter("missing \"mask\" array".into()))?
            .iter()
            .map(|b| match b {
                serde_json::Value::Bool(b) => Ok(*b),
                serde_json::Value::Number(k) if k.as_u64() == Some(0) => Ok(false),
                serde_json::Value::Number(k) if k.as_u64() == Some(1) => Ok(true),
                other => Err(BootstrapError::InvalidParameter(format!("bad mask entry {other}"))),
            })
            .collect::<Result<Vec<bool>>>()?;
        let constant = v.get("constant").map_or(Ok(false), |c| match c {
            serde_json::Value::Bool(b) => Ok(*b),
            serde_json::Value::Number(k) if k.as_u64().is_some_and(|k| k <= 1) => Ok(k.as_u64() == Some(1)),
            other => Err(BootstrapError::InvalidParameter(format!("bad constant {other}"))),
        })?;
        Ok(LinearInstance { mask, constant })
    }

    pub fn max_arity(&self) -> usize {
        self.mask.len()
    }

    fn mask_word(&self, n: usize) -> u64 {
        self.mask
            .iter()
            .take(n)
            .enumerate()
            .fold(0, |acc, (i, &b)| acc | (u64::from(b) << i))
    }

    pub fn eval(&self, n: usize, x: u64) -> bool {
        ((x & self.mask_word(n)).count_ones() % 2 == 1) ^ self.constant
    }

    pub fn reference(&self, n: usize) -> Result<TruthTable> {
        Ok(TruthTable::from_fn(n, |x| self.eval(n, x))?)
    }
}

impl Dsr for LinearInstance {
    fn base_arity(&self) -> usize {
        1
    }

    fn base_table(&self, n: usize) -> TruthTable {
        self.reference(n).expect("base arity is small")
    }

    fn reduce(&self, n: usize, x: u64, lower: &mut dyn FnMut(usize, u64) -> bool) -> bool {
        let top = (x >> (n - 1)) & 1 == 1;
        lower(n - 1, x & ((1u64 << (n - 1)) - 1)) ^ (top && self.mask[n - 1])
    }
}

impl Rsr for LinearInstance {
    fn queries(&self, _n: usize) -> usize {
        2
    }

    fn randomness_bits(&self, n: usize) -> usize {
        n
    }

    fn query(&self, i: usize, _n: usize, x: u64, r: u64) -> u64 {
        if i == 0 {
            x ^ r
        } else {
            r
        }
    }

    fn combine(&self, _n: usize, _x: u64, _r: u64, answers: &[bool]) -> bool {
        answers[0] ^ answers[1] ^ self.constant
    }
}

/// Parity with its downward and random self-reductions.
pub fn parity_instance(max_n: usize) -> LinearInstance {
    LinearInstance::parity(max_n)
}

/// Learns an affine function from `n + 1` queries (at 0 and at each unit
/// vector) and returns its table.
fn learn_affine(oracle: &mut MembershipOracle) -> Result<TruthTable> {
    let n = oracle.n();
    let constant = oracle.query(0)?;
    let mut mask = 0u64;
    for i in 0..n {
        if oracle.query(1 << i)? != constant {
            mask |= 1 << i;
        }
    }
    Ok(TruthTable::from_fn(n, |x| ((x & mask).count_ones() % 2 == 1) ^ constant)?)
}

/// One advice bit. Under advice `1` it returns the learned affine table with
/// `floor(corruption * 2^n)` random entries flipped; under advice `0` it
/// returns the complement of the learned table.
#[derive(Debug, Clone)]
pub struct ParityAdviceLearner {
    pub corruption: f64,
}

impl Default for ParityAdviceLearner {
    fn default() -> Self {
        ParityAdviceLearner { corruption: 0.01 }
    }
}

impl AdviceLearner for ParityAdviceLearner {
    fn name(&self) -> String {
        format!("parity-advice(corruption={})", self.corruption)
    }

    fn advice_bits(&self, _n: usize) -> usize {
        1
    }

    fn learn(&self, advice: u64, oracle: &mut MembershipOracle, rng: &mut Rng) -> Result<Hypothesis> {
        let learned = learn_affine(oracle)?;
        if advice == 0 {
            return Ok(Hypothesis::Table(learned.not()));
        }
        let mut table = learned;
        let flips = (self.corruption * table.len() as f64).floor() as u64;
        for idx in rand::seq::index::sample(rng, table.len() as usize, flips as usize) {
            let idx = idx as u64;
            let v = table.get(idx);
            table.set(idx, !v);
        }
        Ok(Hypothesis::Table(table))
    }
}

/// No advice, exact output.
#[derive(Debug, Clone, Default)]
pub struct PerfectParityLearner;

impl AdviceLearner for PerfectParityLearner {
    fn name(&self) -> String {
        "perfect-affine".into()
    }

    fn advice_bits(&self, _n: usize) -> usize {
        0
    }

    fn learn(&self, _advice: u64, oracle: &mut MembershipOracle, _rng: &mut Rng) -> Result<Hypothesis> {
        Ok(Hypothesis::Table(learn_affine(oracle)?))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct BootstrapConfig {
    /// Cap on the selection sample count `n^10`.
    pub t_cap: u64,
    /// Majority-vote runs of the random self-reduction; `None` means `2n + 11`.
    pub repetitions: Option<usize>,
    /// Least agreement a selected candidate must reach.
    pub selection_floor: f64,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        BootstrapConfig {
            t_cap: 4096,
            repetitions: None,
            selection_floor: 0.75,
        }
    }
}

impl BootstrapConfig {
    pub fn samples(&self, n: usize) -> u64 {
        (n as u64).checked_pow(10).unwrap_or(u64::MAX).min(self.t_cap).max(1)
    }

    pub fn repetitions(&self, n: usize) -> usize {
        self.repetitions.unwrap_or(2 * n + 11)
    }
}

/// The self-corrected predictor for one arity: the majority over
/// `repetitions` runs of the random self-reduction applied to `hypothesis`,
/// with each run's random string derived from `(seed, x, run)`.
#[derive(Clone)]
pub struct CorrectedPredictor {
    pub n: usize,
    pub hypothesis: TruthTable,
    pub repetitions: usize,
    pub seed: u64,
    rsr: Arc<dyn Rsr>,
}

impl CorrectedPredictor {
    fn randomness(&self, x: u64, run: usize) -> u64 {
        let bits = self.rsr.randomness_bits(self.n);
        let r = rng::splitmix64(self.seed ^ rng::splitmix64(x ^ rng::splitmix64(run as u64 + 1)));
        if bits >= 64 {
            r
        } else {
            r & ((1u64 << bits) - 1)
        }
    }

    pub fn eval(&self, x: u64) -> bool {
        let q = self.rsr.queries(self.n);
        let mut answers = vec![false; q];
        let ones = (0..self.repetitions)
            .filter(|&run| {
                let r = self.randomness(x, run);
                for (i, a) in answers.iter_mut().enumerate() {
                    *a = self.hypothesis.get(self.rsr.query(i, self.n, x, r));
                }
                self.rsr.combine(self.n, x, r, &answers)
            })
            .count();
        2 * ones > self.repetitions
    }

    pub fn to_table(&self) -> Result<TruthTable> {
        Ok(TruthTable::from_fn(self.n, |x| self.eval(x))?)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CandidateScore {
    pub advice: u64,
    pub agreement: f64,
    pub learner_queries: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct PhaseReport {
    pub arity: usize,
    pub candidates: Vec<CandidateScore>,
    pub selected_advice: u64,
    pub selected_agreement: f64,
    pub samples: u64,
    /// Hoeffding bound on a candidate's score drifting by 1/4 at this `t`.
    pub selection_tail: f64,
    pub repetitions: usize,
    pub reduction_calls: u64,
    /// Errors of the corrected predictor against the reference, when given.
    pub errors: Option<u64>,
}

/// Final decider: base tables for the smallest arities, corrected
/// predictors above, materialized per arity.
pub struct BootstrapDecider {
    pub tables: Vec<TruthTable>,
    pub predictors: Vec<CorrectedPredictor>,
}

impl BootstrapDecider {
    pub fn max_arity(&self) -> usize {
        self.tables.len()
    }

    pub fn table(&self, n: usize) -> Option<&TruthTable> {
        n.checked_sub(1).and_then(|i| self.tables.get(i))
    }

    pub fn eval(&self, n: usize, x: u64) -> Option<bool> {
        self.table(n).map(|t| t.get(x))
    }
}

pub struct Bootstrap {
    pub decider: BootstrapDecider,
    pub phases: Vec<PhaseReport>,
}

type Reference<'a> = Option<&'a (dyn Fn(usize) -> Result<TruthTable> + Sync)>;

/// Runs phases `1..=n`. Phase `i` runs the learner under every advice
/// string with membership queries answered by the downward reduction over
/// the stored tables, scores the candidates on `t` sampled points labelled
/// the same way, keeps the best, and self-corrects it.
pub fn kko_bootstrap(
    learner: &dyn AdviceLearner,
    dsr: Arc<dyn Dsr>,
    rsr: Arc<dyn Rsr>,
    n: usize,
    config: &BootstrapConfig,
    reference: Reference<'_>,
    seed: u64,
) -> Result<Bootstrap> {
    if n == 0 || n > MAX_BOOTSTRAP_ARITY {
        return Err(BootstrapError::InvalidParameter(format!(
            "arity must be in 1..={MAX_BOOTSTRAP_ARITY}, got {n}"
        )));
    }
    let base = dsr.base_arity().min(n);
    let mut tables: Vec<Arc<TruthTable>> = (1..=base).map(|m| Arc::new(dsr.base_table(m))).collect();
    let mut predictors = Vec::new();
    let mut phases = Vec::new();

    for arity in base + 1..=n {
        let known = Arc::new(tables.clone());
        let calls = Arc::new(AtomicU64::new(0));
        let violation = Arc::new(AtomicBool::new(false));
        let label = {
            let (dsr, known, calls, violation) = (dsr.clone(), known.clone(), calls.clone(), violation.clone());
            move |x: u64| {
                dsr.reduce(arity, x, &mut |m, y| {
                    calls.fetch_add(1, Ordering::Relaxed);
                    if m == 0 || m >= arity {
                        violation.store(true, Ordering::Relaxed);
                        return false;
                    }
                    known[m - 1].get(y)
                })
            }
        };
        let label = Arc::new(label);

        let advice_count = 1u64 << learner.advice_bits(arity);
        let candidates: Vec<(Hypothesis, u64)> = (0..advice_count)
            .into_par_iter()
            .map(|advice| {
                let label = label.clone();
                let mut oracle = MembershipOracle::from_fn(arity, move |x| label(x));
                let mut r = rng::derive(seed, "bootstrap-learn", ((arity as u64) << 32) | advice);
                let h = learner.learn(advice, &mut oracle, &mut r)?;
                Ok((h, oracle.queries()))
            })
            .collect::<Result<_>>()?;

        let samples = config.samples(arity);
        let mut r = rng::derive(seed, "bootstrap-select", arity as u64);
        let points: Vec<(u64, bool)> = (0..samples)
            .map(|_| {
                let y = r.gen::<u64>() & ((1u64 << arity) - 1);
                (y, label(y))
            })
            .collect();
        if violation.load(Ordering::Relaxed) {
            return Err(BootstrapError::Reduction { arity, asked: arity });
        }
        let scores: Vec<CandidateScore> = candidates
            .iter()
            .enumerate()
            .map(|(advice, (h, queries))| CandidateScore {
                advice: advice as u64,
                agreement: points.iter().filter(|&&(y, v)| h.eval(y) == v).count() as f64 / samples as f64,
                learner_queries: *queries,
            })
            .collect();
        let best = scores
            .iter()
            .fold(&scores[0], |b, s| if s.agreement > b.agreement { s } else { b })
            .clone();
        if best.agreement < config.selection_floor {
            return Err(BootstrapError::Failed {
                arity,
                best: best.agreement,
                floor: config.selection_floor,
            });
        }

        let repetitions = config.repetitions(arity);
        let predictor = CorrectedPredictor {
            n: arity,
            hypothesis: candidates[best.advice as usize].0.to_table()?,
            repetitions,
            seed: rng::derive_seed(seed, "bootstrap-correct", arity as u64),
            rsr: rsr.clone(),
        };
        let table = predictor.to_table()?;
        let errors = match reference {
            Some(f) => Some(f(arity)?.xor(&table)?.count_ones()),
            None => None,
        };
        phases.push(PhaseReport {
            arity,
            candidates: scores,
            selected_advice: best.advice,
            selected_agreement: best.agreement,
            samples,
            selection_tail: 2.0 * (-2.0 * samples as f64 / 16.0).exp(),
            repetitions,
            reduction_calls: calls.load(Ordering::Relaxed),
            errors,
        });
        tables.push(Arc::new(table));
        predictors.push(predictor);
    }
    Ok(Bootstrap {
        decider: BootstrapDecider {
            tables: tables.into_iter().map(|t| (*t).clone()).collect(),
            predictors,
        },
        phases,
    })
}

/// Bootstrap on a linear instance, reporting per-phase errors against it.
pub fn bootstrap_linear(
    learner: &dyn AdviceLearner,
    instance: &LinearInstance,
    n: usize,
    config: &BootstrapConfig,
    seed: u64,
) -> Result<Bootstrap> {
    if n > instance.max_arity() {
        return Err(BootstrapError::InvalidParameter(format!(
            "instance defined up to arity {}, asked for {n}",
            instance.max_arity()
        )));
    }
    let inst = Arc::new(instance.clone());
    let reference = |m: usize| instance.reference(m);
    kko_bootstrap(learner, inst.clone(), inst, n, config, Some(&reference), seed)
}
