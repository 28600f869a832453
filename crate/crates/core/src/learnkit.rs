//! Learners over membership oracles and the conversions between learners,
//! distinguishers and compressors.

use std::sync::Arc;

use rand::Rng as _;
use serde::Serialize;
use thiserror::Error;

use crate::boolean::TruthTable;
use crate::circuits::{dnf_circuit, Basis, Circuit, CircuitBuilder, CircuitError, GateKind, Node};
use crate::designs::Design;
use crate::hypothesis::Hypothesis;
use crate::oracle::{MembershipOracle, OracleError};
use crate::reconstruct::{reconstruct, Distinguisher, ReconstructConfig, ReconstructError, ReconstructParams};
use crate::rng::Rng;

#[derive(Debug, Error)]
pub enum LearnError {
    #[error("learner failed: {0}")]
    Failed(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Reconstruct(#[from] ReconstructError),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
}

pub type Result<T> = std::result::Result<T, LearnError>;

/// Declared guarantee: with probability `1 - delta` the output is
/// `epsilon`-close to the target, using at most `query_budget` queries.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct LearnerContract {
    pub epsilon: f64,
    pub delta: f64,
    pub query_budget: Option<u64>,
}

pub trait Learner: Send + Sync {
    fn name(&self) -> String;
    fn contract(&self, n: usize) -> LearnerContract;
    fn learn(&self, oracle: &mut MembershipOracle, rng: &mut Rng) -> Result<Hypothesis>;
}

fn random_input(n: usize, rng: &mut Rng) -> u64 {
    rng.gen::<u64>() & ((1u64 << n) - 1)
}

/// Queries every point; optionally flips a fixed fraction of the answers.
#[derive(Debug, Clone, Default)]
pub struct Memorizer {
    /// Fraction of entries flipped at random positions (rounded down).
    pub corruption: f64,
}

impl Learner for Memorizer {
    fn name(&self) -> String {
        if self.corruption > 0.0 {
            format!("memorizer(corrupt={})", self.corruption)
        } else {
            "memorizer".into()
        }
    }

    fn contract(&self, n: usize) -> LearnerContract {
        LearnerContract {
            epsilon: self.corruption,
            delta: 0.0,
            query_budget: Some(1 << n),
        }
    }

    fn learn(&self, oracle: &mut MembershipOracle, rng: &mut Rng) -> Result<Hypothesis> {
        let n = oracle.n();
        if n > 20 {
            return Err(LearnError::InvalidParameter(format!("memorizer arity {n} > 20")));
        }
        let values = (0..1u64 << n).map(|x| oracle.query(x)).collect::<std::result::Result<Vec<_>, _>>()?;
        let mut table = TruthTable::from_fn(n, |x| values[x as usize]).expect("arity checked");
        let flips = (self.corruption * (1u64 << n) as f64).floor() as u64;
        let mut flipped = std::collections::BTreeSet::new();
        while (flipped.len() as u64) < flips {
            flipped.insert(random_input(n, rng));
        }
        for x in flipped {
            table.set(x, !table.get(x));
        }
        Ok(Hypothesis::Table(table))
    }
}

#[derive(Debug, Clone, Default)]
pub struct AlwaysFail;

impl Learner for AlwaysFail {
    fn name(&self) -> String {
        "always-fail".into()
    }

    fn contract(&self, _n: usize) -> LearnerContract {
        LearnerContract {
            epsilon: 0.5,
            delta: 1.0,
            query_budget: Some(0),
        }
    }

    fn learn(&self, _oracle: &mut MembershipOracle, _rng: &mut Rng) -> Result<Hypothesis> {
        Err(LearnError::Failed("always fails".into()))
    }
}

/// Learns monotone DNFs with few narrow terms. Each round draws random
/// points looking for a positive point the hypothesis misses, shrinks it to
/// a minimal term with membership queries, and adds the term. The result
/// is checked on fresh points; targets outside the class make it fail.
#[derive(Debug, Clone)]
pub struct MonotoneDnfLearner {
    pub max_terms: usize,
    pub max_width: usize,
    /// Random points per simulated equivalence query.
    pub eq_samples: u64,
    pub validation_samples: u64,
    /// Largest validation error accepted.
    pub epsilon: f64,
}

impl Default for MonotoneDnfLearner {
    fn default() -> Self {
        MonotoneDnfLearner {
            max_terms: 8,
            max_width: 5,
            eq_samples: 2000,
            validation_samples: 2000,
            epsilon: 0.05,
        }
    }
}

impl MonotoneDnfLearner {
    fn covers(terms: &[u64], x: u64) -> bool {
        terms.iter().any(|&t| x & t == t)
    }
}

impl Learner for MonotoneDnfLearner {
    fn name(&self) -> String {
        format!("monotone-dnf(terms<={}, width<={})", self.max_terms, self.max_width)
    }

    fn contract(&self, n: usize) -> LearnerContract {
        let rounds = self.max_terms as u64 + 1;
        LearnerContract {
            epsilon: self.epsilon,
            delta: 0.01,
            query_budget: Some(rounds * (self.eq_samples + n as u64) + self.validation_samples),
        }
    }

    fn learn(&self, oracle: &mut MembershipOracle, rng: &mut Rng) -> Result<Hypothesis> {
        let n = oracle.n();
        let mut terms: Vec<u64> = Vec::new();
        loop {
            let mut missed = None;
            for _ in 0..self.eq_samples {
                let x = random_input(n, rng);
                let h = Self::covers(&terms, x);
                let f = oracle.query(x)?;
                if h && !f {
                    return Err(LearnError::Failed("false positive: target is not a monotone DNF".into()));
                }
                if f && !h {
                    missed = Some(x);
                    break;
                }
            }
            let Some(mut x) = missed else { break };
            if terms.len() == self.max_terms {
                return Err(LearnError::Failed(format!("more than {} terms needed", self.max_terms)));
            }
            for i in 0..n {
                let lower = x & !(1u64 << i);
                if lower != x && oracle.query(lower)? {
                    x = lower;
                }
            }
            if x.count_ones() as usize > self.max_width {
                return Err(LearnError::Failed(format!("term of width {} found", x.count_ones())));
            }
            terms.push(x);
        }
        let wrong = (0..self.validation_samples)
            .map(|_| {
                let x = random_input(n, rng);
                Ok(Self::covers(&terms, x) != oracle.query(x)?)
            })
            .collect::<Result<Vec<bool>>>()?
            .into_iter()
            .filter(|&w| w)
            .count();
        let error = wrong as f64 / self.validation_samples.max(1) as f64;
        if error > self.epsilon {
            return Err(LearnError::Failed(format!("validation error {error:.3}")));
        }
        let dnf: Vec<Vec<(usize, bool)>> = terms
            .iter()
            .map(|&t| (0..n).filter(|&i| (t >> i) & 1 == 1).map(|i| (i, true)).collect())
            .collect();
        Ok(Hypothesis::Circuit(dnf_circuit(n, &dnf, Basis::parse("ac0")?)?))
    }
}

/// Random monotone DNF with `terms` terms of width `1..=max_width`.
pub fn random_monotone_dnf(n: usize, terms: usize, max_width: usize, rng: &mut Rng) -> TruthTable {
    let masks: Vec<u64> = (0..terms)
        .map(|_| {
            let width = rng.gen_range(1..=max_width.min(n));
            let mut m = 0u64;
            while (m.count_ones() as usize) < width {
                m |= 1 << rng.gen_range(0..n);
            }
            m
        })
        .collect();
    TruthTable::from_fn(n, |x| masks.iter().any(|&m| x & m == m)).expect("arity in range")
}

/// Outcome of one learner-based distinguisher run.
#[derive(Debug, Clone, Serialize)]
pub struct Verdict {
    /// 0 means "looks learnable", 1 means "looks random".
    pub output: u8,
    pub learner_failed: bool,
    pub estimate: Option<f64>,
    pub threshold: f64,
    pub samples: u64,
    pub capped: bool,
    pub queries: u64,
}

/// Runs the learner, then estimates the hypothesis' agreement on `n^{5k}`
/// random points (capped); answers 0 iff the estimate beats
/// `1/2 + 1/n^{2k}`.
pub struct LearnerDistinguisher {
    learner: Arc<dyn Learner>,
    k: u32,
    sample_cap: u64,
}

pub fn learner_to_distinguisher(learner: Arc<dyn Learner>, k: u32) -> LearnerDistinguisher {
    LearnerDistinguisher {
        learner,
        k,
        sample_cap: 1 << 20,
    }
}

impl LearnerDistinguisher {
    pub fn with_sample_cap(mut self, cap: u64) -> Self {
        self.sample_cap = cap.max(1);
        self
    }

    pub fn decide(&self, oracle: &mut MembershipOracle, rng: &mut Rng) -> Verdict {
        let n = oracle.n();
        let q0 = oracle.queries();
        let wanted = (n as u64).checked_pow(5 * self.k).unwrap_or(u64::MAX);
        let samples = wanted.min(self.sample_cap);
        let threshold = 0.5 + (n as f64).powi(-2 * self.k as i32);
        let mut verdict = Verdict {
            output: 1,
            learner_failed: true,
            estimate: None,
            threshold,
            samples,
            capped: samples < wanted,
            queries: 0,
        };
        if let Ok(h) = self.learner.learn(oracle, rng) {
            verdict.learner_failed = false;
            let mut agree = 0u64;
            let mut exhausted = false;
            for _ in 0..samples {
                let x = random_input(n, rng);
                match oracle.query(x) {
                    Ok(y) => agree += u64::from(h.eval(x) == y),
                    Err(_) => {
                        exhausted = true;
                        break;
                    }
                }
            }
            if !exhausted {
                let est = agree as f64 / samples as f64;
                verdict.estimate = Some(est);
                verdict.output = u8::from(est <= threshold);
            }
        }
        verdict.queries = oracle.queries() - q0;
        verdict
    }
}

/// Seed-indexed family of distinguishers; each repetition draws a fresh one.
#[derive(Clone)]
pub struct RandomizedDistinguisher {
    name: String,
    make: Arc<dyn Fn(u64) -> Distinguisher + Send + Sync>,
}

impl RandomizedDistinguisher {
    pub fn new(name: impl Into<String>, make: impl Fn(u64) -> Distinguisher + Send + Sync + 'static) -> Self {
        RandomizedDistinguisher {
            name: name.into(),
            make: Arc::new(make),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn instantiate(&self, seed: u64) -> Distinguisher {
        (self.make)(seed)
    }
}

impl From<Distinguisher> for RandomizedDistinguisher {
    fn from(d: Distinguisher) -> Self {
        let name = d.name().to_string();
        RandomizedDistinguisher::new(name, move |_| d.clone())
    }
}

/// Learner that reconstructs through a distinguisher, repeating
/// independently and keeping the hypothesis with the best validated error.
pub struct DistinguisherLearner {
    pub distinguisher: RandomizedDistinguisher,
    pub t: usize,
    pub ell: usize,
    pub gamma: f64,
    pub design: Option<Design>,
    pub repetitions: usize,
    pub config: ReconstructConfig,
    pub validation_samples: u64,
}

pub fn distinguisher_to_learner(
    distinguisher: impl Into<RandomizedDistinguisher>,
    t: usize,
    ell: usize,
    gamma: f64,
    repetitions: usize,
) -> DistinguisherLearner {
    DistinguisherLearner {
        distinguisher: distinguisher.into(),
        t,
        ell,
        gamma,
        design: None,
        repetitions: repetitions.max(1),
        config: ReconstructConfig::default(),
        validation_samples: 4000,
    }
}

impl DistinguisherLearner {
    fn params(&self, n: usize) -> Result<ReconstructParams> {
        Ok(match &self.design {
            Some(d) => ReconstructParams::with_design(n, self.t, self.ell, self.gamma, d.clone())?,
            None => ReconstructParams::new(n, self.t, self.ell, self.gamma)?,
        })
    }
}

impl Learner for DistinguisherLearner {
    fn name(&self) -> String {
        format!("from-distinguisher({}, r={})", self.distinguisher.name(), self.repetitions)
    }

    fn contract(&self, _n: usize) -> LearnerContract {
        LearnerContract {
            epsilon: self.gamma,
            delta: 0.01,
            query_budget: None,
        }
    }

    fn learn(&self, oracle: &mut MembershipOracle, rng: &mut Rng) -> Result<Hypothesis> {
        let params = self.params(oracle.n())?;
        let n = oracle.n();
        let mut best: Option<(f64, Hypothesis)> = None;
        let mut last_failure = None;
        for _ in 0..self.repetitions {
            let d = self.distinguisher.instantiate(rng.gen());
            match reconstruct(&d, &params, oracle, &self.config, rng) {
                Ok(rec) => {
                    let mut wrong = 0u64;
                    for _ in 0..self.validation_samples.max(1) {
                        let x = random_input(n, rng);
                        wrong += u64::from(rec.hypothesis.eval(x) != oracle.query(x)?);
                    }
                    let err = wrong as f64 / self.validation_samples.max(1) as f64;
                    if best.as_ref().map_or(true, |(e, _)| err < *e) {
                        best = Some((err, rec.hypothesis));
                    }
                }
                Err(e) if e.is_contract_failure() => last_failure = Some(e.to_string()),
                Err(e) => return Err(e.into()),
            }
        }
        match best {
            Some((err, h)) if err <= self.gamma => Ok(h),
            Some((err, _)) => Err(LearnError::Failed(format!("best validated error {err:.3}"))),
            None => Err(LearnError::Failed(
                last_failure.unwrap_or_else(|| "no repetition succeeded".into()),
            )),
        }
    }
}

/// Learner for `n`-bit functions built from one for `n + p` bits: the
/// inner learner sees `f(x, y) = f(x)`, and the returned hypothesis fixes
/// the high `p` inputs to a random suffix, retrying suffixes and keeping
/// the one with the best validated error.
pub struct PaddedLearner {
    pub inner: Arc<dyn Learner>,
    pub p: usize,
    pub tries: usize,
    pub validation_samples: u64,
    pub target_error: f64,
}

pub fn pad_learner(inner: Arc<dyn Learner>, p: usize) -> PaddedLearner {
    PaddedLearner {
        inner,
        p,
        tries: 16,
        validation_samples: 2000,
        target_error: 0.05,
    }
}

impl Learner for PaddedLearner {
    fn name(&self) -> String {
        format!("padded({}, p={})", self.inner.name(), self.p)
    }

    fn contract(&self, n: usize) -> LearnerContract {
        let inner = self.inner.contract(n + self.p);
        LearnerContract {
            epsilon: self.target_error.max(inner.epsilon),
            delta: inner.delta,
            query_budget: inner
                .query_budget
                .map(|b| b + self.tries as u64 * self.validation_samples),
        }
    }

    fn learn(&self, oracle: &mut MembershipOracle, rng: &mut Rng) -> Result<Hypothesis> {
        if self.p == 0 {
            return self.inner.learn(oracle, rng);
        }
        let n = oracle.n();
        if n + self.p > crate::boolean::MAX_ARITY {
            return Err(LearnError::InvalidParameter(format!("n + p = {} too large", n + self.p)));
        }
        let mask = (1u64 << n) - 1;
        let mut padded = oracle.reindexed(n + self.p, move |x| x & mask);
        let inner = self.inner.learn(&mut padded, rng);
        oracle.charge(padded.queries())?;
        let wide = inner?;
        let mut best: Option<(f64, Hypothesis)> = None;
        for _ in 0..self.tries.max(1) {
            let suffix = random_input(self.p, rng);
            let h = Hypothesis::Restricted {
                n,
                suffix,
                inner: Box::new(wide.clone()),
            };
            let mut wrong = 0u64;
            for _ in 0..self.validation_samples.max(1) {
                let x = random_input(n, rng);
                wrong += u64::from(h.eval(x) != oracle.query(x)?);
            }
            let err = wrong as f64 / self.validation_samples.max(1) as f64;
            if best.as_ref().map_or(true, |(e, _)| err < *e) {
                best = Some((err, h));
            }
            if err <= self.target_error {
                break;
            }
        }
        match best {
            Some((err, h)) if err <= self.target_error => Ok(h),
            Some((err, _)) => Err(LearnError::Failed(format!("best suffix error {err:.3}"))),
            None => Err(LearnError::Failed("no suffix tried".into())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Exactness {
    Exact,
    Average { error: f64 },
}

#[derive(Debug, Clone)]
pub struct CompressionOutput {
    pub circuit: Circuit,
    pub exactness: Exactness,
    pub size: usize,
    pub hypothesis_size: usize,
    pub disagreements: u64,
}

#[derive(Debug, Error)]
pub enum CompressError {
    /// Probabilistic: another run may succeed.
    #[error("rejected: {0}")]
    Reject(String),
    #[error("structural error: {0}")]
    Structural(String),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
}

impl CompressError {
    pub fn is_reject(&self) -> bool {
        matches!(self, CompressError::Reject(_))
    }
}

fn learn_circuit(table: &TruthTable, learner: &dyn Learner, rng: &mut Rng) -> std::result::Result<Circuit, CompressError> {
    let mut oracle = MembershipOracle::from_table(table.clone());
    match learner.learn(&mut oracle, rng) {
        Ok(Hypothesis::Circuit(c)) => Ok(c),
        Ok(other) => Err(CompressError::Structural(format!(
            "learner returned a {} hypothesis, not a circuit",
            other.kind()
        ))),
        Err(LearnError::Failed(why)) => Err(CompressError::Reject(format!("learner failed: {why}"))),
        Err(e) => Err(CompressError::Structural(e.to_string())),
    }
}

/// Basis of corrected circuits: the learner's gates plus unbounded parity.
pub const CORRECTION_BASIS: &str = "NOT+AND+OR+MOD2:unbounded";

/// Exact circuit for `table`: the learned circuit XOR an OR of minterms
/// over the points where it is wrong. Rejects when more than a `1/n^3`
/// fraction of points is wrong.
pub fn compress_exact(
    table: &TruthTable,
    learner: &dyn Learner,
    rng: &mut Rng,
) -> std::result::Result<CompressionOutput, CompressError> {
    let n = table.n();
    let h = learn_circuit(table, learner, rng)?;
    let diff = h.evaluate_all()?.xor(table).map_err(|e| CompressError::Structural(e.to_string()))?;
    let disagreements = diff.count_ones();
    if disagreements as f64 * (n as f64).powi(3) > (1u64 << n) as f64 {
        return Err(CompressError::Reject(format!(
            "{disagreements} disagreements exceed 2^n/n^3"
        )));
    }
    let circuit = if disagreements == 0 {
        h.clone()
    } else {
        let mut b = CircuitBuilder::new(n, Basis::parse(CORRECTION_BASIS)?);
        let out = b.embed(&h);
        let mut negated: Vec<Option<Node>> = vec![None; n];
        let mut minterms = Vec::new();
        for x in diff.ones() {
            let lits: Vec<Node> = (0..n)
                .map(|i| {
                    if (x >> i) & 1 == 1 {
                        Node::Input(i)
                    } else {
                        *negated[i].get_or_insert_with(|| b.gate(GateKind::Not, vec![Node::Input(i)]))
                    }
                })
                .collect();
            minterms.push(b.reduce(GateKind::And, lits)?);
        }
        let correction = b.reduce(GateKind::Or, minterms)?;
        let fixed = b.gate(GateKind::Mod(2), vec![out, correction]);
        b.finish(fixed)?
    };
    if circuit.evaluate_all()? != *table {
        return Err(CompressError::Structural("corrected circuit differs from input".into()));
    }
    let size = circuit.size();
    Ok(CompressionOutput {
        size,
        hypothesis_size: h.size(),
        circuit,
        exactness: Exactness::Exact,
        disagreements,
    })
}

/// The learned circuit itself, with its exact error.
pub fn compress_average(
    table: &TruthTable,
    learner: &dyn Learner,
    rng: &mut Rng,
) -> std::result::Result<CompressionOutput, CompressError> {
    let h = learn_circuit(table, learner, rng)?;
    let diff = h.evaluate_all()?.xor(table).map_err(|e| CompressError::Structural(e.to_string()))?;
    let disagreements = diff.count_ones();
    Ok(CompressionOutput {
        size: h.size(),
        hypothesis_size: h.size(),
        exactness: Exactness::Average {
            error: disagreements as f64 / table.len() as f64,
        },
        circuit: h,
        disagreements,
    })
}

/// A learner (oracle access) or a compressor (full table).
pub enum Algorithm<'a> {
    Learner(&'a dyn Learner),
    Compressor(&'a (dyn Fn(&TruthTable, &mut Rng) -> Option<Hypothesis> + Sync)),
}

#[derive(Debug, Clone, Serialize)]
pub struct ExhaustiveVerdict {
    pub output: u8,
    pub agreement: Option<f64>,
    pub hypothesis_size: Option<usize>,
    pub queries: u64,
}

/// Runs the algorithm and compares its output with the oracle on all
/// `2^n` points; 0 iff agreement is at least 2/3. Outputs larger than
/// `size_bound` count as no output.
pub fn algorithm_to_distinguisher(
    alg: &Algorithm<'_>,
    oracle: &mut MembershipOracle,
    size_bound: Option<usize>,
    rng: &mut Rng,
) -> Result<ExhaustiveVerdict> {
    let n = oracle.n();
    let q0 = oracle.queries();
    let hypothesis = match alg {
        Algorithm::Learner(l) => l.learn(oracle, rng).ok(),
        Algorithm::Compressor(c) => {
            let values = (0..1u64 << n).map(|x| oracle.query(x)).collect::<std::result::Result<Vec<_>, _>>()?;
            let table = TruthTable::from_fn(n, |x| values[x as usize]).expect("oracle arity");
            c(&table, rng)
        }
    };
    let hypothesis = hypothesis.filter(|h| size_bound.map_or(true, |b| h.size() <= b));
    let Some(h) = hypothesis else {
        return Ok(ExhaustiveVerdict {
            output: 1,
            agreement: None,
            hypothesis_size: None,
            queries: oracle.queries() - q0,
        });
    };
    let mut agree = 0u64;
    for x in 0..1u64 << n {
        agree += u64::from(h.eval(x) == oracle.query(x)?);
    }
    let agreement = agree as f64 / (1u64 << n) as f64;
    Ok(ExhaustiveVerdict {
        output: u8::from(3 * agree < 2 << n),
        agreement: Some(agreement),
        hypothesis_size: Some(h.size()),
        queries: oracle.queries() - q0,
    })
}

/// Membership and equivalence queries against a full table. Equivalence
/// answers are the least differing input.
pub trait Teacher {
    fn membership(&mut self, x: u64) -> bool;
    fn equivalence(&mut self, h: &Circuit) -> Result<Option<u64>>;
}

pub trait ExactLearner {
    fn name(&self) -> String;
    fn learn_exact(&self, n: usize, teacher: &mut dyn Teacher, rng: &mut Rng) -> Result<Circuit>;
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum TranscriptEvent {
    Membership { x: u64, answer: bool },
    Equivalence { hypothesis_size: usize, counterexample: Option<u64> },
}

struct TableTeacher<'a> {
    table: &'a TruthTable,
    events: Vec<TranscriptEvent>,
}

impl Teacher for TableTeacher<'_> {
    fn membership(&mut self, x: u64) -> bool {
        let answer = self.table.get(x);
        self.events.push(TranscriptEvent::Membership { x, answer });
        answer
    }

    fn equivalence(&mut self, h: &Circuit) -> Result<Option<u64>> {
        let diff = h
            .evaluate_all()?
            .xor(self.table)
            .map_err(|e| LearnError::InvalidParameter(e.to_string()))?;
        let counterexample = diff.ones().next();
        self.events.push(TranscriptEvent::Equivalence {
            hypothesis_size: h.size(),
            counterexample,
        });
        Ok(counterexample)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct MqEqTranscript {
    pub learner: String,
    pub events: Vec<TranscriptEvent>,
    pub membership_queries: usize,
    pub equivalence_queries: usize,
    pub hypothesis: Option<Circuit>,
    pub exact: bool,
    pub agreement: Option<f64>,
    pub verdict: u8,
    pub error: Option<String>,
}

pub fn mq_eq_simulator(learner: &dyn ExactLearner, table: &TruthTable, rng: &mut Rng) -> MqEqTranscript {
    let mut teacher = TableTeacher {
        table,
        events: Vec::new(),
    };
    let result = learner.learn_exact(table.n(), &mut teacher, rng);
    let events = teacher.events;
    let membership_queries = events
        .iter()
        .filter(|e| matches!(e, TranscriptEvent::Membership { .. }))
        .count();
    let equivalence_queries = events.len() - membership_queries;
    let (hypothesis, error) = match result {
        Ok(c) => (Some(c), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let agreement = hypothesis
        .as_ref()
        .and_then(|c| c.evaluate_all().ok())
        .and_then(|t| t.agreement(table).ok())
        .map(|a| a.to_f64());
    let exact = agreement == Some(1.0);
    let verdict = match agreement {
        Some(a) if a >= 2.0 / 3.0 => 0,
        _ => 1,
    };
    MqEqTranscript {
        learner: learner.name(),
        events,
        membership_queries,
        equivalence_queries,
        hypothesis,
        exact,
        agreement,
        verdict,
        error,
    }
}

/// Learns affine functions `a.x + b` over GF(2) from equivalence queries
/// alone: every counterexample is a new linear constraint.
#[derive(Debug, Clone, Default)]
pub struct ParityEqLearner;

impl ParityEqLearner {
    /// Least solution (free variables zero) of the constraints, or `None`
    /// when inconsistent. Variable `n` is the constant term.
    fn solve(n: usize, rows: &[(u64, bool)]) -> Option<u64> {
        let mut pivots: Vec<(usize, u64, bool)> = Vec::new();
        for &(x, y) in rows {
            let (mut v, mut b) = (x | (1u64 << n), y);
            for &(p, pv, pb) in &pivots {
                if (v >> p) & 1 == 1 {
                    v ^= pv;
                    b ^= pb;
                }
            }
            if v == 0 {
                if b {
                    return None;
                }
                continue;
            }
            let p = 63 - v.leading_zeros() as usize;
            for row in pivots.iter_mut() {
                if (row.1 >> p) & 1 == 1 {
                    row.1 ^= v;
                    row.2 ^= b;
                }
            }
            pivots.push((p, v, b));
        }
        Some(
            pivots
                .iter()
                .filter(|&&(_, _, b)| b)
                .fold(0u64, |acc, &(p, _, _)| acc | (1 << p)),
        )
    }

    fn circuit(n: usize, coeffs: u64) -> Result<Circuit> {
        let mut b = CircuitBuilder::new(n, Basis::parse("xaon")?);
        let vars: Vec<Node> = (0..n).filter(|&i| (coeffs >> i) & 1 == 1).map(Node::Input).collect();
        let constant = (coeffs >> n) & 1 == 1;
        let out = if vars.is_empty() {
            Node::Const(constant)
        } else {
            let sum = b.reduce(GateKind::Mod(2), vars)?;
            if constant {
                b.gate(GateKind::Not, vec![sum])
            } else {
                sum
            }
        };
        Ok(b.finish(out)?)
    }
}

impl ExactLearner for ParityEqLearner {
    fn name(&self) -> String {
        "parity-eq".into()
    }

    fn learn_exact(&self, n: usize, teacher: &mut dyn Teacher, _rng: &mut Rng) -> Result<Circuit> {
        let mut rows: Vec<(u64, bool)> = Vec::new();
        let mut coeffs = 0u64;
        for _ in 0..=n + 1 {
            let h = Self::circuit(n, coeffs)?;
            let Some(x) = teacher.equivalence(&h)? else {
                return Ok(h);
            };
            rows.push((x, !h.eval_point(x)));
            coeffs = Self::solve(n, &rows)
                .ok_or_else(|| LearnError::Failed("target is not affine".into()))?;
        }
        Err(LearnError::Failed("too many counterexamples".into()))
    }
}
