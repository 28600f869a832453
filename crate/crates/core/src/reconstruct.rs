//! From a distinguisher for generator outputs back to an approximation of
//! the base function: hybrid search, next-bit prediction with hardwired
//! overlap tables, then XOR decoding with oracle-assisted voting.
//!
//! The reconstruction only sees `f` through a [`MembershipOracle`]; the
//! design, output arity and XOR width travel in [`ReconstructParams`].

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::boolean::{BooleanError, TruthTable};
use crate::circuits::{Basis, Circuit, CircuitError, SearchLimits, SizeTable};
use crate::designs::{design_for, Design, DesignError};
use crate::generator::{BlackBoxGenerator, GeneratorError, NwFamily, Seed};
use crate::hypothesis::{Hypothesis, Predict};
use crate::oracle::{MembershipOracle, OracleError};
use crate::rng::Rng;
use crate::stats;

/// Largest output arity the predictor handles (tables fit one word).
pub const MAX_RECONSTRUCT_ELL: usize = 6;

#[derive(Debug, Error)]
pub enum ReconstructError {
    #[error("no position reached advantage {floor:.4} in {attempts} attempts (best {best:.4})")]
    NoPredictor { floor: f64, attempts: usize, best: f64 },
    #[error("measured advantage {advantage:.4} over {samples} samples is too small to decode")]
    Decoding { advantage: f64, samples: u64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Generator(#[from] GeneratorError),
    #[error(transparent)]
    Design(#[from] DesignError),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error(transparent)]
    Boolean(#[from] BooleanError),
}

impl ReconstructError {
    /// Failures of the procedure itself, as opposed to bad inputs.
    pub fn is_contract_failure(&self) -> bool {
        matches!(
            self,
            ReconstructError::NoPredictor { .. }
                | ReconstructError::Decoding { .. }
                | ReconstructError::Oracle(OracleError::BudgetExhausted { .. })
        )
    }
}

pub type Result<T> = std::result::Result<T, ReconstructError>;

type TableTest = dyn Fn(&TruthTable) -> bool + Send + Sync;

/// Total test on arity-`ell` truth tables. Calls are counted across clones.
#[derive(Clone)]
pub struct Distinguisher {
    name: String,
    ell: usize,
    size: Option<usize>,
    eval: Arc<TableTest>,
    calls: Arc<AtomicU64>,
}

impl Distinguisher {
    pub fn new(
        name: impl Into<String>,
        ell: usize,
        size: Option<usize>,
        eval: impl Fn(&TruthTable) -> bool + Send + Sync + 'static,
    ) -> Self {
        Distinguisher {
            name: name.into(),
            ell,
            size,
            eval: Arc::new(eval),
            calls: Arc::new(AtomicU64::new(0)),
        }
    }

    pub fn constant(ell: usize, value: bool) -> Self {
        Distinguisher::new(format!("const{}", u8::from(value)), ell, Some(0), move |_| value)
    }

    /// Accepts tables with at most `max_ones` ones.
    pub fn ones_at_most(ell: usize, max_ones: u64) -> Self {
        Distinguisher::new(format!("ones<={max_ones}"), ell, None, move |y| {
            y.count_ones() <= max_ones
        })
    }

    /// Accepts tables whose minimum circuit size over `basis` is at most `s0`.
    pub fn mcsp_threshold(ell: usize, basis: &Basis, s0: usize) -> std::result::Result<Self, CircuitError> {
        let sizes = SizeTable::compute(ell, basis, s0, SearchLimits::default())?;
        let name = format!("mcsp[{}]<={s0}", basis.name());
        Ok(Distinguisher::new(name, ell, None, move |y| sizes.min_size(y).is_some()))
    }

    /// Reads table bit `w` as circuit input `w`; needs `2^ell` inputs.
    pub fn from_circuit(circuit: Circuit) -> Result<Self> {
        let inputs = circuit.n();
        if !inputs.is_power_of_two() || inputs > 64 {
            return Err(ReconstructError::InvalidParameter(format!(
                "distinguisher circuit needs 2^ell inputs, has {inputs}"
            )));
        }
        let ell = inputs.trailing_zeros() as usize;
        let size = circuit.size();
        Ok(Distinguisher::new("circuit", ell, Some(size), move |y| {
            circuit.eval_point(y.words()[0])
        }))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn ell(&self) -> usize {
        self.ell
    }

    pub fn size(&self) -> Option<usize> {
        self.size
    }

    pub fn calls(&self) -> u64 {
        self.calls.load(Ordering::Relaxed)
    }

    pub fn eval(&self, y: &TruthTable) -> bool {
        assert_eq!(y.n(), self.ell, "distinguisher arity");
        self.calls.fetch_add(1, Ordering::Relaxed);
        (self.eval)(y)
    }

    fn eval_word(&self, word: u64) -> bool {
        self.eval(&TruthTable::from_u64(self.ell, word).expect("ell checked"))
    }
}

impl std::fmt::Debug for Distinguisher {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Distinguisher")
            .field("name", &self.name)
            .field("ell", &self.ell)
            .field("size", &self.size)
            .finish()
    }
}

/// Acceptance probabilities on generator outputs and on uniform tables.
#[derive(Debug, Clone, Serialize)]
pub struct GapReport {
    pub p_generator: f64,
    pub se_generator: f64,
    pub p_random: f64,
    pub se_random: f64,
    /// `p_generator - p_random`.
    pub gap: f64,
    pub exact: bool,
    pub trials: u64,
}

impl GapReport {
    pub fn abs_gap(&self) -> f64 {
        self.gap.abs()
    }
}

/// Exact when `ell <= 2` and the seed has at most 20 bits, sampled with
/// `trials` draws per side otherwise.
pub fn distinguishing_gap(d: &Distinguisher, fam: &NwFamily, trials: u64, rng: &mut Rng) -> Result<GapReport> {
    if d.ell() != fam.ell() {
        return Err(ReconstructError::InvalidParameter(format!(
            "distinguisher arity {} vs generator arity {}",
            d.ell(),
            fam.ell()
        )));
    }
    if fam.ell() <= 2 && fam.seed_len() <= 20 {
        return Ok(exact_gap(d, fam));
    }
    distinguishing_gap_sampled(d, fam, trials, rng)
}

pub fn distinguishing_gap_sampled(d: &Distinguisher, fam: &NwFamily, trials: u64, rng: &mut Rng) -> Result<GapReport> {
    if trials == 0 {
        return Err(ReconstructError::InvalidParameter("trials must be >= 1".into()));
    }
    let ell = fam.ell();
    let gen_hits = (0..trials).filter(|_| d.eval(&fam.sample(rng))).count() as u64;
    let rand_hits = (0..trials)
        .filter(|_| d.eval(&TruthTable::sample(ell, rng).expect("ell checked")))
        .count() as u64;
    let (pg, sg) = stats::mean_se(gen_hits, trials);
    let (pr, sr) = stats::mean_se(rand_hits, trials);
    Ok(GapReport {
        p_generator: pg,
        se_generator: sg,
        p_random: pr,
        se_random: sr,
        gap: pg - pr,
        exact: false,
        trials,
    })
}

fn exact_gap(d: &Distinguisher, fam: &NwFamily) -> GapReport {
    let seeds = 1u64 << fam.seed_len();
    let gen_hits = (0..seeds)
        .filter(|&s| {
            let bits: Vec<bool> = (0..fam.seed_len()).map(|i| (s >> i) & 1 == 1).collect();
            d.eval(&fam.nw_truthtable(&Seed::from_bits(&bits)).expect("seed length"))
        })
        .count() as u64;
    let tables = 1u64 << fam.output_len();
    let rand_hits = (0..tables)
        .filter(|&w| d.eval(&TruthTable::from_u64(fam.ell(), w).expect("small arity")))
        .count() as u64;
    let pg = gen_hits as f64 / seeds as f64;
    let pr = rand_hits as f64 / tables as f64;
    GapReport {
        p_generator: pg,
        se_generator: 0.0,
        p_random: pr,
        se_random: 0.0,
        gap: pg - pr,
        exact: true,
        trials: seeds,
    }
}

/// Tunable sample sizes and budgets.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default)]
pub struct ReconstructConfig {
    /// Draws used to estimate every hybrid's acceptance probability.
    pub hybrid_samples: u64,
    /// Random completions of the seed outside the predicted set.
    pub completions: usize,
    /// Labelled points used to rank completions.
    pub score_samples: u64,
    /// Fresh labelled points used to measure the chosen predictor.
    pub validation_samples: u64,
    /// Predictor attempts before giving up.
    pub retry_budget: usize,
    /// Minimum accepted advantage; `None` means `1/(8L)`.
    pub advantage_floor: Option<f64>,
    /// Upper limit on votes in XOR decoding.
    pub max_votes: usize,
}

impl Default for ReconstructConfig {
    fn default() -> Self {
        ReconstructConfig {
            hybrid_samples: 2000,
            completions: 64,
            score_samples: 512,
            validation_samples: 10_000,
            retry_budget: 32,
            advantage_floor: None,
            max_votes: 2001,
        }
    }
}

/// What the reconstruction knows about the generator: everything but `f`.
#[derive(Debug, Clone, Serialize)]
pub struct ReconstructParams {
    pub n: usize,
    pub t: usize,
    pub ell: usize,
    pub gamma: f64,
    pub design: Design,
}

impl ReconstructParams {
    /// Uses the default polynomial design for sets of size `t*n`.
    pub fn new(n: usize, t: usize, ell: usize, gamma: f64) -> Result<Self> {
        if !(1..=MAX_RECONSTRUCT_ELL).contains(&ell) {
            return Err(ReconstructError::InvalidParameter(format!(
                "ell must be in 1..={MAX_RECONSTRUCT_ELL}"
            )));
        }
        let k = n * t;
        if t == 0 || n == 0 || k > crate::boolean::MAX_ARITY {
            return Err(ReconstructError::InvalidParameter(format!("t*n={k} out of range")));
        }
        let design = design_for(k, 1 << ell)?;
        Self::with_design(n, t, ell, gamma, design)
    }

    pub fn with_design(n: usize, t: usize, ell: usize, gamma: f64, design: Design) -> Result<Self> {
        if !(gamma > 0.0 && gamma < 0.5) {
            return Err(ReconstructError::InvalidParameter(format!("gamma={gamma} not in (0, 1/2)")));
        }
        if !(1..=MAX_RECONSTRUCT_ELL).contains(&ell) {
            return Err(ReconstructError::InvalidParameter(format!(
                "ell must be in 1..={MAX_RECONSTRUCT_ELL}"
            )));
        }
        if design.k != n * t || design.m() < 1 << ell {
            return Err(ReconstructError::InvalidParameter(format!(
                "design has {} sets of size {}, need {} of size {}",
                design.m(),
                design.k,
                1 << ell,
                n * t
            )));
        }
        let design = design.truncate_sets(1 << ell)?;
        Ok(ReconstructParams { n, t, ell, gamma, design })
    }

    pub fn for_generator(gen: &BlackBoxGenerator) -> Self {
        ReconstructParams {
            n: gen.f().n(),
            t: gen.t(),
            ell: gen.family().ell(),
            gamma: gen.gamma(),
            design: gen.family().design().clone(),
        }
    }

    pub fn k(&self) -> usize {
        self.n * self.t
    }

    pub fn output_len(&self) -> usize {
        1 << self.ell
    }

    fn floor(&self, config: &ReconstructConfig) -> f64 {
        config
            .advantage_floor
            .unwrap_or(1.0 / (8.0 * self.output_len() as f64))
    }
}

/// Answers queries to the XOR of `t` copies of the oracle's function.
struct Amplified<'a> {
    f: &'a mut MembershipOracle,
    n: usize,
    t: usize,
}

impl Amplified<'_> {
    fn query(&mut self, x: u64) -> Result<bool> {
        let mask = (1u64 << self.n) - 1;
        let mut acc = false;
        for j in 0..self.t {
            acc ^= self.f.query((x >> (j * self.n)) & mask)?;
        }
        Ok(acc)
    }

    fn labelled(&mut self, count: u64, k: usize, rng: &mut Rng) -> Result<Vec<(u64, bool)>> {
        (0..count)
            .map(|_| {
                let x = random_bits(k, rng);
                Ok((x, self.query(x)?))
            })
            .collect()
    }
}

fn random_bits(k: usize, rng: &mut Rng) -> u64 {
    if k == 64 {
        rng.gen()
    } else {
        rng.gen::<u64>() & ((1u64 << k) - 1)
    }
}

#[derive(Debug, Clone)]
struct Lookup {
    /// Positions within the predicted input that this set also reads.
    coords: Vec<usize>,
    values: Vec<bool>,
}

/// Predicts bit `position` of the generator output from the earlier bits,
/// viewed as a function of the base-function input at that position.
#[derive(Debug, Clone)]
pub struct NextBitPredictor {
    k: usize,
    ell: usize,
    position: usize,
    sign: bool,
    coin: bool,
    lookups: Vec<Lookup>,
    suffix: Vec<bool>,
    distinguisher: Distinguisher,
}

impl NextBitPredictor {
    pub fn position(&self) -> usize {
        self.position
    }

    fn table_word(&self, x: u64) -> u64 {
        let mut word = 0u64;
        for (w, l) in self.lookups.iter().enumerate() {
            let idx = l
                .coords
                .iter()
                .enumerate()
                .fold(0usize, |acc, (j, &m)| acc | ((((x >> m) & 1) as usize) << j));
            word |= u64::from(l.values[idx]) << w;
        }
        for (j, &b) in self.suffix.iter().enumerate() {
            word |= u64::from(b) << (self.position + 1 + j);
        }
        word
    }
}

impl Predict for NextBitPredictor {
    fn predict(&self, x: u64) -> bool {
        let word = self.table_word(x);
        let d0 = self.distinguisher.eval_word(word);
        let d1 = self.distinguisher.eval_word(word | (1 << self.position));
        if d0 == d1 {
            self.coin
        } else {
            d1 == self.sign
        }
    }

    fn size(&self) -> usize {
        let tables: usize = self.lookups.iter().map(|l| l.values.len()).sum();
        tables + self.suffix.len() + 1 + self.distinguisher.size().unwrap_or(0)
    }

    fn describe(&self) -> Value {
        json!({
            "type": "next-bit",
            "k": self.k,
            "ell": self.ell,
            "position": self.position,
            "sign": self.sign,
            "coin": self.coin,
            "lookup_entries": self.lookups.iter().map(|l| l.values.len()).collect::<Vec<_>>(),
            "suffix": self.suffix.iter().map(|&b| if b { '1' } else { '0' }).collect::<String>(),
            "distinguisher": self.distinguisher.name(),
        })
    }
}

#[derive(Debug, Clone)]
pub struct NextBitOutcome {
    pub predictor: NextBitPredictor,
    pub position: usize,
    /// Estimated acceptance probability of each hybrid `0..=L`; hybrid `i`
    /// takes its first `i` bits from the generator.
    pub hybrids: Vec<f64>,
    /// Advantage over 1/2 measured on fresh validation points.
    pub advantage: f64,
    pub attempts: usize,
}

fn estimate_hybrids(
    d: &Distinguisher,
    params: &ReconstructParams,
    amp: &mut Amplified<'_>,
    samples: u64,
    rng: &mut Rng,
) -> Result<Vec<f64>> {
    let len = params.output_len();
    let mut hits = vec![0u64; len + 1];
    for _ in 0..samples {
        let z = Seed::random(params.design.d, rng);
        let mut generated = 0u64;
        for (w, set) in params.design.sets.iter().enumerate() {
            generated |= u64::from(amp.query(z.gather(set))?) << w;
        }
        let noise = random_bits(len, rng);
        for (i, h) in hits.iter_mut().enumerate() {
            let low = if i == 64 { u64::MAX } else { (1u64 << i) - 1 };
            if d.eval_word((generated & low) | (noise & !low)) {
                *h += 1;
            }
        }
    }
    Ok(hits.iter().map(|&h| h as f64 / samples as f64).collect())
}

fn build_candidate(
    d: &Distinguisher,
    params: &ReconstructParams,
    position: usize,
    sign: bool,
    amp: &mut Amplified<'_>,
    rng: &mut Rng,
) -> Result<NextBitPredictor> {
    let design = &params.design;
    let target = &design.sets[position];
    let z = Seed::random(design.d, rng);
    let mut lookups = Vec::with_capacity(position);
    for set in &design.sets[..position] {
        let coords: Vec<usize> = target
            .iter()
            .enumerate()
            .filter(|(_, c)| set.binary_search(c).is_ok())
            .map(|(m, _)| m)
            .collect();
        let mut values = Vec::with_capacity(1 << coords.len());
        for a in 0..1u64 << coords.len() {
            let mut z2 = z.clone();
            for (j, &m) in coords.iter().enumerate() {
                z2.set(target[m], (a >> j) & 1 == 1);
            }
            values.push(amp.query(z2.gather(set))?);
        }
        lookups.push(Lookup { coords, values });
    }
    let suffix = (position + 1..params.output_len()).map(|_| rng.gen()).collect();
    Ok(NextBitPredictor {
        k: params.k(),
        ell: params.ell,
        position,
        sign,
        coin: rng.gen(),
        lookups,
        suffix,
        distinguisher: d.clone(),
    })
}

fn agreement_count(p: &NextBitPredictor, points: &[(u64, bool)]) -> u64 {
    points.iter().filter(|&&(x, y)| p.predict(x) == y).count() as u64
}

/// Predictor for `xor_amplify(f, t)` at a hybrid position with a large
/// estimated gap. Positions are tried in decreasing order of estimated gap.
pub fn next_bit_predictor(
    d: &Distinguisher,
    params: &ReconstructParams,
    f_oracle: &mut MembershipOracle,
    config: &ReconstructConfig,
    rng: &mut Rng,
) -> Result<NextBitOutcome> {
    if d.ell() != params.ell {
        return Err(ReconstructError::InvalidParameter(format!(
            "distinguisher arity {} vs output arity {}",
            d.ell(),
            params.ell
        )));
    }
    if f_oracle.n() != params.n {
        return Err(ReconstructError::InvalidParameter(format!(
            "oracle arity {} vs n={}",
            f_oracle.n(),
            params.n
        )));
    }
    let mut amp = Amplified {
        f: f_oracle,
        n: params.n,
        t: params.t,
    };
    let floor = params.floor(config);
    let hybrids = estimate_hybrids(d, params, &mut amp, config.hybrid_samples.max(1), rng)?;
    if hybrids.windows(2).all(|w| w[0] == w[1]) {
        return Err(ReconstructError::NoPredictor {
            floor,
            attempts: 0,
            best: 0.0,
        });
    }
    let mut order: Vec<usize> = (0..params.output_len()).collect();
    order.sort_by(|&a, &b| {
        let ga = (hybrids[a + 1] - hybrids[a]).abs();
        let gb = (hybrids[b + 1] - hybrids[b]).abs();
        gb.total_cmp(&ga).then(a.cmp(&b))
    });
    let mut best_seen = f64::NEG_INFINITY;
    for attempt in 0..config.retry_budget {
        let position = order[attempt % order.len()];
        let sign = hybrids[position + 1] >= hybrids[position];
        let score_points = amp.labelled(config.score_samples.max(1), params.k(), rng)?;
        let candidates: Vec<NextBitPredictor> = (0..config.completions.max(1))
            .map(|_| build_candidate(d, params, position, sign, &mut amp, rng))
            .collect::<Result<_>>()?;
        let scores: Vec<u64> = candidates
            .par_iter()
            .map(|c| agreement_count(c, &score_points))
            .collect();
        let best = (0..candidates.len())
            .max_by(|&a, &b| scores[a].cmp(&scores[b]).then(b.cmp(&a)))
            .expect("at least one completion");
        let predictor = candidates.into_iter().nth(best).expect("index in range");
        let validation = amp.labelled(config.validation_samples.max(1), params.k(), rng)?;
        let agree = agreement_count(&predictor, &validation);
        let advantage = agree as f64 / validation.len() as f64 - 0.5;
        best_seen = best_seen.max(advantage);
        if advantage >= floor {
            return Ok(NextBitOutcome {
                predictor,
                position,
                hybrids,
                advantage,
                attempts: attempt + 1,
            });
        }
    }
    Err(ReconstructError::NoPredictor {
        floor,
        attempts: config.retry_budget,
        best: best_seen.max(0.0),
    })
}

/// The next-bit predictor as a hypothesis for the amplified function, with
/// its measured advantage.
#[derive(Debug, Clone)]
pub struct WeakApproximation {
    pub hypothesis: Hypothesis,
    pub delta0: f64,
    pub position: usize,
    pub hybrids: Vec<f64>,
    /// `hybrids[L] - hybrids[0]`: estimated generator-vs-random gap.
    pub gap_estimate: f64,
    pub attempts: usize,
}

pub fn weak_approximator(
    d: &Distinguisher,
    params: &ReconstructParams,
    f_oracle: &mut MembershipOracle,
    config: &ReconstructConfig,
    rng: &mut Rng,
) -> Result<WeakApproximation> {
    let out = next_bit_predictor(d, params, f_oracle, config, rng)?;
    let gap_estimate = out.hybrids[params.output_len()] - out.hybrids[0];
    Ok(WeakApproximation {
        hypothesis: Hypothesis::predictor(params.k(), out.predictor),
        delta0: out.advantage,
        position: out.position,
        hybrids: out.hybrids,
        gap_estimate,
        attempts: out.attempts,
    })
}

/// Majority over `x -> h(x, x_2..x_t) xor f(x_2) xor .. xor f(x_t)` for a
/// fixed list of random tuples whose `f`-parities were queried up front.
struct XorVote {
    inner: Hypothesis,
    n: usize,
    tuples: Vec<(u64, bool)>,
}

impl Predict for XorVote {
    fn predict(&self, x: u64) -> bool {
        let yes = self
            .tuples
            .iter()
            .filter(|&&(high, parity)| self.inner.eval(x | (high << self.n)) ^ parity)
            .count();
        2 * yes > self.tuples.len()
    }

    fn size(&self) -> usize {
        self.inner.size() + self.tuples.len()
    }

    fn describe(&self) -> Value {
        json!({
            "type": "xor-vote",
            "votes": self.tuples.len(),
            "inner": self.inner.to_json(),
        })
    }
}

#[derive(Debug, Clone)]
pub struct Decoded {
    pub hypothesis: Hypothesis,
    pub votes: usize,
    /// Advantage of the input hypothesis against the amplified function.
    pub delta0: f64,
}

/// Votes needed for error `gamma` from advantage `delta0`, odd and capped.
pub fn vote_count(delta0: f64, gamma: f64, cap: usize) -> usize {
    let raw = (2.0 * (2.0 / gamma).ln() / (delta0 * delta0)).ceil();
    let k = if raw.is_finite() { (raw as usize).min(cap.max(1)) } else { cap.max(1) };
    k | 1
}

/// Turns a weak predictor for `xor_amplify(f, t)` into a predictor for `f`.
/// With `t = 1` the input is returned unchanged.
pub fn xor_decode(
    h: Hypothesis,
    f_oracle: &mut MembershipOracle,
    t: usize,
    gamma: f64,
    config: &ReconstructConfig,
    rng: &mut Rng,
) -> Result<Decoded> {
    let n = f_oracle.n();
    if h.n() != n * t {
        return Err(ReconstructError::InvalidParameter(format!(
            "hypothesis arity {} vs t*n={}",
            h.n(),
            n * t
        )));
    }
    let samples = config.validation_samples.max(1);
    let mut amp = Amplified { f: f_oracle, n, t };
    let points = amp.labelled(samples, n * t, rng)?;
    let agree = points.iter().filter(|&&(x, y)| h.eval(x) == y).count();
    let delta0 = agree as f64 / samples as f64 - 0.5;
    // two standard errors of a fair coin
    if delta0 <= 1.0 / (samples as f64).sqrt() {
        return Err(ReconstructError::Decoding {
            advantage: delta0,
            samples,
        });
    }
    if t == 1 {
        return Ok(Decoded {
            hypothesis: h,
            votes: 1,
            delta0,
        });
    }
    let votes = vote_count(delta0, gamma, config.max_votes);
    let high_bits = n * (t - 1);
    let mut amp_rest = Amplified {
        f: amp.f,
        n,
        t: t - 1,
    };
    let tuples = (0..votes)
        .map(|_| {
            let high = random_bits(high_bits, rng);
            Ok((high, amp_rest.query(high)?))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Decoded {
        hypothesis: Hypothesis::predictor(n, XorVote { inner: h, n, tuples }),
        votes,
        delta0,
    })
}

/// Everything measured during one reconstruction.
#[derive(Debug, Clone)]
pub struct Reconstruction {
    pub hypothesis: Hypothesis,
    pub position: usize,
    pub hybrids: Vec<f64>,
    pub gap_estimate: f64,
    pub delta0: f64,
    pub votes: usize,
    pub attempts: usize,
    pub queries: u64,
    pub distinguisher_calls: u64,
}

/// Weak approximation followed by decoding, using only oracle access.
pub fn reconstruct(
    d: &Distinguisher,
    params: &ReconstructParams,
    f_oracle: &mut MembershipOracle,
    config: &ReconstructConfig,
    rng: &mut Rng,
) -> Result<Reconstruction> {
    let q0 = f_oracle.queries();
    let c0 = d.calls();
    let weak = weak_approximator(d, params, f_oracle, config, rng)?;
    let decoded = xor_decode(weak.hypothesis, f_oracle, params.t, params.gamma, config, rng)?;
    Ok(Reconstruction {
        hypothesis: decoded.hypothesis,
        position: weak.position,
        hybrids: weak.hybrids,
        gap_estimate: weak.gap_estimate,
        delta0: weak.delta0,
        votes: decoded.votes,
        attempts: weak.attempts,
        queries: f_oracle.queries() - q0,
        distinguisher_calls: d.calls() - c0,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ReconstructionReport {
    pub n: usize,
    pub t: usize,
    pub ell: usize,
    pub gamma: f64,
    pub distinguisher: String,
    pub position: usize,
    pub hybrids: Vec<f64>,
    pub gap_estimate: f64,
    pub delta0: f64,
    pub votes: usize,
    pub attempts: usize,
    pub queries: u64,
    pub distinguisher_calls: u64,
    pub hypothesis_size: usize,
    pub error: f64,
    pub error_exact: bool,
    pub success: bool,
}

/// [`reconstruct`] on a table-backed oracle, then a closeness measurement:
/// exhaustive for `n <= 16`, sampled otherwise. `success` is set only when
/// the measured error is at most `gamma`.
pub fn reconstruct_full(
    d: &Distinguisher,
    f: &TruthTable,
    params: &ReconstructParams,
    config: &ReconstructConfig,
    query_budget: Option<u64>,
    rng: &mut Rng,
) -> Result<(Hypothesis, ReconstructionReport)> {
    let mut oracle = MembershipOracle::from_table(f.clone());
    if let Some(b) = query_budget {
        oracle = oracle.with_budget(b);
    }
    let rec = reconstruct(d, params, &mut oracle, config, rng)?;
    let (error, exact) = measure_error(&rec.hypothesis, f, config.validation_samples, rng);
    let report = ReconstructionReport {
        n: params.n,
        t: params.t,
        ell: params.ell,
        gamma: params.gamma,
        distinguisher: d.name().to_string(),
        position: rec.position,
        hybrids: rec.hybrids.clone(),
        gap_estimate: rec.gap_estimate,
        delta0: rec.delta0,
        votes: rec.votes,
        attempts: rec.attempts,
        queries: rec.queries,
        distinguisher_calls: rec.distinguisher_calls,
        hypothesis_size: rec.hypothesis.size(),
        error,
        error_exact: exact,
        success: error <= params.gamma,
    };
    Ok((rec.hypothesis, report))
}

/// Distance to `f`: exhaustive for `n <= 16`, else over `samples` points.
pub fn measure_error(h: &Hypothesis, f: &TruthTable, samples: u64, rng: &mut Rng) -> (f64, bool) {
    let n = f.n();
    if n <= 16 {
        let wrong = (0..1u64 << n)
            .into_par_iter()
            .filter(|&x| h.eval(x) != f.get(x))
            .count();
        (wrong as f64 / (1u64 << n) as f64, true)
    } else {
        let samples = samples.max(1);
        let wrong = (0..samples)
            .filter(|_| {
                let x = random_bits(n, rng);
                h.eval(x) != f.get(x)
            })
            .count();
        (wrong as f64 / samples as f64, false)
    }
}

/// The read-once DNF used by the reference reconstruction run: three
/// disjoint terms of widths 5, 5 and 6 over 16 variables.
pub fn reference_dnf() -> TruthTable {
    let terms = [(0u32, 5u32), (5, 5), (10, 6)];
    TruthTable::from_fn(16, |x| {
        terms.iter().any(|&(start, width)| {
            let mask = ((1u64 << width) - 1) << start;
            x & mask == mask
        })
    })
    .expect("16 <= MAX_ARITY")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::designs::poly_design;
    use crate::rng;

    fn quick() -> ReconstructConfig {
        ReconstructConfig {
            hybrid_samples: 600,
            completions: 16,
            score_samples: 256,
            validation_samples: 4000,
            retry_budget: 8,
            ..ReconstructConfig::default()
        }
    }

    #[test]
    fn constant_distinguisher_has_no_gap() {
        let f = TruthTable::from_hex(2, "8").unwrap();
        let fam = NwFamily::new(f, poly_design(2, 1).unwrap(), 1).unwrap();
        let d = Distinguisher::constant(1, false);
        let g = distinguishing_gap(&d, &fam, 100, &mut rng::from_seed(1)).unwrap();
        assert!(g.exact);
        assert_eq!(g.gap, 0.0);
    }

    #[test]
    fn ones_threshold_gap_matches_binomial_tail() {
        // f = 0: generator always outputs the zero table
        let f = TruthTable::zero(3).unwrap();
        let gen = BlackBoxGenerator::new(f, 0.1, 1, 3).unwrap();
        let d = Distinguisher::ones_at_most(3, 2);
        let g = distinguishing_gap(&d, gen.family(), 20_000, &mut rng::from_seed(2)).unwrap();
        let tail = crate::stats::binomial_half_cdf(8, 2);
        assert_eq!(g.p_generator, 1.0);
        assert!((g.gap - (1.0 - tail)).abs() < 4.0 * g.se_random + 1e-9, "{g:?}");
    }

    #[test]
    fn exact_and_sampled_gap_agree() {
        let f = TruthTable::from_hex(2, "6").unwrap();
        let design = Design::new(6, 2, 1, vec![vec![0, 1], vec![1, 2], vec![2, 3], vec![3, 4]]).unwrap();
        let fam = NwFamily::new(f, design, 2).unwrap();
        let d = Distinguisher::ones_at_most(2, 1);
        let exact = distinguishing_gap(&d, &fam, 1, &mut rng::from_seed(3)).unwrap();
        assert!(exact.exact);
        let sampled = distinguishing_gap_sampled(&d, &fam, 20_000, &mut rng::from_seed(3)).unwrap();
        let se = (sampled.se_generator.powi(2) + sampled.se_random.powi(2)).sqrt();
        assert!((exact.gap - sampled.gap).abs() <= 3.0 * se, "{exact:?} {sampled:?}");
    }

    #[test]
    fn constant_distinguisher_fails_cleanly() {
        let f = TruthTable::from_hex(3, "e8").unwrap();
        let params = ReconstructParams::new(3, 1, 2, 0.1).unwrap();
        let d = Distinguisher::constant(2, true);
        let mut o = MembershipOracle::from_table(f);
        let err = next_bit_predictor(&d, &params, &mut o, &quick(), &mut rng::from_seed(4)).unwrap_err();
        assert!(err.is_contract_failure());
        let err = weak_approximator(&d, &params, &mut o, &quick(), &mut rng::from_seed(4)).unwrap_err();
        assert!(matches!(err, ReconstructError::NoPredictor { .. }));
    }

    #[test]
    fn planted_and8_with_ones_threshold() {
        let f = TruthTable::from_fn(8, |x| x == 0xff).unwrap();
        let design = poly_design(11, 1).unwrap().truncate_sets(8).unwrap().truncate_size(8).unwrap();
        let params = ReconstructParams::with_design(8, 1, 3, 0.1, design).unwrap();
        let d = Distinguisher::ones_at_most(3, 2);
        let mut o = MembershipOracle::from_table(f.clone());
        let out = next_bit_predictor(&d, &params, &mut o, &quick(), &mut rng::from_seed(5)).unwrap();
        let h = Hypothesis::predictor(8, out.predictor);
        let adv = 0.5 - h.error(&f).unwrap();
        assert!(adv >= 1.0 / 32.0, "advantage {adv}");
    }

    #[test]
    fn constant_f_gives_exact_hypothesis() {
        let f = TruthTable::constant(4, false).unwrap();
        let params = ReconstructParams::new(4, 1, 2, 0.1).unwrap();
        let d = Distinguisher::ones_at_most(2, 0);
        let (h, report) = reconstruct_full(&d, &f, &params, &quick(), None, &mut rng::from_seed(6)).unwrap();
        assert_eq!(report.error, 0.0);
        assert!(report.success);
        assert!(h.to_table().unwrap().is_constant());
    }

    #[test]
    fn weak_advantage_matches_exhaustive() {
        let f = TruthTable::from_fn(6, |x| x & 0b111 == 0b111 || x >> 3 == 0b111).unwrap();
        let params = ReconstructParams::new(6, 1, 3, 0.1).unwrap();
        let d = Distinguisher::mcsp_threshold(3, &Basis::aon(), 3).unwrap();
        let mut o = MembershipOracle::from_table(f.clone());
        let weak = weak_approximator(&d, &params, &mut o, &quick(), &mut rng::from_seed(7)).unwrap();
        let exhaustive = 0.5 - weak.hypothesis.error(&f).unwrap();
        let se = 0.5 / (quick().validation_samples as f64).sqrt();
        assert!((weak.delta0 - exhaustive).abs() <= 3.0 * se, "{} vs {exhaustive}", weak.delta0);
    }

    #[test]
    fn decoding_perfect_and_noisy_inputs() {
        let f = TruthTable::from_fn(6, |x| x & 0b11 == 0b11 || x & 0b11100 == 0b11100).unwrap();
        let amplified = f.xor_amplify(2).unwrap();
        let mut o = MembershipOracle::from_table(f.clone());
        let exact = xor_decode(Hypothesis::Table(amplified.clone()), &mut o, 2, 0.1, &quick(), &mut rng::from_seed(8)).unwrap();
        assert_eq!(exact.hypothesis.error(&f).unwrap(), 0.0);

        // flip each amplified entry with probability 0.35
        let mut r = rng::from_seed(9);
        let flips: Vec<bool> = (0..1 << 12).map(|_| r.gen::<f64>() < 0.35).collect();
        let noisy = TruthTable::from_fn(12, |x| amplified.get(x) ^ flips[x as usize]).unwrap();
        let dec = xor_decode(Hypothesis::Table(noisy), &mut o, 2, 0.1, &quick(), &mut rng::from_seed(10)).unwrap();
        assert!(dec.delta0 >= 0.1);
        let err = dec.hypothesis.error(&f).unwrap();
        assert!(err <= 0.1, "error {err}");
    }

    #[test]
    fn decoding_rejects_useless_hypothesis() {
        let f = TruthTable::from_hex(3, "e8").unwrap();
        let mut o = MembershipOracle::from_table(f.clone());
        let h = Hypothesis::Table(f.not());
        let err = xor_decode(h, &mut o, 1, 0.1, &quick(), &mut rng::from_seed(11)).unwrap_err();
        assert!(matches!(err, ReconstructError::Decoding { .. }));
    }

    #[test]
    fn deterministic_and_no_oracle_leak() {
        let f = TruthTable::from_fn(6, |x| x & 0b111 == 0b111 || x >> 3 == 0b111).unwrap();
        let params = ReconstructParams::new(6, 1, 3, 0.1).unwrap();
        let d = Distinguisher::mcsp_threshold(3, &Basis::aon(), 3).unwrap();
        let run = |seed| {
            let mut o = MembershipOracle::from_table(f.clone());
            let rec = reconstruct(&d, &params, &mut o, &quick(), &mut rng::from_seed(seed)).unwrap();
            let before = o.queries();
            let table = rec.hypothesis.to_table().unwrap();
            assert_eq!(o.queries(), before);
            assert_eq!(rec.queries, before);
            table
        };
        assert_eq!(run(12), run(12));
    }

    #[test]
    fn budget_exhaustion_is_a_contract_failure() {
        let f = TruthTable::from_hex(3, "e8").unwrap();
        let params = ReconstructParams::new(3, 1, 2, 0.1).unwrap();
        let d = Distinguisher::ones_at_most(2, 1);
        let err = reconstruct_full(&d, &f, &params, &quick(), Some(50), &mut rng::from_seed(13)).unwrap_err();
        assert!(err.is_contract_failure());
    }

    #[test]
    fn reference_dnf_density() {
        let f = reference_dnf();
        let expect = 1.0 - (31.0f64 / 32.0).powi(2) * (63.0 / 64.0);
        let got = f.count_ones() as f64 / 65536.0;
        assert!((got - expect).abs() < 1e-12);
    }
}
