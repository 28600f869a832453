//! Properties of truth tables and the transforms that trade density,
//! randomness and input length.

use std::collections::BTreeMap;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::boolean::{BooleanError, TruthTable};
use crate::circuits::{Basis, CircuitError, SearchLimits, SizeTable, SEARCH_MAX_ARITY};
use crate::rng::Rng;

#[derive(Debug, Error)]
pub enum NaturalError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("property {name} is not defined at arity {n}")]
    Arity { name: String, n: usize },
    #[error(transparent)]
    Boolean(#[from] BooleanError),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
}

pub type Result<T> = std::result::Result<T, NaturalError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Answer {
    Accept,
    Reject,
    Unknown,
}

/// Decision procedure. `randomness` carries the random bits for
/// randomized deciders, low bit first; deterministic ones ignore it.
pub trait Decider: Send + Sync {
    fn decide(&self, y: &TruthTable, randomness: u64) -> Result<Answer>;

    /// Random bits read on arity-`n` inputs.
    fn randomness_bits(&self, _n: usize) -> usize {
        0
    }
}

/// Every accepted table at `arity` should need more than `size` wires.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Usefulness {
    pub basis: String,
    pub size: usize,
    pub arity: usize,
}

#[derive(Clone)]
pub struct PropertySpec {
    pub name: String,
    pub decider: Arc<dyn Decider>,
    pub usefulness: Option<Usefulness>,
    /// Declared lower bound on the fraction of accepted tables.
    pub density: Option<f64>,
    /// May answer [`Answer::Unknown`], never wrongly.
    pub zero_error: bool,
}

impl std::fmt::Debug for PropertySpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PropertySpec")
            .field("name", &self.name)
            .field("usefulness", &self.usefulness)
            .field("density", &self.density)
            .field("zero_error", &self.zero_error)
            .finish()
    }
}

impl PropertySpec {
    pub fn decide(&self, y: &TruthTable, randomness: u64) -> Result<Answer> {
        self.decider.decide(y, randomness)
    }

    /// Deterministic reading: accept only on [`Answer::Accept`] with zero randomness.
    pub fn accepts(&self, y: &TruthTable) -> Result<bool> {
        Ok(self.decide(y, 0)? == Answer::Accept)
    }

    pub fn randomness_bits(&self, n: usize) -> usize {
        self.decider.randomness_bits(n)
    }
}

struct FnDecider<F>(F);

impl<F> Decider for FnDecider<F>
where
    F: Fn(&TruthTable) -> Result<Answer> + Send + Sync,
{
    fn decide(&self, y: &TruthTable, _randomness: u64) -> Result<Answer> {
        (self.0)(y)
    }
}

fn verdict(b: bool) -> Answer {
    if b {
        Answer::Accept
    } else {
        Answer::Reject
    }
}

pub fn accept_all() -> PropertySpec {
    PropertySpec {
        name: "all".into(),
        decider: Arc::new(FnDecider(|_: &TruthTable| Ok(Answer::Accept))),
        usefulness: None,
        density: Some(1.0),
        zero_error: false,
    }
}

pub fn accept_none() -> PropertySpec {
    PropertySpec {
        name: "none".into(),
        decider: Arc::new(FnDecider(|_: &TruthTable| Ok(Answer::Reject))),
        usefulness: None,
        density: Some(0.0),
        zero_error: false,
    }
}

/// Zero-error decider that never commits.
pub fn always_unknown() -> PropertySpec {
    PropertySpec {
        name: "unknown".into(),
        decider: Arc::new(FnDecider(|_: &TruthTable| Ok(Answer::Unknown))),
        usefulness: None,
        density: Some(0.0),
        zero_error: true,
    }
}

pub fn nonzero() -> PropertySpec {
    PropertySpec {
        name: "nonzero".into(),
        decider: Arc::new(FnDecider(|y: &TruthTable| Ok(verdict(y.count_ones() > 0)))),
        usefulness: None,
        density: None,
        zero_error: false,
    }
}

/// Property given by a decider table over the `2^n` table bits: table `y`
/// is accepted iff bit `y` (read as an index) of `decider` is set.
pub fn from_decider_table(n: usize, decider: TruthTable) -> Result<PropertySpec> {
    if decider.n() != 1 << n {
        return Err(NaturalError::InvalidParameter(format!(
            "decider for arity {n} needs {} inputs, has {}",
            1 << n,
            decider.n()
        )));
    }
    let density = decider.count_ones() as f64 / decider.len() as f64;
    let name = format!("table[{n}]");
    Ok(PropertySpec {
        name: name.clone(),
        decider: Arc::new(FnDecider(move |y: &TruthTable| {
            if y.n() != n {
                return Err(NaturalError::Arity { name: name.clone(), n: y.n() });
            }
            Ok(verdict(decider.get(y.words()[0])))
        })),
        usefulness: None,
        density: Some(density),
        zero_error: false,
    })
}

/// Minimum circuit sizes for arities `1..=max_arity`, up to a budget.
struct SizeOracle {
    name: String,
    tables: BTreeMap<usize, SizeTable>,
}

impl SizeOracle {
    fn new(basis: &Basis, budget: usize, max_arity: usize) -> Result<Self> {
        let tables = (1..=max_arity)
            .map(|n| Ok((n, SizeTable::compute(n, basis, budget, SearchLimits::default())?)))
            .collect::<Result<_>>()?;
        Ok(SizeOracle {
            name: format!("mcsp[{}]", basis.name()),
            tables,
        })
    }

    /// Whether the table needs more than the budget.
    fn hard(&self, y: &TruthTable) -> Result<bool> {
        let t = self.tables.get(&y.n()).ok_or_else(|| NaturalError::Arity {
            name: self.name.clone(),
            n: y.n(),
        })?;
        Ok(t.min_size(y).is_none())
    }
}

/// Accepts tables of arity `1..=max_arity` whose minimum circuit size over
/// `basis` exceeds `s0`. Useful against size `s0` by construction.
pub fn mcsp_above(basis: &Basis, s0: usize, max_arity: usize) -> Result<PropertySpec> {
    if max_arity == 0 || max_arity > SEARCH_MAX_ARITY.min(3) {
        return Err(NaturalError::InvalidParameter(format!(
            "max_arity must be in 1..=3, got {max_arity}"
        )));
    }
    let sizes = SizeOracle::new(basis, s0, max_arity)?;
    Ok(PropertySpec {
        name: format!("mcsp[{}]>{s0}", basis.name()),
        decider: Arc::new(FnDecider(move |y: &TruthTable| Ok(verdict(sizes.hard(y)?)))),
        usefulness: Some(Usefulness {
            basis: basis.name().to_string(),
            size: s0,
            arity: max_arity,
        }),
        density: None,
        zero_error: false,
    })
}

struct ZeroErrorMcsp {
    sizes: SizeOracle,
    unknown_below: u64,
}

/// Random bits read by [`zero_error_mcsp`].
pub const ZERO_ERROR_BITS: usize = 4;

impl Decider for ZeroErrorMcsp {
    fn decide(&self, y: &TruthTable, randomness: u64) -> Result<Answer> {
        if randomness & ((1 << ZERO_ERROR_BITS) - 1) < self.unknown_below {
            return Ok(Answer::Unknown);
        }
        Ok(verdict(self.sizes.hard(y)?))
    }

    fn randomness_bits(&self, _n: usize) -> usize {
        ZERO_ERROR_BITS
    }
}

/// Zero-error variant of [`mcsp_above`]: answers unknown when the low four
/// random bits, read as a number, are below `unknown_of_16`.
pub fn zero_error_mcsp(basis: &Basis, s0: usize, max_arity: usize, unknown_of_16: u64) -> Result<PropertySpec> {
    if unknown_of_16 > 16 {
        return Err(NaturalError::InvalidParameter("unknown rate above 16/16".into()));
    }
    let base = mcsp_above(basis, s0, max_arity)?;
    Ok(PropertySpec {
        name: format!("{}?{unknown_of_16}/16", base.name),
        decider: Arc::new(ZeroErrorMcsp {
            sizes: SizeOracle::new(basis, s0, max_arity)?,
            unknown_below: unknown_of_16,
        }),
        usefulness: base.usefulness,
        density: None,
        zero_error: true,
    })
}

struct Amplified(Arc<dyn Decider>);

impl Decider for Amplified {
    fn decide(&self, y: &TruthTable, randomness: u64) -> Result<Answer> {
        let n = y.n();
        if n < 2 {
            return Err(NaturalError::InvalidParameter(format!(
                "arity {n} cannot be split into two halves of positive arity"
            )));
        }
        let low = self.0.decide(&y.segment(n - 1, 0)?, randomness)?;
        let high = self.0.decide(&y.segment(n - 1, 1)?, randomness)?;
        Ok(verdict(low == Answer::Accept || high == Answer::Accept))
    }

    fn randomness_bits(&self, n: usize) -> usize {
        self.0.randomness_bits(n.saturating_sub(1))
    }
}

/// Accepts an arity-`n+1` table iff the base property accepts either
/// half (the `x_{n+1} = 0` half or the `x_{n+1} = 1` half).
pub fn density_amplify(p: &PropertySpec) -> PropertySpec {
    PropertySpec {
        name: format!("amplify({})", p.name),
        decider: Arc::new(Amplified(p.decider.clone())),
        usefulness: p.usefulness.clone(),
        density: p.density.map(|d| 1.0 - (1.0 - d) * (1.0 - d)),
        zero_error: false,
    }
}

struct Derandomized {
    inner: Arc<dyn Decider>,
    k: usize,
}

impl Derandomized {
    /// Largest `n >= 1` with `n (k+1) < n'`.
    fn split(&self, n_prime: usize) -> Option<usize> {
        (1..n_prime).rev().find(|&n| n * (self.k + 1) < n_prime)
    }
}

impl Decider for Derandomized {
    fn decide(&self, y: &TruthTable, _randomness: u64) -> Result<Answer> {
        let Some(n) = self.split(y.n()) else {
            return Ok(Answer::Reject);
        };
        let x = y.segment(n, 0)?;
        let z_len = 1usize << (self.k * n);
        let used = self.inner.randomness_bits(n);
        if used > z_len.min(64) {
            return Err(NaturalError::InvalidParameter(format!(
                "decider reads {used} random bits, block has {}",
                z_len.min(64)
            )));
        }
        let start = 1u64 << n;
        let z = (0..used).fold(0u64, |acc, j| acc | (u64::from(y.get(start + j as u64)) << j));
        Ok(verdict(self.inner.decide(&x, z)? == Answer::Accept))
    }
}

/// Deterministic property from a zero-error randomized one: an arity-`n'`
/// input is split as `x z w` with `|x| = 2^n`, `|z| = 2^{kn}` for the
/// largest `n` with `n(k+1) < n'`, and accepted iff the inner decider
/// accepts `x` with random bits `z`. Unknown counts as reject.
pub fn derandomize_zero_error(p: &PropertySpec, k: usize) -> Result<PropertySpec> {
    if k == 0 {
        return Err(NaturalError::InvalidParameter("k must be >= 1".into()));
    }
    Ok(PropertySpec {
        name: format!("derandomize({}, k={k})", p.name),
        decider: Arc::new(Derandomized {
            inner: p.decider.clone(),
            k,
        }),
        usefulness: p.usefulness.clone(),
        density: None,
        zero_error: false,
    })
}

/// `ceil(n^eps)`, tolerant of rounding in `powf`.
pub fn scaled_arity(n: usize, eps: f64) -> usize {
    let exact = (n as f64).powf(eps);
    let nearest = exact.round();
    let m = if (exact - nearest).abs() < 1e-9 { nearest } else { exact.ceil() };
    (m as usize).clamp(1, n.max(1))
}

struct ScaledDown {
    inner: Arc<dyn Decider>,
    eps: f64,
}

impl Decider for ScaledDown {
    fn decide(&self, y: &TruthTable, randomness: u64) -> Result<Answer> {
        let n = y.n();
        let m = scaled_arity(n, self.eps);
        if m >= n {
            self.inner.decide(y, randomness)
        } else {
            self.inner.decide(&y.restrict_prefix_zero(n - m)?, randomness)
        }
    }

    fn randomness_bits(&self, n: usize) -> usize {
        self.inner.randomness_bits(scaled_arity(n, self.eps))
    }
}

/// Applies the property to the prefix table of arity `ceil(n^eps)`, i.e.
/// with the top `n - ceil(n^eps)` variables fixed to zero.
pub fn scale_down(p: &PropertySpec, eps: f64) -> Result<PropertySpec> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(NaturalError::InvalidParameter(format!("eps={eps} not in (0, 1)")));
    }
    Ok(PropertySpec {
        name: format!("scale_down({}, eps={eps})", p.name),
        decider: Arc::new(ScaledDown {
            inner: p.decider.clone(),
            eps,
        }),
        usefulness: p.usefulness.clone(),
        density: p.density,
        zero_error: p.zero_error,
    })
}

/// Accepted tables among all `2^{2^n}` tables of arity `n <= 4`.
pub fn count_accepted(p: &PropertySpec, n: usize) -> Result<u64> {
    if n == 0 || n > 4 {
        return Err(NaturalError::InvalidParameter(format!("exhaustive sweep needs 1 <= n <= 4, got {n}")));
    }
    let total = 1u64 << (1 << n);
    let hits = (0..total)
        .into_par_iter()
        .map(|v| {
            let y = TruthTable::from_u64(n, v).expect("n <= 4");
            Ok(u64::from(p.accepts(&y)?))
        })
        .collect::<Result<Vec<u64>>>()?;
    Ok(hits.into_iter().sum())
}

/// Acceptance rate over `samples` uniform arity-`n` tables with fresh
/// random bits per table, with its standard error.
pub fn acceptance_sampled(p: &PropertySpec, n: usize, samples: u64, rng: &mut Rng) -> Result<(f64, f64)> {
    use rand::RngCore;
    let mut hits = 0u64;
    for _ in 0..samples {
        let y = TruthTable::sample(n, rng)?;
        let r = rng.next_u64();
        hits += u64::from(p.decide(&y, r)? == Answer::Accept);
    }
    Ok(crate::stats::mean_se(hits, samples.max(1)))
}

#[derive(Debug, Clone, Serialize)]
pub struct DensityRow {
    pub property: String,
    pub arity: usize,
    pub accepted: u64,
    pub total: u64,
    pub density: f64,
    pub exact: bool,
    pub declared_density: Option<f64>,
    /// Accepted tables with circuits within the declared size bound.
    pub usefulness_violations: Option<u64>,
}

/// Density of `p` at arity `n`: exhaustive for `n <= 4`, sampled above.
/// Usefulness is checked exhaustively when `n <= 3` and declared.
pub fn density_report(p: &PropertySpec, n: usize, samples: u64, rng: &mut Rng) -> Result<DensityRow> {
    let (accepted, total, exact) = if n <= 4 {
        (count_accepted(p, n)?, 1u64 << (1 << n), true)
    } else {
        let (rate, _) = acceptance_sampled(p, n, samples, rng)?;
        ((rate * samples as f64).round() as u64, samples, false)
    };
    let usefulness_violations = match &p.usefulness {
        Some(u) if n <= 3 => Some(usefulness_violations(p, n, &Basis::parse(&u.basis)?, u.size)?),
        _ => None,
    };
    Ok(DensityRow {
        property: p.name.clone(),
        arity: n,
        accepted,
        total,
        density: accepted as f64 / total as f64,
        exact,
        declared_density: p.density,
        usefulness_violations,
    })
}

/// Tables of arity `n <= 3` with a circuit of at most `size` wires that the
/// property accepts under some random string.
pub fn usefulness_violations(p: &PropertySpec, n: usize, basis: &Basis, size: usize) -> Result<u64> {
    if n == 0 || n > 3 {
        return Err(NaturalError::InvalidParameter(format!("usefulness check needs 1 <= n <= 3, got {n}")));
    }
    let sizes = SizeTable::compute(n, basis, size, SearchLimits::default())?;
    let bits = p.randomness_bits(n).min(16);
    let mut bad = 0u64;
    for t in sizes.raw_functions(size) {
        let y = TruthTable::from_u64(n, t)?;
        for r in 0..1u64 << bits {
            if p.decide(&y, r)? == Answer::Accept {
                bad += 1;
                break;
            }
        }
    }
    Ok(bad)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    fn toy(s0: usize) -> PropertySpec {
        mcsp_above(&Basis::aon(), s0, 3).unwrap()
    }

    #[test]
    fn trivial_amplifications() {
        assert_eq!(count_accepted(&density_amplify(&accept_none()), 3).unwrap(), 0);
        assert_eq!(count_accepted(&density_amplify(&accept_all()), 3).unwrap(), 256);
        let p = density_amplify(&accept_all());
        assert!(p.decide(&TruthTable::zero(1).unwrap(), 0).is_err());
    }

    #[test]
    fn amplified_density_is_exact() {
        for s0 in 0..7 {
            let p = toy(s0);
            let a = count_accepted(&p, 2).unwrap();
            let amp = count_accepted(&density_amplify(&p), 3).unwrap();
            assert_eq!(amp, 256 - (16 - a) * (16 - a), "s0={s0}");
        }
    }

    #[test]
    fn half_density_goes_to_three_quarters() {
        // 8 of the 16 two-input functions need more than 2 AON wires
        let p = toy(2);
        assert_eq!(count_accepted(&p, 2).unwrap(), 8);
        let amp = count_accepted(&density_amplify(&p), 3).unwrap();
        assert_eq!(amp, 192);
    }

    #[test]
    fn derandomize_trivial_inputs() {
        let mut r = rng::from_seed(1);
        let det = toy(2);
        let d = derandomize_zero_error(&det, 1).unwrap();
        for _ in 0..200 {
            let y = TruthTable::sample(6, &mut r).unwrap();
            let x = y.segment(2, 0).unwrap();
            assert_eq!(d.accepts(&y).unwrap(), det.accepts(&x).unwrap());
        }
        let never = derandomize_zero_error(&always_unknown(), 1).unwrap();
        for _ in 0..50 {
            assert!(!never.accepts(&TruthTable::sample(6, &mut r).unwrap()).unwrap());
        }
        // n' = 2 admits no split
        assert!(!d.accepts(&TruthTable::constant(2, true).unwrap()).unwrap());
    }

    #[test]
    fn derandomize_never_accepts_easy_blocks() {
        let basis = Basis::aon();
        for (n_prime, s0) in [(5usize, 2usize), (7, 3)] {
            let p = zero_error_mcsp(&basis, s0, 3, 5).unwrap();
            let d = derandomize_zero_error(&p, 1).unwrap();
            let n = (n_prime - 1) / 2;
            let sizes = SizeTable::compute(n, &basis, s0, SearchLimits::default()).unwrap();
            let z_bits = 1usize << n;
            for x in sizes.raw_functions(s0) {
                for z in 0..1u64 << z_bits.min(8) {
                    let y = TruthTable::from_fn(n_prime, |i| {
                        if i < 1 << n {
                            (x >> i) & 1 == 1
                        } else if i < (1 << n) + z_bits as u64 {
                            (z >> (i - (1 << n))) & 1 == 1
                        } else {
                            false
                        }
                    })
                    .unwrap();
                    assert!(!d.accepts(&y).unwrap());
                }
            }
        }
    }

    #[test]
    fn derandomized_rate_tracks_density() {
        let p = zero_error_mcsp(&Basis::aon(), 2, 3, 5).unwrap();
        let density = count_accepted(&toy(2), 2).unwrap() as f64 / 16.0;
        let d = derandomize_zero_error(&p, 1).unwrap();
        let (rate, se) = acceptance_sampled(&d, 6, 20_000, &mut rng::from_seed(2)).unwrap();
        assert!(rate - 3.0 * se >= density * 2.0 / 3.0 - 0.01, "{rate} {se}");
    }

    #[test]
    fn scale_down_cases() {
        assert_eq!(scaled_arity(8, 1.0 / 3.0), 2);
        assert_eq!(scaled_arity(9, 0.5), 3);
        assert_eq!(scaled_arity(4, 0.99), 4);
        let p = scale_down(&nonzero(), 1.0 / 3.0).unwrap();
        let mut y = TruthTable::zero(8).unwrap();
        y.set(200, true);
        assert!(!p.accepts(&y).unwrap());
        y.set(3, true);
        assert!(p.accepts(&y).unwrap());
        let ident = scale_down(&nonzero(), 0.99).unwrap();
        assert!(ident.accepts(&TruthTable::from_bit_str("0001").unwrap()).unwrap());
    }

    #[test]
    fn prefix_tables_are_uniform() {
        let mut r = rng::from_seed(3);
        let mut counts = [0u64; 16];
        for _ in 0..10_000 {
            let y = TruthTable::sample(8, &mut r).unwrap();
            let m = scaled_arity(8, 1.0 / 3.0);
            counts[y.restrict_prefix_zero(8 - m).unwrap().as_u64().unwrap() as usize] += 1;
        }
        assert!(crate::stats::chi_square_uniform_p(&counts) > 0.01);
    }

    #[test]
    fn decider_tables() {
        // accept exactly the parity table "0110" (index 6)
        let dec = TruthTable::from_fn(4, |v| v == 6).unwrap();
        let p = from_decider_table(2, dec).unwrap();
        assert!(p.accepts(&TruthTable::from_bit_str("0110").unwrap()).unwrap());
        assert_eq!(count_accepted(&p, 2).unwrap(), 1);
        assert!(p.accepts(&TruthTable::zero(3).unwrap()).is_err());
    }

    #[test]
    fn density_report_checks_usefulness() {
        let row = density_report(&toy(3), 3, 0, &mut rng::from_seed(4)).unwrap();
        assert_eq!(row.usefulness_violations, Some(0));
        assert!(row.exact);
        let zero_error = zero_error_mcsp(&Basis::aon(), 3, 3, 5).unwrap();
        assert_eq!(usefulness_violations(&zero_error, 3, &Basis::aon(), 3).unwrap(), 0);
    }
}
