//! The function-versus-distinguisher zero-sum game on small instances:
//! exact payoff matrices, exact and approximate values, small-support
//! strategies and explicit samplers for them.
//!
//! The row player picks a function and wants the payoff small; the column
//! player picks an oracle probe and wants it large.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::Rng as _;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;

use crate::boolean::{BooleanError, TruthTable};
use crate::circuits::{Basis, CircuitError, SearchLimits, SizeTable};
use crate::rng::Rng;

pub const EXACT_MAX_ROWS: usize = 64;
pub const EXACT_MAX_COLS: usize = 4096;
/// Rejection rounds used by [`strategy_to_sampler`].
pub const SAMPLER_DEPTH: u32 = 10;

#[derive(Debug, Error)]
pub enum GameError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("arity mismatch: expected {expected}, got {got}")]
    Arity { expected: usize, got: usize },
    #[error("exact solver limited to {max_rows}x{max_cols}, matrix is {rows}x{cols}")]
    Capacity {
        rows: usize,
        cols: usize,
        max_rows: usize,
        max_cols: usize,
    },
    #[error("primal value {primal} differs from dual value {dual}")]
    Duality { primal: String, dual: String },
    #[error("{side} strategy failed verification after {attempts} samples")]
    Statistical { side: Side, attempts: u32 },
    #[error(transparent)]
    Boolean(#[from] BooleanError),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
}

pub type Result<T> = std::result::Result<T, GameError>;

pub fn rational_string(q: &BigRational) -> String {
    if q.is_integer() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

fn ratio(numer: i64, denom: i64) -> BigRational {
    BigRational::new(BigInt::from(numer), BigInt::from(denom))
}

/// Decision tree over oracle values; every path queries distinct points.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub enum ProbeTree {
    Leaf(bool),
    Node {
        point: u64,
        zero: Box<ProbeTree>,
        one: Box<ProbeTree>,
    },
}

impl ProbeTree {
    fn eval(&self, h: &TruthTable) -> bool {
        match self {
            ProbeTree::Leaf(v) => *v,
            ProbeTree::Node { point, zero, one } => {
                if h.get(*point) {
                    one.eval(h)
                } else {
                    zero.eval(h)
                }
            }
        }
    }

    /// Leaf-weighted acceptance with each queried bit uniform.
    fn acceptance(&self) -> BigRational {
        match self {
            ProbeTree::Leaf(v) => {
                if *v {
                    BigRational::one()
                } else {
                    BigRational::zero()
                }
            }
            ProbeTree::Node { zero, one, .. } => (zero.acceptance() + one.acceptance()) / ratio(2, 1),
        }
    }

    fn complement(&self) -> ProbeTree {
        match self {
            ProbeTree::Leaf(v) => ProbeTree::Leaf(!v),
            ProbeTree::Node { point, zero, one } => ProbeTree::Node {
                point: *point,
                zero: Box::new(zero.complement()),
                one: Box::new(one.complement()),
            },
        }
    }

    fn depth(&self) -> usize {
        match self {
            ProbeTree::Leaf(_) => 0,
            ProbeTree::Node { zero, one, .. } => 1 + zero.depth().max(one.depth()),
        }
    }

    fn check(&self, n: usize, path: &mut Vec<u64>) -> Result<()> {
        if let ProbeTree::Node { point, zero, one } = self {
            if *point >= 1u64 << n {
                return Err(GameError::InvalidParameter(format!("probe point {point} outside arity {n}")));
            }
            if path.contains(point) {
                return Err(GameError::InvalidParameter(format!("point {point} queried twice on one path")));
            }
            path.push(*point);
            zero.check(n, path)?;
            one.check(n, path)?;
            path.pop();
        }
        Ok(())
    }
}

/// A deterministic oracle distinguisher; the number of queries stands in
/// for its size.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub enum OracleProbe {
    Constant(bool),
    /// Queries `points` at once; bit `j` of the predicate index is the
    /// oracle's value at `points[j]`.
    NonAdaptive { points: Vec<u64>, predicate: TruthTable },
    Tree(ProbeTree),
}

impl OracleProbe {
    pub fn non_adaptive(points: Vec<u64>, predicate: TruthTable) -> Result<Self> {
        if points.is_empty() || predicate.n() != points.len() {
            return Err(GameError::InvalidParameter(format!(
                "{} points need a predicate of arity {}, got {}",
                points.len(),
                points.len(),
                predicate.n()
            )));
        }
        let mut sorted = points.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != points.len() {
            return Err(GameError::InvalidParameter("query points must be distinct".into()));
        }
        Ok(OracleProbe::NonAdaptive { points, predicate })
    }

    /// Probe reading a single point and passing its value through.
    pub fn point(x: u64) -> Self {
        OracleProbe::NonAdaptive {
            points: vec![x],
            predicate: TruthTable::from_bit_str("01").expect("literal"),
        }
    }

    pub fn queries(&self) -> usize {
        match self {
            OracleProbe::Constant(_) => 0,
            OracleProbe::NonAdaptive { points, .. } => points.len(),
            OracleProbe::Tree(t) => t.depth(),
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        match self {
            OracleProbe::Constant(_) => Ok(()),
            OracleProbe::NonAdaptive { points, .. } => match points.iter().find(|&&p| p >= 1u64 << n) {
                Some(p) => Err(GameError::InvalidParameter(format!("probe point {p} outside arity {n}"))),
                None => Ok(()),
            },
            OracleProbe::Tree(t) => t.check(n, &mut Vec::new()),
        }
    }

    pub fn eval(&self, h: &TruthTable) -> bool {
        match self {
            OracleProbe::Constant(v) => *v,
            OracleProbe::NonAdaptive { points, predicate } => {
                let idx = points
                    .iter()
                    .enumerate()
                    .fold(0u64, |acc, (j, &p)| acc | (u64::from(h.get(p)) << j));
                predicate.get(idx)
            }
            OracleProbe::Tree(t) => t.eval(h),
        }
    }

    /// Exact `Pr_f[probe^f = 1]` over a uniformly random oracle `f`.
    pub fn random_acceptance(&self) -> BigRational {
        match self {
            OracleProbe::Constant(true) => BigRational::one(),
            OracleProbe::Constant(false) => BigRational::zero(),
            OracleProbe::NonAdaptive { predicate, .. } => BigRational::new(
                BigInt::from(predicate.count_ones()),
                BigInt::from(predicate.len()),
            ),
            OracleProbe::Tree(t) => t.acceptance(),
        }
    }

    pub fn complement(&self) -> OracleProbe {
        match self {
            OracleProbe::Constant(v) => OracleProbe::Constant(!v),
            OracleProbe::NonAdaptive { points, predicate } => OracleProbe::NonAdaptive {
                points: points.clone(),
                predicate: predicate.not(),
            },
            OracleProbe::Tree(t) => OracleProbe::Tree(t.complement()),
        }
    }

    pub fn to_json(&self) -> Value {
        match self {
            OracleProbe::Constant(v) => json!({ "kind": "constant", "value": v }),
            OracleProbe::NonAdaptive { points, predicate } => json!({
                "kind": "nonadaptive",
                "points": points,
                "predicate": predicate.to_bit_string(),
            }),
            OracleProbe::Tree(t) => json!({ "kind": "tree", "tree": t }),
        }
    }
}

/// All `2^n * 4` probes reading a single point.
pub fn one_point_probes(n: usize) -> Vec<OracleProbe> {
    all_nonadaptive_probes(n, 1)
}

/// Every non-adaptive probe with `q` query points in increasing order and
/// every predicate on them.
pub fn all_nonadaptive_probes(n: usize, q: usize) -> Vec<OracleProbe> {
    let domain = 1u64 << n;
    let mut subsets: Vec<Vec<u64>> = vec![vec![]];
    for _ in 0..q {
        subsets = subsets
            .into_iter()
            .flat_map(|s| {
                let start = s.last().map_or(0, |&l| l + 1);
                (start..domain).map(move |p| {
                    let mut t = s.clone();
                    t.push(p);
                    t
                })
            })
            .collect();
    }
    subsets
        .into_iter()
        .flat_map(|points| {
            (0..1u64 << (1u64 << q)).map(move |pred| OracleProbe::NonAdaptive {
                points: points.clone(),
                predicate: TruthTable::from_u64(q, pred).expect("q <= 6"),
            })
        })
        .collect()
}

/// All tables of arity `n <= 4` with circuits of at most `size` wires.
pub fn class_rows(n: usize, basis: &Basis, size: usize) -> Result<Vec<TruthTable>> {
    Ok(SizeTable::compute(n, basis, size, SearchLimits::default())?.functions(size))
}

#[derive(Debug, Clone)]
pub struct GameMatrix {
    pub n: usize,
    pub rows: Vec<TruthTable>,
    pub cols: Vec<OracleProbe>,
    pub entries: Vec<Vec<BigRational>>,
}

impl GameMatrix {
    /// A matrix without function or probe labels, entries in `[-1, 1]`.
    pub fn from_entries(entries: Vec<Vec<BigRational>>) -> Result<Self> {
        let width = entries.first().map_or(0, Vec::len);
        if entries.is_empty() || width == 0 || entries.iter().any(|r| r.len() != width) {
            return Err(GameError::InvalidParameter("matrix must be nonempty and rectangular".into()));
        }
        let one = BigRational::one();
        if entries.iter().flatten().any(|e| e.abs() > one) {
            return Err(GameError::InvalidParameter("entries must lie in [-1, 1]".into()));
        }
        Ok(GameMatrix {
            n: 0,
            rows: Vec::new(),
            cols: Vec::new(),
            entries,
        })
    }

    pub fn from_i64(entries: &[&[i64]], denom: i64) -> Result<Self> {
        Self::from_entries(
            entries
                .iter()
                .map(|r| r.iter().map(|&e| ratio(e, denom)).collect())
                .collect(),
        )
    }

    pub fn num_rows(&self) -> usize {
        self.entries.len()
    }

    pub fn num_cols(&self) -> usize {
        self.entries[0].len()
    }

    /// `max_j sum_i p_i M(i, j)`: the best the column player does against `p`.
    pub fn row_value(&self, p: &[BigRational]) -> BigRational {
        (0..self.num_cols())
            .map(|j| {
                p.iter()
                    .zip(&self.entries)
                    .filter(|(w, _)| !w.is_zero())
                    .map(|(w, row)| w * &row[j])
                    .fold(BigRational::zero(), |a, b| a + b)
            })
            .max()
            .expect("nonempty")
    }

    /// `min_i sum_j q_j M(i, j)`: the best the row player does against `q`.
    pub fn col_value(&self, q: &[BigRational]) -> BigRational {
        self.entries
            .iter()
            .map(|row| {
                q.iter()
                    .zip(row)
                    .filter(|(w, _)| !w.is_zero())
                    .map(|(w, e)| w * e)
                    .fold(BigRational::zero(), |a, b| a + b)
            })
            .min()
            .expect("nonempty")
    }
}

/// Exact matrix `M(h, C) = C^h - Pr_f[C^f = 1]`, with the probe set closed
/// under complement (missing complements are appended in order).
pub fn build_matrix(rows: Vec<TruthTable>, cols: Vec<OracleProbe>, n: usize) -> Result<GameMatrix> {
    if rows.is_empty() || cols.is_empty() {
        return Err(GameError::InvalidParameter("need at least one row and one column".into()));
    }
    if let Some(h) = rows.iter().find(|h| h.n() != n) {
        return Err(GameError::Arity { expected: n, got: h.n() });
    }
    for c in &cols {
        c.validate(n)?;
    }
    let mut closed = cols.clone();
    for c in &cols {
        let comp = c.complement();
        if !closed.contains(&comp) {
            closed.push(comp);
        }
    }
    let offsets: Vec<BigRational> = closed.iter().map(OracleProbe::random_acceptance).collect();
    let entries = rows
        .par_iter()
        .map(|h| {
            closed
                .iter()
                .zip(&offsets)
                .map(|(c, off)| BigRational::from_integer(BigInt::from(u8::from(c.eval(h)))) - off)
                .collect()
        })
        .collect();
    Ok(GameMatrix {
        n,
        rows,
        cols: closed,
        entries,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Row,
    Col,
}

impl std::fmt::Display for Side {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Side::Row => "row",
            Side::Col => "col",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Weights {
    /// Uniform over a multiset of indices.
    Uniform(Vec<usize>),
    General(Vec<BigRational>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct MixedStrategy {
    pub side: Side,
    pub weights: Weights,
}

impl MixedStrategy {
    /// Dense weight vector of length `len`.
    pub fn dense(&self, len: usize) -> Vec<BigRational> {
        match &self.weights {
            Weights::General(w) => w.clone(),
            Weights::Uniform(support) => {
                let mut w = vec![BigRational::zero(); len];
                let unit = ratio(1, support.len() as i64);
                for &i in support {
                    w[i] += &unit;
                }
                w
            }
        }
    }

    /// Distinct indices carrying positive weight.
    pub fn support_size(&self) -> usize {
        match &self.weights {
            Weights::Uniform(s) => {
                let mut s = s.clone();
                s.sort_unstable();
                s.dedup();
                s.len()
            }
            Weights::General(w) => w.iter().filter(|x| !x.is_zero()).count(),
        }
    }

    pub fn to_json(&self) -> Value {
        match &self.weights {
            Weights::Uniform(s) => json!({ "side": self.side, "uniform": s }),
            Weights::General(w) => {
                let nz: BTreeMap<String, String> = w
                    .iter()
                    .enumerate()
                    .filter(|(_, x)| !x.is_zero())
                    .map(|(i, x)| (i.to_string(), rational_string(x)))
                    .collect();
                json!({ "side": self.side, "weights": nz })
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SolveMode {
    Exact,
    /// Multiplicative weights to accuracy `delta`.
    Mwu { delta: f64 },
}

#[derive(Debug, Clone)]
pub struct GameSolution {
    /// Exact value in exact mode; in approximate mode, `v(p)`.
    pub value: BigRational,
    pub row: MixedStrategy,
    pub col: MixedStrategy,
    pub row_value: BigRational,
    pub col_value: BigRational,
    pub exact: bool,
    /// Simplex pivots or MWU rounds.
    pub iterations: u64,
}

impl GameSolution {
    pub fn to_json(&self) -> Value {
        json!({
            "value": rational_string(&self.value),
            "value_f64": self.value.to_f64(),
            "row_value": rational_string(&self.row_value),
            "col_value": rational_string(&self.col_value),
            "exact": self.exact,
            "iterations": self.iterations,
            "row": self.row.to_json(),
            "col": self.col.to_json(),
        })
    }
}

pub fn game_value(m: &GameMatrix, mode: SolveMode) -> Result<GameSolution> {
    match mode {
        SolveMode::Exact => solve_exact(m),
        SolveMode::Mwu { delta } => solve_mwu(m, delta),
    }
}

/// Maximize `sum y` subject to `a y <= 1`, `y >= 0`, for strictly positive
/// `a`, by the tableau simplex with Bland's rule. Returns `(y, x)` with `x`
/// the dual solution read off the slack reduced costs, and the pivot count.
fn simplex_unit(a: &[Vec<BigRational>]) -> (Vec<BigRational>, Vec<BigRational>, u64) {
    let rows = a.len();
    let vars = a[0].len();
    let width = vars + rows + 1;
    let rhs = width - 1;
    let mut tab: Vec<Vec<BigRational>> = a
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let mut t = r.clone();
            t.resize(width, BigRational::zero());
            t[vars + i] = BigRational::one();
            t[rhs] = BigRational::one();
            t
        })
        .collect();
    let mut obj = vec![BigRational::zero(); width];
    for o in obj.iter_mut().take(vars) {
        *o = BigRational::one();
    }
    let mut basis: Vec<usize> = (vars..vars + rows).collect();
    let mut pivots = 0;
    while let Some(enter) = (0..vars + rows).find(|&j| obj[j].is_positive()) {
        let leave = (0..rows)
            .filter(|&i| tab[i][enter].is_positive())
            .min_by(|&i, &k| {
                let ri = &tab[i][rhs] / &tab[i][enter];
                let rk = &tab[k][rhs] / &tab[k][enter];
                ri.cmp(&rk).then(basis[i].cmp(&basis[k]))
            })
            .expect("bounded: every column has a positive entry");
        let piv = tab[leave][enter].clone();
        for e in tab[leave].iter_mut() {
            if !e.is_zero() {
                *e /= &piv;
            }
        }
        let prow = tab[leave].clone();
        let nz: Vec<usize> = (0..width).filter(|&j| !prow[j].is_zero()).collect();
        for (i, row) in tab.iter_mut().enumerate() {
            if i == leave || row[enter].is_zero() {
                continue;
            }
            let factor = row[enter].clone();
            for &j in &nz {
                row[j] -= &factor * &prow[j];
            }
        }
        if !obj[enter].is_zero() {
            let factor = obj[enter].clone();
            for &j in &nz {
                obj[j] -= &factor * &prow[j];
            }
        }
        basis[leave] = enter;
        pivots += 1;
    }
    let mut y = vec![BigRational::zero(); vars];
    for (i, &b) in basis.iter().enumerate() {
        if b < vars {
            y[b] = tab[i][rhs].clone();
        }
    }
    let x = (0..rows).map(|i| -obj[vars + i].clone()).collect();
    (y, x, pivots)
}

fn normalize(w: Vec<BigRational>) -> Vec<BigRational> {
    let total = w.iter().fold(BigRational::zero(), |a, b| a + b);
    w.into_iter().map(|x| x / &total).collect()
}

fn solve_exact(m: &GameMatrix) -> Result<GameSolution> {
    let (rows, cols) = (m.num_rows(), m.num_cols());
    if rows > EXACT_MAX_ROWS || cols > EXACT_MAX_COLS {
        return Err(GameError::Capacity {
            rows,
            cols,
            max_rows: EXACT_MAX_ROWS,
            max_cols: EXACT_MAX_COLS,
        });
    }
    // The column player minimizes the positive matrix shift - M.
    let shift = m.entries.iter().flatten().max().expect("nonempty") + BigRational::one();
    let positive: Vec<Vec<BigRational>> = m
        .entries
        .iter()
        .map(|r| r.iter().map(|e| &shift - e).collect())
        .collect();
    let (y, x, pivots) = simplex_unit(&positive);
    let q = normalize(y);
    let p = normalize(x);
    let row_value = m.row_value(&p);
    let col_value = m.col_value(&q);
    if row_value != col_value {
        return Err(GameError::Duality {
            primal: rational_string(&col_value),
            dual: rational_string(&row_value),
        });
    }
    Ok(GameSolution {
        value: row_value.clone(),
        row: MixedStrategy {
            side: Side::Row,
            weights: Weights::General(p),
        },
        col: MixedStrategy {
            side: Side::Col,
            weights: Weights::General(q),
        },
        row_value,
        col_value,
        exact: true,
        iterations: pivots,
    })
}

/// Rounds used by the multiplicative-weights solver for accuracy `delta`.
pub fn mwu_rounds(rows: usize, delta: f64) -> u64 {
    (2.0 * (rows.max(1) as f64).ln() / (delta * delta)).ceil() as u64 + 1
}

fn solve_mwu(m: &GameMatrix, delta: f64) -> Result<GameSolution> {
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(GameError::InvalidParameter(format!("delta={delta} not in (0, 1]")));
    }
    let (rows, cols) = (m.num_rows(), m.num_cols());
    let payoff: Vec<Vec<f64>> = m
        .entries
        .iter()
        .map(|r| r.iter().map(|e| e.to_f64().unwrap_or(0.0)).collect())
        .collect();
    let rounds = mwu_rounds(rows, delta);
    // losses rescaled to [0, 1]
    let eta = (8.0 * (rows.max(2) as f64).ln() / rounds as f64).sqrt();
    let mut log_w = vec![0.0f64; rows];
    let mut avg_p = vec![0.0f64; rows];
    let mut responses = Vec::with_capacity(rounds as usize);
    for _ in 0..rounds {
        let top = log_w.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let w: Vec<f64> = log_w.iter().map(|l| (l - top).exp()).collect();
        let total: f64 = w.iter().sum();
        let p: Vec<f64> = w.iter().map(|x| x / total).collect();
        let best = (0..cols)
            .into_par_iter()
            .map(|j| (p.iter().zip(&payoff).map(|(pi, r)| pi * r[j]).sum::<f64>(), j))
            .reduce(
                || (f64::NEG_INFINITY, usize::MAX),
                |a, b| if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) { b } else { a },
            );
        responses.push(best.1);
        for (i, l) in log_w.iter_mut().enumerate() {
            *l -= eta * (payoff[i][best.1] + 1.0) / 2.0;
        }
        for (a, pi) in avg_p.iter_mut().zip(&p) {
            *a += pi / rounds as f64;
        }
    }
    let p = normalize(
        avg_p
            .iter()
            .map(|&x| BigRational::from_float(x).unwrap_or_else(BigRational::zero))
            .collect(),
    );
    let row = MixedStrategy {
        side: Side::Row,
        weights: Weights::General(p.clone()),
    };
    let col = MixedStrategy {
        side: Side::Col,
        weights: Weights::Uniform(responses),
    };
    let row_value = m.row_value(&p);
    let col_value = m.col_value(&col.dense(cols));
    Ok(GameSolution {
        value: row_value.clone(),
        row,
        col,
        row_value,
        col_value,
        exact: false,
        iterations: rounds,
    })
}

#[derive(Debug, Clone)]
pub struct SmallSupport {
    pub row: MixedStrategy,
    pub col: MixedStrategy,
    pub k_row: usize,
    pub k_col: usize,
    pub row_value: BigRational,
    pub col_value: BigRational,
    pub row_attempts: u32,
    pub col_attempts: u32,
}

impl SmallSupport {
    pub fn first_try(&self) -> bool {
        self.row_attempts == 1 && self.col_attempts == 1
    }
}

/// `max(1, ceil(10 ln(opponents) / delta^2))`.
pub fn support_bound(opponents: usize, delta: f64) -> usize {
    ((10.0 * (opponents.max(1) as f64).ln() / (delta * delta)).ceil() as usize).max(1)
}

fn sample_multiset(weights: &[BigRational], k: usize, rng: &mut Rng) -> Vec<usize> {
    let cumulative: Vec<f64> = weights
        .iter()
        .scan(0.0, |acc, w| {
            *acc += w.to_f64().unwrap_or(0.0);
            Some(*acc)
        })
        .collect();
    let total = *cumulative.last().expect("nonempty");
    let last_positive = weights.iter().rposition(|w| w.is_positive()).unwrap_or(0);
    (0..k)
        .map(|_| {
            let u = rng.gen::<f64>() * total;
            cumulative
                .iter()
                .position(|&c| u < c)
                .unwrap_or(last_positive)
                .min(last_positive)
        })
        .map(|mut i| {
            while weights[i].is_zero() {
                i += 1;
            }
            i
        })
        .collect()
}

/// Samples `k`-uniform strategies from the optimal ones of an exact
/// solution and verifies them exactly: `v(p~) <= v + delta` and
/// `v(q~) >= v - delta`, resampling up to `budget` times per side.
pub fn small_support(
    m: &GameMatrix,
    solution: &GameSolution,
    delta: f64,
    budget: u32,
    rng: &mut Rng,
) -> Result<SmallSupport> {
    if !(delta > 0.0) || budget == 0 {
        return Err(GameError::InvalidParameter("need delta > 0 and budget >= 1".into()));
    }
    let slack = BigRational::from_float(delta)
        .ok_or_else(|| GameError::InvalidParameter(format!("delta={delta}")))?;
    let (rows, cols) = (m.num_rows(), m.num_cols());
    let k_row = support_bound(cols, delta);
    let k_col = support_bound(rows, delta);
    let p = solution.row.dense(rows);
    let q = solution.col.dense(cols);
    let bound_row = &solution.value + &slack;
    let bound_col = &solution.value - &slack;

    let mut row_attempts = 0;
    let (row, row_value) = loop {
        row_attempts += 1;
        let s = MixedStrategy {
            side: Side::Row,
            weights: Weights::Uniform(sample_multiset(&p, k_row, rng)),
        };
        let v = m.row_value(&s.dense(rows));
        if v <= bound_row {
            break (s, v);
        }
        if row_attempts >= budget {
            return Err(GameError::Statistical {
                side: Side::Row,
                attempts: row_attempts,
            });
        }
    };
    let mut col_attempts = 0;
    let (col, col_value) = loop {
        col_attempts += 1;
        let s = MixedStrategy {
            side: Side::Col,
            weights: Weights::Uniform(sample_multiset(&q, k_col, rng)),
        };
        let v = m.col_value(&s.dense(cols));
        if v >= bound_col {
            break (s, v);
        }
        if col_attempts >= budget {
            return Err(GameError::Statistical {
                side: Side::Col,
                attempts: col_attempts,
            });
        }
    };
    Ok(SmallSupport {
        row,
        col,
        k_row,
        k_col,
        row_value,
        col_value,
        row_attempts,
        col_attempts,
    })
}

/// Selector for a `k`-uniform row strategy: read `bits` uniform bits as an
/// index into the support, retry on indices `>= k` up to `depth` rounds,
/// then fall back to the first support entry.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Sampler {
    pub bits: u32,
    pub depth: u32,
    pub support: Vec<usize>,
}

impl Sampler {
    /// Row index selected by the given selector words, one per round.
    pub fn select(&self, mut selectors: impl Iterator<Item = u64>) -> usize {
        let k = self.support.len() as u64;
        for _ in 0..self.depth {
            let Some(s) = selectors.next() else { break };
            let idx = s & ((1u64 << self.bits) - 1);
            if idx < k {
                return self.support[idx as usize];
            }
        }
        self.support[0]
    }

    pub fn sample(&self, rng: &mut Rng) -> usize {
        let bits = self.bits;
        self.select(std::iter::repeat_with(|| rng.gen::<u64>() & ((1u64 << bits) - 1)))
    }

    /// Exact output distribution over row indices, by enumerating every
    /// selector value in every round. Rejected strings reach identical
    /// states, so each round is enumerated once and weighted.
    pub fn distribution(&self) -> BTreeMap<usize, BigRational> {
        let width = 1u64 << self.bits;
        let unit = BigRational::new(BigInt::one(), BigInt::from(width));
        let mut dist: BTreeMap<usize, BigRational> = BTreeMap::new();
        let mut reach = BigRational::one();
        for _ in 0..self.depth {
            let mut rejected = 0u64;
            for s in 0..width {
                match self.support.get(s as usize) {
                    Some(&row) => *dist.entry(row).or_insert_with(BigRational::zero) += &reach * &unit,
                    None => rejected += 1,
                }
            }
            reach = reach * BigRational::new(BigInt::from(rejected), BigInt::from(width));
            if reach.is_zero() {
                break;
            }
        }
        if !reach.is_zero() {
            *dist.entry(self.support[0]).or_insert_with(BigRational::zero) += reach;
        }
        dist
    }

    /// Exact total variation between [`Sampler::distribution`] and the
    /// uniform distribution on the support multiset.
    pub fn total_variation(&self) -> BigRational {
        let k = self.support.len() as i64;
        let mut target: BTreeMap<usize, BigRational> = BTreeMap::new();
        for &i in &self.support {
            *target.entry(i).or_insert_with(BigRational::zero) += ratio(1, k);
        }
        let got = self.distribution();
        let diff = target
            .iter()
            .map(|(i, t)| (got.get(i).cloned().unwrap_or_else(BigRational::zero) - t).abs())
            .fold(BigRational::zero(), |a, b| a + b);
        diff / ratio(2, 1)
    }

    pub fn to_json(&self, rows: &[TruthTable]) -> Value {
        json!({
            "bits": self.bits,
            "depth": self.depth,
            "support": self.support,
            "tables": self.support.iter().filter_map(|&i| rows.get(i).map(TruthTable::to_hex)).collect::<Vec<_>>(),
            "total_variation": rational_string(&self.total_variation()),
        })
    }
}

pub fn strategy_to_sampler(strategy: &MixedStrategy) -> Result<Sampler> {
    let Weights::Uniform(support) = &strategy.weights else {
        return Err(GameError::InvalidParameter("sampler needs a k-uniform strategy".into()));
    };
    if support.is_empty() || support.len() > 1 << 20 {
        return Err(GameError::InvalidParameter(format!("support size {} out of range", support.len())));
    }
    let k = support.len() as u64;
    let bits = if k <= 1 { 0 } else { 64 - (k - 1).leading_zeros() };
    Ok(Sampler {
        bits,
        depth: SAMPLER_DEPTH,
        support: support.clone(),
    })
}

/// Twenty small matrices: the full two-input game against one-point
/// probes, a few classic games, and seeded games on small classes.
pub fn game_bench(seed: u64) -> Result<Vec<(String, GameMatrix)>> {
    let mut bench = Vec::new();
    let all2: Vec<TruthTable> = (0..16).map(|v| TruthTable::from_u64(2, v)).collect::<std::result::Result<_, _>>()?;
    bench.push(("n2-all-vs-1probe".to_string(), build_matrix(all2, one_point_probes(2), 2)?));
    bench.push(("pennies".into(), GameMatrix::from_i64(&[&[0, 1], &[1, 0]], 1)?));
    bench.push(("signed-pennies".into(), GameMatrix::from_i64(&[&[1, -1], &[-1, 1]], 1)?));
    bench.push(("rps".into(), GameMatrix::from_i64(&[&[0, -1, 1], &[1, 0, -1], &[-1, 1, 0]], 1)?));
    let aon = Basis::aon();
    for s in [0usize, 1, 2, 3] {
        bench.push((
            format!("n2-aon{s}-vs-1probe"),
            build_matrix(class_rows(2, &aon, s)?, one_point_probes(2), 2)?,
        ));
    }
    bench.push((
        "n2-aon2-vs-2probe".into(),
        build_matrix(class_rows(2, &aon, 2)?, all_nonadaptive_probes(2, 2), 2)?,
    ));
    let mut rng = crate::rng::derive(seed, "game-bench", 0);
    while bench.len() < 20 {
        let idx = bench.len();
        let n = 3;
        let row_count = rng.gen_range(2..=12);
        let rows: Vec<TruthTable> = (0..row_count)
            .map(|_| TruthTable::sample(n, &mut rng))
            .collect::<std::result::Result<_, _>>()?;
        let col_count = rng.gen_range(2..=10);
        let cols: Vec<OracleProbe> = (0..col_count)
            .map(|_| random_probe(n, &mut rng))
            .collect::<Result<_>>()?;
        bench.push((format!("random-{idx}"), build_matrix(rows, cols, n)?));
    }
    Ok(bench)
}

fn random_probe(n: usize, rng: &mut Rng) -> Result<OracleProbe> {
    let domain = 1u64 << n;
    if rng.gen_bool(0.5) {
        let q = rng.gen_range(1..=2usize);
        let mut points = Vec::new();
        while points.len() < q {
            let p = rng.gen_range(0..domain);
            if !points.contains(&p) {
                points.push(p);
            }
        }
        let predicate = TruthTable::sample(q, rng)?;
        OracleProbe::non_adaptive(points, predicate)
    } else {
        let root = rng.gen_range(0..domain);
        let child = |rng: &mut Rng| {
            let mut p = rng.gen_range(0..domain);
            while p == root {
                p = rng.gen_range(0..domain);
            }
            ProbeTree::Node {
                point: p,
                zero: Box::new(ProbeTree::Leaf(rng.gen())),
                one: Box::new(ProbeTree::Leaf(rng.gen())),
            }
        };
        let zero = child(rng);
        let one = child(rng);
        let tree = OracleProbe::Tree(ProbeTree::Node {
            point: root,
            zero: Box::new(zero),
            one: Box::new(one),
        });
        tree.validate(n)?;
        Ok(tree)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use proptest::prelude::*;

    fn q(n: i64, d: i64) -> BigRational {
        ratio(n, d)
    }

    #[test]
    fn trivial_entries() {
        let rows = vec![TruthTable::from_bit_str("0110").unwrap(), TruthTable::from_bit_str("0001").unwrap()];
        let m = build_matrix(rows, vec![OracleProbe::Constant(true), OracleProbe::point(3)], 2).unwrap();
        // columns: accept-all, point 3, then reject-all and not-point-3
        assert_eq!(m.num_cols(), 4);
        for row in &m.entries {
            assert!(row[0].is_zero());
            assert!(row[2].is_zero());
            assert_eq!(&row[1] + &row[3], BigRational::zero());
        }
        assert_eq!(m.entries[0][1], q(-1, 2));
        assert_eq!(m.entries[1][1], q(1, 2));
    }

    #[test]
    fn full_two_input_game_matches_direct_formula() {
        let (_, m) = game_bench(0).unwrap().remove(0);
        assert_eq!((m.num_rows(), m.num_cols()), (16, 16));
        for (i, h) in m.rows.iter().enumerate() {
            for (j, c) in m.cols.iter().enumerate() {
                let OracleProbe::NonAdaptive { points, predicate } = c else { panic!() };
                // predicate on one bit: "pq" means P(0)=p, P(1)=q
                let value = (h.words()[0] >> points[0]) & 1;
                let accept = (predicate.words()[0] >> value) & 1;
                let ones = predicate.words()[0].count_ones() as i64;
                assert_eq!(m.entries[i][j], q(2 * accept as i64 - ones, 2));
            }
        }
        let sol = game_value(&m, SolveMode::Exact).unwrap();
        // the uniform row mix answers every one-point probe like a random function
        assert!(sol.value.is_zero());
    }

    #[test]
    fn exact_values() {
        let zero = GameMatrix::from_i64(&[&[0, 0], &[0, 0]], 1).unwrap();
        assert!(game_value(&zero, SolveMode::Exact).unwrap().value.is_zero());
        let c = GameMatrix::from_i64(&[&[3, 3, 3], &[3, 3, 3]], 7).unwrap();
        assert_eq!(game_value(&c, SolveMode::Exact).unwrap().value, q(3, 7));
        let pennies = GameMatrix::from_i64(&[&[0, 1], &[1, 0]], 1).unwrap();
        let sol = game_value(&pennies, SolveMode::Exact).unwrap();
        assert_eq!(sol.value, q(1, 2));
        assert_eq!(sol.row.dense(2), vec![q(1, 2), q(1, 2)]);
        let rps = GameMatrix::from_i64(&[&[0, -1, 1], &[1, 0, -1], &[-1, 1, 0]], 1).unwrap();
        assert!(game_value(&rps, SolveMode::Exact).unwrap().value.is_zero());
    }

    #[test]
    fn mwu_tracks_exact_value() {
        let bench = game_bench(1).unwrap();
        for (name, m) in bench.iter().take(8) {
            let exact = game_value(m, SolveMode::Exact).unwrap().value;
            let approx = game_value(m, SolveMode::Mwu { delta: 0.1 }).unwrap();
            let gap = (&approx.row_value - &approx.col_value).to_f64().unwrap();
            assert!(gap <= 0.2 + 1e-12, "{name}: {gap}");
            assert!(approx.col_value <= exact && exact <= approx.row_value, "{name}");
        }
    }

    #[test]
    fn complement_closure_makes_value_nonnegative() {
        for (name, m) in game_bench(2).unwrap() {
            let sol = game_value(&m, SolveMode::Exact).unwrap();
            assert_eq!(sol.row_value, sol.col_value);
            if !m.cols.is_empty() {
                assert!(!sol.value.is_negative(), "{name}");
            }
        }
    }

    #[test]
    fn capacity_is_enforced() {
        let rows: Vec<TruthTable> = (0..65).map(|v| TruthTable::from_u64(3, v).unwrap()).collect();
        let m = build_matrix(rows, vec![OracleProbe::point(0)], 3).unwrap();
        assert!(matches!(game_value(&m, SolveMode::Exact), Err(GameError::Capacity { .. })));
    }

    #[test]
    fn build_rejects_bad_inputs() {
        let h = vec![TruthTable::zero(2).unwrap()];
        assert!(matches!(
            build_matrix(h.clone(), vec![OracleProbe::point(0)], 3),
            Err(GameError::Arity { .. })
        ));
        assert!(build_matrix(h, vec![OracleProbe::point(4)], 2).is_err());
        assert!(OracleProbe::non_adaptive(vec![1, 1], TruthTable::zero(2).unwrap()).is_err());
        let repeat = ProbeTree::Node {
            point: 1,
            zero: Box::new(ProbeTree::Leaf(false)),
            one: Box::new(ProbeTree::Node {
                point: 1,
                zero: Box::new(ProbeTree::Leaf(false)),
                one: Box::new(ProbeTree::Leaf(true)),
            }),
        };
        assert!(OracleProbe::Tree(repeat).validate(2).is_err());
    }

    #[test]
    fn tree_acceptance_is_leaf_weighted() {
        let t = OracleProbe::Tree(ProbeTree::Node {
            point: 0,
            zero: Box::new(ProbeTree::Leaf(true)),
            one: Box::new(ProbeTree::Node {
                point: 1,
                zero: Box::new(ProbeTree::Leaf(false)),
                one: Box::new(ProbeTree::Leaf(true)),
            }),
        });
        assert_eq!(t.random_acceptance(), q(3, 4));
        assert_eq!(t.complement().random_acceptance(), q(1, 4));
        // brute force over all 16 two-input oracles
        let hits = (0..16u64)
            .filter(|&v| t.eval(&TruthTable::from_u64(2, v).unwrap()))
            .count();
        assert_eq!(hits, 12);
    }

    #[test]
    fn small_support_cases() {
        let mut r = rng::from_seed(5);
        let pure = GameMatrix::from_i64(&[&[1, 1], &[0, 0]], 1).unwrap();
        let sol = game_value(&pure, SolveMode::Exact).unwrap();
        let s = small_support(&pure, &sol, 0.1, 8, &mut r).unwrap();
        assert_eq!(s.row.support_size(), 1);
        let pennies = GameMatrix::from_i64(&[&[0, 1], &[1, 0]], 1).unwrap();
        let sol = game_value(&pennies, SolveMode::Exact).unwrap();
        let s = small_support(&pennies, &sol, 0.1, 8, &mut r).unwrap();
        assert_eq!(s.k_row, support_bound(2, 0.1));
        assert!(s.row_value <= q(6, 10));
        let wide = small_support(&pennies, &sol, 1.0, 1, &mut r).unwrap();
        assert!(wide.first_try());
    }

    #[test]
    fn samplers_are_exact_enough() {
        let one = MixedStrategy {
            side: Side::Row,
            weights: Weights::Uniform(vec![4]),
        };
        let s = strategy_to_sampler(&one).unwrap();
        assert_eq!(s.bits, 0);
        assert!(s.total_variation().is_zero());
        let two = strategy_to_sampler(&MixedStrategy {
            side: Side::Row,
            weights: Weights::Uniform(vec![1, 2]),
        })
        .unwrap();
        assert_eq!(two.bits, 1);
        assert!(two.total_variation().is_zero());
        let three = strategy_to_sampler(&MixedStrategy {
            side: Side::Row,
            weights: Weights::Uniform(vec![0, 1, 2]),
        })
        .unwrap();
        assert_eq!(three.bits, 2);
        // rejection probability 1/4 per round, ten rounds
        let tv = three.total_variation();
        assert_eq!(tv, BigRational::new(BigInt::from(2), BigInt::from(3)) * q(1, 1 << 20));
        assert!(tv <= q(1, 1024));
    }

    proptest! {
        #[test]
        fn sampler_distribution_sums_to_one(support in prop::collection::vec(0usize..6, 1..40)) {
            let s = strategy_to_sampler(&MixedStrategy { side: Side::Row, weights: Weights::Uniform(support) }).unwrap();
            let total = s.distribution().values().fold(BigRational::zero(), |a, b| a + b);
            prop_assert_eq!(total, BigRational::one());
            prop_assert!(s.total_variation() <= q(1, 1024));
        }

        #[test]
        fn random_games_satisfy_duality(entries in prop::collection::vec(prop::collection::vec(-4i64..=4, 3), 1..5)) {
            let refs: Vec<&[i64]> = entries.iter().map(Vec::as_slice).collect();
            let m = GameMatrix::from_i64(&refs, 4).unwrap();
            let sol = game_value(&m, SolveMode::Exact).unwrap();
            prop_assert_eq!(&sol.row_value, &sol.col_value);
            // the row player does at least as well mixing as with any pure row
            let pure_minimax = m.entries.iter().map(|r| r.iter().max().unwrap().clone()).min().unwrap();
            prop_assert!(sol.value <= pure_minimax);
        }
    }
}
