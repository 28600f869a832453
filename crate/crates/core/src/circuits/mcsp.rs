//! Exact minimum circuit size, its decision version, and the counting and
//! random-hardness experiments.

use std::collections::BTreeMap;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::enumerate::{search_min, search_within, SearchLimits, SizeTable, SEARCH_MAX_ARITY};
use super::{dnf_circuit, Basis, Circuit, CircuitBuilder, CircuitError, GateKind, Node, Result};
use crate::boolean::TruthTable;
use crate::rng::Rng;

/// A table together with a size threshold.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct McspInstance {
    pub table: TruthTable,
    pub size: usize,
}

impl McspInstance {
    pub fn new(table: TruthTable, size: usize) -> Result<Self> {
        if size as u64 > table.len() {
            return Err(CircuitError::InvalidParameter(format!(
                "size {size} exceeds 2^n = {}",
                table.len()
            )));
        }
        Ok(McspInstance { table, size })
    }
}

/// Minimum size and a witness circuit, for `n <= 4`.
pub fn exact_mcsp(table: &TruthTable, basis: &Basis) -> Result<(usize, Circuit)> {
    exact_mcsp_with(table, basis, SearchLimits::default())
}

pub fn exact_mcsp_with(
    table: &TruthTable,
    basis: &Basis,
    limits: SearchLimits,
) -> Result<(usize, Circuit)> {
    guard_arity(table.n())?;
    search_min(table, basis, limits)
}

fn guard_arity(n: usize) -> Result<()> {
    if n > SEARCH_MAX_ARITY {
        Err(CircuitError::Capacity(format!(
            "exact search supports n <= {SEARCH_MAX_ARITY}, got {n}"
        )))
    } else {
        Ok(())
    }
}

/// Size of an explicit DNF circuit for `table`, when the basis can express it.
fn dnf_upper_bound(table: &TruthTable, basis: &Basis) -> Option<usize> {
    if ![GateKind::Not, GateKind::And, GateKind::Or]
        .iter()
        .all(|&k| basis.contains(k))
    {
        return None;
    }
    let n = table.n();
    let terms: Vec<Vec<(usize, bool)>> = table
        .ones()
        .map(|x| (0..n).map(|i| (i, (x >> i) & 1 == 1)).collect())
        .collect();
    dnf_circuit(n, &terms, basis.clone()).ok().map(|c| c.size())
}

/// Whether `inst.table` has a circuit of at most `inst.size` wires.
pub fn mcsp_decide(inst: &McspInstance, basis: &Basis) -> Result<bool> {
    guard_arity(inst.table.n())?;
    if let Some(ub) = dnf_upper_bound(&inst.table, basis) {
        if inst.size >= ub {
            return Ok(true);
        }
    }
    let limits = SearchLimits {
        max_size: inst.size.max(SearchLimits::default().max_size),
        ..SearchLimits::default()
    };
    Ok(search_within(&inst.table, basis, inst.size, limits)?.is_some())
}

/// Size threshold as a function of arity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum SizeFunction {
    Constant(usize),
    PerArity(BTreeMap<usize, usize>),
    /// `floor(2^(n * num / den))`.
    Exponential { num: u32, den: u32 },
}

impl SizeFunction {
    pub fn at(&self, n: usize) -> Result<usize> {
        match self {
            SizeFunction::Constant(s) => Ok(*s),
            SizeFunction::PerArity(m) => m.get(&n).copied().ok_or_else(|| {
                CircuitError::InvalidParameter(format!("no size listed for n={n}"))
            }),
            SizeFunction::Exponential { num, den } => {
                if *den == 0 {
                    return Err(CircuitError::InvalidParameter("zero denominator".into()));
                }
                Ok(2f64.powf(n as f64 * f64::from(*num) / f64::from(*den)).floor() as usize)
            }
        }
    }
}

/// Decision with the threshold taken from a size function.
pub fn mcsp_decide_param(table: &TruthTable, size_fn: &SizeFunction, basis: &Basis) -> Result<bool> {
    let s = size_fn.at(table.n())?;
    let s = s.min(table.len() as usize);
    mcsp_decide(&McspInstance::new(table.clone(), s)?, basis)
}

/// The first table (in hex order) of maximum circuit size, with that size.
pub fn maxhard_tt(n: usize, basis: &Basis) -> Result<(TruthTable, usize)> {
    maxhard_tt_with(n, basis, SearchLimits::default())
}

pub fn maxhard_tt_with(n: usize, basis: &Basis, limits: SearchLimits) -> Result<(TruthTable, usize)> {
    guard_arity(n)?;
    for budget in 0..=limits.max_size {
        let table = SizeTable::compute(n, basis, budget, limits)?;
        if table.complete() {
            let universe = 1u64 << (1 << n);
            let mut best = (0u64, 0usize);
            for t in 0..universe {
                let s = table.min_size_of(t).expect("complete");
                if s > best.1 {
                    best = (t, s);
                }
            }
            return Ok((TruthTable::from_u64(n, best.0)?, best.1));
        }
    }
    Err(CircuitError::Capacity(format!(
        "not every {n}-input function fits in {} wires",
        limits.max_size
    )))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountingRow {
    pub n: usize,
    pub s: usize,
    pub count: u64,
    pub log2_count: f64,
    /// `50 s log2 s`.
    pub log2_bound: f64,
    pub within_bound: bool,
    /// Count is at least the previous row's.
    pub monotone: bool,
}

/// Counts of functions with size at most `s` for each `s` in `sizes`,
/// against the bound `2^(50 s log2 s)`.
pub fn counting_report(n: usize, basis: &Basis, sizes: &[usize]) -> Result<Vec<CountingRow>> {
    let top = sizes.iter().copied().max().unwrap_or(0);
    let table = SizeTable::compute(n, basis, top, SearchLimits::default())?;
    let mut prev = 0u64;
    Ok(sizes
        .iter()
        .map(|&s| {
            let count = table.count(s);
            let log2_count = (count as f64).log2();
            let log2_bound = counting_log2_bound(s);
            let row = CountingRow {
                n,
                s,
                count,
                log2_count,
                log2_bound,
                within_bound: log2_count <= log2_bound,
                monotone: count >= prev,
            };
            prev = count;
            row
        })
        .collect())
}

pub fn counting_log2_bound(s: usize) -> f64 {
    if s < 2 {
        0.0
    } else {
        50.0 * s as f64 * (s as f64).log2()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HardnessReport {
    pub n: usize,
    pub s: usize,
    pub delta: f64,
    pub basis: String,
    pub trials: u64,
    /// Sampled functions with some small circuit of advantage at least `delta`.
    pub hits: u64,
    pub fraction: Option<f64>,
    /// Natural log of `exp(-delta^2 2^(n-1) + 50 s log2 s)`.
    pub ln_bound: f64,
    /// True when every circuit of size at most `s` was checked.
    pub exact: bool,
    pub method: String,
    /// Number of distinct small functions checked per variable subset.
    pub class_size: u64,
}

/// Fraction of random `n`-input functions that some circuit of size at most
/// `s` approximates with advantage at least `delta`.
///
/// A circuit with `s` wires reads at most `s` inputs, so it computes a
/// junta on `m = min(s, n)` variables. When `m <= 4` the whole class is the
/// exhaustive table at arity `m`, applied to every `m`-subset of the inputs,
/// and the answer is exact. Otherwise `samples` random circuits stand in and
/// the result is only an estimate.
pub fn hardness_experiment(
    n: usize,
    s: usize,
    delta: f64,
    trials: u64,
    basis: &Basis,
    samples: usize,
    rng: &mut Rng,
) -> Result<HardnessReport> {
    if !(0.0..=0.5).contains(&delta) {
        return Err(CircuitError::InvalidParameter(format!("delta {delta} outside [0, 1/2]")));
    }
    TruthTable::zero(n)?;
    let ln_bound = -delta * delta * 2f64.powi(n as i32 - 1) + counting_log2_bound(s);
    let m = s.min(n).max(1);
    let mut report = HardnessReport {
        n,
        s,
        delta,
        basis: basis.name().to_string(),
        trials,
        hits: 0,
        fraction: None,
        ln_bound,
        exact: m <= SEARCH_MAX_ARITY,
        method: String::new(),
        class_size: 0,
    };
    let len = 1u64 << n;
    let threshold = ((0.5 + delta) * len as f64).ceil() as u64;

    if m <= SEARCH_MAX_ARITY {
        report.method = format!("junta reduction over {m}-subsets");
        let limits = SearchLimits {
            max_size: s.max(SearchLimits::default().max_size),
            ..SearchLimits::default()
        };
        let class = SizeTable::compute(m, basis, s, limits)?.raw_functions(s);
        report.class_size = class.len() as u64;
        let subsets = combinations(n, m);
        for _ in 0..trials {
            let f = TruthTable::sample(n, rng)?;
            if junta_hit(&f, m, &subsets, &class, threshold) {
                report.hits += 1;
            }
        }
    } else {
        report.method = format!("estimate from {samples} random circuits");
        let tables: Vec<TruthTable> = (0..samples)
            .map(|_| random_circuit(n, s, basis, rng).and_then(|c| c.evaluate_all()))
            .collect::<Result<_>>()?;
        report.class_size = tables.len() as u64;
        for _ in 0..trials {
            let f = TruthTable::sample(n, rng)?;
            let hit = tables
                .iter()
                .any(|g| f.matches(g).map(|k| k >= threshold).unwrap_or(false));
            if hit {
                report.hits += 1;
            }
        }
    }
    if trials > 0 {
        report.fraction = Some(report.hits as f64 / trials as f64);
    }
    Ok(report)
}

fn combinations(n: usize, m: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut idx: Vec<usize> = (0..m).collect();
    loop {
        out.push(idx.clone());
        let mut p = m;
        while p > 0 && idx[p - 1] == n - m + (p - 1) {
            p -= 1;
        }
        if p == 0 {
            return out;
        }
        idx[p - 1] += 1;
        for q in p..m {
            idx[q] = idx[q - 1] + 1;
        }
    }
}

/// Some function in `class` (arity `m`, closed under renaming variables),
/// placed on some subset of the inputs, agrees with `f` on `threshold` points.
fn junta_hit(f: &TruthTable, m: usize, subsets: &[Vec<usize>], class: &[u64], threshold: u64) -> bool {
    let cells = 1usize << m;
    let mut ones = vec![0u64; cells];
    let mut total = vec![0u64; cells];
    for vars in subsets {
        ones.iter_mut().for_each(|c| *c = 0);
        total.iter_mut().for_each(|c| *c = 0);
        for x in 0..f.len() {
            let a = vars
                .iter()
                .enumerate()
                .fold(0usize, |acc, (j, &v)| acc | ((((x >> v) & 1) as usize) << j));
            total[a] += 1;
            ones[a] += u64::from(f.get(x));
        }
        for &g in class {
            let agree: u64 = (0..cells)
                .map(|a| {
                    if (g >> a) & 1 == 1 {
                        ones[a]
                    } else {
                        total[a] - ones[a]
                    }
                })
                .sum();
            if agree >= threshold {
                return true;
            }
        }
    }
    false
}

/// A random circuit using at most `s` wires.
pub fn random_circuit(n: usize, s: usize, basis: &Basis, rng: &mut Rng) -> Result<Circuit> {
    let mut b = CircuitBuilder::new(n, basis.clone());
    let mut pool: Vec<Node> = (0..n).map(Node::Input).collect();
    let mut left = s;
    let mut last = Node::Input(rng.gen_range(0..n));
    while left > 0 {
        let options: Vec<(GateKind, usize)> = basis
            .gates()
            .iter()
            .filter_map(|&(k, f)| {
                let lo = if k.is_unary() { 1 } else { 2 };
                let hi = if k.is_unary() { 1 } else { f.max().min(left) };
                (lo <= left && lo <= hi).then_some((k, hi))
            })
            .collect();
        if options.is_empty() {
            break;
        }
        let (kind, hi) = options[rng.gen_range(0..options.len())];
        let k = if kind.is_unary() { 1 } else { rng.gen_range(2..=hi) };
        let args: Vec<Node> = (0..k).map(|_| pool[rng.gen_range(0..pool.len())]).collect();
        last = b.gate(kind, args);
        pool.push(last);
        left -= k;
    }
    Ok(b.finish(last)?.pruned())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    fn tt(s: &str) -> TruthTable {
        TruthTable::from_bit_str(s).unwrap()
    }

    #[test]
    fn free_functions_cost_nothing() {
        let aon = Basis::aon();
        assert_eq!(exact_mcsp(&tt("0000"), &aon).unwrap().0, 0);
        assert_eq!(exact_mcsp(&tt("1111"), &aon).unwrap().0, 0);
        assert_eq!(exact_mcsp(&tt("1010"), &aon).unwrap().0, 1);
        assert_eq!(exact_mcsp(&tt("0101"), &aon).unwrap().0, 0);
        assert_eq!(exact_mcsp(&tt("0011"), &aon).unwrap().0, 0);
    }

    /// Independent check of the XOR size: hand-enumerate every AON circuit
    /// shape with at most 6 wires on 2 inputs as formulas over the 4-entry
    /// tables, and confirm none computes XOR, while the 7-wire circuit
    /// AND(OR(a,b), NOT(AND(a,b))) does.
    #[test]
    fn xor_needs_seven_wires() {
        // closure of sets of tables reachable with w wires, sharing allowed
        fn reach(sets: &mut std::collections::HashSet<Vec<u8>>, cur: Vec<u8>, w: usize, budget: usize, hit: &mut bool) {
            if cur.contains(&0b0110) {
                *hit = true;
            }
            if !sets.insert(cur.clone()) {
                return;
            }
            for i in 0..cur.len() {
                if w + 1 <= budget {
                    let mut c = cur.clone();
                    c.push(!cur[i] & 0xf);
                    reach(sets, c, w + 1, budget, hit);
                }
                for j in i + 1..cur.len() {
                    if w + 2 <= budget {
                        for v in [cur[i] & cur[j], cur[i] | cur[j]] {
                            let mut c = cur.clone();
                            c.push(v);
                            reach(sets, c, w + 2, budget, hit);
                        }
                    }
                }
            }
        }
        let mut hit6 = false;
        reach(&mut Default::default(), vec![0b1010, 0b1100], 0, 6, &mut hit6);
        assert!(!hit6);
        let a = 0b1010u8;
        let b = 0b1100u8;
        assert_eq!((a | b) & !(a & b) & 0xf, 0b0110);
        let (s, c) = exact_mcsp(&tt("0110"), &Basis::aon()).unwrap();
        assert_eq!(s, 7);
        assert_eq!(c.evaluate_all().unwrap(), tt("0110"));
    }

    #[test]
    fn decide_examples() {
        let aon = Basis::aon();
        let one = McspInstance::new(tt("1111"), 1).unwrap();
        assert!(mcsp_decide(&one, &aon).unwrap());
        let (hard, hs) = maxhard_tt(2, &aon).unwrap();
        assert!(!mcsp_decide(&McspInstance::new(hard.clone(), 0).unwrap(), &aon).unwrap());
        let and = tt("0001");
        let (s, _) = exact_mcsp(&and, &aon).unwrap();
        assert!(mcsp_decide(&McspInstance::new(and.clone(), s).unwrap(), &aon).unwrap());
        assert!(!mcsp_decide(&McspInstance::new(and, s - 1).unwrap(), &aon).unwrap());
        assert!(hs >= 7);
        assert!(McspInstance::new(tt("0001"), 5).is_err());
    }

    #[test]
    fn parameterized_decide() {
        let aon = Basis::aon();
        let f = tt("0001");
        assert!(mcsp_decide_param(&f, &SizeFunction::Constant(2), &aon).unwrap());
        assert!(!mcsp_decide_param(&f, &SizeFunction::Constant(1), &aon).unwrap());
        let exp = SizeFunction::Exponential { num: 1, den: 2 };
        assert_eq!(exp.at(4).unwrap(), 4);
        let per = SizeFunction::PerArity([(3, 2)].into_iter().collect());
        assert!(per.at(2).is_err());
    }

    #[test]
    fn maxhard_two_is_deterministic_and_maximal() {
        let aon = Basis::aon();
        let (h, s) = maxhard_tt(2, &aon).unwrap();
        assert_eq!(maxhard_tt(2, &aon).unwrap(), (h.clone(), s));
        for t in 0..16u64 {
            let f = TruthTable::from_u64(2, t).unwrap();
            let (fs, _) = exact_mcsp(&f, &aon).unwrap();
            assert!(fs <= s);
            if fs == s {
                assert!(h <= f);
            }
        }
    }

    #[test]
    fn decision_matches_exact_size_n3() {
        let aon = Basis::aon();
        let table = SizeTable::compute(3, &aon, 8, SearchLimits::default()).unwrap();
        for t in (0..256u64).step_by(5) {
            let f = TruthTable::from_u64(3, t).unwrap();
            for s in 0..=8 {
                let want = table.min_size_of(t).map_or(false, |m| m <= s);
                let got = mcsp_decide(&McspInstance::new(f.clone(), s).unwrap(), &aon).unwrap();
                assert_eq!(got, want, "t={t:#x} s={s}");
            }
        }
    }

    #[test]
    fn capacity_errors() {
        let f = TruthTable::zero(5).unwrap();
        assert!(matches!(exact_mcsp(&f, &Basis::aon()), Err(CircuitError::Capacity(_))));
        assert!(maxhard_tt(5, &Basis::aon()).is_err());
    }

    #[test]
    fn counting_rows() {
        let rows = counting_report(2, &Basis::aon(), &[2, 3, 4]).unwrap();
        assert!(rows.iter().all(|r| r.within_bound && r.monotone));
        assert_eq!(rows[0].count, 8);
    }

    #[test]
    fn hardness_zero_trials_is_empty() {
        let r = hardness_experiment(6, 2, 0.25, 0, &Basis::aon(), 0, &mut rng::from_seed(1)).unwrap();
        assert_eq!(r.trials, 0);
        assert_eq!(r.fraction, None);
    }

    #[test]
    fn hardness_half_delta_counts_class_members() {
        // delta = 1/2 needs exact agreement: the hit rate is the class density.
        let aon = Basis::aon();
        let mut r = rng::from_seed(9);
        let rep = hardness_experiment(2, 3, 0.5, 4000, &aon, 0, &mut r).unwrap();
        let density = SizeTable::compute(2, &aon, 3, SearchLimits::default()).unwrap().count(3) as f64 / 16.0;
        assert!((rep.fraction.unwrap() - density).abs() < 0.03, "{rep:?}");
        assert!(rep.exact);
    }

    #[test]
    fn junta_reduction_matches_direct_check() {
        // n = 4 with s = 2: compare against the full arity-4 class.
        let aon = Basis::aon();
        let full = SizeTable::compute(4, &aon, 2, SearchLimits::default()).unwrap().raw_functions(2);
        let small = SizeTable::compute(2, &aon, 2, SearchLimits::default()).unwrap().raw_functions(2);
        let subsets = combinations(4, 2);
        let mut r = rng::from_seed(4);
        for _ in 0..200 {
            let f = TruthTable::sample(4, &mut r).unwrap();
            for threshold in [10u64, 12, 13] {
                let direct = full.iter().any(|&g| {
                    f.matches(&TruthTable::from_u64(4, g).unwrap()).unwrap() >= threshold
                });
                assert_eq!(junta_hit(&f, 2, &subsets, &small, threshold), direct);
            }
        }
    }

    #[test]
    fn random_circuits_respect_budget() {
        let mut r = rng::from_seed(2);
        for s in 0..10 {
            let c = random_circuit(6, s, &Basis::parse("ac0").unwrap(), &mut r).unwrap();
            assert!(c.size() <= s);
        }
    }
}
