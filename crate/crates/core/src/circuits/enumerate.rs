//! Exhaustive search over straight-line programs by wire count.
//!
//! The search walks gate sequences depth-first. Three rules keep it small
//! without losing any minimum-size circuit:
//! * a gate must compute a function not already present;
//! * two consecutive gates where the later one ignores the earlier must
//!   appear in increasing order of their truth tables (any DAG can be
//!   topologically reordered to satisfy this);
//! * the number of unconsumed gates must be reducible to one output with
//!   the wires left in the budget.

#[cfg(test)]
use std::collections::HashMap;

use super::{Basis, Circuit, CircuitError, Gate, GateKind, Node, Result};
use crate::boolean::TruthTable;

/// Largest arity the search handles (tables fit in 16 bits).
pub const SEARCH_MAX_ARITY: usize = 4;
/// Largest size accepted by [`enumerate_functions`].
pub const ENUMERATE_MAX_SIZE: usize = 12;

const UNSEEN: u8 = u8::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SearchLimits {
    /// Largest wire budget any search may use.
    pub max_size: usize,
    /// Cap on candidate gates examined before giving up.
    pub max_steps: u64,
}

impl Default for SearchLimits {
    fn default() -> Self {
        SearchLimits {
            max_size: 16,
            max_steps: 4_000_000_000,
        }
    }
}

/// Minimum circuit size of every `n`-input function up to a budget.
#[derive(Debug, Clone)]
pub struct SizeTable {
    n: usize,
    basis: Basis,
    budget: usize,
    best: Vec<u8>,
    steps: u64,
}

impl SizeTable {
    pub fn compute(n: usize, basis: &Basis, budget: usize, limits: SearchLimits) -> Result<Self> {
        check_search(n, budget, limits)?;
        let mut e = Engine::new(n, basis, budget, None, limits);
        e.dfs(0, 0)?;
        Ok(SizeTable {
            n,
            basis: basis.clone(),
            budget,
            best: e.best,
            steps: e.steps,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn basis(&self) -> &Basis {
        &self.basis
    }

    pub fn budget(&self) -> usize {
        self.budget
    }

    /// Candidate gates examined while building the table.
    pub fn steps(&self) -> u64 {
        self.steps
    }

    /// `Some(size)` when the minimum is within the budget.
    pub fn min_size_of(&self, table: u64) -> Option<usize> {
        let b = self.best[table as usize];
        (b != UNSEEN).then_some(b as usize)
    }

    pub fn min_size(&self, t: &TruthTable) -> Option<usize> {
        if t.n() != self.n {
            return None;
        }
        self.min_size_of(t.as_u64()?)
    }

    /// Number of functions with a circuit of size at most `s`.
    pub fn count(&self, s: usize) -> u64 {
        self.best
            .iter()
            .filter(|&&b| b != UNSEEN && (b as usize) <= s)
            .count() as u64
    }

    /// All functions of size at most `s`, in table order.
    pub fn functions(&self, s: usize) -> Vec<TruthTable> {
        self.best
            .iter()
            .enumerate()
            .filter(|(_, &b)| b != UNSEEN && (b as usize) <= s)
            .map(|(t, _)| TruthTable::from_u64(self.n, t as u64).expect("in range"))
            .collect()
    }

    /// Raw table values of size at most `s`.
    pub fn raw_functions(&self, s: usize) -> Vec<u64> {
        self.best
            .iter()
            .enumerate()
            .filter(|(_, &b)| b != UNSEEN && (b as usize) <= s)
            .map(|(t, _)| t as u64)
            .collect()
    }

    /// True when every function of arity `n` has size within the budget.
    pub fn complete(&self) -> bool {
        self.best.iter().all(|&b| b != UNSEEN)
    }
}

fn check_search(n: usize, budget: usize, limits: SearchLimits) -> Result<()> {
    if n == 0 || n > SEARCH_MAX_ARITY {
        return Err(CircuitError::Capacity(format!(
            "exhaustive search supports 1 <= n <= {SEARCH_MAX_ARITY}, got {n}"
        )));
    }
    if budget > limits.max_size || budget >= UNSEEN as usize {
        return Err(CircuitError::Capacity(format!(
            "size budget {budget} exceeds limit {}",
            limits.max_size
        )));
    }
    Ok(())
}

/// All `n`-input functions computable with at most `s` wires.
pub fn enumerate_functions(n: usize, basis: &Basis, s: usize) -> Result<Vec<TruthTable>> {
    if s > ENUMERATE_MAX_SIZE {
        return Err(CircuitError::Capacity(format!(
            "enumeration supports s <= {ENUMERATE_MAX_SIZE}, got {s}"
        )));
    }
    Ok(SizeTable::compute(n, basis, s, SearchLimits::default())?.functions(s))
}

/// Smallest circuit for `target` by iterative deepening.
pub(crate) fn search_min(
    target: &TruthTable,
    basis: &Basis,
    limits: SearchLimits,
) -> Result<(usize, Circuit)> {
    let n = target.n();
    check_search(n, 0, limits)?;
    let t = target.as_u64().expect("n <= 4");
    if let Some(node) = free_node(n, t) {
        let c = Circuit::new(n, basis.clone(), vec![], node)?;
        return Ok((0, c));
    }
    for budget in 1..=limits.max_size {
        check_search(n, budget, limits)?;
        let mut e = Engine::new(n, basis, budget, Some(t), limits);
        e.dfs(0, 0)?;
        if let Some(c) = e.found {
            return Ok((c.size(), c));
        }
    }
    Err(CircuitError::Capacity(format!(
        "no circuit with at most {} wires",
        limits.max_size
    )))
}

/// Searches only at the given budget; `Some` iff a circuit of that size exists.
pub(crate) fn search_within(
    target: &TruthTable,
    basis: &Basis,
    budget: usize,
    limits: SearchLimits,
) -> Result<Option<Circuit>> {
    let n = target.n();
    check_search(n, budget, limits)?;
    let t = target.as_u64().expect("n <= 4");
    if let Some(node) = free_node(n, t) {
        return Ok(Some(Circuit::new(n, basis.clone(), vec![], node)?));
    }
    let mut e = Engine::new(n, basis, budget, Some(t), limits);
    e.dfs(0, 0)?;
    Ok(e.found)
}

/// Input or constant computing `t`, if any.
fn free_node(n: usize, t: u64) -> Option<Node> {
    let mask = mask_for(n);
    if t == 0 {
        return Some(Node::Const(false));
    }
    if t == mask {
        return Some(Node::Const(true));
    }
    (0..n)
        .find(|&i| projection(n, i) == t)
        .map(Node::Input)
}

fn mask_for(n: usize) -> u64 {
    (1u64 << (1 << n)) - 1
}

fn projection(n: usize, i: usize) -> u64 {
    const P: [u64; 4] = [0xaaaa, 0xcccc, 0xf0f0, 0xff00];
    P[i] & mask_for(n)
}

struct Engine {
    n: usize,
    mask: u64,
    basis: Basis,
    ops: Vec<(GateKind, usize)>,
    max_fanin: usize,
    min_cost: usize,
    tables: Vec<u64>,
    uses: Vec<u32>,
    defs: Vec<(GateKind, Vec<usize>)>,
    present: Vec<u64>,
    best: Vec<u8>,
    budget: usize,
    target: Option<u64>,
    found: Option<Circuit>,
    steps: u64,
    max_steps: u64,
    buf: Vec<u64>,
}

impl Engine {
    fn new(n: usize, basis: &Basis, budget: usize, target: Option<u64>, limits: SearchLimits) -> Self {
        let mask = mask_for(n);
        let universe = 1usize << (1 << n);
        let mut tables: Vec<u64> = (0..n).map(|i| projection(n, i)).collect();
        tables.push(0);
        tables.push(mask);
        let ops: Vec<(GateKind, usize)> = basis
            .gates()
            .iter()
            .map(|&(k, f)| (k, if k.is_unary() { 1 } else { f.max() }))
            .collect();
        let max_fanin = ops
            .iter()
            .filter(|(k, _)| !k.is_unary())
            .map(|&(_, f)| f)
            .max()
            .unwrap_or(1);
        let min_cost = if ops.iter().any(|(k, _)| k.is_unary()) { 1 } else { 2 };
        let mut best = vec![UNSEEN; universe];
        let mut present = vec![0u64; (universe + 63) / 64];
        for &t in &tables {
            best[t as usize] = 0;
            present[(t >> 6) as usize] |= 1 << (t & 63);
        }
        Engine {
            n,
            mask,
            basis: basis.clone(),
            ops,
            max_fanin,
            min_cost,
            uses: vec![0; tables.len()],
            tables,
            defs: Vec::new(),
            present,
            best,
            budget,
            target,
            found: None,
            steps: 0,
            max_steps: limits.max_steps,
            buf: Vec::with_capacity(32),
        }
    }

    fn first_gate(&self) -> usize {
        self.n + 2
    }

    fn is_present(&self, t: u64) -> bool {
        (self.present[(t >> 6) as usize] >> (t & 63)) & 1 == 1
    }

    fn toggle_present(&mut self, t: u64) {
        self.present[(t >> 6) as usize] ^= 1 << (t & 63);
    }

    /// Largest drop in unconsumed gates achievable with `rem` more wires.
    fn reducible(&self, rem: usize) -> usize {
        if rem < 2 || self.max_fanin < 2 {
            return 0;
        }
        let f = self.max_fanin.min(rem);
        rem - (rem + f - 1) / f
    }

    /// Returns `Ok(true)` once the target has been found.
    fn dfs(&mut self, cost: usize, dangling: usize) -> Result<bool> {
        for op in 0..self.ops.len() {
            let (kind, maxfan) = self.ops[op];
            if kind.is_unary() {
                if cost + 1 > self.budget {
                    continue;
                }
                for a in 0..self.tables.len() {
                    if a == self.n || a == self.n + 1 {
                        continue;
                    }
                    if self.try_gate(kind, &[a], cost + 1, dangling)? {
                        return Ok(true);
                    }
                }
                continue;
            }
            let with_consts = matches!(kind, GateKind::Mod(_) | GateKind::Maj);
            let cands: Vec<usize> = (0..self.tables.len())
                .filter(|&i| with_consts || (i != self.n && i != self.n + 1))
                .collect();
            let top = maxfan.min(self.budget - cost).min(cands.len());
            for k in 2..=top {
                let mut idx: Vec<usize> = (0..k).collect();
                let mut args = vec![0usize; k];
                loop {
                    for (slot, &i) in args.iter_mut().zip(&idx) {
                        *slot = cands[i];
                    }
                    if self.try_gate(kind, &args, cost + k, dangling)? {
                        return Ok(true);
                    }
                    // next k-combination of cands
                    let mut p = k;
                    while p > 0 && idx[p - 1] == cands.len() - k + (p - 1) {
                        p -= 1;
                    }
                    if p == 0 {
                        break;
                    }
                    idx[p - 1] += 1;
                    for q in p..k {
                        idx[q] = idx[q - 1] + 1;
                    }
                }
            }
        }
        Ok(false)
    }

    fn try_gate(&mut self, kind: GateKind, args: &[usize], cost: usize, dangling: usize) -> Result<bool> {
        self.steps += 1;
        if self.steps > self.max_steps {
            return Err(CircuitError::Capacity(format!(
                "search exceeded {} steps",
                self.max_steps
            )));
        }
        self.buf.clear();
        self.buf.extend(args.iter().map(|&a| self.tables[a]));
        let t = kind.apply_words(&self.buf) & self.mask;
        if self.is_present(t) {
            return Ok(false);
        }
        let last = self.tables.len() - 1;
        if last >= self.first_gate() && !args.contains(&last) && t <= self.tables[last] {
            return Ok(false);
        }
        let first_gate = self.first_gate();
        let consumed = args
            .iter()
            .filter(|&&a| a >= first_gate && self.uses[a] == 0)
            .count();
        let nd = dangling + 1 - consumed;
        let rem = self.budget - cost;
        if nd - 1 > self.reducible(rem) {
            return Ok(false);
        }

        self.tables.push(t);
        self.uses.push(0);
        for &a in args {
            self.uses[a] += 1;
        }
        self.defs.push((kind, args.to_vec()));
        self.toggle_present(t);

        if (cost as u8) < self.best[t as usize] {
            self.best[t as usize] = cost as u8;
        }
        let mut stop = false;
        if self.target == Some(t) {
            self.found = Some(self.witness());
            stop = true;
        } else if rem >= self.min_cost {
            stop = self.dfs(cost, nd)?;
        }

        self.toggle_present(t);
        self.defs.pop();
        for &a in args {
            self.uses[a] -= 1;
        }
        self.uses.pop();
        self.tables.pop();
        Ok(stop)
    }

    /// Circuit for the most recent gate, restricted to its cone.
    fn witness(&self) -> Circuit {
        let n = self.n;
        let fg = self.first_gate();
        let node = |i: usize| -> Node {
            if i < n {
                Node::Input(i)
            } else if i == n {
                Node::Const(false)
            } else if i == n + 1 {
                Node::Const(true)
            } else {
                Node::Gate(i - fg)
            }
        };
        let gates: Vec<Gate> = self
            .defs
            .iter()
            .map(|(k, a)| Gate {
                kind: *k,
                args: a.iter().map(|&i| node(i)).collect(),
            })
            .collect();
        let out = Node::Gate(gates.len() - 1);
        Circuit::new(n, self.basis.clone(), gates, out)
            .expect("search builds well-formed circuits")
            .pruned()
    }
}

/// Minimum sizes keyed by raw table.
#[cfg(test)]
pub(crate) fn size_map(table: &SizeTable, s: usize) -> HashMap<u64, usize> {
    table
        .raw_functions(s)
        .into_iter()
        .map(|t| (t, table.min_size_of(t).expect("listed")))
        .collect()
}
