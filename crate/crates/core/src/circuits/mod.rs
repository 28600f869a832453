//! Gate-level circuits over a configurable basis, bulk evaluation, and
//! exhaustive small-circuit search.
//!
//! Size counts wires: a gate of fan-in `k` contributes `k`, input taps and
//! constants contribute nothing.

mod enumerate;
mod mcsp;

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::boolean::{BooleanError, TruthTable, MAX_ARITY};

pub use enumerate::{enumerate_functions, SearchLimits, SizeTable, ENUMERATE_MAX_SIZE, SEARCH_MAX_ARITY};
pub use mcsp::{
    counting_log2_bound, counting_report, exact_mcsp, exact_mcsp_with, hardness_experiment,
    maxhard_tt, maxhard_tt_with, mcsp_decide, mcsp_decide_param, random_circuit, CountingRow,
    HardnessReport, McspInstance, SizeFunction,
};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CircuitError {
    #[error("unknown basis {0:?}")]
    UnknownBasis(String),
    #[error("malformed circuit: {0}")]
    Malformed(String),
    #[error("gate {kind} not in basis {basis}")]
    NotInBasis { kind: GateKind, basis: String },
    #[error("capacity exceeded: {0}")]
    Capacity(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Boolean(#[from] BooleanError),
}

pub type Result<T> = std::result::Result<T, CircuitError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GateKind {
    Not,
    And,
    Or,
    /// Outputs 1 iff the number of true inputs is not divisible by `m`.
    Mod(u8),
    /// Outputs 1 iff strictly more than half of the inputs are true.
    Maj,
}

impl GateKind {
    /// Applies the gate to bit-parallel words.
    pub fn apply_words(self, args: &[u64]) -> u64 {
        match self {
            GateKind::Not => !args[0],
            GateKind::And => args.iter().fold(u64::MAX, |a, b| a & b),
            GateKind::Or => args.iter().fold(0, |a, b| a | b),
            GateKind::Mod(2) => args.iter().fold(0, |a, b| a ^ b),
            GateKind::Mod(m) => per_bit(args, |c| c % u32::from(m) != 0),
            GateKind::Maj => {
                let k = args.len() as u32;
                per_bit(args, |c| 2 * c > k)
            }
        }
    }

    pub fn apply_bits(self, args: &[bool]) -> bool {
        let count = args.iter().filter(|&&b| b).count() as u32;
        match self {
            GateKind::Not => !args[0],
            GateKind::And => count == args.len() as u32,
            GateKind::Or => count > 0,
            GateKind::Mod(m) => count % u32::from(m) != 0,
            GateKind::Maj => 2 * count > args.len() as u32,
        }
    }

    pub fn is_unary(self) -> bool {
        self == GateKind::Not
    }
}

fn per_bit(args: &[u64], rule: impl Fn(u32) -> bool) -> u64 {
    let mut out = 0u64;
    for bit in 0..64 {
        let c: u32 = args.iter().map(|w| ((w >> bit) & 1) as u32).sum();
        if rule(c) {
            out |= 1 << bit;
        }
    }
    out
}

impl fmt::Display for GateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GateKind::Not => f.write_str("NOT"),
            GateKind::And => f.write_str("AND"),
            GateKind::Or => f.write_str("OR"),
            GateKind::Mod(m) => write!(f, "MOD{m}"),
            GateKind::Maj => f.write_str("MAJ"),
        }
    }
}

impl FromStr for GateKind {
    type Err = CircuitError;

    fn from_str(s: &str) -> Result<Self> {
        let up = s.trim().to_ascii_uppercase();
        match up.as_str() {
            "NOT" => Ok(GateKind::Not),
            "AND" => Ok(GateKind::And),
            "OR" => Ok(GateKind::Or),
            "MAJ" => Ok(GateKind::Maj),
            _ => up
                .strip_prefix("MOD")
                .and_then(|m| m.parse::<u8>().ok())
                .filter(|&m| m >= 2)
                .map(GateKind::Mod)
                .ok_or_else(|| CircuitError::Malformed(format!("unknown gate kind {s:?}"))),
        }
    }
}

/// Maximum fan-in allowed for a gate kind.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Fanin {
    Bounded(usize),
    Unbounded,
}

impl Fanin {
    pub fn max(self) -> usize {
        match self {
            Fanin::Bounded(k) => k,
            Fanin::Unbounded => usize::MAX,
        }
    }
}

/// A named set of gate kinds with fan-in limits.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Basis {
    name: String,
    gates: Vec<(GateKind, Fanin)>,
}

impl Basis {
    /// Presets: `aon` (NOT, AND2, OR2), `xaon` (aon plus MOD2 of fan-in 2),
    /// `ac0` (NOT, unbounded AND/OR), `acc<m>` (ac0 plus unbounded MOD_m),
    /// `tc0` (NOT, unbounded MAJ). A custom basis is a `+`-separated list of
    /// kinds with an optional `:unbounded` suffix, e.g. `NOT+AND+MOD3:unbounded`.
    pub fn parse(name: &str) -> Result<Self> {
        use Fanin::*;
        use GateKind::*;
        let lower = name.trim().to_ascii_lowercase();
        let gates = match lower.as_str() {
            "aon" => vec![(Not, Bounded(1)), (And, Bounded(2)), (Or, Bounded(2))],
            "xaon" => vec![
                (Not, Bounded(1)),
                (And, Bounded(2)),
                (Or, Bounded(2)),
                (Mod(2), Bounded(2)),
            ],
            "ac0" => vec![(Not, Bounded(1)), (And, Unbounded), (Or, Unbounded)],
            "tc0" => vec![(Not, Bounded(1)), (Maj, Unbounded)],
            other => {
                if let Some(m) = other.strip_prefix("acc").and_then(|m| m.parse::<u8>().ok()) {
                    if m < 2 {
                        return Err(CircuitError::UnknownBasis(name.into()));
                    }
                    vec![
                        (Not, Bounded(1)),
                        (And, Unbounded),
                        (Or, Unbounded),
                        (Mod(m), Unbounded),
                    ]
                } else {
                    return Self::parse_custom(name);
                }
            }
        };
        Ok(Basis {
            name: lower,
            gates,
        })
    }

    fn parse_custom(name: &str) -> Result<Self> {
        let (list, fanin) = match name.split_once(':') {
            Some((l, "unbounded")) => (l, Fanin::Unbounded),
            Some((l, "bounded")) | Some((l, "2")) => (l, Fanin::Bounded(2)),
            Some(_) => return Err(CircuitError::UnknownBasis(name.into())),
            None => (name, Fanin::Bounded(2)),
        };
        if !list.contains('+') {
            return Err(CircuitError::UnknownBasis(name.into()));
        }
        let mut gates = Vec::new();
        for part in list.split('+') {
            let kind: GateKind = part
                .parse()
                .map_err(|_| CircuitError::UnknownBasis(name.into()))?;
            let f = if kind.is_unary() { Fanin::Bounded(1) } else { fanin };
            if gates.iter().any(|(k, _)| *k == kind) {
                return Err(CircuitError::UnknownBasis(name.into()));
            }
            gates.push((kind, f));
        }
        Ok(Basis {
            name: name.trim().to_string(),
            gates,
        })
    }

    pub fn aon() -> Self {
        Self::parse("aon").expect("preset")
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn gates(&self) -> &[(GateKind, Fanin)] {
        &self.gates
    }

    pub fn fanin(&self, kind: GateKind) -> Option<Fanin> {
        self.gates.iter().find(|(k, _)| *k == kind).map(|(_, f)| *f)
    }

    pub fn contains(&self, kind: GateKind) -> bool {
        self.fanin(kind).is_some()
    }
}

impl fmt::Display for Basis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

/// A wire source: an input variable (0-based), a constant, or an earlier gate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Node {
    Input(usize),
    Const(bool),
    Gate(usize),
}

impl Node {
    fn id(self) -> String {
        match self {
            Node::Input(i) => format!("x{}", i + 1),
            Node::Const(b) => format!("c{}", u8::from(b)),
            Node::Gate(g) => format!("g{g}"),
        }
    }

    fn parse_id(s: &str) -> Result<Self> {
        let bad = || CircuitError::Malformed(format!("bad node id {s:?}"));
        let (head, rest) = s.split_at(1.min(s.len()));
        let num: usize = rest.parse().map_err(|_| bad())?;
        match head {
            "x" if num >= 1 => Ok(Node::Input(num - 1)),
            "c" if num <= 1 => Ok(Node::Const(num == 1)),
            "g" => Ok(Node::Gate(num)),
            _ => Err(bad()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Gate {
    pub kind: GateKind,
    pub args: Vec<Node>,
}

/// A validated gate DAG with a single output.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Circuit {
    n: usize,
    basis: Basis,
    gates: Vec<Gate>,
    output: Node,
}

impl Circuit {
    pub fn new(n: usize, basis: Basis, gates: Vec<Gate>, output: Node) -> Result<Self> {
        if n == 0 || n > 64 {
            return Err(CircuitError::Malformed(format!("input count {n} outside 1..=64")));
        }
        let check = |node: Node, before: usize| -> Result<()> {
            match node {
                Node::Input(i) if i >= n => Err(CircuitError::Malformed(format!(
                    "input x{} out of range",
                    i + 1
                ))),
                Node::Gate(g) if g >= before => Err(CircuitError::Malformed(format!(
                    "g{g} referenced before definition"
                ))),
                _ => Ok(()),
            }
        };
        for (i, gate) in gates.iter().enumerate() {
            let fanin = basis.fanin(gate.kind).ok_or_else(|| CircuitError::NotInBasis {
                kind: gate.kind,
                basis: basis.name.clone(),
            })?;
            let k = gate.args.len();
            let ok = if gate.kind.is_unary() {
                k == 1
            } else {
                k >= 2 && k <= fanin.max()
            };
            if !ok {
                return Err(CircuitError::Malformed(format!(
                    "g{i}: fan-in {k} not allowed for {}",
                    gate.kind
                )));
            }
            for &a in &gate.args {
                check(a, i)?;
            }
        }
        check(output, gates.len())?;
        Ok(Circuit {
            n,
            basis,
            gates,
            output,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn basis(&self) -> &Basis {
        &self.basis
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn output(&self) -> Node {
        self.output
    }

    /// Total wire count.
    pub fn size(&self) -> usize {
        self.gates.iter().map(|g| g.args.len()).sum()
    }

    /// Longest input-to-output path counted in gates.
    pub fn depth(&self) -> usize {
        let mut d = vec![0usize; self.gates.len()];
        let depth_of = |d: &[usize], node: Node| match node {
            Node::Gate(g) => d[g],
            _ => 0,
        };
        for (i, g) in self.gates.iter().enumerate() {
            d[i] = 1 + g.args.iter().map(|&a| depth_of(&d, a)).max().unwrap_or(0);
        }
        depth_of(&d, self.output)
    }

    /// Evaluates on one input given as an index (`x1` is bit 0).
    pub fn eval_point(&self, x: u64) -> bool {
        let mut vals = Vec::with_capacity(self.gates.len());
        let get = |vals: &[bool], node: Node| match node {
            Node::Input(i) => (x >> i) & 1 == 1,
            Node::Const(b) => b,
            Node::Gate(g) => vals[g],
        };
        let mut buf = Vec::new();
        for g in &self.gates {
            buf.clear();
            buf.extend(g.args.iter().map(|&a| get(&vals, a)));
            vals.push(g.kind.apply_bits(&buf));
        }
        get(&vals, self.output)
    }

    /// Evaluates on an explicit bit vector, `bits[i]` being `x_{i+1}`.
    pub fn eval_bits(&self, bits: &[bool]) -> bool {
        let mut vals: Vec<bool> = Vec::with_capacity(self.gates.len());
        let get = |vals: &[bool], node: Node| match node {
            Node::Input(i) => bits[i],
            Node::Const(b) => b,
            Node::Gate(g) => vals[g],
        };
        for g in &self.gates {
            let a: Vec<bool> = g.args.iter().map(|&n| get(&vals, n)).collect();
            vals.push(g.kind.apply_bits(&a));
        }
        get(&vals, self.output)
    }

    /// Full truth table, computed 64 inputs at a time.
    pub fn evaluate_all(&self) -> Result<TruthTable> {
        let n = self.n;
        if n > MAX_ARITY {
            return Err(CircuitError::Capacity(format!("cannot tabulate {n} inputs")));
        }
        let words = TruthTable::zero(n)?.words().len();
        let bits = 1u64 << n;
        let tail = if bits >= 64 { u64::MAX } else { (1u64 << bits) - 1 };
        let input_word = |i: usize, w: usize| -> u64 {
            if i < 6 {
                const PATTERNS: [u64; 6] = [
                    0xaaaa_aaaa_aaaa_aaaa,
                    0xcccc_cccc_cccc_cccc,
                    0xf0f0_f0f0_f0f0_f0f0,
                    0xff00_ff00_ff00_ff00,
                    0xffff_0000_ffff_0000,
                    0xffff_ffff_0000_0000,
                ];
                PATTERNS[i]
            } else if (w >> (i - 6)) & 1 == 1 {
                u64::MAX
            } else {
                0
            }
        };
        let mut out = Vec::with_capacity(words);
        let mut vals = vec![0u64; self.gates.len()];
        let mut buf = Vec::new();
        for w in 0..words {
            let get = |vals: &[u64], node: Node| match node {
                Node::Input(i) => input_word(i, w),
                Node::Const(b) => {
                    if b {
                        u64::MAX
                    } else {
                        0
                    }
                }
                Node::Gate(g) => vals[g],
            };
            for (gi, g) in self.gates.iter().enumerate() {
                buf.clear();
                buf.extend(g.args.iter().map(|&a| get(&vals, a)));
                vals[gi] = g.kind.apply_words(&buf);
            }
            out.push(get(&vals, self.output));
        }
        let last = out.len() - 1;
        out[last] &= tail;
        Ok(TruthTable::from_words(n, out)?)
    }

    /// Keeps only gates reachable from the output.
    pub fn pruned(&self) -> Circuit {
        let mut live = vec![false; self.gates.len()];
        if let Node::Gate(g) = self.output {
            live[g] = true;
        }
        for i in (0..self.gates.len()).rev() {
            if live[i] {
                for &a in &self.gates[i].args {
                    if let Node::Gate(g) = a {
                        live[g] = true;
                    }
                }
            }
        }
        let mut remap = vec![usize::MAX; self.gates.len()];
        let mut gates = Vec::new();
        let map = |remap: &[usize], n: Node| match n {
            Node::Gate(g) => Node::Gate(remap[g]),
            other => other,
        };
        for (i, g) in self.gates.iter().enumerate() {
            if live[i] {
                remap[i] = gates.len();
                gates.push(Gate {
                    kind: g.kind,
                    args: g.args.iter().map(|&a| map(&remap, a)).collect(),
                });
            }
        }
        Circuit {
            n: self.n,
            basis: self.basis.clone(),
            gates,
            output: map(&remap, self.output),
        }
    }

    /// Same gates, reinterpreted over a wider basis. Fails if some gate
    /// does not fit.
    pub fn with_basis(&self, basis: Basis) -> Result<Circuit> {
        Circuit::new(self.n, basis, self.gates.clone(), self.output)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("circuit serializes")
    }
}

/// Incremental construction with structural checks at `finish`.
#[derive(Debug, Clone)]
pub struct CircuitBuilder {
    n: usize,
    basis: Basis,
    gates: Vec<Gate>,
}

impl CircuitBuilder {
    pub fn new(n: usize, basis: Basis) -> Self {
        CircuitBuilder {
            n,
            basis,
            gates: Vec::new(),
        }
    }

    pub fn gate(&mut self, kind: GateKind, args: Vec<Node>) -> Node {
        self.gates.push(Gate { kind, args });
        Node::Gate(self.gates.len() - 1)
    }

    /// Folds `args` with a binary or unbounded gate, respecting the basis
    /// fan-in. A single argument is returned unchanged.
    pub fn reduce(&mut self, kind: GateKind, mut args: Vec<Node>) -> Result<Node> {
        let max = self
            .basis
            .fanin(kind)
            .ok_or_else(|| CircuitError::NotInBasis {
                kind,
                basis: self.basis.name.clone(),
            })?
            .max();
        if args.is_empty() {
            return Err(CircuitError::InvalidParameter("empty gate".into()));
        }
        while args.len() > 1 {
            let take = args.len().min(max);
            let chunk: Vec<Node> = args.drain(..take).collect();
            let g = self.gate(kind, chunk);
            args.push(g);
        }
        Ok(args[0])
    }

    /// Copies `other`'s gates and returns its output node.
    pub fn embed(&mut self, other: &Circuit) -> Node {
        let base = self.gates.len();
        let map = |n: Node| match n {
            Node::Gate(g) => Node::Gate(base + g),
            o => o,
        };
        for g in &other.gates {
            self.gates.push(Gate {
                kind: g.kind,
                args: g.args.iter().map(|&a| map(a)).collect(),
            });
        }
        map(other.output)
    }

    pub fn finish(self, output: Node) -> Result<Circuit> {
        Circuit::new(self.n, self.basis, self.gates, output)
    }
}

/// DNF over `n` inputs: each term lists `(variable, polarity)` pairs with
/// 0-based variables. An empty term list is constant 0, an empty term is 1.
pub fn dnf_circuit(n: usize, terms: &[Vec<(usize, bool)>], basis: Basis) -> Result<Circuit> {
    let mut b = CircuitBuilder::new(n, basis);
    if terms.is_empty() {
        return b.finish(Node::Const(false));
    }
    if terms.iter().any(|t| t.is_empty()) {
        return b.finish(Node::Const(true));
    }
    let mut negated: HashMap<usize, Node> = HashMap::new();
    let mut outs = Vec::new();
    for term in terms {
        let mut lits = Vec::new();
        for &(v, pol) in term {
            let lit = if pol {
                Node::Input(v)
            } else {
                *negated
                    .entry(v)
                    .or_insert_with(|| b.gate(GateKind::Not, vec![Node::Input(v)]))
            };
            lits.push(lit);
        }
        outs.push(b.reduce(GateKind::And, lits)?);
    }
    let out = b.reduce(GateKind::Or, outs)?;
    b.finish(out)
}

#[derive(Serialize, Deserialize)]
struct GateJson {
    kind: String,
    args: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct CircuitJson {
    n: usize,
    basis: String,
    gates: Vec<GateJson>,
    output: String,
}

impl Serialize for Circuit {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        CircuitJson {
            n: self.n,
            basis: self.basis.name.clone(),
            gates: self
                .gates
                .iter()
                .map(|g| GateJson {
                    kind: g.kind.to_string(),
                    args: g.args.iter().map(|a| a.id()).collect(),
                })
                .collect(),
            output: self.output.id(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Circuit {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error;
        let j = CircuitJson::deserialize(d)?;
        let basis = Basis::parse(&j.basis).map_err(D::Error::custom)?;
        let gates = j
            .gates
            .iter()
            .map(|g| {
                Ok(Gate {
                    kind: g.kind.parse()?,
                    args: g
                        .args
                        .iter()
                        .map(|a| Node::parse_id(a))
                        .collect::<Result<_>>()?,
                })
            })
            .collect::<Result<Vec<_>>>()
            .map_err(D::Error::custom)?;
        let output = Node::parse_id(&j.output).map_err(D::Error::custom)?;
        Circuit::new(j.n, basis, gates, output).map_err(D::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use proptest::prelude::*;
    use rand::Rng as _;

    fn single(kind: GateKind, basis: &str) -> Circuit {
        Circuit::new(
            2,
            Basis::parse(basis).unwrap(),
            vec![Gate {
                kind,
                args: vec![Node::Input(0), Node::Input(1)],
            }],
            Node::Gate(0),
        )
        .unwrap()
    }

    #[test]
    fn gate_tables() {
        assert_eq!(single(GateKind::And, "aon").evaluate_all().unwrap().to_bit_string(), "0001");
        assert_eq!(single(GateKind::Or, "aon").evaluate_all().unwrap().to_bit_string(), "0111");
        assert_eq!(
            single(GateKind::Mod(2), "xaon").evaluate_all().unwrap().to_bit_string(),
            "0110"
        );
        let not = Circuit::new(
            2,
            Basis::aon(),
            vec![Gate {
                kind: GateKind::Not,
                args: vec![Node::Input(0)],
            }],
            Node::Gate(0),
        )
        .unwrap();
        assert_eq!(not.evaluate_all().unwrap().to_bit_string(), "1010");
        assert_eq!(not.size(), 1);
        assert_eq!(not.depth(), 1);
    }

    #[test]
    fn structural_errors() {
        let bad_ref = Circuit::new(
            2,
            Basis::aon(),
            vec![Gate {
                kind: GateKind::And,
                args: vec![Node::Input(0), Node::Gate(0)],
            }],
            Node::Gate(0),
        );
        assert!(matches!(bad_ref, Err(CircuitError::Malformed(_))));
        let wrong_kind = Circuit::new(
            2,
            Basis::aon(),
            vec![Gate {
                kind: GateKind::Maj,
                args: vec![Node::Input(0), Node::Input(1)],
            }],
            Node::Gate(0),
        );
        assert!(matches!(wrong_kind, Err(CircuitError::NotInBasis { .. })));
        let wide = Circuit::new(
            3,
            Basis::aon(),
            vec![Gate {
                kind: GateKind::And,
                args: vec![Node::Input(0), Node::Input(1), Node::Input(2)],
            }],
            Node::Gate(0),
        );
        assert!(wide.is_err());
        let bad_input = Circuit::new(2, Basis::aon(), vec![], Node::Input(2));
        assert!(bad_input.is_err());
    }

    #[test]
    fn basis_names() {
        for name in ["aon", "xaon", "ac0", "acc3", "tc0", "NOT+AND+MOD3:unbounded", "AND+OR"] {
            assert!(Basis::parse(name).is_ok(), "{name}");
        }
        for name in ["", "aom", "acc1", "NOT+FOO", "NOT+AND:sideways"] {
            assert!(Basis::parse(name).is_err(), "{name}");
        }
        let acc3 = Basis::parse("acc3").unwrap();
        assert_eq!(acc3.fanin(GateKind::Mod(3)), Some(Fanin::Unbounded));
    }

    #[test]
    fn mod_and_maj_semantics() {
        assert!(!GateKind::Mod(3).apply_bits(&[true, true, true]));
        assert!(GateKind::Mod(3).apply_bits(&[true, true, false]));
        assert!(GateKind::Maj.apply_bits(&[true, true, false]));
        assert!(!GateKind::Maj.apply_bits(&[true, false]));
        let w = GateKind::Mod(3).apply_words(&[0b1110, 0b1100, 0b1000]);
        assert_eq!(w & 0xf, 0b0110);
    }

    #[test]
    fn json_round_trip() {
        let c = dnf_circuit(
            3,
            &[vec![(0, true), (1, false)], vec![(2, true)]],
            Basis::aon(),
        )
        .unwrap();
        let text = serde_json::to_string(&c).unwrap();
        assert!(text.contains("\"x1\""));
        let back: Circuit = serde_json::from_str(&text).unwrap();
        assert_eq!(back, c);
        let bad = r#"{"n":2,"basis":"aon","gates":[{"kind":"AND","args":["x1","x3"]}],"output":"g0"}"#;
        assert!(serde_json::from_str::<Circuit>(bad).is_err());
    }

    #[test]
    fn dnf_matches_formula() {
        let c = dnf_circuit(
            3,
            &[vec![(0, true), (1, false)], vec![(2, true)]],
            Basis::aon(),
        )
        .unwrap();
        let t = c.evaluate_all().unwrap();
        let want = TruthTable::from_fn(3, |x| (x & 1 == 1 && x & 2 == 0) || x & 4 != 0).unwrap();
        assert_eq!(t, want);
        // one NOT, two ANDs... the term x3 is a bare tap
        assert_eq!(c.size(), 1 + 2 + 2);
    }

    fn random_circuit(n: usize, gates: usize, basis: &Basis, r: &mut rng::Rng) -> Circuit {
        let kinds = basis.gates();
        let mut b = CircuitBuilder::new(n, basis.clone());
        let mut pool: Vec<Node> = (0..n).map(Node::Input).collect();
        pool.push(Node::Const(true));
        for _ in 0..gates {
            let (kind, fan) = kinds[r.gen_range(0..kinds.len())];
            let k = if kind.is_unary() { 1 } else { r.gen_range(2..=fan.max().min(4)) };
            let args = (0..k).map(|_| pool[r.gen_range(0..pool.len())]).collect();
            let g = b.gate(kind, args);
            pool.push(g);
        }
        let out = *pool.last().unwrap();
        b.finish(out).unwrap()
    }

    proptest! {
        #[test]
        fn bulk_eval_matches_pointwise(n in 1usize..=9, gates in 1usize..12, seed: u64, which in 0usize..4) {
            let basis = Basis::parse(["aon", "acc3", "tc0", "xaon"][which]).unwrap();
            let mut r = rng::from_seed(seed);
            let c = random_circuit(n, gates, &basis, &mut r);
            let t = c.evaluate_all().unwrap();
            for x in 0..(1u64 << n) {
                prop_assert_eq!(t.get(x), c.eval_point(x));
            }
            prop_assert_eq!(c.pruned().evaluate_all().unwrap(), t);
            prop_assert!(c.pruned().size() <= c.size());
        }
    }
}
