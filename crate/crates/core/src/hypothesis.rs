//! Hypotheses returned by learners and reconstructions.

use std::sync::Arc;

use serde_json::{json, Value};

use crate::boolean::{Agreement, BooleanError, TruthTable};
use crate::circuits::Circuit;

/// A deterministic predictor built outside the circuit model.
pub trait Predict: Send + Sync {
    fn predict(&self, x: u64) -> bool;
    /// Entries, wires, or other stored units needed to evaluate.
    fn size(&self) -> usize;
    fn describe(&self) -> Value;
}

/// Total map from `n`-bit inputs to a bit. Once built it never consults an
/// oracle: any needed function values are stored inside.
#[derive(Clone)]
pub enum Hypothesis {
    Circuit(Circuit),
    Table(TruthTable),
    Predictor { n: usize, inner: Arc<dyn Predict> },
    /// `x -> inner(x + suffix * 2^n)`: the inner hypothesis with its high
    /// input bits fixed.
    Restricted { n: usize, suffix: u64, inner: Box<Hypothesis> },
}

impl Hypothesis {
    pub fn predictor(n: usize, inner: impl Predict + 'static) -> Self {
        Hypothesis::Predictor {
            n,
            inner: Arc::new(inner),
        }
    }

    pub fn n(&self) -> usize {
        match self {
            Hypothesis::Circuit(c) => c.n(),
            Hypothesis::Table(t) => t.n(),
            Hypothesis::Predictor { n, .. } | Hypothesis::Restricted { n, .. } => *n,
        }
    }

    pub fn eval(&self, x: u64) -> bool {
        match self {
            Hypothesis::Circuit(c) => c.eval_point(x),
            Hypothesis::Table(t) => t.get(x),
            Hypothesis::Predictor { inner, .. } => inner.predict(x),
            Hypothesis::Restricted { n, suffix, inner } => inner.eval(x | (suffix << n)),
        }
    }

    pub fn size(&self) -> usize {
        match self {
            Hypothesis::Circuit(c) => c.size(),
            Hypothesis::Table(t) => t.len() as usize,
            Hypothesis::Predictor { inner, .. } => inner.size(),
            Hypothesis::Restricted { inner, .. } => inner.size(),
        }
    }

    pub fn to_table(&self) -> Result<TruthTable, BooleanError> {
        match self {
            Hypothesis::Circuit(c) => c
                .evaluate_all()
                .map_err(|e| BooleanError::InvalidParameter(e.to_string())),
            Hypothesis::Table(t) => Ok(t.clone()),
            _ => TruthTable::from_fn(self.n(), |x| self.eval(x)),
        }
    }

    /// Exact agreement with `target`, by evaluating every input.
    pub fn agreement(&self, target: &TruthTable) -> Result<Agreement, BooleanError> {
        self.to_table()?.agreement(target)
    }

    /// Fraction of inputs where the hypothesis differs from `target`.
    pub fn error(&self, target: &TruthTable) -> Result<f64, BooleanError> {
        self.to_table()?.distance(target)
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Hypothesis::Circuit(_) => "circuit",
            Hypothesis::Table(_) => "table",
            Hypothesis::Predictor { .. } => "predictor",
            Hypothesis::Restricted { .. } => "restricted",
        }
    }

    /// JSON description; the full table is included when `n <= 16`.
    pub fn to_json(&self) -> Value {
        let mut v = json!({
            "kind": self.kind(),
            "n": self.n(),
            "size": self.size(),
        });
        match self {
            Hypothesis::Circuit(c) => v["circuit"] = c.to_json(),
            Hypothesis::Predictor { inner, .. } => v["predictor"] = inner.describe(),
            Hypothesis::Restricted { suffix, inner, .. } => {
                v["suffix"] = json!(suffix);
                v["inner"] = inner.to_json();
            }
            Hypothesis::Table(_) => {}
        }
        if self.n() <= 16 {
            if let Ok(t) = self.to_table() {
                v["table"] = json!(t.to_hex());
            }
        }
        v
    }
}

impl std::fmt::Debug for Hypothesis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Hypothesis")
            .field("kind", &self.kind())
            .field("n", &self.n())
            .field("size", &self.size())
            .finish()
    }
}
