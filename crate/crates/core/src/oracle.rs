//! Query access to a Boolean function with accounting.

use std::sync::Arc;

use thiserror::Error;

use crate::boolean::TruthTable;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OracleError {
    #[error("query budget of {budget} exhausted")]
    BudgetExhausted { budget: u64 },
    #[error("query {x:#x} outside arity {n}")]
    OutOfRange { x: u64, n: usize },
}

#[derive(Clone)]
enum Backing {
    Table(Arc<TruthTable>),
    Func(Arc<dyn Fn(u64) -> bool + Send + Sync>),
}

/// Membership oracle for an `n`-bit function. Every answered query bumps
/// the counter; once `budget` queries were answered further ones fail.
#[derive(Clone)]
pub struct MembershipOracle {
    n: usize,
    backing: Backing,
    queries: u64,
    budget: Option<u64>,
}

impl MembershipOracle {
    pub fn from_table(table: TruthTable) -> Self {
        Self::from_arc(Arc::new(table))
    }

    pub fn from_arc(table: Arc<TruthTable>) -> Self {
        MembershipOracle {
            n: table.n(),
            backing: Backing::Table(table),
            queries: 0,
            budget: None,
        }
    }

    pub fn from_fn(n: usize, f: impl Fn(u64) -> bool + Send + Sync + 'static) -> Self {
        MembershipOracle {
            n,
            backing: Backing::Func(Arc::new(f)),
            queries: 0,
            budget: None,
        }
    }

    pub fn with_budget(mut self, budget: u64) -> Self {
        self.budget = Some(budget);
        self
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn queries(&self) -> u64 {
        self.queries
    }

    pub fn budget(&self) -> Option<u64> {
        self.budget
    }

    pub fn remaining(&self) -> Option<u64> {
        self.budget.map(|b| b.saturating_sub(self.queries))
    }

    pub fn query(&mut self, x: u64) -> Result<bool, OracleError> {
        if self.n < 64 && x >> self.n != 0 {
            return Err(OracleError::OutOfRange { x, n: self.n });
        }
        if let Some(budget) = self.budget {
            if self.queries >= budget {
                return Err(OracleError::BudgetExhausted { budget });
            }
        }
        self.queries += 1;
        Ok(match &self.backing {
            Backing::Table(t) => t.get(x),
            Backing::Func(f) => f(x),
        })
    }

    /// Evaluates without counting. Reserved for measurement code that
    /// reports closeness and never feeds answers back into a learner.
    pub fn peek(&self, x: u64) -> bool {
        match &self.backing {
            Backing::Table(t) => t.get(x),
            Backing::Func(f) => f(x),
        }
    }

    /// Full table via uncounted lookups; see [`MembershipOracle::peek`].
    pub fn peek_table(&self) -> TruthTable {
        match &self.backing {
            Backing::Table(t) => (**t).clone(),
            Backing::Func(f) => TruthTable::from_fn(self.n, |x| f(x)).expect("arity checked"),
        }
    }

    /// Oracle for `x -> self(map(x))` at arity `n`, with this oracle's
    /// remaining budget. Its queries are billed back through [`Self::charge`].
    pub fn reindexed(&self, n: usize, map: impl Fn(u64) -> u64 + Send + Sync + 'static) -> Self {
        let backing = self.backing.clone();
        let inner = move |x: u64| match &backing {
            Backing::Table(t) => t.get(map(x)),
            Backing::Func(f) => f(map(x)),
        };
        let mut o = MembershipOracle::from_fn(n, inner);
        o.budget = self.remaining();
        o
    }

    /// Records `k` queries made on this oracle's behalf.
    pub fn charge(&mut self, k: u64) -> Result<(), OracleError> {
        self.queries += k;
        match self.budget {
            Some(budget) if self.queries > budget => Err(OracleError::BudgetExhausted { budget }),
            _ => Ok(()),
        }
    }

    /// A fresh oracle for the same function with its own counter.
    pub fn fork(&self) -> Self {
        MembershipOracle {
            n: self.n,
            backing: self.backing.clone(),
            queries: 0,
            budget: self.budget,
        }
    }
}

impl std::fmt::Debug for MembershipOracle {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MembershipOracle")
            .field("n", &self.n)
            .field("queries", &self.queries)
            .field("budget", &self.budget)
            .finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_and_budget() {
        let t = TruthTable::from_bit_str("0110").unwrap();
        let mut o = MembershipOracle::from_table(t).with_budget(2);
        assert!(o.query(1).unwrap());
        assert!(!o.query(3).unwrap());
        assert_eq!(o.query(0), Err(OracleError::BudgetExhausted { budget: 2 }));
        assert_eq!(o.queries(), 2);
        assert_eq!(o.fork().queries(), 0);
    }

    #[test]
    fn out_of_range() {
        let mut o = MembershipOracle::from_fn(3, |x| x == 7);
        assert!(matches!(o.query(8), Err(OracleError::OutOfRange { .. })));
        assert!(o.query(7).unwrap());
    }

    #[test]
    fn reindexed_bills_parent() {
        let t = TruthTable::from_bit_str("0110").unwrap();
        let mut parent = MembershipOracle::from_table(t).with_budget(5);
        parent.query(0).unwrap();
        let mut child = parent.reindexed(3, |x| x & 3);
        assert_eq!(child.remaining(), Some(4));
        assert!(child.query(5).unwrap());
        assert!(!child.query(7).unwrap());
        parent.charge(child.queries()).unwrap();
        assert_eq!(parent.queries(), 3);
        assert!(parent.charge(3).is_err());
    }
}
