//! Truth tables, small-circuit search, combinatorial designs, NW-style
//! generators, and the learning/distinguishing reductions built on them.
//!
//! Every randomized routine takes an explicit [`rng::Rng`] so runs are
//! reproducible from a single master seed.

pub mod boolean;
pub mod bootstrap;
pub mod circuits;
pub mod designs;
pub mod games;
pub mod generator;
pub mod hypothesis;
pub mod learnkit;
pub mod natural;
pub mod oracle;
pub mod reconstruct;
pub mod rng;
pub mod stats;

pub use boolean::{Advantage, Agreement, BooleanError, TruthTable, MAX_ARITY};
pub use circuits::{Basis, Circuit, CircuitError, GateKind, McspInstance};
pub use hypothesis::{Hypothesis, Predict};
pub use oracle::{MembershipOracle, OracleError};
