//! Deterministic ministep-exact simulation of adversarial packet injection
//! on single-sink trees, with Forward-If-Empty and local forwarding rules,
//! `(rho, sigma)` auditing and runtime invariant checkers.

pub mod adversary;
pub mod analysis;
pub mod cli;
pub mod engine;
pub mod error;
pub mod policies;
pub mod scalar;
pub mod topology;
pub mod verify;

pub use adversary::{audit, AuditVerdict, BurstinessBound, InjectionPattern, InjectionTrace};
pub use engine::{Configuration, Execution, ExecutionTrace, Height, Summary};
pub use error::{Error, Result};
pub use policies::{Fie, Policy, PolicyKind};
pub use scalar::{parse_rational, Scalar};
pub use topology::{NodeId, TreeNetwork};

/// Exact scalar used for `(rho, sigma)` bounds.
pub type Rational = num_rational::Ratio<i64>;
pub type Bound = BurstinessBound<Rational>;
pub type FloatBound = BurstinessBound<f64>;
