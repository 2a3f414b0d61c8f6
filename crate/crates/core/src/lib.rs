pub mod behavior;
pub mod constraints;
pub mod error;
pub mod inequalities;
pub mod lp;
pub mod measures;
pub mod quantum;
pub mod scalar;

pub use behavior::{AnyBehavior, Behavior, JointModel, ScenarioSpec, Term};
pub use error::{Error, Result};
pub use inequalities::InequalityExpr;
pub use scalar::{Mode, Rational, Scalar};
