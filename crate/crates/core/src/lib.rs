//! Certified numerics for twisted recurrence `d(T^n x, f(x)) < ψ(n)` in
//! expanding interval maps, self-similar Cantor sets and circle rotations.
//!
//! Orbits are followed in ball arithmetic, so every hit test returns hit,
//! miss, or indeterminate, never a rounding artifact.

pub mod algebraic;
pub mod ball;
pub mod conditions;
pub mod cylinders;
pub mod error;
pub mod estimators;
pub mod measures;
pub mod numbers;
pub mod rng;
pub mod stats;
pub mod systems;
pub mod targets;
pub mod twists;

pub use error::{Error, Result};
pub use estimators::{EstimatorOptions, Experiment, HitOutcome, PrecisionPolicy, TestPoint};
pub use systems::SystemSpec;
pub use targets::PsiSpec;
pub use twists::TwistSpec;
