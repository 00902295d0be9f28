//! Distributions of hidden arm means, target functionals and their regularity constants.

pub mod assumptions;
pub mod distribution;
pub mod functional;

pub use assumptions::{check_assumptions, AssumptionParams, Violation};
pub use distribution::{DistributionSpec, Family};
pub use functional::{true_functional, FunctionalKind, FunctionalSpec};
