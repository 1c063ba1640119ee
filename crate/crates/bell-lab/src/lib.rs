//! Numerical laboratory for two-channel polarizer correlation experiments:
//! quantum predictions for the atomic-cascade pair source (ideal and
//! non-ideal apparatus), a family of correlation-inequality evaluators, a
//! verifier for the underlying multilinear bound, local-hidden-variable
//! Monte Carlo simulation, and an orientation optimizer.

pub mod inequalities;
pub mod lhv;
pub mod optimizer;
pub mod quantum;
pub mod theorem;
pub mod types;

pub use types::{
    Angle, Apparatus, ArmOptics, DomainError, InequalityKind, InequalityReport,
    JointProbabilities, LabeledAngle, SinglesProbabilities,
};
