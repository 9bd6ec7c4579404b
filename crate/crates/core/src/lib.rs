//! Stochastic continuous greedy for monotone DR-submodular maximization.
//!
//! The crate is organized around the discrete pipeline: a stochastic set
//! function ([`submodular::SetObjective`]) is lifted to its multilinear
//! extension, maximized over a matroid polytope ([`constraints::Constraint`])
//! with one of the [`optimizers`], and the fractional result is turned back
//! into a feasible set by [`rounding`]. The [`verify`] module holds the
//! brute-force and statistical oracles used to check all of the above.

pub mod constraints;
pub mod error;
pub mod optimizers;
pub mod rounding;
pub mod submodular;
pub mod verify;

pub use constraints::{Constraint, ExtremePoint, MatroidRegistry};
pub use error::{Error, Result};
pub use optimizers::{
    run_batch_greedy, run_fw, run_scg, run_sga, GradientSource, RhoSchedule, ScgConfig, Trace,
    TraceOptions, TraceRecord,
};
pub use rounding::{independent_round, pipage_round, RoundingOutcome};
pub use submodular::{
    ContinuousPoint, GradientVector, GroundSet, MultilinearOracle, ObjectiveKind, RatingMatrix,
    SetObjective, MAX_EXACT_N,
};
