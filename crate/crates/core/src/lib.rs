//! t-predictable task planning for open traveling-salesman tasks.
//!
//! An observer who knows the start point and that every target must be
//! visited watches the first `t` targets of a plan and guesses the rest. The
//! observer is modelled as Boltzmann noisy-rational in path length. This crate
//! computes how likely that guess is to be right, finds plans that make it as
//! likely as possible, and evaluates those plans against simulated observers.

pub mod error;
pub mod formats;
pub mod geometry;
pub mod harness;
pub mod lbest;
pub mod observer;
pub mod planner;

#[cfg(test)]
mod testutil;

pub use error::{Error, Result};
pub use geometry::{
    path_cost, prefix_cost, remainder_cost, validate_layout, Bounds, DistanceMatrix, Layout, Plan,
    Point2, PrefixSplit,
};
pub use lbest::{lbest_remainders, t_predictability_approx, LBestResult};
pub use observer::{
    boltzmann_distribution, enumerate_remainders, posterior_over_remainders,
    t_predictability_exact, Rationality, RemainderDistribution, RemainderTable,
};
pub use planner::{
    k_predictability_matrix, plan_optimal, plan_t_predictable, Mode, PlannerSpec,
    PredictabilityMatrix,
};
