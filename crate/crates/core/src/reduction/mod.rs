//! Reductions from stochastic-context linear bandits to context-free ones.
//!
//! The learner works over a fixed net of parameters. Each net point `theta`
//! stands for the arm `g(theta)`, the expected greedy action under the context
//! distribution. Playing `theta` means playing `argmax_{a in A_t} <a, theta>`
//! in the realised context, and the reward is reported against `g(theta)`.

mod diagnostics;
mod oracle;
mod product;
mod runs;
mod schedule;
mod solver;

pub use diagnostics::{azuma_envelope, martingale_diagnostics, MartingaleDiagnostic, INCREMENT_BOUND};
pub use oracle::{empirical_g_update, exact_g, exact_g_any, exact_g_product, GMode, GTable};
pub use product::{lift, lift_index, lifted_arm, theta_prime_star, ProductReduction, MAX_LIFTED_DIM};
pub use runs::{
    fit_allocations, known_dist_arms, reduce_known_dist, run_batched, run_epoch_reduction,
    run_product_reduction,
};
pub use schedule::{confidence_gamma, ConfidenceSchedule, EpochSchedule, GammaInputs};
pub use solver::{PeConfig, PhaseSummary, PhasedElimination, RandomSolver, Solver};

use thiserror::Error;

use crate::environments::EnvError;
use crate::geometry::GeometryError;

#[derive(Debug, Error)]
pub enum ReductionError {
    #[error("the exact oracle needs a finite-support distribution")]
    NotFiniteSupport,
    #[error("expected a product distribution")]
    NotProduct,
    #[error("diagnostics need a finite-support context log")]
    RequiresFiniteSupport,
    #[error("schedule does not partition the horizon: {0}")]
    ScheduleMismatch(String),
    #[error("batch {batch} has {len} rounds but the design needs {support}")]
    BatchTooShort { batch: usize, len: u64, support: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Environment(#[from] EnvError),
}
