//! Parameter-space discretization and optimal experiment design.
//!
//! Every type here is immutable once built and every operation is a pure
//! function, so nets and designs can be shared freely across runs.

mod design;
mod io;
mod linalg;
mod lstsq;
mod net;

pub use design::{g_optimal_design, leverage, support_cap, DesignWeights};
pub use io::{read_design, read_net, write_design, write_net};
pub use linalg::{log_log_guard, pseudo_inverse_sym};
pub use lstsq::{least_squares, Estimate, LeastSquares};
pub use net::{
    build_dense_net, build_sparse_net, covering_radius_estimate, sample_unit_ball, NetKind,
    ParameterNet, POINT_CAP,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("net would exceed the point cap of {cap} (use a user-supplied or sparse net)")]
    CapacityExceeded { cap: u64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("all actions are the zero vector")]
    DegenerateActions,
    #[error("leverage target {target} is below the rank {rank} of the action span")]
    InfeasibleTarget { target: f64, rank: usize },
    #[error("design stalled at max leverage {achieved} after {iterations} iterations (target {target})")]
    NotConverged {
        target: f64,
        achieved: f64,
        iterations: usize,
    },
    #[error("design support {support} exceeds the cap {cap}")]
    SupportCapExceeded { support: usize, cap: usize },
    #[error("point {index} has norm {norm} > 1")]
    OutsideUnitBall { index: usize, norm: f64 },
    #[error("duplicate net point at index {0}")]
    DuplicatePoint(usize),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("malformed point file at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
