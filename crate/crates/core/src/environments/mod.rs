//! Contextual linear bandit instances.
//!
//! Contexts are drawn i.i.d. from a [`ContextDistribution`]; rewards are
//! linear in the pulled action plus noise, an optional misspecification term
//! and an optional budgeted corruption.

mod context;
mod reward;
mod suite;

pub use context::{
    optimal_round_value, sample_context, ActionSet, Context, ContextDistribution, CoordinateLaw,
    FiniteDistribution, ProductDistribution,
};
pub use reward::{
    write_outcomes, AdversarySpec, AdversaryStrategy, Corruption, CorruptionAdversary,
    EnvironmentSpec, Misspecification, NoiseModel, RoundOutcome, Simulator,
};
pub use suite::{example1, make_standard_suite, make_suite, SuiteOptions, SUITE_NAMES};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum EnvError {
    #[error("action is not a member of the current context")]
    ActionNotInContext,
    #[error("unknown suite `{0}`")]
    UnknownSuiteName(String),
    #[error("invalid context distribution: {0}")]
    InvalidDistribution(String),
    #[error("invalid environment: {0}")]
    InvalidSpec(String),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
