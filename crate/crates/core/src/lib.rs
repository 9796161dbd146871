//! Stochastic contextual linear bandits solved with linear-bandit algorithms.
//!
//! The crate is organised around four layers:
//!
//! - [`geometry`]: parameter nets, G-optimal designs, leverage and least squares.
//! - [`environments`]: context distributions, reward models, misspecification,
//!   corruption adversaries and the named instance suites.
//! - [`reduction`]: the g-oracles (exact and empirical), the known-distribution,
//!   epoch, product and batched reductions, and phased elimination with its
//!   confidence schedules.
//! - [`harness`]: run configuration, seeded parallel execution, scaling fits,
//!   trace emission and the invariant checks behind the `verify` CLI verb.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod environments;
pub mod geometry;
pub mod harness;
pub mod reduction;
pub mod rng;
pub mod trace;

/// Dense column vector used for actions, parameters and estimates.
pub type Vector = nalgebra::DVector<f64>;

pub use trace::{EpochRecord, RegretTrace, RoundRecord};
