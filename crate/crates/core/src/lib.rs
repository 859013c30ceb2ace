//! Measurement-based quantum feedback simulation of mean-field p-spin
//! dynamics.
//!
//! Three engines produce trajectories of the normalised collective spin:
//! the classical mean-field flow ([`meanfield`]), a large-N Gaussian engine
//! ([`gaussian`]) and an exact Dicke-basis engine for small N ([`exact`]).
//! [`analysis`] compares them and [`runner`] turns a [`RunConfig`] into
//! CSV artifacts with a reproducibility manifest.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod config;
pub mod engine;
pub mod error;
pub mod exact;
pub mod gaussian;
pub mod meanfield;
mod roots;
pub mod runner;
pub mod spin_model;
pub mod sweep;
pub mod trajectory;

pub use config::{Experiment, RunConfig};
pub use engine::{EngineKind, Stepping, TrajectorySource};
pub use error::{Error, Result};
pub use spin_model::{CriticalPoints, ModelParams};
pub use trajectory::{BlochVector, Trajectory};
