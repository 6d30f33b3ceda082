//! Experiment engine and command-line front end for STFT phase retrieval.
//!
//! [`run_experiment`] sweeps algorithms, windows and noise levels over
//! seeded random signals; [`cli`] wraps it together with single-shot
//! simulation, recovery and window checks.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod engine;
pub mod error;
pub mod report;
pub mod spec;

pub use engine::{run_experiment, trial_seed, Aggregate, ExperimentResult, TrialRecord};
pub use error::{HarnessError, Result};
pub use spec::{Algorithm, ExperimentSpec, Preset, SnrGrid, WindowSpec};
