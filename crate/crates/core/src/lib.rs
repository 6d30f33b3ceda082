//! Recovery of a complex signal, up to a global phase, from the squared
//! magnitude of its short-time Fourier transform with unit hop.
//!
//! Every algorithm here starts from the same observation: the DFT of each
//! spectrogram row along the frequency axis turns the quadratic measurement
//! into a family of circulant linear systems, one per circular diagonal of the
//! lifted matrix `x x*`. From there:
//!
//! * [`recover::recover_ls`] solves every system and extracts the leading
//!   rank-one factor,
//! * [`recover::recover_algebraic`] solves only the first two systems and
//!   propagates phase along the signal,
//! * [`sdp::recover_sdp`] minimizes the trace over the PSD cone subject to
//!   per-diagonal fit constraints,
//! * [`gla::recover_gla`] is the Griffin-Lim baseline,
//! * [`twodim`] carries the first two over to square bivariate signals.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod circulant;
pub mod eigen;
pub mod error;
pub mod gla;
pub mod grid;
pub mod io;
pub mod lifted;
pub mod measurements;
pub mod metrics;
pub mod recover;
pub mod rng;
pub mod sdp;
pub mod signal;
pub mod transforms;
pub mod twodim;

pub use num_complex::Complex64;

pub use circulant::{
    build_autocorrelation, check_admissibility, rect_admissibility_predicate, solve_circulant, AdmissibilityReport,
    RectMode, WindowAutocorrelation, INVERTIBILITY_TOL,
};
pub use eigen::{leading_eigenpair, psd_project, EigenPair};
pub use error::{Error, Result};
pub use gla::{recover_gla, GlaConfig, GlaInit, GlaOutcome};
pub use grid::Grid;
pub use lifted::{DiagonalCorrelations, LiftedMatrix};
pub use measurements::{add_noise, MagnitudeMeasurements, NoiseModel};
pub use metrics::phase_aligned_error;
pub use recover::{recover_algebraic, recover_ls, LsRecoveryResult};
pub use sdp::{default_eta, recover_sdp, SdpOptions, SdpProblem, SdpSolution};
pub use signal::{Signal, Window, WindowKind};
pub use transforms::{dft, inverse_dft, istft_ls, magnitude_dft, measure, stft_forward, MagnitudeDft, StftGrid};
