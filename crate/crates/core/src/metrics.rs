use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::signal::Signal;

/// Unit phasor `e^{j phi}` minimizing `|truth - e^{j phi} estimate|`.
///
/// The optimum is the phase of `<estimate, truth>`; a zero inner product
/// leaves the estimate unrotated.
pub fn optimal_phase(truth: &[Complex64], estimate: &[Complex64]) -> Complex64 {
    let inner: Complex64 = estimate.iter().zip(truth).map(|(e, t)| e.conj() * t).sum();
    let r = inner.norm();
    if r > 0.0 {
        inner / r
    } else {
        Complex64::new(1.0, 0.0)
    }
}

/// Relative recovery error modulo global phase:
/// `min_phi |truth - e^{j phi} estimate| / |estimate|`.
pub fn phase_aligned_error(truth: &Signal, estimate: &Signal) -> Result<f64> {
    phase_aligned_error_slices(truth.values(), estimate.values())
}

pub fn phase_aligned_error_slices(truth: &[Complex64], estimate: &[Complex64]) -> Result<f64> {
    if truth.len() != estimate.len() {
        return Err(Error::LengthMismatch { expected: truth.len(), found: estimate.len() });
    }
    let est_norm = estimate.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
    if est_norm == 0.0 {
        return Err(Error::ZeroNormEstimate);
    }
    let rot = optimal_phase(truth, estimate);
    let diff = truth.iter().zip(estimate).map(|(t, e)| (t - rot * e).norm_sqr()).sum::<f64>().sqrt();
    Ok(diff / est_norm)
}

/// The estimate rotated onto the truth's global phase.
pub fn align_global_phase(truth: &Signal, estimate: &Signal) -> Signal {
    estimate.scaled(optimal_phase(truth.values(), estimate.values()))
}
