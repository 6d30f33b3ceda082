//! Least-squares recovery with rank-one extraction, and the algebraic phase
//! recursion for non-vanishing signals.

use num_complex::Complex64;

use crate::circulant::{build_autocorrelation, check_admissibility, solve_circulant, INVERTIBILITY_TOL};
use crate::eigen::leading_eigenpair_unchecked;
use crate::error::{Error, Result};
use crate::lifted::{DiagonalCorrelations, LiftedMatrix};
use crate::measurements::MagnitudeMeasurements;
use crate::signal::{Signal, Window};
use crate::transforms::{magnitude_dft, MagnitudeDft};

/// Relative magnitude below which the recursion treats a sample as zero.
pub const VANISHING_TOL: f64 = 1e-12;

fn check_window(y: &MagnitudeMeasurements, g: &Window) -> Result<()> {
    if y.n() != g.len() {
        return Err(Error::LengthMismatch { expected: y.n(), found: g.len() });
    }
    Ok(())
}

/// Solves the circulant system at each lag in `ells` against the columns of
/// the magnitude DFT.
pub fn estimate_correlations(
    z: &MagnitudeDft,
    g: &Window,
    ells: impl IntoIterator<Item = usize>,
) -> Result<DiagonalCorrelations> {
    let mut out = DiagonalCorrelations::new(z.n());
    for ell in ells {
        let auto = build_autocorrelation(g, ell)?;
        let x_ell = solve_circulant(&auto, &z.column(ell))?;
        out.insert(ell, x_ell)?;
    }
    Ok(out)
}

#[derive(Clone, Debug)]
pub struct LsRecoveryResult {
    pub estimate: Signal,
    /// Hermitized lifted estimate.
    pub lifted: LiftedMatrix,
    pub lambda_max: f64,
    /// `|(1/N) z_l - G_l diag(x x*, l)|` of the returned estimate, per lag.
    pub per_ell_residuals: Vec<f64>,
    /// Set when the largest eigenvalue was not positive and the estimate is
    /// the zero signal.
    pub degenerate: bool,
}

/// Least-squares recovery.
///
/// 1. `Z` = per-row DFT of `Y`.
/// 2. `x_l = (1/N) G_l^{-1} z_l` for every lag.
/// 3. Place `x_l` on circular diagonal `l`, then Hermitize.
/// 4. `sqrt(lambda_max) u_max` from the leading eigenpair.
///
/// The window must pass the spectrum test at every lag; otherwise this
/// fails before any work is done.
pub fn recover_ls(y: &MagnitudeMeasurements, g: &Window) -> Result<LsRecoveryResult> {
    check_window(y, g)?;
    let n = y.n();
    check_admissibility(g, 0..n, INVERTIBILITY_TOL)?.into_result()?;

    let z = magnitude_dft(y);
    let corr = estimate_correlations(&z, g, 0..n)?;
    let lifted = LiftedMatrix::from_correlations(&corr).hermitized();

    let pair = leading_eigenpair_unchecked(lifted.matrix());
    let degenerate = pair.value <= 0.0;
    let estimate = if degenerate {
        Signal::zeros(n)?
    } else {
        let s = Complex64::new(pair.value.sqrt(), 0.0);
        Signal::new(pair.vector.iter().map(|v| v * s).collect())?
    };

    let fitted = LiftedMatrix::outer(&estimate);
    let per_ell_residuals = (0..n)
        .map(|ell| {
            let auto = build_autocorrelation(g, ell)?;
            let pred = auto.apply(&fitted.circular_diagonal(ell));
            let inv_n = 1.0 / n as f64;
            Ok(z.column(ell).iter().zip(&pred).map(|(zz, p)| (zz * inv_n - p).norm_sqr()).sum::<f64>().sqrt())
        })
        .collect::<Result<Vec<f64>>>()?;

    Ok(LsRecoveryResult { estimate, lifted, lambda_max: pair.value, per_ell_residuals, degenerate })
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct AlgebraicOptions {
    /// The signal is known to be real and nonnegative: return `sqrt(x_0)`
    /// without running the phase recursion.
    pub nonnegative: bool,
}

/// Algebraic recovery of a non-vanishing signal from noise-free
/// measurements; see [`recover_algebraic_with`].
pub fn recover_algebraic(y: &MagnitudeMeasurements, g: &Window) -> Result<Signal> {
    recover_algebraic_with(y, g, AlgebraicOptions::default())
}

/// Solves only lags 0 and 1, sets `x[0] = sqrt(x_0[0])` (real, nonnegative;
/// this fixes the global phase) and recurses
/// `conj(x[n + 1]) = x_1[n] / x[n]` for `n = 0..N-1`.
///
/// Noisy input is accepted but errors compound along the recursion.
pub fn recover_algebraic_with(y: &MagnitudeMeasurements, g: &Window, opts: AlgebraicOptions) -> Result<Signal> {
    check_window(y, g)?;
    let n = y.n();
    let lags: &[usize] = if opts.nonnegative { &[0] } else { &[0, 1] };
    check_admissibility(g, lags.iter().copied(), INVERTIBILITY_TOL)?.into_result()?;

    let z = magnitude_dft(y);
    let corr = estimate_correlations(&z, g, lags.iter().copied())?;
    let x0 = corr.get(0).expect("lag 0 solved");

    if opts.nonnegative {
        return Signal::new(x0.iter().map(|v| Complex64::new(v.re.max(0.0).sqrt(), 0.0)).collect());
    }

    if x0[0].re < 0.0 {
        return Err(Error::NegativeMagnitude { index: 0, value: x0[0].re });
    }
    let x1 = corr.get(1).expect("lag 1 solved");
    let scale = x0.iter().map(|v| v.re.max(0.0).sqrt()).fold(0.0, f64::max);
    let threshold = VANISHING_TOL * scale;

    let mut est = Vec::with_capacity(n);
    est.push(Complex64::new(x0[0].re.sqrt(), 0.0));
    for i in 0..n - 1 {
        let cur = est[i];
        if !(cur.norm() > threshold) {
            return Err(Error::VanishingSignal { index: i });
        }
        est.push((x1[i] / cur).conj());
    }
    Signal::new(est)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::phase_aligned_error;
    use crate::transforms::measure;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn small_algebraic_example() {
        let x = Signal::new(vec![c(1.0, 0.0), c(0.0, 1.0), c(-1.0, 0.0), c(2.0, 0.0), c(1.0, 1.0)]).unwrap();
        let g = Window::rectangular(5, 3).unwrap();
        let y = measure(&x, &g).unwrap();
        let est = recover_algebraic(&y, &g).unwrap();
        assert!(phase_aligned_error(&x, &est).unwrap() <= 1e-10);
        // phase convention: first sample real and nonnegative
        assert_eq!(est.values()[0].im, 0.0);
        assert!(est.values()[0].re > 0.0);
    }

    #[test]
    fn vanishing_sample_is_reported() {
        let mut v = Signal::random_gaussian(7, 3).unwrap().into_values();
        v[2] = c(0.0, 0.0);
        let x = Signal::new(v).unwrap();
        let g = Window::rectangular(7, 3).unwrap();
        let y = measure(&x, &g).unwrap();
        let err = recover_algebraic(&y, &g).unwrap_err();
        assert!(matches!(err, Error::VanishingSignal { index: 2 }), "{err:?}");
    }

    #[test]
    fn inadmissible_windows_fail_early() {
        let x = Signal::random_gaussian(6, 1).unwrap();
        let g = Window::rectangular(6, 3).unwrap();
        let y = measure(&x, &g).unwrap();
        assert!(matches!(recover_ls(&y, &g), Err(Error::InadmissibleWindow { .. })));
        // gcd(6, 4) = 2
        let g = Window::rectangular(6, 4).unwrap();
        let y = measure(&x, &g).unwrap();
        assert!(matches!(recover_algebraic(&y, &g), Err(Error::InadmissibleWindow { ell: 0, .. })));
    }

    #[test]
    fn nonnegative_shortcut_matches_recursion() {
        let x = Signal::from_real(&[0.5, 1.0, 2.0, 0.3, 1.7, 0.9, 1.1]).unwrap();
        let g = Window::rectangular(7, 3).unwrap();
        let y = measure(&x, &g).unwrap();
        let fast = recover_algebraic_with(&y, &g, AlgebraicOptions { nonnegative: true }).unwrap();
        let full = recover_algebraic(&y, &g).unwrap();
        for ((a, b), t) in fast.values().iter().zip(full.values()).zip(x.values()) {
            assert!((a - b).norm() < 1e-10);
            assert!((a - t).norm() < 1e-10);
        }
    }

    #[test]
    fn negative_magnitude_from_noise() {
        let g = Window::rectangular(5, 3).unwrap();
        let grid = crate::grid::Grid::from_fn(5, 5, |_, _| -1.0);
        let y = MagnitudeMeasurements::new(grid).unwrap();
        let err = recover_algebraic(&y, &g).unwrap_err();
        assert!(matches!(err, Error::NegativeMagnitude { index: 0, .. }), "{err:?}");
    }

    #[test]
    fn ls_zero_measurements_are_degenerate() {
        let g = Window::rectangular(7, 5).unwrap();
        let y = MagnitudeMeasurements::new(crate::grid::Grid::zeros(7, 7)).unwrap();
        let r = recover_ls(&y, &g).unwrap();
        assert!(r.degenerate);
        assert_eq!(r.estimate.norm(), 0.0);
    }
}
