//! The circulant systems `(1/N) z_l = G_l x_l` and window admissibility.
//!
//! `G_l` is the circulant matrix whose first column is the lagged window
//! product `c_l[m] = g[m] conj(g[(m - l) mod N])`. It is diagonalized by the
//! DFT, so it is invertible exactly when the DFT of `c_l` has no zero bin.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::signal::Window;
use crate::transforms::{dft, dft_in_place, inverse_dft_in_place};

/// Relative threshold below which a spectrum bin counts as zero.
pub const INVERTIBILITY_TOL: f64 = 1e-10;

/// First column of `G_l` and its DFT.
#[derive(Clone, Debug, PartialEq)]
pub struct WindowAutocorrelation {
    pub ell: usize,
    pub column: Vec<Complex64>,
    pub spectrum: Vec<Complex64>,
}

impl WindowAutocorrelation {
    pub fn n(&self) -> usize {
        self.column.len()
    }

    pub fn max_abs_spectrum(&self) -> f64 {
        self.spectrum.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Smallest bin magnitude and its index.
    pub fn min_abs_spectrum(&self) -> (f64, usize) {
        self.spectrum.iter().enumerate().map(|(i, v)| (v.norm(), i)).fold((f64::INFINITY, 0), |a, b| {
            if b.0 < a.0 {
                b
            } else {
                a
            }
        })
    }

    /// First bin failing the relative test, if any.
    pub fn singular_bin(&self, tol: f64) -> Option<usize> {
        let max = self.max_abs_spectrum();
        if max == 0.0 {
            return Some(0);
        }
        self.spectrum.iter().position(|v| v.norm() <= tol * max)
    }

    pub fn is_invertible(&self, tol: f64) -> bool {
        self.singular_bin(tol).is_none()
    }

    /// `G_l v` computed as a circular convolution through the DFT.
    pub fn apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        let mut w = v.to_vec();
        dft_in_place(&mut w);
        w.iter_mut().zip(&self.spectrum).for_each(|(a, s)| *a *= s);
        inverse_dft_in_place(&mut w);
        w
    }

    /// Explicit `N x N` matrix with `G[i][j] = c_l[(i - j) mod N]`.
    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let n = self.n();
        DMatrix::from_fn(n, n, |i, j| self.column[(i + n - j) % n])
    }
}

pub fn build_autocorrelation(g: &Window, ell: usize) -> Result<WindowAutocorrelation> {
    let n = g.len();
    if ell >= n {
        return Err(Error::InvalidParameter(format!("lag {ell} out of range for N={n}")));
    }
    let column: Vec<Complex64> = (0..n).map(|m| g.values()[m] * g.at(m as isize - ell as isize).conj()).collect();
    let spectrum = dft(&column);
    Ok(WindowAutocorrelation { ell, column, spectrum })
}

/// Solves `(1/N) rhs = G_l x` for `x`:
/// `x = (1/N) idft(dft(rhs) / spectrum)`.
///
/// Fails with [`Error::InadmissibleWindow`] if any spectrum bin is below
/// [`INVERTIBILITY_TOL`] relative to the largest.
pub fn solve_circulant(auto: &WindowAutocorrelation, rhs: &[Complex64]) -> Result<Vec<Complex64>> {
    let n = auto.n();
    if rhs.len() != n {
        return Err(Error::LengthMismatch { expected: n, found: rhs.len() });
    }
    if let Some(bin) = auto.singular_bin(INVERTIBILITY_TOL) {
        let max = auto.max_abs_spectrum();
        let relative = if max > 0.0 { auto.spectrum[bin].norm() / max } else { 0.0 };
        return Err(Error::InadmissibleWindow { ell: auto.ell, bin, relative });
    }
    let mut x = rhs.to_vec();
    dft_in_place(&mut x);
    x.iter_mut().zip(&auto.spectrum).for_each(|(a, s)| *a /= s);
    inverse_dft_in_place(&mut x);
    let inv_n = 1.0 / n as f64;
    x.iter_mut().for_each(|a| *a *= inv_n);
    Ok(x)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LagStatus {
    pub min_abs_spectrum: f64,
    pub max_abs_spectrum: f64,
    pub worst_bin: usize,
    pub invertible: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AdmissibilityReport {
    pub per_ell: BTreeMap<usize, LagStatus>,
    pub overall: bool,
    pub tolerance: f64,
}

impl AdmissibilityReport {
    /// First non-invertible lag and its worst bin.
    pub fn first_failure(&self) -> Option<(usize, &LagStatus)> {
        self.per_ell.iter().find(|(_, s)| !s.invertible).map(|(&l, s)| (l, s))
    }

    pub fn into_result(self) -> Result<Self> {
        if let Some((ell, s)) = self.first_failure() {
            let relative = if s.max_abs_spectrum > 0.0 { s.min_abs_spectrum / s.max_abs_spectrum } else { 0.0 };
            return Err(Error::InadmissibleWindow { ell, bin: s.worst_bin, relative });
        }
        Ok(self)
    }
}

/// Spectrum test for every requested lag: lag `l` passes iff
/// `min |spectrum| > tol * max |spectrum|`.
pub fn check_admissibility(g: &Window, ells: impl IntoIterator<Item = usize>, tol: f64) -> Result<AdmissibilityReport> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tolerance must be positive, got {tol}")));
    }
    let mut per_ell = BTreeMap::new();
    for ell in ells {
        let auto = build_autocorrelation(g, ell)?;
        let (min, worst_bin) = auto.min_abs_spectrum();
        let max = auto.max_abs_spectrum();
        let invertible = max > 0.0 && min > tol * max;
        per_ell.insert(ell, LagStatus { min_abs_spectrum: min, max_abs_spectrum: max, worst_bin, invertible });
    }
    let overall = per_ell.values().all(|s| s.invertible);
    Ok(AdmissibilityReport { per_ell, overall, tolerance: tol })
}

/// Which lag set a rectangular-window predicate certifies.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RectMode {
    /// Every lag `0..N` (needed by least-squares recovery).
    Full,
    /// Lags 0 and 1 (needed by the algebraic recursion).
    Pair,
}

impl RectMode {
    pub fn lags(self, n: usize) -> Vec<usize> {
        match self {
            RectMode::Full => (0..n).collect(),
            RectMode::Pair => vec![0, 1],
        }
    }
}

fn gcd(mut a: usize, mut b: usize) -> usize {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Closed-form admissibility of the width-`w` rectangular window.
///
/// * `Full`: `N/2 < W < N` and `gcd(N, v) = 1` for every `v` in `2W-N ..= W`.
/// * `Pair`: `2 <= W <= N-1` and `gcd(N, W) = gcd(N, W-1) = 1`.
pub fn rect_admissibility_predicate(n: usize, w: usize, mode: RectMode) -> bool {
    match mode {
        RectMode::Full => 2 * w > n && w < n && (2 * w - n..=w).all(|v| gcd(n, v) == 1),
        RectMode::Pair => w >= 2 && w < n && gcd(n, w) == 1 && gcd(n, w - 1) == 1,
    }
}
