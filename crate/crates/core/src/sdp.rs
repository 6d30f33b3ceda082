//! Trace minimization over the PSD cone with per-lag fit constraints:
//!
//! ```text
//! min tr(X)  s.t.  X >= 0,  |z_l - N G_l diag(X, l)| <= eta_l  for l in L
//! ```
//!
//! Solved by ADMM on the split `X = Y`, where `X` carries the trace and the
//! cone and `Y` carries the fit constraints:
//!
//! ```text
//! X <- P_psd(Y - U - I / rho)
//! Y <- P_fit(X + U)
//! U <- U + X - Y
//! ```
//!
//! `P_fit` acts on each constrained circular diagonal independently and is
//! computed in the DFT basis, where `G_l` is diagonal. Lags `l` and `N - l`
//! address mirrored diagonals of a Hermitian matrix and carry conjugate data,
//! so both are handled by the representative `min(l, N - l)`.
//!
//! The iteration is Douglas-Rachford on `s = X + U`, whose step length
//! `|s_{k+1} - s_k|` never increases; it is recorded as the merit value.

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::circulant::{build_autocorrelation, WindowAutocorrelation, INVERTIBILITY_TOL};
use crate::eigen::{leading_eigenpair_unchecked, psd_project_with_trace};
use crate::error::{Error, Result};
use crate::lifted::{hermitian_part, LiftedMatrix};
use crate::measurements::MagnitudeMeasurements;
use crate::signal::{Signal, Window};
use crate::transforms::{dft_in_place, inverse_dft_in_place, magnitude_dft};

/// Largest problem size accepted by [`recover_sdp`].
pub const MAX_SDP_N: usize = 128;

/// Safety factor applied to the expected per-column noise norm.
pub const ETA_SAFETY: f64 = 1.2;

/// Per-lag noise bounds `eta_l = 1.2 sigma N` (the expected norm of the noise
/// in a column of the magnitude DFT), with `overrides` taking precedence.
pub fn default_eta(sigma: f64, n: usize, overrides: &BTreeMap<usize, f64>) -> Result<Vec<f64>> {
    if !(sigma >= 0.0) {
        return Err(Error::InvalidParameter(format!("noise sigma must be >= 0, got {sigma}")));
    }
    let mut eta = vec![ETA_SAFETY * sigma * n as f64; n];
    for (&ell, &v) in overrides {
        if ell >= n || !(v >= 0.0) {
            return Err(Error::InvalidParameter(format!("bad eta override {v} at lag {ell}")));
        }
        eta[ell] = v;
    }
    Ok(eta)
}

/// Noise sigma implied by an SNR in dB for noisy measurements `y`, using
/// `E|Y|_F^2 = |Y_clean|_F^2 + N^2 sigma^2`.
pub fn sigma_from_snr(y: &MagnitudeMeasurements, snr_db: f64) -> f64 {
    let n2 = (y.n() * y.n()) as f64;
    (y.frobenius_norm_sqr() / (n2 * (10f64.powf(snr_db / 10.0) + 1.0))).sqrt()
}

#[derive(Clone, Debug)]
pub struct SdpOptions {
    pub max_iters: usize,
    /// Relative stopping tolerance on primal and dual residuals.
    pub tol: f64,
    /// ADMM penalty on the problem normalized to unit trace scale.
    pub rho: f64,
    pub record_history: bool,
}

impl Default for SdpOptions {
    fn default() -> Self {
        SdpOptions { max_iters: 5000, tol: 1e-7, rho: 1.0, record_history: false }
    }
}

/// One row of the solver trace.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SdpIterate {
    pub iteration: usize,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub trace: f64,
    /// Douglas-Rachford step length; `NaN` on the first iteration.
    pub merit: f64,
}

/// Fit set for one representative lag, in the unitary DFT basis.
#[derive(Clone, Debug)]
struct LagConstraint {
    ell: usize,
    /// Normalized spectrum of `G_l` (largest magnitude 1); structurally
    /// zero bins are exactly 0.
    sigma: Vec<Complex64>,
    /// Unitary DFT of the normalized right-hand side, same scaling as `sigma`.
    target: Vec<Complex64>,
    /// Radius in the same scaling.
    radius: f64,
}

fn unitary_dft(v: &mut [Complex64]) {
    dft_in_place(v);
    let s = 1.0 / (v.len() as f64).sqrt();
    v.iter_mut().for_each(|x| *x *= s);
}

fn unitary_idft(v: &mut [Complex64]) {
    inverse_dft_in_place(v);
    let s = (v.len() as f64).sqrt();
    v.iter_mut().for_each(|x| *x *= s);
}

impl LagConstraint {
    fn new(auto: &WindowAutocorrelation, rhs: &[Complex64], eta: f64) -> Self {
        let max = auto.max_abs_spectrum();
        let norm = if max > 0.0 { 1.0 / max } else { 1.0 };
        let sigma = auto
            .spectrum
            .iter()
            .map(|s| if s.norm() <= INVERTIBILITY_TOL * max { Complex64::default() } else { s * norm })
            .collect();
        let mut target = rhs.to_vec();
        unitary_dft(&mut target);
        target.iter_mut().for_each(|t| *t *= norm);
        LagConstraint { ell: auto.ell, sigma, target, radius: eta * norm }
    }

    /// Euclidean projection of `d` onto `{d : |target - sigma . D| <= radius}`,
    /// or onto the set of least-squares minimizers when that is empty.
    fn project(&self, d: &mut [Complex64]) {
        unitary_dft(d);
        let r: Vec<Complex64> = d.iter().zip(&self.sigma).zip(&self.target).map(|((x, s), t)| s * x - t).collect();
        let misfit2: f64 = r.iter().map(|v| v.norm_sqr()).sum();
        let r2 = self.radius * self.radius;
        if misfit2 > r2 {
            let floor2: f64 =
                r.iter().zip(&self.sigma).filter(|(_, s)| s.norm_sqr() == 0.0).map(|(v, _)| v.norm_sqr()).sum();
            if self.radius == 0.0 || floor2 >= r2 {
                // infinite multiplier: exact fit on every live bin
                for ((x, s), t) in d.iter_mut().zip(&self.sigma).zip(&self.target) {
                    if s.norm_sqr() > 0.0 {
                        *x = t / s;
                    }
                }
            } else {
                let mu = self.multiplier(&r, r2);
                for ((x, s), t) in d.iter_mut().zip(&self.sigma).zip(&self.target) {
                    let s2 = s.norm_sqr();
                    *x = (*x + s.conj() * t * mu) / (1.0 + mu * s2);
                }
            }
        }
        unitary_idft(d);
    }

    /// Root of `sum |r_k|^2 / (1 + mu |sigma_k|^2)^2 = radius^2` in `mu > 0`.
    fn multiplier(&self, r: &[Complex64], r2: f64) -> f64 {
        let f = |mu: f64| -> f64 {
            r.iter().zip(&self.sigma).map(|(v, s)| v.norm_sqr() / (1.0 + mu * s.norm_sqr()).powi(2)).sum::<f64>()
        };
        let mut lo = 0.0;
        let mut hi = 1.0;
        while f(hi) > r2 {
            lo = hi;
            hi *= 2.0;
            if hi > 1e300 {
                return hi;
            }
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if f(mid) > r2 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        hi
    }
}

/// Data of one trace-minimization instance.
#[derive(Clone, Debug)]
pub struct SdpProblem {
    n: usize,
    lambda_set: BTreeSet<usize>,
    z_columns: BTreeMap<usize, Vec<Complex64>>,
    autocorrs: BTreeMap<usize, WindowAutocorrelation>,
    eta: BTreeMap<usize, f64>,
    /// `|Y|` total divided by `N |g|^2`: the trace of `x x*` implied by the data.
    trace_scale: f64,
}

impl SdpProblem {
    /// `eta` holds one bound per lag `0..N`; only entries for lags in
    /// `lambda_set` are used.
    pub fn new(y: &MagnitudeMeasurements, g: &Window, lambda_set: &[usize], eta: &[f64]) -> Result<Self> {
        let n = y.n();
        if g.len() != n {
            return Err(Error::LengthMismatch { expected: n, found: g.len() });
        }
        if eta.len() != n {
            return Err(Error::LengthMismatch { expected: n, found: eta.len() });
        }
        if lambda_set.is_empty() {
            return Err(Error::EmptyLagSet);
        }
        if n > MAX_SDP_N {
            return Err(Error::InvalidParameter(format!("SDP size N={n} exceeds {MAX_SDP_N}")));
        }
        let z = magnitude_dft(y);
        let mut lags = BTreeSet::new();
        let mut z_columns = BTreeMap::new();
        let mut autocorrs = BTreeMap::new();
        let mut etas = BTreeMap::new();
        for &ell in lambda_set {
            if ell >= n {
                return Err(Error::InvalidParameter(format!("lag {ell} out of range for N={n}")));
            }
            if !(eta[ell] >= 0.0) {
                return Err(Error::InvalidParameter(format!("eta at lag {ell} must be >= 0")));
            }
            lags.insert(ell);
            z_columns.insert(ell, z.column(ell));
            autocorrs.insert(ell, build_autocorrelation(g, ell)?);
            etas.insert(ell, eta[ell]);
        }
        let energy: f64 = g.values().iter().map(|v| v.norm_sqr()).sum();
        let total: f64 = y.grid().as_slice().iter().sum();
        let trace_scale = total / (n as f64 * energy);
        Ok(SdpProblem { n, lambda_set: lags, z_columns, autocorrs, eta: etas, trace_scale })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn lambda_set(&self) -> &BTreeSet<usize> {
        &self.lambda_set
    }

    pub fn eta(&self) -> &BTreeMap<usize, f64> {
        &self.eta
    }

    pub fn warnings(&self) -> Vec<String> {
        let mut w = Vec::new();
        if !self.lambda_set.contains(&0) {
            w.push("lag 0 is not constrained; the signal magnitudes are then unconstrained".into());
        }
        w
    }

    /// `|z_l - N G_l diag(M, l)|` for a lag in the set.
    pub fn constraint_residual(&self, m: &DMatrix<Complex64>, ell: usize) -> Option<f64> {
        let z = self.z_columns.get(&ell)?;
        let auto = self.autocorrs.get(&ell)?;
        let d: Vec<Complex64> = (0..self.n).map(|i| m[(i, (i + ell) % self.n)]).collect();
        let nf = self.n as f64;
        let pred = auto.apply(&d);
        Some(z.iter().zip(&pred).map(|(zz, p)| (zz - p * nf).norm_sqr()).sum::<f64>().sqrt())
    }

    /// Representative constraints in units where the data trace is 1.
    fn normalized_constraints(&self, scale: f64) -> Vec<LagConstraint> {
        let n = self.n;
        let mut reps: BTreeMap<usize, f64> = BTreeMap::new();
        for &ell in &self.lambda_set {
            let rep = ell.min(n - ell) % n;
            let e = self.eta[&ell];
            reps.entry(rep).and_modify(|v| *v = v.min(e)).or_insert(e);
        }
        let nf = n as f64;
        reps.into_iter()
            .map(|(rep, eta)| {
                // mirrored lags reuse the representative's column
                let auto = if let Some(a) = self.autocorrs.get(&rep) {
                    a.clone()
                } else {
                    build_autocorrelation_from(&self.autocorrs[&(n - rep)], rep)
                };
                let z = match self.z_columns.get(&rep) {
                    Some(z) => z.clone(),
                    None => mirror_column(&self.z_columns[&(n - rep)]),
                };
                let self_paired = rep == 0 || 2 * rep == n;
                let rhs: Vec<Complex64> = z
                    .iter()
                    .map(|v| {
                        let v = v / (nf * scale);
                        if self_paired {
                            Complex64::new(v.re, 0.0)
                        } else {
                            v
                        }
                    })
                    .collect();
                LagConstraint::new(&auto, &rhs, eta / (nf * scale))
            })
            .collect()
    }
}

/// For real measurements `Z[m, N - l] = conj(Z[m, l])`.
fn mirror_column(z: &[Complex64]) -> Vec<Complex64> {
    z.iter().map(|v| v.conj()).collect()
}

/// `c_l` from `c_{N-l}`: `c_l[m] = conj(c_{N-l}[m - l])`.
fn build_autocorrelation_from(mirror: &WindowAutocorrelation, ell: usize) -> WindowAutocorrelation {
    let n = mirror.column.len();
    let column: Vec<Complex64> = (0..n).map(|m| mirror.column[(m + n - ell) % n].conj()).collect();
    let mut spectrum = column.clone();
    dft_in_place(&mut spectrum);
    WindowAutocorrelation { ell, column, spectrum }
}

#[derive(Clone, Debug)]
pub struct SdpSolution {
    /// PSD, exactly Hermitian solution.
    pub matrix: LiftedMatrix,
    pub estimate: Signal,
    pub lambda_max: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Every constraint holds within `eta_l + 1e-6 |z_l|`.
    pub feasible: bool,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub trace: f64,
    /// `|z_l - N G_l diag(X, l)|` for each lag in the set, comparable to `eta_l`.
    pub constraint_residuals: BTreeMap<usize, f64>,
    pub eta: BTreeMap<usize, f64>,
    pub history: Vec<SdpIterate>,
    pub warnings: Vec<String>,
}

/// Builds the problem from measurements and solves it.
pub fn recover_sdp(
    y: &MagnitudeMeasurements,
    g: &Window,
    lambda_set: &[usize],
    eta: &[f64],
    opts: &SdpOptions,
) -> Result<SdpSolution> {
    solve(&SdpProblem::new(y, g, lambda_set, eta)?, opts)
}

pub fn solve(problem: &SdpProblem, opts: &SdpOptions) -> Result<SdpSolution> {
    if !(opts.rho > 0.0) || !(opts.tol > 0.0) || opts.max_iters == 0 {
        return Err(Error::InvalidParameter("SDP options need rho > 0, tol > 0, max_iters >= 1".into()));
    }
    let n = problem.n;
    let scale = if problem.trace_scale.is_finite() && problem.trace_scale > 0.0 { problem.trace_scale } else { 1.0 };
    let constraints = problem.normalized_constraints(scale);
    let rhs_norm = constraints.iter().map(|c| c.target.iter().map(|t| t.norm_sqr()).sum::<f64>()).sum::<f64>().sqrt();
    let eps = opts.tol * (1.0 + rhs_norm);
    let rho = opts.rho;
    let shift = Complex64::new(1.0 / rho, 0.0);

    let mut x = DMatrix::<Complex64>::zeros(n, n);
    let mut y = DMatrix::<Complex64>::zeros(n, n);
    let mut u = DMatrix::<Complex64>::zeros(n, n);
    let mut prev_s: Option<DMatrix<Complex64>> = None;
    let mut history = Vec::new();
    let mut iterations = 0;
    let mut converged = false;
    let mut primal = f64::INFINITY;
    let mut dual = f64::INFINITY;
    let mut diag = vec![Complex64::default(); n];

    while iterations < opts.max_iters {
        iterations += 1;
        let mut arg = &y - &u;
        for i in 0..n {
            arg[(i, i)] -= shift;
        }
        let (xn, trace) = psd_project_with_trace(&arg);
        x = xn;

        let s = &x + &u;
        let mut yn = s.clone();
        for c in &constraints {
            let ell = c.ell;
            for (i, d) in diag.iter_mut().enumerate() {
                *d = s[(i, (i + ell) % n)];
            }
            c.project(&mut diag);
            for (i, d) in diag.iter().enumerate() {
                let j = (i + ell) % n;
                yn[(i, j)] = *d;
                yn[(j, i)] = d.conj();
            }
        }
        let yn = hermitian_part(&yn);

        primal = (&x - &yn).norm();
        dual = rho * (&yn - &y).norm();
        u = &s - &yn;
        y = yn;

        let merit = prev_s.as_ref().map_or(f64::NAN, |p| (&s - p).norm());
        prev_s = Some(s);
        if opts.record_history {
            history.push(SdpIterate {
                iteration: iterations,
                primal_residual: primal,
                dual_residual: dual,
                trace: trace * scale,
                merit,
            });
        }
        if primal < eps && dual < eps {
            converged = true;
            break;
        }
    }

    let matrix = x.map(|v| v * scale);
    let lifted = LiftedMatrix::new(matrix)?;
    let pair = leading_eigenpair_unchecked(lifted.matrix());
    let estimate = if pair.value > 0.0 {
        let s = Complex64::new(pair.value.sqrt(), 0.0);
        Signal::new(pair.vector.iter().map(|v| v * s).collect())?
    } else {
        Signal::zeros(n)?
    };

    let mut constraint_residuals = BTreeMap::new();
    let mut feasible = true;
    for &ell in &problem.lambda_set {
        let r = problem.constraint_residual(lifted.matrix(), ell).expect("lag in set");
        let zn = problem.z_columns[&ell].iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        if r > problem.eta[&ell] + 1e-6 * zn {
            feasible = false;
        }
        constraint_residuals.insert(ell, r);
    }

    Ok(SdpSolution {
        trace: lifted.trace(),
        matrix: lifted,
        estimate,
        lambda_max: pair.value,
        iterations,
        converged,
        feasible,
        primal_residual: primal * scale,
        dual_residual: dual * scale,
        constraint_residuals,
        eta: problem.eta.clone(),
        history,
        warnings: problem.warnings(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transforms::measure;

    #[test]
    fn eta_defaults_and_overrides() {
        let e = default_eta(0.0, 5, &BTreeMap::new()).unwrap();
        assert!(e.iter().all(|&v| v == 0.0));
        let e = default_eta(0.1, 23, &BTreeMap::new()).unwrap();
        assert!((e[4] - 2.76).abs() < 1e-12);
        let e = default_eta(0.1, 23, &BTreeMap::from([(3, 0.5)])).unwrap();
        assert_eq!(e[3], 0.5);
        assert!(default_eta(-1.0, 5, &BTreeMap::new()).is_err());
        assert!(default_eta(1.0, 5, &BTreeMap::from([(5, 0.5)])).is_err());
    }

    #[test]
    fn projection_lands_on_the_ball() {
        let g = Window::gaussian(9, 3.0).unwrap();
        let auto = build_autocorrelation(&g, 1).unwrap();
        let rhs: Vec<Complex64> = (0..9).map(|i| Complex64::new(i as f64, 1.0)).collect();
        let c = LagConstraint::new(&auto, &rhs, 0.5);
        let mut d = vec![Complex64::default(); 9];
        c.project(&mut d);
        let pred = auto.apply(&d);
        let r: f64 = rhs.iter().zip(&pred).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
        assert!((r - 0.5).abs() < 1e-9, "{r}");
        // a point already inside is unchanged
        let mut inside = d.clone();
        c.project(&mut inside);
        for (a, b) in inside.iter().zip(&d) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn empty_lag_set_rejected() {
        let x = Signal::random_gaussian(5, 1).unwrap();
        let g = Window::rectangular(5, 3).unwrap();
        let y = measure(&x, &g).unwrap();
        let eta = vec![0.0; 5];
        assert!(matches!(recover_sdp(&y, &g, &[], &eta, &SdpOptions::default()), Err(Error::EmptyLagSet)));
        assert!(recover_sdp(&y, &g, &[5], &eta, &SdpOptions::default()).is_err());
    }

    #[test]
    fn warns_without_lag_zero() {
        let x = Signal::random_gaussian(5, 1).unwrap();
        let g = Window::rectangular(5, 3).unwrap();
        let y = measure(&x, &g).unwrap();
        let p = SdpProblem::new(&y, &g, &[1, 2], &[0.0; 5]).unwrap();
        assert_eq!(p.warnings().len(), 1);
    }

    #[test]
    fn mirrored_autocorrelation_matches_direct() {
        let g = Window::custom(crate::rng::complex_gaussian(7, &mut crate::rng::seeded(1, 0))).unwrap();
        for ell in 1..7 {
            let direct = build_autocorrelation(&g, ell).unwrap();
            let via = build_autocorrelation_from(&build_autocorrelation(&g, 7 - ell).unwrap(), ell);
            for (a, b) in direct.column.iter().zip(&via.column) {
                assert!((a - b).norm() < 1e-15);
            }
        }
    }
}
