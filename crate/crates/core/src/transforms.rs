//! DFT for any length, the unit-hop STFT, squared-magnitude measurement,
//! the per-row magnitude DFT, and least-squares STFT synthesis.
//!
//! All index arithmetic is modulo `N`. Transforms are unnormalized in the
//! forward direction and carry `1/N` in the inverse.

use std::cell::RefCell;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::measurements::MagnitudeMeasurements;
use crate::signal::{Signal, Window};

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plan(n: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        if inverse {
            p.plan_fft_inverse(n)
        } else {
            p.plan_fft_forward(n)
        }
    })
}

/// In-place `w[l] = sum_n v[n] e^{-2 pi j n l / N}`.
pub fn dft_in_place(v: &mut [Complex64]) {
    if v.len() > 1 {
        plan(v.len(), false).process(v);
    }
}

/// In-place inverse DFT, including the `1/N` factor.
pub fn inverse_dft_in_place(v: &mut [Complex64]) {
    let n = v.len();
    if n > 1 {
        plan(n, true).process(v);
        let s = 1.0 / n as f64;
        v.iter_mut().for_each(|x| *x *= s);
    }
}

pub fn dft(v: &[Complex64]) -> Vec<Complex64> {
    let mut out = v.to_vec();
    dft_in_place(&mut out);
    out
}

pub fn inverse_dft(v: &[Complex64]) -> Vec<Complex64> {
    let mut out = v.to_vec();
    inverse_dft_in_place(&mut out);
    out
}

/// Unnormalized 2D DFT: rows then columns.
pub fn dft2(g: &Grid<Complex64>) -> Grid<Complex64> {
    transform2(g, false)
}

/// Inverse 2D DFT including the `1/(rows cols)` factor.
pub fn inverse_dft2(g: &Grid<Complex64>) -> Grid<Complex64> {
    transform2(g, true)
}

fn transform2(g: &Grid<Complex64>, inverse: bool) -> Grid<Complex64> {
    let step = if inverse { inverse_dft_in_place } else { dft_in_place };
    let mut out = g.clone();
    for r in 0..out.rows() {
        step(out.row_mut(r));
    }
    let mut col = vec![Complex64::default(); out.rows()];
    for c in 0..out.cols() {
        for (r, v) in col.iter_mut().enumerate() {
            *v = out[(r, c)];
        }
        step(&mut col);
        for (r, v) in col.iter().enumerate() {
            out[(r, c)] = *v;
        }
    }
    out
}

/// STFT with hop 1: `values[(m, k)] = X[m, k]`.
#[derive(Clone, Debug, PartialEq)]
pub struct StftGrid {
    pub values: Grid<Complex64>,
    pub window: Window,
    pub hop: usize,
}

impl StftGrid {
    pub fn magnitudes_squared(&self) -> Grid<f64> {
        self.values.map(|v| v.norm_sqr())
    }
}

fn check_lengths(x: &Signal, g: &Window) -> Result<()> {
    if x.len() != g.len() {
        return Err(Error::LengthMismatch { expected: x.len(), found: g.len() });
    }
    Ok(())
}

/// `X[m, k] = sum_n x[n] g[(m - n) mod N] e^{-2 pi j k n / N}`.
pub fn stft_forward(x: &Signal, g: &Window) -> Result<StftGrid> {
    check_lengths(x, g)?;
    let n = x.len();
    let mut values = Grid::zeros(n, n);
    for m in 0..n {
        let row = values.row_mut(m);
        for (i, r) in row.iter_mut().enumerate() {
            *r = x.values()[i] * g.at(m as isize - i as isize);
        }
        dft_in_place(row);
    }
    Ok(StftGrid { values, window: g.clone(), hop: 1 })
}

/// Noise-free measurements `Y[m, k] = |X[m, k]|^2`.
pub fn measure(x: &Signal, g: &Window) -> Result<MagnitudeMeasurements> {
    MagnitudeMeasurements::new(stft_forward(x, g)?.magnitudes_squared())
}

/// `Z[m, l] = sum_k Y[m, k] e^{-2 pi j k l / N}`.
#[derive(Clone, Debug, PartialEq)]
pub struct MagnitudeDft {
    pub values: Grid<Complex64>,
}

impl MagnitudeDft {
    pub fn n(&self) -> usize {
        self.values.rows()
    }

    /// The column `z_l = (Z[m, l])_m`.
    pub fn column(&self, ell: usize) -> Vec<Complex64> {
        (0..self.n()).map(|m| self.values[(m, ell)]).collect()
    }
}

pub fn magnitude_dft(y: &MagnitudeMeasurements) -> MagnitudeDft {
    let grid = y.grid();
    let mut values = grid.map(|&v| Complex64::new(v, 0.0));
    for m in 0..values.rows() {
        dft_in_place(values.row_mut(m));
    }
    MagnitudeDft { values }
}

/// Least-squares signal whose STFT is closest to `stft` in Frobenius norm:
///
/// `x[n] = sum_m idft(X[m, .])[n] conj(g[m - n]) / sum_m |g[m - n]|^2`.
pub fn istft_ls(stft: &Grid<Complex64>, g: &Window) -> Result<Signal> {
    let n = g.len();
    if stft.rows() != n || stft.cols() != n {
        return Err(Error::LengthMismatch { expected: n, found: stft.rows() });
    }
    // with hop 1 every sample sees every window shift
    let energy: f64 = g.values().iter().map(|v| v.norm_sqr()).sum();
    if energy == 0.0 {
        return Err(Error::InvalidParameter("window is identically zero".into()));
    }
    let mut acc = vec![Complex64::default(); n];
    let mut row = vec![Complex64::default(); n];
    for m in 0..n {
        row.copy_from_slice(stft.row(m));
        inverse_dft_in_place(&mut row);
        for (i, a) in acc.iter_mut().enumerate() {
            *a += row[i] * g.at(m as isize - i as isize).conj();
        }
    }
    acc.iter_mut().for_each(|a| *a /= energy);
    Signal::new(acc)
}
