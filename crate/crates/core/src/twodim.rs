//! Square bivariate signals. The 2D magnitude DFT yields, for each lag pair
//! `(l1, l2)`, a block-circulant system with circulant blocks that the 2D
//! DFT diagonalizes; the 1D least-squares and algebraic recoveries carry over.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::circulant::INVERTIBILITY_TOL;
use crate::eigen::leading_eigenpair_unchecked;
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::lifted::hermitian_part;
use crate::recover::VANISHING_TOL;
use crate::rng::{self, STREAM_SIGNAL};
use crate::signal::{wrap, Window};
use crate::transforms::{dft2, inverse_dft2};

/// Largest side length for which [`recover2_ls`] materializes the
/// `N^2 x N^2` lifted matrix.
pub const MAX_LIFT_SIDE: usize = 8;

fn check_square<T>(g: &Grid<T>) -> Result<usize> {
    if !g.is_square() || g.rows() < 2 {
        return Err(Error::InvalidParameter(format!(
            "expected a square grid of side >= 2, got {}x{}",
            g.rows(),
            g.cols()
        )));
    }
    Ok(g.rows())
}

/// `N x N` complex signal, periodic in both indices.
#[derive(Clone, Debug, PartialEq)]
pub struct Signal2D {
    values: Grid<Complex64>,
}

impl Signal2D {
    pub fn new(values: Grid<Complex64>) -> Result<Self> {
        check_square(&values)?;
        Ok(Signal2D { values })
    }

    pub fn random_gaussian(n: usize, seed: u64) -> Result<Self> {
        let v = rng::complex_gaussian(n * n, &mut rng::seeded(seed, STREAM_SIGNAL));
        Signal2D::new(Grid::from_vec(n, n, v).expect("n*n samples"))
    }

    /// `a[n1] b[n2]`.
    pub fn outer(a: &[Complex64], b: &[Complex64]) -> Result<Self> {
        if a.len() != b.len() {
            return Err(Error::LengthMismatch { expected: a.len(), found: b.len() });
        }
        Signal2D::new(Grid::from_fn(a.len(), b.len(), |i, j| a[i] * b[j]))
    }

    pub fn n(&self) -> usize {
        self.values.rows()
    }

    pub fn values(&self) -> &Grid<Complex64> {
        &self.values
    }

    pub fn at(&self, i: isize, j: isize) -> Complex64 {
        let n = self.n();
        self.values[(wrap(i, n), wrap(j, n))]
    }

    pub fn norm(&self) -> f64 {
        self.values.as_slice().iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn is_non_vanishing(&self) -> bool {
        self.values.as_slice().iter().all(|v| v.norm() > 0.0)
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        Signal2D { values: self.values.map(|v| v * c) }
    }

    /// Row-major samples, index `n1 * N + n2`.
    pub fn flatten(&self) -> &[Complex64] {
        self.values.as_slice()
    }
}

/// `N x N` window, periodic in both indices.
#[derive(Clone, Debug, PartialEq)]
pub struct Window2D {
    values: Grid<Complex64>,
}

impl Window2D {
    pub fn new(values: Grid<Complex64>) -> Result<Self> {
        check_square(&values)?;
        Ok(Window2D { values })
    }

    /// Product window `a[m1] b[m2]`.
    pub fn separable(a: &Window, b: &Window) -> Result<Self> {
        if a.len() != b.len() {
            return Err(Error::LengthMismatch { expected: a.len(), found: b.len() });
        }
        Window2D::new(Grid::from_fn(a.len(), b.len(), |i, j| a.values()[i] * b.values()[j]))
    }

    pub fn n(&self) -> usize {
        self.values.rows()
    }

    pub fn values(&self) -> &Grid<Complex64> {
        &self.values
    }

    pub fn at(&self, i: isize, j: isize) -> Complex64 {
        let n = self.n();
        self.values[(wrap(i, n), wrap(j, n))]
    }
}

/// Four-index array stored as one `N x N` grid per window position
/// `(m1, m2)`, at offset `m1 * N + m2`.
#[derive(Clone, Debug, PartialEq)]
pub struct Array4<T> {
    n: usize,
    slices: Vec<Grid<T>>,
}

impl<T> Array4<T> {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn slice(&self, m1: usize, m2: usize) -> &Grid<T> {
        &self.slices[m1 * self.n + m2]
    }

    pub fn get(&self, m1: usize, m2: usize, k1: usize, k2: usize) -> &T {
        &self.slice(m1, m2)[(k1, k2)]
    }

    pub fn from_slices(n: usize, slices: Vec<Grid<T>>) -> Result<Self> {
        if slices.len() != n * n || slices.iter().any(|s| s.rows() != n || s.cols() != n) {
            return Err(Error::InvalidParameter("four-index array has inconsistent shape".into()));
        }
        Ok(Array4 { n, slices })
    }
}

pub type Stft2 = Array4<Complex64>;
pub type Magnitudes2D = Array4<f64>;

/// `X[m1, m2; k1, k2] = sum_n x[n1, n2] g[m1 - n1, m2 - n2] e^{-2 pi j (k1 n1 + k2 n2) / N}`.
pub fn stft2_forward(x: &Signal2D, g: &Window2D) -> Result<Stft2> {
    let n = x.n();
    if g.n() != n {
        return Err(Error::LengthMismatch { expected: n, found: g.n() });
    }
    let mut slices = Vec::with_capacity(n * n);
    for m1 in 0..n {
        for m2 in 0..n {
            let prod =
                Grid::from_fn(n, n, |i, j| x.values[(i, j)] * g.at(m1 as isize - i as isize, m2 as isize - j as isize));
            slices.push(dft2(&prod));
        }
    }
    Ok(Array4 { n, slices })
}

pub fn measure2(x: &Signal2D, g: &Window2D) -> Result<Magnitudes2D> {
    let s = stft2_forward(x, g)?;
    Ok(Array4 { n: s.n, slices: s.slices.iter().map(|sl| sl.map(|v| v.norm_sqr())).collect() })
}

/// 2D DFT of each magnitude slice over `(k1, k2)`.
pub fn magnitude_dft2(y: &Magnitudes2D) -> Array4<Complex64> {
    let slices = y.slices.iter().map(|s| dft2(&s.map(|&v| Complex64::new(v, 0.0)))).collect();
    Array4 { n: y.n, slices }
}

/// The `(m1, m2)` grid of `Z[m1, m2; l1, l2]` for a fixed lag pair.
pub fn lag_column(z: &Array4<Complex64>, ell: (usize, usize)) -> Grid<Complex64> {
    Grid::from_fn(z.n, z.n, |m1, m2| *z.get(m1, m2, ell.0, ell.1))
}

/// First column of the block-circulant operator for a lag pair,
/// `c[m1, m2] = g[m1, m2] conj(g[m1 - l1, m2 - l2])`, and its 2D DFT.
#[derive(Clone, Debug, PartialEq)]
pub struct Autocorrelation2D {
    pub ell: (usize, usize),
    pub column: Grid<Complex64>,
    pub spectrum: Grid<Complex64>,
}

impl Autocorrelation2D {
    pub fn singular_bin(&self, tol: f64) -> Option<(usize, usize)> {
        let max = self.spectrum.as_slice().iter().map(|v| v.norm()).fold(0.0, f64::max);
        if max == 0.0 {
            return Some((0, 0));
        }
        let n = self.spectrum.cols();
        self.spectrum.as_slice().iter().position(|v| v.norm() <= tol * max).map(|p| (p / n, p % n))
    }

    /// Operator application through the 2D DFT.
    pub fn apply(&self, v: &Grid<Complex64>) -> Grid<Complex64> {
        let mut f = dft2(v);
        f.as_mut_slice().iter_mut().zip(self.spectrum.as_slice()).for_each(|(a, s)| *a *= s);
        inverse_dft2(&f)
    }

    /// Dense `N^2 x N^2` operator, rows and columns indexed `n1 * N + n2`.
    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let n = self.column.rows();
        DMatrix::from_fn(n * n, n * n, |p, q| {
            let (m1, m2) = (p / n, p % n);
            let (n1, n2) = (q / n, q % n);
            self.column[((m1 + n - n1) % n, (m2 + n - n2) % n)]
        })
    }
}

pub fn build_autocorrelation2(g: &Window2D, ell: (usize, usize)) -> Result<Autocorrelation2D> {
    let n = g.n();
    if ell.0 >= n || ell.1 >= n {
        return Err(Error::InvalidParameter(format!("lag {ell:?} out of range for N={n}")));
    }
    let column = Grid::from_fn(n, n, |m1, m2| {
        g.values[(m1, m2)] * g.at(m1 as isize - ell.0 as isize, m2 as isize - ell.1 as isize).conj()
    });
    let spectrum = dft2(&column);
    Ok(Autocorrelation2D { ell, column, spectrum })
}

/// Solves `(1/N^2) rhs = G v`.
pub fn solve2(auto: &Autocorrelation2D, rhs: &Grid<Complex64>) -> Result<Grid<Complex64>> {
    let n = auto.column.rows();
    if rhs.rows() != n || rhs.cols() != n {
        return Err(Error::LengthMismatch { expected: n, found: rhs.rows() });
    }
    if let Some(bin) = auto.singular_bin(INVERTIBILITY_TOL) {
        return Err(Error::InadmissibleWindow2d { ell: auto.ell, bin });
    }
    let mut f = dft2(rhs);
    f.as_mut_slice().iter_mut().zip(auto.spectrum.as_slice()).for_each(|(a, s)| *a /= s);
    let mut out = inverse_dft2(&f);
    let inv = 1.0 / (n * n) as f64;
    out.as_mut_slice().iter_mut().for_each(|v| *v *= inv);
    Ok(out)
}

/// A 2D lag or frequency index `(row, column)`.
pub type Index2 = (usize, usize);

/// First lag pair (in the given order) whose spectrum has a vanishing bin.
pub fn first_inadmissible2(
    g: &Window2D,
    ells: impl IntoIterator<Item = (usize, usize)>,
) -> Result<Option<(Index2, Index2)>> {
    for ell in ells {
        if let Some(bin) = build_autocorrelation2(g, ell)?.singular_bin(INVERTIBILITY_TOL) {
            return Ok(Some((ell, bin)));
        }
    }
    Ok(None)
}

fn all_lags(n: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..n).flat_map(move |a| (0..n).map(move |b| (a, b)))
}

fn require_admissible(g: &Window2D, ells: impl IntoIterator<Item = (usize, usize)>) -> Result<()> {
    match first_inadmissible2(g, ells)? {
        Some((ell, bin)) => Err(Error::InadmissibleWindow2d { ell, bin }),
        None => Ok(()),
    }
}

/// `x[n1, n2] conj(x[n1 + l1, n2 + l2])` grids keyed by lag pair.
pub type Correlations2D = BTreeMap<(usize, usize), Grid<Complex64>>;

pub fn estimate_correlations2(
    y: &Magnitudes2D,
    g: &Window2D,
    ells: impl IntoIterator<Item = (usize, usize)>,
) -> Result<Correlations2D> {
    if g.n() != y.n {
        return Err(Error::LengthMismatch { expected: y.n, found: g.n() });
    }
    let z = magnitude_dft2(y);
    let mut out = BTreeMap::new();
    for ell in ells {
        let auto = build_autocorrelation2(g, ell)?;
        out.insert(ell, solve2(&auto, &lag_column(&z, ell))?);
    }
    Ok(out)
}

#[derive(Clone, Debug)]
pub struct Ls2Result {
    pub correlations: Correlations2D,
    /// Present when `N <= MAX_LIFT_SIDE` and the lift has a positive
    /// leading eigenvalue.
    pub estimate: Option<Signal2D>,
    pub lambda_max: Option<f64>,
}

/// Least-squares recovery for square 2D signals.
///
/// Solves every lag pair, and for `N <= 8` assembles the Hermitized
/// `N^2 x N^2` lift and extracts its leading rank-one factor. Larger sizes
/// return only the correlations.
pub fn recover2_ls(y: &Magnitudes2D, g: &Window2D) -> Result<Ls2Result> {
    let n = y.n;
    if g.n() != n {
        return Err(Error::LengthMismatch { expected: n, found: g.n() });
    }
    require_admissible(g, all_lags(n))?;
    let correlations = estimate_correlations2(y, g, all_lags(n))?;
    if n > MAX_LIFT_SIDE {
        return Ok(Ls2Result { correlations, estimate: None, lambda_max: None });
    }

    let nn = n * n;
    let mut lift = DMatrix::<Complex64>::zeros(nn, nn);
    for (&(l1, l2), c) in &correlations {
        for n1 in 0..n {
            for n2 in 0..n {
                let p = n1 * n + n2;
                let q = ((n1 + l1) % n) * n + (n2 + l2) % n;
                lift[(p, q)] = c[(n1, n2)];
            }
        }
    }
    let lift = hermitian_part(&lift);
    let pair = leading_eigenpair_unchecked(&lift);
    let estimate = if pair.value > 0.0 {
        let s = pair.value.sqrt();
        let v = pair.vector.iter().map(|u| u * s).collect();
        Some(Signal2D::new(Grid::from_vec(n, n, v).expect("n*n samples"))?)
    } else {
        None
    };
    Ok(Ls2Result { correlations, estimate, lambda_max: Some(pair.value) })
}

/// Algebraic recovery for non-vanishing 2D signals.
///
/// Magnitudes come from lag `(0, 0)`. The phase is fixed by taking
/// `x[0, 0]` real and nonnegative, propagated along row 0 with lag `(0, 1)`,
/// then down column 0 with lag `(1, 0)` to start each further row, which is
/// again completed with lag `(0, 1)`.
pub fn recover2_algebraic(y: &Magnitudes2D, g: &Window2D) -> Result<Signal2D> {
    let n = y.n;
    if g.n() != n {
        return Err(Error::LengthMismatch { expected: n, found: g.n() });
    }
    let lags = [(0, 0), (0, 1), (1, 0)];
    require_admissible(g, lags)?;
    let corr = estimate_correlations2(y, g, lags)?;
    let x00 = &corr[&(0, 0)];
    let x01 = &corr[&(0, 1)];
    let x10 = &corr[&(1, 0)];

    let first = x00[(0, 0)].re;
    if first < 0.0 {
        return Err(Error::NegativeMagnitude { index: 0, value: first });
    }
    let scale = x00.as_slice().iter().map(|v| v.re.max(0.0).sqrt()).fold(0.0, f64::max);
    let threshold = VANISHING_TOL * scale;
    let divide = |num: Complex64, den: Complex64, at: (usize, usize)| -> Result<Complex64> {
        if !(den.norm() > threshold) {
            return Err(Error::VanishingSignal2d { index: at });
        }
        Ok((num / den).conj())
    };

    let mut est = Grid::<Complex64>::zeros(n, n);
    est[(0, 0)] = Complex64::new(first.sqrt(), 0.0);
    for r in 0..n {
        if r > 0 {
            est[(r, 0)] = divide(x10[(r - 1, 0)], est[(r - 1, 0)], (r - 1, 0))?;
        }
        for c in 0..n - 1 {
            est[(r, c + 1)] = divide(x01[(r, c)], est[(r, c)], (r, c))?;
        }
    }
    Signal2D::new(est)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn delta_with_unit_window_is_flat() {
        let mut v = Grid::zeros(3, 3);
        v[(0, 0)] = c(1.0, 0.0);
        let x = Signal2D::new(v).unwrap();
        let g = Window2D::new(Grid::from_fn(3, 3, |_, _| c(1.0, 0.0))).unwrap();
        let s = stft2_forward(&x, &g).unwrap();
        for sl in &s.slices {
            assert!(sl.as_slice().iter().all(|v| (v - c(1.0, 0.0)).norm() < 1e-14));
        }
    }

    #[test]
    fn rectangular_product_is_not_pair_admissible_at_n4() {
        let r = Window::rectangular(4, 3).unwrap();
        let g = Window2D::separable(&r, &r).unwrap();
        let bad = first_inadmissible2(&g, [(0, 0), (0, 1), (1, 0)]).unwrap();
        assert!(bad.is_some());
    }

    #[test]
    fn vanishing_entry_is_reported() {
        let mut x = Signal2D::random_gaussian(5, 2).unwrap();
        x.values[(1, 1)] = c(0.0, 0.0);
        let r = Window::rectangular(5, 3).unwrap();
        let g = Window2D::separable(&r, &r).unwrap();
        let y = measure2(&x, &g).unwrap();
        let err = recover2_algebraic(&y, &g).unwrap_err();
        assert!(matches!(err, Error::VanishingSignal2d { index: (1, 1) }), "{err:?}");
    }

    #[test]
    fn shape_checks() {
        assert!(Signal2D::new(Grid::zeros(2, 3)).is_err());
        let x = Signal2D::random_gaussian(3, 1).unwrap();
        let g = Window2D::new(Grid::from_fn(4, 4, |_, _| c(1.0, 0.0))).unwrap();
        assert!(stft2_forward(&x, &g).is_err());
    }
}
