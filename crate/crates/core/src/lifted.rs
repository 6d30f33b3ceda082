use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::signal::Signal;

/// Circular-diagonal correlations `x_l[n] = x[n] conj(x[(n + l) mod N])`,
/// keyed by lag `l`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct DiagonalCorrelations {
    n: usize,
    entries: BTreeMap<usize, Vec<Complex64>>,
}

impl DiagonalCorrelations {
    pub fn new(n: usize) -> Self {
        DiagonalCorrelations { n, entries: BTreeMap::new() }
    }

    /// Exact correlations of `x` at the requested lags.
    pub fn from_signal(x: &Signal, ells: impl IntoIterator<Item = usize>) -> Self {
        let n = x.len();
        let v = x.values();
        let mut out = DiagonalCorrelations::new(n);
        for ell in ells {
            let ell = ell % n;
            let d = (0..n).map(|i| v[i] * v[(i + ell) % n].conj()).collect();
            out.entries.insert(ell, d);
        }
        out
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn insert(&mut self, ell: usize, values: Vec<Complex64>) -> Result<()> {
        if ell >= self.n {
            return Err(Error::InvalidParameter(format!("lag {ell} out of range for N={}", self.n)));
        }
        if values.len() != self.n {
            return Err(Error::LengthMismatch { expected: self.n, found: values.len() });
        }
        self.entries.insert(ell, values);
        Ok(())
    }

    pub fn get(&self, ell: usize) -> Option<&[Complex64]> {
        self.entries.get(&ell).map(Vec::as_slice)
    }

    pub fn lags(&self) -> impl Iterator<Item = usize> + '_ {
        self.entries.keys().copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, &[Complex64])> {
        self.entries.iter().map(|(&l, v)| (l, v.as_slice()))
    }
}

/// Square complex matrix estimating `x x*`.
#[derive(Clone, Debug, PartialEq)]
pub struct LiftedMatrix {
    entries: DMatrix<Complex64>,
}

impl LiftedMatrix {
    pub fn new(entries: DMatrix<Complex64>) -> Result<Self> {
        if !entries.is_square() {
            return Err(Error::InvalidParameter("lifted matrix must be square".into()));
        }
        Ok(LiftedMatrix { entries })
    }

    pub fn zeros(n: usize) -> Self {
        LiftedMatrix { entries: DMatrix::zeros(n, n) }
    }

    /// The rank-one lift `x x*`.
    pub fn outer(x: &Signal) -> Self {
        let v = x.values();
        let n = v.len();
        LiftedMatrix { entries: DMatrix::from_fn(n, n, |i, j| v[i] * v[j].conj()) }
    }

    /// Places each stored `x_l` on circular diagonal `l`; missing lags stay zero.
    pub fn from_correlations(corr: &DiagonalCorrelations) -> Self {
        let n = corr.n();
        let mut m = DMatrix::zeros(n, n);
        for (ell, d) in corr.iter() {
            for (i, v) in d.iter().enumerate() {
                m[(i, (i + ell) % n)] = *v;
            }
        }
        LiftedMatrix { entries: m }
    }

    pub fn n(&self) -> usize {
        self.entries.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.entries
    }

    pub fn into_matrix(self) -> DMatrix<Complex64> {
        self.entries
    }

    /// Entries `(i, (i + l) mod N)` for `i = 0..N`.
    pub fn circular_diagonal(&self, ell: usize) -> Vec<Complex64> {
        let n = self.n();
        (0..n).map(|i| self.entries[(i, (i + ell) % n)]).collect()
    }

    /// `(X + X*) / 2`, with exactly mirrored off-diagonal entries and a real
    /// diagonal.
    pub fn hermitized(&self) -> Self {
        LiftedMatrix { entries: hermitian_part(&self.entries) }
    }

    pub fn is_hermitian(&self) -> bool {
        let n = self.n();
        (0..n).all(|i| (i..n).all(|j| self.entries[(i, j)] == self.entries[(j, i)].conj()))
    }

    pub fn trace(&self) -> f64 {
        self.entries.diagonal().iter().map(|v| v.re).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.entries.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }
}

pub(crate) fn hermitian_part(m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let n = m.nrows();
    let mut out = DMatrix::zeros(n, n);
    for i in 0..n {
        out[(i, i)] = Complex64::new(m[(i, i)].re, 0.0);
        for j in i + 1..n {
            let v = (m[(i, j)] + m[(j, i)].conj()) * 0.5;
            out[(i, j)] = v;
            out[(j, i)] = v.conj();
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn outer_diagonals_match_correlations() {
        let x = Signal::random_gaussian(6, 1).unwrap();
        let lift = LiftedMatrix::outer(&x);
        let corr = DiagonalCorrelations::from_signal(&x, 0..6);
        for (ell, d) in corr.iter() {
            assert_eq!(lift.circular_diagonal(ell), d);
        }
        assert_eq!(LiftedMatrix::from_correlations(&corr), lift);
    }

    #[test]
    fn hermitization_is_idempotent_and_symmetric() {
        let x = Signal::random_gaussian(5, 2).unwrap();
        let mut corr = DiagonalCorrelations::from_signal(&x, 0..5);
        // perturb one lag so the raw matrix is not Hermitian
        let mut d = corr.get(2).unwrap().to_vec();
        d[0] += Complex64::new(0.3, -0.1);
        corr.insert(2, d).unwrap();
        let raw = LiftedMatrix::from_correlations(&corr);
        assert!(!raw.is_hermitian());
        let h = raw.hermitized();
        assert!(h.is_hermitian());
        assert_eq!(h.hermitized(), h);
    }

    #[test]
    fn insert_validates() {
        let mut c = DiagonalCorrelations::new(3);
        assert!(c.insert(3, vec![Complex64::default(); 3]).is_err());
        assert!(c.insert(1, vec![Complex64::default(); 2]).is_err());
    }
}
