//! Hermitian eigen-solvers: the leading eigenpair used for rank-one
//! extraction, a cyclic Jacobi decomposition, and projection onto the PSD
//! cone.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::lifted::{hermitian_part, LiftedMatrix};
use crate::rng;

const POWER_ANGLE_TOL: f64 = 1e-10;
const RESIDUAL_TOL: f64 = 1e-8;
const JACOBI_MAX_SWEEPS: usize = 100;

#[derive(Clone, Debug, PartialEq)]
pub struct EigenPair {
    pub value: f64,
    /// Unit-norm eigenvector.
    pub vector: Vec<Complex64>,
}

/// Algebraically largest eigenvalue of a Hermitian matrix and a unit
/// eigenvector for it.
///
/// Runs power iteration on `X + s I` with `s = |X|_1`, which makes every
/// eigenvalue nonnegative so the algebraically largest one dominates. If the
/// iteration stalls (small spectral gap) or the final residual exceeds
/// `1e-8 |X|_F`, falls back to a full Jacobi decomposition.
///
/// Returns [`Error::NoRankOneComponent`] when the largest eigenvalue is not
/// positive.
pub fn leading_eigenpair(matrix: &LiftedMatrix) -> Result<EigenPair> {
    let pair = leading_eigenpair_unchecked(matrix.matrix());
    if pair.value <= 0.0 {
        return Err(Error::NoRankOneComponent { eigenvalue: pair.value });
    }
    Ok(pair)
}

/// As [`leading_eigenpair`] but returns the pair whatever the sign of the
/// eigenvalue.
pub fn leading_eigenpair_unchecked(m: &DMatrix<Complex64>) -> EigenPair {
    let fro = frobenius(m);
    if fro == 0.0 {
        let mut vector = vec![Complex64::new(0.0, 0.0); m.nrows()];
        vector[0] = Complex64::new(1.0, 0.0);
        return EigenPair { value: 0.0, vector };
    }
    if let Some(pair) = power_iteration(m) {
        if residual(m, &pair) <= RESIDUAL_TOL * fro {
            return pair;
        }
    }
    let (values, vectors) = jacobi_eigen(m);
    let last = values.len() - 1;
    EigenPair { value: values[last], vector: vectors.column(last).iter().copied().collect() }
}

fn frobenius(m: &DMatrix<Complex64>) -> f64 {
    m.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}

fn residual(m: &DMatrix<Complex64>, pair: &EigenPair) -> f64 {
    let v = DVector::from_column_slice(&pair.vector);
    (m * &v - v * Complex64::new(pair.value, 0.0)).norm()
}

fn power_iteration(m: &DMatrix<Complex64>) -> Option<EigenPair> {
    let n = m.nrows();
    // max absolute column sum bounds the spectral radius
    let shift = (0..n).map(|j| m.column(j).iter().map(|v| v.norm()).sum::<f64>()).fold(0.0, f64::max);

    // Start from the heaviest column plus a small fixed perturbation so the
    // start is never exactly orthogonal to the dominant eigenvector.
    let j = (0..n).max_by(|&a, &b| m.column(a).norm().total_cmp(&m.column(b).norm())).unwrap_or(0);
    let jitter = rng::complex_gaussian(n, &mut rng::seeded(0x5eed, 0));
    let scale = m.column(j).norm().max(f64::MIN_POSITIVE);
    let mut v = DVector::from_fn(n, |i, _| m[(i, j)] + jitter[i] * (1e-3 * scale));
    let norm = v.norm();
    if norm == 0.0 {
        return None;
    }
    v /= Complex64::new(norm, 0.0);

    let shift_c = Complex64::new(shift, 0.0);
    for _ in 0..(10 * n).max(1) {
        let mut w = m * &v + &v * shift_c;
        let wn = w.norm();
        if wn == 0.0 {
            return None;
        }
        w /= Complex64::new(wn, 0.0);
        let overlap = v.dotc(&w).norm().min(1.0);
        let sin = (1.0 - overlap * overlap).max(0.0).sqrt();
        v = w;
        if sin < POWER_ANGLE_TOL {
            let value = v.dotc(&(m * &v)).re;
            return Some(EigenPair { value, vector: v.iter().copied().collect() });
        }
    }
    None
}

/// Full eigendecomposition of a Hermitian matrix by cyclic complex Jacobi
/// rotations. Returns eigenvalues in ascending order and the matching unit
/// eigenvectors as columns.
///
/// Only the Hermitian part of `m` is used.
pub fn jacobi_eigen(m: &DMatrix<Complex64>) -> (Vec<f64>, DMatrix<Complex64>) {
    let n = m.nrows();
    let mut a = hermitian_part(m);
    let mut v = DMatrix::<Complex64>::identity(n, n);
    let total = frobenius(&a);

    for _ in 0..JACOBI_MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)].norm_sqr())
            .sum::<f64>()
            .sqrt();
        if off <= 1e-15 * total || off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                let r = apq.norm();
                if r <= 1e-300 {
                    continue;
                }
                let app = a[(p, p)].re;
                let aqq = a[(q, q)].re;
                // phase that makes the pivot real, then a real rotation
                let phase = apq / r;
                let theta = (aqq - app) / (2.0 * r);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                // U = diag(1, conj(phase)) * [[c, s], [-s, c]]
                let upp = Complex64::new(c, 0.0);
                let upq = Complex64::new(s, 0.0);
                let uqp = -phase.conj() * s;
                let uqq = phase.conj() * c;

                for row in 0..n {
                    let xp = a[(row, p)];
                    let xq = a[(row, q)];
                    a[(row, p)] = xp * upp + xq * uqp;
                    a[(row, q)] = xp * upq + xq * uqq;
                    let yp = v[(row, p)];
                    let yq = v[(row, q)];
                    v[(row, p)] = yp * upp + yq * uqp;
                    v[(row, q)] = yp * upq + yq * uqq;
                }
                for col in 0..n {
                    let xp = a[(p, col)];
                    let xq = a[(q, col)];
                    a[(p, col)] = upp.conj() * xp + uqp.conj() * xq;
                    a[(q, col)] = upq.conj() * xp + uqq.conj() * xq;
                }
                a[(p, q)] = Complex64::new(0.0, 0.0);
                a[(q, p)] = Complex64::new(0.0, 0.0);
                a[(p, p)] = Complex64::new(a[(p, p)].re, 0.0);
                a[(q, q)] = Complex64::new(a[(q, q)].re, 0.0);
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].re.total_cmp(&a[(j, j)].re));
    let values = order.iter().map(|&i| a[(i, i)].re).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    (values, vectors)
}

/// Eigendecomposition by Householder tridiagonalization and implicit QR.
/// Eigenvalues are ascending.
pub fn hermitian_eigen(m: &DMatrix<Complex64>) -> (Vec<f64>, DMatrix<Complex64>) {
    let eig = SymmetricEigen::new(hermitian_part(m));
    let n = m.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

/// Frobenius-nearest positive semidefinite matrix: eigen-decompose, clip
/// negative eigenvalues to zero, reassemble. Output is exactly Hermitian.
pub fn psd_project(m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    psd_project_with_trace(m).0
}

/// [`psd_project`] plus the trace of the result.
pub(crate) fn psd_project_with_trace(m: &DMatrix<Complex64>) -> (DMatrix<Complex64>, f64) {
    let n = m.nrows();
    let (values, vectors) = hermitian_eigen(m);
    let mut out = DMatrix::<Complex64>::zeros(n, n);
    let mut trace = 0.0;
    for (k, &lam) in values.iter().enumerate() {
        if lam <= 0.0 {
            continue;
        }
        trace += lam;
        let u = vectors.column(k);
        for j in 0..n {
            let uj = u[j].conj() * lam;
            for i in 0..n {
                out[(i, j)] += u[i] * uj;
            }
        }
    }
    (hermitian_part(&out), trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::Signal;

    fn random_hermitian(n: usize, seed: u64) -> DMatrix<Complex64> {
        let g = rng::complex_gaussian(n * n, &mut rng::seeded(seed, 9));
        let a = DMatrix::from_column_slice(n, n, &g);
        hermitian_part(&(&a + a.adjoint()))
    }

    #[test]
    fn rank_one_unit() {
        let x = Signal::random_gaussian(6, 3).unwrap();
        let u = x.scaled(Complex64::new(1.0 / x.norm(), 0.0));
        let pair = leading_eigenpair(&LiftedMatrix::outer(&u)).unwrap();
        assert!((pair.value - 1.0).abs() < 1e-12);
        let est = Signal::new(pair.vector).unwrap();
        assert!(crate::metrics::phase_aligned_error(&u, &est).unwrap() < 1e-10);
    }

    #[test]
    fn diagonal_matrix() {
        let mut m = DMatrix::<Complex64>::zeros(3, 3);
        m[(0, 0)] = Complex64::new(3.0, 0.0);
        m[(1, 1)] = Complex64::new(1.0, 0.0);
        m[(2, 2)] = Complex64::new(1.0, 0.0);
        let pair = leading_eigenpair(&LiftedMatrix::new(m).unwrap()).unwrap();
        assert!((pair.value - 3.0).abs() < 1e-12);
        assert!((pair.vector[0].norm() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn negative_definite_has_no_rank_one_component() {
        let m = -DMatrix::<Complex64>::identity(4, 4);
        let err = leading_eigenpair(&LiftedMatrix::new(m).unwrap()).unwrap_err();
        assert!(matches!(err, Error::NoRankOneComponent { .. }));
    }

    #[test]
    fn jacobi_reconstructs() {
        for seed in 0..5 {
            let m = random_hermitian(7, seed);
            let (vals, vecs) = jacobi_eigen(&m);
            let d = DMatrix::from_diagonal(&DVector::from_iterator(7, vals.iter().map(|&v| Complex64::new(v, 0.0))));
            let back = &vecs * d * vecs.adjoint();
            assert!((back - &m).norm() < 1e-12 * m.norm());
            let gram = vecs.adjoint() * &vecs;
            assert!((gram - DMatrix::identity(7, 7)).norm() < 1e-12);
            assert!(vals.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn householder_and_jacobi_agree() {
        let m = random_hermitian(9, 11);
        let (a, _) = jacobi_eigen(&m);
        let (b, _) = hermitian_eigen(&m);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-10);
        }
    }

    #[test]
    fn psd_projection_basics() {
        let x = Signal::random_gaussian(5, 8).unwrap();
        let p = LiftedMatrix::outer(&x).into_matrix();
        assert!((psd_project(&p) - &p).norm() < 1e-10 * p.norm());
        let neg = -DMatrix::<Complex64>::identity(4, 4);
        assert_eq!(psd_project(&neg).norm(), 0.0);
    }
}
