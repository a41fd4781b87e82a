//! Dense complex matrices at small dimension.
//!
//! Row-major storage, naive O(n³) products and a cyclic Jacobi eigensolver
//! for Hermitian matrices. Total dimensions in this crate stay at or below a
//! few thousand, where this is both fast enough and easy to trust.

use crate::scalar::Scalar;
use num_complex::Complex;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LinalgError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("matrix is not Hermitian within tolerance")]
    NotHermitian,
    #[error("Jacobi eigensolver did not converge")]
    NoConvergence,
}

/// Dense complex matrix with entries stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<Complex<T>>,
}

impl<T: Scalar> ComplexMatrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![Complex::new(T::zero(), T::zero()); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, Complex::new(T::one(), T::zero()));
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex<T>) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Builds a square matrix from real entries in row-major order.
    pub fn from_real(n: usize, entries: &[f64]) -> Self {
        assert_eq!(entries.len(), n * n, "entry count must be n^2");
        Self::from_fn(n, n, |i, j| Complex::new(T::lit(entries[i * n + j]), T::zero()))
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex<T> {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: Complex<T>) {
        self.data[i * self.cols + j] = value;
    }

    pub fn entries(&self) -> &[Complex<T>] {
        &self.data
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "inner dimensions must agree");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.norm_sqr() == T::zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let v = out.get(i, j) + a * other.get(k, j);
                    out.set(i, j, v);
                }
            }
        }
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect();
        Self { rows: self.rows, cols: self.cols, data }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        Self { rows: self.rows, cols: self.cols, data }
    }

    pub fn scale(&self, factor: T) -> Self {
        self.scale_complex(Complex::new(factor, T::zero()))
    }

    pub fn scale_complex(&self, factor: Complex<T>) -> Self {
        let data = self.data.iter().map(|a| a * factor).collect();
        Self { rows: self.rows, cols: self.cols, data }
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i).conj())
    }

    pub fn trace(&self) -> Complex<T> {
        assert!(self.is_square());
        let mut t = Complex::new(T::zero(), T::zero());
        for i in 0..self.rows {
            t += self.get(i, i);
        }
        t
    }

    /// Kronecker product; `self` indexes the slower-varying (leftmost) factor.
    pub fn kron(&self, other: &Self) -> Self {
        let mut out = Self::zeros(self.rows * other.rows, self.cols * other.cols);
        for i1 in 0..self.rows {
            for j1 in 0..self.cols {
                let a = self.get(i1, j1);
                if a.norm_sqr() == T::zero() {
                    continue;
                }
                for i2 in 0..other.rows {
                    for j2 in 0..other.cols {
                        out.set(i1 * other.rows + i2, j1 * other.cols + j2, a * other.get(i2, j2));
                    }
                }
            }
        }
        out
    }

    pub fn matvec(&self, v: &[Complex<T>]) -> Vec<Complex<T>> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| {
                let mut acc = Complex::new(T::zero(), T::zero());
                for j in 0..self.cols {
                    acc += self.get(i, j) * v[j];
                }
                acc
            })
            .collect()
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(T::zero(), T::max)
    }

    pub fn max_abs_entry(&self) -> T {
        self.data.iter().map(|a| a.norm()).fold(T::zero(), T::max)
    }

    pub fn frobenius_norm_sqr(&self) -> T {
        self.data.iter().map(|a| a.norm_sqr()).fold(T::zero(), |a, b| a + b)
    }

    pub fn hermitian_defect(&self) -> T {
        assert!(self.is_square());
        let mut worst = T::zero();
        for i in 0..self.rows {
            for j in i..self.cols {
                let d = (self.get(i, j) - self.get(j, i).conj()).norm();
                worst = worst.max(d);
            }
        }
        worst
    }

    pub fn is_hermitian(&self, tol: T) -> bool {
        self.is_square() && self.hermitian_defect() <= tol
    }

    pub fn unitary_defect(&self) -> T {
        assert!(self.is_square());
        self.adjoint().mul(self).max_abs_diff(&Self::identity(self.rows))
    }
}

/// Eigendecomposition of a Hermitian matrix.
///
/// Eigenvalues are sorted ascending; `vectors` holds the matching
/// orthonormal eigenvectors as columns.
#[derive(Debug, Clone)]
pub struct HermitianEigen<T> {
    pub values: Vec<T>,
    pub vectors: ComplexMatrix<T>,
}

/// Cyclic Jacobi eigensolver for Hermitian matrices.
///
/// Sweeps all off-diagonal pairs with complex Givens rotations until the
/// largest off-diagonal magnitude falls below [`Scalar::JACOBI_TOL`] relative
/// to the matrix scale. O(n³) per sweep; fine at the dimensions used here.
pub fn hermitian_eigen<T: Scalar>(matrix: &ComplexMatrix<T>) -> Result<HermitianEigen<T>, LinalgError> {
    if !matrix.is_square() {
        return Err(LinalgError::DimensionMismatch(format!(
            "{}x{} matrix is not square",
            matrix.rows(),
            matrix.cols()
        )));
    }
    if !matrix.is_hermitian(T::HERMITIAN_TOL.max(T::lit(1e-8) * matrix.max_abs_entry())) {
        return Err(LinalgError::NotHermitian);
    }

    let n = matrix.rows();
    let mut a = matrix.clone();
    // Symmetrize away the sub-tolerance Hermitian defect so rotations stay exact.
    for i in 0..n {
        for j in 0..n {
            let s = (a.get(i, j) + a.get(j, i).conj()).unscale(T::lit(2.0));
            a.set(i, j, s);
            a.set(j, i, s.conj());
        }
    }
    let mut v = ComplexMatrix::identity(n);
    let scale = a.max_abs_entry().max(T::one());
    let threshold = T::JACOBI_TOL * scale;

    const MAX_SWEEPS: usize = 100;
    for _ in 0..MAX_SWEEPS {
        let mut offdiag_max = T::zero();
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a.get(p, q);
                let mag = apq.norm();
                offdiag_max = offdiag_max.max(mag);
                if mag <= threshold {
                    continue;
                }
                // Phase of the pivot and the classical Jacobi rotation angle.
                let phase = apq.unscale(mag);
                let app = a.get(p, p).re;
                let aqq = a.get(q, q).re;
                let tau = (aqq - app) / (mag * T::lit(2.0));
                let t = if tau >= T::zero() {
                    T::one() / (tau + (T::one() + tau * tau).sqrt())
                } else {
                    -T::one() / (-tau + (T::one() + tau * tau).sqrt())
                };
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = t * c;
                let s_phase = phase.scale(s);

                // A <- G† A G with G acting on rows/cols p and q:
                // G[p][p]=c, G[p][q]=s·phase, G[q][p]=-s·conj(phase), G[q][q]=c.
                for k in 0..n {
                    let akp = a.get(k, p);
                    let akq = a.get(k, q);
                    a.set(k, p, akp.scale(c) - akq * s_phase.conj());
                    a.set(k, q, akq.scale(c) + akp * s_phase);
                }
                for k in 0..n {
                    let apk = a.get(p, k);
                    let aqk = a.get(q, k);
                    a.set(p, k, apk.scale(c) - s_phase * aqk);
                    a.set(q, k, aqk.scale(c) + s_phase.conj() * apk);
                }
                for k in 0..n {
                    let vkp = v.get(k, p);
                    let vkq = v.get(k, q);
                    v.set(k, p, vkp.scale(c) - vkq * s_phase.conj());
                    v.set(k, q, vkq.scale(c) + vkp * s_phase);
                }
            }
        }
        if offdiag_max <= threshold {
            let mut values: Vec<T> = (0..n).map(|i| a.get(i, i).re).collect();
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&x, &y| values[x].partial_cmp(&values[y]).expect("finite eigenvalues"));
            values.sort_by(|x, y| x.partial_cmp(y).expect("finite eigenvalues"));
            let vectors = ComplexMatrix::from_fn(n, n, |i, j| v.get(i, order[j]));
            return Ok(HermitianEigen { values, vectors });
        }
    }
    Err(LinalgError::NoConvergence)
}

/// Eigenvalues only; convenience wrapper around [`hermitian_eigen`].
pub fn hermitian_eigenvalues<T: Scalar>(matrix: &ComplexMatrix<T>) -> Result<Vec<T>, LinalgError> {
    hermitian_eigen(matrix).map(|e| e.values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    type M = ComplexMatrix<f64>;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn kron_of_identities_is_identity() {
        let i2 = M::identity(2);
        assert_eq!(i2.kron(&i2).max_abs_diff(&M::identity(4)), 0.0);
    }

    #[test]
    fn kron_of_basis_projectors() {
        let p0 = M::from_real(2, &[1.0, 0.0, 0.0, 0.0]);
        let p1 = M::from_real(2, &[0.0, 0.0, 0.0, 1.0]);
        let expect = M::from_real(4, &[
            0.0, 0.0, 0.0, 0.0,
            0.0, 1.0, 0.0, 0.0,
            0.0, 0.0, 0.0, 0.0,
            0.0, 0.0, 0.0, 0.0,
        ]);
        assert_eq!(p0.kron(&p1).max_abs_diff(&expect), 0.0);
    }

    #[test]
    fn kron_is_associative() {
        let a = M::from_fn(2, 2, |i, j| c((i + 2 * j) as f64, (i * j) as f64));
        let b = M::from_fn(2, 2, |i, j| c(1.0 - i as f64, j as f64 + 0.5));
        let d = M::from_fn(2, 2, |i, j| c(0.25 * i as f64, 1.0 - j as f64));
        let left = a.kron(&b).kron(&d);
        let right = a.kron(&b.kron(&d));
        assert_eq!(left.max_abs_diff(&right), 0.0);
    }

    #[test]
    fn adjoint_and_product() {
        let a = M::from_fn(2, 3, |i, j| c(i as f64, j as f64));
        let aa = a.mul(&a.adjoint());
        assert!(aa.is_hermitian(1e-15));
        assert_eq!(aa.rows(), 2);
    }

    #[test]
    fn jacobi_diagonalizes_pauli_x() {
        let x = M::from_real(2, &[0.0, 1.0, 1.0, 0.0]);
        let eig = hermitian_eigen(&x).unwrap();
        assert!((eig.values[0] + 1.0).abs() < 1e-13);
        assert!((eig.values[1] - 1.0).abs() < 1e-13);
        // Reconstruct: V diag V† = X.
        let n = 2;
        let recon = M::from_fn(n, n, |i, j| {
            (0..n)
                .map(|k| eig.vectors.get(i, k) * eig.vectors.get(j, k).conj().scale(eig.values[k]))
                .fold(c(0.0, 0.0), |a, b| a + b)
        });
        assert!(recon.max_abs_diff(&x) < 1e-12);
    }

    #[test]
    fn jacobi_handles_complex_hermitian() {
        let h = M::from_fn(3, 3, |i, j| {
            if i == j {
                c(i as f64 + 1.0, 0.0)
            } else if i < j {
                c(0.3 * (i + j) as f64, 0.1 * (j - i) as f64)
            } else {
                c(0.3 * (i + j) as f64, -0.1 * (i - j) as f64)
            }
        });
        let eig = hermitian_eigen(&h).unwrap();
        let n = 3;
        let recon = M::from_fn(n, n, |i, j| {
            (0..n)
                .map(|k| eig.vectors.get(i, k) * eig.vectors.get(j, k).conj().scale(eig.values[k]))
                .fold(c(0.0, 0.0), |a, b| a + b)
        });
        assert!(recon.max_abs_diff(&h) < 1e-12);
        // Trace preserved by similarity.
        let tr: f64 = eig.values.iter().sum();
        assert!((tr - 6.0).abs() < 1e-12);
    }

    #[test]
    fn jacobi_rejects_non_hermitian() {
        let m = M::from_real(2, &[0.0, 1.0, 0.0, 0.0]);
        assert_eq!(hermitian_eigen(&m).unwrap_err(), LinalgError::NotHermitian);
    }

    #[test]
    fn runs_at_f32() {
        let x = ComplexMatrix::<f32>::from_real(2, &[0.0, 1.0, 1.0, 0.0]);
        let eig = hermitian_eigen(&x).unwrap();
        assert!((eig.values[1] - 1.0).abs() < 1e-5);
    }
}
