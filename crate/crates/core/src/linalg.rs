//! Small dense complex matrices.
//!
//! Everything here operates on matrices of a few hundred rows at most, so the
//! storage is a flat row-major `Vec` and the algorithms are the textbook ones.

use std::ops::{Index, IndexMut};

use num_complex::Complex;

use crate::scalar::{cre, cz, Real};

/// Row-major dense complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<Complex<T>>,
}

impl<T: Real> CMatrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        CMatrix {
            rows,
            cols,
            data: vec![cz(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = cre(T::one());
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
        CMatrix { rows, cols, data }
    }

    /// `|v⟩⟨w|`
    pub fn outer(v: &[Complex<T>], w: &[Complex<T>]) -> Self {
        Self::from_fn(v.len(), w.len(), |i, j| v[i] * w[j].conj())
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

    pub fn as_slice(&self) -> &[Complex<T>] {
        &self.data
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn matmul(&self, rhs: &Self) -> Self {
        assert_eq!(self.cols, rhs.rows, "matmul shape mismatch");
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a.re == T::zero() && a.im == T::zero() {
                    continue;
                }
                for j in 0..rhs.cols {
                    out.data[i * rhs.cols + j] += a * rhs.data[k * rhs.cols + j];
                }
            }
        }
        out
    }

    pub fn matvec(&self, v: &[Complex<T>]) -> Vec<Complex<T>> {
        assert_eq!(self.cols, v.len(), "matvec shape mismatch");
        (0..self.rows)
            .map(|i| {
                (0..self.cols).fold(cz(), |acc, j| acc + self[(i, j)] * v[j])
            })
            .collect()
    }

    /// `U A U†`
    pub fn conjugate_by(&self, u: &Self) -> Self {
        u.matmul(self).matmul(&u.adjoint())
    }

    pub fn trace(&self) -> Complex<T> {
        (0..self.rows.min(self.cols)).fold(cz(), |acc, i| acc + self[(i, i)])
    }

    pub fn scale(&self, s: Complex<T>) -> Self {
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&z| z * s).collect(),
        }
    }

    pub fn add(&self, rhs: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }

    /// Frobenius inner product `Tr(A† B)`.
    pub fn frobenius_dot(&self, rhs: &Self) -> Complex<T> {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        self.data
            .iter()
            .zip(&rhs.data)
            .fold(cz(), |acc, (a, b)| acc + a.conj() * b)
    }

    pub fn frobenius_norm(&self) -> T {
        self.data
            .iter()
            .fold(T::zero(), |acc, z| acc + z.norm_sqr())
            .sqrt()
    }

    /// Largest entrywise modulus of `self - rhs`.
    pub fn max_abs_diff(&self, rhs: &Self) -> T {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        self.data
            .iter()
            .zip(&rhs.data)
            .fold(T::zero(), |acc, (a, b)| acc.max((a - b).norm()))
    }

    /// Largest `|A_ij - conj(A_ji)|`.
    pub fn hermitian_deviation(&self) -> T {
        assert!(self.is_square());
        let mut dev = T::zero();
        for i in 0..self.rows {
            for j in i..self.cols {
                dev = dev.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        dev
    }

    /// Eigenvalues of the Hermitian part `(A + A†)/2`, ascending.
    pub fn hermitian_eigenvalues(&self) -> Vec<T> {
        assert!(self.is_square());
        let n = self.rows;
        let half = T::lit(0.5);
        // A = X + iY Hermitian  ->  [[X, -Y], [Y, X]] real symmetric, each
        // eigenvalue of A appears twice.
        let mut real = vec![T::zero(); 4 * n * n];
        let w = 2 * n;
        for i in 0..n {
            for j in 0..n {
                let h = (self[(i, j)] + self[(j, i)].conj()) * half;
                real[i * w + j] = h.re;
                real[(i + n) * w + (j + n)] = h.re;
                real[(i + n) * w + j] = h.im;
                real[i * w + (j + n)] = -h.im;
            }
        }
        let mut eig = symmetric_eigenvalues(real, w);
        eig.sort_by(|a, b| a.partial_cmp(b).expect("finite eigenvalues"));
        eig.into_iter().step_by(2).collect()
    }

    pub fn min_hermitian_eigenvalue(&self) -> T {
        self.hermitian_eigenvalues()
            .first()
            .copied()
            .unwrap_or_else(T::zero)
    }
}

impl<T> Index<(usize, usize)> for CMatrix<T> {
    type Output = Complex<T>;

    fn index(&self, (i, j): (usize, usize)) -> &Complex<T> {
        &self.data[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for CMatrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex<T> {
        &mut self.data[i * self.cols + j]
    }
}

/// Cyclic Jacobi eigenvalue iteration on a real symmetric row-major matrix.
fn symmetric_eigenvalues<T: Real>(mut a: Vec<T>, n: usize) -> Vec<T> {
    let tiny = T::epsilon() * T::epsilon();
    for _sweep in 0..100 {
        let mut off = T::zero();
        let mut scale = T::zero();
        for i in 0..n {
            for j in 0..n {
                let v = a[i * n + j] * a[i * n + j];
                if i == j {
                    scale += v;
                } else {
                    off += v;
                }
            }
        }
        if off <= tiny * (scale + off) || off == T::zero() {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq == T::zero() {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let theta = (aqq - app) / (T::lit(2.0) * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
            }
        }
    }
    (0..n).map(|i| a[i * n + i]).collect()
}

/// `⟨v|w⟩`
pub fn inner<T: Real>(v: &[Complex<T>], w: &[Complex<T>]) -> Complex<T> {
    assert_eq!(v.len(), w.len());
    v.iter().zip(w).fold(cz(), |acc, (a, b)| acc + a.conj() * b)
}

pub fn norm_sqr<T: Real>(v: &[Complex<T>]) -> T {
    v.iter().fold(T::zero(), |acc, z| acc + z.norm_sqr())
}

/// `⟨v|A|v⟩`
pub fn expectation<T: Real>(a: &CMatrix<T>, v: &[Complex<T>]) -> Complex<T> {
    inner(v, &a.matvec(v))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> Complex<f64> {
        Complex::new(re, im)
    }

    #[test]
    fn eigenvalues_of_pauli_y() {
        let y = CMatrix::from_fn(2, 2, |i, j| match (i, j) {
            (0, 1) => c(0.0, -1.0),
            (1, 0) => c(0.0, 1.0),
            _ => c(0.0, 0.0),
        });
        let eig = y.hermitian_eigenvalues();
        assert_abs_diff_eq!(eig[0], -1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(eig[1], 1.0, epsilon = 1e-14);
    }

    #[test]
    fn eigenvalues_of_diagonal_plus_rank_one() {
        // diag(1,2,3) + |v><v| with v = (1, i, 0)/sqrt(2)
        let v = [c(1.0 / 2f64.sqrt(), 0.0), c(0.0, 1.0 / 2f64.sqrt()), c(0.0, 0.0)];
        let d = CMatrix::from_fn(3, 3, |i, j| if i == j { c(i as f64 + 1.0, 0.0) } else { c(0.0, 0.0) });
        let a = d.add(&CMatrix::outer(&v, &v));
        let eig = a.hermitian_eigenvalues();
        let tr: f64 = eig.iter().sum();
        assert_abs_diff_eq!(tr, 7.0, epsilon = 1e-12);
        // restricted 2x2 block [[1.5, -0.5i],[0.5i, 2.5]] has eigenvalues 2 ± sqrt(0.5)
        assert_abs_diff_eq!(eig[0], 2.0 - 0.5f64.sqrt(), epsilon = 1e-12);
        assert_abs_diff_eq!(eig[1], 2.0 + 0.5f64.sqrt(), epsilon = 1e-12);
        assert_abs_diff_eq!(eig[2], 3.0, epsilon = 1e-12);
    }

    #[test]
    fn conjugation_preserves_trace() {
        let s = 1.0 / 2f64.sqrt();
        let h = CMatrix::from_fn(2, 2, |i, j| c(if i == 1 && j == 1 { -s } else { s }, 0.0));
        let rho = CMatrix::outer(&[c(1.0, 0.0), c(0.0, 0.0)], &[c(1.0, 0.0), c(0.0, 0.0)]);
        let out = rho.conjugate_by(&h);
        assert_abs_diff_eq!(out.trace().re, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(out[(0, 1)].re, 0.5, epsilon = 1e-15);
    }
}
