//! The small dense complex-matrix kernel behind capacity estimation: Gram
//! products and a Cholesky-based log-determinant.
//!
//! Throughput of a served group is `log2 det(I + c * H'H)`; forming that
//! determinant directly overflows long before realistic sizes, so the
//! log-determinant is accumulated from the Cholesky factor instead:
//! `det(A) = prod L_jj^2`, hence `log2 det(A) = sum ln(d_j) * log2(e)` over
//! the squared pivots `d_j`.  `I + c * H'H` with `c >= 0` is Hermitian
//! positive definite, so the factorization cannot break down on real inputs;
//! a non-positive or non-finite pivot is reported as a numerical failure
//! rather than silently producing NaN.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::f64::consts::LOG2_E;

use libm::log;
use num_complex::Complex64;

/// Column-major dense complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix {
    pub rows: usize,
    pub cols: usize,
    data: Vec<Complex64>,
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        CMatrix {
            rows,
            cols,
            data: vec![Complex64::ZERO; rows * cols],
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut m = CMatrix::zeros(rows, cols);
        for c in 0..cols {
            for r in 0..rows {
                m.data[c * rows + r] = f(r, c);
            }
        }
        m
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        self.data[c * self.rows + r]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: Complex64) {
        self.data[c * self.rows + r] = v;
    }

    /// One column as a contiguous slice (the payoff of column-major storage).
    #[inline]
    pub fn col(&self, c: usize) -> &[Complex64] {
        &self.data[c * self.rows..(c + 1) * self.rows]
    }

    #[inline]
    pub fn col_mut(&mut self, c: usize) -> &mut [Complex64] {
        &mut self.data[c * self.rows..(c + 1) * self.rows]
    }

    /// `H'H` (conjugate-transpose product), a Hermitian `cols x cols` matrix.
    /// Only the upper triangle is computed; the lower is its mirror image, so
    /// the result is Hermitian to the last bit.
    pub fn gram(&self) -> CMatrix {
        let n = self.cols;
        let mut g = CMatrix::zeros(n, n);
        for j in 0..n {
            let cj = self.col(j);
            for i in 0..=j {
                let ci = self.col(i);
                let mut acc = Complex64::ZERO;
                for (a, b) in ci.iter().zip(cj) {
                    acc += a.conj() * b;
                }
                g.set(i, j, acc);
                if i != j {
                    g.set(j, i, acc.conj());
                }
            }
        }
        g
    }
}

/// `log2 det(I + scale * G)` for a Hermitian positive semidefinite `G`,
/// via an in-place Cholesky factorization.
///
/// Only the lower triangle of the shifted matrix is touched.  Pivots are the
/// squared diagonal entries of the factor; each must be strictly positive
/// and finite or the input was not (numerically) positive definite.
pub fn log2_det_shifted_gram(g: &CMatrix, scale: f64) -> Result<f64, LinalgError> {
    assert_eq!(g.rows, g.cols, "Gram matrix must be square");
    let n = g.rows;
    // Working copy of the lower triangle of I + scale*G, overwritten by L.
    let mut a = CMatrix::from_fn(n, n, |r, c| {
        if r < c {
            Complex64::ZERO
        } else {
            let shift = if r == c { 1.0 } else { 0.0 };
            g.get(r, c) * scale + shift
        }
    });

    let mut log2_det = 0.0;
    for j in 0..n {
        let mut pivot = a.get(j, j).re;
        for p in 0..j {
            pivot -= a.get(j, p).norm_sqr();
        }
        if !(pivot > 0.0) || !pivot.is_finite() {
            return Err(LinalgError::NumericalFailure { pivot_index: j });
        }
        log2_det += log(pivot);
        let diag = libm::sqrt(pivot);
        a.set(j, j, Complex64::new(diag, 0.0));
        for i in j + 1..n {
            let mut s = a.get(i, j);
            for p in 0..j {
                s -= a.get(i, p) * a.get(j, p).conj();
            }
            a.set(i, j, s / diag);
        }
    }
    Ok(log2_det * LOG2_E)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinalgError {
    /// A Cholesky pivot came out non-positive or non-finite; the matrix is
    /// not numerically positive definite.
    NumericalFailure { pivot_index: usize },
}

impl fmt::Display for LinalgError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LinalgError::NumericalFailure { pivot_index } => {
                write!(f, "factorization broke down at pivot {pivot_index}")
            }
        }
    }
}

impl core::error::Error for LinalgError {}
