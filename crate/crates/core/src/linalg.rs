//! Dense complex linear algebra helpers.
//!
//! The EM training loops multiply `n x S` complex data matrices where `S` is
//! the number of training samples. nalgebra routes `f64` products through
//! optimized kernels but falls back to a generic (much slower) loop for
//! `Complex<f64>`, so the hot products here are expressed as four real
//! products on split real/imaginary parts.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Complex matrix stored as separate real and imaginary parts.
#[derive(Clone, Debug)]
pub struct SplitMat {
    pub re: DMatrix<f64>,
    pub im: DMatrix<f64>,
}

impl SplitMat {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        SplitMat {
            re: DMatrix::zeros(nrows, ncols),
            im: DMatrix::zeros(nrows, ncols),
        }
    }

    pub fn from_complex(m: &DMatrix<Complex64>) -> Self {
        let mut s = SplitMat::zeros(m.nrows(), m.ncols());
        for (dst_r, (dst_i, src)) in s
            .re
            .iter_mut()
            .zip(s.im.iter_mut().zip(m.iter()))
        {
            *dst_r = src.re;
            *dst_i = src.im;
        }
        s
    }

    pub fn to_complex(&self) -> DMatrix<Complex64> {
        DMatrix::from_fn(self.re.nrows(), self.re.ncols(), |i, j| {
            Complex64::new(self.re[(i, j)], self.im[(i, j)])
        })
    }

    pub fn nrows(&self) -> usize {
        self.re.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.re.ncols()
    }

    /// Column block `[start, start+len)` as an owned split matrix.
    pub fn columns(&self, start: usize, len: usize) -> SplitMat {
        SplitMat {
            re: self.re.columns(start, len).into_owned(),
            im: self.im.columns(start, len).into_owned(),
        }
    }

    /// `A * B`.
    pub fn mul(&self, rhs: &SplitMat) -> SplitMat {
        let re = &self.re * &rhs.re - &self.im * &rhs.im;
        let im = &self.re * &rhs.im + &self.im * &rhs.re;
        SplitMat { re, im }
    }

    /// `A * B^H`.
    pub fn mul_adjoint(&self, rhs: &SplitMat) -> SplitMat {
        let brt = rhs.re.transpose();
        let bit = rhs.im.transpose();
        let re = &self.re * &brt + &self.im * &bit;
        let im = &self.im * &brt - &self.re * &bit;
        SplitMat { re, im }
    }

    /// `A^H`.
    pub fn adjoint(&self) -> SplitMat {
        SplitMat {
            re: self.re.transpose(),
            im: -self.im.transpose(),
        }
    }

    /// `self += other`, shapes must match.
    pub fn add_assign(&mut self, other: &SplitMat) {
        self.re += &other.re;
        self.im += &other.im;
    }

    /// Scale every column `j` by the real factor `w[j]`.
    pub fn scale_columns(&mut self, w: &[f64]) {
        debug_assert_eq!(w.len(), self.ncols());
        for (j, &f) in w.iter().enumerate() {
            self.re.column_mut(j).scale_mut(f);
            self.im.column_mut(j).scale_mut(f);
        }
    }

    /// `A * v` for a complex vector given as split slices.
    pub fn mul_complex_vector(&self, v: &DVector<Complex64>) -> DVector<Complex64> {
        let vr = DVector::from_iterator(v.len(), v.iter().map(|z| z.re));
        let vi = DVector::from_iterator(v.len(), v.iter().map(|z| z.im));
        let r = &self.re * &vr - &self.im * &vi;
        let i = &self.re * &vi + &self.im * &vr;
        DVector::from_fn(r.len(), |k, _| Complex64::new(r[k], i[k]))
    }
}

/// `(M + M^H) / 2`.
pub fn hermitianize(m: &mut DMatrix<Complex64>) {
    let n = m.nrows();
    debug_assert_eq!(n, m.ncols());
    for i in 0..n {
        for j in (i + 1)..n {
            let a = m[(i, j)];
            let b = m[(j, i)].conj();
            let avg = (a + b) * 0.5;
            m[(i, j)] = avg;
            m[(j, i)] = avg.conj();
        }
        m[(i, i)] = Complex64::new(m[(i, i)].re, 0.0);
    }
}

/// Cholesky factorization of a Hermitian positive-definite matrix together
/// with its log-determinant.
pub struct HermitianChol {
    chol: nalgebra::Cholesky<Complex64, nalgebra::Dyn>,
    log_det: f64,
}

impl HermitianChol {
    pub fn new(m: DMatrix<Complex64>) -> Result<Self> {
        let chol = m
            .cholesky()
            .ok_or_else(|| Error::Numerical("matrix is not positive definite".into()))?;
        let l = chol.l_dirty();
        let mut log_det = 0.0;
        for i in 0..l.nrows() {
            let d = l[(i, i)].re;
            if d <= 0.0 || !d.is_finite() {
                return Err(Error::Numerical("invalid Cholesky diagonal".into()));
            }
            log_det += 2.0 * d.ln();
        }
        Ok(HermitianChol { chol, log_det })
    }

    pub fn log_det(&self) -> f64 {
        self.log_det
    }

    pub fn dim(&self) -> usize {
        self.chol.l_dirty().nrows()
    }

    /// `C^{-1} b`.
    pub fn solve_vec(&self, b: &DVector<Complex64>) -> DVector<Complex64> {
        self.chol.solve(b)
    }

    /// `C^{-1} B`.
    pub fn solve_mat(&self, b: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        self.chol.solve(b)
    }

    /// `L^{-1} B` for the lower factor of `C = L L^H`.
    pub fn solve_lower_mat(&self, b: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        let mut out = b.clone();
        self.chol.l_dirty().solve_lower_triangular_unchecked_mut(&mut out);
        out
    }

    /// Quadratic form `b^H C^{-1} b` (real and nonnegative for PD `C`).
    pub fn quad_form(&self, b: &DVector<Complex64>) -> f64 {
        let mut z = b.clone();
        self.chol.l_dirty().solve_lower_triangular_unchecked_mut(&mut z);
        z.iter().map(|v| v.norm_sqr()).sum()
    }

    /// The lower factor `L` of `C = L L^H` (copy; upper part zeroed).
    pub fn lower(&self) -> DMatrix<Complex64> {
        self.chol.l()
    }

    /// `L^{-1}` of the factorization `C = L L^H`.
    pub fn inv_lower(&self) -> DMatrix<Complex64> {
        let n = self.dim();
        let mut eye: DMatrix<Complex64> = DMatrix::identity(n, n);
        self.chol.l_dirty().solve_lower_triangular_unchecked_mut(&mut eye);
        eye
    }

    /// Dense `C^{-1}` computed as `L^{-H} L^{-1}`.
    pub fn inverse(&self) -> DMatrix<Complex64> {
        let w = SplitMat::from_complex(&self.inv_lower());
        let mut inv = w.adjoint().mul(&w).to_complex();
        hermitianize(&mut inv);
        inv
    }
}

/// Frobenius inner product `tr(A^H B)` for same-shaped matrices.
pub fn frobenius_inner(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> Complex64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

/// `tr(C^{-1} S)` for Hermitian `C` (via its inverse) and Hermitian `S`.
pub fn trace_inv_times(c_inv: &DMatrix<Complex64>, s: &DMatrix<Complex64>) -> f64 {
    // tr(C^{-1} S) = sum_ij conj(C^{-1})_ij S_ij for Hermitian C^{-1}.
    frobenius_inner(c_inv, s).re
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rand_complex_mat(nr: usize, nc: usize, seed: u64) -> DMatrix<Complex64> {
        let mut rng = crate::rng::stream_rng(seed, 0);
        DMatrix::from_fn(nr, nc, |_, _| crate::rng::standard_complex(&mut rng))
    }

    #[test]
    fn split_mul_matches_complex_mul() {
        let a = rand_complex_mat(7, 5, 1);
        let b = rand_complex_mat(5, 6, 2);
        let want = &a * &b;
        let got = SplitMat::from_complex(&a)
            .mul(&SplitMat::from_complex(&b))
            .to_complex();
        assert!((want - got).norm() < 1e-12);
    }

    #[test]
    fn split_mul_adjoint_matches() {
        let a = rand_complex_mat(4, 6, 3);
        let b = rand_complex_mat(5, 6, 4);
        let want = &a * b.adjoint();
        let got = SplitMat::from_complex(&a)
            .mul_adjoint(&SplitMat::from_complex(&b))
            .to_complex();
        assert!((want - got).norm() < 1e-12);
    }

    #[test]
    fn cholesky_solve_and_logdet() {
        let b = rand_complex_mat(6, 6, 5);
        let mut c = &b * b.adjoint();
        for i in 0..6 {
            c[(i, i)] += Complex64::new(1.0, 0.0);
        }
        hermitianize(&mut c);
        let chol = HermitianChol::new(c.clone()).unwrap();

        let rhs = rand_complex_mat(6, 1, 6).column(0).into_owned();
        let x = chol.solve_vec(&rhs);
        assert!((&c * &x - &rhs).norm() < 1e-10);

        // log det against eigenvalue sum
        let eig = c.clone().symmetric_eigen();
        let want: f64 = eig.eigenvalues.iter().map(|l| l.ln()).sum();
        assert!((chol.log_det() - want).abs() < 1e-9);

        // quadratic form
        let q = chol.quad_form(&rhs);
        let direct = rhs.dotc(&x).re;
        assert!((q - direct).abs() < 1e-9);

        // explicit inverse
        let inv = chol.inverse();
        assert!((&c * &inv - DMatrix::<Complex64>::identity(6, 6)).norm() < 1e-9);
    }
}
