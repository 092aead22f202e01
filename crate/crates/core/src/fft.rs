//! Unitary DFT helpers on vectors and column-major time-frequency grids.
//!
//! All transforms here are scaled by `1/sqrt(len)` so that forward and
//! inverse are adjoint to each other (`F^H F = I`). The structured-covariance
//! code relies on this exactly, e.g. when absorbing the noise variance into a
//! spectral parameterization.

use num_complex::Complex64;
use rustfft::{Fft, FftDirection, FftPlanner};
use std::sync::Arc;

/// Forward/inverse plan pair for one transform length.
#[derive(Clone)]
pub struct Fft1d {
    len: usize,
    scale: f64,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl Fft1d {
    pub fn new(len: usize) -> Self {
        assert!(len > 0, "FFT length must be positive");
        let mut planner = FftPlanner::new();
        Fft1d {
            len,
            scale: 1.0 / (len as f64).sqrt(),
            fwd: planner.plan_fft(len, FftDirection::Forward),
            inv: planner.plan_fft(len, FftDirection::Inverse),
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// In-place `F x` (unitary forward DFT).
    pub fn forward(&self, buf: &mut [Complex64]) {
        debug_assert_eq!(buf.len(), self.len);
        self.fwd.process(buf);
        for v in buf.iter_mut() {
            *v *= self.scale;
        }
    }

    /// In-place `F^H x` (unitary inverse DFT).
    pub fn inverse(&self, buf: &mut [Complex64]) {
        debug_assert_eq!(buf.len(), self.len);
        self.inv.process(buf);
        for v in buf.iter_mut() {
            *v *= self.scale;
        }
    }
}

/// Unitary 2D DFT `F_{N_t} (x) F_{N_c}` acting on a column-major
/// `n_c x n_t` grid stored as a flat slice (columns are time symbols).
#[derive(Clone)]
pub struct GridFft {
    n_c: usize,
    n_t: usize,
    col: Fft1d,
    row: Fft1d,
}

impl GridFft {
    pub fn new(n_c: usize, n_t: usize) -> Self {
        GridFft {
            n_c,
            n_t,
            col: Fft1d::new(n_c),
            row: Fft1d::new(n_t),
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.n_c, self.n_t)
    }

    fn rows_transform(&self, buf: &mut [Complex64], inverse: bool) {
        // Rows are strided in column-major storage; gather each row into a
        // scratch, transform, scatter back.
        let mut scratch = vec![Complex64::default(); self.n_t];
        for c in 0..self.n_c {
            for t in 0..self.n_t {
                scratch[t] = buf[t * self.n_c + c];
            }
            if inverse {
                self.row.inverse(&mut scratch);
            } else {
                self.row.forward(&mut scratch);
            }
            for t in 0..self.n_t {
                buf[t * self.n_c + c] = scratch[t];
            }
        }
    }

    /// In-place `(F_{N_t} (x) F_{N_c}) vec(H)`.
    pub fn forward(&self, buf: &mut [Complex64]) {
        debug_assert_eq!(buf.len(), self.n_c * self.n_t);
        for t in 0..self.n_t {
            self.col.forward(&mut buf[t * self.n_c..(t + 1) * self.n_c]);
        }
        self.rows_transform(buf, false);
    }

    /// In-place `(F_{N_t} (x) F_{N_c})^H vec(H)`.
    pub fn inverse(&self, buf: &mut [Complex64]) {
        debug_assert_eq!(buf.len(), self.n_c * self.n_t);
        for t in 0..self.n_t {
            self.col.inverse(&mut buf[t * self.n_c..(t + 1) * self.n_c]);
        }
        self.rows_transform(buf, true);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn dft_matrix(n: usize) -> Vec<Vec<Complex64>> {
        // Unitary DFT by the defining formula; the oracle for the FFT path.
        let s = 1.0 / (n as f64).sqrt();
        (0..n)
            .map(|k| {
                (0..n)
                    .map(|j| {
                        let ph = -2.0 * std::f64::consts::PI * (k * j) as f64 / n as f64;
                        Complex64::new(ph.cos(), ph.sin()) * s
                    })
                    .collect()
            })
            .collect()
    }

    #[test]
    fn forward_matches_dense_dft() {
        for n in [1usize, 2, 3, 5, 8, 12] {
            let f = Fft1d::new(n);
            let x: Vec<Complex64> = (0..n)
                .map(|i| Complex64::new(i as f64 + 0.5, (i * i) as f64 * 0.1 - 1.0))
                .collect();
            let mut y = x.clone();
            f.forward(&mut y);
            let m = dft_matrix(n);
            for k in 0..n {
                let want: Complex64 = (0..n).map(|j| m[k][j] * x[j]).sum();
                assert!((y[k] - want).norm() < 1e-12, "n={n} k={k}");
            }
        }
    }

    #[test]
    fn roundtrip_is_identity() {
        let f = Fft1d::new(17);
        let x: Vec<Complex64> = (0..17)
            .map(|i| Complex64::new((i as f64).sin(), (i as f64).cos()))
            .collect();
        let mut y = x.clone();
        f.forward(&mut y);
        f.inverse(&mut y);
        for i in 0..17 {
            assert!((y[i] - x[i]).norm() < 1e-12);
        }
    }

    #[test]
    fn grid_forward_matches_kron_of_dfts() {
        let (n_c, n_t) = (3usize, 4usize);
        let g = GridFft::new(n_c, n_t);
        let x: Vec<Complex64> = (0..n_c * n_t)
            .map(|i| Complex64::new(i as f64 * 0.3 - 1.0, (i % 5) as f64))
            .collect();
        let mut y = x.clone();
        g.forward(&mut y);

        let fc = dft_matrix(n_c);
        let ft = dft_matrix(n_t);
        // (F_t (x) F_c)[(tc),(t'c')] = F_t[t,t'] F_c[c,c']
        for t in 0..n_t {
            for c in 0..n_c {
                let mut want = Complex64::default();
                for tp in 0..n_t {
                    for cp in 0..n_c {
                        want += ft[t][tp] * fc[c][cp] * x[tp * n_c + cp];
                    }
                }
                assert!((y[t * n_c + c] - want).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn grid_roundtrip() {
        let g = GridFft::new(6, 5);
        let x: Vec<Complex64> = (0..30)
            .map(|i| Complex64::new((i as f64 * 0.7).sin(), (i as f64 * 0.3).cos()))
            .collect();
        let mut y = x.clone();
        g.forward(&mut y);
        g.inverse(&mut y);
        for i in 0..30 {
            assert!((y[i] - x[i]).norm() < 1e-12);
        }
    }
}
