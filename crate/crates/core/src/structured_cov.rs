//! Covariance parameterizations and their FFT-accelerated algebra.
//!
//! Hermitian positive-semidefinite Toeplitz matrices (and block-Toeplitz with
//! Toeplitz blocks) are parameterized as `C = Q^H diag(c) Q` where `Q` holds
//! the first `M` columns of a unitary `2M`-point DFT matrix and `c >= 0` is a
//! real spectrum of twice the length per dimension. Circulant matrices use
//! the unpadded unitary DFT, `C = F^H diag(c) F`.
//!
//! Because `Q^H Q = I` and `F^H F = I`, the entry at `(a, b)` of any of these
//! matrices depends only on the lag `b - a` (cyclically for circulant):
//! `C[a,b] = gamma(b - a)` with `gamma` the scaled DFT of the spectrum. All
//! dense expansions, pilot-block assemblies, and cross-covariance gathers go
//! through that lag table, which is both exact and cheap.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::channel_sim::PilotPattern;
use crate::error::{Error, Result};
use crate::fft::{Fft1d, GridFft};
use crate::linalg::{hermitianize, trace_inv_times, HermitianChol, SplitMat};

/// Largest total dimension for which dense expansion is permitted.
pub const DENSE_LIMIT: usize = 4096;

/// Relative spectral floor applied after spectral updates: the floor is
/// `DEFAULT_SPECTRAL_FLOOR * mean(current spectrum)`.
pub const DEFAULT_SPECTRAL_FLOOR: f64 = 1e-8;

/// Relative diagonal loading for dense covariance estimates:
/// `DEFAULT_DIAGONAL_LOADING * trace / dim` is added to the diagonal.
pub const DEFAULT_DIAGONAL_LOADING: f64 = 1e-6;

/// Shape of the vectors a model lives on: a plain length, or a column-major
/// carrier-by-symbol grid.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModelDims {
    OneD(usize),
    TwoD { n_c: usize, n_t: usize },
}

impl ModelDims {
    pub fn total(&self) -> usize {
        match self {
            ModelDims::OneD(n) => *n,
            ModelDims::TwoD { n_c, n_t } => n_c * n_t,
        }
    }

    /// Spectrum length of the oversampled (Toeplitz) parameterization.
    pub fn oversampled_len(&self) -> usize {
        match self {
            ModelDims::OneD(n) => 2 * n,
            ModelDims::TwoD { n_c, n_t } => 4 * n_c * n_t,
        }
    }
}

/// Tagged union of covariance parameterizations.
///
/// Spectral vectors for two-dimensional variants are column-major grids over
/// (carrier bins, symbol bins), matching the vectorization of the data.
#[derive(Clone, Debug, PartialEq)]
pub enum CovarianceModel {
    /// Unconstrained Hermitian matrix.
    Full(DMatrix<Complex64>),
    /// `Q2 (x) Q1` parameterization, spectrum length `4 n_c n_t`.
    BlockToeplitz {
        spectrum: Vec<f64>,
        n_c: usize,
        n_t: usize,
    },
    /// One-dimensional Toeplitz, spectrum length `2 dim`.
    Toeplitz1D { spectrum: Vec<f64>, dim: usize },
    /// 2D-DFT diagonalized, spectrum length `n_c n_t`.
    BlockCirculant {
        spectrum: Vec<f64>,
        n_c: usize,
        n_t: usize,
    },
    /// DFT diagonalized, spectrum length `dim`.
    Circulant1D { spectrum: Vec<f64>, dim: usize },
    /// Independent per-coordinate variances.
    Diagonal(Vec<f64>),
    /// Separable `C_time (x) C_freq` (time factor left, matching `vec(H)`
    /// with time-indexed columns).
    Kronecker {
        time: Box<CovarianceModel>,
        freq: Box<CovarianceModel>,
    },
}

impl CovarianceModel {
    pub fn dim(&self) -> usize {
        match self {
            CovarianceModel::Full(m) => m.nrows(),
            CovarianceModel::BlockToeplitz { n_c, n_t, .. } => n_c * n_t,
            CovarianceModel::Toeplitz1D { dim, .. } => *dim,
            CovarianceModel::BlockCirculant { n_c, n_t, .. } => n_c * n_t,
            CovarianceModel::Circulant1D { dim, .. } => *dim,
            CovarianceModel::Diagonal(d) => d.len(),
            CovarianceModel::Kronecker { time, freq } => time.dim() * freq.dim(),
        }
    }

    pub fn tag_name(&self) -> &'static str {
        match self {
            CovarianceModel::Full(_) => "full",
            CovarianceModel::BlockToeplitz { .. } => "block-toeplitz",
            CovarianceModel::Toeplitz1D { .. } => "toeplitz-1d",
            CovarianceModel::BlockCirculant { .. } => "block-circulant",
            CovarianceModel::Circulant1D { .. } => "circulant-1d",
            CovarianceModel::Diagonal(_) => "diagonal",
            CovarianceModel::Kronecker { .. } => "kronecker",
        }
    }

    pub fn validate(&self) -> Result<()> {
        fn spectrum_ok(s: &[f64], want_len: usize, what: &str) -> Result<()> {
            if s.len() != want_len {
                return Err(Error::ShapeMismatch(format!(
                    "{what} spectrum length {} != {want_len}",
                    s.len()
                )));
            }
            if s.iter().any(|v| !v.is_finite() || *v < 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "{what} spectrum must be finite and nonnegative"
                )));
            }
            Ok(())
        }
        match self {
            CovarianceModel::Full(m) => {
                if m.nrows() != m.ncols() {
                    return Err(Error::ShapeMismatch("full covariance must be square".into()));
                }
                let scale = m.iter().map(|v| v.norm()).fold(0.0, f64::max).max(1e-300);
                for i in 0..m.nrows() {
                    for j in i..m.ncols() {
                        if (m[(i, j)] - m[(j, i)].conj()).norm() > 1e-12 * scale {
                            return Err(Error::InvalidParameter(
                                "full covariance is not Hermitian".into(),
                            ));
                        }
                    }
                }
                Ok(())
            }
            CovarianceModel::BlockToeplitz { spectrum, n_c, n_t } => {
                spectrum_ok(spectrum, 4 * n_c * n_t, "block-Toeplitz")
            }
            CovarianceModel::Toeplitz1D { spectrum, dim } => {
                spectrum_ok(spectrum, 2 * dim, "Toeplitz")
            }
            CovarianceModel::BlockCirculant { spectrum, n_c, n_t } => {
                spectrum_ok(spectrum, n_c * n_t, "block-circulant")
            }
            CovarianceModel::Circulant1D { spectrum, dim } => {
                spectrum_ok(spectrum, *dim, "circulant")
            }
            CovarianceModel::Diagonal(d) => spectrum_ok(d, d.len().max(1), "diagonal"),
            CovarianceModel::Kronecker { time, freq } => {
                time.validate()?;
                freq.validate()
            }
        }
    }

    /// `tr(C)`.
    pub fn trace(&self) -> f64 {
        match self {
            CovarianceModel::Full(m) => (0..m.nrows()).map(|i| m[(i, i)].re).sum(),
            CovarianceModel::BlockToeplitz { spectrum, n_c, n_t } => {
                // gamma(0) = mean of spectrum; trace = n * gamma(0).
                let n = n_c * n_t;
                let mean: f64 = spectrum.iter().sum::<f64>() / spectrum.len() as f64;
                n as f64 * mean
            }
            CovarianceModel::Toeplitz1D { spectrum, dim } => {
                *dim as f64 * spectrum.iter().sum::<f64>() / spectrum.len() as f64
            }
            CovarianceModel::BlockCirculant { spectrum, n_c, n_t } => {
                let n = n_c * n_t;
                n as f64 * spectrum.iter().sum::<f64>() / spectrum.len() as f64
            }
            CovarianceModel::Circulant1D { spectrum, dim } => {
                *dim as f64 * spectrum.iter().sum::<f64>() / spectrum.len() as f64
            }
            CovarianceModel::Diagonal(d) => d.iter().sum(),
            CovarianceModel::Kronecker { time, freq } => time.trace() * freq.trace(),
        }
    }

    /// `C x` through the structure (FFTs for spectral forms).
    pub fn apply(&self, x: &DVector<Complex64>) -> Result<DVector<Complex64>> {
        if x.len() != self.dim() {
            return Err(Error::ShapeMismatch(format!(
                "apply: vector length {} vs covariance dim {}",
                x.len(),
                self.dim()
            )));
        }
        match self {
            CovarianceModel::Full(m) => Ok(m * x),
            CovarianceModel::BlockToeplitz { spectrum, n_c, n_t } => {
                let out = oversampled_dft_apply(
                    spectrum,
                    x.as_slice(),
                    &ModelDims::TwoD { n_c: *n_c, n_t: *n_t },
                )?;
                Ok(DVector::from_vec(out))
            }
            CovarianceModel::Toeplitz1D { spectrum, dim } => {
                let out = oversampled_dft_apply(spectrum, x.as_slice(), &ModelDims::OneD(*dim))?;
                Ok(DVector::from_vec(out))
            }
            CovarianceModel::BlockCirculant { spectrum, n_c, n_t } => {
                let out = circulant_apply(
                    spectrum,
                    x.as_slice(),
                    &ModelDims::TwoD { n_c: *n_c, n_t: *n_t },
                )?;
                Ok(DVector::from_vec(out))
            }
            CovarianceModel::Circulant1D { spectrum, dim } => {
                let out = circulant_apply(spectrum, x.as_slice(), &ModelDims::OneD(*dim))?;
                Ok(DVector::from_vec(out))
            }
            CovarianceModel::Diagonal(d) => Ok(DVector::from_iterator(
                d.len(),
                d.iter().zip(x.iter()).map(|(s, v)| v * *s),
            )),
            CovarianceModel::Kronecker { time, freq } => {
                // Out[r,t] = sum_{kt,kc} C_t[t,kt] C_f[r,kc] X[kc,kt]:
                // apply the frequency factor to columns, then the time
                // factor to rows.
                let nf = freq.dim();
                let nt = time.dim();
                let mut grid = DMatrix::from_column_slice(nf, nt, x.as_slice());
                for t in 0..nt {
                    let col = freq.apply(&grid.column(t).into_owned())?;
                    grid.set_column(t, &col);
                }
                for r in 0..nf {
                    let row: DVector<Complex64> = grid.row(r).transpose();
                    let out = time.apply(&row)?;
                    for t in 0..nt {
                        grid[(r, t)] = out[t];
                    }
                }
                Ok(DVector::from_column_slice(grid.as_slice()))
            }
        }
    }

    /// Dense Hermitian expansion. Errors above [`DENSE_LIMIT`].
    pub fn to_dense(&self) -> Result<DMatrix<Complex64>> {
        let n = self.dim();
        if n > DENSE_LIMIT {
            return Err(Error::Capacity {
                what: "dense covariance expansion",
                limit: DENSE_LIMIT,
                actual: n,
            });
        }
        match self {
            CovarianceModel::Full(m) => Ok(m.clone()),
            CovarianceModel::BlockToeplitz { spectrum, n_c, n_t } => {
                let table = LagTable::new(spectrum, 2 * n_c, 2 * n_t);
                Ok(table.dense(*n_c, *n_t))
            }
            CovarianceModel::Toeplitz1D { spectrum, dim } => {
                let table = LagTable::new(spectrum, 2 * dim, 1);
                Ok(table.dense(*dim, 1))
            }
            CovarianceModel::BlockCirculant { spectrum, n_c, n_t } => {
                let table = LagTable::new(spectrum, *n_c, *n_t);
                Ok(table.dense(*n_c, *n_t))
            }
            CovarianceModel::Circulant1D { spectrum, dim } => {
                let table = LagTable::new(spectrum, *dim, 1);
                Ok(table.dense(*dim, 1))
            }
            CovarianceModel::Diagonal(d) => {
                let mut m = DMatrix::zeros(d.len(), d.len());
                for (i, &v) in d.iter().enumerate() {
                    m[(i, i)] = Complex64::new(v, 0.0);
                }
                Ok(m)
            }
            CovarianceModel::Kronecker { time, freq } => {
                let t = time.to_dense()?;
                let f = freq.to_dense()?;
                Ok(t.kronecker(&f))
            }
        }
    }
}

/// Lag-indexed covariance entries of a spectral parameterization.
///
/// For pad factor 2 this is the Toeplitz form `Q^H diag(c) Q`, for pad
/// factor 1 the circulant form `F^H diag(c) F`; either way
/// `C[a,b] = gamma((b - a) mod pad*n)` per dimension.
pub struct LagTable {
    table: Vec<Complex64>,
    pad_c: usize,
    pad_t: usize,
}

impl LagTable {
    /// `spectrum` is a column-major `pad_c x pad_t` grid (with `pad_t = 1`
    /// for one-dimensional forms).
    pub fn new(spectrum: &[f64], pad_c: usize, pad_t: usize) -> Self {
        debug_assert_eq!(spectrum.len(), pad_c * pad_t);
        let mut buf: Vec<Complex64> = spectrum
            .iter()
            .map(|&v| Complex64::new(v, 0.0))
            .collect();
        if pad_t == 1 {
            Fft1d::new(pad_c).forward(&mut buf);
        } else {
            GridFft::new(pad_c, pad_t).forward(&mut buf);
        }
        // Unitary forward leaves a factor 1/sqrt(len); gamma needs 1/len.
        let scale = 1.0 / ((pad_c * pad_t) as f64).sqrt();
        for v in buf.iter_mut() {
            *v *= scale;
        }
        LagTable {
            table: buf,
            pad_c,
            pad_t,
        }
    }

    /// `gamma(lag_c, lag_t)`; lags may be negative.
    pub fn gamma(&self, lag_c: isize, lag_t: isize) -> Complex64 {
        let lc = lag_c.rem_euclid(self.pad_c as isize) as usize;
        let lt = lag_t.rem_euclid(self.pad_t as isize) as usize;
        self.table[lt * self.pad_c + lc]
    }

    /// Entry `C[a, b]` for flat column-major indices over an
    /// `n_c x n_t` grid.
    pub fn entry(&self, n_c: usize, a: usize, b: usize) -> Complex64 {
        let (ac, at) = ((a % n_c) as isize, (a / n_c) as isize);
        let (bc, bt) = ((b % n_c) as isize, (b / n_c) as isize);
        self.gamma(bc - ac, bt - at)
    }

    fn dense(&self, n_c: usize, n_t: usize) -> DMatrix<Complex64> {
        let n = n_c * n_t;
        let mut m = DMatrix::zeros(n, n);
        for b in 0..n {
            for a in 0..n {
                m[(a, b)] = self.entry(n_c, a, b);
            }
        }
        hermitianize(&mut m);
        m
    }
}

fn lag_table_for(cov: &CovarianceModel) -> Option<LagTable> {
    match cov {
        CovarianceModel::BlockToeplitz { spectrum, n_c, n_t } => {
            Some(LagTable::new(spectrum, 2 * n_c, 2 * n_t))
        }
        CovarianceModel::Toeplitz1D { spectrum, dim } => {
            Some(LagTable::new(spectrum, 2 * dim, 1))
        }
        CovarianceModel::BlockCirculant { spectrum, n_c, n_t } => {
            Some(LagTable::new(spectrum, *n_c, *n_t))
        }
        CovarianceModel::Circulant1D { spectrum, dim } => {
            Some(LagTable::new(spectrum, *dim, 1))
        }
        _ => None,
    }
}

fn grid_cols(cov: &CovarianceModel) -> usize {
    match cov {
        CovarianceModel::BlockToeplitz { n_c, .. } | CovarianceModel::BlockCirculant { n_c, .. } => {
            *n_c
        }
        _ => cov.dim(),
    }
}

/// `Q^H diag(c) Q x` via zero-padding to double length per dimension,
/// forward FFT, spectral multiply, inverse FFT, truncation.
pub fn oversampled_dft_apply(
    c: &[f64],
    x: &[Complex64],
    dims: &ModelDims,
) -> Result<Vec<Complex64>> {
    if c.len() != dims.oversampled_len() || x.len() != dims.total() {
        return Err(Error::ShapeMismatch(format!(
            "oversampled apply: spectrum {} (want {}), vector {} (want {})",
            c.len(),
            dims.oversampled_len(),
            x.len(),
            dims.total()
        )));
    }
    match dims {
        ModelDims::OneD(n) => {
            let fft = Fft1d::new(2 * n);
            let mut buf = vec![Complex64::default(); 2 * n];
            buf[..*n].copy_from_slice(x);
            fft.forward(&mut buf);
            for (v, s) in buf.iter_mut().zip(c.iter()) {
                *v *= *s;
            }
            fft.inverse(&mut buf);
            Ok(buf[..*n].to_vec())
        }
        ModelDims::TwoD { n_c, n_t } => {
            let (pc, pt) = (2 * n_c, 2 * n_t);
            let fft = GridFft::new(pc, pt);
            let mut buf = vec![Complex64::default(); pc * pt];
            for t in 0..*n_t {
                buf[t * pc..t * pc + n_c].copy_from_slice(&x[t * n_c..(t + 1) * n_c]);
            }
            fft.forward(&mut buf);
            for (v, s) in buf.iter_mut().zip(c.iter()) {
                *v *= *s;
            }
            fft.inverse(&mut buf);
            let mut out = vec![Complex64::default(); n_c * n_t];
            for t in 0..*n_t {
                out[t * n_c..(t + 1) * n_c].copy_from_slice(&buf[t * pc..t * pc + n_c]);
            }
            Ok(out)
        }
    }
}

/// `F^H diag(c) F x` via (2D-)FFT, without padding.
pub fn circulant_apply(c: &[f64], x: &[Complex64], dims: &ModelDims) -> Result<Vec<Complex64>> {
    if c.len() != dims.total() || x.len() != dims.total() {
        return Err(Error::ShapeMismatch(format!(
            "circulant apply: spectrum {} vector {} (want {})",
            c.len(),
            x.len(),
            dims.total()
        )));
    }
    let mut buf = x.to_vec();
    match dims {
        ModelDims::OneD(n) => {
            let fft = Fft1d::new(*n);
            fft.forward(&mut buf);
            for (v, s) in buf.iter_mut().zip(c.iter()) {
                *v *= *s;
            }
            fft.inverse(&mut buf);
        }
        ModelDims::TwoD { n_c, n_t } => {
            let fft = GridFft::new(*n_c, *n_t);
            fft.forward(&mut buf);
            for (v, s) in buf.iter_mut().zip(c.iter()) {
                *v *= *s;
            }
            fft.inverse(&mut buf);
        }
    }
    Ok(buf)
}

/// Memoized dense transform columns, keyed by dims and padding. The tables
/// are pure functions of the shape and are reused across every M-step call.
fn cached_transform_columns(dims: &ModelDims, pad: usize) -> std::sync::Arc<SplitMat> {
    use std::collections::HashMap;
    use std::sync::{Arc, Mutex, OnceLock};
    static CACHE: OnceLock<Mutex<HashMap<(usize, usize, usize), Arc<SplitMat>>>> =
        OnceLock::new();
    let key = match dims {
        ModelDims::OneD(n) => (*n, 1, pad),
        ModelDims::TwoD { n_c, n_t } => (*n_c, *n_t, pad),
    };
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(m) = cache.lock().unwrap().get(&key) {
        return m.clone();
    }
    let m = Arc::new(dense_transform_columns(dims, pad));
    cache.lock().unwrap().insert(key, m.clone());
    m
}

/// Dense columns `Q~ = Q2 (x) Q1` (or `F~` when `pad == 1`) as a split
/// matrix, `pad*n x n`. Column `j` is the padded transform of `e_j`.
fn dense_transform_columns(dims: &ModelDims, pad: usize) -> SplitMat {
    let n = dims.total();
    let rows = match dims {
        ModelDims::OneD(m) => pad * m,
        ModelDims::TwoD { n_c, n_t } => pad * n_c * pad * n_t,
    };
    let mut out = SplitMat::zeros(rows, n);
    match dims {
        ModelDims::OneD(m) => {
            let fft = Fft1d::new(pad * m);
            let mut buf = vec![Complex64::default(); pad * m];
            for j in 0..n {
                buf.iter_mut().for_each(|v| *v = Complex64::default());
                buf[j] = Complex64::new(1.0, 0.0);
                fft.forward(&mut buf);
                for (i, v) in buf.iter().enumerate() {
                    out.re[(i, j)] = v.re;
                    out.im[(i, j)] = v.im;
                }
            }
        }
        ModelDims::TwoD { n_c, n_t } => {
            let (pc, pt) = (pad * n_c, pad * n_t);
            let fft = GridFft::new(pc, pt);
            let mut buf = vec![Complex64::default(); pc * pt];
            for j in 0..n {
                buf.iter_mut().for_each(|v| *v = Complex64::default());
                let (c, t) = (j % n_c, j / n_c);
                buf[t * pc + c] = Complex64::new(1.0, 0.0);
                fft.forward(&mut buf);
                for (i, v) in buf.iter().enumerate() {
                    out.re[(i, j)] = v.re;
                    out.im[(i, j)] = v.im;
                }
            }
        }
    }
    out
}

/// Project a dense Hermitian PD matrix onto a spectral parameterization:
/// the diagonal of `T C T^H` with `T` the (padded) DFT, computed as
/// `sum_r |T l_r|^2` over Cholesky columns so the result is nonnegative.
pub fn project_to_spectrum(
    cov: &DMatrix<Complex64>,
    dims: &ModelDims,
    oversampled: bool,
) -> Result<Vec<f64>> {
    let n = dims.total();
    if cov.nrows() != n || cov.ncols() != n {
        return Err(Error::ShapeMismatch("projection: dims mismatch".into()));
    }
    let mut work = cov.clone();
    // Jitter until the factorization succeeds; the input is a covariance
    // estimate that may be numerically semidefinite.
    let trace: f64 = (0..n).map(|i| work[(i, i)].re).sum();
    let mut jitter = 1e-12 * (trace / n as f64).max(1e-300);
    let chol = loop {
        match HermitianChol::new(work.clone()) {
            Ok(c) => break c,
            Err(_) => {
                for i in 0..n {
                    work[(i, i)] += Complex64::new(jitter, 0.0);
                }
                jitter *= 10.0;
                if jitter > trace.max(1.0) {
                    return Err(Error::Numerical(
                        "projection: matrix cannot be made positive definite".into(),
                    ));
                }
            }
        }
    };
    let pad = if oversampled { 2 } else { 1 };
    let out_len = match dims {
        ModelDims::OneD(m) => pad * m,
        ModelDims::TwoD { n_c, n_t } => pad * n_c * pad * n_t,
    };
    let mut acc = vec![0.0; out_len];
    let lmat = chol.lower();
    match dims {
        ModelDims::OneD(m) => {
            let fft = Fft1d::new(pad * m);
            let mut buf = vec![Complex64::default(); pad * m];
            for r in 0..n {
                buf.iter_mut().for_each(|v| *v = Complex64::default());
                for i in 0..n {
                    buf[i] = lmat[(i, r)];
                }
                fft.forward(&mut buf);
                for (a, v) in acc.iter_mut().zip(buf.iter()) {
                    *a += v.norm_sqr();
                }
            }
        }
        ModelDims::TwoD { n_c, n_t } => {
            let (pc, pt) = (pad * n_c, pad * n_t);
            let fft = GridFft::new(pc, pt);
            let mut buf = vec![Complex64::default(); pc * pt];
            for r in 0..n {
                buf.iter_mut().for_each(|v| *v = Complex64::default());
                for i in 0..n {
                    let (c, t) = (i % n_c, i / n_c);
                    buf[t * pc + c] = lmat[(i, r)];
                }
                fft.forward(&mut buf);
                for (a, v) in acc.iter_mut().zip(buf.iter()) {
                    *a += v.norm_sqr();
                }
            }
        }
    }
    Ok(acc)
}

/// Rebuild the dense matrix of a spectral tag from a raw spectrum vector.
pub fn dense_from_spectrum(
    spectrum: &[f64],
    dims: &ModelDims,
    oversampled: bool,
) -> DMatrix<Complex64> {
    let pad = if oversampled { 2 } else { 1 };
    match dims {
        ModelDims::OneD(n) => LagTable::new(spectrum, pad * n, 1).dense(*n, 1),
        ModelDims::TwoD { n_c, n_t } => {
            LagTable::new(spectrum, pad * n_c, pad * n_t).dense(*n_c, *n_t)
        }
    }
}

/// One safeguarded Toeplitz spectrum update (the structured M-step).
///
/// The raw additive update is `c + diag(diag(c) Theta diag(c))` with
/// `Theta = Q (C^-1 Chat C^-1 - C^-1) Q^H`. Raw steps can leave the positive
/// cone or decrease the expected complete-data log-likelihood on noisy
/// sample covariances, so candidates `c + alpha*delta` for
/// `alpha in {1, 1/2, 1/4, 1/8}` are clamped to the spectral floor and
/// scored by `-logdet(C) - tr(C^-1 Chat)`; the best candidate is returned,
/// or the current spectrum unchanged if none improves.
pub fn toeplitz_m_step_update(
    c_current: &[f64],
    sample_cov: &DMatrix<Complex64>,
    dims: &ModelDims,
    floor_rel: f64,
) -> Result<Vec<f64>> {
    let n = dims.total();
    let m_len = dims.oversampled_len();
    if c_current.len() != m_len {
        return Err(Error::ShapeMismatch(format!(
            "spectrum length {} != {m_len}",
            c_current.len()
        )));
    }
    if sample_cov.nrows() != n || sample_cov.ncols() != n {
        return Err(Error::ShapeMismatch("sample covariance dims".into()));
    }
    if c_current.iter().any(|&v| !(v > 0.0)) {
        return Err(Error::InvalidParameter(
            "current spectrum must be strictly positive".into(),
        ));
    }

    let mean_c = c_current.iter().sum::<f64>() / m_len as f64;
    let floor = floor_rel * mean_c;

    let score = |spec: &[f64]| -> Result<f64> {
        let dense = dense_from_spectrum(spec, dims, true);
        let chol = HermitianChol::new(dense)
            .map_err(|_| Error::Numerical("candidate spectrum not positive definite".into()))?;
        let cinv = chol.inverse();
        Ok(-chol.log_det() - trace_inv_times(&cinv, sample_cov))
    };

    // Current state: factorize once, reuse the inverse for Theta.
    let dense = dense_from_spectrum(c_current, dims, true);
    let chol = HermitianChol::new(dense)
        .map_err(|e| Error::Numerical(format!("current Toeplitz covariance singular: {e}")))?;
    let cinv = chol.inverse();
    let q_current = -chol.log_det() - trace_inv_times(&cinv, sample_cov);

    // M = C^-1 Chat C^-1 - C^-1
    let cinv_s = SplitMat::from_complex(&cinv);
    let chat_s = SplitMat::from_complex(sample_cov);
    let mut m = cinv_s.mul(&chat_s).mul(&cinv_s).to_complex();
    m -= &cinv;
    hermitianize(&mut m);

    // theta_i = (Q M Q^H)_{ii} = row_i(Q M) . conj(row_i(Q))
    let q = cached_transform_columns(dims, 2);
    let qm = q.mul(&SplitMat::from_complex(&m));
    let mut delta = vec![0.0; m_len];
    for i in 0..m_len {
        let mut acc = 0.0;
        for j in 0..n {
            // Re(qm[i,j] * conj(q[i,j]))
            acc += qm.re[(i, j)] * q.re[(i, j)] + qm.im[(i, j)] * q.im[(i, j)];
        }
        delta[i] = c_current[i] * c_current[i] * acc;
    }

    let mut best_spec: Option<Vec<f64>> = None;
    let mut best_q = q_current;
    for alpha in [1.0, 0.5, 0.25, 0.125] {
        let cand: Vec<f64> = c_current
            .iter()
            .zip(delta.iter())
            .map(|(&c, &d)| (c + alpha * d).max(floor))
            .collect();
        match score(&cand) {
            Ok(qv) if qv >= best_q => {
                best_q = qv;
                best_spec = Some(cand);
            }
            _ => {}
        }
        if best_spec.is_some() && alpha == 1.0 {
            // Full step already improves; take it.
            break;
        }
    }
    Ok(best_spec.unwrap_or_else(|| c_current.to_vec()))
}

/// Factorized observation covariance `C_y = A C A^H + sigma^2 I`,
/// supporting solves and the log-determinant.
///
/// For spectral parameterizations the noise folds into the spectrum
/// (`A C A^H + sigma^2 I = A T^H diag(c + sigma^2) T A^H` since the
/// transforms have orthonormal columns), so the pilot block is gathered
/// exactly from the lag table of `c + sigma^2`.
pub struct ObservationCov {
    chol: HermitianChol,
}

impl ObservationCov {
    pub fn dim(&self) -> usize {
        self.chol.dim()
    }

    pub fn log_det(&self) -> f64 {
        self.chol.log_det()
    }

    pub fn solve(&self, b: &DVector<Complex64>) -> DVector<Complex64> {
        self.chol.solve_vec(b)
    }

    pub fn solve_mat(&self, b: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        self.chol.solve_mat(b)
    }

    /// `b^H C_y^{-1} b`.
    pub fn quad_form(&self, b: &DVector<Complex64>) -> f64 {
        self.chol.quad_form(b)
    }
}

/// Dense pilot block `A C A^H` (without noise).
pub fn pilot_block(cov: &CovarianceModel, pattern: &PilotPattern) -> Result<DMatrix<Complex64>> {
    if cov.dim() != pattern.n_c() * pattern.n_t() {
        return Err(Error::ShapeMismatch(format!(
            "covariance dim {} vs pattern grid {}",
            cov.dim(),
            pattern.n_c() * pattern.n_t()
        )));
    }
    let idx = pattern.flat_indices();
    let np = idx.len();
    let mut b = DMatrix::zeros(np, np);
    if let Some(table) = lag_table_for(cov) {
        let n_c = grid_cols(cov);
        for (col, &bj) in idx.iter().enumerate() {
            for (row, &ai) in idx.iter().enumerate() {
                b[(row, col)] = table.entry(n_c, ai, bj);
            }
        }
    } else {
        match cov {
            CovarianceModel::Full(m) => {
                for (col, &bj) in idx.iter().enumerate() {
                    for (row, &ai) in idx.iter().enumerate() {
                        b[(row, col)] = m[(ai, bj)];
                    }
                }
            }
            CovarianceModel::Diagonal(d) => {
                for (row, &ai) in idx.iter().enumerate() {
                    b[(row, row)] = Complex64::new(d[ai], 0.0);
                }
            }
            CovarianceModel::Kronecker { time, freq } => {
                let td = time.to_dense()?;
                let fd = freq.to_dense()?;
                let n_c = pattern.n_c();
                for (col, &bj) in idx.iter().enumerate() {
                    let (bc, bt) = (bj % n_c, bj / n_c);
                    for (row, &ai) in idx.iter().enumerate() {
                        let (ac, at) = (ai % n_c, ai / n_c);
                        b[(row, col)] = td[(at, bt)] * fd[(ac, bc)];
                    }
                }
            }
            _ => unreachable!("spectral tags handled by lag table"),
        }
    }
    hermitianize(&mut b);
    Ok(b)
}

/// Cross covariance `C A^H` (grid dimension by pilot count).
pub fn cross_covariance(
    cov: &CovarianceModel,
    pattern: &PilotPattern,
) -> Result<DMatrix<Complex64>> {
    let n = cov.dim();
    if n != pattern.n_c() * pattern.n_t() {
        return Err(Error::ShapeMismatch("cross covariance dims".into()));
    }
    let idx = pattern.flat_indices();
    let np = idx.len();
    let mut t = DMatrix::zeros(n, np);
    if let Some(table) = lag_table_for(cov) {
        let n_c = grid_cols(cov);
        for (col, &bj) in idx.iter().enumerate() {
            for a in 0..n {
                t[(a, col)] = table.entry(n_c, a, bj);
            }
        }
    } else {
        match cov {
            CovarianceModel::Full(m) => {
                for (col, &bj) in idx.iter().enumerate() {
                    t.set_column(col, &m.column(bj));
                }
            }
            CovarianceModel::Diagonal(d) => {
                for (col, &bj) in idx.iter().enumerate() {
                    t[(bj, col)] = Complex64::new(d[bj], 0.0);
                }
            }
            CovarianceModel::Kronecker { time, freq } => {
                let td = time.to_dense()?;
                let fd = freq.to_dense()?;
                let n_c = pattern.n_c();
                for (col, &bj) in idx.iter().enumerate() {
                    let (bc, bt) = (bj % n_c, bj / n_c);
                    for a in 0..n {
                        let (ac, at) = (a % n_c, a / n_c);
                        t[(a, col)] = td[(at, bt)] * fd[(ac, bc)];
                    }
                }
            }
            _ => unreachable!(),
        }
    }
    Ok(t)
}

/// Assemble and factorize `C_y = A C A^H + sigma^2 I`.
pub fn assemble_observation_cov(
    cov: &CovarianceModel,
    pattern: &PilotPattern,
    sigma2: f64,
) -> Result<ObservationCov> {
    if !(sigma2 > 0.0) || !sigma2.is_finite() {
        return Err(Error::InvalidParameter(
            "noise variance must be positive and finite".into(),
        ));
    }
    // Fold the noise into the spectrum where the parameterization allows it;
    // otherwise add sigma^2 I to the gathered pilot block.
    let shifted = match cov {
        CovarianceModel::BlockToeplitz { spectrum, n_c, n_t } => Some(CovarianceModel::BlockToeplitz {
            spectrum: spectrum.iter().map(|&v| v + sigma2).collect(),
            n_c: *n_c,
            n_t: *n_t,
        }),
        CovarianceModel::Toeplitz1D { spectrum, dim } => Some(CovarianceModel::Toeplitz1D {
            spectrum: spectrum.iter().map(|&v| v + sigma2).collect(),
            dim: *dim,
        }),
        CovarianceModel::BlockCirculant { spectrum, n_c, n_t } => {
            Some(CovarianceModel::BlockCirculant {
                spectrum: spectrum.iter().map(|&v| v + sigma2).collect(),
                n_c: *n_c,
                n_t: *n_t,
            })
        }
        CovarianceModel::Circulant1D { spectrum, dim } => Some(CovarianceModel::Circulant1D {
            spectrum: spectrum.iter().map(|&v| v + sigma2).collect(),
            dim: *dim,
        }),
        _ => None,
    };
    let block = match &shifted {
        Some(s) => pilot_block(s, pattern)?,
        None => {
            let mut b = pilot_block(cov, pattern)?;
            for i in 0..b.nrows() {
                b[(i, i)] += Complex64::new(sigma2, 0.0);
            }
            b
        }
    };
    let chol = HermitianChol::new(block)
        .map_err(|_| Error::Numerical("observation covariance not positive definite".into()))?;
    Ok(ObservationCov { chol })
}
