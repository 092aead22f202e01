//! Complex Gaussian mixture fitting under structural covariance constraints.
//!
//! The density convention throughout is the circularly-symmetric complex
//! Gaussian, `N_C(x; mu, C) = exp(-(x-mu)^H C^-1 (x-mu)) / (pi^N det C)`.
//!
//! Constraint handling in the M-step:
//! * `Full` - responsibility-weighted sample covariance plus diagonal loading.
//! * `Toeplitz` - sample covariance followed by one safeguarded spectral
//!   update ([`crate::structured_cov::toeplitz_m_step_update`]).
//! * `Circulant` - the samples are DFT-transformed once up front; a
//!   diagonal-covariance mixture is fitted in the transformed domain and
//!   mapped back (circulant covariances, means through the inverse DFT).
//! * `Diagonal` - per-coordinate variances.

use nalgebra::{DMatrix, DVector, RowDVector};
use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use std::io::{Read, Write};
use std::path::Path;

use crate::channel_sim::ChannelGrid;
use crate::error::{Error, Result};
use crate::fft::{Fft1d, GridFft};
use crate::linalg::{hermitianize, HermitianChol, SplitMat};
use crate::rng::stream_rng;
use crate::structured_cov::{
    dense_from_spectrum, project_to_spectrum, toeplitz_m_step_update, CovarianceModel, ModelDims,
    DEFAULT_DIAGONAL_LOADING, DEFAULT_SPECTRAL_FLOOR,
};

const LN_PI: f64 = 1.144729885849400174143427351353058711647_f64;

/// Columns per block in the batched E/M-step products. Blocks are reduced in
/// a fixed order so results do not depend on the thread count.
const BLOCK_COLS: usize = 2048;

/// Structural constraint on every component covariance of a fit.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CovConstraint {
    Full,
    Toeplitz,
    Circulant,
    Diagonal,
}

impl CovConstraint {
    pub fn name(&self) -> &'static str {
        match self {
            CovConstraint::Full => "full",
            CovConstraint::Toeplitz => "toeplitz",
            CovConstraint::Circulant => "circulant",
            CovConstraint::Diagonal => "diagonal",
        }
    }
}

/// Mean initialization scheme.
#[derive(Clone, Debug)]
pub enum EmInit {
    /// k-means++ seeding on a deterministic subsample of at most
    /// `10 * K * N` points.
    KmeansPlusPlus,
    /// Fixed user-provided centroids (deterministic, permutation-invariant).
    Centroids(Vec<DVector<Complex64>>),
}

#[derive(Clone, Debug)]
pub struct EmConfig {
    pub n_components: usize,
    pub max_iters: usize,
    /// Stop when the relative log-likelihood improvement falls below this.
    pub rel_tol: f64,
    pub init: EmInit,
    /// Relative spectral floor for structured covariance updates.
    pub spectral_floor: f64,
    pub rng_seed: u64,
}

impl EmConfig {
    pub fn new(n_components: usize) -> Self {
        EmConfig {
            n_components,
            max_iters: 300,
            rel_tol: 1e-6,
            init: EmInit::KmeansPlusPlus,
            spectral_floor: DEFAULT_SPECTRAL_FLOOR,
            rng_seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_components == 0 {
            return Err(Error::InvalidParameter("need at least one component".into()));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidParameter("max_iters must be >= 1".into()));
        }
        if !(self.rel_tol > 0.0) {
            return Err(Error::InvalidParameter("rel_tol must be positive".into()));
        }
        if !(self.spectral_floor > 0.0) {
            return Err(Error::InvalidParameter("spectral_floor must be positive".into()));
        }
        Ok(())
    }
}

/// A fitted K-component complex Gaussian mixture.
#[derive(Clone, Debug)]
pub struct GmmModel {
    pub weights: Vec<f64>,
    pub means: Vec<DVector<Complex64>>,
    pub covariances: Vec<CovarianceModel>,
    pub dims: ModelDims,
}

impl GmmModel {
    pub fn n_components(&self) -> usize {
        self.weights.len()
    }

    pub fn dim(&self) -> usize {
        self.dims.total()
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.weights.len();
        if k == 0 || self.means.len() != k || self.covariances.len() != k {
            return Err(Error::ShapeMismatch("component count mismatch".into()));
        }
        let wsum: f64 = self.weights.iter().sum();
        if (wsum - 1.0).abs() > 1e-12 * k as f64 || self.weights.iter().any(|&w| w < 0.0) {
            return Err(Error::InvalidParameter(format!(
                "weights must be nonnegative and sum to 1 (sum {wsum})"
            )));
        }
        let n = self.dims.total();
        for (i, (m, c)) in self.means.iter().zip(self.covariances.iter()).enumerate() {
            if m.len() != n || c.dim() != n {
                return Err(Error::ShapeMismatch(format!("component {i} dimension")));
            }
            c.validate()?;
        }
        Ok(())
    }

    /// Precompute per-component factorizations for repeated density
    /// evaluations.
    pub fn density(&self) -> Result<GmmDensity> {
        GmmDensity::new(self)
    }
}

/// Per-iteration fitting diagnostics.
#[derive(Clone, Debug, Default)]
pub struct FitReport {
    /// Log-likelihood (sum over samples) per E-step; the last entry is the
    /// likelihood of the returned model.
    pub log_likelihood: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Non-fatal incidents, e.g. empty-component rescues.
    pub events: Vec<String>,
}

// ---------------------------------------------------------------------------
// Density evaluation
// ---------------------------------------------------------------------------

enum DensityComps {
    Dense(Vec<HermitianChol>),
    Diagonal(Vec<(Vec<f64>, f64)>),
    /// Diagonal in the DFT domain: transformed means plus per-bin variances.
    Circulant {
        means_t: Vec<DVector<Complex64>>,
        comps: Vec<(Vec<f64>, f64)>,
    },
    Kronecker(Vec<KronChol>),
}

struct KronChol {
    time: HermitianChol,
    freq: HermitianChol,
    log_det: f64,
}

/// Cached evaluator for mixture log-densities and responsibilities.
pub struct GmmDensity {
    dims: ModelDims,
    log_weights: Vec<f64>,
    means: Vec<DVector<Complex64>>,
    comps: DensityComps,
}

fn transform_for(dims: &ModelDims) -> Transform {
    match dims {
        ModelDims::OneD(n) => Transform::One(Fft1d::new(*n)),
        ModelDims::TwoD { n_c, n_t } => Transform::Two(GridFft::new(*n_c, *n_t)),
    }
}

enum Transform {
    One(Fft1d),
    Two(GridFft),
}

impl Transform {
    fn forward(&self, buf: &mut [Complex64]) {
        match self {
            Transform::One(f) => f.forward(buf),
            Transform::Two(g) => g.forward(buf),
        }
    }

    fn inverse(&self, buf: &mut [Complex64]) {
        match self {
            Transform::One(f) => f.inverse(buf),
            Transform::Two(g) => g.inverse(buf),
        }
    }
}

fn diag_log_det(vars: &[f64]) -> f64 {
    vars.iter().map(|v| v.ln()).sum()
}

fn diag_quad(mean: &DVector<Complex64>, vars: &[f64], x: &DVector<Complex64>) -> f64 {
    let mut q = 0.0;
    for ((m, v), z) in mean.iter().zip(vars.iter()).zip(x.iter()) {
        q += (z - m).norm_sqr() / v;
    }
    q
}

impl GmmDensity {
    fn new(model: &GmmModel) -> Result<Self> {
        model.validate()?;
        let log_weights: Vec<f64> = model
            .weights
            .iter()
            .map(|&w| if w > 0.0 { w.ln() } else { f64::NEG_INFINITY })
            .collect();
        let comps = match &model.covariances[0] {
            CovarianceModel::Diagonal(_) => {
                let mut v = Vec::with_capacity(model.n_components());
                for c in &model.covariances {
                    let CovarianceModel::Diagonal(d) = c else {
                        return Err(Error::InvalidParameter(
                            "mixed covariance tags in one model".into(),
                        ));
                    };
                    v.push((d.clone(), diag_log_det(d)));
                }
                DensityComps::Diagonal(v)
            }
            CovarianceModel::Circulant1D { .. } | CovarianceModel::BlockCirculant { .. } => {
                let tr = transform_for(&model.dims);
                let mut means_t = Vec::with_capacity(model.n_components());
                let mut comps = Vec::with_capacity(model.n_components());
                for (m, c) in model.means.iter().zip(model.covariances.iter()) {
                    let spectrum = match c {
                        CovarianceModel::Circulant1D { spectrum, .. } => spectrum,
                        CovarianceModel::BlockCirculant { spectrum, .. } => spectrum,
                        _ => {
                            return Err(Error::InvalidParameter(
                                "mixed covariance tags in one model".into(),
                            ))
                        }
                    };
                    let mut buf: Vec<Complex64> = m.iter().copied().collect();
                    tr.forward(&mut buf);
                    means_t.push(DVector::from_vec(buf));
                    comps.push((spectrum.clone(), diag_log_det(spectrum)));
                }
                DensityComps::Circulant { means_t, comps }
            }
            CovarianceModel::Kronecker { .. } => {
                let mut v = Vec::with_capacity(model.n_components());
                for (idx, c) in model.covariances.iter().enumerate() {
                    let CovarianceModel::Kronecker { time, freq } = c else {
                        return Err(Error::InvalidParameter(
                            "mixed covariance tags in one model".into(),
                        ));
                    };
                    let td = time.to_dense()?;
                    let fd = freq.to_dense()?;
                    let (nt, nf) = (td.nrows(), fd.nrows());
                    let time = HermitianChol::new(td).map_err(|e| {
                        Error::Numerical(format!("component {idx} time factor: {e}"))
                    })?;
                    let freq = HermitianChol::new(fd).map_err(|e| {
                        Error::Numerical(format!("component {idx} freq factor: {e}"))
                    })?;
                    let log_det = nf as f64 * time.log_det() + nt as f64 * freq.log_det();
                    v.push(KronChol { time, freq, log_det });
                }
                DensityComps::Kronecker(v)
            }
            _ => {
                // Full, Toeplitz variants: dense factorization.
                let mut v = Vec::with_capacity(model.n_components());
                for (idx, c) in model.covariances.iter().enumerate() {
                    let dense = c.to_dense()?;
                    v.push(HermitianChol::new(dense).map_err(|e| {
                        Error::Numerical(format!("singular covariance of component {idx}: {e}"))
                    })?);
                }
                DensityComps::Dense(v)
            }
        };
        Ok(GmmDensity {
            dims: model.dims,
            log_weights,
            means: model.means.clone(),
            comps,
        })
    }

    pub fn n_components(&self) -> usize {
        self.log_weights.len()
    }

    /// `log(w_k) + log N_C(x; mu_k, C_k)` for every component.
    pub fn log_joints(&self, x: &DVector<Complex64>) -> Result<Vec<f64>> {
        let n = self.dims.total();
        if x.len() != n {
            return Err(Error::ShapeMismatch(format!(
                "density: vector length {} vs model dim {}",
                x.len(),
                n
            )));
        }
        let base = -(n as f64) * LN_PI;
        let mut out = Vec::with_capacity(self.n_components());
        match &self.comps {
            DensityComps::Dense(chols) => {
                for (k, chol) in chols.iter().enumerate() {
                    let d = x - &self.means[k];
                    out.push(self.log_weights[k] + base - chol.log_det() - chol.quad_form(&d));
                }
            }
            DensityComps::Diagonal(comps) => {
                for (k, (vars, log_det)) in comps.iter().enumerate() {
                    out.push(
                        self.log_weights[k] + base - log_det - diag_quad(&self.means[k], vars, x),
                    );
                }
            }
            DensityComps::Circulant { means_t, comps } => {
                let tr = transform_for(&self.dims);
                let mut buf: Vec<Complex64> = x.iter().copied().collect();
                tr.forward(&mut buf);
                let z = DVector::from_vec(buf);
                for (k, (vars, log_det)) in comps.iter().enumerate() {
                    out.push(self.log_weights[k] + base - log_det - diag_quad(&means_t[k], vars, &z));
                }
            }
            DensityComps::Kronecker(comps) => {
                let (n_c, n_t) = match self.dims {
                    ModelDims::TwoD { n_c, n_t } => (n_c, n_t),
                    ModelDims::OneD(n) => (n, 1),
                };
                for (k, kc) in comps.iter().enumerate() {
                    let d = x - &self.means[k];
                    let grid = DMatrix::from_column_slice(n_c, n_t, d.as_slice());
                    // (L_t (x) L_c)^-1 vec(D) = vec(L_c^-1 D L_t^-H)
                    let y = kc.freq.solve_lower_mat(&grid);
                    let w = kc.time.solve_lower_mat(&y.adjoint());
                    let quad: f64 = w.iter().map(|v| v.norm_sqr()).sum();
                    out.push(self.log_weights[k] + base - kc.log_det - quad);
                }
            }
        }
        Ok(out)
    }

    pub fn log_density(&self, x: &DVector<Complex64>) -> Result<f64> {
        Ok(log_sum_exp(&self.log_joints(x)?))
    }

    pub fn responsibilities(&self, x: &DVector<Complex64>) -> Result<Vec<f64>> {
        let lj = self.log_joints(x)?;
        Ok(softmax_from_log(&lj))
    }
}

/// `log sum_k exp(v_k)` guarded against overflow.
pub fn log_sum_exp(v: &[f64]) -> f64 {
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    let s: f64 = v.iter().map(|&x| (x - m).exp()).sum();
    m + s.ln()
}

/// Normalized exponentials of log-values.
pub fn softmax_from_log(v: &[f64]) -> Vec<f64> {
    let lse = log_sum_exp(v);
    v.iter().map(|&x| (x - lse).exp()).collect()
}

/// Mixture log-density at `x`.
pub fn log_density(model: &GmmModel, x: &DVector<Complex64>) -> Result<f64> {
    model.density()?.log_density(x)
}

/// Posterior component probabilities at `x`.
pub fn responsibilities(model: &GmmModel, x: &DVector<Complex64>) -> Result<Vec<f64>> {
    model.density()?.responsibilities(x)
}

// ---------------------------------------------------------------------------
// Fitting
// ---------------------------------------------------------------------------

/// Fit a K-component mixture under the given covariance constraint.
///
/// `dims` fixes the grid interpretation (block structure for the Toeplitz
/// and circulant constraints). The returned trace is non-decreasing: both
/// structured M-steps are safeguarded to never reduce the expected
/// complete-data log-likelihood of their component.
pub fn fit(
    data: &[DVector<Complex64>],
    cfg: &EmConfig,
    constraint: CovConstraint,
    dims: ModelDims,
) -> Result<(GmmModel, FitReport)> {
    cfg.validate()?;
    let n = dims.total();
    if data.len() < cfg.n_components {
        return Err(Error::DegenerateData(format!(
            "{} samples for {} components",
            data.len(),
            cfg.n_components
        )));
    }
    if data.iter().any(|x| x.len() != n) {
        return Err(Error::ShapeMismatch("sample dimension mismatch".into()));
    }
    match constraint {
        CovConstraint::Full => fit_dense(data, cfg, dims, false),
        CovConstraint::Toeplitz => fit_dense(data, cfg, dims, true),
        CovConstraint::Circulant => fit_circulant(data, cfg, dims),
        CovConstraint::Diagonal => {
            let x = data_matrix(data);
            let (weights, means, vars, report) = fit_diagonal_matrix(&x, cfg)?;
            let covariances = vars.into_iter().map(CovarianceModel::Diagonal).collect();
            let model = GmmModel {
                weights,
                means,
                covariances,
                dims,
            };
            model.validate()?;
            Ok((model, report))
        }
    }
}

/// Fit the time-axis mixture on all transposed rows and the frequency-axis
/// mixture on all columns of the dataset grids.
pub fn fit_time_and_freq(
    dataset: &[ChannelGrid],
    cfg_t: &EmConfig,
    cfg_c: &EmConfig,
    constraint: CovConstraint,
) -> Result<((GmmModel, FitReport), (GmmModel, FitReport))> {
    if dataset.is_empty() {
        return Err(Error::DegenerateData("empty dataset".into()));
    }
    let n_c = dataset[0].n_c();
    let n_t = dataset[0].n_t();
    let mut time_samples = Vec::with_capacity(dataset.len() * n_c);
    let mut freq_samples = Vec::with_capacity(dataset.len() * n_t);
    for g in dataset {
        for k in 0..n_c {
            time_samples.push(g.time_row(k));
        }
        for i in 0..n_t {
            freq_samples.push(g.freq_column(i));
        }
    }
    let time = fit(&time_samples, cfg_t, constraint, ModelDims::OneD(n_t))?;
    let freq = fit(&freq_samples, cfg_c, constraint, ModelDims::OneD(n_c))?;
    Ok((time, freq))
}

fn data_matrix(data: &[DVector<Complex64>]) -> DMatrix<Complex64> {
    let n = data[0].len();
    let mut m = DMatrix::zeros(n, data.len());
    for (j, x) in data.iter().enumerate() {
        m.set_column(j, x);
    }
    m
}

fn convergence_reached(trace: &[f64], rel_tol: f64) -> bool {
    if trace.len() < 2 {
        return false;
    }
    let prev = trace[trace.len() - 2];
    let cur = trace[trace.len() - 1];
    (cur - prev).abs() <= rel_tol * prev.abs().max(1e-300)
}

// --------------------------- dense-covariance EM ---------------------------

struct DenseEStep {
    log_like: f64,
    /// K x S responsibilities, component-major (`resp[k*s..][..s]`).
    resp: Vec<f64>,
    /// Per-sample mixture log-density (for empty-component rescue).
    sample_ld: Vec<f64>,
}

fn dense_e_step(
    x: &SplitMat,
    weights: &[f64],
    means: &[DVector<Complex64>],
    covs: &[DMatrix<Complex64>],
) -> Result<DenseEStep> {
    let k = weights.len();
    let n = x.nrows();
    let s = x.ncols();
    let base = -(n as f64) * LN_PI;
    let mut logj = vec![0.0_f64; k * s];

    let log_weights: Vec<f64> = weights
        .iter()
        .map(|&w| if w > 0.0 { w.ln() } else { f64::NEG_INFINITY })
        .collect();

    let results: Vec<Result<Vec<f64>>> = covs
        .par_iter()
        .enumerate()
        .map(|(kk, cov)| {
            let chol = HermitianChol::new(cov.clone())
                .map_err(|e| Error::Numerical(format!("component {kk} covariance: {e}")))?;
            let w = SplitMat::from_complex(&chol.inv_lower());
            let wmu = w.mul_complex_vector(&means[kk]);
            let wmu_re = DVector::from_iterator(n, wmu.iter().map(|z| z.re));
            let wmu_im = DVector::from_iterator(n, wmu.iter().map(|z| z.im));
            let wmu_norm = wmu.iter().map(|z| z.norm_sqr()).sum::<f64>();
            let head = log_weights[kk] + base - chol.log_det();

            let mut row = vec![0.0_f64; s];
            let mut start = 0;
            while start < s {
                let len = BLOCK_COLS.min(s - start);
                let xb = x.columns(start, len);
                let z = w.mul(&xb);
                // ||z - wmu||^2 = ||z||^2 - 2 Re(wmu^H z) + ||wmu||^2
                let cross: RowDVector<f64> =
                    wmu_re.transpose() * &z.re + wmu_im.transpose() * &z.im;
                for j in 0..len {
                    let zn = z.re.column(j).norm_squared() + z.im.column(j).norm_squared();
                    let quad = zn - 2.0 * cross[j] + wmu_norm;
                    row[start + j] = head - quad;
                }
                start += len;
            }
            Ok(row)
        })
        .collect();

    for (kk, r) in results.into_iter().enumerate() {
        let row = r?;
        logj[kk * s..(kk + 1) * s].copy_from_slice(&row);
    }

    let mut resp = vec![0.0_f64; k * s];
    let mut sample_ld = vec![0.0_f64; s];
    let mut log_like = 0.0;
    let mut scratch = vec![0.0_f64; k];
    for i in 0..s {
        for kk in 0..k {
            scratch[kk] = logj[kk * s + i];
        }
        let lse = log_sum_exp(&scratch);
        sample_ld[i] = lse;
        log_like += lse;
        for kk in 0..k {
            resp[kk * s + i] = (scratch[kk] - lse).exp();
        }
    }
    Ok(DenseEStep {
        log_like,
        resp,
        sample_ld,
    })
}

/// Responsibility-weighted mean and sample covariance of one component,
/// computed blockwise with fixed reduction order.
fn weighted_moments(
    x: &SplitMat,
    r: &[f64],
) -> (f64, DVector<Complex64>, DMatrix<Complex64>) {
    let n = x.nrows();
    let s = x.ncols();
    let nk: f64 = r.iter().sum();

    let rv = DVector::from_column_slice(r);
    let m_re = &x.re * &rv;
    let m_im = &x.im * &rv;
    let mean = DVector::from_fn(n, |i, _| Complex64::new(m_re[i] / nk, m_im[i] / nk));

    let blocks: Vec<(usize, usize)> = {
        let mut v = Vec::new();
        let mut start = 0;
        while start < s {
            let len = BLOCK_COLS.min(s - start);
            v.push((start, len));
            start += len;
        }
        v
    };
    let partials: Vec<SplitMat> = blocks
        .par_iter()
        .map(|&(start, len)| {
            let mut xb = x.columns(start, len);
            let w: Vec<f64> = r[start..start + len].iter().map(|&v| v.max(0.0).sqrt()).collect();
            xb.scale_columns(&w);
            xb.mul_adjoint(&xb)
        })
        .collect();
    let mut gram = SplitMat::zeros(n, n);
    for p in &partials {
        gram.add_assign(p);
    }
    let mut cov = gram.to_complex();
    cov /= Complex64::new(nk, 0.0);
    // Chat = sum r x x^H / Nk - mu mu^H for the weighted mean mu.
    for j in 0..n {
        for i in 0..n {
            cov[(i, j)] -= mean[i] * mean[j].conj();
        }
    }
    hermitianize(&mut cov);
    (nk, mean, cov)
}

fn loaded(mut cov: DMatrix<Complex64>, loading_rel: f64) -> Result<DMatrix<Complex64>> {
    let n = cov.nrows();
    let tr: f64 = (0..n).map(|i| cov[(i, i)].re).sum();
    if !(tr > 0.0) || !tr.is_finite() {
        return Err(Error::Numerical("collapsed component covariance".into()));
    }
    let eps = loading_rel * tr / n as f64;
    for i in 0..n {
        cov[(i, i)] += Complex64::new(eps, 0.0);
    }
    Ok(cov)
}

fn fit_dense(
    data: &[DVector<Complex64>],
    cfg: &EmConfig,
    dims: ModelDims,
    toeplitz: bool,
) -> Result<(GmmModel, FitReport)> {
    let k = cfg.n_components;
    let s = data.len();
    let x = SplitMat::from_complex(&data_matrix(data));

    // Global covariance for initialization.
    let ones = vec![1.0_f64; s];
    let (_, _, gcov) = weighted_moments(&x, &ones);
    let gcov = loaded(gcov, DEFAULT_DIAGONAL_LOADING)?;

    let mut means = init_means(data, cfg)?;
    let mut weights = vec![1.0 / k as f64; k];
    let (init_cov, init_spec): (DMatrix<Complex64>, Vec<f64>) = if toeplitz {
        let raw = project_to_spectrum(&gcov, &dims, true)?;
        let mean_raw = raw.iter().sum::<f64>() / raw.len() as f64;
        let floor = cfg.spectral_floor * mean_raw.max(1e-300);
        let spec: Vec<f64> = raw.iter().map(|&v| v.max(floor)).collect();
        (dense_from_spectrum(&spec, &dims, true), spec)
    } else {
        (gcov.clone(), Vec::new())
    };
    let mut covs: Vec<DMatrix<Complex64>> = vec![init_cov.clone(); k];
    let mut spectra: Vec<Vec<f64>> = if toeplitz {
        vec![init_spec.clone(); k]
    } else {
        Vec::new()
    };
    let collapse_floor = 1e-12 * init_cov.diagonal().iter().map(|v| v.re).sum::<f64>();

    let mut report = FitReport::default();
    let mut converged = false;

    for iter in 0..cfg.max_iters {
        let e = dense_e_step(&x, &weights, &means, &covs)?;
        report.log_likelihood.push(e.log_like);
        report.iterations = iter + 1;
        if convergence_reached(&report.log_likelihood, cfg.rel_tol) {
            converged = true;
            break;
        }

        // Empty-component rescue: reseed at the lowest-density sample.
        let mut rescued = vec![false; k];
        for kk in 0..k {
            let mass: f64 = e.resp[kk * s..(kk + 1) * s].iter().sum();
            if mass < 1e-10 {
                let argmin = e
                    .sample_ld
                    .iter()
                    .enumerate()
                    .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
                    .map(|(i, _)| i)
                    .unwrap_or(0);
                means[kk] = data[argmin].clone();
                rescued[kk] = true;
                report
                    .events
                    .push(format!("iter {iter}: reseeded empty component {kk} (mass {mass:.3e})"));
            }
        }

        enum MStep {
            Skip,
            Collapsed(f64),
            Updated(f64, DVector<Complex64>, DMatrix<Complex64>, Vec<f64>),
        }
        let updates: Vec<Result<MStep>> = (0..k)
            .into_par_iter()
            .map(|kk| {
                if rescued[kk] {
                    return Ok(MStep::Skip);
                }
                let r = &e.resp[kk * s..(kk + 1) * s];
                let (nk, mean, chat) = weighted_moments(&x, r);
                // A component pinned to (numerically) one point has a
                // vanishing sample covariance; treat like an empty
                // component instead of failing the fit.
                let tr: f64 = chat.diagonal().iter().map(|v| v.re).sum();
                if !tr.is_finite() || tr <= collapse_floor {
                    return Ok(MStep::Collapsed(tr));
                }
                if toeplitz {
                    let spec =
                        toeplitz_m_step_update(&spectra[kk], &chat, &dims, cfg.spectral_floor)?;
                    let dense = dense_from_spectrum(&spec, &dims, true);
                    Ok(MStep::Updated(nk, mean, dense, spec))
                } else {
                    let cand = loaded(chat.clone(), DEFAULT_DIAGONAL_LOADING)
                        .map_err(|e| Error::Numerical(format!("component {kk}: {e}")))?;
                    // Loading can push a near-singular optimum below the
                    // current covariance's expected complete-data
                    // log-likelihood. Take the largest step toward the
                    // loaded candidate that keeps the component Q-function
                    // non-decreasing (same backoff scheme as the Toeplitz
                    // spectral update), falling back to the old covariance.
                    let score = |c: &DMatrix<Complex64>| -> Result<f64> {
                        let chol = HermitianChol::new(c.clone())?;
                        let cinv = chol.inverse();
                        Ok(-chol.log_det() - crate::linalg::trace_inv_times(&cinv, &chat))
                    };
                    let q_old = score(&covs[kk])
                        .map_err(|e| Error::Numerical(format!("component {kk}: {e}")))?;
                    let mut cov = None;
                    for alpha in [1.0, 0.5, 0.25, 0.125] {
                        let c_alpha = if alpha == 1.0 {
                            cand.clone()
                        } else {
                            let mut c = covs[kk].clone();
                            c.zip_apply(&cand, |o, n| {
                                *o = *o * Complex64::new(1.0 - alpha, 0.0)
                                    + n * Complex64::new(alpha, 0.0)
                            });
                            c
                        };
                        if let Ok(q) = score(&c_alpha) {
                            if q >= q_old {
                                cov = Some(c_alpha);
                                break;
                            }
                        }
                    }
                    let cov = cov.unwrap_or_else(|| covs[kk].clone());
                    Ok(MStep::Updated(nk, mean, cov, Vec::new()))
                }
            })
            .collect();

        let mut masses = vec![0.0_f64; k];
        let mut reset = vec![false; k];
        for (kk, u) in updates.into_iter().enumerate() {
            match u? {
                MStep::Updated(nk, mean, cov, spec) => {
                    masses[kk] = nk;
                    means[kk] = mean;
                    covs[kk] = cov;
                    if toeplitz {
                        spectra[kk] = spec;
                    }
                }
                MStep::Skip => masses[kk] = 0.0,
                MStep::Collapsed(tr) => {
                    masses[kk] = 0.0;
                    reset[kk] = true;
                    report.events.push(format!(
                        "iter {iter}: reseeded collapsed component {kk} (trace {tr:.3e})"
                    ));
                }
            }
        }
        if reset.iter().any(|&r| r) {
            let argmin = e
                .sample_ld
                .iter()
                .enumerate()
                .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
                .map(|(i, _)| i)
                .unwrap_or(0);
            for kk in 0..k {
                if reset[kk] {
                    means[kk] = data[argmin].clone();
                    covs[kk] = init_cov.clone();
                    if toeplitz {
                        spectra[kk] = init_spec.clone();
                    }
                }
            }
        }
        let total: f64 = masses.iter().sum();
        for kk in 0..k {
            weights[kk] = if rescued[kk] || reset[kk] {
                1.0 / k as f64
            } else {
                masses[kk] / total.max(1e-300)
            };
        }
        let wsum: f64 = weights.iter().sum();
        for w in weights.iter_mut() {
            *w /= wsum;
        }
    }

    if !converged {
        let e = dense_e_step(&x, &weights, &means, &covs)?;
        report.log_likelihood.push(e.log_like);
    }
    report.converged = converged;

    let covariances: Vec<CovarianceModel> = if toeplitz {
        match dims {
            ModelDims::OneD(dim) => spectra
                .into_iter()
                .map(|spectrum| CovarianceModel::Toeplitz1D { spectrum, dim })
                .collect(),
            ModelDims::TwoD { n_c, n_t } => spectra
                .into_iter()
                .map(|spectrum| CovarianceModel::BlockToeplitz { spectrum, n_c, n_t })
                .collect(),
        }
    } else {
        covs.into_iter().map(CovarianceModel::Full).collect()
    };

    let model = GmmModel {
        weights,
        means,
        covariances,
        dims,
    };
    model.validate()?;
    Ok((model, report))
}

// --------------------------- diagonal-domain EM ----------------------------

type DiagFit = (
    Vec<f64>,
    Vec<DVector<Complex64>>,
    Vec<Vec<f64>>,
    FitReport,
);

/// Diagonal-covariance EM on the columns of `x`.
fn fit_diagonal_matrix(x: &DMatrix<Complex64>, cfg: &EmConfig) -> Result<DiagFit> {
    let k = cfg.n_components;
    let n = x.nrows();
    let s = x.ncols();
    let base = -(n as f64) * LN_PI;

    let data: Vec<DVector<Complex64>> = (0..s).map(|j| x.column(j).into_owned()).collect();
    let mut means = init_means(&data, cfg)?;

    // Global per-coordinate variance.
    let gmean = {
        let mut m = DVector::<Complex64>::zeros(n);
        for xi in &data {
            m += xi;
        }
        m / Complex64::new(s as f64, 0.0)
    };
    let mut gvar = vec![0.0_f64; n];
    for xi in &data {
        for (g, (a, b)) in gvar.iter_mut().zip(xi.iter().zip(gmean.iter())) {
            *g += (a - b).norm_sqr();
        }
    }
    let mean_gvar = gvar.iter().sum::<f64>() / (n as f64 * s as f64);
    let floor0 = cfg.spectral_floor * mean_gvar.max(1e-300);
    let init_var: Vec<f64> = gvar.iter().map(|&v| (v / s as f64).max(floor0)).collect();
    let collapse_floor = 1e-12 * mean_gvar.max(1e-300);

    let mut vars = vec![init_var.clone(); k];
    let mut weights = vec![1.0 / k as f64; k];

    let mut report = FitReport::default();
    let mut converged = false;

    let mut logj = vec![0.0_f64; k * s];
    let mut resp = vec![0.0_f64; k * s];

    for iter in 0..cfg.max_iters {
        // E-step
        let rows: Vec<Vec<f64>> = (0..k)
            .into_par_iter()
            .map(|kk| {
                let head = if weights[kk] > 0.0 {
                    weights[kk].ln()
                } else {
                    f64::NEG_INFINITY
                } + base
                    - diag_log_det(&vars[kk]);
                let mean = &means[kk];
                let var = &vars[kk];
                (0..s)
                    .map(|i| head - diag_quad(mean, var, &data[i]))
                    .collect()
            })
            .collect();
        for (kk, row) in rows.into_iter().enumerate() {
            logj[kk * s..(kk + 1) * s].copy_from_slice(&row);
        }

        let mut sample_ld = vec![0.0_f64; s];
        let mut ll = 0.0;
        let mut scratch = vec![0.0_f64; k];
        for i in 0..s {
            for kk in 0..k {
                scratch[kk] = logj[kk * s + i];
            }
            let lse = log_sum_exp(&scratch);
            sample_ld[i] = lse;
            ll += lse;
            for kk in 0..k {
                resp[kk * s + i] = (scratch[kk] - lse).exp();
            }
        }
        report.log_likelihood.push(ll);
        report.iterations = iter + 1;
        if convergence_reached(&report.log_likelihood, cfg.rel_tol) {
            converged = true;
            break;
        }

        // M-step with rescue.
        let mut masses = vec![0.0_f64; k];
        let mut rescued = vec![false; k];
        for kk in 0..k {
            let mass: f64 = resp[kk * s..(kk + 1) * s].iter().sum();
            masses[kk] = mass;
            if mass < 1e-10 {
                let argmin = sample_ld
                    .iter()
                    .enumerate()
                    .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
                    .map(|(i, _)| i)
                    .unwrap_or(0);
                means[kk] = data[argmin].clone();
                rescued[kk] = true;
                report
                    .events
                    .push(format!("iter {iter}: reseeded empty component {kk} (mass {mass:.3e})"));
            }
        }

        enum MStep {
            Skip,
            Collapsed(f64),
            Updated(DVector<Complex64>, Vec<f64>),
        }
        let updates: Vec<MStep> = (0..k)
            .into_par_iter()
            .map(|kk| {
                if rescued[kk] {
                    return MStep::Skip;
                }
                let r = &resp[kk * s..(kk + 1) * s];
                let nk = masses[kk];
                let mut mean = DVector::<Complex64>::zeros(n);
                for (i, xi) in data.iter().enumerate() {
                    mean += xi * Complex64::new(r[i], 0.0);
                }
                mean /= Complex64::new(nk, 0.0);
                let mut var = vec![0.0_f64; n];
                for (i, xi) in data.iter().enumerate() {
                    let ri = r[i];
                    for (vj, (a, b)) in var.iter_mut().zip(xi.iter().zip(mean.iter())) {
                        *vj += ri * (a - b).norm_sqr();
                    }
                }
                for v in var.iter_mut() {
                    *v /= nk;
                }
                let mv = var.iter().sum::<f64>() / n as f64;
                if !mv.is_finite() || mv <= collapse_floor {
                    return MStep::Collapsed(mv);
                }
                let floor = cfg.spectral_floor * mv.max(1e-300);
                for v in var.iter_mut() {
                    *v = v.max(floor);
                }
                MStep::Updated(mean, var)
            })
            .collect();
        let mut reset = vec![false; k];
        for (kk, u) in updates.into_iter().enumerate() {
            match u {
                MStep::Updated(mean, var) => {
                    means[kk] = mean;
                    vars[kk] = var;
                }
                MStep::Skip => {}
                MStep::Collapsed(mv) => {
                    reset[kk] = true;
                    masses[kk] = 0.0;
                    report.events.push(format!(
                        "iter {iter}: reseeded collapsed component {kk} (variance {mv:.3e})"
                    ));
                }
            }
        }
        if reset.iter().any(|&r| r) {
            let argmin = sample_ld
                .iter()
                .enumerate()
                .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
                .map(|(i, _)| i)
                .unwrap_or(0);
            for kk in 0..k {
                if reset[kk] {
                    means[kk] = data[argmin].clone();
                    vars[kk] = init_var.clone();
                }
            }
        }
        let total: f64 = masses.iter().sum();
        for kk in 0..k {
            weights[kk] = if rescued[kk] || reset[kk] {
                1.0 / k as f64
            } else {
                masses[kk] / total.max(1e-300)
            };
        }
        let wsum: f64 = weights.iter().sum();
        for w in weights.iter_mut() {
            *w /= wsum;
        }
    }

    if !converged {
        let mut ll = 0.0;
        let mut scratch = vec![0.0_f64; k];
        for i in 0..s {
            for kk in 0..k {
                let head = if weights[kk] > 0.0 {
                    weights[kk].ln()
                } else {
                    f64::NEG_INFINITY
                } + base
                    - diag_log_det(&vars[kk]);
                scratch[kk] = head - diag_quad(&means[kk], &vars[kk], &data[i]);
            }
            ll += log_sum_exp(&scratch);
        }
        report.log_likelihood.push(ll);
    }
    report.converged = converged;
    Ok((weights, means, vars, report))
}

fn fit_circulant(
    data: &[DVector<Complex64>],
    cfg: &EmConfig,
    dims: ModelDims,
) -> Result<(GmmModel, FitReport)> {
    let tr = transform_for(&dims);
    let n = dims.total();
    let s = data.len();
    // Transform every sample once; the DFT is unitary, so likelihoods in the
    // transformed domain equal likelihoods of the original data.
    let transformed: Vec<DVector<Complex64>> = data
        .par_iter()
        .map(|xi| {
            let tr = transform_for(&dims);
            let mut buf: Vec<Complex64> = xi.iter().copied().collect();
            tr.forward(&mut buf);
            DVector::from_vec(buf)
        })
        .collect();
    let mut xt = DMatrix::zeros(n, s);
    for (j, z) in transformed.iter().enumerate() {
        xt.set_column(j, z);
    }
    let (weights, means_t, vars, report) = fit_diagonal_matrix(&xt, cfg)?;

    let means: Vec<DVector<Complex64>> = means_t
        .iter()
        .map(|m| {
            let mut buf: Vec<Complex64> = m.iter().copied().collect();
            tr.inverse(&mut buf);
            DVector::from_vec(buf)
        })
        .collect();
    let covariances: Vec<CovarianceModel> = vars
        .into_iter()
        .map(|spectrum| match dims {
            ModelDims::OneD(dim) => CovarianceModel::Circulant1D { spectrum, dim },
            ModelDims::TwoD { n_c, n_t } => CovarianceModel::BlockCirculant { spectrum, n_c, n_t },
        })
        .collect();
    let model = GmmModel {
        weights,
        means,
        covariances,
        dims,
    };
    model.validate()?;
    Ok((model, report))
}

// ------------------------------ initialization -----------------------------

fn init_means(data: &[DVector<Complex64>], cfg: &EmConfig) -> Result<Vec<DVector<Complex64>>> {
    let k = cfg.n_components;
    match &cfg.init {
        EmInit::Centroids(c) => {
            if c.len() != k {
                return Err(Error::InvalidParameter(format!(
                    "{} centroids for {} components",
                    c.len(),
                    k
                )));
            }
            if c.iter().any(|v| v.len() != data[0].len()) {
                return Err(Error::ShapeMismatch("centroid dimension".into()));
            }
            Ok(c.clone())
        }
        EmInit::KmeansPlusPlus => {
            let n = data[0].len();
            let cap = (10 * k * n).max(k);
            let mut rng = stream_rng(cfg.rng_seed, KMEANS_STREAM);
            let sub: Vec<usize> = if data.len() <= cap {
                (0..data.len()).collect()
            } else {
                // Partial Fisher-Yates for a deterministic subsample without
                // replacement.
                let mut idx: Vec<usize> = (0..data.len()).collect();
                for i in 0..cap {
                    let j = rng.gen_range(i..idx.len());
                    idx.swap(i, j);
                }
                idx.truncate(cap);
                idx
            };
            Ok(kmeanspp(data, &sub, k, &mut rng))
        }
    }
}

/// Generator stream reserved for initialization draws.
const KMEANS_STREAM: u64 = 0x6b6d;

fn kmeanspp<R: Rng>(
    data: &[DVector<Complex64>],
    sub: &[usize],
    k: usize,
    rng: &mut R,
) -> Vec<DVector<Complex64>> {
    let m = sub.len();
    let first = sub[rng.gen_range(0..m)];
    let mut centers = vec![data[first].clone()];
    let mut d2: Vec<f64> = sub
        .iter()
        .map(|&i| (&data[i] - &centers[0]).norm_squared())
        .collect();
    while centers.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total <= 0.0 {
            // All remaining points coincide with a center; cycle through the
            // subsample deterministically.
            sub[centers.len() % m]
        } else {
            let mut u = rng.gen_range(0.0..total);
            let mut chosen = sub[m - 1];
            for (j, &i) in sub.iter().enumerate() {
                u -= d2[j];
                if u <= 0.0 {
                    chosen = i;
                    break;
                }
            }
            chosen
        };
        let c = data[next].clone();
        for (j, &i) in sub.iter().enumerate() {
            let dist = (&data[i] - &c).norm_squared();
            if dist < d2[j] {
                d2[j] = dist;
            }
        }
        centers.push(c);
    }
    centers
}

// ------------------------------- model files -------------------------------

const MODEL_MAGIC: &[u8; 4] = b"GMMF";
const MODEL_VERSION: u32 = 1;

fn cov_tag_code(c: &CovarianceModel) -> u32 {
    match c {
        CovarianceModel::Full(_) => 0,
        CovarianceModel::BlockToeplitz { .. } => 1,
        CovarianceModel::Toeplitz1D { .. } => 2,
        CovarianceModel::BlockCirculant { .. } => 3,
        CovarianceModel::Circulant1D { .. } => 4,
        CovarianceModel::Diagonal(_) => 5,
        CovarianceModel::Kronecker { .. } => 6,
    }
}

fn write_u32<W: Write>(w: &mut W, v: u32) -> Result<()> {
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

fn write_f64s<W: Write>(w: &mut W, v: &[f64]) -> Result<()> {
    for x in v {
        w.write_all(&x.to_le_bytes())?;
    }
    Ok(())
}

fn write_complexes<W: Write>(w: &mut W, v: &[Complex64]) -> Result<()> {
    for x in v {
        w.write_all(&x.re.to_le_bytes())?;
        w.write_all(&x.im.to_le_bytes())?;
    }
    Ok(())
}

fn write_cov<W: Write>(w: &mut W, c: &CovarianceModel) -> Result<()> {
    write_u32(w, cov_tag_code(c))?;
    match c {
        CovarianceModel::Full(m) => {
            write_u32(w, m.nrows() as u32)?;
            write_complexes(w, m.as_slice())?;
        }
        CovarianceModel::BlockToeplitz { spectrum, n_c, n_t } => {
            write_u32(w, *n_c as u32)?;
            write_u32(w, *n_t as u32)?;
            write_f64s(w, spectrum)?;
        }
        CovarianceModel::Toeplitz1D { spectrum, dim } => {
            write_u32(w, *dim as u32)?;
            write_f64s(w, spectrum)?;
        }
        CovarianceModel::BlockCirculant { spectrum, n_c, n_t } => {
            write_u32(w, *n_c as u32)?;
            write_u32(w, *n_t as u32)?;
            write_f64s(w, spectrum)?;
        }
        CovarianceModel::Circulant1D { spectrum, dim } => {
            write_u32(w, *dim as u32)?;
            write_f64s(w, spectrum)?;
        }
        CovarianceModel::Diagonal(d) => {
            write_u32(w, d.len() as u32)?;
            write_f64s(w, d)?;
        }
        CovarianceModel::Kronecker { time, freq } => {
            write_cov(w, time)?;
            write_cov(w, freq)?;
        }
    }
    Ok(())
}

struct ModelReader<R: Read> {
    r: R,
}

impl<R: Read> ModelReader<R> {
    fn u32(&mut self) -> Result<u32> {
        let mut b = [0u8; 4];
        self.r.read_exact(&mut b)?;
        Ok(u32::from_le_bytes(b))
    }

    fn f64(&mut self) -> Result<f64> {
        let mut b = [0u8; 8];
        self.r.read_exact(&mut b)?;
        Ok(f64::from_le_bytes(b))
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        (0..n).map(|_| self.f64()).collect()
    }

    fn complexes(&mut self, n: usize) -> Result<Vec<Complex64>> {
        (0..n)
            .map(|_| {
                let re = self.f64()?;
                let im = self.f64()?;
                Ok(Complex64::new(re, im))
            })
            .collect()
    }

    fn cov(&mut self) -> Result<CovarianceModel> {
        let tag = self.u32()?;
        Ok(match tag {
            0 => {
                let n = self.u32()? as usize;
                let v = self.complexes(n * n)?;
                CovarianceModel::Full(DMatrix::from_column_slice(n, n, &v))
            }
            1 => {
                let n_c = self.u32()? as usize;
                let n_t = self.u32()? as usize;
                CovarianceModel::BlockToeplitz {
                    spectrum: self.f64s(4 * n_c * n_t)?,
                    n_c,
                    n_t,
                }
            }
            2 => {
                let dim = self.u32()? as usize;
                CovarianceModel::Toeplitz1D {
                    spectrum: self.f64s(2 * dim)?,
                    dim,
                }
            }
            3 => {
                let n_c = self.u32()? as usize;
                let n_t = self.u32()? as usize;
                CovarianceModel::BlockCirculant {
                    spectrum: self.f64s(n_c * n_t)?,
                    n_c,
                    n_t,
                }
            }
            4 => {
                let dim = self.u32()? as usize;
                CovarianceModel::Circulant1D {
                    spectrum: self.f64s(dim)?,
                    dim,
                }
            }
            5 => {
                let n = self.u32()? as usize;
                CovarianceModel::Diagonal(self.f64s(n)?)
            }
            6 => {
                let time = Box::new(self.cov()?);
                let freq = Box::new(self.cov()?);
                CovarianceModel::Kronecker { time, freq }
            }
            other => return Err(Error::Format(format!("unknown covariance tag {other}"))),
        })
    }
}

/// Persist a model: header (magic, version, constraint tag, K, dims),
/// weights, means, covariance payloads, all little-endian.
pub fn save_model<P: AsRef<Path>>(path: P, model: &GmmModel) -> Result<()> {
    model.validate()?;
    let file = std::fs::File::create(path)?;
    let mut w = std::io::BufWriter::new(file);
    w.write_all(MODEL_MAGIC)?;
    write_u32(&mut w, MODEL_VERSION)?;
    write_u32(&mut w, cov_tag_code(&model.covariances[0]))?;
    write_u32(&mut w, model.n_components() as u32)?;
    match model.dims {
        ModelDims::OneD(n) => {
            write_u32(&mut w, 0)?;
            write_u32(&mut w, n as u32)?;
            write_u32(&mut w, 0)?;
        }
        ModelDims::TwoD { n_c, n_t } => {
            write_u32(&mut w, 1)?;
            write_u32(&mut w, n_c as u32)?;
            write_u32(&mut w, n_t as u32)?;
        }
    }
    write_f64s(&mut w, &model.weights)?;
    for m in &model.means {
        write_complexes(&mut w, m.as_slice())?;
    }
    for c in &model.covariances {
        write_cov(&mut w, c)?;
    }
    w.flush()?;
    Ok(())
}

/// Load a model written by [`save_model`].
pub fn load_model<P: AsRef<Path>>(path: P) -> Result<GmmModel> {
    let file = std::fs::File::open(path)?;
    let mut magic = [0u8; 4];
    let mut br = std::io::BufReader::new(file);
    br.read_exact(&mut magic)?;
    if &magic != MODEL_MAGIC {
        return Err(Error::Format("bad model magic".into()));
    }
    let mut r = ModelReader { r: br };
    let version = r.u32()?;
    if version != MODEL_VERSION {
        return Err(Error::Format(format!("unsupported model version {version}")));
    }
    let head_tag = r.u32()?;
    let k = r.u32()? as usize;
    let dims = match r.u32()? {
        0 => {
            let n = r.u32()? as usize;
            let _ = r.u32()?;
            ModelDims::OneD(n)
        }
        1 => {
            let n_c = r.u32()? as usize;
            let n_t = r.u32()? as usize;
            ModelDims::TwoD { n_c, n_t }
        }
        other => return Err(Error::Format(format!("unknown dims kind {other}"))),
    };
    let n = dims.total();
    let weights = r.f64s(k)?;
    let mut means = Vec::with_capacity(k);
    for _ in 0..k {
        means.push(DVector::from_vec(r.complexes(n)?));
    }
    let mut covariances = Vec::with_capacity(k);
    for _ in 0..k {
        covariances.push(r.cov()?);
    }
    if covariances
        .first()
        .map(|c| cov_tag_code(c) != head_tag)
        .unwrap_or(true)
    {
        return Err(Error::Format("covariance tag disagrees with header".into()));
    }
    let model = GmmModel {
        weights,
        means,
        covariances,
        dims,
    };
    model
        .validate()
        .map_err(|e| Error::Format(format!("inconsistent model payload: {e}")))?;
    Ok(model)
}
