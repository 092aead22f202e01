//! Channel estimators: GMM conditional-mean estimation with per-SNR
//! precomputed filters, Kronecker-separable model construction, cascaded
//! 2x1D estimation, and genie PDP/DPS LMMSE baselines.
//!
//! The mixture estimate is the posterior-weighted sum of per-component LMMSE
//! terms, `sum_k p(k|y) (mu_k + C_k A^H C_yk^-1 (y - A mu_k))`, with the
//! posterior computed from pilot-domain Gaussian likelihoods. Components are
//! sorted by posterior weight and only the smallest prefix reaching the
//! cumulative threshold `rho` is evaluated; retained weights are
//! renormalized.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::channel_sim::{
    genie_dps, genie_pdp, pdp_to_cov, ChannelGrid, Observation, PilotPattern,
};
use crate::channel_sim::dps_to_cov;
use crate::error::{Error, Result};
use crate::gmm_em::{log_sum_exp, softmax_from_log, GmmModel};
use crate::linalg::hermitianize;
use crate::linalg::HermitianChol;
use crate::structured_cov::{
    assemble_observation_cov, cross_covariance, pilot_block, CovarianceModel, ModelDims,
    ObservationCov,
};

const LN_PI: f64 = 1.144729885849400174143427351353058711647_f64;

/// Default cumulative-responsibility truncation threshold.
pub const DEFAULT_RHO: f64 = 0.99;

/// One channel estimate plus how much of the mixture was evaluated.
#[derive(Clone, Debug)]
pub struct EstimateReport {
    pub h_hat: DVector<Complex64>,
    pub components_used: usize,
    /// Posterior weights of all components, before truncation.
    pub posterior: Vec<f64>,
}

/// Per-SNR precomputed mixture estimator for a fixed pilot pattern.
pub struct FittedEstimator {
    pattern: PilotPattern,
    sigma2: f64,
    rho: f64,
    log_weights: Vec<f64>,
    means: Vec<DVector<Complex64>>,
    pilot_means: Vec<DVector<Complex64>>,
    /// `T_k = C_k A^H`.
    cross: Vec<DMatrix<Complex64>>,
    obs_cov: Vec<ObservationCov>,
    /// `tr(C_k - T_k C_yk^-1 T_k^H) / N`: per-component LMMSE error level.
    err_trace: Vec<f64>,
}

/// `tr(A B)` for `A: n x m`, `B: m x n` without forming the product.
fn trace_of_product(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> Complex64 {
    debug_assert_eq!(a.ncols(), b.nrows());
    debug_assert_eq!(a.nrows(), b.ncols());
    let mut acc = Complex64::default();
    for j in 0..a.ncols() {
        let col = a.column(j);
        let row = b.row(j);
        for i in 0..a.nrows() {
            acc += col[i] * row[i];
        }
    }
    acc
}

/// Assemble the per-SNR filters for a fitted mixture.
pub fn precompute(
    model: &GmmModel,
    pattern: &PilotPattern,
    sigma2: f64,
) -> Result<FittedEstimator> {
    model.validate()?;
    let n = model.dim();
    if n != pattern.n_c() * pattern.n_t() {
        return Err(Error::ShapeMismatch(format!(
            "model dim {} vs pattern grid {}x{}",
            n,
            pattern.n_c(),
            pattern.n_t()
        )));
    }
    let k = model.n_components();
    let parts: Vec<Result<(DMatrix<Complex64>, ObservationCov, f64)>> = (0..k)
        .into_par_iter()
        .map(|kk| {
            let cov = &model.covariances[kk];
            let cross = cross_covariance(cov, pattern)?;
            let oc = assemble_observation_cov(cov, pattern, sigma2)
                .map_err(|e| Error::Numerical(format!("component {kk}: {e}")))?;
            // tr(E_k) = tr(C_k) - tr(T C_y^-1 T^H)
            let solved = oc.solve_mat(&cross.adjoint());
            let reduction = trace_of_product(&cross, &solved).re;
            let err = (cov.trace() - reduction) / n as f64;
            Ok((cross, oc, err))
        })
        .collect();

    let mut cross = Vec::with_capacity(k);
    let mut obs_cov = Vec::with_capacity(k);
    let mut err_trace = Vec::with_capacity(k);
    for p in parts {
        let (t, oc, e) = p?;
        cross.push(t);
        obs_cov.push(oc);
        err_trace.push(e);
    }
    let pilot_means: Vec<DVector<Complex64>> = model
        .means
        .iter()
        .map(|m| pattern.gather(m.as_slice()))
        .collect();
    Ok(FittedEstimator {
        pattern: pattern.clone(),
        sigma2,
        rho: DEFAULT_RHO,
        log_weights: model
            .weights
            .iter()
            .map(|&w| if w > 0.0 { w.ln() } else { f64::NEG_INFINITY })
            .collect(),
        means: model.means.clone(),
        pilot_means,
        cross,
        obs_cov,
        err_trace,
    })
}

/// Sorted truncation: minimal prefix of descending posterior weights whose
/// cumulative sum reaches `rho` (ties keep the lower component index).
fn truncate_posterior(post: &[f64], rho: f64) -> Vec<(usize, f64)> {
    let mut order: Vec<usize> = (0..post.len()).collect();
    order.sort_by(|&a, &b| {
        post[b]
            .partial_cmp(&post[a])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    let mut retained = Vec::new();
    let mut cum = 0.0;
    for idx in order {
        retained.push((idx, post[idx]));
        cum += post[idx];
        if cum >= rho {
            break;
        }
    }
    let total: f64 = retained.iter().map(|(_, w)| w).sum();
    if total > 0.0 {
        for (_, w) in retained.iter_mut() {
            *w /= total;
        }
    }
    retained
}

impl FittedEstimator {
    /// Replace the truncation threshold (`0 < rho <= 1`).
    pub fn with_rho(mut self, rho: f64) -> Result<Self> {
        if !(rho > 0.0 && rho <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "rho must lie in (0, 1], got {rho}"
            )));
        }
        self.rho = rho;
        Ok(self)
    }

    pub fn n_components(&self) -> usize {
        self.log_weights.len()
    }

    pub fn pattern(&self) -> &PilotPattern {
        &self.pattern
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    fn posterior_log(&self, y: &DVector<Complex64>) -> Vec<f64> {
        let np = y.len();
        let base = -(np as f64) * LN_PI;
        (0..self.n_components())
            .map(|k| {
                let d = y - &self.pilot_means[k];
                self.log_weights[k] + base - self.obs_cov[k].log_det()
                    - self.obs_cov[k].quad_form(&d)
            })
            .collect()
    }

    /// Posterior component probabilities given the pilot observation.
    pub fn posterior(&self, y: &DVector<Complex64>) -> Result<Vec<f64>> {
        if y.len() != self.pattern.n_pilots() {
            return Err(Error::ShapeMismatch("observation length".into()));
        }
        Ok(softmax_from_log(&self.posterior_log(y)))
    }

    /// Pilot-domain mixture log-density of the observation.
    pub fn observation_log_density(&self, y: &DVector<Complex64>) -> Result<f64> {
        if y.len() != self.pattern.n_pilots() {
            return Err(Error::ShapeMismatch("observation length".into()));
        }
        Ok(log_sum_exp(&self.posterior_log(y)))
    }

    /// Conditional-mean estimate with responsibility truncation.
    pub fn estimate(&self, y: &DVector<Complex64>) -> Result<EstimateReport> {
        let posterior = self.posterior(y)?;
        let retained = truncate_posterior(&posterior, self.rho);
        let n = self.means[0].len();
        let mut h = DVector::<Complex64>::zeros(n);
        for &(k, w) in &retained {
            if w == 0.0 {
                continue;
            }
            let d = y - &self.pilot_means[k];
            let u = self.obs_cov[k].solve(&d);
            let mut hk = &self.cross[k] * &u;
            hk += &self.means[k];
            h += hk * Complex64::new(w, 0.0);
        }
        Ok(EstimateReport {
            h_hat: h,
            components_used: retained.len(),
            posterior,
        })
    }

    /// Number of components needed to reach the cumulative threshold,
    /// without evaluating the LMMSE terms.
    pub fn components_to_rho(&self, y: &DVector<Complex64>) -> Result<usize> {
        let posterior = self.posterior(y)?;
        Ok(truncate_posterior(&posterior, self.rho).len())
    }

    /// Posterior-weighted per-coordinate error level of the retained
    /// components: the effective noise power of this estimate when used as
    /// a downstream observation.
    pub fn weighted_error_trace(&self, y: &DVector<Complex64>) -> Result<f64> {
        let posterior = self.posterior(y)?;
        let retained = truncate_posterior(&posterior, self.rho);
        Ok(retained
            .iter()
            .map(|&(k, w)| w * self.err_trace[k])
            .sum())
    }

    /// Estimate together with the per-sample effective error level.
    fn estimate_with_err(&self, y: &DVector<Complex64>) -> Result<(EstimateReport, f64)> {
        let posterior = self.posterior(y)?;
        let retained = truncate_posterior(&posterior, self.rho);
        let n = self.means[0].len();
        let mut h = DVector::<Complex64>::zeros(n);
        let mut err = 0.0;
        for &(k, w) in &retained {
            if w == 0.0 {
                continue;
            }
            err += w * self.err_trace[k];
            let d = y - &self.pilot_means[k];
            let u = self.obs_cov[k].solve(&d);
            let mut hk = &self.cross[k] * &u;
            hk += &self.means[k];
            h += hk * Complex64::new(w, 0.0);
        }
        Ok((
            EstimateReport {
                h_hat: h,
                components_used: retained.len(),
                posterior,
            },
            err,
        ))
    }
}

/// Combine separately fitted time/frequency mixtures into one
/// Kronecker-covariance mixture with `K_t * K_c` components. Component
/// `(i, j)` gets covariance `C_t_i (x) C_f_j` and mean
/// `kron(mu_t_i, mu_f_j)`; the mixing weights come from one E-step over the
/// vectorized dataset (no M-step), starting from the product weights.
pub fn build_kron_gmm(
    gmm_time: &GmmModel,
    gmm_freq: &GmmModel,
    dataset: &[DVector<Complex64>],
    max_components: usize,
) -> Result<GmmModel> {
    gmm_time.validate()?;
    gmm_freq.validate()?;
    let (n_t, n_c) = match (gmm_time.dims, gmm_freq.dims) {
        (ModelDims::OneD(nt), ModelDims::OneD(nc)) => (nt, nc),
        _ => {
            return Err(Error::InvalidParameter(
                "kron construction needs one-dimensional factor models".into(),
            ))
        }
    };
    let k_t = gmm_time.n_components();
    let k_c = gmm_freq.n_components();
    let k = k_t * k_c;
    if k > max_components {
        return Err(Error::Capacity {
            what: "kron mixture components",
            limit: max_components,
            actual: k,
        });
    }
    if dataset.is_empty() {
        return Err(Error::DegenerateData("empty dataset for kron E-step".into()));
    }
    let n = n_t * n_c;
    if dataset.iter().any(|x| x.len() != n) {
        return Err(Error::ShapeMismatch("kron dataset dimension".into()));
    }

    let mut weights = Vec::with_capacity(k);
    let mut means = Vec::with_capacity(k);
    let mut covariances = Vec::with_capacity(k);
    for i in 0..k_t {
        for j in 0..k_c {
            weights.push(gmm_time.weights[i] * gmm_freq.weights[j]);
            let mut mean = DVector::<Complex64>::zeros(n);
            for t in 0..n_t {
                for c in 0..n_c {
                    mean[t * n_c + c] = gmm_time.means[i][t] * gmm_freq.means[j][c];
                }
            }
            means.push(mean);
            covariances.push(CovarianceModel::Kronecker {
                time: Box::new(gmm_time.covariances[i].clone()),
                freq: Box::new(gmm_freq.covariances[j].clone()),
            });
        }
    }
    let mut model = GmmModel {
        weights,
        means,
        covariances,
        dims: ModelDims::TwoD { n_c, n_t },
    };
    model.validate()?;

    // Single E-step: average responsibilities become the mixing weights.
    let density = model.density()?;
    let resp_sums: Vec<Vec<f64>> = dataset
        .par_chunks(4096)
        .map(|chunk| {
            let mut acc = vec![0.0_f64; k];
            for x in chunk {
                let r = density.responsibilities(x).expect("dims checked above");
                for (a, v) in acc.iter_mut().zip(r.iter()) {
                    *a += v;
                }
            }
            acc
        })
        .collect();
    let mut acc = vec![0.0_f64; k];
    for part in resp_sums {
        for (a, v) in acc.iter_mut().zip(part.iter()) {
            *a += v;
        }
    }
    let s = dataset.len() as f64;
    for (w, a) in model.weights.iter_mut().zip(acc.iter()) {
        *w = a / s;
    }
    let total: f64 = model.weights.iter().sum();
    for w in model.weights.iter_mut() {
        *w /= total;
    }
    Ok(model)
}

/// Estimation order of the cascaded estimator.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CascadeOrder {
    FreqFirst,
    TimeFirst,
}

/// How the second-stage noise level is chosen.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sigma2EffMode {
    /// Posterior-weighted average of the first stage's LMMSE error level,
    /// averaged over the first-stage estimates feeding stage two.
    PosteriorAvg,
    /// Use the raw observation noise variance unchanged.
    RawSigma,
}

/// Second-stage evaluator; its observation covariance depends on the
/// per-sample effective noise, so only the noise-free blocks are
/// precomputed.
struct CascadeStage {
    log_weights: Vec<f64>,
    means: Vec<DVector<Complex64>>,
    pilot_means: Vec<DVector<Complex64>>,
    cross: Vec<DMatrix<Complex64>>,
    blocks: Vec<DMatrix<Complex64>>,
    rho: f64,
}

impl CascadeStage {
    fn new(model: &GmmModel, axis_pattern: &PilotPattern, rho: f64) -> Result<Self> {
        let mut cross = Vec::with_capacity(model.n_components());
        let mut blocks = Vec::with_capacity(model.n_components());
        for cov in &model.covariances {
            cross.push(cross_covariance(cov, axis_pattern)?);
            blocks.push(pilot_block(cov, axis_pattern)?);
        }
        Ok(CascadeStage {
            log_weights: model
                .weights
                .iter()
                .map(|&w| if w > 0.0 { w.ln() } else { f64::NEG_INFINITY })
                .collect(),
            means: model.means.clone(),
            pilot_means: model
                .means
                .iter()
                .map(|m| axis_pattern.gather(m.as_slice()))
                .collect(),
            cross,
            blocks,
            rho,
        })
    }

    fn estimate(&self, z: &DVector<Complex64>, sigma2_eff: f64) -> Result<(DVector<Complex64>, usize)> {
        let k = self.log_weights.len();
        let np = z.len();
        let base = -(np as f64) * LN_PI;
        let mut chols = Vec::with_capacity(k);
        let mut logj = Vec::with_capacity(k);
        for kk in 0..k {
            let mut cy = self.blocks[kk].clone();
            for i in 0..np {
                cy[(i, i)] += Complex64::new(sigma2_eff, 0.0);
            }
            let chol = HermitianChol::new(cy)
                .map_err(|e| Error::Numerical(format!("cascade component {kk}: {e}")))?;
            let d = z - &self.pilot_means[kk];
            logj.push(self.log_weights[kk] + base - chol.log_det() - chol.quad_form(&d));
            chols.push(chol);
        }
        let posterior = softmax_from_log(&logj);
        let retained = truncate_posterior(&posterior, self.rho);
        let n = self.means[0].len();
        let mut h = DVector::<Complex64>::zeros(n);
        for &(kk, w) in &retained {
            if w == 0.0 {
                continue;
            }
            let d = z - &self.pilot_means[kk];
            let u = chols[kk].solve_vec(&d);
            let mut hk = &self.cross[kk] * &u;
            hk += &self.means[kk];
            h += hk * Complex64::new(w, 0.0);
        }
        Ok((h, retained.len()))
    }
}

/// Cascaded 2x1D mixture estimator with per-SNR precomputation of the first
/// stage.
pub struct CascadeEstimator {
    pattern: PilotPattern,
    order: CascadeOrder,
    mode: Sigma2EffMode,
    sigma2: f64,
    stage1: FittedEstimator,
    stage2: CascadeStage,
}

/// Cascade output: the assembled grid plus per-stage mean component counts
/// (their sum is the cascade's total mixture workload per sample).
#[derive(Clone, Debug)]
pub struct CascadeReport {
    pub grid: ChannelGrid,
    pub stage1_mean_components: f64,
    pub stage2_mean_components: f64,
    pub sigma2_eff: f64,
}

impl CascadeEstimator {
    pub fn new(
        gmm_time: &GmmModel,
        gmm_freq: &GmmModel,
        pattern: &PilotPattern,
        sigma2: f64,
        order: CascadeOrder,
        mode: Sigma2EffMode,
        rho: f64,
    ) -> Result<Self> {
        let (n_t, n_c) = match (gmm_time.dims, gmm_freq.dims) {
            (ModelDims::OneD(nt), ModelDims::OneD(nc)) => (nt, nc),
            _ => {
                return Err(Error::InvalidParameter(
                    "cascade needs one-dimensional factor models".into(),
                ))
            }
        };
        if n_c != pattern.n_c() || n_t != pattern.n_t() {
            return Err(Error::ShapeMismatch(format!(
                "factor dims ({n_c}, {n_t}) vs pattern grid ({}, {})",
                pattern.n_c(),
                pattern.n_t()
            )));
        }
        let freq_pattern = PilotPattern::new(n_c, 1, pattern.carriers().to_vec(), vec![0])?;
        let time_pattern = PilotPattern::new(n_t, 1, pattern.symbols().to_vec(), vec![0])?;
        let (stage1, stage2) = match order {
            CascadeOrder::FreqFirst => (
                precompute(gmm_freq, &freq_pattern, sigma2)?.with_rho(rho)?,
                CascadeStage::new(gmm_time, &time_pattern, rho)?,
            ),
            CascadeOrder::TimeFirst => (
                precompute(gmm_time, &time_pattern, sigma2)?.with_rho(rho)?,
                CascadeStage::new(gmm_freq, &freq_pattern, rho)?,
            ),
        };
        Ok(CascadeEstimator {
            pattern: pattern.clone(),
            order,
            mode,
            sigma2,
            stage1,
            stage2,
        })
    }

    pub fn estimate(&self, y: &DVector<Complex64>) -> Result<CascadeReport> {
        let np = self.pattern.n_pilots();
        if y.len() != np {
            return Err(Error::ShapeMismatch("observation length".into()));
        }
        let n_c = self.pattern.n_c();
        let n_t = self.pattern.n_t();
        let n_pc = self.pattern.n_pc();
        let n_pt = self.pattern.n_pt();

        match self.order {
            CascadeOrder::FreqFirst => {
                // Stage 1: one frequency-axis estimate per pilot symbol.
                let mut columns = Vec::with_capacity(n_pt);
                let mut count1 = 0.0;
                let mut err_acc = 0.0;
                for i in 0..n_pt {
                    let z = DVector::from_column_slice(&y.as_slice()[i * n_pc..(i + 1) * n_pc]);
                    let (rep, err) = self.stage1.estimate_with_err(&z)?;
                    count1 += rep.components_used as f64;
                    err_acc += err;
                    columns.push(rep.h_hat);
                }
                let sigma2_eff = match self.mode {
                    Sigma2EffMode::PosteriorAvg => (err_acc / n_pt as f64).max(1e-300),
                    Sigma2EffMode::RawSigma => self.sigma2,
                };
                // Stage 2: one time-axis estimate per carrier, fed by the
                // stage-1 values at the pilot symbols.
                let mut grid = ChannelGrid::zeros(n_c, n_t);
                let mut count2 = 0.0;
                for c in 0..n_c {
                    let z = DVector::from_fn(n_pt, |i, _| columns[i][c]);
                    let (row, cnt) = self.stage2.estimate(&z, sigma2_eff)?;
                    count2 += cnt as f64;
                    for t in 0..n_t {
                        *grid.entry_mut(c, t) = row[t];
                    }
                }
                Ok(CascadeReport {
                    grid,
                    stage1_mean_components: count1 / n_pt as f64,
                    stage2_mean_components: count2 / n_c as f64,
                    sigma2_eff,
                })
            }
            CascadeOrder::TimeFirst => {
                // Stage 1: one time-axis estimate per pilot carrier.
                let mut rows = Vec::with_capacity(n_pc);
                let mut count1 = 0.0;
                let mut err_acc = 0.0;
                for j in 0..n_pc {
                    let z = DVector::from_fn(n_pt, |i, _| y[i * n_pc + j]);
                    let (rep, err) = self.stage1.estimate_with_err(&z)?;
                    count1 += rep.components_used as f64;
                    err_acc += err;
                    rows.push(rep.h_hat);
                }
                let sigma2_eff = match self.mode {
                    Sigma2EffMode::PosteriorAvg => (err_acc / n_pc as f64).max(1e-300),
                    Sigma2EffMode::RawSigma => self.sigma2,
                };
                // Stage 2: one frequency-axis estimate per time symbol.
                let mut grid = ChannelGrid::zeros(n_c, n_t);
                let mut count2 = 0.0;
                for t in 0..n_t {
                    let z = DVector::from_fn(n_pc, |j, _| rows[j][t]);
                    let (col, cnt) = self.stage2.estimate(&z, sigma2_eff)?;
                    count2 += cnt as f64;
                    for c in 0..n_c {
                        *grid.entry_mut(c, t) = col[c];
                    }
                }
                Ok(CascadeReport {
                    grid,
                    stage1_mean_components: count1 / n_pc as f64,
                    stage2_mean_components: count2 / n_t as f64,
                    sigma2_eff,
                })
            }
        }
    }
}

/// One-shot cascaded estimation (frequency first by default elsewhere; the
/// order is a parameter since the two orders are both valid).
pub fn estimate_2x1d(
    gmm_freq: &GmmModel,
    gmm_time: &GmmModel,
    obs: &Observation,
    pattern: &PilotPattern,
    order: CascadeOrder,
) -> Result<CascadeReport> {
    let est = CascadeEstimator::new(
        gmm_time,
        gmm_freq,
        pattern,
        obs.noise_variance,
        order,
        Sigma2EffMode::PosteriorAvg,
        DEFAULT_RHO,
    )?;
    est.estimate(&obs.y)
}

fn lmmse_1d(
    cov: &CovarianceModel,
    axis_pattern: &PilotPattern,
    z: &DVector<Complex64>,
    sigma2: f64,
) -> Result<(DVector<Complex64>, f64)> {
    let t = cross_covariance(cov, axis_pattern)?;
    let oc = assemble_observation_cov(cov, axis_pattern, sigma2)?;
    let est = &t * &oc.solve(z);
    let solved = oc.solve_mat(&t.adjoint());
    let err = (cov.trace() - trace_of_product(&t, &solved).re) / cov.dim() as f64;
    Ok((est, err))
}

/// Genie-aided cascaded estimator: instantaneous PDP covariances per pilot
/// symbol in the frequency stage, instantaneous Doppler-spectrum covariances
/// per carrier in the time stage. Needs the true channel, so nothing can be
/// precomputed.
pub fn estimate_pdp_dps_2x1d(
    h_true: &ChannelGrid,
    obs: &Observation,
    pattern: &PilotPattern,
) -> Result<ChannelGrid> {
    if h_true.n_c() != pattern.n_c() || h_true.n_t() != pattern.n_t() {
        return Err(Error::ShapeMismatch("true channel vs pattern".into()));
    }
    let n_c = pattern.n_c();
    let n_t = pattern.n_t();
    let n_pc = pattern.n_pc();
    let n_pt = pattern.n_pt();
    if obs.y.len() != pattern.n_pilots() {
        return Err(Error::ShapeMismatch("observation length".into()));
    }
    let freq_pattern = PilotPattern::new(n_c, 1, pattern.carriers().to_vec(), vec![0])?;
    let time_pattern = PilotPattern::new(n_t, 1, pattern.symbols().to_vec(), vec![0])?;

    let mut columns = Vec::with_capacity(n_pt);
    let mut err_acc = 0.0;
    for (i, &sym) in pattern.symbols().iter().enumerate() {
        let p = genie_pdp(h_true, sym)?;
        let cov = pdp_to_cov(&p)?;
        let z = DVector::from_column_slice(&obs.y.as_slice()[i * n_pc..(i + 1) * n_pc]);
        let (col, err) = lmmse_1d(&cov, &freq_pattern, &z, obs.noise_variance)?;
        err_acc += err;
        columns.push(col);
    }
    let sigma2_eff = (err_acc / n_pt as f64).max(1e-300);

    let mut grid = ChannelGrid::zeros(n_c, n_t);
    for c in 0..n_c {
        let d = genie_dps(h_true, c)?;
        let cov = dps_to_cov(&d)?;
        let z = DVector::from_fn(n_pt, |i, _| columns[i][c]);
        let (row, _) = lmmse_1d(&cov, &time_pattern, &z, sigma2_eff)?;
        for t in 0..n_t {
            *grid.entry_mut(c, t) = row[t];
        }
    }
    Ok(grid)
}

/// Genie-aided 2D Kronecker estimator: PDP averaged over all time symbols,
/// Doppler spectrum averaged over all carriers, one joint LMMSE over the
/// full pilot set.
pub fn estimate_pdp_dps_kron(
    h_true: &ChannelGrid,
    obs: &Observation,
    pattern: &PilotPattern,
) -> Result<ChannelGrid> {
    if h_true.n_c() != pattern.n_c() || h_true.n_t() != pattern.n_t() {
        return Err(Error::ShapeMismatch("true channel vs pattern".into()));
    }
    let n_c = pattern.n_c();
    let n_t = pattern.n_t();
    let mut p_mean = vec![0.0_f64; n_c];
    for i in 0..n_t {
        let p = genie_pdp(h_true, i)?;
        for (a, v) in p_mean.iter_mut().zip(p.iter()) {
            *a += v;
        }
    }
    p_mean.iter_mut().for_each(|v| *v /= n_t as f64);
    let mut d_mean = vec![0.0_f64; n_t];
    for k in 0..n_c {
        let d = genie_dps(h_true, k)?;
        for (a, v) in d_mean.iter_mut().zip(d.iter()) {
            *a += v;
        }
    }
    d_mean.iter_mut().for_each(|v| *v /= n_c as f64);

    let cov = CovarianceModel::Kronecker {
        time: Box::new(dps_to_cov(&d_mean)?),
        freq: Box::new(pdp_to_cov(&p_mean)?),
    };
    let t = cross_covariance(&cov, pattern)?;
    let oc = assemble_observation_cov(&cov, pattern, obs.noise_variance)?;
    let h = &t * &oc.solve(&obs.y);
    ChannelGrid::from_vec_slice(n_c, n_t, h.as_slice())
}

/// Per-sample squared error normalized by the grid size.
pub fn normalized_sq_error(truth: &ChannelGrid, estimate: &ChannelGrid) -> Result<f64> {
    if truth.n_c() != estimate.n_c() || truth.n_t() != estimate.n_t() {
        return Err(Error::ShapeMismatch("truth vs estimate grid".into()));
    }
    let n = truth.n_c() * truth.n_t();
    let e: f64 = truth
        .vec_slice()
        .iter()
        .zip(estimate.vec_slice().iter())
        .map(|(a, b)| (a - b).norm_sqr())
        .sum();
    Ok(e / n as f64)
}

/// `mean_s ||h_s - hhat_s||^2 / (N_c N_t)`.
pub fn normalized_mse(truth: &[ChannelGrid], estimates: &[ChannelGrid]) -> Result<f64> {
    if truth.len() != estimates.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} truth grids vs {} estimates",
            truth.len(),
            estimates.len()
        )));
    }
    if truth.is_empty() {
        return Err(Error::DegenerateData("empty evaluation set".into()));
    }
    let mut acc = 0.0;
    for (t, e) in truth.iter().zip(estimates.iter()) {
        acc += normalized_sq_error(t, e)?;
    }
    Ok(acc / truth.len() as f64)
}

/// Dense reference mixture estimator used to cross-check the structured
/// paths at small dimensions: explicit selection matrix, dense inverses, no
/// truncation shortcuts beyond `rho`.
pub fn dense_reference_estimate(
    model: &GmmModel,
    pattern: &PilotPattern,
    sigma2: f64,
    rho: f64,
    y: &DVector<Complex64>,
) -> Result<DVector<Complex64>> {
    let n = model.dim();
    let a = pattern.dense_selection();
    let np = pattern.n_pilots();
    let ac = DMatrix::from_fn(np, n, |i, j| Complex64::new(a[(i, j)], 0.0));
    let k = model.n_components();
    let mut logj = Vec::with_capacity(k);
    let mut terms = Vec::with_capacity(k);
    for kk in 0..k {
        let c = model.covariances[kk].to_dense()?;
        let mut cy = &ac * &c * ac.adjoint();
        for i in 0..np {
            cy[(i, i)] += Complex64::new(sigma2, 0.0);
        }
        hermitianize(&mut cy);
        let chol = HermitianChol::new(cy)?;
        let amu = &ac * &model.means[kk];
        let d = y - &amu;
        let lw = if model.weights[kk] > 0.0 {
            model.weights[kk].ln()
        } else {
            f64::NEG_INFINITY
        };
        logj.push(lw - (np as f64) * LN_PI - chol.log_det() - chol.quad_form(&d));
        let w_filter = &c * ac.adjoint();
        let est = &model.means[kk] + &w_filter * chol.solve_vec(&d);
        terms.push(est);
    }
    let posterior = softmax_from_log(&logj);
    let retained = truncate_posterior(&posterior, rho);
    let mut h = DVector::<Complex64>::zeros(n);
    for &(kk, w) in &retained {
        h += &terms[kk] * Complex64::new(w, 0.0);
    }
    Ok(h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gmm_em::{fit, CovConstraint, EmConfig};
    use crate::rng::{standard_complex, stream_rng};

    #[test]
    fn k1_identity_cov_full_pattern_is_wiener_shrinkage() {
        let n = 6;
        let model = GmmModel {
            weights: vec![1.0],
            means: vec![DVector::zeros(n)],
            covariances: vec![CovarianceModel::Diagonal(vec![1.0; n])],
            dims: ModelDims::OneD(n),
        };
        let pattern = PilotPattern::full(n, 1);
        let sigma2 = 0.5;
        let est = precompute(&model, &pattern, sigma2).unwrap();
        let mut rng = stream_rng(1, 0);
        let y = DVector::from_fn(n, |_, _| standard_complex(&mut rng));
        let rep = est.estimate(&y).unwrap();
        assert_eq!(rep.components_used, 1);
        for (h, yv) in rep.h_hat.iter().zip(y.iter()) {
            assert!((h - yv / (1.0 + sigma2)).norm() < 1e-12);
        }
    }

    #[test]
    fn zero_mean_zero_observation_gives_zero() {
        let n = 4;
        let mut rng = stream_rng(2, 0);
        let covs: Vec<CovarianceModel> = (0..3)
            .map(|_| {
                let b = DMatrix::from_fn(n, n, |_, _| standard_complex(&mut rng));
                let mut c = &b * b.adjoint();
                for i in 0..n {
                    c[(i, i)] += Complex64::new(0.5, 0.0);
                }
                hermitianize(&mut c);
                CovarianceModel::Full(c)
            })
            .collect();
        let model = GmmModel {
            weights: vec![0.5, 0.3, 0.2],
            means: vec![DVector::zeros(n); 3],
            covariances: covs,
            dims: ModelDims::OneD(n),
        };
        let pattern = PilotPattern::new(n, 1, vec![0, 2], vec![0]).unwrap();
        let est = precompute(&model, &pattern, 0.1).unwrap();
        let rep = est.estimate(&DVector::zeros(2)).unwrap();
        assert!(rep.h_hat.norm() < 1e-14);
    }

    #[test]
    fn truncation_counts_uniform_weights() {
        // Identical components: posterior is uniform; reaching 0.99 needs
        // all four.
        let n = 3;
        let model = GmmModel {
            weights: vec![0.25; 4],
            means: vec![DVector::zeros(n); 4],
            covariances: vec![CovarianceModel::Diagonal(vec![1.0; n]); 4],
            dims: ModelDims::OneD(n),
        };
        let pattern = PilotPattern::full(n, 1);
        let est = precompute(&model, &pattern, 0.2).unwrap();
        let mut rng = stream_rng(3, 0);
        let y = DVector::from_fn(n, |_, _| standard_complex(&mut rng));
        assert_eq!(est.components_to_rho(&y).unwrap(), 4);
        let all = est.with_rho(1.0).unwrap();
        assert_eq!(all.components_to_rho(&y).unwrap(), 4);
    }

    #[test]
    fn estimate_matches_dense_reference() {
        let mut rng = stream_rng(4, 0);
        let dims = ModelDims::TwoD { n_c: 4, n_t: 3 };
        let n = dims.total();
        let data: Vec<DVector<Complex64>> = (0..200)
            .map(|_| DVector::from_fn(n, |_, _| standard_complex(&mut rng)))
            .collect();
        let pattern = PilotPattern::new(4, 3, vec![0, 2, 3], vec![0, 2]).unwrap();
        let sigma2 = 0.3;
        for constraint in [
            CovConstraint::Full,
            CovConstraint::Toeplitz,
            CovConstraint::Circulant,
        ] {
            let cfg = EmConfig {
                max_iters: 8,
                rng_seed: 5,
                ..EmConfig::new(2)
            };
            let (model, _) = fit(&data, &cfg, constraint, dims).unwrap();
            let est = precompute(&model, &pattern, sigma2)
                .unwrap()
                .with_rho(1.0)
                .unwrap();
            for trial in 0..5 {
                let mut nrng = stream_rng(40 + trial, 0);
                let y = DVector::from_fn(pattern.n_pilots(), |_, _| standard_complex(&mut nrng));
                let fast = est.estimate(&y).unwrap();
                let slow = dense_reference_estimate(&model, &pattern, sigma2, 1.0, &y).unwrap();
                let rel = (&fast.h_hat - &slow).norm() / slow.norm().max(1e-12);
                assert!(rel < 1e-8, "{constraint:?}: rel {rel}");
            }
        }
    }

    #[test]
    fn kron_weights_sum_to_one_and_k1_trivial() {
        let mk1 = |n: usize| GmmModel {
            weights: vec![1.0],
            means: vec![DVector::zeros(n)],
            covariances: vec![CovarianceModel::Diagonal(vec![1.0; n])],
            dims: ModelDims::OneD(n),
        };
        let data: Vec<DVector<Complex64>> = {
            let mut rng = stream_rng(6, 0);
            (0..50)
                .map(|_| DVector::from_fn(6, |_, _| standard_complex(&mut rng)))
                .collect()
        };
        let kron = build_kron_gmm(&mk1(2), &mk1(3), &data, 16).unwrap();
        assert_eq!(kron.n_components(), 1);
        assert!((kron.weights[0] - 1.0).abs() < 1e-12);
        assert_eq!(kron.dim(), 6);
    }

    #[test]
    fn kron_capacity_limit() {
        let mk = |n: usize, k: usize| GmmModel {
            weights: vec![1.0 / k as f64; k],
            means: vec![DVector::zeros(n); k],
            covariances: vec![CovarianceModel::Diagonal(vec![1.0; n]); k],
            dims: ModelDims::OneD(n),
        };
        let data = vec![DVector::<Complex64>::zeros(6); 4];
        let r = build_kron_gmm(&mk(2, 4), &mk(3, 4), &data, 8);
        assert!(matches!(r, Err(Error::Capacity { .. })));
    }

    #[test]
    fn cascade_exact_recovery_noiseless_full_pilots() {
        // K=1 stages with invertible covariances and full pilot coverage:
        // as sigma^2 -> 0 the cascade reproduces the grid exactly.
        let (n_c, n_t) = (5usize, 4usize);
        let mk1 = |n: usize| GmmModel {
            weights: vec![1.0],
            means: vec![DVector::zeros(n)],
            covariances: vec![CovarianceModel::Diagonal(vec![1.0; n])],
            dims: ModelDims::OneD(n),
        };
        let pattern = PilotPattern::full(n_c, n_t);
        let mut rng = stream_rng(7, 0);
        let v: Vec<Complex64> = (0..n_c * n_t).map(|_| standard_complex(&mut rng)).collect();
        let h = ChannelGrid::from_vec_slice(n_c, n_t, &v).unwrap();
        let obs = Observation {
            y: pattern.gather(h.vec_slice()),
            noise_variance: 1e-12,
        };
        let rep = estimate_2x1d(&mk1(n_c), &mk1(n_t), &obs, &pattern, CascadeOrder::FreqFirst)
            .unwrap();
        let err = normalized_sq_error(&h, &rep.grid).unwrap();
        assert!(err < 1e-8, "err {err}");
        assert_eq!(rep.grid.n_c(), n_c);
        assert_eq!(rep.grid.n_t(), n_t);
    }

    #[test]
    fn genie_kron_flat_profiles_shrink() {
        // A constant-magnitude single-path channel has flat PDP/DPS;
        // with full pilots the genie Kronecker estimate is uniform
        // shrinkage y / (1 + sigma^2).
        let (n_c, n_t) = (6usize, 4usize);
        let v: Vec<Complex64> = vec![Complex64::new(1.0, 0.0); n_c * n_t];
        let h = ChannelGrid::from_vec_slice(n_c, n_t, &v).unwrap();
        let pattern = PilotPattern::full(n_c, n_t);
        let sigma2 = 0.25;
        let obs = Observation {
            y: pattern.gather(h.vec_slice()),
            noise_variance: sigma2,
        };
        let est = estimate_pdp_dps_kron(&h, &obs, &pattern).unwrap();
        // Impulse PDP/DPS: covariance is rank-one in each axis; the estimate
        // still shrinks the observation toward the channel subspace. At the
        // noiseless observation y = h, the LMMSE output is h * g/(g+sigma2)
        // with g = n_c*n_t * (1/n_c) * (1/n_t) ... check against dense oracle
        // instead: here simply verify shrinkage toward h.
        for (e, t) in est.vec_slice().iter().zip(h.vec_slice().iter()) {
            let ratio = e / t;
            assert!((ratio.im).abs() < 1e-10);
            assert!(ratio.re > 0.5 && ratio.re < 1.0, "ratio {ratio}");
        }
    }

    #[test]
    fn genie_2x1d_noiseless_full_pattern_recovers() {
        let (n_c, n_t) = (6usize, 5usize);
        let mut rng = stream_rng(8, 0);
        let v: Vec<Complex64> = (0..n_c * n_t).map(|_| standard_complex(&mut rng)).collect();
        let h = ChannelGrid::from_vec_slice(n_c, n_t, &v).unwrap();
        let pattern = PilotPattern::full(n_c, n_t);
        let obs = Observation {
            y: pattern.gather(h.vec_slice()),
            noise_variance: 1e-14,
        };
        let est = estimate_pdp_dps_2x1d(&h, &obs, &pattern).unwrap();
        let err = normalized_sq_error(&h, &est).unwrap();
        assert!(err < 1e-10, "err {err}");
    }

    #[test]
    fn mse_trivial_cases() {
        let mut rng = stream_rng(9, 0);
        let v: Vec<Complex64> = (0..12).map(|_| standard_complex(&mut rng)).collect();
        let h = ChannelGrid::from_vec_slice(4, 3, &v).unwrap();
        assert_eq!(normalized_mse(&[h.clone()], &[h.clone()]).unwrap(), 0.0);
        let zero = ChannelGrid::zeros(4, 3);
        let m = normalized_mse(&[h.clone()], &[zero]).unwrap();
        assert!((m - h.energy() / 12.0).abs() < 1e-12);
    }
}
