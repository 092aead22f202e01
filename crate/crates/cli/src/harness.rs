//! Config-driven experiment harness: dataset generation, cached model
//! fitting, estimator sweeps, and CSV emission.
//!
//! Determinism contract: every random draw comes from a ChaCha stream keyed
//! by the experiment seed, a purpose tag, and the sample index, so identical
//! configurations produce byte-identical CSV outputs regardless of thread
//! count. Test observations are drawn once per (sweep point, sample) and
//! shared by all estimators, which keeps comparisons paired.

use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::{Arc, Mutex};

use nalgebra::DVector;
use num_complex::Complex64;
use rayon::prelude::*;

use gmmce_core::channel_sim::{
    generate_dataset, normalize_dataset, save_dataset, ChannelGrid, Observation, PilotPattern,
};
use gmmce_core::error::{Error, Result};
use gmmce_core::estimators::{
    build_kron_gmm, estimate_pdp_dps_2x1d, estimate_pdp_dps_kron, normalized_sq_error,
    precompute, CascadeEstimator, CascadeOrder, FittedEstimator, Sigma2EffMode,
};
use gmmce_core::gmm_em::{fit, load_model, save_model, CovConstraint, EmConfig, GmmModel};
use gmmce_core::rng::{derive_seed, standard_complex, stream_rng};
use gmmce_core::structured_cov::ModelDims;

use crate::config::{
    pair_counts, CascadeNoise, EstimatorKind, EstimatorSpec, ExperimentConfig, Order,
};
use crate::csvout::{fmt_float, CsvTable};
use crate::params::{discrepancy_notes, param_count};

/// A generated and normalized experiment dataset. The normalization scale is
/// computed on the training set and applied to the test set as well, so both
/// live on the same power scale.
pub struct DataSet {
    pub train: Vec<ChannelGrid>,
    pub test: Vec<ChannelGrid>,
    pub scale: f64,
}

/// Fitted material of one estimator entry.
pub enum Prepared {
    /// A single grid-dimensional mixture (also the assembled kron model).
    Mixture(Arc<GmmModel>),
    /// Time and frequency axis mixtures for the cascaded variants.
    Pair {
        time: Arc<GmmModel>,
        freq: Arc<GmmModel>,
    },
    /// Genie baselines carry no fitted state.
    Genie,
}

/// Per-SNR evaluator.
enum Evaluator {
    Mixture(FittedEstimator),
    Cascade(CascadeEstimator),
    Genie2x1d,
    GenieKron,
}

/// Per-sample outcome: normalized squared error and the mixture workload
/// (components needed for the cumulative-responsibility threshold; for
/// cascades the sum of the two stage means; None for the genie baselines).
struct SampleOutcome {
    sq_error: f64,
    components: Option<f64>,
}

pub struct Harness {
    pub cfg: ExperimentConfig,
    cache_dir: Option<PathBuf>,
    models: Mutex<HashMap<String, Arc<GmmModel>>>,
    data: Mutex<Option<Arc<DataSet>>>,
}

fn fnv64(s: &str) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325_u64;
    for b in s.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

impl Harness {
    pub fn new(cfg: ExperimentConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Harness {
            cfg,
            cache_dir: None,
            models: Mutex::new(HashMap::new()),
            data: Mutex::new(None),
        })
    }

    /// Enable the on-disk model cache: fits are persisted and reloaded when
    /// the (dataset seed, config) fingerprint matches.
    pub fn with_cache_dir(mut self, dir: PathBuf) -> Result<Self> {
        std::fs::create_dir_all(&dir)?;
        self.cache_dir = Some(dir);
        Ok(self)
    }

    pub fn pattern(&self) -> PilotPattern {
        self.cfg.pattern().expect("validated at construction")
    }

    /// Generate (or return the cached) training and test data.
    pub fn data(&self) -> Result<Arc<DataSet>> {
        let mut guard = self.data.lock().unwrap();
        if let Some(d) = guard.as_ref() {
            return Ok(d.clone());
        }
        let mut params = self.cfg.scenario.clone();
        params.rng_seed = derive_seed(self.cfg.seed, "train-data");
        let mut train = generate_dataset(&params, self.cfg.train_size)?;
        let scale = normalize_dataset(&mut train)?;
        params.rng_seed = derive_seed(self.cfg.seed, "test-data");
        let mut test = generate_dataset(&params, self.cfg.test_size)?;
        for g in test.iter_mut() {
            g.scale(scale);
        }
        let d = Arc::new(DataSet { train, test, scale });
        *guard = Some(d.clone());
        Ok(d)
    }

    fn em_config(&self, k: usize, one_dim: bool, key: &str) -> EmConfig {
        EmConfig {
            n_components: k,
            max_iters: if one_dim {
                self.cfg.em.max_iters_1d
            } else {
                self.cfg.em.max_iters
            },
            rel_tol: self.cfg.em.rel_tol,
            spectral_floor: self.cfg.em.spectral_floor,
            rng_seed: fnv64(key),
            ..EmConfig::new(k)
        }
    }

    /// Fetch from memory, then disk, then fit and persist.
    fn cached<F>(&self, key: String, label: &str, fit_fn: F) -> Result<Arc<GmmModel>>
    where
        F: FnOnce() -> Result<GmmModel>,
    {
        if let Some(m) = self.models.lock().unwrap().get(&key) {
            return Ok(m.clone());
        }
        let path = self
            .cache_dir
            .as_ref()
            .map(|d| d.join(format!("{label}-{:016x}.gmm", fnv64(&key))));
        if let Some(p) = &path {
            if p.exists() {
                let m = Arc::new(load_model(p)?);
                self.models.lock().unwrap().insert(key, m.clone());
                return Ok(m);
            }
        }
        let model = Arc::new(fit_fn()?);
        if let Some(p) = &path {
            // Write-then-rename so concurrent harnesses never observe a
            // partially written model file.
            let tmp = p.with_extension(format!("tmp.{}", std::process::id()));
            save_model(&tmp, &model)?;
            std::fs::rename(&tmp, p)?;
        }
        self.models.lock().unwrap().insert(key, model.clone());
        Ok(model)
    }

    fn fit_grid(
        &self,
        constraint: CovConstraint,
        k: usize,
        train: &[ChannelGrid],
        prefix: usize,
    ) -> Result<Arc<GmmModel>> {
        let key = format!(
            "2d|{}|K{}|size{}|{}",
            constraint.name(),
            k,
            prefix,
            self.cfg.fit_fingerprint()
        );
        let label = format!("grid-{}-k{}-n{}", constraint.name(), k, prefix);
        self.cached(key.clone(), &label, || {
            let data: Vec<DVector<Complex64>> =
                train[..prefix].iter().map(|g| g.to_vector()).collect();
            let dims = ModelDims::TwoD {
                n_c: self.cfg.scenario.n_carriers,
                n_t: self.cfg.scenario.n_symbols,
            };
            let cfg = self.em_config(k, false, &key);
            let (model, _) = fit(&data, &cfg, constraint, dims)?;
            Ok(model)
        })
    }

    fn fit_axis(
        &self,
        time_axis: bool,
        constraint: CovConstraint,
        k: usize,
        train: &[ChannelGrid],
        prefix: usize,
    ) -> Result<Arc<GmmModel>> {
        let axis = if time_axis { "time" } else { "freq" };
        let key = format!(
            "1d|{axis}|{}|K{}|size{}|{}",
            constraint.name(),
            k,
            prefix,
            self.cfg.fit_fingerprint()
        );
        let label = format!("axis-{axis}-{}-k{}-n{}", constraint.name(), k, prefix);
        self.cached(key.clone(), &label, || {
            let mut samples = Vec::new();
            for g in &train[..prefix] {
                if time_axis {
                    for c in 0..g.n_c() {
                        samples.push(g.time_row(c));
                    }
                } else {
                    for t in 0..g.n_t() {
                        samples.push(g.freq_column(t));
                    }
                }
            }
            let dim = if time_axis {
                self.cfg.scenario.n_symbols
            } else {
                self.cfg.scenario.n_carriers
            };
            let cfg = self.em_config(k, true, &key);
            let (model, _) = fit(&samples, &cfg, constraint, ModelDims::OneD(dim))?;
            Ok(model)
        })
    }

    fn build_kron(
        &self,
        k_t: usize,
        k_c: usize,
        train: &[ChannelGrid],
        prefix: usize,
    ) -> Result<Arc<GmmModel>> {
        let key = format!(
            "kron|Kt{}|Kc{}|size{}|{}",
            k_t,
            k_c,
            prefix,
            self.cfg.fit_fingerprint()
        );
        let label = format!("kron-kt{k_t}-kc{k_c}-n{prefix}");
        let time = self.fit_axis(true, CovConstraint::Full, k_t, train, prefix)?;
        let freq = self.fit_axis(false, CovConstraint::Full, k_c, train, prefix)?;
        self.cached(key, &label, || {
            let data: Vec<DVector<Complex64>> =
                train[..prefix].iter().map(|g| g.to_vector()).collect();
            build_kron_gmm(&time, &freq, &data, self.cfg.max_kron_components)
        })
    }

    /// Fit whatever the estimator entry needs on the first `prefix` training
    /// samples.
    pub fn prepare(
        &self,
        spec: &EstimatorSpec,
        train: &[ChannelGrid],
        prefix: usize,
    ) -> Result<Prepared> {
        let k = spec.components.unwrap_or(0);
        let k_t = spec.components_time.unwrap_or(0);
        let k_c = spec.components_freq.unwrap_or(0);
        Ok(match spec.kind {
            EstimatorKind::Full => {
                Prepared::Mixture(self.fit_grid(CovConstraint::Full, k, train, prefix)?)
            }
            EstimatorKind::BToep => {
                Prepared::Mixture(self.fit_grid(CovConstraint::Toeplitz, k, train, prefix)?)
            }
            EstimatorKind::BCirc => {
                Prepared::Mixture(self.fit_grid(CovConstraint::Circulant, k, train, prefix)?)
            }
            EstimatorKind::Kron => Prepared::Mixture(self.build_kron(k_t, k_c, train, prefix)?),
            EstimatorKind::TwoByOne => Prepared::Pair {
                time: self.fit_axis(true, CovConstraint::Full, k_t, train, prefix)?,
                freq: self.fit_axis(false, CovConstraint::Full, k_c, train, prefix)?,
            },
            EstimatorKind::TwoByOneToep => Prepared::Pair {
                time: self.fit_axis(true, CovConstraint::Toeplitz, k_t, train, prefix)?,
                freq: self.fit_axis(false, CovConstraint::Toeplitz, k_c, train, prefix)?,
            },
            EstimatorKind::TwoByOneCirc => Prepared::Pair {
                time: self.fit_axis(true, CovConstraint::Circulant, k_t, train, prefix)?,
                freq: self.fit_axis(false, CovConstraint::Circulant, k_c, train, prefix)?,
            },
            EstimatorKind::PdpDps2x1d | EstimatorKind::PdpDpsKron => Prepared::Genie,
        })
    }

    fn evaluator(
        &self,
        kind: EstimatorKind,
        prepared: &Prepared,
        sigma2: f64,
    ) -> Result<Evaluator> {
        let pattern = self.pattern();
        let order = match self.cfg.cascade_order {
            Order::FreqFirst => CascadeOrder::FreqFirst,
            Order::TimeFirst => CascadeOrder::TimeFirst,
        };
        let mode = match self.cfg.cascade_noise {
            CascadeNoise::PosteriorAvg => Sigma2EffMode::PosteriorAvg,
            CascadeNoise::RawSigma => Sigma2EffMode::RawSigma,
        };
        Ok(match (kind, prepared) {
            (EstimatorKind::PdpDps2x1d, Prepared::Genie) => Evaluator::Genie2x1d,
            (EstimatorKind::PdpDpsKron, Prepared::Genie) => Evaluator::GenieKron,
            (_, Prepared::Mixture(m)) => Evaluator::Mixture(
                precompute(m, &pattern, sigma2)?.with_rho(self.cfg.rho)?,
            ),
            (_, Prepared::Pair { time, freq }) => Evaluator::Cascade(CascadeEstimator::new(
                time,
                freq,
                &pattern,
                sigma2,
                order,
                mode,
                self.cfg.rho,
            )?),
            _ => {
                return Err(Error::InvalidParameter(format!(
                    "estimator {} prepared inconsistently",
                    kind.name()
                )))
            }
        })
    }

    fn eval_sample(
        &self,
        ev: &Evaluator,
        truth: &ChannelGrid,
        obs: &Observation,
    ) -> Result<SampleOutcome> {
        let pattern = self.pattern();
        Ok(match ev {
            Evaluator::Mixture(f) => {
                let rep = f.estimate(&obs.y)?;
                let grid = ChannelGrid::from_vec_slice(
                    truth.n_c(),
                    truth.n_t(),
                    rep.h_hat.as_slice(),
                )?;
                SampleOutcome {
                    sq_error: normalized_sq_error(truth, &grid)?,
                    components: Some(rep.components_used as f64),
                }
            }
            Evaluator::Cascade(c) => {
                let rep = c.estimate(&obs.y)?;
                SampleOutcome {
                    sq_error: normalized_sq_error(truth, &rep.grid)?,
                    components: Some(rep.stage1_mean_components + rep.stage2_mean_components),
                }
            }
            Evaluator::Genie2x1d => {
                let grid = estimate_pdp_dps_2x1d(truth, obs, &pattern)?;
                SampleOutcome {
                    sq_error: normalized_sq_error(truth, &grid)?,
                    components: None,
                }
            }
            Evaluator::GenieKron => {
                let grid = estimate_pdp_dps_kron(truth, obs, &pattern)?;
                SampleOutcome {
                    sq_error: normalized_sq_error(truth, &grid)?,
                    components: None,
                }
            }
        })
    }

    /// Evaluate a set of estimators on the test data at one noise level.
    /// `noise_tag` keys the observation noise streams; reusing a tag
    /// reproduces the identical observations.
    fn eval_at(
        &self,
        evs: &[(EstimatorKind, Evaluator)],
        test: &[ChannelGrid],
        sigma2: f64,
        noise_tag: u64,
    ) -> Result<Vec<Vec<SampleOutcome>>> {
        let pattern = self.pattern();
        let noise_seed = derive_seed(self.cfg.seed, "observation-noise");
        let per_sample: Vec<Result<Vec<SampleOutcome>>> = test
            .par_iter()
            .enumerate()
            .map(|(i, truth)| {
                let mut rng = stream_rng(noise_seed, (noise_tag << 32) | i as u64);
                let mut y = pattern.gather(truth.vec_slice());
                let s = sigma2.sqrt();
                for v in y.iter_mut() {
                    *v += standard_complex(&mut rng) * s;
                }
                let obs = Observation {
                    y,
                    noise_variance: sigma2,
                };
                evs.iter()
                    .map(|(_, ev)| self.eval_sample(ev, truth, &obs))
                    .collect()
            })
            .collect();
        // transpose to [estimator][sample]
        let mut out: Vec<Vec<SampleOutcome>> = evs.iter().map(|_| Vec::new()).collect();
        for row in per_sample {
            for (j, o) in row?.into_iter().enumerate() {
                out[j].push(o);
            }
        }
        Ok(out)
    }
}

/// Detailed sweep output: per-sample normalized squared errors for every
/// sweep point and estimator, plus the rendered CSV table.
pub struct SweepDetail {
    pub x_header: String,
    pub x_values: Vec<String>,
    pub estimators: Vec<EstimatorKind>,
    /// `errors[x][estimator][sample]`
    pub errors: Vec<Vec<Vec<f64>>>,
}

impl SweepDetail {
    pub fn mse(&self, xi: usize, est: usize) -> f64 {
        let v = &self.errors[xi][est];
        v.iter().sum::<f64>() / v.len() as f64
    }

    /// Standard error of the paired difference `err[a] - scale * err[b]`.
    pub fn paired_diff_se(&self, xi: usize, a: usize, b: usize, scale: f64) -> (f64, f64) {
        let ea = &self.errors[xi][a];
        let eb = &self.errors[xi][b];
        let n = ea.len() as f64;
        let d: Vec<f64> = ea.iter().zip(eb.iter()).map(|(x, y)| x - scale * y).collect();
        let mean = d.iter().sum::<f64>() / n;
        let var = d.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        (mean, (var / n).sqrt())
    }

    pub fn column_index(&self, kind: EstimatorKind) -> Option<usize> {
        self.estimators.iter().position(|&k| k == kind)
    }

    pub fn to_table(&self) -> CsvTable {
        let mut header = vec![self.x_header.clone()];
        header.extend(self.estimators.iter().map(|k| k.name().to_string()));
        let mut t = CsvTable::new(header);
        for (xi, x) in self.x_values.iter().enumerate() {
            let mut row = vec![x.clone()];
            for est in 0..self.estimators.len() {
                row.push(fmt_float(self.mse(xi, est)));
            }
            t.push_row(row);
        }
        t
    }
}

impl Harness {
    /// MSE versus SNR for every configured estimator.
    pub fn run_mse_sweep(&self) -> Result<SweepDetail> {
        let data = self.data()?;
        let prepared: Vec<(EstimatorKind, Prepared)> = self
            .cfg
            .estimators
            .iter()
            .map(|spec| Ok((spec.kind, self.prepare(spec, &data.train, data.train.len())?)))
            .collect::<Result<_>>()?;

        let mut errors = Vec::with_capacity(self.cfg.snr_grid_db.len());
        for (si, &snr_db) in self.cfg.snr_grid_db.iter().enumerate() {
            let sigma2 = 10f64.powf(-snr_db / 10.0);
            let evs: Vec<(EstimatorKind, Evaluator)> = prepared
                .iter()
                .map(|(k, p)| Ok((*k, self.evaluator(*k, p, sigma2)?)))
                .collect::<Result<_>>()?;
            let outcomes = self.eval_at(&evs, &data.test, sigma2, si as u64)?;
            errors.push(
                outcomes
                    .into_iter()
                    .map(|v| v.into_iter().map(|o| o.sq_error).collect())
                    .collect(),
            );
        }
        Ok(SweepDetail {
            x_header: "SNR".into(),
            x_values: self.cfg.snr_grid_db.iter().map(|v| v.to_string()).collect(),
            estimators: self.cfg.estimators.iter().map(|e| e.kind).collect(),
            errors,
        })
    }

    /// Mean number of components needed for the responsibility threshold,
    /// per SNR, for the mixture estimators (the genie baselines have no
    /// mixture and are skipped).
    pub fn run_responsibility_count(&self) -> Result<SweepDetail> {
        let data = self.data()?;
        let gmm_specs: Vec<&EstimatorSpec> = self
            .cfg
            .estimators
            .iter()
            .filter(|s| s.kind.is_gmm())
            .collect();
        let prepared: Vec<(EstimatorKind, Prepared)> = gmm_specs
            .iter()
            .map(|spec| Ok((spec.kind, self.prepare(spec, &data.train, data.train.len())?)))
            .collect::<Result<_>>()?;

        let mut counts = Vec::with_capacity(self.cfg.snr_grid_db.len());
        for (si, &snr_db) in self.cfg.snr_grid_db.iter().enumerate() {
            let sigma2 = 10f64.powf(-snr_db / 10.0);
            let evs: Vec<(EstimatorKind, Evaluator)> = prepared
                .iter()
                .map(|(k, p)| Ok((*k, self.evaluator(*k, p, sigma2)?)))
                .collect::<Result<_>>()?;
            let outcomes = self.eval_at(&evs, &data.test, sigma2, si as u64)?;
            counts.push(
                outcomes
                    .into_iter()
                    .map(|v| {
                        v.into_iter()
                            .map(|o| o.components.expect("gmm estimators counted"))
                            .collect()
                    })
                    .collect(),
            );
        }
        Ok(SweepDetail {
            x_header: "SNR".into(),
            x_values: self.cfg.snr_grid_db.iter().map(|v| v.to_string()).collect(),
            estimators: gmm_specs.iter().map(|e| e.kind).collect(),
            errors: counts,
        })
    }

    /// MSE at the fixed sweep SNR for growing training-set prefixes.
    pub fn run_training_size_sweep(&self) -> Result<SweepDetail> {
        let data = self.data()?;
        let sigma2 = 10f64.powf(-self.cfg.sweep_snr_db / 10.0);
        let mut errors = Vec::with_capacity(self.cfg.train_sizes.len());
        for &size in &self.cfg.train_sizes {
            let evs: Vec<(EstimatorKind, Evaluator)> = self
                .cfg
                .estimators
                .iter()
                .map(|spec| {
                    let p = self.prepare(spec, &data.train, size)?;
                    Ok((spec.kind, self.evaluator(spec.kind, &p, sigma2)?))
                })
                .collect::<Result<_>>()?;
            // Fixed noise tag: identical observations across sizes.
            let outcomes = self.eval_at(&evs, &data.test, sigma2, 0x5157)?;
            errors.push(
                outcomes
                    .into_iter()
                    .map(|v| v.into_iter().map(|o| o.sq_error).collect())
                    .collect(),
            );
        }
        Ok(SweepDetail {
            x_header: "train_size".into(),
            x_values: self.cfg.train_sizes.iter().map(|v| v.to_string()).collect(),
            estimators: self.cfg.estimators.iter().map(|e| e.kind).collect(),
            errors,
        })
    }

    /// MSE at the fixed sweep SNR for a grid of total component counts; the
    /// pair variants follow the product/sum pairing rule.
    pub fn run_component_sweep(&self) -> Result<SweepDetail> {
        let data = self.data()?;
        let sigma2 = 10f64.powf(-self.cfg.sweep_snr_db / 10.0);
        let kinds: Vec<EstimatorKind> = self
            .cfg
            .estimators
            .iter()
            .map(|e| e.kind)
            .filter(|k| k.is_gmm())
            .collect();
        let mut errors = Vec::with_capacity(self.cfg.component_grid.len());
        for &k_total in &self.cfg.component_grid {
            let evs: Vec<(EstimatorKind, Evaluator)> = kinds
                .iter()
                .map(|&kind| {
                    let spec = if kind.uses_pair() {
                        let (k_t, k_c) = pair_counts(kind, k_total);
                        EstimatorSpec {
                            kind,
                            components: None,
                            components_time: Some(k_t),
                            components_freq: Some(k_c),
                        }
                    } else {
                        EstimatorSpec {
                            kind,
                            components: Some(k_total),
                            components_time: None,
                            components_freq: None,
                        }
                    };
                    let p = self.prepare(&spec, &data.train, data.train.len())?;
                    Ok((kind, self.evaluator(kind, &p, sigma2)?))
                })
                .collect::<Result<_>>()?;
            let outcomes = self.eval_at(&evs, &data.test, sigma2, 0xC031)?;
            errors.push(
                outcomes
                    .into_iter()
                    .map(|v| v.into_iter().map(|o| o.sq_error).collect())
                    .collect(),
            );
        }
        Ok(SweepDetail {
            x_header: "components".into(),
            x_values: self
                .cfg
                .component_grid
                .iter()
                .map(|v| v.to_string())
                .collect(),
            estimators: kinds,
            errors,
        })
    }

    /// Exact parameter counts of the configured mixture estimators, plus the
    /// documented formula/print discrepancies of the reference setting.
    pub fn report_param_counts(&self) -> Result<(CsvTable, Vec<String>)> {
        let mut t = CsvTable::new(vec![
            "estimator".into(),
            "params".into(),
            "rounded".into(),
        ]);
        for spec in &self.cfg.estimators {
            if !spec.kind.is_gmm() {
                continue;
            }
            let pc = param_count(
                spec.kind,
                self.cfg.scenario.n_carriers,
                self.cfg.scenario.n_symbols,
                spec.components.unwrap_or(0),
                spec.components_time.unwrap_or(0),
                spec.components_freq.unwrap_or(0),
            )?;
            t.push_row(vec![
                spec.kind.name().into(),
                pc.params.to_string(),
                pc.rounded.to_string(),
            ]);
        }
        Ok((t, discrepancy_notes()))
    }

    /// Fit every configured estimator and persist the models (the `fit`
    /// subcommand). Returns the labels of the fitted entries.
    pub fn fit_and_cache_models(&self) -> Result<Vec<String>> {
        let data = self.data()?;
        let mut labels = Vec::new();
        for spec in &self.cfg.estimators {
            if !spec.kind.is_gmm() {
                continue;
            }
            self.prepare(spec, &data.train, data.train.len())?;
            labels.push(spec.kind.name().to_string());
        }
        Ok(labels)
    }

    /// Write the generated dataset files (the `generate` subcommand).
    pub fn write_datasets(&self, dir: &std::path::Path) -> Result<(PathBuf, PathBuf)> {
        let data = self.data()?;
        std::fs::create_dir_all(dir)?;
        let train_path = dir.join("train.chd");
        let test_path = dir.join("test.chd");
        save_dataset(&train_path, &data.train)?;
        save_dataset(&test_path, &data.test)?;
        Ok((train_path, test_path))
    }
}
