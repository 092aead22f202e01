//! Flat, human-editable experiment configuration.
//!
//! The format is sectioned `key = value` text: a `[scenario]`, `[pilots]`,
//! `[run]` and `[em]` section plus one `[estimator <name>]` section per
//! estimator. Unknown sections or keys are rejected with the offending path
//! so typos cannot silently change an experiment.

use gmmce_core::channel_sim::{ChannelParams, PilotPattern};
use gmmce_core::error::{Error, Result};

/// All estimator variants the harness knows about. The names are also the
/// CSV column headers and the `[estimator ...]` section names.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum EstimatorKind {
    Full,
    Kron,
    BToep,
    BCirc,
    TwoByOne,
    TwoByOneToep,
    TwoByOneCirc,
    PdpDps2x1d,
    PdpDpsKron,
}

impl EstimatorKind {
    pub const ALL: [EstimatorKind; 9] = [
        EstimatorKind::Full,
        EstimatorKind::Kron,
        EstimatorKind::BToep,
        EstimatorKind::BCirc,
        EstimatorKind::TwoByOne,
        EstimatorKind::TwoByOneToep,
        EstimatorKind::TwoByOneCirc,
        EstimatorKind::PdpDps2x1d,
        EstimatorKind::PdpDpsKron,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            EstimatorKind::Full => "full",
            EstimatorKind::Kron => "kron",
            EstimatorKind::BToep => "b-toep",
            EstimatorKind::BCirc => "b-circ",
            EstimatorKind::TwoByOne => "2x1d",
            EstimatorKind::TwoByOneToep => "2x1d-toep",
            EstimatorKind::TwoByOneCirc => "2x1d-circ",
            EstimatorKind::PdpDps2x1d => "pdp-dps-2x1d",
            EstimatorKind::PdpDpsKron => "pdp-dps-kron",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL
            .iter()
            .copied()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown estimator '{s}'")))
    }

    /// Fitted from data (as opposed to the genie baselines).
    pub fn is_gmm(&self) -> bool {
        !matches!(self, EstimatorKind::PdpDps2x1d | EstimatorKind::PdpDpsKron)
    }

    /// Uses a pair of one-dimensional mixtures.
    pub fn uses_pair(&self) -> bool {
        matches!(
            self,
            EstimatorKind::Kron
                | EstimatorKind::TwoByOne
                | EstimatorKind::TwoByOneToep
                | EstimatorKind::TwoByOneCirc
        )
    }
}

/// One estimator entry: the variant plus its component counts.
#[derive(Clone, Debug, PartialEq)]
pub struct EstimatorSpec {
    pub kind: EstimatorKind,
    /// Component count for single-mixture variants.
    pub components: Option<usize>,
    /// Counts of the time/frequency mixtures for pair variants.
    pub components_time: Option<usize>,
    pub components_freq: Option<usize>,
}

impl EstimatorSpec {
    pub fn validate(&self) -> Result<()> {
        let path = format!("estimator {}", self.kind.name());
        if self.kind.uses_pair() {
            if self.components.is_some() {
                return Err(Error::InvalidParameter(format!(
                    "{path}: use components_time/components_freq, not components"
                )));
            }
            match (self.components_time, self.components_freq) {
                (Some(t), Some(c)) if t >= 1 && c >= 1 => Ok(()),
                _ => Err(Error::InvalidParameter(format!(
                    "{path}: components_time and components_freq must be set and >= 1"
                ))),
            }
        } else if self.kind.is_gmm() {
            if self.components_time.is_some() || self.components_freq.is_some() {
                return Err(Error::InvalidParameter(format!(
                    "{path}: single-mixture estimator takes only components"
                )));
            }
            match self.components {
                Some(k) if k >= 1 => Ok(()),
                _ => Err(Error::InvalidParameter(format!(
                    "{path}: components must be set and >= 1"
                ))),
            }
        } else {
            if self.components.is_some()
                || self.components_time.is_some()
                || self.components_freq.is_some()
            {
                return Err(Error::InvalidParameter(format!(
                    "{path}: genie estimators take no component counts"
                )));
            }
            Ok(())
        }
    }

    /// Largest single-mixture component count involved (for the
    /// train-size sanity check).
    pub fn max_k(&self) -> usize {
        self.components
            .into_iter()
            .chain(self.components_time)
            .chain(self.components_freq)
            .max()
            .unwrap_or(0)
    }
}

/// Second-stage noise model of the cascaded estimators.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CascadeNoise {
    PosteriorAvg,
    RawSigma,
}

/// Cascade direction.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Order {
    FreqFirst,
    TimeFirst,
}

#[derive(Clone, Debug)]
pub struct EmSettings {
    /// Iteration cap for grid-dimensional fits.
    pub max_iters: usize,
    /// Iteration cap for the one-dimensional axis fits.
    pub max_iters_1d: usize,
    pub rel_tol: f64,
    pub spectral_floor: f64,
}

#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub scenario: ChannelParams,
    pub pilot_carriers: Vec<usize>,
    pub pilot_symbols: Vec<usize>,
    pub estimators: Vec<EstimatorSpec>,
    pub snr_grid_db: Vec<f64>,
    pub train_size: usize,
    pub test_size: usize,
    pub rho: f64,
    pub seed: u64,
    /// Fixed SNR of the train-size and component sweeps.
    pub sweep_snr_db: f64,
    pub train_sizes: Vec<usize>,
    pub component_grid: Vec<usize>,
    pub cascade_order: Order,
    pub cascade_noise: CascadeNoise,
    pub max_kron_components: usize,
    pub em: EmSettings,
}

impl ExperimentConfig {
    /// Desk-scale defaults: the 24x14 grid with the 50-pilot lattice, 10^4
    /// training and 2*10^3 test samples, K = 16 with (4, 4) for kron and
    /// (4, 12) for the cascaded variants, velocities 0-300 km/h.
    pub fn desk_default() -> Self {
        let mk = |kind: EstimatorKind| -> EstimatorSpec {
            match kind {
                EstimatorKind::Full | EstimatorKind::BToep | EstimatorKind::BCirc => {
                    EstimatorSpec {
                        kind,
                        components: Some(16),
                        components_time: None,
                        components_freq: None,
                    }
                }
                EstimatorKind::Kron => EstimatorSpec {
                    kind,
                    components: None,
                    components_time: Some(4),
                    components_freq: Some(4),
                },
                EstimatorKind::TwoByOne
                | EstimatorKind::TwoByOneToep
                | EstimatorKind::TwoByOneCirc => EstimatorSpec {
                    kind,
                    components: None,
                    components_time: Some(4),
                    components_freq: Some(12),
                },
                EstimatorKind::PdpDps2x1d | EstimatorKind::PdpDpsKron => EstimatorSpec {
                    kind,
                    components: None,
                    components_time: None,
                    components_freq: None,
                },
            }
        };
        ExperimentConfig {
            scenario: ChannelParams {
                n_carriers: 24,
                n_symbols: 14,
                n_paths: 20,
                carrier_freq: 2.1e9,
                carrier_spacing: 15e3,
                symbol_duration: 71.4e-6,
                velocity_range: (0.0, 300.0 / 3.6),
                delay_spread: 2e-6,
                rng_seed: 0, // overwritten by the harness from `seed`
            },
            pilot_carriers: vec![0, 2, 5, 7, 10, 12, 15, 17, 20, 23],
            pilot_symbols: vec![0, 3, 6, 9, 13],
            estimators: EstimatorKind::ALL.iter().map(|&k| mk(k)).collect(),
            snr_grid_db: vec![-10.0, -5.0, 0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0],
            train_size: 10_000,
            test_size: 2_000,
            rho: 0.99,
            seed: 1,
            sweep_snr_db: 10.0,
            train_sizes: vec![100, 1_000, 10_000],
            component_grid: vec![1, 2, 4, 8, 16],
            cascade_order: Order::FreqFirst,
            cascade_noise: CascadeNoise::PosteriorAvg,
            max_kron_components: 1024,
            em: EmSettings {
                max_iters: 15,
                max_iters_1d: 30,
                rel_tol: 1e-5,
                spectral_floor: 1e-8,
            },
        }
    }

    pub fn pattern(&self) -> Result<PilotPattern> {
        PilotPattern::new(
            self.scenario.n_carriers,
            self.scenario.n_symbols,
            self.pilot_carriers.clone(),
            self.pilot_symbols.clone(),
        )
    }

    pub fn validate(&self) -> Result<()> {
        self.scenario.validate()?;
        self.pattern()?;
        if self.snr_grid_db.is_empty() {
            return Err(Error::InvalidParameter("run: snr_grid_db is empty".into()));
        }
        if self.estimators.is_empty() {
            return Err(Error::InvalidParameter("no estimators configured".into()));
        }
        let mut seen = std::collections::HashSet::new();
        for e in &self.estimators {
            e.validate()?;
            if !seen.insert(e.kind) {
                return Err(Error::InvalidParameter(format!(
                    "estimator {} listed twice",
                    e.kind.name()
                )));
            }
        }
        let max_k = self.estimators.iter().map(|e| e.max_k()).max().unwrap_or(1);
        if self.train_size < max_k {
            return Err(Error::InvalidParameter(format!(
                "run: train_size {} below largest component count {max_k}",
                self.train_size
            )));
        }
        if self.test_size == 0 {
            return Err(Error::InvalidParameter("run: test_size must be >= 1".into()));
        }
        if !(self.rho > 0.0 && self.rho <= 1.0) {
            return Err(Error::InvalidParameter("run: rho must lie in (0, 1]".into()));
        }
        if self.train_sizes.is_empty() || self.component_grid.is_empty() {
            return Err(Error::InvalidParameter(
                "run: train_sizes and component_grid must be non-empty".into(),
            ));
        }
        if self.train_sizes.iter().any(|&s| s > self.train_size) {
            return Err(Error::InvalidParameter(
                "run: train_sizes entries cannot exceed train_size".into(),
            ));
        }
        if self.em.max_iters == 0 || self.em.max_iters_1d == 0 {
            return Err(Error::InvalidParameter("em: max_iters must be >= 1".into()));
        }
        if !(self.em.rel_tol > 0.0) || !(self.em.spectral_floor > 0.0) {
            return Err(Error::InvalidParameter(
                "em: rel_tol and spectral_floor must be positive".into(),
            ));
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self> {
        parse_config(text)
    }

    /// Canonical one-line rendering of everything that affects a fit; the
    /// model cache hashes this. The `algo` tag tracks semantic changes of
    /// the fitting code itself so stale caches never resurface.
    pub fn fit_fingerprint(&self) -> String {
        let s = &self.scenario;
        format!(
            "algo=2;nc={};nt={};paths={};fc={:e};df={:e};ts={:e};v={:e}-{:e};ds={:e};seed={};em={},{},{:e},{:e}",
            s.n_carriers,
            s.n_symbols,
            s.n_paths,
            s.carrier_freq,
            s.carrier_spacing,
            s.symbol_duration,
            s.velocity_range.0,
            s.velocity_range.1,
            s.delay_spread,
            self.seed,
            self.em.max_iters,
            self.em.max_iters_1d,
            self.em.rel_tol,
            self.em.spectral_floor,
        )
    }
}

/// Component pairing for sweeps over a single total count `K`: the kron
/// variant uses the largest divisor pair `k_t * k_c = K` with
/// `k_t <= sqrt(K)`, the cascaded variants split the sum as
/// `k_t = max(1, K/4)`, `k_c = max(1, K - k_t)` (the 1:3 ratio of the
/// reference setting).
pub fn pair_counts(kind: EstimatorKind, k: usize) -> (usize, usize) {
    match kind {
        EstimatorKind::Kron => {
            let mut k_t = 1;
            let mut d = 1;
            while d * d <= k {
                if k % d == 0 {
                    k_t = d;
                }
                d += 1;
            }
            (k_t, k / k_t)
        }
        _ => {
            let k_t = (k / 4).max(1);
            let k_c = k.saturating_sub(k_t).max(1);
            (k_t, k_c)
        }
    }
}

fn parse_usize_list(v: &str, path: &str) -> Result<Vec<usize>> {
    v.split(',')
        .map(|t| {
            t.trim()
                .parse::<usize>()
                .map_err(|_| Error::InvalidParameter(format!("{path}: bad integer '{t}'")))
        })
        .collect()
}

fn parse_f64_list(v: &str, path: &str) -> Result<Vec<f64>> {
    v.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| Error::InvalidParameter(format!("{path}: bad number '{t}'")))
        })
        .collect()
}

fn parse_f64(v: &str, path: &str) -> Result<f64> {
    v.trim()
        .parse::<f64>()
        .map_err(|_| Error::InvalidParameter(format!("{path}: bad number '{v}'")))
}

fn parse_usize(v: &str, path: &str) -> Result<usize> {
    v.trim()
        .parse::<usize>()
        .map_err(|_| Error::InvalidParameter(format!("{path}: bad integer '{v}'")))
}

fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::desk_default();
    cfg.estimators.clear();

    #[derive(PartialEq)]
    enum Section {
        None,
        Scenario,
        Pilots,
        Run,
        Em,
        Estimator(EstimatorKind),
    }
    let mut section = Section::None;

    for (lineno, raw) in text.lines().enumerate() {
        let line = match raw.find('#') {
            Some(i) => &raw[..i],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let at = format!("line {}", lineno + 1);
        if let Some(name) = line.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
            let name = name.trim();
            section = match name {
                "scenario" => Section::Scenario,
                "pilots" => Section::Pilots,
                "run" => Section::Run,
                "em" => Section::Em,
                other => {
                    if let Some(est) = other.strip_prefix("estimator ") {
                        let kind = EstimatorKind::parse(est.trim())
                            .map_err(|e| Error::InvalidParameter(format!("{at}: {e}")))?;
                        cfg.estimators.push(EstimatorSpec {
                            kind,
                            components: None,
                            components_time: None,
                            components_freq: None,
                        });
                        Section::Estimator(kind)
                    } else {
                        return Err(Error::InvalidParameter(format!(
                            "{at}: unknown section [{other}]"
                        )));
                    }
                }
            };
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::InvalidParameter(format!("{at}: expected 'key = value', got '{line}'"))
        })?;
        let key = key.trim();
        let value = value.trim();
        match &section {
            Section::None => {
                return Err(Error::InvalidParameter(format!(
                    "{at}: key '{key}' outside any section"
                )))
            }
            Section::Scenario => {
                let path = format!("scenario.{key}");
                match key {
                    "n_carriers" => cfg.scenario.n_carriers = parse_usize(value, &path)?,
                    "n_symbols" => cfg.scenario.n_symbols = parse_usize(value, &path)?,
                    "n_paths" => cfg.scenario.n_paths = parse_usize(value, &path)?,
                    "carrier_freq_hz" => cfg.scenario.carrier_freq = parse_f64(value, &path)?,
                    "carrier_spacing_hz" => {
                        cfg.scenario.carrier_spacing = parse_f64(value, &path)?
                    }
                    "symbol_duration_s" => {
                        cfg.scenario.symbol_duration = parse_f64(value, &path)?
                    }
                    "velocity_min_mps" => {
                        cfg.scenario.velocity_range.0 = parse_f64(value, &path)?
                    }
                    "velocity_max_mps" => {
                        cfg.scenario.velocity_range.1 = parse_f64(value, &path)?
                    }
                    "delay_spread_s" => cfg.scenario.delay_spread = parse_f64(value, &path)?,
                    _ => {
                        return Err(Error::InvalidParameter(format!(
                            "{at}: unknown key '{path}'"
                        )))
                    }
                }
            }
            Section::Pilots => match key {
                "carriers" => cfg.pilot_carriers = parse_usize_list(value, "pilots.carriers")?,
                "symbols" => cfg.pilot_symbols = parse_usize_list(value, "pilots.symbols")?,
                _ => {
                    return Err(Error::InvalidParameter(format!(
                        "{at}: unknown key 'pilots.{key}'"
                    )))
                }
            },
            Section::Run => {
                let path = format!("run.{key}");
                match key {
                    "snr_grid_db" => cfg.snr_grid_db = parse_f64_list(value, &path)?,
                    "train_size" => cfg.train_size = parse_usize(value, &path)?,
                    "test_size" => cfg.test_size = parse_usize(value, &path)?,
                    "rho" => cfg.rho = parse_f64(value, &path)?,
                    "seed" => {
                        cfg.seed = value.parse::<u64>().map_err(|_| {
                            Error::InvalidParameter(format!("{path}: bad integer '{value}'"))
                        })?
                    }
                    "sweep_snr_db" => cfg.sweep_snr_db = parse_f64(value, &path)?,
                    "train_sizes" => cfg.train_sizes = parse_usize_list(value, &path)?,
                    "component_grid" => cfg.component_grid = parse_usize_list(value, &path)?,
                    "max_kron_components" => {
                        cfg.max_kron_components = parse_usize(value, &path)?
                    }
                    "cascade_order" => {
                        cfg.cascade_order = match value {
                            "freq_first" => Order::FreqFirst,
                            "time_first" => Order::TimeFirst,
                            _ => {
                                return Err(Error::InvalidParameter(format!(
                                    "{path}: expected freq_first or time_first"
                                )))
                            }
                        }
                    }
                    "sigma2_eff" => {
                        cfg.cascade_noise = match value {
                            "posterior_avg" => CascadeNoise::PosteriorAvg,
                            "raw_sigma" => CascadeNoise::RawSigma,
                            _ => {
                                return Err(Error::InvalidParameter(format!(
                                    "{path}: expected posterior_avg or raw_sigma"
                                )))
                            }
                        }
                    }
                    _ => {
                        return Err(Error::InvalidParameter(format!(
                            "{at}: unknown key '{path}'"
                        )))
                    }
                }
            }
            Section::Em => {
                let path = format!("em.{key}");
                match key {
                    "max_iters" => cfg.em.max_iters = parse_usize(value, &path)?,
                    "max_iters_1d" => cfg.em.max_iters_1d = parse_usize(value, &path)?,
                    "rel_tol" => cfg.em.rel_tol = parse_f64(value, &path)?,
                    "spectral_floor" => cfg.em.spectral_floor = parse_f64(value, &path)?,
                    _ => {
                        return Err(Error::InvalidParameter(format!(
                            "{at}: unknown key '{path}'"
                        )))
                    }
                }
            }
            Section::Estimator(kind) => {
                let spec = cfg
                    .estimators
                    .iter_mut()
                    .find(|e| e.kind == *kind)
                    .expect("section just pushed");
                let path = format!("estimator {}.{key}", kind.name());
                match key {
                    "components" => spec.components = Some(parse_usize(value, &path)?),
                    "components_time" => {
                        spec.components_time = Some(parse_usize(value, &path)?)
                    }
                    "components_freq" => {
                        spec.components_freq = Some(parse_usize(value, &path)?)
                    }
                    _ => {
                        return Err(Error::InvalidParameter(format!(
                            "{at}: unknown key '{path}'"
                        )))
                    }
                }
            }
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Render the desk-scale default configuration in the file format.
pub fn desk_default_text() -> String {
    let cfg = ExperimentConfig::desk_default();
    let s = &cfg.scenario;
    let mut out = String::new();
    out.push_str("# gmmce benchmark configuration (desk-scale defaults)\n\n[scenario]\n");
    out.push_str(&format!("n_carriers = {}\n", s.n_carriers));
    out.push_str(&format!("n_symbols = {}\n", s.n_symbols));
    out.push_str(&format!("n_paths = {}\n", s.n_paths));
    out.push_str(&format!("carrier_freq_hz = {:e}\n", s.carrier_freq));
    out.push_str(&format!("carrier_spacing_hz = {:e}\n", s.carrier_spacing));
    out.push_str(&format!("symbol_duration_s = {:e}\n", s.symbol_duration));
    out.push_str(&format!("velocity_min_mps = {}\n", s.velocity_range.0));
    out.push_str(&format!("velocity_max_mps = {}\n", s.velocity_range.1));
    out.push_str(&format!("delay_spread_s = {:e}\n", s.delay_spread));
    out.push_str("\n[pilots]\n");
    let join = |v: &[usize]| {
        v.iter()
            .map(|x| x.to_string())
            .collect::<Vec<_>>()
            .join(",")
    };
    out.push_str(&format!("carriers = {}\n", join(&cfg.pilot_carriers)));
    out.push_str(&format!("symbols = {}\n", join(&cfg.pilot_symbols)));
    out.push_str("\n[run]\n");
    out.push_str(&format!(
        "snr_grid_db = {}\n",
        cfg.snr_grid_db
            .iter()
            .map(|x| x.to_string())
            .collect::<Vec<_>>()
            .join(",")
    ));
    out.push_str(&format!("train_size = {}\n", cfg.train_size));
    out.push_str(&format!("test_size = {}\n", cfg.test_size));
    out.push_str(&format!("rho = {}\n", cfg.rho));
    out.push_str(&format!("seed = {}\n", cfg.seed));
    out.push_str(&format!("sweep_snr_db = {}\n", cfg.sweep_snr_db));
    out.push_str(&format!("train_sizes = {}\n", join(&cfg.train_sizes)));
    out.push_str(&format!("component_grid = {}\n", join(&cfg.component_grid)));
    out.push_str("cascade_order = freq_first\nsigma2_eff = posterior_avg\n");
    out.push_str(&format!("max_kron_components = {}\n", cfg.max_kron_components));
    out.push_str("\n[em]\n");
    out.push_str(&format!("max_iters = {}\n", cfg.em.max_iters));
    out.push_str(&format!("max_iters_1d = {}\n", cfg.em.max_iters_1d));
    out.push_str(&format!("rel_tol = {:e}\n", cfg.em.rel_tol));
    out.push_str(&format!("spectral_floor = {:e}\n", cfg.em.spectral_floor));
    for e in &cfg.estimators {
        out.push_str(&format!("\n[estimator {}]\n", e.kind.name()));
        if let Some(k) = e.components {
            out.push_str(&format!("components = {k}\n"));
        }
        if let Some(k) = e.components_time {
            out.push_str(&format!("components_time = {k}\n"));
        }
        if let Some(k) = e.components_freq {
            out.push_str(&format!("components_freq = {k}\n"));
        }
    }
    out
}
