//! Synthetic doubly-selective channel generation, pilot observation, and
//! genie power-delay-profile / Doppler-spectrum covariances.
//!
//! The generator is a parameterized multipath model: `L` paths with an
//! exponential power profile over delay, uniform arrival angles, Rayleigh
//! gains, and a linear delay drift proportional to the mobile velocity. The
//! grid entry for carrier `c` and time symbol `t` is
//!
//! `H[c,t] = sum_l G_l * exp(-2*pi*j * f(c) * tau(l,t))`
//!
//! with `f(c) = f_carrier + (c - (N_c-1)/2) * spacing` and
//! `tau(l,t) = tau_l - (v * cos(theta_l) / c0) * t * T_s`.

use std::f64::consts::PI;
use std::io::{Read, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::fft::Fft1d;
use crate::rng::{standard_complex, stream_rng};
use crate::structured_cov::CovarianceModel;

/// Speed of light in m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Delays are drawn uniformly on `[0, DELAY_SPAN_FACTOR * delay_spread]`
/// and weighted by `exp(-tau / delay_spread)`.
const DELAY_SPAN_FACTOR: f64 = 6.0;

/// Complex time-frequency response, `n_c` carriers by `n_t` time symbols.
///
/// Storage is column-major, so `as_slice()` is exactly the column-stacked
/// vectorization `h = vec(H)`: index `(c, t)` lives at `t * n_c + c`.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelGrid {
    data: DMatrix<Complex64>,
}

impl ChannelGrid {
    pub fn from_matrix(data: DMatrix<Complex64>) -> Self {
        ChannelGrid { data }
    }

    pub fn from_vec_slice(n_c: usize, n_t: usize, v: &[Complex64]) -> Result<Self> {
        if v.len() != n_c * n_t {
            return Err(Error::ShapeMismatch(format!(
                "grid of {}x{} needs {} entries, got {}",
                n_c,
                n_t,
                n_c * n_t,
                v.len()
            )));
        }
        Ok(ChannelGrid {
            data: DMatrix::from_column_slice(n_c, n_t, v),
        })
    }

    pub fn zeros(n_c: usize, n_t: usize) -> Self {
        ChannelGrid {
            data: DMatrix::zeros(n_c, n_t),
        }
    }

    pub fn n_c(&self) -> usize {
        self.data.nrows()
    }

    pub fn n_t(&self) -> usize {
        self.data.ncols()
    }

    pub fn entry(&self, c: usize, t: usize) -> Complex64 {
        self.data[(c, t)]
    }

    pub fn entry_mut(&mut self, c: usize, t: usize) -> &mut Complex64 {
        &mut self.data[(c, t)]
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.data
    }

    /// The vectorization `vec(H)` as a borrowed slice (no copy).
    pub fn vec_slice(&self) -> &[Complex64] {
        self.data.as_slice()
    }

    /// The vectorization `vec(H)` as an owned vector.
    pub fn to_vector(&self) -> DVector<Complex64> {
        DVector::from_column_slice(self.data.as_slice())
    }

    /// Column `i`: the frequency response at time symbol `i`.
    pub fn freq_column(&self, i: usize) -> DVector<Complex64> {
        self.data.column(i).into_owned()
    }

    /// Row `k` transposed: the time response of carrier `k`.
    pub fn time_row(&self, k: usize) -> DVector<Complex64> {
        self.data.row(k).transpose()
    }

    pub fn scale(&mut self, s: f64) {
        self.data.iter_mut().for_each(|v| *v *= s);
    }

    /// `||vec(H)||^2`.
    pub fn energy(&self) -> f64 {
        self.data.iter().map(|v| v.norm_sqr()).sum()
    }
}

/// Parameters of the synthetic multipath/Doppler channel generator.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelParams {
    pub n_carriers: usize,
    pub n_symbols: usize,
    pub n_paths: usize,
    /// Carrier frequency in Hz.
    pub carrier_freq: f64,
    /// Subcarrier spacing in Hz.
    pub carrier_spacing: f64,
    /// OFDM symbol duration in s.
    pub symbol_duration: f64,
    /// Mobile velocity range `[v_min, v_max]` in m/s; one velocity is drawn
    /// per generated grid.
    pub velocity_range: (f64, f64),
    /// Delay spread of the exponential power profile in s.
    pub delay_spread: f64,
    /// Seed of the dataset-level generator.
    pub rng_seed: u64,
}

impl ChannelParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_carriers == 0 || self.n_symbols == 0 {
            return Err(Error::InvalidParameter(
                "grid dimensions must be positive".into(),
            ));
        }
        if self.n_paths == 0 {
            return Err(Error::InvalidParameter("need at least one path".into()));
        }
        if !(self.carrier_spacing > 0.0) {
            return Err(Error::InvalidParameter(
                "carrier spacing must be positive".into(),
            ));
        }
        if !(self.symbol_duration > 0.0) {
            return Err(Error::InvalidParameter(
                "symbol duration must be positive".into(),
            ));
        }
        let (lo, hi) = self.velocity_range;
        if !(0.0 <= lo && lo <= hi) {
            return Err(Error::InvalidParameter(
                "velocity range must satisfy 0 <= v_min <= v_max".into(),
            ));
        }
        if !(self.delay_spread >= 0.0) {
            return Err(Error::InvalidParameter(
                "delay spread must be nonnegative".into(),
            ));
        }
        Ok(())
    }
}

/// Separable lattice of pilot positions inside an `n_c x n_t` grid.
///
/// The induced selection operator is `A = A_t (x) A_c`: output element
/// `(i, j)` (flat index `i * n_pc + j`) reads grid entry
/// `(carriers[j], symbols[i])`. It is realized as an index gather and only
/// materialized densely for tests.
#[derive(Clone, Debug, PartialEq)]
pub struct PilotPattern {
    n_c: usize,
    n_t: usize,
    carriers: Vec<usize>,
    symbols: Vec<usize>,
}

impl PilotPattern {
    pub fn new(
        n_c: usize,
        n_t: usize,
        carriers: Vec<usize>,
        symbols: Vec<usize>,
    ) -> Result<Self> {
        fn check(idx: &[usize], bound: usize, what: &str) -> Result<()> {
            if idx.is_empty() {
                return Err(Error::InvalidParameter(format!("empty pilot {what} set")));
            }
            for w in idx.windows(2) {
                if w[0] >= w[1] {
                    return Err(Error::InvalidParameter(format!(
                        "pilot {what} indices must be strictly increasing"
                    )));
                }
            }
            if *idx.last().unwrap() >= bound {
                return Err(Error::InvalidParameter(format!(
                    "pilot {what} index {} out of bounds {}",
                    idx.last().unwrap(),
                    bound
                )));
            }
            Ok(())
        }
        check(&carriers, n_c, "carrier")?;
        check(&symbols, n_t, "symbol")?;
        Ok(PilotPattern {
            n_c,
            n_t,
            carriers,
            symbols,
        })
    }

    /// Pattern covering every grid position.
    pub fn full(n_c: usize, n_t: usize) -> Self {
        PilotPattern {
            n_c,
            n_t,
            carriers: (0..n_c).collect(),
            symbols: (0..n_t).collect(),
        }
    }

    pub fn n_c(&self) -> usize {
        self.n_c
    }

    pub fn n_t(&self) -> usize {
        self.n_t
    }

    pub fn carriers(&self) -> &[usize] {
        &self.carriers
    }

    pub fn symbols(&self) -> &[usize] {
        &self.symbols
    }

    pub fn n_pc(&self) -> usize {
        self.carriers.len()
    }

    pub fn n_pt(&self) -> usize {
        self.symbols.len()
    }

    pub fn n_pilots(&self) -> usize {
        self.carriers.len() * self.symbols.len()
    }

    /// Flat indices into `vec(H)` in `A_t (x) A_c` row order.
    pub fn flat_indices(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.n_pilots());
        for &t in &self.symbols {
            for &c in &self.carriers {
                out.push(t * self.n_c + c);
            }
        }
        out
    }

    /// Dense `{0,1}` selection matrix; test/interop surface only.
    pub fn dense_selection(&self) -> DMatrix<f64> {
        let idx = self.flat_indices();
        let mut a = DMatrix::zeros(idx.len(), self.n_c * self.n_t);
        for (row, &col) in idx.iter().enumerate() {
            a[(row, col)] = 1.0;
        }
        a
    }

    /// Gather `A x` from a vectorized grid.
    pub fn gather(&self, h: &[Complex64]) -> DVector<Complex64> {
        let idx = self.flat_indices();
        DVector::from_iterator(idx.len(), idx.iter().map(|&i| h[i]))
    }

    /// Scatter `A^H y` back onto a zeroed grid vector.
    pub fn scatter(&self, y: &DVector<Complex64>) -> DVector<Complex64> {
        let mut out = DVector::zeros(self.n_c * self.n_t);
        for (row, &i) in self.flat_indices().iter().enumerate() {
            out[i] = y[row];
        }
        out
    }
}

/// Noisy pilot observation `y = A vec(H) + n`, `n ~ CN(0, sigma^2 I)`.
#[derive(Clone, Debug)]
pub struct Observation {
    pub y: DVector<Complex64>,
    pub noise_variance: f64,
}

/// Generate one channel grid at a fixed velocity.
///
/// Draw order per path: delay, angle, gain (real, imaginary), so results are
/// reproducible from the generator state alone.
pub fn generate_channel<R: Rng>(
    params: &ChannelParams,
    velocity: f64,
    rng: &mut R,
) -> Result<ChannelGrid> {
    params.validate()?;
    let (lo, hi) = params.velocity_range;
    if !(lo <= velocity && velocity <= hi) {
        return Err(Error::InvalidParameter(format!(
            "velocity {velocity} outside configured range [{lo}, {hi}]"
        )));
    }

    let l = params.n_paths;
    let span = DELAY_SPAN_FACTOR * params.delay_spread;

    let mut delays = Vec::with_capacity(l);
    let mut drift = Vec::with_capacity(l);
    let mut gains = Vec::with_capacity(l);
    let mut total_power = 0.0;
    for _ in 0..l {
        let tau: f64 = if span > 0.0 {
            rng.gen_range(0.0..span)
        } else {
            0.0
        };
        let theta: f64 = rng.gen_range(0.0..2.0 * PI);
        let g = standard_complex(rng);
        let power = if params.delay_spread > 0.0 {
            (-tau / params.delay_spread).exp()
        } else {
            1.0
        };
        total_power += power;
        delays.push(tau);
        drift.push(velocity * theta.cos() / SPEED_OF_LIGHT);
        gains.push(g * power.sqrt());
    }
    // Normalize so the ensemble-average energy per grid entry is one.
    let norm = 1.0 / total_power.sqrt();
    for g in gains.iter_mut() {
        *g *= norm;
    }

    let n_c = params.n_carriers;
    let n_t = params.n_symbols;
    let mut grid = DMatrix::<Complex64>::zeros(n_c, n_t);
    let f_mid = params.carrier_freq;
    let df = params.carrier_spacing;
    let c_off = (n_c as f64 - 1.0) / 2.0;

    for (li, (&tau0, (&nu, &g))) in delays
        .iter()
        .zip(drift.iter().zip(gains.iter()))
        .enumerate()
    {
        let _ = li;
        for t in 0..n_t {
            let tau = tau0 - nu * (t as f64) * params.symbol_duration;
            // Phase at carrier c: -2*pi*(f_mid + (c - c_off)*df)*tau.
            // Walk carriers with a running multiply by exp(-2*pi*j*df*tau).
            let base = -2.0 * PI * (f_mid - c_off * df) * tau;
            let step = -2.0 * PI * df * tau;
            let mut ph = Complex64::new(base.cos(), base.sin());
            let rot = Complex64::new(step.cos(), step.sin());
            for c in 0..n_c {
                grid[(c, t)] += g * ph;
                ph *= rot;
            }
        }
    }
    Ok(ChannelGrid::from_matrix(grid))
}

/// Generate `count` grids with per-grid velocities drawn uniformly from the
/// configured range. Grid `i` uses generator stream `i` of the params seed,
/// so any sample is reproducible in isolation and generation may be
/// parallelized by splitting index ranges.
pub fn generate_dataset(params: &ChannelParams, count: usize) -> Result<Vec<ChannelGrid>> {
    params.validate()?;
    (0..count)
        .map(|i| {
            let mut rng = stream_rng(params.rng_seed, i as u64);
            let (lo, hi) = params.velocity_range;
            let v = if hi > lo { rng.gen_range(lo..=hi) } else { lo };
            generate_channel(params, v, &mut rng)
        })
        .collect()
}

/// Scale all grids by one global factor so the empirical mean of
/// `||vec(H)||^2` equals `n_c * n_t`. Returns the applied scale.
pub fn normalize_dataset(grids: &mut [ChannelGrid]) -> Result<f64> {
    if grids.is_empty() {
        return Err(Error::DegenerateData("empty dataset".into()));
    }
    let n = grids[0].n_c() * grids[0].n_t();
    let mean_energy: f64 =
        grids.iter().map(|g| g.energy()).sum::<f64>() / grids.len() as f64;
    if mean_energy <= 0.0 {
        return Err(Error::DegenerateData("all-zero dataset".into()));
    }
    let scale = (n as f64 / mean_energy).sqrt();
    for g in grids.iter_mut() {
        g.scale(scale);
    }
    Ok(scale)
}

/// Observe a grid through a pilot pattern with white complex Gaussian noise.
/// The SNR convention is `1 / sigma^2` for unit-energy-per-entry channels.
pub fn apply_pilots<R: Rng>(
    h: &ChannelGrid,
    pattern: &PilotPattern,
    sigma2: f64,
    rng: &mut R,
) -> Result<Observation> {
    if !(sigma2 > 0.0) || !sigma2.is_finite() {
        return Err(Error::InvalidParameter(
            "noise variance must be positive and finite".into(),
        ));
    }
    if pattern.n_c() != h.n_c() || pattern.n_t() != h.n_t() {
        return Err(Error::ShapeMismatch(format!(
            "pattern grid {}x{} vs channel {}x{}",
            pattern.n_c(),
            pattern.n_t(),
            h.n_c(),
            h.n_t()
        )));
    }
    let mut y = pattern.gather(h.vec_slice());
    let s = sigma2.sqrt();
    for v in y.iter_mut() {
        *v += standard_complex(rng) * s;
    }
    Ok(Observation {
        y,
        noise_variance: sigma2,
    })
}

/// Instantaneous genie power delay profile of time symbol `i`:
/// squared magnitudes of the unitary inverse DFT of column `i`.
pub fn genie_pdp(h: &ChannelGrid, i: usize) -> Result<Vec<f64>> {
    if i >= h.n_t() {
        return Err(Error::InvalidParameter(format!(
            "symbol index {i} out of bounds {}",
            h.n_t()
        )));
    }
    let fft = Fft1d::new(h.n_c());
    let mut buf: Vec<Complex64> = h.freq_column(i).iter().copied().collect();
    fft.inverse(&mut buf);
    Ok(buf.iter().map(|v| v.norm_sqr()).collect())
}

/// Instantaneous genie Doppler spectrum of carrier `k`:
/// squared magnitudes of the unitary forward DFT of row `k`.
pub fn genie_dps(h: &ChannelGrid, k: usize) -> Result<Vec<f64>> {
    if k >= h.n_c() {
        return Err(Error::InvalidParameter(format!(
            "carrier index {k} out of bounds {}",
            h.n_c()
        )));
    }
    let fft = Fft1d::new(h.n_t());
    let mut buf: Vec<Complex64> = h.time_row(k).iter().copied().collect();
    fft.forward(&mut buf);
    Ok(buf.iter().map(|v| v.norm_sqr()).collect())
}

fn check_spectrum(p: &[f64]) -> Result<()> {
    if p.is_empty() {
        return Err(Error::InvalidParameter("empty profile".into()));
    }
    if p.iter().any(|&v| v < 0.0 || !v.is_finite()) {
        return Err(Error::InvalidParameter(
            "profile entries must be finite and nonnegative".into(),
        ));
    }
    Ok(())
}

/// Frequency covariance induced by a power delay profile via the
/// Wiener-Khinchin relation `C = F diag(p) F^H`.
///
/// The stored circulant convention is `F^H diag(c) F`, so the profile is
/// index-reversed; the eigenvalue multiset is exactly `p`.
pub fn pdp_to_cov(p: &[f64]) -> Result<CovarianceModel> {
    check_spectrum(p)?;
    let n = p.len();
    let spectrum: Vec<f64> = (0..n).map(|k| p[(n - k) % n]).collect();
    Ok(CovarianceModel::Circulant1D { spectrum, dim: n })
}

/// Time covariance induced by a Doppler spectrum: `C = F^H diag(d) F`.
pub fn dps_to_cov(d: &[f64]) -> Result<CovarianceModel> {
    check_spectrum(d)?;
    Ok(CovarianceModel::Circulant1D {
        spectrum: d.to_vec(),
        dim: d.len(),
    })
}

const DATASET_MAGIC: &[u8; 4] = b"CHDS";
const DATASET_VERSION: u32 = 1;

/// Write a dataset file: magic, version, `n_c`, `n_t`, sample count as
/// little-endian u32, then each grid as interleaved re/im f64 pairs in
/// column-major order.
pub fn save_dataset<P: AsRef<Path>>(path: P, grids: &[ChannelGrid]) -> Result<()> {
    if grids.is_empty() {
        return Err(Error::DegenerateData("refusing to write empty dataset".into()));
    }
    let n_c = grids[0].n_c();
    let n_t = grids[0].n_t();
    if grids.iter().any(|g| g.n_c() != n_c || g.n_t() != n_t) {
        return Err(Error::ShapeMismatch("mixed grid sizes in dataset".into()));
    }
    let file = std::fs::File::create(path)?;
    let mut w = std::io::BufWriter::new(file);
    w.write_all(DATASET_MAGIC)?;
    w.write_all(&DATASET_VERSION.to_le_bytes())?;
    w.write_all(&(n_c as u32).to_le_bytes())?;
    w.write_all(&(n_t as u32).to_le_bytes())?;
    w.write_all(&(grids.len() as u32).to_le_bytes())?;
    for g in grids {
        for v in g.vec_slice() {
            w.write_all(&v.re.to_le_bytes())?;
            w.write_all(&v.im.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Load a dataset file written by [`save_dataset`] (or produced externally
/// in the same layout).
pub fn load_dataset<P: AsRef<Path>>(path: P) -> Result<Vec<ChannelGrid>> {
    let file = std::fs::File::open(path)?;
    let mut r = std::io::BufReader::new(file);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != DATASET_MAGIC {
        return Err(Error::Format("bad dataset magic".into()));
    }
    let mut u32buf = [0u8; 4];
    let mut read_u32 = |r: &mut dyn Read| -> Result<u32> {
        r.read_exact(&mut u32buf)?;
        Ok(u32::from_le_bytes(u32buf))
    };
    let version = read_u32(&mut r)?;
    if version != DATASET_VERSION {
        return Err(Error::Format(format!("unsupported dataset version {version}")));
    }
    let n_c = read_u32(&mut r)? as usize;
    let n_t = read_u32(&mut r)? as usize;
    let count = read_u32(&mut r)? as usize;
    if n_c == 0 || n_t == 0 {
        return Err(Error::Format("zero grid dimension in dataset header".into()));
    }
    let mut grids = Vec::with_capacity(count);
    let mut f64buf = [0u8; 8];
    for _ in 0..count {
        let mut v = Vec::with_capacity(n_c * n_t);
        for _ in 0..n_c * n_t {
            r.read_exact(&mut f64buf)?;
            let re = f64::from_le_bytes(f64buf);
            r.read_exact(&mut f64buf)?;
            let im = f64::from_le_bytes(f64buf);
            v.push(Complex64::new(re, im));
        }
        grids.push(ChannelGrid::from_vec_slice(n_c, n_t, &v)?);
    }
    // Trailing bytes indicate a truncated/corrupt writer; a short file errors
    // out in read_exact above.
    let mut probe = [0u8; 1];
    match r.read(&mut probe) {
        Ok(0) => {}
        Ok(_) => return Err(Error::Format("trailing bytes after dataset payload".into())),
        Err(e) => return Err(Error::Io(e)),
    }
    Ok(grids)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn desk_params(seed: u64) -> ChannelParams {
        ChannelParams {
            n_carriers: 24,
            n_symbols: 14,
            n_paths: 20,
            carrier_freq: 2.1e9,
            carrier_spacing: 15e3,
            symbol_duration: 71.4e-6,
            velocity_range: (0.0, 83.0),
            delay_spread: 1e-6,
            rng_seed: seed,
        }
    }

    #[test]
    fn single_static_path_at_zero_delay_is_all_ones() {
        // With one path, zero velocity and zero delay spread the exponential
        // reduces to 1; the unit-power normalization leaves |G| = |g| with
        // g ~ CN(0,1). Force the gain by post-dividing.
        let params = ChannelParams {
            n_paths: 1,
            velocity_range: (0.0, 0.0),
            delay_spread: 0.0,
            ..desk_params(3)
        };
        let mut rng = stream_rng(3, 0);
        let h = generate_channel(&params, 0.0, &mut rng).unwrap();
        let g = h.entry(0, 0);
        assert!(g.norm() > 1e-6);
        for c in 0..h.n_c() {
            for t in 0..h.n_t() {
                assert!((h.entry(c, t) - g).norm() < 1e-12 * g.norm());
            }
        }
    }

    #[test]
    fn zero_velocity_is_time_invariant() {
        let params = ChannelParams {
            velocity_range: (0.0, 0.0),
            ..desk_params(11)
        };
        let mut rng = stream_rng(11, 5);
        let h = generate_channel(&params, 0.0, &mut rng).unwrap();
        let first = h.freq_column(0);
        let scale = first.norm();
        for t in 1..h.n_t() {
            let col = h.freq_column(t);
            assert!((col - &first).norm() < 1e-12 * scale, "column {t} differs");
        }
    }

    #[test]
    fn frequency_correlation_decreases_with_lag() {
        // Monte-Carlo oracle: estimate E[H_{c,t} conj(H_{c+lag,t})] over many
        // draws; exponential delay profiles decorrelate with carrier lag.
        let params = desk_params(7);
        let n_draws = 10_000;
        let mut corr = [Complex64::default(); 3]; // lags 0, 1, 8
        for i in 0..n_draws {
            let mut rng = stream_rng(7, i);
            let h = generate_channel(&params, 0.0, &mut rng).unwrap();
            corr[0] += h.entry(0, 0) * h.entry(0, 0).conj();
            corr[1] += h.entry(0, 0) * h.entry(1, 0).conj();
            corr[2] += h.entry(0, 0) * h.entry(8, 0).conj();
        }
        let c0 = corr[0].norm();
        let c1 = corr[1].norm();
        let c8 = corr[2].norm();
        assert!(c1 < c0, "lag-1 {c1} vs lag-0 {c0}");
        assert!(c8 < c1, "lag-8 {c8} vs lag-1 {c1}");
    }

    #[test]
    fn normalize_scales_to_target() {
        let n = 6 * 4;
        // One grid with ||h||^2 = 4 * n  ->  scale 1/2.
        let v: Vec<Complex64> = (0..n).map(|_| Complex64::new(2.0, 0.0)).collect();
        let mut grids = vec![ChannelGrid::from_vec_slice(6, 4, &v).unwrap()];
        let s = normalize_dataset(&mut grids).unwrap();
        assert!((s - 0.5).abs() < 1e-14);
        assert!((grids[0].energy() - n as f64).abs() < 1e-10);

        // Already normalized -> scale 1, idempotent.
        let s2 = normalize_dataset(&mut grids).unwrap();
        assert!((s2 - 1.0).abs() < 1e-12);

        // Two grids with energies {1, 3} * n -> scale 1/sqrt(2).
        let a: Vec<Complex64> = (0..n).map(|_| Complex64::new(1.0, 0.0)).collect();
        let b: Vec<Complex64> = (0..n).map(|_| Complex64::new(3f64.sqrt(), 0.0)).collect();
        let mut grids = vec![
            ChannelGrid::from_vec_slice(6, 4, &a).unwrap(),
            ChannelGrid::from_vec_slice(6, 4, &b).unwrap(),
        ];
        let s3 = normalize_dataset(&mut grids).unwrap();
        assert!((s3 - 0.5f64.sqrt()).abs() < 1e-14, "scale {s3}");
    }

    #[test]
    fn normalize_rejects_zero_data() {
        let mut grids = vec![ChannelGrid::zeros(3, 2)];
        assert!(matches!(
            normalize_dataset(&mut grids),
            Err(Error::DegenerateData(_))
        ));
    }

    #[test]
    fn pilot_lattice_counts_match() {
        let p = PilotPattern::new(
            24,
            14,
            vec![0, 2, 5, 7, 10, 12, 15, 17, 20, 23],
            vec![0, 3, 6, 9, 13],
        )
        .unwrap();
        assert_eq!(p.n_pilots(), 50);
        assert_eq!(p.n_pc(), 10);
        assert_eq!(p.n_pt(), 5);
    }

    #[test]
    fn gather_matches_dense_selection() {
        let p = PilotPattern::new(4, 3, vec![1, 3], vec![0, 2]).unwrap();
        let mut rng = stream_rng(9, 0);
        let v: Vec<Complex64> = (0..12).map(|_| standard_complex(&mut rng)).collect();
        let gathered = p.gather(&v);
        let a = p.dense_selection();
        for (row, y) in gathered.iter().enumerate() {
            let mut want = Complex64::default();
            for (col, &x) in v.iter().enumerate() {
                want += Complex64::new(a[(row, col)], 0.0) * x;
            }
            assert!((y - want).norm() < 1e-15);
        }
    }

    #[test]
    fn apply_pilots_noiseless_limit_selects() {
        let mut rng = stream_rng(13, 0);
        let v: Vec<Complex64> = (0..12).map(|_| standard_complex(&mut rng)).collect();
        let h = ChannelGrid::from_vec_slice(4, 3, &v).unwrap();
        let p = PilotPattern::full(4, 3);
        let obs = apply_pilots(&h, &p, 1e-300, &mut rng).unwrap();
        for (a, b) in obs.y.iter().zip(v.iter()) {
            assert!((a - b).norm() < 1e-100);
        }
    }

    #[test]
    fn genie_pdp_parseval_and_impulse() {
        let mut rng = stream_rng(21, 0);
        let v: Vec<Complex64> = (0..24 * 2).map(|_| standard_complex(&mut rng)).collect();
        let h = ChannelGrid::from_vec_slice(24, 2, &v).unwrap();
        let p = genie_pdp(&h, 1).unwrap();
        let col_energy: f64 = h.freq_column(1).iter().map(|z| z.norm_sqr()).sum();
        let sum: f64 = p.iter().sum();
        assert!((sum - col_energy).abs() < 1e-10 * col_energy);

        // all-ones column -> impulse of height n at delay bin 0
        let n = 8;
        let ones: Vec<Complex64> = (0..n).map(|_| Complex64::new(1.0, 0.0)).collect();
        let h1 = ChannelGrid::from_vec_slice(n, 1, &ones).unwrap();
        let p1 = genie_pdp(&h1, 0).unwrap();
        assert!((p1[0] - n as f64).abs() < 1e-12);
        for v in &p1[1..] {
            assert!(v.abs() < 1e-20);
        }
    }

    #[test]
    fn genie_dps_parseval() {
        let mut rng = stream_rng(22, 0);
        let v: Vec<Complex64> = (0..6 * 14).map(|_| standard_complex(&mut rng)).collect();
        let h = ChannelGrid::from_vec_slice(6, 14, &v).unwrap();
        for k in 0..6 {
            let d = genie_dps(&h, k).unwrap();
            let row_energy: f64 = h.time_row(k).iter().map(|z| z.norm_sqr()).sum();
            let sum: f64 = d.iter().sum();
            assert!((sum - row_energy).abs() < 1e-10 * row_energy.max(1e-30));
        }
    }

    #[test]
    fn dataset_roundtrip_is_bitwise() {
        let params = desk_params(17);
        let grids = generate_dataset(&params, 5).unwrap();
        let dir = std::env::temp_dir().join("gmmce_test_ds");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("roundtrip.chd");
        save_dataset(&path, &grids).unwrap();
        let loaded = load_dataset(&path).unwrap();
        assert_eq!(grids.len(), loaded.len());
        for (a, b) in grids.iter().zip(loaded.iter()) {
            assert_eq!(a.vec_slice(), b.vec_slice());
        }
        std::fs::remove_file(&path).unwrap();
    }

    #[test]
    fn dataset_rejects_bad_magic() {
        let dir = std::env::temp_dir().join("gmmce_test_ds");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("bad.chd");
        std::fs::write(&path, b"NOPE0000").unwrap();
        assert!(matches!(load_dataset(&path), Err(Error::Format(_))));
        std::fs::remove_file(&path).unwrap();
    }

    #[test]
    fn generation_is_reproducible_per_stream() {
        let params = desk_params(99);
        let a = generate_dataset(&params, 3).unwrap();
        let b = generate_dataset(&params, 3).unwrap();
        for (x, y) in a.iter().zip(b.iter()) {
            assert_eq!(x.vec_slice(), y.vec_slice());
        }
    }
}
