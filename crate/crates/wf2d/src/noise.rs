//! Stochastic forcing layer.
//!
//! Two driving regimes: a divergence-free spectral Ornstein-Uhlenbeck field
//! `z` (additive), and a scalar geometric Brownian factor `Υ = e^B`
//! (multiplicative). Both are sampled on a fixed time grid with exact
//! Gaussian transitions, so Monte Carlo moments can be checked against
//! closed-form oracles without discretization bias. Threshold stopping times
//! cap the usable window; causal time mollification preserves adaptedness.

use crate::error::{Error, Result};
use crate::field::{Components, TorusField};
use crate::timegrid::TimeGrid;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Distribution;
use rand_distr::StandardNormal;

/// Margin in the spectral decay condition; kept small and configurable.
pub const DEFAULT_SIGMA_TILDE: f64 = 0.1;
/// Embedding constant used in the size thresholds.
pub const DEFAULT_SOBOLEV_CONST: f64 = 1.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Regime {
    Additive,
    Multiplicative,
}

impl Regime {
    pub fn as_str(self) -> &'static str {
        match self {
            Regime::Additive => "additive",
            Regime::Multiplicative => "multiplicative",
        }
    }
}

impl std::str::FromStr for Regime {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "additive" => Ok(Regime::Additive),
            "multiplicative" => Ok(Regime::Multiplicative),
            other => Err(Error::Config(format!(
                "regime must be \"additive\" or \"multiplicative\", got \"{other}\""
            ))),
        }
    }
}

/// Per-mode forcing amplitudes `g_k = |k|^{-β_g}` on `0 < |k|_∞ ≤ band`.
///
/// The decay exponent must satisfy `β_g > 3 - m + 2σ̃` so that the weighted
/// trace `Σ_k |k|^{2(2-m+2σ̃)} g_k²` stays summable under 2-D mode counting.
#[derive(Clone, Copy, Debug)]
pub struct NoiseSpectrum {
    beta_g: f64,
    band: i64,
    sigma_tilde: f64,
}

impl NoiseSpectrum {
    pub fn new(beta_g: f64, band: i64, m: f64, sigma_tilde: f64) -> Result<Self> {
        if !(m > 0.0 && m < 1.0) {
            return Err(Error::Parameter(format!("dissipation exponent m = {m} not in (0,1)")));
        }
        if band < 1 {
            return Err(Error::Parameter(format!("spectrum band {band} must be ≥ 1")));
        }
        if !(sigma_tilde > 0.0) {
            return Err(Error::Parameter(format!("σ̃ = {sigma_tilde} must be positive")));
        }
        let needed = 3.0 - m + 2.0 * sigma_tilde;
        if !(beta_g > needed) {
            return Err(Error::Parameter(format!(
                "decay exponent β_g = {beta_g} too small: need β_g > {needed} for a summable weighted trace"
            )));
        }
        Ok(Self { beta_g, band, sigma_tilde })
    }

    pub fn amplitude(&self, k1: i64, k2: i64) -> f64 {
        if (k1, k2) == (0, 0) || k1.abs() > self.band || k2.abs() > self.band {
            return 0.0;
        }
        let ksq = (k1 * k1 + k2 * k2) as f64;
        ksq.powf(-self.beta_g / 2.0)
    }

    pub fn band(&self) -> i64 {
        self.band
    }

    pub fn sigma_tilde(&self) -> f64 {
        self.sigma_tilde
    }

    /// Smallest power-of-two grid that holds the band strictly inside the
    /// resolvable spectrum.
    pub fn field_resolution(&self) -> usize {
        let mut n = 2usize;
        while (n / 2) as i64 <= self.band {
            n *= 2;
        }
        n
    }
}

/// Independent real OU pairs, one per half-plane representative mode.
///
/// Mode `k` of `z` is `(A_k - iB_k)/√2 · k^⊥/|k|` with the opposite mode
/// conjugate, which makes `z` real, mean-zero, and divergence-free by
/// construction. Each real component follows `dX = -|k|^{2m} X dt + g_k dW`
/// advanced by its exact Gaussian transition.
#[derive(Clone, Debug)]
pub struct OuEnsemble {
    reps: Vec<(i64, i64)>,
    theta: Vec<f64>,
    g: Vec<f64>,
    state: Vec<(f64, f64)>,
}

impl OuEnsemble {
    pub fn new(spectrum: &NoiseSpectrum, m: f64) -> Self {
        let mut reps = Vec::new();
        for k1 in 0..=spectrum.band {
            let lo = if k1 == 0 { 1 } else { -spectrum.band };
            for k2 in lo..=spectrum.band {
                reps.push((k1, k2));
            }
        }
        let theta: Vec<f64> =
            reps.iter().map(|&(k1, k2)| ((k1 * k1 + k2 * k2) as f64).powf(m)).collect();
        let g: Vec<f64> = reps.iter().map(|&(k1, k2)| spectrum.amplitude(k1, k2)).collect();
        let state = vec![(0.0, 0.0); reps.len()];
        Self { reps, theta, g, state }
    }

    pub fn reps(&self) -> &[(i64, i64)] {
        &self.reps
    }

    pub fn state(&self) -> &[(f64, f64)] {
        &self.state
    }

    /// Advance every pair by `dt` with the closed-form transition.
    pub fn step(&mut self, dt: f64, rng: &mut ChaCha8Rng) {
        for i in 0..self.reps.len() {
            let th = self.theta[i];
            let decay = (-th * dt).exp();
            let vol = self.g[i] * ((1.0 - (-2.0 * th * dt).exp()) / (2.0 * th)).sqrt();
            let xi1: f64 = StandardNormal.sample(rng);
            let xi2: f64 = StandardNormal.sample(rng);
            let (a, b) = self.state[i];
            self.state[i] = (decay * a + vol * xi1, decay * b + vol * xi2);
        }
    }

    /// Squared spatial mean-square size of the assembled field.
    pub fn l2_sq(&self) -> f64 {
        let tau = 2.0 * std::f64::consts::PI;
        tau * tau * self.state.iter().map(|&(a, b)| a * a + b * b).sum::<f64>()
    }

    /// Densify the current state into a vector field on an `n × n` grid.
    pub fn assemble(&self, n: usize) -> Result<TorusField> {
        let band = self.reps.iter().map(|&(k1, k2)| k1.abs().max(k2.abs())).max().unwrap_or(0);
        if (n / 2) as i64 <= band {
            return Err(Error::Shape(format!("grid {n} too coarse for noise band {band}")));
        }
        let mut f = TorusField::zeros(n, Components::Vector)?;
        f.drop_samples();
        let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
        for (i, &(k1, k2)) in self.reps.iter().enumerate() {
            let (a, b) = self.state[i];
            let c = Complex64::new(a, -b) * inv_sqrt2;
            let mag = ((k1 * k1 + k2 * k2) as f64).sqrt();
            let u = (-(k2 as f64) / mag, (k1 as f64) / mag);
            f.add_mode(0, k1, k2, c * u.0);
            f.add_mode(1, k1, k2, c * u.1);
            f.add_mode(0, -k1, -k2, c.conj() * u.0);
            f.add_mode(1, -k1, -k2, c.conj() * u.1);
        }
        Ok(f)
    }
}

/// Closed-form `E‖z(t)‖²_{L²}` from the per-mode OU variance.
pub fn expected_z_l2_sq(spectrum: &NoiseSpectrum, m: f64, t: f64) -> f64 {
    let ens = OuEnsemble::new(spectrum, m);
    let tau = 2.0 * std::f64::consts::PI;
    let mut sum = 0.0;
    for i in 0..ens.reps.len() {
        let th = ens.theta[i];
        sum += ens.g[i] * ens.g[i] * (1.0 - (-2.0 * th * t).exp()) / th;
    }
    tau * tau * sum
}

/// One sampled forcing path on a time grid.
#[derive(Clone, Debug)]
pub struct NoisePath {
    pub seed: u64,
    pub grid: TimeGrid,
    pub regime: Regime,
    pub sigma_tilde: f64,
    /// Field snapshots, one per grid time (additive regime).
    pub z: Vec<TorusField>,
    /// Brownian samples (multiplicative regime).
    pub b: Vec<f64>,
    /// Exponential factor samples (multiplicative regime).
    pub upsilon: Vec<f64>,
}

impl NoisePath {
    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Sample the OU field path; the snapshot at `t = 0` is identically zero.
pub fn simulate_z(
    spectrum: &NoiseSpectrum,
    m: f64,
    grid: &TimeGrid,
    seed: u64,
) -> Result<NoisePath> {
    simulate_z_spliced(spectrum, m, grid, seed, seed, grid.len())
}

/// Sample with the driving increments of `seed_a` for the first `switch`
/// snapshots and of `seed_b` afterwards.
///
/// The first `switch + 1` snapshots are bit-identical to a pure `seed_a`
/// run, which is the adaptedness probe: changing the future never rewrites
/// the past.
pub fn simulate_z_spliced(
    spectrum: &NoiseSpectrum,
    m: f64,
    grid: &TimeGrid,
    seed_a: u64,
    seed_b: u64,
    switch: usize,
) -> Result<NoisePath> {
    let n = spectrum.field_resolution();
    let mut rng_a = ChaCha8Rng::seed_from_u64(seed_a);
    let mut rng_b = ChaCha8Rng::seed_from_u64(seed_b ^ 0x9e37_79b9_7f4a_7c15);
    let mut ens = OuEnsemble::new(spectrum, m);
    let dt = grid.dt();
    let mut z = Vec::with_capacity(grid.len());
    z.push(ens.assemble(n)?);
    for step in 0..grid.n_steps {
        let rng = if step < switch { &mut rng_a } else { &mut rng_b };
        ens.step(dt, rng);
        z.push(ens.assemble(n)?);
    }
    Ok(NoisePath {
        seed: seed_a,
        grid: grid.clone(),
        regime: Regime::Additive,
        sigma_tilde: spectrum.sigma_tilde,
        z,
        b: Vec::new(),
        upsilon: Vec::new(),
    })
}

/// Sample a Brownian path `B` with `B(0) = 0` and attach `Υ = e^B`.
pub fn simulate_scalar(grid: &TimeGrid, seed: u64) -> NoisePath {
    simulate_scalar_spliced(grid, seed, seed, grid.len())
}

/// Scalar counterpart of [`simulate_z_spliced`].
pub fn simulate_scalar_spliced(
    grid: &TimeGrid,
    seed_a: u64,
    seed_b: u64,
    switch: usize,
) -> NoisePath {
    let mut rng_a = ChaCha8Rng::seed_from_u64(seed_a);
    let mut rng_b = ChaCha8Rng::seed_from_u64(seed_b ^ 0x9e37_79b9_7f4a_7c15);
    let sqrt_dt = grid.dt().sqrt();
    let mut b = Vec::with_capacity(grid.len());
    b.push(0.0);
    for step in 0..grid.n_steps {
        let rng = if step < switch { &mut rng_a } else { &mut rng_b };
        let xi: f64 = StandardNormal.sample(rng);
        b.push(b[step] + sqrt_dt * xi);
    }
    let upsilon = b.iter().map(|v| v.exp()).collect();
    NoisePath {
        seed: seed_a,
        grid: grid.clone(),
        regime: Regime::Multiplicative,
        sigma_tilde: DEFAULT_SIGMA_TILDE,
        z: Vec::new(),
        b,
        upsilon,
    }
}

fn check_stopping_args(path: &NoisePath, l_scale: f64, delta: f64) -> Result<()> {
    if path.is_empty() || (path.regime == Regime::Additive && path.z.is_empty()) {
        return Err(Error::Parameter("empty noise path".into()));
    }
    if !(l_scale > 1.0) {
        return Err(Error::Parameter(format!("threshold scale L = {l_scale} must exceed 1")));
    }
    if !(delta > 0.0 && delta < 1.0 / 12.0) {
        return Err(Error::Parameter(format!("δ = {delta} not in (0, 1/12)")));
    }
    Ok(())
}

/// Number of leading grid indices at which every threshold still holds
/// strictly; equals the path length when nothing trips.
pub fn admissible_prefix(
    path: &NoisePath,
    l_scale: f64,
    delta: f64,
    c_s: f64,
) -> Result<usize> {
    check_stopping_args(path, l_scale, delta)?;
    let theta = 0.5 - 2.0 * delta;
    let size_cap = l_scale.powf(0.25);
    let holder_cap = l_scale.sqrt();
    let times = path.grid.times();
    let len = path.len();

    let size = |i: usize| -> f64 {
        match path.regime {
            Regime::Additive => c_s * path.z[i].norm_hs((4.0 + path.sigma_tilde) / 2.0),
            Regime::Multiplicative => path.b[i].abs(),
        }
    };
    let dist = |i: usize, j: usize| -> f64 {
        match path.regime {
            Regime::Additive => {
                let s = (2.0 + path.sigma_tilde) / 2.0;
                path.z[j].sub(&path.z[i]).expect("shape-compatible snapshots").norm_hs(s)
            }
            Regime::Multiplicative => (path.b[j] - path.b[i]).abs(),
        }
    };

    let mut run_max = 0.0f64;
    for i in 0..len {
        if size(i) >= size_cap {
            return Ok(i);
        }
        for j in 0..i {
            let quotient = dist(j, i) / (times[i] - times[j]).powf(theta);
            run_max = run_max.max(match path.regime {
                Regime::Additive => c_s * quotient,
                Regime::Multiplicative => quotient,
            });
        }
        if run_max >= holder_cap {
            return Ok(i);
        }
    }
    Ok(len)
}

/// First grid time at which a size or Hölder threshold trips, capped at `L`.
pub fn stopping_time(path: &NoisePath, l_scale: f64, delta: f64, c_s: f64) -> Result<f64> {
    let idx = admissible_prefix(path, l_scale, delta, c_s)?;
    if idx == path.len() {
        Ok(l_scale)
    } else {
        Ok(path.grid.time(idx).min(l_scale))
    }
}

/// Causally mollify the path's observable: the field snapshots in the
/// additive regime, the exponential factor in the multiplicative one (the
/// raw Brownian samples are kept for threshold checks).
pub fn time_mollify(path: &NoisePath, l: f64) -> Result<NoisePath> {
    let dt = path.grid.dt();
    let mut out = path.clone();
    match path.regime {
        Regime::Additive => {
            out.z = crate::mollify::time_mollify_fields(&path.z, dt, l)?;
        }
        Regime::Multiplicative => {
            out.upsilon = crate::mollify::time_mollify_scalars(&path.upsilon, dt, l)?;
        }
    }
    Ok(out)
}
