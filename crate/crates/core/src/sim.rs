//! Synthetic data: Heston latent prices, additive noise, compound-Poisson
//! jumps, price rounding, and MISE scoring.
//!
//! Every generator takes an explicit `u64` seed and draws from
//! `ChaCha8Rng::seed_from_u64(seed)`. Monte Carlo replications derive their
//! seeds with [`derive_seed`].

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{invalid, AsveError, Result};
use crate::series::{TickSeries, VolatilityCurve};

/// Fine Euler steps per observation interval.
pub const OVERSAMPLING: usize = 10;

/// Replication seed: SplitMix64 applied to `master + (index + 1) * golden`.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut z = master.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HestonParams {
    pub rho: f64,
    pub theta: f64,
    pub kappa: f64,
    /// Vol-of-vol.
    pub eps: f64,
    pub sigma0_sq: f64,
    pub x0: f64,
}

impl Default for HestonParams {
    /// `rho = -2/3`, `theta = 1e-5`, `kappa = 4`, `eps^2 = kappa * theta`,
    /// started at the long-run variance.
    fn default() -> Self {
        Self {
            rho: -2.0 / 3.0,
            theta: 1e-5,
            kappa: 4.0,
            eps: (4.0f64 * 1e-5).sqrt(),
            sigma0_sq: 1e-5,
            x0: 0.0,
        }
    }
}

impl HestonParams {
    /// Constant-volatility Brownian motion with drift `-sigma^2/2`.
    pub fn constant(sigma_sq: f64) -> Self {
        Self {
            rho: 0.0,
            theta: sigma_sq,
            kappa: 1.0,
            eps: 0.0,
            sigma0_sq: sigma_sq,
            x0: 0.0,
        }
    }

    /// `2 kappa theta / eps^2`; infinite when `eps = 0`.
    pub fn feller_ratio(&self) -> f64 {
        2.0 * self.kappa * self.theta / (self.eps * self.eps)
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.rho, self.theta, self.kappa, self.eps, self.sigma0_sq, self.x0];
        if all.iter().any(|v| !v.is_finite()) {
            return invalid("Heston parameters must be finite");
        }
        if self.rho.abs() > 1.0 {
            return invalid(format!("correlation {} outside [-1, 1]", self.rho));
        }
        if self.theta <= 0.0 || self.kappa <= 0.0 || self.sigma0_sq <= 0.0 || self.eps < 0.0 {
            return invalid("theta, kappa, sigma0_sq must be positive and eps non-negative");
        }
        Ok(())
    }

    /// `E sigma^2_t` of the exact CIR process.
    pub fn mean_variance(&self, t: f64) -> f64 {
        self.theta + (self.sigma0_sq - self.theta) * (-self.kappa * t).exp()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseKind {
    Gaussian,
    Uniform,
}

/// Multiplier `(t, x) -> tau(t, x) / std` for state-dependent noise.
pub type NoiseProfile = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub struct NoiseSpec {
    pub kind: NoiseKind,
    pub std: f64,
    pub profile: Option<NoiseProfile>,
}

impl fmt::Debug for NoiseSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("NoiseSpec")
            .field("kind", &self.kind)
            .field("std", &self.std)
            .field("state_dependent", &self.profile.is_some())
            .finish()
    }
}

impl NoiseSpec {
    pub fn gaussian(std: f64) -> Self {
        Self {
            kind: NoiseKind::Gaussian,
            std,
            profile: None,
        }
    }

    pub fn uniform(std: f64) -> Self {
        Self {
            kind: NoiseKind::Uniform,
            std,
            profile: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.std >= 0.0) || !self.std.is_finite() {
            return invalid(format!("noise std must be finite and >= 0, got {}", self.std));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JumpSpec {
    /// Expected jumps on `[0, 1]`.
    pub intensity: f64,
    pub size_std: f64,
}

impl JumpSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.intensity >= 0.0 && self.size_std >= 0.0) || !self.intensity.is_finite() || !self.size_std.is_finite() {
            return invalid("jump intensity and size std must be finite and >= 0");
        }
        Ok(())
    }
}

/// One simulated trading day on `[0, 1]` with ticks at `j/n`, `j = 1..n`.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedDay {
    /// Observed log-prices (latent path until noise is added).
    pub ticks: TickSeries,
    /// Latent log-price at the tick times.
    pub latent: Vec<f64>,
    /// `sigma^2` at the tick times.
    pub tick_sigma2: Vec<f64>,
    /// `(time, size)` of each jump, sorted by time.
    pub jump_times: Vec<(f64, f64)>,
    /// Share of fine steps whose variance proposal went negative.
    pub clip_fraction: f64,
}

impl SimulatedDay {
    pub fn n(&self) -> usize {
        self.tick_sigma2.len()
    }

    /// True `sigma^2` at each point of `grid`, read off the nearest tick.
    pub fn truth_on(&self, grid: &[f64]) -> Vec<f64> {
        let n = self.n();
        grid.iter()
            .map(|t| {
                let j = (t * n as f64).round().clamp(1.0, n as f64) as usize;
                self.tick_sigma2[j - 1]
            })
            .collect()
    }

    /// `int sigma^4` by the rectangle rule on the ticks.
    pub fn integrated_quarticity(&self) -> f64 {
        self.tick_sigma2.iter().map(|v| v * v).sum::<f64>() / self.n() as f64
    }
}

/// Euler-Maruyama with full truncation on a grid `OVERSAMPLING` times finer
/// than `1/n`, subsampled to `j/n`.
pub fn simulate_heston(params: &HestonParams, n: usize, seed: u64) -> Result<SimulatedDay> {
    params.validate()?;
    if n < 16 {
        return Err(AsveError::TooFewObservations { need: 16, got: n });
    }
    let mut rng = rng(seed);
    let steps = n * OVERSAMPLING;
    let dt = 1.0 / steps as f64;
    let sdt = dt.sqrt();
    let rho_c = (1.0 - params.rho * params.rho).max(0.0).sqrt();
    let (mut x, mut v) = (params.x0, params.sigma0_sq);
    let mut latent = Vec::with_capacity(n);
    let mut sig = Vec::with_capacity(n);
    let mut clipped = 0usize;
    for step in 1..=steps {
        let z1: f64 = StandardNormal.sample(&mut rng);
        let z2: f64 = StandardNormal.sample(&mut rng);
        let vp = v.max(0.0);
        let sv = vp.sqrt();
        x += -0.5 * vp * dt + sv * sdt * z1;
        v += params.kappa * (params.theta - vp) * dt + params.eps * sv * sdt * (params.rho * z1 + rho_c * z2);
        if v < 0.0 {
            clipped += 1;
        }
        if step % OVERSAMPLING == 0 {
            latent.push(x);
            sig.push(v.max(0.0));
        }
    }
    // a variance of exactly zero only arises from clipping; keep truth positive
    let floor = 1e-3 * params.theta.min(params.sigma0_sq);
    let tick_sigma2 = sig.into_iter().map(|s| s.max(floor)).collect();
    Ok(SimulatedDay {
        ticks: TickSeries::new(latent.clone()),
        latent,
        tick_sigma2,
        jump_times: Vec::new(),
        clip_fraction: clipped as f64 / steps as f64,
    })
}

fn normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

/// `Y_j = X_{j/n} + tau(j/n, X) eta_j` with unit-variance `eta`.
pub fn add_noise(x: &TickSeries, spec: &NoiseSpec, seed: u64) -> Result<TickSeries> {
    spec.validate()?;
    if spec.std == 0.0 {
        return Ok(x.clone());
    }
    let mut rng = rng(seed);
    let n = x.len();
    let s3 = 3f64.sqrt();
    let values = x
        .values()
        .iter()
        .enumerate()
        .map(|(i, &xi)| {
            // uniform noise is the probability transform of the same normal
            // draw, so both laws share random numbers under one seed
            let z: f64 = StandardNormal.sample(&mut rng);
            let eta = match spec.kind {
                NoiseKind::Gaussian => z,
                NoiseKind::Uniform => s3 * (2.0 * normal_cdf(z) - 1.0),
            };
            let scale = match &spec.profile {
                Some(p) => spec.std * p((i + 1) as f64 / n as f64, xi),
                None => spec.std,
            };
            xi + scale * eta
        })
        .collect();
    Ok(TickSeries::new(values))
}

/// Adds a compound-Poisson path on `[0, 1]`: a jump at time `s` shifts every
/// tick `j/n >= s`.
pub fn add_jumps(ticks: &TickSeries, spec: &JumpSpec, seed: u64) -> Result<(TickSeries, Vec<(f64, f64)>)> {
    spec.validate()?;
    if spec.intensity == 0.0 {
        return Ok((ticks.clone(), Vec::new()));
    }
    let mut rng = rng(seed);
    let count = Poisson::new(spec.intensity)
        .map_err(|e| AsveError::InvalidInput(e.to_string()))?
        .sample(&mut rng) as usize;
    let size = Normal::new(0.0, spec.size_std).map_err(|e| AsveError::InvalidInput(e.to_string()))?;
    let mut jumps: Vec<(f64, f64)> = (0..count)
        .map(|_| (rng.random::<f64>(), size.sample(&mut rng)))
        .collect();
    jumps.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok((inject_jumps(ticks, &jumps), jumps))
}

/// Adds the given `(time, size)` jumps to `ticks`.
pub fn inject_jumps(ticks: &TickSeries, jumps: &[(f64, f64)]) -> TickSeries {
    let n = ticks.len();
    let mut out = ticks.clone();
    for &(time, size) in jumps {
        // first 1-based tick with j/n >= time
        let first = ((time * n as f64).ceil() as usize).max(1);
        for y in out.values_mut().iter_mut().skip(first - 1) {
            *y += size;
        }
    }
    out
}

/// Rounds the price `ref_price * exp(Y)` to a multiple of `tick_size` and maps
/// back to log-prices relative to `ref_price`.
pub fn round_prices(ticks: &TickSeries, ref_price: f64, tick_size: f64) -> Result<TickSeries> {
    if !(ref_price > 0.0 && tick_size > 0.0) || !ref_price.is_finite() || !tick_size.is_finite() {
        return invalid("reference price and tick size must be positive");
    }
    let values = ticks
        .values()
        .iter()
        .map(|y| {
            let p = (ref_price * y.exp() / tick_size).round() * tick_size;
            (p / ref_price).ln()
        })
        .collect();
    Ok(TickSeries::new(values))
}

/// Full synthetic-day recipe used by the Monte Carlo studies.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub heston: HestonParams,
    pub n: usize,
    pub noise: NoiseSpec,
    pub jumps: Option<JumpSpec>,
    /// `(reference price, tick size)`.
    pub rounding: Option<(f64, f64)>,
}

impl Scenario {
    /// Heston defaults, `n = 15,000`, gaussian noise with std `1/5000`.
    pub fn paper_default() -> Self {
        Self {
            heston: HestonParams::default(),
            n: 15_000,
            noise: NoiseSpec::gaussian(1.0 / 5000.0),
            jumps: None,
            rounding: None,
        }
    }

    /// Latent path, then jumps, then noise, then rounding; sub-seeds
    /// `derive_seed(seed, 0..3)`.
    pub fn generate(&self, seed: u64) -> Result<SimulatedDay> {
        let mut day = simulate_heston(&self.heston, self.n, derive_seed(seed, 0))?;
        let mut y = day.ticks.clone();
        if let Some(spec) = &self.jumps {
            let (with, times) = add_jumps(&y, spec, derive_seed(seed, 1))?;
            y = with;
            day.jump_times = times;
        }
        y = add_noise(&y, &self.noise, derive_seed(seed, 2))?;
        if let Some((r, t)) = self.rounding {
            y = round_prices(&y, r, t)?;
        }
        day.ticks = y;
        Ok(day)
    }
}

/// `int (est - truth)^2` with equal weights on the shared grid.
pub fn ise(estimate: &VolatilityCurve, truth: &[f64]) -> Result<f64> {
    if estimate.len() != truth.len() || truth.is_empty() {
        return invalid(format!(
            "estimate has {} grid points, truth has {}",
            estimate.len(),
            truth.len()
        ));
    }
    Ok(estimate
        .values
        .iter()
        .zip(truth)
        .map(|(e, t)| (e - t).powi(2))
        .sum::<f64>()
        / truth.len() as f64)
}

fn check_runs(estimates: &[VolatilityCurve], truths: &[Vec<f64>]) -> Result<()> {
    if estimates.len() != truths.len() || estimates.is_empty() {
        return invalid(format!(
            "{} estimates vs {} truths",
            estimates.len(),
            truths.len()
        ));
    }
    Ok(())
}

/// Mean over runs of the integrated squared error.
pub fn mise(estimates: &[VolatilityCurve], truths: &[Vec<f64>]) -> Result<f64> {
    check_runs(estimates, truths)?;
    let mut total = 0.0;
    for (e, t) in estimates.iter().zip(truths) {
        total += ise(e, t)?;
    }
    Ok(total / estimates.len() as f64)
}

/// Mean over runs of `ISE / int sigma^4`.
pub fn rmise(estimates: &[VolatilityCurve], truths: &[Vec<f64>]) -> Result<f64> {
    check_runs(estimates, truths)?;
    let mut total = 0.0;
    for (e, t) in estimates.iter().zip(truths) {
        let q = t.iter().map(|v| v * v).sum::<f64>() / t.len() as f64;
        if q <= 0.0 {
            return invalid("truth has zero quarticity");
        }
        total += ise(e, t)? / q;
    }
    Ok(total / estimates.len() as f64)
}
