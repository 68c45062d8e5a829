//! Leading-order MSE of the integrated-volatility estimator, the optimal
//! block constant, the SNR pilot and the covariance structure of the block
//! averages in the constant-parameter model.

use serde::Serialize;

use crate::error::{invalid, AsveError, Result};
use crate::numerics::golden_section;
use crate::preaverage::{block_geometry, pre_average, BlockGeometry, LemmaIntegrals, PreAverageFunction};
use crate::preaverage::noise_level;
use crate::series::TickSeries;

/// Lower clip for the estimated signal-to-noise ratio.
pub const SNR_FLOOR: f64 = 0.1;

/// Leading-order `sqrt(n) * MSE` split into its two parts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MseBreakdown {
    /// `4/c (sigma^2 A - (tau c)^2 B)^2`
    pub cov_term: f64,
    /// `2/c (sigma^2 + 2 (tau c)^2 C)^2`
    pub var_term: f64,
    pub total: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TuningResult {
    pub lam: String,
    /// `c* tau / sigma`.
    pub c_star_over_snr: f64,
    /// `lim sqrt(n) MSE / (tau sigma^3)` at `c*`.
    pub mse_const: f64,
    pub snr_used: f64,
    pub c_star: f64,
}

/// `A = int Lambda(u)Lambda(1-u)`, `B = int lambda(u)lambda(1-u)`,
/// `C = ||lambda||^2` on `[0, 1]`.
pub fn mse_from_integrals(k: &LemmaIntegrals, sigma: f64, tau: f64, c: f64) -> MseBreakdown {
    let s2 = sigma * sigma;
    let tc2 = (tau * c).powi(2);
    let cov_term = 4.0 / c * (s2 * k.diffusion_cross - tc2 * k.noise_cross).powi(2);
    let var_term = 2.0 / c * (s2 + 2.0 * tc2 * k.l2_half).powi(2);
    MseBreakdown {
        cov_term,
        var_term,
        total: cov_term + var_term,
    }
}

fn check_normalized(lam: &PreAverageFunction) -> Result<()> {
    let norm = lam.normalization();
    if (norm - 1.0).abs() > 1e-6 {
        return invalid(format!("{} is not normalized (norm {norm})", lam.name()));
    }
    Ok(())
}

/// Leading-order `sqrt(n) * MSE` of `<sigma^2, 1>` for constant `sigma`, `tau`.
pub fn asymptotic_mse(lam: &PreAverageFunction, sigma: f64, tau: f64, c: f64) -> Result<MseBreakdown> {
    if !(sigma > 0.0 && tau >= 0.0 && c > 0.0) || !(sigma * tau * c).is_finite() {
        return invalid("sigma and c must be positive, tau non-negative");
    }
    check_normalized(lam)?;
    Ok(mse_from_integrals(&lam.lemma_integrals(), sigma, tau, c))
}

/// Minimizes the leading-order MSE over `c`. With `sigma = snr`, `tau = 1`
/// the optimum is `c* = c_star_over_snr * snr`.
pub fn optimal_c(lam: &PreAverageFunction, snr: f64) -> Result<TuningResult> {
    if !(snr > 0.0) || !snr.is_finite() {
        return invalid(format!("snr must be positive, got {snr}"));
    }
    check_normalized(lam)?;
    let k = lam.lemma_integrals();
    // in units of the SNR the problem is parameter free
    let f = |x: f64| mse_from_integrals(&k, 1.0, 1.0, x).total;
    let x = minimize_scan(&f, 1e-3, 1e3).or_else(|_| minimize_scan(&f, 1e-6, 1e6))?;
    Ok(TuningResult {
        lam: lam.name().to_string(),
        c_star_over_snr: x,
        mse_const: f(x),
        snr_used: snr,
        c_star: x * snr,
    })
}

fn minimize_scan(f: &dyn Fn(f64) -> f64, lo: f64, hi: f64) -> Result<f64> {
    let ratio: f64 = 1.25;
    let steps = ((hi / lo).ln() / ratio.ln()).ceil() as usize;
    let xs: Vec<f64> = (0..=steps).map(|i| lo * ratio.powi(i as i32)).collect();
    let vals: Vec<f64> = xs.iter().map(|&x| f(x)).collect();
    let best = (0..vals.len())
        .min_by(|&a, &b| vals[a].total_cmp(&vals[b]))
        .expect("non-empty scan");
    if best == 0 || best == vals.len() - 1 {
        return Err(AsveError::Optimization(format!(
            "no interior minimum in [{lo}, {hi}]"
        )));
    }
    Ok(golden_section(f, xs[best - 1], xs[best + 1], 1e-6)?.x)
}

/// `optimal_c` for every catalog function.
pub fn table1() -> Vec<TuningResult> {
    PreAverageFunction::catalog_all()
        .iter()
        .map(|lam| optimal_c(lam, 1.0).expect("catalog functions have an interior optimum"))
        .collect()
}

/// Pilot quantities behind the SNR estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SnrEstimate {
    pub snr: f64,
    /// Preliminary integrated-volatility estimate.
    pub pilot: f64,
    pub tau_sq: f64,
    pub floored: bool,
}

/// `sqrt(<sigma~^2, 1> / tau^2)` with a pilot on `floor(sqrt n)` blocks.
pub fn estimate_snr(ticks: &TickSeries, lam: &PreAverageFunction) -> Result<f64> {
    Ok(estimate_snr_detailed(ticks, lam, SNR_FLOOR)?.snr)
}

pub fn estimate_snr_detailed(ticks: &TickSeries, lam: &PreAverageFunction, floor: f64) -> Result<SnrEstimate> {
    let n = ticks.len();
    if n < 100 {
        return Err(AsveError::TooFewObservations { need: 100, got: n });
    }
    let tau_sq = noise_level(ticks)?;
    let m = (n as f64).sqrt().floor() as usize;
    let geom = BlockGeometry::with_block_count(n, m)?;
    let zs = pre_average(ticks, lam, &geom)?;
    let pilot = zs.z.iter().sum::<f64>() / geom.m as f64;
    let raw = if tau_sq > 0.0 && pilot > 0.0 {
        (pilot / tau_sq).sqrt()
    } else {
        0.0
    };
    let floored = !(raw >= floor) || !raw.is_finite();
    Ok(SnrEstimate {
        snr: if floored { floor } else { raw },
        pilot,
        tau_sq,
        floored,
    })
}

/// Lag between block averages `Ybar_i`, `Ybar_{i+lag}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Lag {
    Zero,
    One,
    Far,
}

impl From<usize> for Lag {
    fn from(l: usize) -> Self {
        match l {
            0 => Lag::Zero,
            1 => Lag::One,
            _ => Lag::Far,
        }
    }
}

/// Leading-order covariance of block averages with constant `sigma`, `tau`:
///
/// - lag 0: `sigma^2/m ||Lambda||^2 + tau^2 (m/n) ||lambda||^2` (norms on `[0, 2]`)
/// - lag 1: `sigma^2/m A - tau^2 (m/n) B`
/// - further lags: 0
///
/// `m/n` is taken on the retained sample, i.e. `1 / block_len`.
pub fn preav_covariance(lam: &PreAverageFunction, sigma: f64, tau: f64, c: f64, n: usize, lag: Lag) -> Result<f64> {
    let geom = block_geometry(n, c)?;
    let m = geom.m as f64;
    let ratio = 1.0 / geom.block_len as f64;
    let (s2, t2) = (sigma * sigma, tau * tau);
    Ok(match lag {
        Lag::Zero => s2 / m * lam.antiderivative_l2_sq() + t2 * ratio * lam.l2_sq(),
        Lag::One => {
            let k = lam.lemma_integrals();
            s2 / m * k.diffusion_cross - t2 * ratio * k.noise_cross
        }
        Lag::Far => 0.0,
    })
}
