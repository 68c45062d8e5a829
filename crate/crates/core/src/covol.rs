//! Spot covolatility of two synchronously observed prices.
//!
//! The pre-averaged products `Z_i = m Ybar1_i Ybar2_i` need no bias
//! correction when the two noise processes are independent; they are
//! thresholded exactly like the univariate values. The result is signed.

use crate::error::{invalid, Result};
use crate::jumps::{self, JumpReport};
use crate::preaverage::{block_averages, block_geometry, noise_level, BlockGeometry, PreAverageFunction, PreAveragedSeries};
use crate::series::{CurveSource, TickSeries, VolatilityCurve};
use crate::threshold::{reconstruct, AsveConfig, CRule, SureSelection};
use crate::tuning::estimate_snr_detailed;

#[derive(Debug, Clone, PartialEq)]
pub struct PairedTicks {
    y1: TickSeries,
    y2: TickSeries,
}

impl PairedTicks {
    pub fn new(y1: TickSeries, y2: TickSeries) -> Result<Self> {
        if y1.len() != y2.len() {
            return invalid(format!("paired series differ in length: {} vs {}", y1.len(), y2.len()));
        }
        Ok(Self { y1, y2 })
    }

    pub fn first(&self) -> &TickSeries {
        &self.y1
    }

    pub fn second(&self) -> &TickSeries {
        &self.y2
    }

    pub fn len(&self) -> usize {
        self.y1.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y1.is_empty()
    }

    pub fn swapped(&self) -> Self {
        Self {
            y1: self.y2.clone(),
            y2: self.y1.clone(),
        }
    }
}

/// `Z_i = m Ybar1_i Ybar2_i` for `i = 2..m`.
pub fn covol_values(pair: &PairedTicks, lam: &PreAverageFunction, geom: &BlockGeometry) -> Result<PreAveragedSeries> {
    let a = block_averages(&pair.y1, lam, geom)?;
    let b = block_averages(&pair.y2, lam, geom)?;
    let m = geom.m as f64;
    let z = a.iter().zip(&b).map(|(x, y)| m * (x * y)).collect();
    PreAveragedSeries::new(z, *geom)
}

#[derive(Debug, Clone)]
pub struct CovolOutput {
    pub curve: VolatilityCurve,
    pub zs: PreAveragedSeries,
    pub geometry: BlockGeometry,
    pub c: f64,
    /// Geometric mean of the two SNR estimates under the automatic rule.
    pub snr: Option<f64>,
    pub selections: Vec<SureSelection>,
    pub jump_reports: Option<(JumpReport, JumpReport)>,
}

/// Thresholded covolatility curve. Under the automatic rule the SNR is the
/// geometric mean of the two univariate estimates; the jump filter rejects
/// the union of both series' detections.
pub fn covol_estimate(pair: &PairedTicks, config: &AsveConfig) -> Result<CovolOutput> {
    let n = pair.len();
    let (c, snr) = match config.c_rule {
        CRule::Fixed(c) => (c, None),
        CRule::Auto { factor } => {
            if !(factor > 0.0) || !factor.is_finite() {
                return invalid(format!("c factor must be positive, got {factor}"));
            }
            let s1 = estimate_snr_detailed(&pair.y1, &config.lam, config.snr_floor)?.snr;
            let s2 = estimate_snr_detailed(&pair.y2, &config.lam, config.snr_floor)?.snr;
            let snr = (s1 * s2).sqrt();
            let root = (n as f64).sqrt();
            ((factor * snr).clamp(4.0 / root, root / 2.0), Some(snr))
        }
    };
    let geometry = block_geometry(n, c)?;
    let mut zs = covol_values(pair, &config.lam, &geometry)?;
    let jump_reports = if config.jump_filter {
        let r1 = jumps::detect(&pair.y1, &config.jumps, noise_level(&pair.y1)?)?;
        let r2 = jumps::detect(&pair.y2, &config.jumps, noise_level(&pair.y2)?)?;
        let mask: Vec<bool> = jumps::rejection_mask(&r1, &geometry)
            .into_iter()
            .zip(jumps::rejection_mask(&r2, &geometry))
            .map(|(a, b)| a || b)
            .collect();
        zs = jumps::repair_mask(&zs, &mask)?;
        Some((r1, r2))
    } else {
        None
    };
    let rec = reconstruct(&zs.z, config.j0, config.j_i, config.scale)?;
    let curve = VolatilityCurve::new(zs.grid.clone(), rec.values, CurveSource::Covol)?;
    Ok(CovolOutput {
        curve,
        zs,
        geometry,
        c,
        snr,
        selections: rec.selections,
        jump_reports,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{add_noise, derive_seed, simulate_heston, HestonParams, NoiseSpec};
    use crate::threshold::asve;

    fn noisy(seed: u64, n: usize) -> TickSeries {
        let day = simulate_heston(&HestonParams::constant(1e-5), n, seed).unwrap();
        add_noise(&day.ticks, &NoiseSpec::gaussian(2e-4), derive_seed(seed, 99)).unwrap()
    }

    #[test]
    fn zero_second_series_gives_zero() {
        let y1 = noisy(1, 4000);
        let pair = PairedTicks::new(y1, TickSeries::new(vec![0.0; 4000])).unwrap();
        let lam = PreAverageFunction::catalog(4).unwrap();
        let z = covol_values(&pair, &lam, &block_geometry(4000, 1.0).unwrap()).unwrap();
        assert!(z.z.iter().all(|v| *v == 0.0));
        assert!(PairedTicks::new(TickSeries::new(vec![0.0; 3]), TickSeries::new(vec![0.0; 4])).is_err());
    }

    #[test]
    fn symmetric_and_bilinear() {
        let pair = PairedTicks::new(noisy(2, 15_000), noisy(3, 15_000)).unwrap();
        let cfg = AsveConfig::default();
        let a = covol_estimate(&pair, &cfg).unwrap();
        let b = covol_estimate(&pair.swapped(), &cfg).unwrap();
        assert_eq!(a.curve, b.curve);
        let lam = &cfg.lam;
        let geom = a.geometry;
        let z = covol_values(&pair, lam, &geom).unwrap();
        let scaled = PairedTicks::new(pair.first().scaled(4.0), pair.second().clone()).unwrap();
        let z4 = covol_values(&scaled, lam, &geom).unwrap();
        for (x, y) in z.z.iter().zip(&z4.z) {
            assert_eq!(4.0 * x, *y);
        }
    }

    #[test]
    fn identical_noiseless_series_match_univariate_without_bias() {
        let day = simulate_heston(&HestonParams::constant(1e-5), 15_000, 8).unwrap();
        let pair = PairedTicks::new(day.ticks.clone(), day.ticks.clone()).unwrap();
        let cfg = AsveConfig {
            c_rule: CRule::Fixed(2.0),
            jump_filter: false,
            bias_correction: false,
            ..AsveConfig::default()
        };
        let cv = covol_estimate(&pair, &cfg).unwrap();
        let uni = asve(&day.ticks, &cfg).unwrap();
        for (a, b) in cv.curve.values.iter().zip(&uni.curve.values) {
            assert!((a - b).abs() < 1e-9 * b.abs().max(1e-12));
        }
    }
}
