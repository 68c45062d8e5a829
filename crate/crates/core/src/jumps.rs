//! Jump detection and repair.
//!
//! Two tests run on the tick series. The scan statistic
//! `Q_r = (m1/n) sum_j lambda(1 + (j - r) m1/n) Y_j`, `m1 = floor(n^{3/4})`,
//! is standardized blockwise and compared against a threshold `t`. The
//! increment test flags `(Y_i - Y_{i-1})^2 > 4 tau^2 log n`. Pre-averaged
//! values whose window touches a detection are replaced by the mean of their
//! nearest accepted neighbours.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, AsveError, Result};
use crate::numerics::{mean, sample_std};
use crate::preaverage::{BlockGeometry, PreAverageFunction, PreAveragedSeries};
use crate::series::TickSeries;

pub const DEFAULT_THRESHOLD_T: f64 = 2.81;
/// Catalog index of the weight used by the scan statistic.
pub const DEFAULT_SCAN_LAMBDA: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JumpConfig {
    pub threshold_t: f64,
    pub two_sided: bool,
    pub scan_lambda: usize,
    pub increment_test: bool,
}

impl Default for JumpConfig {
    fn default() -> Self {
        Self {
            threshold_t: DEFAULT_THRESHOLD_T,
            two_sided: true,
            scan_lambda: DEFAULT_SCAN_LAMBDA,
            increment_test: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum JumpTest {
    Scan,
    Increment,
}

/// A detected jump, as a 1-based tick range.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JumpEvent {
    pub test: JumpTest,
    pub first_tick: usize,
    pub last_tick: usize,
    pub time: f64,
    /// Largest standardized `|Q|` for scan events, squared increment over
    /// the threshold for increment events.
    pub statistic: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JumpReport {
    /// Flagged `r` (1-based tick index of the scan centre).
    pub scan_flags: Vec<usize>,
    /// Flagged `i`, the 1-based tick ending the increment.
    pub increment_flags: Vec<usize>,
    pub threshold_t: f64,
    pub m1: usize,
    pub half_width: usize,
    pub tau_sq_hat: f64,
    pub events: Vec<JumpEvent>,
}

impl JumpReport {
    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }
}

/// `Q_r` for `r = first_r ..= first_r + q.len() - 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanValues {
    pub q: Vec<f64>,
    pub first_r: usize,
    pub m1: usize,
    /// `ceil(n / m1)`.
    pub half_width: usize,
}

pub fn scan_statistic(ticks: &TickSeries, lam: &PreAverageFunction) -> Result<ScanValues> {
    let n = ticks.len();
    if n < 256 {
        return Err(AsveError::TooFewObservations { need: 256, got: n });
    }
    let m1 = (n as f64).powf(0.75).floor() as usize;
    let h = n.div_ceil(m1);
    let step = m1 as f64 / n as f64;
    let w: Vec<f64> = (1..=h).map(|k| lam.eval(1.0 + k as f64 * step)).collect();
    let y = ticks.values();
    // 1-based r from h+1 to n-h, so r - h and r + h are valid ticks
    let q = (h + 1..=n - h)
        .map(|r| {
            step * w
                .iter()
                .enumerate()
                .map(|(i, wk)| wk * (y[r + i] - y[r - i - 2]))
                .sum::<f64>()
        })
        .collect();
    Ok(ScanValues {
        q,
        first_r: h + 1,
        m1,
        half_width: h,
    })
}

/// Blockwise local t-test on `q` with blocks of `ceil(sqrt(n))`; a short
/// trailing remainder joins the previous block. Returns `(index, |z|)` of
/// flagged positions in `q`.
pub fn scan_test(q: &[f64], n: usize, t: f64, two_sided: bool) -> Result<Vec<(usize, f64)>> {
    if !(t > 0.0) {
        return invalid(format!("threshold must be positive, got {t}"));
    }
    let block = ((n as f64).sqrt().ceil() as usize).max(2);
    if q.len() < 2 * block {
        return invalid(format!("need at least {} scan values, got {}", 2 * block, q.len()));
    }
    let blocks = q.len() / block;
    let mut flags = Vec::new();
    for b in 0..blocks {
        let start = b * block;
        let end = if b + 1 == blocks { q.len() } else { start + block };
        let chunk = &q[start..end];
        let (mu, sd) = (mean(chunk), sample_std(chunk));
        if !(sd > 0.0) {
            continue;
        }
        for (i, v) in chunk.iter().enumerate() {
            let z = (v - mu) / sd;
            let stat = if two_sided { z.abs() } else { z };
            if stat > t {
                flags.push((start + i, z.abs()));
            }
        }
    }
    Ok(flags)
}

/// 1-based `i` with `(Y_i - Y_{i-1})^2 > 4 tau^2 log n`.
pub fn increment_test(ticks: &TickSeries, tau_sq_hat: f64) -> Vec<usize> {
    let y = ticks.values();
    if y.len() < 2 {
        return Vec::new();
    }
    let bound = 4.0 * tau_sq_hat * (y.len() as f64).ln();
    (1..y.len())
        .filter(|&i| (y[i] - y[i - 1]).powi(2) > bound)
        .map(|i| i + 1)
        .collect()
}

/// Runs both tests and merges consecutive scan flags into events.
pub fn detect(ticks: &TickSeries, cfg: &JumpConfig, tau_sq_hat: f64) -> Result<JumpReport> {
    let lam = PreAverageFunction::catalog(cfg.scan_lambda)?;
    let n = ticks.len();
    let scan = scan_statistic(ticks, &lam)?;
    let flagged = scan_test(&scan.q, n, cfg.threshold_t, cfg.two_sided)?;
    let h = scan.half_width;
    let mut events = Vec::new();
    let scan_flags: Vec<usize> = flagged.iter().map(|(i, _)| scan.first_r + i).collect();
    let mut i = 0;
    while i < flagged.len() {
        let mut j = i;
        while j + 1 < flagged.len() && flagged[j + 1].0 == flagged[j].0 + 1 {
            j += 1;
        }
        let (rs, re) = (scan.first_r + flagged[i].0, scan.first_r + flagged[j].0);
        let (peak_r, peak) = flagged[i..=j]
            .iter()
            .map(|(k, z)| (scan.first_r + k, *z))
            .fold((rs, f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a });
        events.push(JumpEvent {
            test: JumpTest::Scan,
            first_tick: rs.saturating_sub(h).max(1),
            last_tick: (re + h).min(n),
            time: peak_r as f64 / n as f64,
            statistic: peak,
        });
        i = j + 1;
    }
    let increment_flags = if cfg.increment_test {
        increment_test(ticks, tau_sq_hat)
    } else {
        Vec::new()
    };
    let bound = 4.0 * tau_sq_hat * (n as f64).ln();
    let y = ticks.values();
    for &i in &increment_flags {
        let sq = (y[i - 1] - y[i - 2]).powi(2);
        events.push(JumpEvent {
            test: JumpTest::Increment,
            first_tick: i,
            last_tick: i,
            time: i as f64 / n as f64,
            statistic: if bound > 0.0 { sq / bound } else { f64::INFINITY },
        });
    }
    Ok(JumpReport {
        scan_flags,
        increment_flags,
        threshold_t: cfg.threshold_t,
        m1: scan.m1,
        half_width: h,
        tau_sq_hat,
        events,
    })
}

/// Marks every pre-averaged value whose tick window `((i-2)b, ib]` meets an
/// event.
pub fn rejection_mask(report: &JumpReport, geom: &BlockGeometry) -> Vec<bool> {
    let mut mask = vec![false; geom.z_len()];
    let b = geom.block_len;
    for e in &report.events {
        // q with q*b + 1 <= last and (q+2)*b >= first
        let lo = e.first_tick.div_ceil(b).saturating_sub(2);
        let hi = (e.last_tick.saturating_sub(1)) / b;
        for (q, flag) in mask.iter_mut().enumerate().take(hi + 1).skip(lo) {
            let (s, t) = geom.tick_window(q);
            if s <= e.last_tick && t >= e.first_tick {
                *flag = true;
            }
        }
    }
    mask
}

/// Replaces the masked values by the mean of the nearest unmasked left and
/// right neighbours (one-sided at the boundaries).
pub fn repair_mask(zs: &PreAveragedSeries, mask: &[bool]) -> Result<PreAveragedSeries> {
    if mask.len() != zs.len() {
        return invalid(format!("mask has {} entries for {} values", mask.len(), zs.len()));
    }
    let rejected: Vec<bool> = mask.iter().zip(&zs.rejected).map(|(a, b)| *a || *b).collect();
    if rejected.iter().all(|r| *r) {
        return Err(AsveError::EstimationImpossible(
            "every pre-averaged value was rejected as jump-contaminated".into(),
        ));
    }
    let mut z = zs.z.clone();
    let len = z.len();
    let mut left = vec![None; len];
    let mut last = None;
    for i in 0..len {
        if !rejected[i] {
            last = Some(i);
        }
        left[i] = last;
    }
    let mut next = None;
    for i in (0..len).rev() {
        if !rejected[i] {
            next = Some(i);
            continue;
        }
        z[i] = match (left[i], next) {
            (Some(l), Some(r)) => 0.5 * (zs.z[l] + zs.z[r]),
            (Some(l), None) => zs.z[l],
            (None, Some(r)) => zs.z[r],
            (None, None) => unreachable!("at least one value accepted"),
        };
    }
    Ok(PreAveragedSeries {
        z,
        grid: zs.grid.clone(),
        geometry: zs.geometry,
        rejected,
    })
}

pub fn repair(zs: &PreAveragedSeries, report: &JumpReport) -> Result<PreAveragedSeries> {
    repair_mask(zs, &rejection_mask(report, &zs.geometry))
}
