//! Tick time versus real time.
//!
//! The estimator runs on ticks indexed equidistantly. With trading intensity
//! `nu` the real-time volatility is `nu * sigma^2_TT`, where `sigma^2_TT` is
//! read off at the tick-time position of each real time.

use serde::Serialize;

use crate::error::{invalid, AsveError, Result};
use crate::series::{CurveSource, TickSeries, VolatilityCurve};

/// Trade timestamps (seconds) and prices.
#[derive(Debug, Clone, PartialEq)]
pub struct RawTickData {
    times: Vec<f64>,
    prices: Vec<f64>,
}

impl RawTickData {
    pub fn new(times: Vec<f64>, prices: Vec<f64>) -> Result<Self> {
        if times.len() != prices.len() {
            return invalid(format!("{} times vs {} prices", times.len(), prices.len()));
        }
        if times.iter().any(|t| !t.is_finite()) || times.windows(2).any(|w| w[1] <= w[0]) {
            return invalid("timestamps must be finite and strictly increasing");
        }
        if let Some(p) = prices.iter().find(|p| !(**p > 0.0) || !p.is_finite()) {
            return invalid(format!("non-positive or non-finite price {p}"));
        }
        Ok(Self { times, prices })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn prices(&self) -> &[f64] {
        &self.prices
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// `t_n - t_0`.
    pub fn span(&self) -> f64 {
        match (self.times.first(), self.times.last()) {
            (Some(a), Some(b)) => b - a,
            _ => 0.0,
        }
    }

    /// Session time of tick `j` (1-based) mapped to `[0, 1]`.
    pub fn normalized_time(&self, j: usize) -> f64 {
        (self.times[j - 1] - self.times[0]) / self.span()
    }

    /// Normalized real time at tick-time position `s`: the time of tick
    /// `round(s n)`, clamped to `1..=n`.
    pub fn real_time_of(&self, s: f64) -> f64 {
        let n = self.len();
        let j = (s * n as f64).round().clamp(1.0, n as f64) as usize;
        self.normalized_time(j)
    }
}

/// `Y_i = log(price_i / log_ref)`, indexed by trade count.
pub fn to_tick_time(raw: &RawTickData, log_ref: f64) -> Result<TickSeries> {
    if !(log_ref > 0.0) || !log_ref.is_finite() {
        return invalid(format!("reference price must be positive, got {log_ref}"));
    }
    Ok(TickSeries::new(raw.prices.iter().map(|p| (p / log_ref).ln()).collect()))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntensityCurve {
    /// Tick-time positions the curve was evaluated at.
    pub tick_grid: Vec<f64>,
    /// Matching normalized real times.
    pub grid: Vec<f64>,
    pub nu: Vec<f64>,
    /// Window half-width in normalized time.
    pub bandwidth: f64,
}

impl IntensityCurve {
    /// Equal-weight mean of `nu` against the real-time cell widths.
    pub fn integral(&self) -> f64 {
        let curve = VolatilityCurve {
            grid: self.grid.clone(),
            values: self.nu.clone(),
            source: CurveSource::RealTime,
        };
        curve.integral()
    }
}

/// Default ticks per window, `2 sqrt(n)`.
pub fn default_target_count(n: usize) -> usize {
    (2.0 * (n as f64).sqrt()).round() as usize
}

/// Kernel estimate of the trading intensity,
/// `nu(t) = #{t_i in [t - d, t + d]} (t_n - t_0) / (width * n)`, at the real
/// times of the tick-time positions `tick_grid`. The half-width `d` gives
/// `target_count` ticks per window on average; windows are clipped at the
/// session boundary and `width` is the clipped width.
pub fn estimate_intensity(raw: &RawTickData, target_count: usize, tick_grid: &[f64]) -> Result<IntensityCurve> {
    let n = raw.len();
    if target_count == 0 || n < 4 * target_count {
        return Err(AsveError::TooFewObservations {
            need: 4 * target_count.max(1),
            got: n,
        });
    }
    let span = raw.span();
    let half = target_count as f64 / (2.0 * n as f64);
    let norm: Vec<f64> = raw.times.iter().map(|t| (t - raw.times[0]) / span).collect();
    let mut grid = Vec::with_capacity(tick_grid.len());
    let mut nu = Vec::with_capacity(tick_grid.len());
    for &s in tick_grid {
        if !(0.0..=1.0).contains(&s) {
            return invalid(format!("tick-time position {s} outside [0, 1]"));
        }
        let t = raw.real_time_of(s);
        let (lo, hi) = ((t - half).max(0.0), (t + half).min(1.0));
        let count = norm.partition_point(|u| *u <= hi) - norm.partition_point(|u| *u < lo);
        grid.push(t);
        nu.push(count as f64 / ((hi - lo) * n as f64));
    }
    Ok(IntensityCurve {
        tick_grid: tick_grid.to_vec(),
        grid,
        nu,
        bandwidth: half,
    })
}

/// `sigma^2_RT = nu * sigma^2_TT` on the real-time grid of `nu`.
pub fn tick_to_real(sigma_tt: &VolatilityCurve, nu: &IntensityCurve) -> Result<VolatilityCurve> {
    let tt = sigma_tt.resample(&nu.tick_grid);
    if tt.len() != nu.nu.len() {
        return invalid("intensity grid and resampled curve differ in length");
    }
    let values = tt.iter().zip(&nu.nu).map(|(s, v)| s * v).collect();
    VolatilityCurve::new(nu.grid.clone(), values, CurveSource::RealTime)
}
