//! Basic containers shared across the pipeline.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Observed log-prices `Y_1, ..., Y_n`, one per tick. Tick `j` (1-based) sits
/// at time `j / n` on the unit interval.
#[derive(Debug, Clone, PartialEq)]
pub struct TickSeries {
    values: Vec<f64>,
}

impl TickSeries {
    pub fn new(values: Vec<f64>) -> Self {
        Self { values }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Returns `a * Y` (used for scale-equivariance checks and unit changes).
    pub fn scaled(&self, a: f64) -> Self {
        Self::new(self.values.iter().map(|y| a * y).collect())
    }

    /// Returns `Y + shift`.
    pub fn shifted(&self, shift: f64) -> Self {
        Self::new(self.values.iter().map(|y| y + shift).collect())
    }
}

impl From<Vec<f64>> for TickSeries {
    fn from(values: Vec<f64>) -> Self {
        Self::new(values)
    }
}

/// Where a curve came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CurveSource {
    /// Spot volatility in tick time.
    Asve,
    /// Spot covolatility of a synchronous pair.
    Covol,
    /// Real-time volatility obtained as intensity times tick-time volatility.
    RealTime,
    /// Haar synthesis of raw coefficients, or anything constructed by hand.
    Synthesis,
}

/// Piecewise-constant function `t -> sigma^2(t)` on `[0, 1]`, stored as its
/// values at an increasing grid. Each value holds on the cell between the
/// midpoints to its neighbours; the outer cells extend to 0 and 1.
#[derive(Debug, Clone, PartialEq)]
pub struct VolatilityCurve {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    pub source: CurveSource,
}

impl VolatilityCurve {
    pub fn new(grid: Vec<f64>, values: Vec<f64>, source: CurveSource) -> Result<Self> {
        if grid.len() != values.len() {
            return invalid(format!(
                "curve grid has {} points but {} values",
                grid.len(),
                values.len()
            ));
        }
        if grid.is_empty() {
            return invalid("empty curve");
        }
        if grid.windows(2).any(|w| w[1] <= w[0]) {
            return invalid("curve grid must be strictly increasing");
        }
        Ok(Self {
            grid,
            values,
            source,
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Cell boundaries `0 = e_0 < e_1 < ... < e_len = 1`.
    pub fn cell_edges(&self) -> Vec<f64> {
        let mut edges = Vec::with_capacity(self.grid.len() + 1);
        edges.push(0.0);
        for w in self.grid.windows(2) {
            edges.push(0.5 * (w[0] + w[1]));
        }
        edges.push(1.0);
        edges
    }

    /// Piecewise-constant evaluation.
    pub fn value_at(&self, t: f64) -> f64 {
        // index of the first grid point whose upper cell edge exceeds t
        let idx = self
            .grid
            .windows(2)
            .position(|w| t < 0.5 * (w[0] + w[1]))
            .unwrap_or(self.grid.len() - 1);
        self.values[idx]
    }

    /// Samples the curve at the given points.
    pub fn resample(&self, points: &[f64]) -> Vec<f64> {
        // points are usually sorted, so walk once
        let edges = self.cell_edges();
        let mut out = Vec::with_capacity(points.len());
        for &t in points {
            let idx = match edges[1..edges.len() - 1]
                .binary_search_by(|e| e.partial_cmp(&t).unwrap_or(std::cmp::Ordering::Less))
            {
                Ok(i) => i + 1,
                Err(i) => i,
            };
            out.push(self.values[idx.min(self.values.len() - 1)]);
        }
        out
    }

    /// Integral over `[0, 1]` of the piecewise-constant function.
    pub fn integral(&self) -> f64 {
        let edges = self.cell_edges();
        self.values
            .iter()
            .zip(edges.windows(2))
            .map(|(v, e)| v * (e[1] - e[0]))
            .sum()
    }

    /// Sum of squared jumps between neighbouring values, a roughness measure
    /// for piecewise-constant reconstructions.
    pub fn squared_jump_sum(&self) -> f64 {
        self.values.windows(2).map(|w| (w[1] - w[0]).powi(2)).sum()
    }

    pub fn scaled(&self, a: f64) -> Self {
        Self {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| a * v).collect(),
            source: self.source,
        }
    }
}
