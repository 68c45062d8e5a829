//! Pre-average weight functions and the transform from ticks to the
//! regression-type observations `Z_{i,m}`.
//!
//! For `i = 2..m` the block average is
//!
//! ```text
//! Ybar_i = (m/n) * sum_{j/n in [(i-2)/m, i/m]} lambda(m j/n - (i-2)) * Y_j
//! ```
//!
//! with bias correction
//!
//! ```text
//! b_i = (m^2 / 2n^2) * sum lambda^2(m j/n - (i-2)) * (Y_j - Y_{j-1})^2
//! ```
//!
//! and `Z_i = m * (Ybar_i^2 - b_i)`. Here `n = m * block_len` is the number
//! of retained ticks, so `m/n = 1/block_len`. Windows are closed, so
//! neighbouring windows share their boundary tick. Tick `j = 0` does not
//! exist; the first window reads `Y_1` in its place.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{invalid, AsveError, Result};
use crate::numerics::{integrate_pieces, sample_std};
use crate::series::TickSeries;

pub type WeightFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

const QUAD_TOL: f64 = 1e-12;

/// The three integrals that enter the leading-order MSE of the integrated
/// volatility estimator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LemmaIntegrals {
    /// `int_0^1 Lambda(u) Lambda(1-u) du`
    pub diffusion_cross: f64,
    /// `int_0^1 lambda(u) lambda(1-u) du`
    pub noise_cross: f64,
    /// `||lambda||^2` on `[0, 1]`
    pub l2_half: f64,
}

/// A weight function `lambda` on `[0, 2]`, antisymmetric about 1 and
/// normalized so that `2 int_0^1 (int_0^s lambda)^2 ds = 1`.
#[derive(Clone)]
pub struct PreAverageFunction {
    name: String,
    catalog_index: Option<usize>,
    raw: WeightFn,
    norm_const: f64,
    antiderivative: Option<WeightFn>,
    integrals: Option<LemmaIntegrals>,
    breaks: Vec<f64>,
}

impl fmt::Debug for PreAverageFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PreAverageFunction")
            .field("name", &self.name)
            .field("catalog_index", &self.catalog_index)
            .field("norm_const", &self.norm_const)
            .finish()
    }
}

/// Number of shipped catalog functions.
pub const CATALOG_LEN: usize = 7;

impl PreAverageFunction {
    /// Catalog entry `index` (1-based):
    ///
    /// | index | lambda(s) |
    /// |---|---|
    /// | 1 | (pi/2) cos(pi s/2) |
    /// | 2 | (3pi/2) cos(3pi s/2) |
    /// | 3 | sqrt(3/2) (1[0,1)(s) - 1(1,2](s)) |
    /// | 4 | (pi/sqrt 3) sin(pi s) |
    /// | 5 | (2pi/sqrt 3) sin(2pi s) |
    /// | 6 | (3 sqrt 5 / 2) (1-s)^3 |
    /// | 7 | (sqrt 91 / 2) (1-s)^5 |
    pub fn catalog(index: usize) -> Result<Self> {
        let s3 = 3f64.sqrt();
        let (raw, norm_const, lam_cap, integrals, breaks): (WeightFn, f64, WeightFn, LemmaIntegrals, Vec<f64>) =
            match index {
                1 => (
                    Arc::new(|s: f64| (PI * s / 2.0).cos()),
                    2.0 / PI,
                    Arc::new(|u: f64| -(PI * u / 2.0).sin()),
                    LemmaIntegrals {
                        diffusion_cross: 1.0 / PI,
                        noise_cross: PI / 4.0,
                        l2_half: PI * PI / 8.0,
                    },
                    vec![],
                ),
                2 => (
                    Arc::new(|s: f64| (3.0 * PI * s / 2.0).cos()),
                    2.0 / (3.0 * PI),
                    Arc::new(|u: f64| -(3.0 * PI * u / 2.0).sin()),
                    LemmaIntegrals {
                        diffusion_cross: -1.0 / (3.0 * PI),
                        noise_cross: -3.0 * PI / 4.0,
                        l2_half: 9.0 * PI * PI / 8.0,
                    },
                    vec![],
                ),
                3 => (
                    Arc::new(|s: f64| {
                        if s < 1.0 {
                            1.0
                        } else if s > 1.0 {
                            -1.0
                        } else {
                            0.0
                        }
                    }),
                    (2.0f64 / 3.0).sqrt(),
                    Arc::new(|u: f64| -(1.5f64).sqrt() * if u <= 1.0 { u } else { 2.0 - u }),
                    LemmaIntegrals {
                        diffusion_cross: 0.25,
                        noise_cross: 1.5,
                        l2_half: 1.5,
                    },
                    vec![1.0],
                ),
                4 => (
                    Arc::new(|s: f64| (PI * s).sin()),
                    s3 / PI,
                    Arc::new(move |u: f64| -(1.0 - (PI * u).cos()) / s3),
                    LemmaIntegrals {
                        diffusion_cross: 1.0 / 6.0,
                        noise_cross: PI * PI / 6.0,
                        l2_half: PI * PI / 6.0,
                    },
                    vec![],
                ),
                5 => (
                    Arc::new(|s: f64| (2.0 * PI * s).sin()),
                    s3 / (2.0 * PI),
                    Arc::new(move |u: f64| -(1.0 - (2.0 * PI * u).cos()) / s3),
                    LemmaIntegrals {
                        diffusion_cross: 0.5,
                        noise_cross: -2.0 * PI * PI / 3.0,
                        l2_half: 2.0 * PI * PI / 3.0,
                    },
                    vec![],
                ),
                6 => {
                    let k = 1.5 * 5f64.sqrt();
                    (
                        Arc::new(|s: f64| (1.0 - s).powi(3)),
                        1.0 / k,
                        Arc::new(move |u: f64| -(k / 4.0) * (1.0 - (1.0 - u).powi(4))),
                        LemmaIntegrals {
                            // (k^2/16) (3/5 + B(5,5)), B(5,5) = 1/630
                            diffusion_cross: (k * k / 16.0) * (0.6 + 1.0 / 630.0),
                            // k^2 B(4,4), B(4,4) = 1/140
                            noise_cross: k * k / 140.0,
                            l2_half: k * k / 7.0,
                        },
                        vec![],
                    )
                }
                7 => {
                    let k = 91f64.sqrt() / 2.0;
                    (
                        Arc::new(|s: f64| (1.0 - s).powi(5)),
                        1.0 / k,
                        Arc::new(move |u: f64| -(k / 6.0) * (1.0 - (1.0 - u).powi(6))),
                        LemmaIntegrals {
                            // (k^2/36) (5/7 + B(7,7)), B(7,7) = 1/12012
                            diffusion_cross: (k * k / 36.0) * (5.0 / 7.0 + 1.0 / 12012.0),
                            // k^2 B(6,6), B(6,6) = 1/2772
                            noise_cross: k * k / 2772.0,
                            l2_half: k * k / 11.0,
                        },
                        vec![],
                    )
                }
                _ => {
                    return invalid(format!(
                        "pre-average catalog index must be in 1..={CATALOG_LEN}, got {index}"
                    ))
                }
            };
        Ok(Self {
            name: format!("lambda{index}"),
            catalog_index: Some(index),
            raw,
            norm_const,
            antiderivative: Some(lam_cap),
            integrals: Some(integrals),
            breaks,
        })
    }

    pub fn catalog_all() -> Vec<Self> {
        (1..=CATALOG_LEN)
            .map(|i| Self::catalog(i).expect("catalog index in range"))
            .collect()
    }

    /// Normalizes an antisymmetric raw weight by quadrature. `breaks` lists
    /// discontinuities of `raw` in `(0, 2)`, if any.
    pub fn normalize<F>(name: impl Into<String>, raw: F, breaks: &[f64]) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        let raw: WeightFn = Arc::new(raw);
        let scale = (0..=1000)
            .map(|k| raw(2.0 * k as f64 / 1000.0).abs())
            .fold(0.0, f64::max);
        if !scale.is_finite() {
            return invalid("raw weight is not finite on [0, 2]");
        }
        let defect = (0..=1000)
            .map(|k| {
                let t = k as f64 / 1000.0;
                (raw(t) + raw(2.0 - t)).abs()
            })
            .fold(0.0, f64::max);
        if defect > 1e-9 * scale.max(f64::MIN_POSITIVE) {
            return invalid(format!(
                "raw weight is not antisymmetric about 1 (max defect {defect:e})"
            ));
        }
        let mut unit = Self {
            name: name.into(),
            catalog_index: None,
            raw,
            norm_const: 1.0,
            antiderivative: None,
            integrals: None,
            breaks: breaks.to_vec(),
        };
        let norm = unit.normalization();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(AsveError::DegenerateInput(
                "raw weight has vanishing antiderivative; cannot normalize".into(),
            ));
        }
        unit.norm_const = norm;
        Ok(unit)
    }

    /// Builds a weight function from a raw function and a given divisor
    /// without checking the normalization.
    pub fn from_parts<F>(name: impl Into<String>, raw: F, norm_const: f64) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self {
            name: name.into(),
            catalog_index: None,
            raw: Arc::new(raw),
            norm_const,
            antiderivative: None,
            integrals: None,
            breaks: vec![],
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn catalog_index(&self) -> Option<usize> {
        self.catalog_index
    }

    /// Divisor applied to the raw function.
    pub fn norm_const(&self) -> f64 {
        self.norm_const
    }

    pub fn breaks(&self) -> &[f64] {
        &self.breaks
    }

    /// `lambda(s)`, zero outside `[0, 2]`.
    pub fn eval(&self, s: f64) -> f64 {
        if !(0.0..=2.0).contains(&s) {
            return 0.0;
        }
        (self.raw)(s) / self.norm_const
    }

    /// `Lambda(u) = -int_0^u lambda(v) dv`, zero outside `[0, 2]`.
    pub fn antiderivative(&self, u: f64) -> f64 {
        if !(0.0..=2.0).contains(&u) {
            return 0.0;
        }
        match &self.antiderivative {
            Some(f) => f(u),
            None => self.antiderivative_quadrature(u),
        }
    }

    /// `Lambda(u)` by adaptive quadrature, regardless of closed forms.
    pub fn antiderivative_quadrature(&self, u: f64) -> f64 {
        if !(0.0..=2.0).contains(&u) {
            return 0.0;
        }
        -integrate_pieces(|v| self.eval(v), 0.0, u, &self.breaks, QUAD_TOL)
    }

    /// `(2 int_0^1 Lambda(s)^2 ds)^{1/2}`; equals 1 for a normalized function.
    pub fn normalization(&self) -> f64 {
        (2.0 * integrate_pieces(|s| self.antiderivative(s).powi(2), 0.0, 1.0, &[], QUAD_TOL)).sqrt()
    }

    /// `||Lambda||^2` on `[0, 2]`.
    pub fn antiderivative_l2_sq(&self) -> f64 {
        integrate_pieces(|s| self.antiderivative(s).powi(2), 0.0, 2.0, &[1.0], QUAD_TOL)
    }

    /// `||lambda||^2` on `[0, 2]`.
    pub fn l2_sq(&self) -> f64 {
        let mut breaks = self.breaks.clone();
        breaks.push(1.0);
        integrate_pieces(|s| self.eval(s).powi(2), 0.0, 2.0, &breaks, QUAD_TOL)
    }

    /// Closed-form lemma integrals where known, quadrature otherwise.
    pub fn lemma_integrals(&self) -> LemmaIntegrals {
        self.integrals
            .unwrap_or_else(|| self.lemma_integrals_quadrature())
    }

    pub fn lemma_integrals_quadrature(&self) -> LemmaIntegrals {
        let mut breaks: Vec<f64> = self
            .breaks
            .iter()
            .flat_map(|&b| [b, 1.0 - b])
            .filter(|&b| b > 0.0 && b < 1.0)
            .collect();
        breaks.push(0.5);
        breaks.sort_by(f64::total_cmp);
        LemmaIntegrals {
            diffusion_cross: integrate_pieces(
                |u| self.antiderivative(u) * self.antiderivative(1.0 - u),
                0.0,
                1.0,
                &breaks,
                QUAD_TOL,
            ),
            noise_cross: integrate_pieces(
                |u| self.eval(u) * self.eval(1.0 - u),
                0.0,
                1.0,
                &breaks,
                QUAD_TOL,
            ),
            l2_half: integrate_pieces(|u| self.eval(u).powi(2), 0.0, 1.0, &breaks, QUAD_TOL),
        }
    }

    /// Largest `|lambda(t) + lambda(2 - t)|` over `points + 1` equispaced
    /// `t` in `[0, 1]`.
    pub fn antisymmetry_defect(&self, points: usize) -> f64 {
        (0..=points)
            .map(|k| {
                let t = k as f64 / points as f64;
                (self.eval(t) + self.eval(2.0 - t)).abs()
            })
            .fold(0.0, f64::max)
    }

    /// `lambda(k / block_len)` for `k = 0..block_len`, the left half of the
    /// window weights. The right half follows from antisymmetry.
    pub fn half_window_weights(&self, block_len: usize) -> Vec<f64> {
        (0..block_len)
            .map(|k| self.eval(k as f64 / block_len as f64))
            .collect()
    }
}

/// Block layout of the pre-averaging transform.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BlockGeometry {
    /// Number of available ticks.
    pub n: usize,
    /// Tuning constant, `m ~ c sqrt(n)`.
    pub c: f64,
    /// Ticks per block, `floor(sqrt(n) / c)`.
    pub block_len: usize,
    /// Number of blocks, `floor(n / block_len)`.
    pub m: usize,
}

/// Smallest sample count accepted by the geometry.
pub const MIN_TICKS: usize = 16;

impl BlockGeometry {
    pub fn new(n: usize, c: f64) -> Result<Self> {
        if n < MIN_TICKS {
            return Err(AsveError::TooFewObservations {
                need: MIN_TICKS,
                got: n,
            });
        }
        if !(c > 0.0) || !c.is_finite() {
            return invalid(format!("block constant c must be positive and finite, got {c}"));
        }
        let raw = (n as f64).sqrt() / c;
        if raw < 2.0 {
            return invalid(format!(
                "c = {c} too large for n = {n}: block length floor(sqrt(n)/c) = {} < 2",
                raw.floor()
            ));
        }
        let block_len = raw.floor() as usize;
        Self::from_block_len(n, block_len, c)
    }

    /// Geometry with a prescribed number of blocks `m` (block length `floor(n/m)`).
    pub fn with_block_count(n: usize, m: usize) -> Result<Self> {
        if n < MIN_TICKS {
            return Err(AsveError::TooFewObservations {
                need: MIN_TICKS,
                got: n,
            });
        }
        if m == 0 || n / m < 2 {
            return invalid(format!("cannot split {n} ticks into {m} blocks of length >= 2"));
        }
        Self::from_block_len(n, n / m, m as f64 / (n as f64).sqrt())
    }

    fn from_block_len(n: usize, block_len: usize, c: f64) -> Result<Self> {
        let m = n / block_len;
        if m < 3 {
            return invalid(format!(
                "only {m} blocks of length {block_len} fit into {n} ticks; need at least 3"
            ));
        }
        Ok(Self {
            n,
            c,
            block_len,
            m,
        })
    }

    /// Ticks actually used, `m * block_len`; trailing ticks are dropped.
    pub fn used_ticks(&self) -> usize {
        self.m * self.block_len
    }

    /// Number of pre-averaged values, `m - 1`.
    pub fn z_len(&self) -> usize {
        self.m - 1
    }

    /// Grid points `(i-1)/m` for `i = 2..m`.
    pub fn z_grid(&self) -> Vec<f64> {
        (1..self.m).map(|k| k as f64 / self.m as f64).collect()
    }

    /// 1-based tick range `((i-2) b, i b]` whose increments move the `q`-th
    /// pre-averaged value (`q = i - 2`).
    pub fn tick_window(&self, q: usize) -> (usize, usize) {
        (q * self.block_len + 1, (q + 2) * self.block_len)
    }
}

/// `block_geometry(n, c)`: `block_len = floor(sqrt(n)/c)`, `m = floor(n / block_len)`.
pub fn block_geometry(n: usize, c: f64) -> Result<BlockGeometry> {
    BlockGeometry::new(n, c)
}

/// The pre-averaged values `Z_{i,m}`, `i = 2..m`.
#[derive(Debug, Clone, PartialEq)]
pub struct PreAveragedSeries {
    pub z: Vec<f64>,
    pub grid: Vec<f64>,
    pub geometry: BlockGeometry,
    /// Set by jump repair for values that were replaced.
    pub rejected: Vec<bool>,
}

impl PreAveragedSeries {
    pub fn new(z: Vec<f64>, geometry: BlockGeometry) -> Result<Self> {
        if z.len() != geometry.z_len() {
            return invalid(format!(
                "expected {} pre-averaged values, got {}",
                geometry.z_len(),
                z.len()
            ));
        }
        let grid = geometry.z_grid();
        let rejected = vec![false; z.len()];
        Ok(Self {
            z,
            grid,
            geometry,
            rejected,
        })
    }

    pub fn len(&self) -> usize {
        self.z.len()
    }

    pub fn is_empty(&self) -> bool {
        self.z.is_empty()
    }

    pub fn rejected_count(&self) -> usize {
        self.rejected.iter().filter(|r| **r).count()
    }

    pub fn scaled(&self, a: f64) -> Self {
        Self {
            z: self.z.iter().map(|z| a * z).collect(),
            ..self.clone()
        }
    }
}

fn check_len(ticks: &TickSeries, geom: &BlockGeometry) -> Result<()> {
    if ticks.len() < geom.used_ticks() {
        return invalid(format!(
            "geometry needs {} ticks, series has {}",
            geom.used_ticks(),
            ticks.len()
        ));
    }
    Ok(())
}

/// Block averages `Ybar_{i,m}` for `i = 2..m`.
///
/// Pairs `k` with `2b - k` so that `lambda(2 - s) = -lambda(s)` holds exactly
/// in floating point; constant shifts of `Y` then cancel bit-for-bit.
pub fn block_averages(ticks: &TickSeries, lam: &PreAverageFunction, geom: &BlockGeometry) -> Result<Vec<f64>> {
    check_len(ticks, geom)?;
    let b = geom.block_len;
    let half = lam.half_window_weights(b);
    let y = ticks.values();
    // 1-based tick j, with j = 0 read as the first tick
    let at = |j: usize| y[j.saturating_sub(1)];
    let inv_b = 1.0 / b as f64;
    Ok((0..geom.z_len())
        .map(|q| {
            let s = q * b;
            let acc: f64 = half
                .iter()
                .enumerate()
                .map(|(k, w)| w * (at(s + k) - at(s + 2 * b - k)))
                .sum();
            acc * inv_b
        })
        .collect())
}

/// Bias corrections `b(lambda, Y)_{i,m}` for `i = 2..m`.
pub fn bias_terms(ticks: &TickSeries, lam: &PreAverageFunction, geom: &BlockGeometry) -> Result<Vec<f64>> {
    check_len(ticks, geom)?;
    let b = geom.block_len;
    let sq: Vec<f64> = (0..=2 * b)
        .map(|k| lam.eval(k as f64 / b as f64).powi(2))
        .collect();
    let y = ticks.values();
    // squared increment ending at 1-based tick j; zero where Y_{j-1} is missing
    let inc2 = |j: usize| {
        if j < 2 {
            0.0
        } else {
            (y[j - 1] - y[j - 2]).powi(2)
        }
    };
    let scale = 0.5 / (b as f64 * b as f64);
    Ok((0..geom.z_len())
        .map(|q| {
            let s = q * b;
            sq.iter()
                .enumerate()
                .map(|(k, w2)| w2 * inc2(s + k))
                .sum::<f64>()
                * scale
        })
        .collect())
}

/// `Z_{i,m} = m (Ybar_{i,m}^2 - b(lambda, Y)_{i,m})`.
pub fn pre_average(ticks: &TickSeries, lam: &PreAverageFunction, geom: &BlockGeometry) -> Result<PreAveragedSeries> {
    pre_average_with(ticks, lam, geom, true)
}

/// As [`pre_average`], optionally without the bias correction.
pub fn pre_average_with(
    ticks: &TickSeries,
    lam: &PreAverageFunction,
    geom: &BlockGeometry,
    bias_correction: bool,
) -> Result<PreAveragedSeries> {
    let means = block_averages(ticks, lam, geom)?;
    let m = geom.m as f64;
    let z = if bias_correction {
        let bias = bias_terms(ticks, lam, geom)?;
        means
            .iter()
            .zip(&bias)
            .map(|(y, b)| m * (y * y - b))
            .collect()
    } else {
        means.iter().map(|y| m * y * y).collect()
    };
    PreAveragedSeries::new(z, *geom)
}

/// Empirical scalar product `(1/m) sum_{i=2}^m g((i-1)/m) Z_{i,m}`.
pub fn scalar_product<G: Fn(f64) -> f64>(zs: &PreAveragedSeries, g: G) -> f64 {
    zs.grid
        .iter()
        .zip(&zs.z)
        .map(|(t, z)| g(*t) * z)
        .sum::<f64>()
        / zs.geometry.m as f64
}

/// Integrated volatility estimate `<sigma^2, 1>`.
pub fn integrated_volatility(zs: &PreAveragedSeries) -> f64 {
    scalar_product(zs, |_| 1.0)
}

/// Rescaled quadratic variation `(2n)^{-1} sum_{i=2}^n (Y_i - Y_{i-1})^2`,
/// an estimate of the integrated noise variance.
pub fn noise_level(ticks: &TickSeries) -> Result<f64> {
    let y = ticks.values();
    if y.len() < 2 {
        return Err(AsveError::TooFewObservations {
            need: 2,
            got: y.len(),
        });
    }
    let qv: f64 = y.windows(2).map(|w| (w[1] - w[0]).powi(2)).sum();
    Ok(qv / (2.0 * y.len() as f64))
}

/// Sample standard deviation of the pre-averaged values.
pub fn z_spread(zs: &PreAveragedSeries) -> f64 {
    sample_std(&zs.z)
}
