//! Orthonormal Haar transform on `[0, 1]`.
//!
//! Inputs of non-dyadic length are extended to `2^J` by half-sample symmetric
//! reflection. Detail coefficients whose support lies entirely in the
//! extension are flagged; they never influence the truncated output.
//!
//! With `m` pre-averaged values the orthonormal coefficient `w_{j,k}` relates
//! to the empirical scalar product with `psi_{j,k}` by
//! `<Z, psi_{j,k}> ~ w_{j,k} / sqrt(m)`. Thresholding standardizes the
//! coefficients, so the constant does not enter the estimator.

use std::f64::consts::FRAC_1_SQRT_2;

use crate::error::{invalid, Result};
use crate::series::{CurveSource, VolatilityCurve};

/// Default coarsest level.
pub const DEFAULT_J0: usize = 2;

#[derive(Debug, Clone, PartialEq)]
pub struct WaveletCoefficients {
    /// Coarsest level; `scaling` holds `2^j0` coefficients.
    pub j0: usize,
    /// `log2` of the padded length.
    pub levels: usize,
    /// Length of the unpadded input.
    pub len: usize,
    pub scaling: Vec<f64>,
    /// `details[j - j0]` holds the `2^j` coefficients of level `j`.
    pub details: Vec<Vec<f64>>,
}

impl WaveletCoefficients {
    pub fn padded_len(&self) -> usize {
        1 << self.levels
    }

    /// Finest detail level, `None` when there are no details.
    pub fn j1(&self) -> Option<usize> {
        (self.levels > self.j0).then(|| self.levels - 1)
    }

    pub fn detail(&self, j: usize) -> &[f64] {
        &self.details[j - self.j0]
    }

    pub fn detail_mut(&mut self, j: usize) -> &mut [f64] {
        &mut self.details[j - self.j0]
    }

    /// Half-open support of `psi_{j,k}` in padded index space.
    pub fn support(&self, j: usize, k: usize) -> (usize, usize) {
        let w = 1 << (self.levels - j);
        (k * w, (k + 1) * w)
    }

    /// Whether `psi_{j,k}` is supported entirely in the padding.
    pub fn is_padding(&self, j: usize, k: usize) -> bool {
        self.support(j, k).0 >= self.len
    }

    /// Number of coefficients at level `j` that touch real data.
    pub fn data_count(&self, j: usize) -> usize {
        let w = 1 << (self.levels - j);
        self.len.div_ceil(w).min(1 << j)
    }

    /// Sum of squares of all coefficients.
    pub fn energy(&self) -> f64 {
        self.scaling.iter().map(|x| x * x).sum::<f64>()
            + self
                .details
                .iter()
                .flatten()
                .map(|x| x * x)
                .sum::<f64>()
    }

    fn check(&self) -> Result<()> {
        if self.j0 > self.levels {
            return invalid(format!("j0 = {} exceeds {} levels", self.j0, self.levels));
        }
        if self.scaling.len() != 1 << self.j0 {
            return invalid(format!(
                "expected {} scaling coefficients, got {}",
                1usize << self.j0,
                self.scaling.len()
            ));
        }
        if self.details.len() != self.levels - self.j0 {
            return invalid(format!(
                "expected {} detail levels, got {}",
                self.levels - self.j0,
                self.details.len()
            ));
        }
        for (i, d) in self.details.iter().enumerate() {
            let j = self.j0 + i;
            if d.len() != 1 << j {
                return invalid(format!("level {j} has {} coefficients, expected {}", d.len(), 1usize << j));
            }
        }
        if self.len == 0 || self.len > self.padded_len() {
            return invalid(format!("length {} incompatible with padded length {}", self.len, self.padded_len()));
        }
        Ok(())
    }
}

/// Smallest `J` with `2^J >= len`.
pub fn dyadic_levels(len: usize) -> usize {
    len.next_power_of_two().trailing_zeros() as usize
}

/// Half-sample symmetric extension of `values` to length `target`.
pub fn reflect_pad(values: &[f64], target: usize) -> Vec<f64> {
    let n = values.len();
    (0..target)
        .map(|p| {
            let r = p % (2 * n);
            if r < n {
                values[r]
            } else {
                values[2 * n - 1 - r]
            }
        })
        .collect()
}

/// Forward transform down to level `j0` (clamped to the number of levels).
pub fn dwt(values: &[f64], j0: usize) -> Result<WaveletCoefficients> {
    if values.is_empty() {
        return invalid("cannot transform an empty vector");
    }
    let levels = dyadic_levels(values.len());
    let j0 = j0.min(levels);
    let mut approx = reflect_pad(values, 1 << levels);
    let mut details = Vec::with_capacity(levels - j0);
    for _ in j0..levels {
        let half = approx.len() / 2;
        let mut a = Vec::with_capacity(half);
        let mut d = Vec::with_capacity(half);
        for pair in approx.chunks_exact(2) {
            a.push((pair[0] + pair[1]) * FRAC_1_SQRT_2);
            d.push((pair[0] - pair[1]) * FRAC_1_SQRT_2);
        }
        details.push(d);
        approx = a;
    }
    details.reverse();
    Ok(WaveletCoefficients {
        j0,
        levels,
        len: values.len(),
        scaling: approx,
        details,
    })
}

/// Inverse transform with the padding removed.
pub fn idwt(coeffs: &WaveletCoefficients) -> Result<Vec<f64>> {
    coeffs.check()?;
    let mut approx = coeffs.scaling.clone();
    for d in &coeffs.details {
        let mut next = Vec::with_capacity(2 * approx.len());
        for (a, d) in approx.iter().zip(d) {
            next.push((a + d) * FRAC_1_SQRT_2);
            next.push((a - d) * FRAC_1_SQRT_2);
        }
        approx = next;
    }
    approx.truncate(coeffs.len);
    Ok(approx)
}

/// Piecewise-constant synthesis evaluated at `t_grid`: sample `i` of the
/// reconstruction covers `[i/len, (i+1)/len)`.
pub fn eval_curve(coeffs: &WaveletCoefficients, t_grid: &[f64]) -> Result<VolatilityCurve> {
    let values = idwt(coeffs)?;
    let len = values.len();
    let mut out = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        if !(0.0..=1.0).contains(&t) {
            return invalid(format!("evaluation point {t} outside [0, 1]"));
        }
        let idx = ((t * len as f64).floor() as usize).min(len - 1);
        out.push(values[idx]);
    }
    VolatilityCurve::new(t_grid.to_vec(), out, CurveSource::Synthesis)
}
