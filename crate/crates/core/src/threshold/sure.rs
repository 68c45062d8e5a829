//! Levelwise SURE block James-Stein selection.

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ShrinkMode {
    /// Coefficientwise James-Stein at the universal threshold `2 log d`.
    SparseUniversal,
    /// Block James-Stein with SURE-chosen `(lambda, L)`.
    BlockJamesStein,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SureSelection {
    pub level: usize,
    pub lambda_star: f64,
    pub l_star: usize,
    /// Mean of `d~^2 - 1` over the level.
    pub t_stat: f64,
    pub mode: ShrinkMode,
    /// Number of coefficients the selection was computed on.
    pub d: usize,
}

/// Relative slack under which two risks count as tied.
pub const TIE_TOL: f64 = 1e-10;

/// Stein's unbiased risk of block James-Stein on one block with squared
/// norm `norm_sq`.
pub fn sure_risk_norm(norm_sq: f64, lambda: f64, l: usize) -> f64 {
    let l = l as f64;
    if norm_sq > lambda {
        l + (lambda * lambda - 2.0 * lambda * (l - 2.0)) / norm_sq
    } else {
        l + norm_sq - 2.0 * l
    }
}

pub fn sure_risk(v: &[f64], lambda: f64, l: usize) -> f64 {
    sure_risk_norm(v.iter().map(|x| x * x).sum(), lambda, l)
}

/// `d^{-1/2} log2(d)^{3/2}`.
pub fn sparsity_threshold(d: usize) -> f64 {
    let d = d as f64;
    d.powf(-0.5) * d.log2().powf(1.5)
}

/// Candidate thresholds for block length `l` on a level of `d`
/// coefficients: the interval endpoints and every block norm clipped into
/// the interval, ascending and deduplicated.
pub fn candidates(norms: &[f64], l: usize, d: usize) -> Vec<f64> {
    let lo = (l as f64 - 2.0).max(0.0);
    let hi = (2.0 * l as f64 * (d as f64).ln()).max(lo);
    let mut c: Vec<f64> = norms.iter().map(|s| s.clamp(lo, hi)).collect();
    c.push(lo);
    c.push(hi);
    c.sort_by(f64::total_cmp);
    c.dedup();
    c
}

/// Squared norms of the `floor(d / l)` complete blocks.
pub fn block_norms(x: &[f64], l: usize) -> Vec<f64> {
    x.chunks_exact(l).map(|b| b.iter().map(|v| v * v).sum()).collect()
}

/// Picks the shrinkage rule for one level of standardized coefficients.
/// Returns `None` for an empty level.
pub fn select_sure(level: usize, x: &[f64]) -> Option<SureSelection> {
    let d = x.len();
    if d == 0 {
        return None;
    }
    let t_stat = x.iter().map(|v| v * v - 1.0).sum::<f64>() / d as f64;
    let universal = 2.0 * (d as f64).ln();
    if t_stat <= sparsity_threshold(d) {
        return Some(SureSelection {
            level,
            lambda_star: universal,
            l_star: 1,
            t_stat,
            mode: ShrinkMode::SparseUniversal,
            d,
        });
    }
    let max_l = ((d as f64).sqrt().floor() as usize).max(1);
    let mut best: Option<(f64, f64, usize)> = None;
    for l in 1..=max_l {
        let mut norms = block_norms(x, l);
        let cands = candidates(&norms, l, d);
        norms.sort_by(f64::total_cmp);
        let k = norms.len();
        // prefix sums over ascending norms
        let mut pre_s = vec![0.0; k + 1];
        let mut pre_inv = vec![0.0; k + 1];
        for i in 0..k {
            pre_s[i + 1] = pre_s[i] + norms[i];
            pre_inv[i + 1] = pre_inv[i] + if norms[i] > 0.0 { 1.0 / norms[i] } else { 0.0 };
        }
        let lf = l as f64;
        for &lam in &cands {
            // blocks with norm <= lam are killed
            let dead = norms.partition_point(|s| *s <= lam);
            let alive_inv = pre_inv[k] - pre_inv[dead];
            let risk = k as f64 * lf
                + (lam * lam - 2.0 * lam * (lf - 2.0)) * alive_inv
                + pre_s[dead]
                - 2.0 * lf * dead as f64;
            let better = match best {
                None => true,
                Some((r, _, _)) => risk < r - TIE_TOL * r.abs().max(1.0),
            };
            if better {
                best = Some((risk, lam, l));
            }
        }
    }
    let (_, lambda_star, l_star) = best.expect("at least one candidate");
    Some(SureSelection {
        level,
        lambda_star,
        l_star,
        t_stat,
        mode: ShrinkMode::BlockJamesStein,
        d,
    })
}

/// Multipliers `(1 - lambda / ||block||^2)_+` of block James-Stein with
/// blocks of `l`; a trailing partial block uses its own norm.
pub fn shrink_factors(x: &[f64], lambda: f64, l: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(x.len());
    for block in x.chunks(l.max(1)) {
        let s: f64 = block.iter().map(|v| v * v).sum();
        let f = if s > 0.0 { (1.0 - lambda / s).max(0.0) } else { 0.0 };
        out.extend(std::iter::repeat_n(f, block.len()));
    }
    out
}

pub fn shrink(x: &mut [f64], lambda: f64, l: usize) {
    let factors = shrink_factors(x, lambda, l);
    for (v, f) in x.iter_mut().zip(factors) {
        *v *= f;
    }
}

/// Term-by-term hard thresholding, kept as a baseline.
pub fn hard_threshold(x: f64, t: f64) -> f64 {
    if x.abs() > t {
        x
    } else {
        0.0
    }
}

/// Term-by-term soft thresholding, kept as a baseline.
pub fn soft_threshold(x: f64, t: f64) -> f64 {
    x.signum() * (x.abs() - t).max(0.0)
}
