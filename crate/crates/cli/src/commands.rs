//! Subcommand bodies, callable without the argument parser.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use asve_core::covol::{covol_estimate, PairedTicks};
use asve_core::jumps::JumpReport;
use asve_core::sim::{HestonParams, JumpSpec, NoiseKind, NoiseSpec, Scenario};
use asve_core::timescheme::{default_target_count, estimate_intensity, tick_to_real, to_tick_time, IntensityCurve};
use asve_core::tuning::{table1, SnrEstimate};
use asve_core::{asve, TickSeries};
use serde::Serialize;

use crate::config::{Config, TimeScheme};
use crate::ingest::{ingest, write_ticks, IngestOptions, Ingested};
use crate::output::{plot_svg, write_curve_file, write_json, write_rows};

pub const TOOL: &str = "asve";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Serialize)]
pub struct InputSummary {
    pub path: String,
    pub n: usize,
    pub dropped_rows: usize,
    pub collapsed_duplicates: usize,
    pub log_ref: f64,
}

impl InputSummary {
    fn new(path: &Path, data: &Ingested) -> Self {
        Self {
            path: path.display().to_string(),
            n: data.raw.len(),
            dropped_rows: data.dropped,
            collapsed_duplicates: data.collapsed,
            log_ref: data.log_ref(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EstimateMeta {
    pub tool: &'static str,
    pub version: &'static str,
    pub input: InputSummary,
    pub config: Config,
    pub lambda: String,
    pub m: usize,
    pub block_len: usize,
    pub c: f64,
    pub snr: Option<SnrEstimate>,
    pub tau_sq_hat: f64,
    pub j0: usize,
    pub j_i: usize,
    pub s_glob: f64,
    pub rejected_z: usize,
    pub jump_report: Option<JumpReport>,
    pub time_scheme: TimeScheme,
    /// Trading intensity on the output grid, real-time scheme only.
    pub intensity: Option<IntensityCurve>,
}

/// Estimates the spot volatility of one tick file and writes `curve.csv`,
/// `meta.json` and optionally `plot.svg` into `out_dir`.
pub fn run_estimate(config: &Config, input: &Path, out_dir: &Path, plot: bool) -> Result<EstimateMeta> {
    let data = ingest(input, &IngestOptions::default())?;
    let ticks = to_tick_time(&data.raw, data.log_ref())?;
    let out = asve(&ticks, &config.asve_config()?)?;
    let (curve, intensity) = match config.time_scheme {
        TimeScheme::Tick => (out.curve.clone(), None),
        TimeScheme::Real => {
            let nu = estimate_intensity(&data.raw, default_target_count(data.raw.len()), &out.curve.grid)?;
            (tick_to_real(&out.curve, &nu)?, Some(nu))
        }
    };
    std::fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    write_curve_file(&out_dir.join("curve.csv"), &curve.grid, &curve.values)?;
    if plot {
        let svg = plot_svg(data.raw.prices(), &curve.grid, &curve.values);
        std::fs::write(out_dir.join("plot.svg"), svg)?;
    }
    let meta = EstimateMeta {
        tool: TOOL,
        version: VERSION,
        input: InputSummary::new(input, &data),
        config: config.clone(),
        lambda: config.asve_config()?.lam.name().to_string(),
        m: out.geometry.m,
        block_len: out.geometry.block_len,
        c: out.c,
        snr: out.snr,
        tau_sq_hat: out.tau_sq_hat,
        j0: out.j0,
        j_i: out.j_i,
        s_glob: out.s_glob,
        rejected_z: out.zs.rejected_count(),
        jump_report: out.jump_report,
        time_scheme: config.time_scheme,
        intensity,
    };
    write_json(&out_dir.join("meta.json"), &meta)?;
    Ok(meta)
}

#[derive(Debug, Clone, Serialize)]
pub struct SimulateOptions {
    pub n: usize,
    pub noise_std: f64,
    pub noise_kind: NoiseKind,
    pub jump_intensity: f64,
    pub jump_std: f64,
    /// Price grid for rounding; `None` leaves prices unrounded.
    pub tick_size: Option<f64>,
    pub ref_price: f64,
    /// Session length in seconds; ticks are equally spaced.
    pub session_seconds: f64,
    pub heston: HestonParams,
    pub seed: u64,
}

impl Default for SimulateOptions {
    fn default() -> Self {
        Self {
            n: 15_000,
            noise_std: 1.0 / 5000.0,
            noise_kind: NoiseKind::Gaussian,
            jump_intensity: 0.0,
            jump_std: 1e-3,
            tick_size: None,
            ref_price: 110.0,
            session_seconds: 30_600.0,
            heston: HestonParams::default(),
            seed: 0,
        }
    }
}

impl SimulateOptions {
    pub fn scenario(&self) -> Scenario {
        Scenario {
            heston: self.heston,
            n: self.n,
            noise: NoiseSpec {
                kind: self.noise_kind,
                std: self.noise_std,
                profile: None,
            },
            jumps: (self.jump_intensity > 0.0).then_some(JumpSpec {
                intensity: self.jump_intensity,
                size_std: self.jump_std,
            }),
            rounding: self.tick_size.map(|t| (self.ref_price, t)),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SimulateManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub options: SimulateOptions,
    pub jumps: Vec<(f64, f64)>,
    pub clip_fraction: f64,
    pub integrated_variance: f64,
}

/// Writes `ticks.csv`, `truth.csv` (`sigma^2` at the tick times) and
/// `manifest.json`.
pub fn run_simulate(opts: &SimulateOptions, out_dir: &Path) -> Result<SimulateManifest> {
    if !(opts.session_seconds > 0.0) || !(opts.ref_price > 0.0) {
        bail!("session length and reference price must be positive");
    }
    let day = opts.scenario().generate(opts.seed)?;
    let n = day.n();
    let times: Vec<f64> = (1..=n).map(|j| opts.session_seconds * j as f64 / n as f64).collect();
    let prices: Vec<f64> = day.ticks.values().iter().map(|y| opts.ref_price * y.exp()).collect();
    let grid: Vec<f64> = (1..=n).map(|j| j as f64 / n as f64).collect();
    std::fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    let f = std::fs::File::create(out_dir.join("ticks.csv"))?;
    write_ticks(std::io::BufWriter::new(f), &times, &prices)?;
    write_curve_file(&out_dir.join("truth.csv"), &grid, &day.tick_sigma2)?;
    let manifest = SimulateManifest {
        tool: TOOL,
        version: VERSION,
        options: opts.clone(),
        jumps: day.jump_times.clone(),
        clip_fraction: day.clip_fraction,
        integrated_variance: day.tick_sigma2.iter().sum::<f64>() / n as f64,
    };
    write_json(&out_dir.join("manifest.json"), &manifest)?;
    Ok(manifest)
}

#[derive(Debug, Clone, Serialize)]
pub struct CovolMeta {
    pub tool: &'static str,
    pub version: &'static str,
    pub inputs: [InputSummary; 2],
    pub config: Config,
    pub m: usize,
    pub block_len: usize,
    pub c: f64,
    pub snr: Option<f64>,
    pub jump_reports: Option<(JumpReport, JumpReport)>,
}

/// Covolatility of two tick files sharing one time column.
pub fn run_covol(config: &Config, first: &Path, second: &Path, out_dir: &Path) -> Result<CovolMeta> {
    let a = ingest(first, &IngestOptions::default())?;
    let b = ingest(second, &IngestOptions::default())?;
    if a.raw.times() != b.raw.times() {
        bail!(
            "{} and {} do not share identical time columns",
            first.display(),
            second.display()
        );
    }
    let pair = PairedTicks::new(to_tick_time(&a.raw, a.log_ref())?, to_tick_time(&b.raw, b.log_ref())?)?;
    let out = covol_estimate(&pair, &config.asve_config()?)?;
    std::fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    write_curve_file(&out_dir.join("curve.csv"), &out.curve.grid, &out.curve.values)?;
    let meta = CovolMeta {
        tool: TOOL,
        version: VERSION,
        inputs: [InputSummary::new(first, &a), InputSummary::new(second, &b)],
        config: config.clone(),
        m: out.geometry.m,
        block_len: out.geometry.block_len,
        c: out.c,
        snr: out.snr,
        jump_reports: out.jump_reports,
    };
    write_json(&out_dir.join("meta.json"), &meta)?;
    Ok(meta)
}

pub const DEFAULT_SIGNATURE_STEPS: [usize; 10] = [1, 2, 3, 5, 10, 20, 30, 60, 120, 300];

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SignaturePoint {
    pub step: usize,
    pub rv: f64,
}

/// Realized variance of every `step`-th observation.
pub fn signature(ticks: &TickSeries, steps: &[usize]) -> Result<Vec<SignaturePoint>> {
    let y = ticks.values();
    let n = y.len();
    steps
        .iter()
        .map(|&k| {
            if k == 0 || k > n / 2 {
                bail!("step {k} outside 1..={}", n / 2);
            }
            let rv = y.iter().step_by(k).zip(y.iter().step_by(k).skip(1)).map(|(a, b)| (b - a).powi(2)).sum();
            Ok(SignaturePoint { step: k, rv })
        })
        .collect()
}

pub fn run_signature(input: &Path, steps: &[usize], out: &mut dyn std::io::Write) -> Result<Vec<SignaturePoint>> {
    let data = ingest(input, &IngestOptions::default())?;
    let points = signature(&to_tick_time(&data.raw, data.log_ref())?, steps)?;
    write_rows(out, &points)?;
    Ok(points)
}

/// Optimal `c* tau / sigma` and MSE constant per catalog function, as printed
/// in the reference table.
pub const TABLE1_REFERENCE: [(f64, f64); 7] = [
    (0.49, 10.21),
    (0.17, 31.36),
    (0.35, 10.74),
    (0.30, 12.52),
    (0.19, 24.35),
    (0.47, 20.41),
    (0.38, 20.36),
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CalibrationRow {
    pub index: usize,
    pub lambda: String,
    pub c_star_tau_over_sigma: f64,
    pub mse_const: f64,
    pub reference_c: f64,
    pub reference_mse: f64,
}

pub fn calibrate_table() -> Vec<CalibrationRow> {
    table1()
        .into_iter()
        .zip(TABLE1_REFERENCE)
        .enumerate()
        .map(|(i, (r, (c, mse)))| CalibrationRow {
            index: i + 1,
            lambda: r.lam,
            c_star_tau_over_sigma: r.c_star_over_snr,
            mse_const: r.mse_const,
            reference_c: c,
            reference_mse: mse,
        })
        .collect()
}

/// Output path helper: `dir/name`, or `name` in the working directory.
pub fn out_path(dir: Option<&Path>, name: &str) -> PathBuf {
    dir.map_or_else(|| PathBuf::from(name), |d| d.join(name))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_series_has_flat_zero_signature() {
        let pts = signature(&TickSeries::new(vec![0.3; 100]), &[1, 7, 50]).unwrap();
        assert!(pts.iter().all(|p| p.rv == 0.0));
        assert!(signature(&TickSeries::new(vec![0.0; 100]), &[51]).is_err());
        assert!(signature(&TickSeries::new(vec![0.0; 100]), &[0]).is_err());
    }

    #[test]
    fn signature_sums_subsampled_squares() {
        let y: Vec<f64> = (0..10).map(|i| (i * i) as f64).collect();
        let pts = signature(&TickSeries::new(y), &[3]).unwrap();
        // 0, 9, 36, 81
        assert_eq!(pts[0].rv, 81.0 + 729.0 + 2025.0);
    }

    #[test]
    fn calibration_rows_carry_reference() {
        let rows = calibrate_table();
        assert_eq!(rows.len(), 7);
        assert_eq!(rows[3].reference_c, 0.30);
        assert!((rows[2].c_star_tau_over_sigma - 0.35).abs() < 0.01);
    }
}
