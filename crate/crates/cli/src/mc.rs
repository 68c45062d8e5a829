//! Monte Carlo reproduction of the calibration, noise-stability and
//! robustness tables.

use std::str::FromStr;

use anyhow::{bail, Result};
use asve_core::numerics::{mean, sample_std};
use asve_core::sim::{derive_seed, ise, JumpSpec, NoiseKind, NoiseSpec, Scenario};
use asve_core::{asve, AsveConfig};
use rayon::prelude::*;
use serde::Serialize;

use crate::commands::calibrate_table;

pub const MIN_REPS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Study {
    Table1,
    Table2,
    Table3,
}

impl FromStr for Study {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "table1" => Ok(Study::Table1),
            "table2" => Ok(Study::Table2),
            "table3" => Ok(Study::Table3),
            other => bail!("unknown study `{other}` (table1, table2, table3)"),
        }
    }
}

/// One cell of a reproduced table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McRow {
    pub study: &'static str,
    pub row: String,
    pub column: String,
    pub metric: &'static str,
    pub value: f64,
    /// Monte Carlo standard error; `None` for deterministic cells.
    pub std_err: Option<f64>,
    pub reference: f64,
    pub reps: usize,
}

/// Noise multiples `x` in std `x / 5000`.
pub const NOISE_LEVELS: [f64; 3] = [1.0, 3.0, 10.0];
/// MISE and rMISE by noise kind (gaussian, uniform) and level.
pub const TABLE2_MISE: [[f64; 3]; 2] = [[1.41e-11, 2.39e-11, 5.05e-11], [1.40e-11, 2.40e-11, 5.08e-11]];
pub const TABLE2_RMISE: [[f64; 3]; 2] = [[0.11, 0.19, 0.39], [0.12, 0.19, 0.40]];
/// Columns pure, rounded, jumps, jumps + rounded; rows without and with
/// detection.
pub const TABLE3_MISE: [[f64; 4]; 2] = [[1.41e-11, 1.41e-11, 12.64e-11, 12.86e-11], [1.68e-11, 1.69e-11, 1.69e-11, 1.70e-11]];
pub const TABLE3_COLUMNS: [&str; 4] = ["pure", "rounded", "jumps", "jumps-rounded"];

fn summary(xs: &[f64]) -> (f64, f64) {
    (mean(xs), sample_std(xs) / (xs.len() as f64).sqrt())
}

/// Per-replication `(ISE, ISE / int sigma^4)` for each config, all configs
/// run on the same simulated day.
pub fn replicate(scenario: &Scenario, configs: &[AsveConfig], reps: usize, seed: u64) -> Result<Vec<Vec<(f64, f64)>>> {
    let per_rep: Vec<Vec<(f64, f64)>> = (0..reps)
        .into_par_iter()
        .map(|r| -> Result<Vec<(f64, f64)>> {
            let day = scenario.generate(derive_seed(seed, r as u64))?;
            configs
                .iter()
                .map(|cfg| {
                    let out = asve(&day.ticks, cfg)?;
                    let truth = day.truth_on(&out.curve.grid);
                    let q = truth.iter().map(|v| v * v).sum::<f64>() / truth.len() as f64;
                    let e = ise(&out.curve, &truth)?;
                    Ok((e, e / q))
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    Ok((0..configs.len())
        .map(|k| per_rep.iter().map(|v| v[k]).collect())
        .collect())
}

fn table2(reps: usize, seed: u64) -> Result<Vec<McRow>> {
    let mut rows = Vec::new();
    let cfg = AsveConfig {
        jump_filter: false,
        ..AsveConfig::default()
    };
    for (ki, kind) in [NoiseKind::Gaussian, NoiseKind::Uniform].into_iter().enumerate() {
        for (li, x) in NOISE_LEVELS.iter().enumerate() {
            let scenario = Scenario {
                noise: NoiseSpec {
                    kind,
                    std: x / 5000.0,
                    profile: None,
                },
                ..Scenario::paper_default()
            };
            let res = replicate(&scenario, std::slice::from_ref(&cfg), reps, seed)?.remove(0);
            let kind_name = if ki == 0 { "gaussian" } else { "uniform" };
            let (ises, rel): (Vec<f64>, Vec<f64>) = res.into_iter().unzip();
            for (metric, xs, reference) in [("mise", &ises, TABLE2_MISE[ki][li]), ("rmise", &rel, TABLE2_RMISE[ki][li])] {
                let (m, se) = summary(xs);
                rows.push(McRow {
                    study: "table2",
                    row: kind_name.to_string(),
                    column: format!("{x}/5000"),
                    metric,
                    value: m,
                    std_err: Some(se),
                    reference,
                    reps,
                });
            }
        }
    }
    Ok(rows)
}

fn table3(reps: usize, seed: u64) -> Result<Vec<McRow>> {
    let base = Scenario::paper_default();
    let jumps = Some(JumpSpec {
        intensity: 1.0 / 3.0,
        size_std: 1e-3,
    });
    let rounding = Some((110.0, 0.01));
    let scenarios = [
        base.clone(),
        Scenario { rounding, ..base.clone() },
        Scenario { jumps, ..base.clone() },
        Scenario { jumps, rounding, ..base },
    ];
    let configs = [false, true].map(|jump_filter| AsveConfig {
        jump_filter,
        ..AsveConfig::default()
    });
    let mut rows = Vec::new();
    for (ci, sc) in scenarios.iter().enumerate() {
        let res = replicate(sc, &configs, reps, seed)?;
        for (di, r) in res.iter().enumerate() {
            let ises: Vec<f64> = r.iter().map(|p| p.0).collect();
            let (m, se) = summary(&ises);
            rows.push(McRow {
                study: "table3",
                row: if di == 0 { "without-detection" } else { "with-detection" }.to_string(),
                column: TABLE3_COLUMNS[ci].to_string(),
                metric: "mise",
                value: m,
                std_err: Some(se),
                reference: TABLE3_MISE[di][ci],
                reps,
            });
        }
    }
    Ok(rows)
}

fn table1_rows() -> Vec<McRow> {
    calibrate_table()
        .into_iter()
        .flat_map(|r| {
            let row = format!("lambda{}", r.index);
            [
                ("c_star_tau_over_sigma", r.c_star_tau_over_sigma, r.reference_c),
                ("mse_const", r.mse_const, r.reference_mse),
            ]
            .map(|(metric, value, reference)| McRow {
                study: "table1",
                row: row.clone(),
                column: r.lambda.clone(),
                metric,
                value,
                std_err: None,
                reference,
                reps: 0,
            })
        })
        .collect()
}

/// Runs `study` with `reps` replications seeded from `seed`. Replications run
/// in parallel; results do not depend on the thread count.
pub fn run_mc(study: Study, reps: usize, seed: u64) -> Result<Vec<McRow>> {
    if study != Study::Table1 && reps < MIN_REPS {
        bail!("at least {MIN_REPS} replications required, got {reps}");
    }
    match study {
        Study::Table1 => Ok(table1_rows()),
        Study::Table2 => table2(reps, seed),
        Study::Table3 => table3(reps, seed),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn too_few_reps_rejected() {
        assert!(run_mc(Study::Table2, 10, 0).is_err());
        assert_eq!(run_mc(Study::Table1, 0, 0).unwrap().len(), 14);
        assert!("table4".parse::<Study>().is_err());
    }

    #[test]
    fn replication_is_seeded() {
        let sc = Scenario {
            n: 4096,
            ..Scenario::paper_default()
        };
        let cfg = [AsveConfig::default()];
        let a = replicate(&sc, &cfg, 4, 9).unwrap();
        let b = replicate(&sc, &cfg, 4, 9).unwrap();
        assert_eq!(a, b);
    }
}
