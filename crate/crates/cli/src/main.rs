use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use asve_cli::commands::{
    calibrate_table, run_covol, run_estimate, run_signature, run_simulate, SimulateOptions, DEFAULT_SIGNATURE_STEPS,
};
use asve_cli::config::Config;
use asve_cli::mc::{run_mc, Study};
use asve_cli::output::write_rows;
use asve_core::sim::NoiseKind;
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "asve", version, about = "Adaptive spot volatility estimation from tick data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Settings shared by the estimators. Flags override the config file.
#[derive(Args, Debug, Default)]
struct ConfigArgs {
    /// `key = value` config file
    #[arg(long)]
    config: Option<PathBuf>,
    /// Catalog index of the pre-average function (1-7)
    #[arg(long)]
    lambda: Option<usize>,
    /// `auto`, `auto:<factor>` or a fixed constant
    #[arg(long)]
    c: Option<String>,
    #[arg(long)]
    j0: Option<usize>,
    /// Interval level, `auto` or an integer
    #[arg(long = "j-i")]
    j_i: Option<String>,
    #[arg(long, conflicts_with = "jump_filter")]
    no_jump_filter: bool,
    #[arg(long)]
    jump_filter: bool,
    #[arg(long)]
    jump_t: Option<f64>,
    #[arg(long)]
    one_sided_jumps: bool,
    /// `tick` or `real`
    #[arg(long)]
    time_scheme: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
}

impl ConfigArgs {
    fn resolve(&self) -> Result<Config> {
        let mut cfg = match &self.config {
            Some(p) => Config::from_file(p)?,
            None => Config::default(),
        };
        let mut set = |k: &str, v: Option<String>| -> Result<()> {
            if let Some(v) = v {
                cfg.set(k, &v).with_context(|| format!("--{k}"))?;
            }
            Ok(())
        };
        set("lambda", self.lambda.map(|v| v.to_string()))?;
        set("c", self.c.clone())?;
        set("j0", self.j0.map(|v| v.to_string()))?;
        set("j_i", self.j_i.clone())?;
        set("jump_filter", self.no_jump_filter.then(|| "off".into()))?;
        set("jump_filter", self.jump_filter.then(|| "on".into()))?;
        set("jump_t", self.jump_t.map(|v| v.to_string()))?;
        set("two_sided_jumps", self.one_sided_jumps.then(|| "off".into()))?;
        set("time_scheme", self.time_scheme.clone())?;
        set("seed", self.seed.map(|v| v.to_string()))?;
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Spot volatility curve of one tick file
    Estimate {
        input: PathBuf,
        #[arg(long, short, default_value = ".")]
        out: PathBuf,
        /// Also write plot.svg
        #[arg(long)]
        plot: bool,
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Synthetic Heston day with noise, jumps and rounding
    Simulate {
        #[arg(long, short, default_value = ".")]
        out: PathBuf,
        #[arg(long, default_value_t = 15_000)]
        n: usize,
        #[arg(long, default_value_t = 1.0 / 5000.0)]
        noise_std: f64,
        #[arg(long)]
        uniform_noise: bool,
        #[arg(long, default_value_t = 0.0)]
        jump_intensity: f64,
        #[arg(long, default_value_t = 1e-3)]
        jump_std: f64,
        /// Round prices to this grid
        #[arg(long)]
        tick_size: Option<f64>,
        #[arg(long, default_value_t = 110.0)]
        ref_price: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Covolatility of two tick files with identical time columns
    Covol {
        first: PathBuf,
        second: PathBuf,
        #[arg(long, short, default_value = ".")]
        out: PathBuf,
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Realized variance against subsampling step
    Signature {
        input: PathBuf,
        /// Comma-separated steps
        #[arg(long, value_delimiter = ',')]
        steps: Option<Vec<usize>>,
        /// Output CSV (stdout if omitted)
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Optimal block constants and MSE constants of the catalog
    CalibrateTable {
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Monte Carlo reproduction of table1, table2 or table3
    Mc {
        study: Study,
        #[arg(long, default_value_t = 1000)]
        reps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
}

fn sink(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(std::io::BufWriter::new(
            std::fs::File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(std::io::stdout().lock()),
    })
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Estimate { input, out, plot, cfg } => {
            let meta = run_estimate(&cfg.resolve()?, &input, &out, plot)?;
            if meta.input.dropped_rows > 0 {
                eprintln!("warning: dropped {} rows with invalid prices", meta.input.dropped_rows);
            }
            eprintln!("n = {}, m = {}, c = {:.4}", meta.input.n, meta.m, meta.c);
        }
        Command::Simulate {
            out,
            n,
            noise_std,
            uniform_noise,
            jump_intensity,
            jump_std,
            tick_size,
            ref_price,
            seed,
        } => {
            let opts = SimulateOptions {
                n,
                noise_std,
                noise_kind: if uniform_noise { NoiseKind::Uniform } else { NoiseKind::Gaussian },
                jump_intensity,
                jump_std,
                tick_size,
                ref_price,
                seed,
                ..SimulateOptions::default()
            };
            run_simulate(&opts, &out)?;
        }
        Command::Covol { first, second, out, cfg } => {
            run_covol(&cfg.resolve()?, &first, &second, &out)?;
        }
        Command::Signature { input, steps, out } => {
            let steps = steps.unwrap_or_else(|| DEFAULT_SIGNATURE_STEPS.to_vec());
            let mut w = sink(out.as_deref())?;
            run_signature(&input, &steps, &mut w)?;
            w.flush()?;
        }
        Command::CalibrateTable { out } => {
            let mut w = sink(out.as_deref())?;
            write_rows(&mut w, &calibrate_table())?;
            w.flush()?;
        }
        Command::Mc { study, reps, seed, out } => {
            let rows = run_mc(study, reps, seed)?;
            let mut w = sink(out.as_deref())?;
            write_rows(&mut w, &rows)?;
            w.flush()?;
        }
    }
    Ok(())
}
