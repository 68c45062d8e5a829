//! Run configuration: a plain `key = value` file plus flag overrides.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use asve_core::jumps::{JumpConfig, DEFAULT_THRESHOLD_T};
use asve_core::wavelet::DEFAULT_J0;
use asve_core::{AsveConfig, CRule, PreAverageFunction};
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TimeScheme {
    Tick,
    Real,
}

impl FromStr for TimeScheme {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "tick" => Ok(TimeScheme::Tick),
            "real" => Ok(TimeScheme::Real),
            other => bail!("unknown time scheme `{other}` (expected tick or real)"),
        }
    }
}

impl fmt::Display for TimeScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TimeScheme::Tick => "tick",
            TimeScheme::Real => "real",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Config {
    pub lambda_id: usize,
    pub c_rule: CRule,
    pub j0: usize,
    /// `None` means automatic.
    pub j_i: Option<usize>,
    pub jump_filter: bool,
    pub jump_t: f64,
    pub two_sided_jumps: bool,
    pub time_scheme: TimeScheme,
    pub seed: u64,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            lambda_id: 4,
            c_rule: CRule::default(),
            j0: DEFAULT_J0,
            j_i: None,
            jump_filter: true,
            jump_t: DEFAULT_THRESHOLD_T,
            two_sided_jumps: true,
            time_scheme: TimeScheme::Tick,
            seed: 0,
        }
    }
}

fn parse_bool(v: &str) -> Result<bool> {
    match v.trim().to_ascii_lowercase().as_str() {
        "on" | "true" | "yes" | "1" => Ok(true),
        "off" | "false" | "no" | "0" => Ok(false),
        other => bail!("expected on/off, got `{other}`"),
    }
}

/// `auto`, `auto:<factor>` or a positive number.
pub fn parse_c_rule(v: &str) -> Result<CRule> {
    let v = v.trim();
    let rule = if v.eq_ignore_ascii_case("auto") {
        CRule::default()
    } else if let Some(f) = v.strip_prefix("auto:") {
        CRule::Auto {
            factor: f.trim().parse().with_context(|| format!("bad auto factor `{f}`"))?,
        }
    } else {
        CRule::Fixed(v.parse().with_context(|| format!("bad c value `{v}`"))?)
    };
    let x = match rule {
        CRule::Auto { factor } => factor,
        CRule::Fixed(c) => c,
    };
    if !(x > 0.0) || !x.is_finite() {
        bail!("c must be positive, got `{v}`");
    }
    Ok(rule)
}

impl Config {
    /// Sets one key. Unknown keys are an error.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        match key.trim().replace('-', "_").as_str() {
            "lambda" | "lambda_id" => {
                let id: usize = value.parse().with_context(|| format!("bad lambda `{value}`"))?;
                PreAverageFunction::catalog(id)?;
                self.lambda_id = id;
            }
            "c" | "c_rule" => self.c_rule = parse_c_rule(value)?,
            "j0" => self.j0 = value.parse().with_context(|| format!("bad j0 `{value}`"))?,
            "j_i" => {
                self.j_i = if value.eq_ignore_ascii_case("auto") {
                    None
                } else {
                    Some(value.parse().with_context(|| format!("bad j_i `{value}`"))?)
                }
            }
            "jump_filter" => self.jump_filter = parse_bool(value)?,
            "jump_t" => {
                let t: f64 = value.parse().with_context(|| format!("bad jump_t `{value}`"))?;
                if !(t > 0.0) {
                    bail!("jump_t must be positive");
                }
                self.jump_t = t;
            }
            "two_sided_jumps" => self.two_sided_jumps = parse_bool(value)?,
            "time_scheme" => self.time_scheme = value.parse()?,
            "seed" => self.seed = value.parse().with_context(|| format!("bad seed `{value}`"))?,
            other => bail!("unknown config key `{other}`"),
        }
        Ok(())
    }

    /// Parses `key = value` lines; `#` starts a comment.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| anyhow!("line {}: expected key = value", i + 1))?;
            cfg.set(k, v).with_context(|| format!("line {}", i + 1))?;
        }
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::from_text(&text).with_context(|| format!("in {}", path.display()))
    }

    pub fn asve_config(&self) -> Result<AsveConfig> {
        Ok(AsveConfig {
            lam: PreAverageFunction::catalog(self.lambda_id)?,
            c_rule: self.c_rule,
            j0: self.j0,
            j_i: self.j_i,
            jump_filter: self.jump_filter,
            jumps: JumpConfig {
                threshold_t: self.jump_t,
                two_sided: self.two_sided_jumps,
                ..JumpConfig::default()
            },
            ..AsveConfig::default()
        })
    }
}
