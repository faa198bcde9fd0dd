use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, ValueEnum};
use serde::Serialize;

use crate::CliError;

/// Seed used when neither `--seed` nor the config file sets one.
pub const DEFAULT_SEED: u64 = 20_190_601;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            _ => Err(format!("unknown format `{s}` (expected csv or json)")),
        }
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Format::Csv => "csv",
            Format::Json => "json",
        })
    }
}

/// Flags shared by every subcommand. Anything left unset falls back to the
/// config file, then to the per-command default.
#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// Lattice spacing
    #[arg(long)]
    pub a: Option<f64>,
    /// Window length in lattice sites
    #[arg(long)]
    pub sites: Option<usize>,
    /// Base seed [default: 20190601]
    #[arg(long)]
    pub seed: Option<u64>,
    /// Independent replicates
    #[arg(long)]
    pub reps: Option<usize>,
    /// Largest gap index L (gap L/2)
    #[arg(long)]
    pub lmax: Option<usize>,
    /// Acceptance tolerance
    #[arg(long)]
    pub tol: Option<f64>,
    /// Output format
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Output file (stdout if absent)
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Comma-separated verification suites
    #[arg(long)]
    pub suite: Option<String>,
    /// Correlation order of the ergodic test function (1 or 2)
    #[arg(long)]
    pub order: Option<usize>,
    /// Config file of `key = value` lines; flags take precedence
    #[arg(long)]
    pub config: Option<PathBuf>,
}

impl CommonArgs {
    fn fill_from(&mut self, file: CommonArgs) {
        self.a = self.a.or(file.a);
        self.sites = self.sites.or(file.sites);
        self.seed = self.seed.or(file.seed);
        self.reps = self.reps.or(file.reps);
        self.lmax = self.lmax.or(file.lmax);
        self.tol = self.tol.or(file.tol);
        self.format = self.format.or(file.format);
        self.out = self.out.take().or(file.out);
        self.suite = self.suite.take().or(file.suite);
        self.order = self.order.or(file.order);
    }
}

/// Fully resolved run configuration, echoed into every output header.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub command: String,
    pub a: f64,
    pub sites: usize,
    pub seed: u64,
    pub reps: usize,
    pub lmax: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    pub format: Format,
    #[serde(skip)]
    pub out: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub suite: Option<String>,
    pub order: usize,
}

pub struct Defaults {
    pub sites: usize,
    pub reps: usize,
    pub lmax: usize,
}

impl RunConfig {
    pub fn resolve(command: &str, mut args: CommonArgs, defaults: Defaults) -> Result<Self, CliError> {
        if let Some(path) = args.config.clone() {
            args.fill_from(read_config_file(&path)?);
        }
        let cfg = RunConfig {
            command: command.to_string(),
            a: args.a.unwrap_or(0.5),
            sites: args.sites.unwrap_or(defaults.sites),
            seed: args.seed.unwrap_or(DEFAULT_SEED),
            reps: args.reps.unwrap_or(defaults.reps),
            lmax: args.lmax.unwrap_or(defaults.lmax),
            tol: args.tol,
            format: args.format.unwrap_or(Format::Csv),
            out: args.out,
            suite: args.suite,
            order: args.order.unwrap_or(1),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), CliError> {
        if !(self.a.is_finite() && self.a > 0.0) {
            return Err(CliError::Usage(format!("--a must be a positive number, got {}", self.a)));
        }
        if self.sites == 0 {
            return Err(CliError::Usage("--sites must be at least 1".into()));
        }
        if self.lmax == 0 {
            return Err(CliError::Usage("--lmax must be at least 1".into()));
        }
        if let Some(t) = self.tol {
            if !(t.is_finite() && t > 0.0) {
                return Err(CliError::Usage(format!("--tol must be a positive number, got {t}")));
            }
        }
        if !(1..=2).contains(&self.order) {
            return Err(CliError::Usage(format!("--order must be 1 or 2, got {}", self.order)));
        }
        Ok(())
    }

    /// `key=value` pairs in a fixed order, used for the CSV header.
    pub fn echo(&self) -> String {
        let mut parts = vec![
            format!("command={}", self.command),
            format!("a={}", self.a),
            format!("sites={}", self.sites),
            format!("seed={}", self.seed),
            format!("reps={}", self.reps),
            format!("lmax={}", self.lmax),
        ];
        if let Some(t) = self.tol {
            parts.push(format!("tol={t}"));
        }
        parts.push(format!("format={}", self.format));
        if let Some(s) = &self.suite {
            parts.push(format!("suite={s}"));
        }
        parts.push(format!("order={}", self.order));
        parts.join(" ")
    }
}

fn read_config_file(path: &Path) -> Result<CommonArgs, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read config file {}: {e}", path.display())))?;
    parse_config(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

pub fn parse_config(text: &str) -> Result<CommonArgs, String> {
    let mut args = CommonArgs::default();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| format!("line {}: expected `key = value`", n + 1))?;
        let (key, value) = (key.trim(), value.trim());
        let bad = |e: &dyn fmt::Display| format!("line {}: bad value for {key}: {e}", n + 1);
        match key {
            "a" => args.a = Some(value.parse().map_err(|e| bad(&e))?),
            "sites" => args.sites = Some(value.parse().map_err(|e| bad(&e))?),
            "seed" => args.seed = Some(value.parse().map_err(|e| bad(&e))?),
            "reps" => args.reps = Some(value.parse().map_err(|e| bad(&e))?),
            "lmax" => args.lmax = Some(value.parse().map_err(|e| bad(&e))?),
            "tol" => args.tol = Some(value.parse().map_err(|e| bad(&e))?),
            "format" => args.format = Some(value.parse().map_err(|e| bad(&e))?),
            "out" => args.out = Some(PathBuf::from(value)),
            "suite" => args.suite = Some(value.to_string()),
            "order" => args.order = Some(value.parse().map_err(|e| bad(&e))?),
            _ => return Err(format!("line {}: unknown key `{key}`", n + 1)),
        }
    }
    Ok(args)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_keys_and_comments() {
        let args = parse_config("# run\na = 0.25\nsites=64 # window\nformat = json\n\n").unwrap();
        assert_eq!(args.a, Some(0.25));
        assert_eq!(args.sites, Some(64));
        assert_eq!(args.format, Some(Format::Json));
    }

    #[test]
    fn rejects_unknown_keys_and_bad_values() {
        assert!(parse_config("colour = red").is_err());
        assert!(parse_config("sites = many").is_err());
        assert!(parse_config("sites").is_err());
    }

    #[test]
    fn flags_win_over_file() {
        let mut flags = CommonArgs { sites: Some(10), ..Default::default() };
        flags.fill_from(parse_config("sites = 99\nreps = 3").unwrap());
        assert_eq!(flags.sites, Some(10));
        assert_eq!(flags.reps, Some(3));
    }
}
