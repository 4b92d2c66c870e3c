//! Command-line surface. Everything here except `--out` and `--reports`
//! feeds the config hash, so equal hashes mean equal computations.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{ArgGroup, Parser, Subcommand, ValueEnum};
use serde::{Serialize, Serializer};

/// Seed used when `--seed` is absent.
pub const DEFAULT_SEED: u64 = 0;

#[derive(Debug, Parser, Serialize)]
#[command(
    name = "alignbounds",
    version,
    about = "Exact best-of-n, tilting, divergence and transportation bounds for policy alignment"
)]
pub struct Cli {
    /// Seed for every random stream.
    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    pub seed: u64,

    /// Write the primary artifact here instead of stdout.
    #[arg(long, global = true)]
    #[serde(skip)]
    pub out: Option<PathBuf>,

    /// Output format; each command has its own default.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    /// Divergence between two laws on the same support.
    Div {
        #[arg(long)]
        p: PathBuf,
        #[arg(long)]
        q: PathBuf,
        /// kl | chi2 | tv | hellinger | fkl | renyi
        #[arg(long)]
        kind: String,
        /// Order for `renyi`.
        #[arg(long)]
        alpha: Option<f64>,
    },

    /// Exact best-of-n divergences against their closed-form bounds.
    #[command(group(ArgGroup::new("count").required(true).args(["n", "sweep"])))]
    Bon {
        #[arg(long)]
        dist: PathBuf,
        #[arg(long)]
        n: Option<u64>,
        /// Every catalog row plus Rényi at `--alphas`, not just KL.
        #[arg(long)]
        all_bounds: bool,
        /// Inclusive range `N1:N2`.
        #[arg(long)]
        sweep: Option<Range>,
        #[arg(long, value_delimiter = ',', default_values_t = [0.5, 2.0])]
        alphas: Vec<f64>,
    },

    /// Tilted policy at a fixed `beta`, or at the `beta` meeting a KL budget.
    #[command(group(ArgGroup::new("target").required(true).args(["beta", "delta"])))]
    Tilt {
        #[arg(long)]
        dist: PathBuf,
        #[arg(long)]
        beta: Option<f64>,
        #[arg(long)]
        delta: Option<f64>,
    },

    /// Reward improvement of a policy against its transportation bound.
    Transport {
        #[arg(long)]
        dist: PathBuf,
        /// `tilt:BETA` or `bon:N`.
        #[arg(long)]
        policy: PolicySpec,
        /// `subgauss:S2`, `subgamma:S2,C` or `auto` (tightest certified sub-Gaussian).
        #[arg(long, default_value = "auto")]
        tail: TailSpec,
    },

    /// Monte Carlo check of the high-probability empirical improvement bound.
    Highprob {
        /// Defaults to the uniform binary law with rewards (0, 1).
        #[arg(long)]
        dist: Option<PathBuf>,
        #[arg(long)]
        beta: f64,
        #[arg(long)]
        m: usize,
        #[arg(long)]
        t0: f64,
        #[arg(long)]
        trials: u64,
        #[arg(long, default_value = "auto")]
        sigma2: Sigma2,
    },

    /// Proxy vs golden over-optimization curve with transfer bounds.
    Goodhart {
        #[arg(long)]
        dist: PathBuf,
        /// `beta:START:STOP:COUNT` or `n:N1:N2`.
        #[arg(long)]
        control: ControlSpec,
        #[arg(long, default_value = "auto")]
        sigma2: Sigma2,
        /// Also write the per-point transfer reports as JSON here.
        #[arg(long)]
        #[serde(skip)]
        reports: Option<PathBuf>,
    },

    /// Closed-form bound catalog next to its quadrature over an n sweep.
    Table1 {
        #[arg(long, default_value = "2:10")]
        sweep: Range,
        #[arg(long, value_delimiter = ',', default_values_t = [0.5])]
        alphas: Vec<f64>,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Div { .. } => "div",
            Command::Bon { .. } => "bon",
            Command::Tilt { .. } => "tilt",
            Command::Transport { .. } => "transport",
            Command::Highprob { .. } => "highprob",
            Command::Goodhart { .. } => "goodhart",
            Command::Table1 { .. } => "table1",
        }
    }
}

macro_rules! serialize_as_display {
    ($($t:ty),*) => {$(
        impl Serialize for $t {
            fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
                s.collect_str(self)
            }
        }
    )*};
}

serialize_as_display!(Range, PolicySpec, TailSpec, Sigma2, ControlSpec);

fn parse_num<T: FromStr>(s: &str, what: &str) -> Result<T, String> {
    s.trim().parse().map_err(|_| format!("`{s}` is not a valid {what}"))
}

/// Inclusive integer range `A:B` with `1 <= A <= B`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Range {
    pub start: u64,
    pub end: u64,
}

impl Range {
    pub fn values(&self) -> Vec<u64> {
        (self.start..=self.end).collect()
    }
}

impl FromStr for Range {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let (a, b) = s.split_once(':').ok_or_else(|| format!("expected N1:N2, got `{s}`"))?;
        let (start, end) = (parse_num(a, "count")?, parse_num(b, "count")?);
        if start == 0 || start > end {
            return Err(format!("range `{s}` must satisfy 1 <= N1 <= N2"));
        }
        Ok(Range { start, end })
    }
}

impl fmt::Display for Range {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.start, self.end)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PolicySpec {
    Tilt(f64),
    BestOf(u64),
}

impl FromStr for PolicySpec {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.split_once(':') {
            Some(("tilt", b)) => Ok(PolicySpec::Tilt(parse_num(b, "beta")?)),
            Some(("bon", n)) => Ok(PolicySpec::BestOf(parse_num(n, "sample count")?)),
            _ => Err(format!("expected tilt:BETA or bon:N, got `{s}`")),
        }
    }
}

impl fmt::Display for PolicySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PolicySpec::Tilt(b) => write!(f, "tilt:{b}"),
            PolicySpec::BestOf(n) => write!(f, "bon:{n}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TailSpec {
    Auto,
    SubGaussian(f64),
    SubGamma(f64, f64),
}

impl FromStr for TailSpec {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        if s == "auto" {
            return Ok(TailSpec::Auto);
        }
        match s.split_once(':') {
            Some(("subgauss", v)) => Ok(TailSpec::SubGaussian(parse_num(v, "variance")?)),
            Some(("subgamma", rest)) => {
                let (v, c) = rest
                    .split_once(',')
                    .ok_or_else(|| format!("expected subgamma:S2,C, got `{s}`"))?;
                Ok(TailSpec::SubGamma(parse_num(v, "variance")?, parse_num(c, "scale")?))
            }
            _ => Err(format!("expected subgauss:S2, subgamma:S2,C or auto, got `{s}`")),
        }
    }
}

impl fmt::Display for TailSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TailSpec::Auto => f.write_str("auto"),
            TailSpec::SubGaussian(v) => write!(f, "subgauss:{v}"),
            TailSpec::SubGamma(v, c) => write!(f, "subgamma:{v},{c}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Sigma2 {
    Auto,
    Fixed(f64),
}

impl FromStr for Sigma2 {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        if s == "auto" {
            Ok(Sigma2::Auto)
        } else {
            Ok(Sigma2::Fixed(parse_num(s, "variance")?))
        }
    }
}

impl fmt::Display for Sigma2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sigma2::Auto => f.write_str("auto"),
            Sigma2::Fixed(v) => write!(f, "{v}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ControlSpec {
    /// `count` evenly spaced values on `[start, stop]`.
    Beta { start: f64, stop: f64, count: usize },
    N(Range),
}

impl ControlSpec {
    pub fn betas(start: f64, stop: f64, count: usize) -> Vec<f64> {
        if count == 1 {
            return vec![start];
        }
        let step = (stop - start) / (count - 1) as f64;
        (0..count)
            .map(|k| if k + 1 == count { stop } else { start + k as f64 * step })
            .collect()
    }
}

impl FromStr for ControlSpec {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        match parts.as_slice() {
            ["beta", a, b, c] => {
                let (start, stop): (f64, f64) = (parse_num(a, "beta")?, parse_num(b, "beta")?);
                let count: usize = parse_num(c, "count")?;
                if !(start >= 0.0 && stop >= start && stop.is_finite()) || count == 0 {
                    return Err(format!("`{s}` needs 0 <= START <= STOP and COUNT >= 1"));
                }
                Ok(ControlSpec::Beta { start, stop, count })
            }
            ["n", a, b] => Ok(ControlSpec::N(format!("{a}:{b}").parse()?)),
            _ => Err(format!("expected beta:START:STOP:COUNT or n:N1:N2, got `{s}`")),
        }
    }
}

impl fmt::Display for ControlSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ControlSpec::Beta { start, stop, count } => write!(f, "beta:{start}:{stop}:{count}"),
            ControlSpec::N(r) => write!(f, "n:{r}"),
        }
    }
}
