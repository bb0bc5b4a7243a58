//! Run configuration: defaults, `key = value` files and command-line flags.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Parser, ValueEnum};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}:{line}: {message}")]
    File { path: String, line: usize, message: String },
    #[error("cannot read {path}: {source}")]
    Read { path: String, source: std::io::Error },
    #[error("invalid value for `{key}`: {message}")]
    Value { key: String, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Uniform,
    Adaptive,
}

impl FromStr for Mode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        <Mode as ValueEnum>::from_str(s, true)
    }
}

/// Inclusive level range written `a..b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LevelRange {
    pub first: u8,
    pub last: u8,
}

impl LevelRange {
    pub fn levels(&self) -> Vec<u8> {
        (self.first..=self.last).collect()
    }
}

impl FromStr for LevelRange {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let (a, b) = s.split_once("..").ok_or_else(|| format!("expected `a..b`, got `{s}`"))?;
        let b = b.strip_prefix('=').unwrap_or(b);
        let first: u8 = a.trim().parse().map_err(|e| format!("bad level `{a}`: {e}"))?;
        let last: u8 = b.trim().parse().map_err(|e| format!("bad level `{b}`: {e}"))?;
        if last < first || last > 20 {
            return Err(format!("level range `{s}` must satisfy a <= b <= 20"));
        }
        Ok(Self { first, last })
    }
}

/// Optimize laminate microstructures for minimal compliance on uniform or
/// adaptively refined quadrilateral meshes.
#[derive(Debug, Parser)]
#[command(name = "seqlam", version, about)]
pub struct Cli {
    /// carrier-plate, cantilever, bridge or l-shape [default: carrier-plate]
    #[arg(long)]
    pub scenario: Option<String>,
    /// Refinement mode [default: uniform]
    #[arg(long, value_enum)]
    pub mode: Option<Mode>,
    /// Uniform levels, inclusive, e.g. `2..6` [default: 2..6]
    #[arg(long)]
    pub levels: Option<LevelRange>,
    /// Start level of an adaptive run [default: 4]
    #[arg(long)]
    pub initial_level: Option<u8>,
    /// Refinement steps of an adaptive run [default: 20]
    #[arg(long)]
    pub steps: Option<usize>,
    /// Dörfler marking fraction in (0, 1] [default: 0.4]
    #[arg(long)]
    pub fraction: Option<f64>,
    /// Material volume fraction in (0, 1] [default: per scenario]
    #[arg(long)]
    pub volume: Option<f64>,
    /// First Lamé constant [default: 1]
    #[arg(long)]
    pub lame_lambda: Option<f64>,
    /// Shear modulus [default: 1]
    #[arg(long)]
    pub lame_mu: Option<f64>,
    /// Traction magnitude [default: 1]
    #[arg(long)]
    pub load: Option<f64>,
    /// Directory for VTK and CSV output [default: seqlam-out]
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    /// File of `key = value` lines using the long flag names; flags win
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub scenario: String,
    pub mode: Mode,
    pub levels: LevelRange,
    pub initial_level: u8,
    pub steps: usize,
    pub fraction: f64,
    pub volume: Option<f64>,
    pub lame_lambda: Option<f64>,
    pub lame_mu: Option<f64>,
    pub load: Option<f64>,
    pub out_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            scenario: "carrier-plate".into(),
            mode: Mode::Uniform,
            levels: LevelRange { first: 2, last: 6 },
            initial_level: 4,
            steps: 20,
            fraction: 0.4,
            volume: None,
            lame_lambda: None,
            lame_mu: None,
            load: None,
            out_dir: PathBuf::from("seqlam-out"),
        }
    }
}

/// Parses `key = value` lines; `#` starts a comment.
pub fn parse_config_file(text: &str, path: &Path) -> Result<BTreeMap<String, String>, ConfigError> {
    let mut out = BTreeMap::new();
    for (k, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |message: String| ConfigError::File { path: path.display().to_string(), line: k + 1, message };
        let (key, value) = line.split_once('=').ok_or_else(|| err(format!("expected `key = value`, got `{line}`")))?;
        let key = key.trim().replace('_', "-");
        if out.insert(key.clone(), value.trim().to_string()).is_some() {
            return Err(err(format!("duplicate key `{key}`")));
        }
    }
    Ok(out)
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T, ConfigError>
where
    T::Err: std::fmt::Display,
{
    value.parse().map_err(|e: T::Err| ConfigError::Value { key: key.into(), message: e.to_string() })
}

impl RunConfig {
    pub fn apply_file(&mut self, entries: &BTreeMap<String, String>) -> Result<(), ConfigError> {
        for (key, v) in entries {
            match key.as_str() {
                "scenario" => self.scenario = v.clone(),
                "mode" => self.mode = parse(key, v)?,
                "levels" => self.levels = parse(key, v)?,
                "initial-level" => self.initial_level = parse(key, v)?,
                "steps" => self.steps = parse(key, v)?,
                "fraction" => self.fraction = parse(key, v)?,
                "volume" => self.volume = Some(parse(key, v)?),
                "lame-lambda" => self.lame_lambda = Some(parse(key, v)?),
                "lame-mu" => self.lame_mu = Some(parse(key, v)?),
                "load" => self.load = Some(parse(key, v)?),
                "out-dir" => self.out_dir = PathBuf::from(v),
                other => return Err(ConfigError::Value { key: other.into(), message: "unknown key".into() }),
            }
        }
        Ok(())
    }

    pub fn apply_cli(&mut self, cli: &Cli) {
        if let Some(v) = &cli.scenario {
            self.scenario = v.clone();
        }
        if let Some(v) = cli.mode {
            self.mode = v;
        }
        if let Some(v) = cli.levels {
            self.levels = v;
        }
        if let Some(v) = cli.initial_level {
            self.initial_level = v;
        }
        if let Some(v) = cli.steps {
            self.steps = v;
        }
        if let Some(v) = cli.fraction {
            self.fraction = v;
        }
        self.volume = cli.volume.or(self.volume);
        self.lame_lambda = cli.lame_lambda.or(self.lame_lambda);
        self.lame_mu = cli.lame_mu.or(self.lame_mu);
        self.load = cli.load.or(self.load);
        if let Some(v) = &cli.out_dir {
            self.out_dir = v.clone();
        }
    }

    /// Defaults, then the config file, then explicit flags.
    pub fn resolve(cli: &Cli) -> Result<Self, ConfigError> {
        let mut config = Self::default();
        if let Some(path) = &cli.config {
            let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read { path: path.display().to_string(), source })?;
            config.apply_file(&parse_config_file(&text, path)?)?;
        }
        config.apply_cli(cli);
        Ok(config)
    }
}
