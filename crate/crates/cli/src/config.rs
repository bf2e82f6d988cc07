//! TOML run configuration. Unknown keys anywhere are rejected.
//!
//! ```toml
//! [data]
//! csv = "bars.csv"          # relative to the config file
//! tick_size = "0.0001"
//! slippage_bp = 1
//!
//! [split]
//! b1 = "2008-01-01T00:00:00Z"
//! b2 = "2010-01-01T00:00:00Z"
//!
//! [strategy]                # all eight fields
//! t1 = 20
//! t2 = 120
//! vol_window = 50
//! vol_lo = 0
//! vol_hi = 12
//! stop_loss_bp = 30
//! take_profit_bp = 300
//! max_hold_bars = 600
//!
//! [cost]
//! fee_multiplier = 1
//!
//! [search]
//! budget = 300
//! seed = 7
//! [search.space]            # optional, all eight ranges
//! t1 = { lo = 5, hi = 50, step = 5 }
//!
//! [stress]
//! base_seed = 1
//! min_sharpe = -1.0
//! [[stress.suite]]          # optional; omitted means the default battery
//! name = "identity"
//!
//! [gates]
//! min_out_sharpe = 0.0
//! min_out_trades = 30
//!
//! [output]
//! dir = "out"
//! formats = ["json", "csv"]
//! ```

use std::path::{Path, PathBuf};
use std::str::FromStr;

use rust_decimal::Decimal;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;
use trendgate_core::engine::CostModel;
use trendgate_core::optimizer::SearchSpace;
use trendgate_core::strategy::StrategyParams;
use trendgate_core::validation::{DistortionSet, Gates};

use crate::csv_io::parse_timestamp;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("invalid config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
}

fn invalid(msg: impl Into<String>) -> ConfigError {
    ConfigError::Invalid(msg.into())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub data: DataConfig,
    #[serde(default)]
    pub split: Option<SplitConfig>,
    #[serde(default)]
    pub strategy: Option<StrategyParams>,
    #[serde(default)]
    pub cost: CostConfig,
    #[serde(default)]
    pub search: SearchConfig,
    #[serde(default)]
    pub stress: StressConfig,
    #[serde(default)]
    pub gates: Gates,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    pub csv: PathBuf,
    #[serde(default = "default_tick")]
    pub tick_size: String,
    #[serde(default = "one")]
    pub slippage_bp: u32,
}

fn default_tick() -> String {
    "0.0001".into()
}

fn one() -> u32 {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitConfig {
    pub b1: String,
    pub b2: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostConfig {
    #[serde(default = "one")]
    pub fee_multiplier: u32,
}

impl Default for CostConfig {
    fn default() -> Self {
        Self { fee_multiplier: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SearchConfig {
    pub space: SearchSpace,
    pub budget: usize,
    pub seed: u64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            space: SearchSpace::default(),
            budget: 300,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StressConfig {
    /// `None` selects the default fifteen-entry battery.
    pub suite: Option<Vec<DistortionSet>>,
    pub base_seed: u64,
    pub min_sharpe: f64,
}

impl Default for StressConfig {
    fn default() -> Self {
        Self {
            suite: None,
            base_seed: 0,
            min_sharpe: -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub formats: Vec<Format>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
            formats: vec![Format::Json, Format::Csv],
        }
    }
}

impl OutputConfig {
    pub fn wants(&self, f: Format) -> bool {
        self.formats.contains(&f)
    }
}

impl Config {
    /// Reads, parses and validates; relative paths are resolved against the
    /// config file's directory.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_owned(),
            source,
        })?;
        let mut cfg = Self::from_toml(&text)?;
        let base = path.parent().unwrap_or(Path::new(""));
        if cfg.data.csv.is_relative() {
            cfg.data.csv = base.join(&cfg.data.csv);
        }
        if cfg.output.dir.is_relative() {
            cfg.output.dir = base.join(&cfg.output.dir);
        }
        Ok(cfg)
    }

    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: Config = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.tick()?;
        if self.data.slippage_bp < 1 {
            return Err(invalid("data.slippage_bp must be >= 1"));
        }
        if self.split.is_some() {
            self.boundaries()?;
        }
        if let Some(p) = &self.strategy {
            p.validate()
                .map_err(|e| invalid(format!("strategy: {e}")))?;
        }
        if self.cost.fee_multiplier < 1 {
            return Err(invalid("cost.fee_multiplier must be >= 1"));
        }
        self.search
            .space
            .validate()
            .map_err(|e| invalid(format!("search.space: {e}")))?;
        if self.search.budget < 1 {
            return Err(invalid("search.budget must be >= 1"));
        }
        for entry in self.stress.suite.iter().flatten() {
            entry
                .validate()
                .map_err(|e| invalid(format!("stress.suite `{}`: {e}", entry.name)))?;
        }
        if self.stress.suite.as_ref().is_some_and(Vec::is_empty) {
            return Err(invalid("stress.suite must not be empty"));
        }
        if self.output.formats.is_empty() {
            return Err(invalid("output.formats must not be empty"));
        }
        Ok(())
    }

    pub fn tick(&self) -> Result<Decimal, ConfigError> {
        let tick = Decimal::from_str(&self.data.tick_size).map_err(|_| {
            invalid(format!(
                "data.tick_size `{}` is not a decimal",
                self.data.tick_size
            ))
        })?;
        if tick <= Decimal::ZERO {
            return Err(invalid("data.tick_size must be positive"));
        }
        Ok(tick)
    }

    pub fn boundaries(&self) -> Result<(i64, i64), ConfigError> {
        let split = self
            .split
            .as_ref()
            .ok_or_else(|| invalid("missing [split] section"))?;
        let b1 = parse_timestamp(&split.b1).ok_or_else(|| {
            invalid(format!(
                "split.b1 `{}` is not an RFC 3339 UTC time",
                split.b1
            ))
        })?;
        let b2 = parse_timestamp(&split.b2).ok_or_else(|| {
            invalid(format!(
                "split.b2 `{}` is not an RFC 3339 UTC time",
                split.b2
            ))
        })?;
        if b1 >= b2 {
            return Err(invalid("split.b1 must precede split.b2"));
        }
        Ok((b1, b2))
    }

    pub fn strategy(&self) -> Result<StrategyParams, ConfigError> {
        self.strategy
            .ok_or_else(|| invalid("missing [strategy] section"))
    }

    pub fn cost_model(&self) -> CostModel {
        CostModel::new(self.data.slippage_bp, self.cost.fee_multiplier)
    }

    /// SHA-256 over the canonical JSON form of the effective configuration.
    /// File locations are left out; the data enters reports through its own
    /// content hash.
    pub fn hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.data.csv = PathBuf::new();
        canonical.output.dir = PathBuf::new();
        let bytes = serde_json::to_vec(&canonical).expect("config serializes");
        hex::encode(Sha256::digest(bytes))
    }
}
