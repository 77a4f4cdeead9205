//! Run settings merged from a `key = value` file and command-line flags.

use dialm_core::lm::model::TrainOptions;
use dialm_core::lm::LmConfig;
use std::collections::BTreeMap;
use std::path::PathBuf;
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("config line {line}: expected `key = value`")]
    Syntax { line: usize },
    #[error("config line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("{key}: cannot parse `{value}`")]
    Value { key: String, value: String },
    #[error("--enable: unknown component `{0}` (expected tones, repairs, correction, silence)")]
    Component(String),
    #[error("{0}")]
    Lm(#[from] dialm_core::lm::LmError),
}

const KEYS: &[&str] = &[
    "corpus",
    "model",
    "enable",
    "collapse_repairs",
    "beam",
    "order",
    "folds",
    "seed",
    "low_threshold",
    "report",
];

/// Parses a flat `key = value` file. Blank lines and `#` comments are skipped.
pub fn parse_config_file(text: &str) -> Result<BTreeMap<String, String>, ConfigError> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or(ConfigError::Syntax { line: i + 1 })?;
        let key = k.trim().replace('-', "_");
        if !KEYS.contains(&key.as_str()) {
            return Err(ConfigError::UnknownKey { line: i + 1, key });
        }
        out.insert(key, v.trim().to_string());
    }
    Ok(out)
}

/// Command-line values; `None` falls back to the config file, then to defaults.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub corpus: Option<PathBuf>,
    pub model: Option<PathBuf>,
    pub enable: Option<String>,
    pub collapse_repairs: bool,
    pub beam: Option<usize>,
    pub order: Option<usize>,
    pub folds: Option<usize>,
    pub seed: Option<u64>,
    pub low_threshold: Option<u64>,
    pub report: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub corpus: Option<PathBuf>,
    pub model: Option<PathBuf>,
    pub lm: LmConfig,
    /// Whether the beam was set explicitly, so decoding may override a model's.
    pub beam_set: bool,
    pub folds: usize,
    pub seed: u64,
    pub low_threshold: u64,
    pub report: Option<PathBuf>,
}

pub const DEFAULT_FOLDS: usize = 6;

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T, ConfigError> {
    value.parse().map_err(|_| ConfigError::Value { key: key.to_string(), value: value.to_string() })
}

fn parse_bool(key: &str, value: &str) -> Result<bool, ConfigError> {
    match value {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(ConfigError::Value { key: key.to_string(), value: value.to_string() }),
    }
}

/// Applies a comma-separated component list to a POS-only config.
pub fn enable(list: &str) -> Result<LmConfig, ConfigError> {
    let mut cfg = LmConfig::pos_only();
    for part in list.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        match part {
            "tones" => cfg.tones = true,
            "repairs" => cfg.repairs = true,
            "correction" => cfg.correction = true,
            "silence" => cfg.silence = true,
            "none" | "pos" => {}
            "all" | "full" => cfg = LmConfig::full(),
            other => return Err(ConfigError::Component(other.to_string())),
        }
    }
    Ok(cfg)
}

impl RunConfig {
    pub fn resolve(file: &BTreeMap<String, String>, cli: &Overrides) -> Result<RunConfig, ConfigError> {
        let get = |k: &str| file.get(k).map(String::as_str);
        let mut lm = match cli.enable.as_deref().or(get("enable")) {
            Some(list) => enable(list)?,
            None => LmConfig::pos_only(),
        };
        lm.collapse_repairs = cli.collapse_repairs
            || get("collapse_repairs").map(|v| parse_bool("collapse_repairs", v)).transpose()?.unwrap_or(false);
        let beam = match cli.beam {
            Some(b) => Some(b),
            None => get("beam").map(|v| parse("beam", v)).transpose()?,
        };
        if let Some(b) = beam {
            lm.beam = b;
        }
        if let Some(o) = cli.order.map(Ok).or_else(|| get("order").map(|v| parse("order", v))) {
            lm.order = o?;
        }
        lm.validate()?;
        let num = |k: &str, cli: Option<u64>, default: u64| -> Result<u64, ConfigError> {
            cli.map(Ok).or_else(|| get(k).map(|v| parse(k, v))).unwrap_or(Ok(default))
        };
        let path = |k: &str, cli: &Option<PathBuf>| cli.clone().or_else(|| get(k).map(PathBuf::from));
        Ok(RunConfig {
            corpus: path("corpus", &cli.corpus),
            model: path("model", &cli.model),
            lm,
            beam_set: beam.is_some(),
            folds: num("folds", cli.folds.map(|f| f as u64), DEFAULT_FOLDS as u64)? as usize,
            seed: num("seed", cli.seed, 0)?,
            low_threshold: num("low_threshold", cli.low_threshold, TrainOptions::default().low_threshold)?,
            report: path("report", &cli.report),
        })
    }

    pub fn train_options(&self) -> TrainOptions {
        TrainOptions { low_threshold: self.low_threshold, seed: self.seed, ..TrainOptions::default() }
    }
}
