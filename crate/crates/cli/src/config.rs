//! Flat key-value configuration (TOML-compatible subset) with repeatable
//! command-line overrides.

use std::collections::BTreeMap;
use std::path::Path;

use toml::Value;

/// Parsed flat configuration table.
#[derive(Debug, Clone, Default)]
pub struct Config {
    values: BTreeMap<String, Value>,
}

#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "config error: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

type CResult<T> = Result<T, ConfigError>;

impl Config {
    pub fn load(path: Option<&Path>, overrides: &[String]) -> CResult<Self> {
        let mut values = BTreeMap::new();
        if let Some(p) = path {
            let text = std::fs::read_to_string(p)
                .map_err(|e| ConfigError(format!("cannot read {}: {e}", p.display())))?;
            let table: toml::Table = text
                .parse()
                .map_err(|e| ConfigError(format!("cannot parse {}: {e}", p.display())))?;
            for (k, v) in table {
                if v.is_table() || v.is_array() {
                    return Err(ConfigError(format!(
                        "key '{k}': only flat scalar keys are supported"
                    )));
                }
                values.insert(k, v);
            }
        }
        let mut cfg = Self { values };
        for ov in overrides {
            let (k, v) = ov
                .split_once('=')
                .ok_or_else(|| ConfigError(format!("override '{ov}' is not KEY=VAL")))?;
            cfg.values.insert(k.trim().to_string(), parse_scalar(v.trim()));
        }
        Ok(cfg)
    }

    pub fn f64(&self, key: &str, default: f64) -> CResult<f64> {
        match self.values.get(key) {
            None => Ok(default),
            Some(Value::Float(v)) => Ok(*v),
            Some(Value::Integer(v)) => Ok(*v as f64),
            Some(other) => Err(ConfigError(format!("key '{key}': expected a number, got {other}"))),
        }
    }

    pub fn usize(&self, key: &str, default: usize) -> CResult<usize> {
        match self.values.get(key) {
            None => Ok(default),
            Some(Value::Integer(v)) if *v >= 0 => Ok(*v as usize),
            Some(other) => {
                Err(ConfigError(format!("key '{key}': expected a nonnegative integer, got {other}")))
            }
        }
    }

    pub fn i64(&self, key: &str, default: i64) -> CResult<i64> {
        match self.values.get(key) {
            None => Ok(default),
            Some(Value::Integer(v)) => Ok(*v),
            Some(other) => Err(ConfigError(format!("key '{key}': expected an integer, got {other}"))),
        }
    }

    pub fn u64(&self, key: &str, default: u64) -> CResult<u64> {
        match self.values.get(key) {
            None => Ok(default),
            Some(Value::Integer(v)) if *v >= 0 => Ok(*v as u64),
            Some(other) => {
                Err(ConfigError(format!("key '{key}': expected a nonnegative integer, got {other}")))
            }
        }
    }

    pub fn string(&self, key: &str, default: &str) -> CResult<String> {
        match self.values.get(key) {
            None => Ok(default.to_string()),
            Some(Value::String(v)) => Ok(v.clone()),
            Some(other) => Err(ConfigError(format!("key '{key}': expected a string, got {other}"))),
        }
    }

    /// Comma-separated list of floats ("0.04, 0.02, 0.01").
    pub fn f64_list(&self, key: &str, default: &[f64]) -> CResult<Vec<f64>> {
        match self.values.get(key) {
            None => Ok(default.to_vec()),
            Some(Value::String(s)) => s
                .split(',')
                .map(|p| {
                    p.trim()
                        .parse::<f64>()
                        .map_err(|e| ConfigError(format!("key '{key}': bad float '{p}': {e}")))
                })
                .collect(),
            Some(Value::Float(v)) => Ok(vec![*v]),
            Some(Value::Integer(v)) => Ok(vec![*v as f64]),
            Some(other) => {
                Err(ConfigError(format!("key '{key}': expected a comma list, got {other}")))
            }
        }
    }

    pub fn render(&self) -> String {
        self.values
            .iter()
            .map(|(k, v)| format!("{k} = {v}"))
            .collect::<Vec<_>>()
            .join("\n")
    }
}

fn parse_scalar(raw: &str) -> Value {
    if let Ok(v) = raw.parse::<i64>() {
        return Value::Integer(v);
    }
    if let Ok(v) = raw.parse::<f64>() {
        return Value::Float(v);
    }
    match raw {
        "true" => Value::Boolean(true),
        "false" => Value::Boolean(false),
        _ => Value::String(raw.trim_matches('"').to_string()),
    }
}
