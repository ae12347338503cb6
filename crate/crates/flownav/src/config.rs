//! Layered configuration: defaults <- TOML file <- command-line overrides.
//! Unknown keys are rejected, and the effective config is hashed so every
//! artifact can state exactly what produced it.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::env::EnvConfig;
use crate::error::{Error, Result};
use crate::ppo::TrainConfig;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub episodes: usize,
    /// Write per-episode JSONL logs next to the report.
    pub write_logs: bool,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self { episodes: 20, write_logs: false }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchConfig {
    /// Scale applied to the benchmark density rows.
    pub density_factor: f64,
    /// Trials per cell.
    pub trials: usize,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self { density_factor: 0.25, trials: 20 }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AppConfig {
    pub seed: u64,
    pub env: EnvConfig,
    pub train: TrainConfig,
    pub eval: EvalConfig,
    pub bench: BenchConfig,
}

impl AppConfig {
    pub fn validate(&self) -> Result<()> {
        self.env.validate()?;
        self.train.validate()?;
        Ok(())
    }

    /// Hash of the effective config (first 16 hex chars of SHA-256 over the
    /// canonical TOML form).
    pub fn hash(&self) -> String {
        let body = toml::to_string(self).unwrap_or_default();
        let digest = Sha256::digest(body.as_bytes());
        let mut out = String::with_capacity(16);
        for b in &digest[..8] {
            out.push_str(&format!("{b:02x}"));
        }
        out
    }
}

fn parse_scalar(s: &str) -> toml::Value {
    if let Ok(t) = format!("x = {s}").parse::<toml::Table>() {
        if let Some(v) = t.get("x") {
            return v.clone();
        }
    }
    toml::Value::String(s.to_string())
}

fn apply_override(table: &mut toml::Table, kv: &str) -> Result<()> {
    let (key, val) = kv
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("--override expects key.path=value, got `{kv}`")))?;
    let parts: Vec<&str> = key.split('.').collect();
    if parts.is_empty() || parts.iter().any(|p| p.is_empty()) {
        return Err(Error::Config(format!("bad override key `{key}`")));
    }
    let mut cur = table;
    for p in &parts[..parts.len() - 1] {
        cur = cur
            .entry(p.to_string())
            .or_insert(toml::Value::Table(toml::Table::new()))
            .as_table_mut()
            .ok_or_else(|| Error::Config(format!("override key `{key}`: `{p}` is not a table")))?;
    }
    cur.insert(parts[parts.len() - 1].to_string(), parse_scalar(val.trim()));
    Ok(())
}

/// Load the layered config. `path = None` starts from built-in defaults.
pub fn load_config(path: Option<&Path>, overrides: &[String], seed: Option<u64>) -> Result<AppConfig> {
    let mut table: toml::Table = match path {
        Some(p) => {
            let body = std::fs::read_to_string(p)?;
            body.parse::<toml::Table>()
                .map_err(|e| Error::Config(format!("{}: {e}", p.display())))?
        }
        None => toml::Table::new(),
    };
    for ov in overrides {
        apply_override(&mut table, ov)?;
    }
    let body = toml::to_string(&table).map_err(|e| Error::Config(e.to_string()))?;
    let mut cfg: AppConfig = toml::from_str(&body).map_err(|e| Error::Config(e.to_string()))?;
    if let Some(s) = seed {
        cfg.seed = s;
        cfg.train.seed = s;
    }
    cfg.validate()?;
    Ok(cfg)
}
