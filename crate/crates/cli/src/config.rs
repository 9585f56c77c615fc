//! Schema-versioned JSON configuration files.
//!
//! A config file is an object with `schema_version` and a `config` key
//! holding the sweep or scan configuration. The JSON reports written by
//! `verify` and `scan` have the same shape, so a report can be fed back as
//! a config file.

use std::path::Path;

use cvtrust::keyrate::{ScanConfig, ScanTable};
use cvtrust::lab::{EquivalenceReport, SweepConfig, SweepMode};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Deserialize)]
pub struct VerifyFile {
    #[serde(default)]
    pub mode: Option<SweepMode>,
    pub config: SweepConfig,
}

#[derive(Debug, Deserialize)]
pub struct ScanFile {
    pub config: ScanConfig,
}

#[derive(Serialize)]
pub struct VerifyDocument<'a> {
    pub schema_version: u32,
    #[serde(flatten)]
    pub report: &'a EquivalenceReport,
}

#[derive(Serialize)]
pub struct ScanDocument<'a> {
    pub schema_version: u32,
    #[serde(flatten)]
    pub table: &'a ScanTable,
}

pub fn load<T: DeserializeOwned>(path: &Path) -> Result<T, String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
    parse(&text).map_err(|e| format!("{}: {e}", path.display()))
}

pub fn parse<T: DeserializeOwned>(text: &str) -> Result<T, String> {
    let value: serde_json::Value = serde_json::from_str(text).map_err(|e| e.to_string())?;
    match value.get("schema_version").and_then(|v| v.as_u64()) {
        Some(v) if v == u64::from(SCHEMA_VERSION) => {}
        Some(v) => return Err(format!("unsupported schema_version {v}, expected {SCHEMA_VERSION}")),
        None => return Err("missing schema_version".into()),
    }
    serde_json::from_value(value).map_err(|e| e.to_string())
}
