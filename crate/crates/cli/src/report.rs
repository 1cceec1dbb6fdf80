//! JSON report schema and atomic file writes.
//!
//! Reports are byte-identical across reruns with the same config and seed,
//! except for the `wall_clock_ms` field.

use std::path::Path;

use anyhow::Context;
use serde::{Deserialize, Serialize};

pub const TOOL_VERSION: &str = concat!("mobius ", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Provenance {
    pub tool: String,
    pub seed: u64,
    pub n: usize,
    pub tolerance_scale: f64,
    pub schedule: Vec<f64>,
    pub tolerances: serde_json::Value,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Report {
    pub schema: u32,
    pub scenario: String,
    /// Scenario-specific verdicts; every verdict carries its resolution or
    /// depth qualifier.
    pub verdicts: serde_json::Value,
    /// Residual tables (meaning is scenario-specific).
    pub residuals: Vec<serde_json::Value>,
    pub pass: bool,
    /// Structured failure details when `pass` is false.
    pub failures: Vec<String>,
    pub provenance: Provenance,
    /// Excluded from determinism comparisons.
    pub wall_clock_ms: f64,
}

/// Writes atomically: temp file in the same directory, then rename.
pub fn write_report(report: &Report, path: &Path) -> anyhow::Result<()> {
    let text = serde_json::to_string_pretty(report)?;
    write_atomic(path, text.as_bytes())
}

pub fn write_atomic(path: &Path, bytes: &[u8]) -> anyhow::Result<()> {
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, bytes)
        .with_context(|| format!("writing {}", tmp.display()))?;
    std::fs::rename(&tmp, path)
        .with_context(|| format!("renaming into {}", path.display()))?;
    Ok(())
}

/// Parses a report and zeroes its wall clock, for determinism comparisons.
pub fn normalized_for_comparison(text: &str) -> anyhow::Result<serde_json::Value> {
    let mut v: serde_json::Value = serde_json::from_str(text)?;
    if let Some(obj) = v.as_object_mut() {
        obj.insert("wall_clock_ms".into(), serde_json::Value::from(0.0));
    }
    Ok(v)
}
