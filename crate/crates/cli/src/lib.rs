//! Scenario runner around `mobius-core`: JSON configs in, JSON reports and
//! CSV point clouds out, with seeded determinism.
//!
//! The binary (`mobius`) is a thin wrapper over [`run_config_file`]; tests
//! drive the same entry points directly.

pub mod config;
pub mod csvio;
pub mod report;
pub mod scenarios;

use std::path::Path;

use anyhow::Context;

pub use config::{load_config, CliOverrides, ScenarioConfig};
pub use report::Report;

/// Exit status of a scenario run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunStatus {
    /// All scenario assertions passed.
    Pass,
    /// The scenario ran but an assertion failed (exit code 1).
    AssertionsFailed,
}

impl RunStatus {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunStatus::Pass => 0,
            RunStatus::AssertionsFailed => 1,
        }
    }
}

/// Loads a config file, runs its scenario and writes artifacts under
/// `out_dir`. Config errors surface as `Err` (exit code 2 in the binary);
/// assertion failures are a normal `Ok` with a failing report.
pub fn run_config_file(
    path: &Path,
    out_dir: &Path,
    overrides: &CliOverrides,
) -> anyhow::Result<(RunStatus, Report)> {
    let cfg = load_config(path, overrides)?;
    std::fs::create_dir_all(out_dir)
        .with_context(|| format!("creating output directory {}", out_dir.display()))?;
    let report = scenarios::run(&cfg, out_dir)?;
    let report_path = out_dir.join(cfg.report_name());
    report::write_report(&report, &report_path)?;
    let status = if report.pass { RunStatus::Pass } else { RunStatus::AssertionsFailed };
    Ok((status, report))
}
