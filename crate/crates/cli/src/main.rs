use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use mobius_cli::{run_config_file, CliOverrides};

/// Scenario runner for the conformal-sphere toolkit: reads a JSON config,
/// writes a JSON report and CSV point clouds.
#[derive(Parser, Debug)]
#[command(name = "mobius", version, about)]
struct Args {
    /// Path to the JSON scenario config.
    #[arg(long)]
    config: PathBuf,

    /// Directory for reports and point clouds.
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,

    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,

    /// Global multiplier on scenario tolerances.
    #[arg(long, default_value_t = 1.0)]
    tolerance_scale: f64,

    /// Largest schedule exponent for symbolic sequences.
    #[arg(long)]
    schedule_max_exp: Option<u32>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let overrides = CliOverrides {
        seed: args.seed,
        tolerance_scale: args.tolerance_scale,
        schedule_max_exp: args.schedule_max_exp,
    };
    match run_config_file(&args.config, &args.out_dir, &overrides) {
        Ok((status, report)) => {
            for failure in &report.failures {
                eprintln!("assertion failed: {failure}");
            }
            eprintln!(
                "{}: {} ({:.1} ms)",
                report.scenario,
                if report.pass { "pass" } else { "FAIL" },
                report.wall_clock_ms
            );
            ExitCode::from(status.exit_code() as u8)
        }
        Err(err) => {
            // config or environment error: structured message, exit 2
            let detail = serde_json::json!({
                "error": format!("{err:#}"),
            });
            eprintln!("{detail}");
            ExitCode::from(2)
        }
    }
}
