//! Driver for the swpv simulations and verification suites: TOML
//! configuration, scenario orchestration and the persisted run artifacts
//! (`config-echo.toml`, `report.json`, `energy.csv`, `snapshots.bin`,
//! `plots/*.svg`, `summary.txt`).

pub mod config;
pub mod error;
pub mod plot;
pub mod report;
pub mod scenarios;
pub mod snapshots;
pub mod table;

use std::path::{Path, PathBuf};

use serde::Serialize;

pub use config::{Resolved, RunConfig, Scenario};
pub use error::{CliError, Result};
pub use report::emit_report;

pub const CONFIG_ECHO: &str = "config-echo.toml";
pub const REPORT_JSON: &str = "report.json";
pub const SNAPSHOTS_BIN: &str = "snapshots.bin";

/// Top level of `report.json`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport<'a> {
    pub scenario: Scenario,
    pub name: &'a str,
    pub passed: bool,
    pub failure: Option<&'a str>,
    pub results: &'a serde_json::Value,
}

/// What a completed scenario left on disk.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub run_dir: PathBuf,
    pub report: String,
    /// Set when the scenario ran but failed its own success criterion.
    pub failure: Option<String>,
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

/// Pretty-printed `report.json` contents; identical inputs give identical
/// bytes.
pub fn render_report(resolved: &Resolved, output: &scenarios::ScenarioOutput) -> String {
    let report = RunReport {
        scenario: resolved.scenario,
        name: resolved.config.run.name.as_deref().unwrap_or_default(),
        passed: output.failure.is_none(),
        failure: output.failure.as_deref(),
        results: &output.report,
    };
    let mut text = serde_json::to_string_pretty(&report).expect("reports serialize");
    text.push('\n');
    text
}

/// Runs the scenario and writes its artifacts into the run directory.
/// Evolution scenarios also write `energy.csv`, `snapshots.bin`, the plots
/// and the summary.
pub fn run_scenario(resolved: &Resolved) -> Result<RunOutcome> {
    let dir = &resolved.run_dir;
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    write(&dir.join(CONFIG_ECHO), resolved.config.to_toml())?;
    let output = scenarios::execute(&resolved.plan)?;
    let report = render_report(resolved, &output);
    write(&dir.join(REPORT_JSON), &report)?;
    if let Some(rows) = &output.rows {
        table::write_energy_csv(&dir.join(report::ENERGY_CSV), rows)?;
        emit_report(dir)?;
    }
    if let Some(traj) = &output.trajectory {
        let count = resolved.config.output.snapshot_count.unwrap_or(2);
        let picked = snapshots::select_snapshots(traj, count);
        snapshots::write_snapshots(&dir.join(SNAPSHOTS_BIN), &traj.grid, traj.l_max(), &picked)?;
    }
    Ok(RunOutcome { run_dir: dir.clone(), report, failure: output.failure })
}
