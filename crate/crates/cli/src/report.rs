//! Plots and a plain-text summary regenerated from a run's `energy.csv`.

use std::fmt::Write;
use std::path::{Path, PathBuf};

use swpv_core::nonlinear::StepDiagnostics;

use crate::error::{CliError, Result};
use crate::plot::{line_plot, PlotSpec, Scale};
use crate::table::read_energy_csv;

pub const ENERGY_CSV: &str = "energy.csv";
pub const SUMMARY: &str = "summary.txt";
pub const PLOT_DIR: &str = "plots";

/// Files written by [`emit_report`].
#[derive(Debug, Clone, PartialEq)]
pub struct EmittedReport {
    pub rows: usize,
    pub plots: Vec<PathBuf>,
    pub summary: PathBuf,
}

fn write(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

pub fn summary_text(rows: &[StepDiagnostics]) -> String {
    let (Some(first), Some(last)) = (rows.first(), rows.last()) else {
        return "energy.csv holds no rows; plots are empty.\n".to_string();
    };
    let max = |f: fn(&StepDiagnostics) -> f64| rows.iter().map(f).fold(f64::NEG_INFINITY, f64::max);
    let mut s = String::new();
    let _ = writeln!(s, "rows: {}", rows.len());
    let _ = writeln!(s, "t: {} to {}", first.t, last.t);
    let _ = writeln!(s, "E(0): {:e}", first.energy);
    let _ = writeln!(s, "E(final): {:e}", last.energy);
    if first.energy > 0.0 {
        let _ = writeln!(s, "max E/E(0): {}", max(|r| r.energy) / first.energy);
    }
    let _ = writeln!(s, "max L^2p norm: {:e}", max(|r| r.l2p_norm));
    let _ = writeln!(s, "max triple norm: {:e}", max(|r| r.triple_norm));
    let _ = writeln!(
        s,
        "max conformal ratio: {}",
        rows.iter()
            .map(|r| if r.conformal_rhs > 0.0 { r.conformal_lhs / r.conformal_rhs } else { 0.0 })
            .fold(0.0, f64::max)
    );
    let _ = writeln!(s, "final support radius: {}", last.support_radius);
    s
}

/// Regenerates `plots/{energy,l2p_norm,triple_norm}.svg` and `summary.txt`
/// from `energy.csv` in `run_dir`. Repeated calls write identical bytes.
pub fn emit_report(run_dir: &Path) -> Result<EmittedReport> {
    let rows = read_energy_csv(&run_dir.join(ENERGY_CSV))?;
    let plot_dir = run_dir.join(PLOT_DIR);
    std::fs::create_dir_all(&plot_dir).map_err(|e| CliError::io(&plot_dir, e))?;
    let series = |f: fn(&StepDiagnostics) -> f64| rows.iter().map(|r| (r.t, f(r))).collect::<Vec<_>>();
    let plots = [
        ("energy.svg", "Sobolev energy E(t)", "E", Scale::Linear, series(|r| r.energy)),
        ("l2p_norm.svg", "L^2p norm", "L^2p norm", Scale::Log, series(|r| r.l2p_norm)),
        ("triple_norm.svg", "Weighted amplitude norm", "triple norm", Scale::Linear, series(|r| r.triple_norm)),
    ];
    let mut written = Vec::new();
    for (file, title, y_label, scale, points) in plots {
        let path = plot_dir.join(file);
        write(&path, &line_plot(&PlotSpec { title, x_label: "t", y_label, scale }, &points))?;
        written.push(path);
    }
    let summary = run_dir.join(SUMMARY);
    write(&summary, &summary_text(&rows))?;
    Ok(EmittedReport { rows: rows.len(), plots: written, summary })
}
