//! The per-step diagnostics table `energy.csv`.

use std::path::Path;

use swpv_core::nonlinear::StepDiagnostics;

use crate::error::{CliError, Result};

pub const COLUMNS: [&str; 8] = [
    "t",
    "E",
    "eta_ratio",
    "l2p_norm",
    "conformal_lhs",
    "conformal_rhs",
    "support_radius",
    "triple_norm",
];

pub fn write_energy_csv(path: &Path, rows: &[StepDiagnostics]) -> Result<()> {
    let io = |e: csv::Error| match e.into_kind() {
        csv::ErrorKind::Io(e) => CliError::io(path, e),
        other => CliError::schema(path, format!("{other:?}")),
    };
    let mut w = csv::WriterBuilder::new().has_headers(false).from_path(path).map_err(io)?;
    w.write_record(COLUMNS).map_err(io)?;
    for row in rows {
        w.serialize(row).map_err(io)?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

/// Reads the table back, rejecting a wrong header, rows with the wrong
/// number of columns and unparsable entries. Rows are numbered from 1 after
/// the header.
pub fn read_energy_csv(path: &Path) -> Result<Vec<StepDiagnostics>> {
    let file = std::fs::File::open(path).map_err(|e| CliError::io(path, e))?;
    let mut r = csv::ReaderBuilder::new().flexible(true).has_headers(true).from_reader(file);
    let header = r.headers().map_err(|e| CliError::schema(path, e.to_string()))?;
    if header.iter().ne(COLUMNS) {
        return Err(CliError::schema(
            path,
            format!("header is {:?}, expected {:?}", header.iter().collect::<Vec<_>>(), COLUMNS),
        ));
    }
    let mut rows = Vec::new();
    for (i, record) in r.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| CliError::schema(path, format!("row {row}: {e}")))?;
        if record.len() != COLUMNS.len() {
            return Err(CliError::schema(
                path,
                format!("row {row}: expected {} columns, found {}", COLUMNS.len(), record.len()),
            ));
        }
        let mut v = [0.0; 8];
        for (k, (field, name)) in record.iter().zip(COLUMNS).enumerate() {
            v[k] = field
                .trim()
                .parse()
                .map_err(|_| CliError::schema(path, format!("row {row}: column {name} is not a number: {field:?}")))?;
        }
        rows.push(StepDiagnostics {
            t: v[0],
            energy: v[1],
            eta_ratio: v[2],
            l2p_norm: v[3],
            conformal_lhs: v[4],
            conformal_rhs: v[5],
            support_radius: v[6],
            triple_norm: v[7],
        });
    }
    Ok(rows)
}
