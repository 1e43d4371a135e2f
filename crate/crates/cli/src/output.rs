//! CSV tables and the JSON metadata sidecar.

use std::fs;
use std::path::{Path, PathBuf};

use qdemon_core::quantum::DensityMatrix;
use serde_json::json;

use crate::error::CliError;
use crate::runner::{format_number, ResultTable};
use crate::scenario::Scenario;

/// Settings of one invocation that are recorded in the sidecar.
#[derive(Clone, Debug)]
pub struct RunInfo {
    pub workers: usize,
    pub bits: bool,
}

fn write_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Write {
        path: path.to_path_buf(),
        reason: e.to_string(),
    }
}

fn write_csv(path: &Path, header: &[String], rows: &[Vec<String>]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| write_err(path, e))?;
    w.write_record(header).map_err(|e| write_err(path, e))?;
    for row in rows {
        w.write_record(row).map_err(|e| write_err(path, e))?;
    }
    w.flush().map_err(|e| write_err(path, e))
}

/// Long-format dump: one line per matrix element.
fn matrix_rows(point: usize, rho: &DensityMatrix) -> Vec<Vec<String>> {
    let m = rho.matrix();
    let mut rows = Vec::with_capacity(m.nrows() * m.ncols());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            let z = m[(i, j)];
            rows.push(vec![
                point.to_string(),
                i.to_string(),
                j.to_string(),
                format_number(z.re),
                format_number(z.im),
            ]);
        }
    }
    rows
}

/// Write `<name>.csv`, `<name>.meta.json` and, for the autonomous demon,
/// the state dumps. Returns the written paths.
pub fn write_outputs(
    dir: &Path,
    scenario: &Scenario,
    table: &ResultTable,
    info: &RunInfo,
) -> Result<Vec<PathBuf>, CliError> {
    fs::create_dir_all(dir).map_err(|e| write_err(dir, e))?;
    let mut written = Vec::new();

    let csv_path = dir.join(format!("{}.csv", scenario.name));
    write_csv(
        &csv_path,
        &table.header(info.bits),
        &table.rendered_rows(info.bits),
    )?;
    written.push(csv_path);

    if !table.artifacts.is_empty() {
        let matrix_header: Vec<String> =
            ["point", "row", "col", "re", "im"].map(String::from).into();
        for (file, qubit) in [("rho_S.csv", true), ("rho_D.csv", false)] {
            let rows: Vec<Vec<String>> = table
                .artifacts
                .iter()
                .enumerate()
                .flat_map(|(p, a)| matrix_rows(p, if qubit { &a.rho_s } else { &a.rho_d }))
                .collect();
            let path = dir.join(file);
            write_csv(&path, &matrix_header, &rows)?;
            written.push(path);
        }
        let husimi_header: Vec<String> = ["point", "alpha_re", "alpha_im", "q"]
            .map(String::from)
            .into();
        let rows: Vec<Vec<String>> = table
            .artifacts
            .iter()
            .enumerate()
            .flat_map(|(p, a)| {
                a.husimi.iter().map(move |(z, q)| {
                    vec![
                        p.to_string(),
                        format_number(z.re),
                        format_number(z.im),
                        format_number(*q),
                    ]
                })
            })
            .collect();
        let path = dir.join("husimi.csv");
        write_csv(&path, &husimi_header, &rows)?;
        written.push(path);
    }

    let meta_path = dir.join(format!("{}.meta.json", scenario.name));
    let files: Vec<String> = written
        .iter()
        .filter_map(|p| p.file_name().map(|f| f.to_string_lossy().into_owned()))
        .collect();
    let meta = json!({
        "name": scenario.name,
        "protocol": scenario.protocol.as_str(),
        "version": env!("CARGO_PKG_VERSION"),
        "created": chrono::Utc::now().to_rfc3339(),
        "seed": scenario.seed,
        "point_seeds": table.point_seeds,
        "workers": info.workers,
        "parallel": cfg!(feature = "parallel"),
        "information_unit": if info.bits { "bits" } else { "nats" },
        "columns": table.header(info.bits),
        "rows": table.rows.len(),
        "files": files,
        "config": scenario,
    });
    let text = serde_json::to_string_pretty(&meta).map_err(|e| write_err(&meta_path, e))?;
    fs::write(&meta_path, text + "\n").map_err(|e| write_err(&meta_path, e))?;
    written.push(meta_path);
    Ok(written)
}
