//! CSV, JSON report and run manifest.
//!
//! Floats are written in shortest round-trip form and missing values as `NA`,
//! so identical inputs give byte-identical files.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use thiserror::Error;

use crate::config::RunConfig;
use crate::report::{ComparisonReport, PointComparison, Summary, SCHEMA_VERSION};
use crate::sweep::{PointResult, SweepResult};

#[derive(Debug, Error)]
pub enum OutputError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error("{path}: {source}")]
    Json { path: PathBuf, source: serde_json::Error },
}

pub const NULL_TOKEN: &str = "NA";

pub const CSV_COLUMNS: [&str; 14] = [
    "snr_db",
    "user",
    "duplex",
    "sigma_si_db",
    "op_exact",
    "op_asym",
    "op_mc",
    "mc_stderr",
    "op_quad",
    "scenario",
    "rho",
    "n_antennas",
    "d_s2",
    "series_converged",
];

fn num(v: Option<f64>) -> String {
    match v {
        // Debug is the shortest representation that parses back exactly
        Some(x) if x.is_finite() => format!("{x:?}"),
        Some(x) => x.to_string(),
        None => NULL_TOKEN.to_string(),
    }
}

fn row(p: &PointResult, user: u8) -> [String; 14] {
    let u = p.user(user);
    [
        num(Some(p.spec.snr_db)),
        user.to_string(),
        p.spec.duplex.as_str().to_string(),
        num(Some(p.spec.sigma_si_db)),
        num(u.exact),
        num(u.asymptotic),
        num(u.mc),
        num(u.mc_stderr),
        num(u.quadrature),
        p.spec.scenario.as_str().to_string(),
        num(Some(p.spec.rho)),
        p.spec.n_antennas.to_string(),
        num(Some(p.spec.d_s2)),
        u.series_converged.map_or(NULL_TOKEN.to_string(), |b| b.to_string()),
    ]
}

/// One row per point and user, in sweep order.
pub fn write_csv<W: Write>(result: &SweepResult, w: W) -> csv::Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(CSV_COLUMNS)?;
    for p in &result.points {
        for user in [1, 2] {
            wr.write_record(row(p, user))?;
        }
    }
    wr.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct ReportPoint<'a> {
    #[serde(flatten)]
    result: &'a PointResult,
    comparison: &'a PointComparison,
}

#[derive(Serialize)]
struct ReportFile<'a> {
    schema_version: u32,
    name: &'a str,
    params: &'a RunConfig,
    points: Vec<ReportPoint<'a>>,
    summary: &'a Summary,
}

#[derive(Serialize)]
struct Manifest<'a> {
    schema_version: u32,
    tool: &'static str,
    version: &'static str,
    config: &'a RunConfig,
    files: Vec<String>,
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> OutputError + '_ {
    move |source| OutputError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), OutputError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|source| OutputError::Json {
        path: path.to_path_buf(),
        source,
    })?;
    text.push('\n');
    fs::write(path, text).map_err(io_err(path))
}

/// Writes `<name>.csv`, `report.json` and `manifest.json` into `out_dir`,
/// creating it if needed. Returns the paths written.
pub fn emit_outputs(result: &SweepResult, report: &ComparisonReport, out_dir: &Path) -> Result<Vec<PathBuf>, OutputError> {
    fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
    let name = &result.config.name;
    let csv_path = out_dir.join(format!("{name}.csv"));
    let file = fs::File::create(&csv_path).map_err(io_err(&csv_path))?;
    write_csv(result, io::BufWriter::new(file)).map_err(|source| OutputError::Csv {
        path: csv_path.clone(),
        source,
    })?;

    let report_path = out_dir.join("report.json");
    let points = result
        .points
        .iter()
        .zip(&report.points)
        .map(|(result, comparison)| ReportPoint { result, comparison })
        .collect();
    write_json(
        &report_path,
        &ReportFile {
            schema_version: SCHEMA_VERSION,
            name,
            params: &result.config,
            points,
            summary: &report.summary,
        },
    )?;

    let manifest_path = out_dir.join("manifest.json");
    let files = [&csv_path, &report_path]
        .iter()
        .filter_map(|p| p.file_name())
        .map(|n| n.to_string_lossy().into_owned())
        .collect();
    write_json(
        &manifest_path,
        &Manifest {
            schema_version: SCHEMA_VERSION,
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            config: &result.config,
            files,
        },
    )?;
    Ok(vec![csv_path, report_path, manifest_path])
}
