//! CSV / JSON report writers and the record reader used by `rdsim report`.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::sweep::SweepReport;
use super::trial::{Spectra, TrialRecord, SCHEMA_VERSION};
use crate::error::{Error, Result};

pub const GRID_CSV: &str = "error_grid.csv";
pub const REPORT_JSON: &str = "sweep_report.json";
pub const RECORDS_DIR: &str = "records";
pub const SPECTRA_DIR: &str = "spectra";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    /// Amplitude × position error grid.
    Csv,
    /// Full report with every record embedded.
    Json,
    /// One JSON file per trial under `records/`.
    Records,
    /// One spectra table per trial under `spectra/`.
    Spectra,
}

impl ReportFormat {
    pub const ALL: [ReportFormat; 4] = [
        ReportFormat::Csv,
        ReportFormat::Json,
        ReportFormat::Records,
        ReportFormat::Spectra,
    ];
}

fn cell(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// One row per amplitude: `amplitude_ratio, position_<p>..., mean`.
pub fn error_grid_csv(report: &SweepReport) -> String {
    let mut out = String::from("amplitude_ratio");
    for p in &report.positions {
        let _ = write!(out, ",position_{p}");
    }
    out.push_str(",mean\n");
    for (i, a) in report.amplitudes.iter().enumerate() {
        out.push_str(&a.to_string());
        for e in &report.error_grid[i] {
            out.push(',');
            out.push_str(&cell(*e));
        }
        out.push(',');
        out.push_str(&cell(report.mean_errors[i]));
        out.push('\n');
    }
    out
}

pub fn spectra_csv(spectra: &Spectra) -> String {
    let mut out = String::from("frequency_hz,original_rad,reconstructed_rad\n");
    for ((f, o), r) in spectra
        .frequencies_hz
        .iter()
        .zip(&spectra.original_rad)
        .zip(&spectra.reconstructed_rad)
    {
        let _ = writeln!(out, "{f},{o},{r}");
    }
    out
}

pub fn trial_stem(record: &TrialRecord) -> String {
    format!("trial_a{:.4}_p{:02}", record.amplitude_ratio, record.position)
}

pub fn to_json_pretty<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

pub(crate) fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// Writes the requested report artifacts; returns the paths written.
pub fn emit_report(report: &SweepReport, out_dir: &Path, formats: &[ReportFormat]) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut written = Vec::new();
    for format in formats {
        match format {
            ReportFormat::Csv => {
                let path = out_dir.join(GRID_CSV);
                write_file(&path, &error_grid_csv(report))?;
                written.push(path);
            }
            ReportFormat::Json => {
                let path = out_dir.join(REPORT_JSON);
                write_file(&path, &to_json_pretty(report)?)?;
                written.push(path);
            }
            ReportFormat::Records => {
                for r in &report.records {
                    let path = out_dir.join(RECORDS_DIR).join(format!("{}.json", trial_stem(r)));
                    write_file(&path, &to_json_pretty(r)?)?;
                    written.push(path);
                }
            }
            ReportFormat::Spectra => {
                for r in &report.records {
                    let path = out_dir.join(SPECTRA_DIR).join(format!("{}.csv", trial_stem(r)));
                    write_file(&path, &spectra_csv(&r.spectra))?;
                    written.push(path);
                }
            }
        }
    }
    Ok(written)
}

/// Why a file in a records directory was not loaded.
#[derive(Debug, Clone, PartialEq)]
pub struct SkippedRecord {
    pub path: PathBuf,
    pub reason: String,
}

/// Reads every `*.json` trial record in `dir`, skipping corrupt files and
/// rejecting records whose `schema_version` differs from the current one.
pub fn load_records(dir: &Path) -> Result<(Vec<TrialRecord>, Vec<SkippedRecord>)> {
    let entries = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut paths: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();

    let mut records = Vec::new();
    let mut skipped = Vec::new();
    for path in paths {
        let text = match fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) => {
                skipped.push(SkippedRecord {
                    path,
                    reason: e.to_string(),
                });
                continue;
            }
        };
        let value: serde_json::Value = match serde_json::from_str(&text) {
            Ok(v) => v,
            Err(e) => {
                skipped.push(SkippedRecord {
                    path,
                    reason: format!("corrupt JSON: {e}"),
                });
                continue;
            }
        };
        let version = value.get("schema_version").and_then(|v| v.as_u64());
        match version {
            Some(v) if v == u64::from(SCHEMA_VERSION) => {}
            Some(v) => {
                let err = Error::Schema {
                    found: u32::try_from(v).unwrap_or(u32::MAX),
                    expected: SCHEMA_VERSION,
                };
                skipped.push(SkippedRecord {
                    path,
                    reason: err.to_string(),
                });
                continue;
            }
            None => {
                skipped.push(SkippedRecord {
                    path,
                    reason: "missing schema_version".into(),
                });
                continue;
            }
        }
        match serde_json::from_value::<TrialRecord>(value) {
            Ok(r) => records.push(r),
            Err(e) => skipped.push(SkippedRecord {
                path,
                reason: format!("not a trial record: {e}"),
            }),
        }
    }
    Ok((records, skipped))
}

/// Rebuilds a sweep report from stored records without re-simulating.
pub fn report_from_records(records: Vec<TrialRecord>) -> Result<SweepReport> {
    let first = records
        .first()
        .ok_or_else(|| Error::invalid("no trial records to report"))?;
    let config = first.config.clone();
    let mut amplitudes: Vec<f64> = Vec::new();
    for r in &records {
        if !amplitudes.iter().any(|a| (a - r.amplitude_ratio).abs() <= 1e-9) {
            amplitudes.push(r.amplitude_ratio);
        }
    }
    amplitudes.sort_by(|a, b| b.total_cmp(a));
    let mut positions: Vec<usize> = records.iter().map(|r| r.position).collect();
    positions.sort_unstable();
    positions.dedup();
    Ok(SweepReport::from_records(
        config,
        amplitudes,
        positions,
        records,
        Vec::new(),
    ))
}
