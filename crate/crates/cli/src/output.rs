//! CSV and manifest emission.
//!
//! Floats are written with eight significant digits; saturated values are
//! the literal `+inf`. Every artifact is rendered in memory first so a run
//! that fails part way leaves nothing behind.

use std::fs;
use std::path::{Path, PathBuf};

use emlab_core::montecarlo::MomentReport;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum OutputError {
    #[error("cannot write {path}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("empty report")]
    EmptyReport,
}

type Result<T> = std::result::Result<T, OutputError>;

/// A named file body waiting to be written.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Artifact {
    pub name: String,
    pub contents: String,
}

/// `{:.7e}` with `+inf` / `-inf` / `nan` spelled out.
pub fn format_value(v: f64) -> String {
    if v == f64::INFINITY {
        "+inf".into()
    } else if v == f64::NEG_INFINITY {
        "-inf".into()
    } else if v.is_nan() {
        "nan".into()
    } else {
        format!("{v:.7e}")
    }
}

/// Human-facing variant used in printed reports.
pub fn display_value(v: f64) -> String {
    if v == f64::INFINITY {
        "∞".into()
    } else if v == f64::NEG_INFINITY {
        "-∞".into()
    } else {
        format!("{v:.6}")
    }
}

fn number_label(x: f64) -> String {
    // 2.0 -> "2", 0.25 -> "0.25"
    let s = format!("{x}");
    s.strip_suffix(".0").map(str::to_string).unwrap_or(s)
}

pub fn quantile_label(level: f64) -> String {
    format!("q{}", number_label((level * 1e6).round() / 1e4))
}

pub fn moment_label(index: &str, beta: f64) -> String {
    format!("E|Y_{index}|^{}", number_label(beta))
}

fn render(header: Vec<String>, rows: Vec<Vec<String>>) -> Result<String> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(&header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    let bytes = w.into_inner().map_err(|e| OutputError::Csv(e.into_error().into()))?;
    Ok(String::from_utf8(bytes).expect("csv output is built from UTF-8 strings"))
}

/// Columns `k, E|Y_k|^beta..., q.., overflow_count`, one row per recorded step.
pub fn moment_csv(report: &MomentReport) -> Result<String> {
    if report.records.is_empty() {
        return Err(OutputError::EmptyReport);
    }
    let mut header = vec!["k".to_string()];
    header.extend(report.betas.iter().map(|&b| moment_label("k", b)));
    header.extend(report.quantile_levels.iter().map(|&q| quantile_label(q)));
    header.push("overflow_count".into());
    let rows = report
        .records
        .iter()
        .map(|r| {
            let mut row = vec![r.step.to_string()];
            row.extend(r.moments.iter().chain(&r.quantiles).map(|&v| format_value(v)));
            row.push(r.overflowed.to_string());
            row
        })
        .collect();
    render(header, rows)
}

/// Columns `k, path_0, path_1, ...` holding `|Y_k|` of the traced paths.
pub fn trace_csv(report: &MomentReport) -> Result<String> {
    let mut header = vec!["k".to_string()];
    header.extend((0..report.traces.len()).map(|i| format!("path_{i}")));
    let rows = report
        .records
        .iter()
        .enumerate()
        .map(|(j, r)| {
            let mut row = vec![r.step.to_string()];
            row.extend(report.traces.iter().map(|t| format_value(t[j])));
            row
        })
        .collect();
    render(header, rows)
}

/// One row per step count with the final-step moments and overflow count.
pub fn sweep_csv(sweep: &[(usize, MomentReport)]) -> Result<String> {
    let first = sweep.first().ok_or(OutputError::EmptyReport)?;
    let mut header = vec!["n".to_string()];
    header.extend(first.1.betas.iter().map(|&b| moment_label("n", b)));
    header.extend(first.1.quantile_levels.iter().map(|&q| quantile_label(q)));
    header.push("overflow_count".into());
    let rows = sweep
        .iter()
        .map(|(n, rep)| {
            let r = rep.final_record();
            let mut row = vec![n.to_string()];
            row.extend(r.moments.iter().chain(&r.quantiles).map(|&v| format_value(v)));
            row.push(r.overflowed.to_string());
            row
        })
        .collect();
    render(header, rows)
}

/// Two-column `quantity,value` file.
pub fn key_value_csv(rows: &[(String, String)]) -> Result<String> {
    render(vec!["quantity".into(), "value".into()], rows.iter().map(|(k, v)| vec![k.clone(), v.clone()]).collect())
}

/// `key = value` lines describing a run.
#[derive(Debug, Clone)]
pub struct Manifest {
    pub entries: Vec<(String, String)>,
}

impl Manifest {
    pub fn render(&self) -> String {
        self.entries.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }
}

/// Version string: `git describe` of the source tree when available,
/// otherwise the package version.
pub fn version_string() -> String {
    let dir = env!("CARGO_MANIFEST_DIR");
    std::process::Command::new("git")
        .args(["-C", dir, "describe", "--always", "--dirty", "--tags"])
        .output()
        .ok()
        .filter(|o| o.status.success())
        .and_then(|o| String::from_utf8(o.stdout).ok())
        .map(|s| format!("{} ({})", env!("CARGO_PKG_VERSION"), s.trim()))
        .unwrap_or_else(|| env!("CARGO_PKG_VERSION").to_string())
}

/// Creates `dir` and writes every artifact into it.
pub fn write_artifacts(dir: &Path, artifacts: &[Artifact]) -> Result<()> {
    fs::create_dir_all(dir).map_err(|source| OutputError::Io { path: dir.into(), source })?;
    for a in artifacts {
        let path = dir.join(&a.name);
        fs::write(&path, &a.contents).map_err(|source| OutputError::Io { path, source })?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use emlab_core::montecarlo::StepRecord;

    fn report(records: Vec<StepRecord>) -> MomentReport {
        MomentReport { paths: 4, eta: 0.1, betas: vec![2.0], quantile_levels: vec![0.5, 0.9], records, traces: vec![] }
    }

    fn record(step: usize, m: f64) -> StepRecord {
        StepRecord {
            step,
            moments: vec![m],
            ln_moments: vec![m.ln()],
            std_errors: vec![0.0],
            quantiles: vec![1.0, 2.5],
            overflowed: usize::from(m.is_infinite()),
        }
    }

    #[test]
    fn single_row_is_two_lines() {
        let s = moment_csv(&report(vec![record(0, 1.0)])).unwrap();
        assert_eq!(s, "k,E|Y_k|^2,q50,q90,overflow_count\n0,1.0000000e0,1.0000000e0,2.5000000e0,0\n");
    }

    #[test]
    fn saturation_is_plus_inf() {
        let s = moment_csv(&report(vec![record(0, 1.0), record(3, f64::INFINITY)])).unwrap();
        assert!(s.lines().nth(2).unwrap().starts_with("3,+inf,"));
        assert!(!s.contains('\r'));
        assert_eq!(display_value(f64::INFINITY), "∞");
    }

    #[test]
    fn empty_report_rejected() {
        assert!(matches!(moment_csv(&report(vec![])), Err(OutputError::EmptyReport)));
        assert!(sweep_csv(&[]).is_err());
    }

    #[test]
    fn labels() {
        assert_eq!(quantile_label(0.975), "q97.5");
        assert_eq!(quantile_label(0.5), "q50");
        assert_eq!(moment_label("n", 0.0625), "E|Y_n|^0.0625");
        assert_eq!(format_value(123456789.0), "1.2345679e8");
    }

    #[test]
    fn identical_reports_render_identically() {
        let r = report(vec![record(0, 1.0), record(1, 3.25)]);
        assert_eq!(moment_csv(&r).unwrap(), moment_csv(&r.clone()).unwrap());
    }
}
