//! Consolidated report, CSV tables and gnuplot data files for a run
//! directory produced by `simulate` or `converge`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;

use crate::error::{Error, Result};
use crate::study::{table_from, ConvergenceRow, ConvergenceTable, RunSummary, SlopeFit, FITTED};

/// JSON schema that every report.json validates against.
pub const REPORT_SCHEMA: &str = include_str!("../schema/report.schema.json");

#[derive(Debug, Clone, Serialize)]
pub struct RunEntry {
    pub eps: f64,
    pub dir: String,
    pub rows: usize,
    pub columns: Vec<String>,
    pub summary: RunSummary,
    #[serde(rename = "final")]
    pub final_row: BTreeMap<String, Option<f64>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Failure {
    pub eps: f64,
    pub failure: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub format: &'static str,
    pub config: Value,
    pub runs: Vec<RunEntry>,
    pub slopes: BTreeMap<String, SlopeFit>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub failures: Vec<Failure>,
}

pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

fn read_csv(path: &Path) -> Result<Table> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines();
    let columns: Vec<String> = lines
        .next()
        .ok_or_else(|| Error::MissingArtifacts(format!("{} is empty", path.display())))?
        .split(',')
        .map(String::from)
        .collect();
    let mut rows = Vec::new();
    for (i, l) in lines.enumerate().filter(|(_, l)| !l.is_empty()) {
        let row: Vec<f64> = l
            .split(',')
            .map(|x| x.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Config(format!("{} line {}: {e}", path.display(), i + 2)))?;
        if row.len() != columns.len() {
            return Err(Error::Config(format!("{} line {}: wrong column count", path.display(), i + 2)));
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::MissingArtifacts(format!("{} has no rows", path.display())));
    }
    Ok(Table { columns, rows })
}

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

fn eps_dirs(root: &Path) -> Result<Vec<(f64, PathBuf)>> {
    let mut out = Vec::new();
    if !root.is_dir() {
        return Err(Error::MissingArtifacts(format!("{} is not a directory", root.display())));
    }
    for e in std::fs::read_dir(root)? {
        let p = e?.path();
        let name = p.file_name().and_then(|n| n.to_str()).unwrap_or("");
        if let Some(v) = name.strip_prefix("eps_").and_then(|v| v.parse::<f64>().ok()) {
            if p.is_dir() {
                out.push((v, p));
            }
        }
    }
    out.sort_by(|a, b| b.0.total_cmp(&a.0));
    Ok(out)
}

/// Build the report from a run directory without writing anything.
pub fn build_report(root: &Path) -> Result<(Report, Vec<(f64, Table)>)> {
    let cfg_path = root.join("config.json");
    if !cfg_path.is_file() {
        return Err(Error::MissingArtifacts(format!("{} not found", cfg_path.display())));
    }
    let config: Value = serde_json::from_str(&std::fs::read_to_string(&cfg_path)?)?;
    let mut runs = Vec::new();
    let mut tables = Vec::new();
    for (eps, dir) in eps_dirs(root)? {
        let diag = dir.join("diagnostics.csv");
        let summ = dir.join("summary.json");
        if !diag.is_file() || !summ.is_file() {
            continue;
        }
        let t = read_csv(&diag)?;
        let summary: RunSummary = serde_json::from_str(&std::fs::read_to_string(&summ)?)?;
        let last = t.rows.last().unwrap();
        runs.push(RunEntry {
            eps,
            dir: dir.file_name().unwrap().to_string_lossy().into_owned(),
            rows: t.rows.len(),
            columns: t.columns.clone(),
            summary,
            final_row: t.columns.iter().cloned().zip(last.iter().map(|x| finite(*x))).collect(),
        });
        tables.push((eps, t));
    }
    if runs.is_empty() {
        return Err(Error::MissingArtifacts(format!("no completed eps_* runs in {}", root.display())));
    }
    let mut failures = Vec::new();
    let conv = root.join("convergence.json");
    if conv.is_file() {
        let table: ConvergenceTable = serde_json::from_str(&std::fs::read_to_string(&conv)?)?;
        for r in table.rows {
            if let Some(f) = r.failure {
                failures.push(Failure { eps: r.eps, failure: f });
            }
        }
    }
    let slopes = table_from(
        runs.iter()
            .map(|r| ConvergenceRow {
                eps: r.eps,
                summary: Some(r.summary.clone()),
                failure: None,
            })
            .collect(),
    )
    .slopes;
    Ok((
        Report {
            format: "ac-sharp-report/1",
            config,
            runs,
            slopes,
            failures,
        },
        tables,
    ))
}

fn num(x: Option<f64>) -> String {
    match x {
        Some(v) if v.is_finite() => format!("{v:.17e}"),
        _ => "nan".into(),
    }
}

fn summary_values(s: &RunSummary) -> [Option<f64>; 6] {
    [
        Some(s.sup_e_rel),
        Some(s.sup_b_rel),
        Some(s.sup_bulk_l1),
        Some(s.initial_entropy),
        s.sup_hausdorff,
        s.final_perimeter_gap,
    ]
}

/// Write report.json, summary.csv, convergence.dat and one
/// diagnostics_<eps>.dat per run into `<root>/export`. Returns the files
/// written.
pub fn export(root: &Path) -> Result<Vec<PathBuf>> {
    let (report, tables) = build_report(root)?;
    let out = root.join("export");
    std::fs::create_dir_all(&out)?;
    let mut files = Vec::new();
    let mut put = |name: String, body: String| -> Result<()> {
        let p = out.join(name);
        std::fs::write(&p, body)?;
        files.push(p);
        Ok(())
    };
    let mut json = serde_json::to_string_pretty(&report)?;
    json.push('\n');
    put("report.json".into(), json)?;

    let mut csv = String::from("eps");
    let mut dat = String::from("# eps");
    for q in FITTED {
        let _ = write!(csv, ",{q}");
        let _ = write!(dat, " {q}");
    }
    csv.push('\n');
    dat.push('\n');
    for r in &report.runs {
        let v = summary_values(&r.summary);
        let _ = writeln!(csv, "{},{}", num(Some(r.eps)), v.iter().map(|x| num(*x)).collect::<Vec<_>>().join(","));
        let _ = writeln!(dat, "{} {}", num(Some(r.eps)), v.iter().map(|x| num(*x)).collect::<Vec<_>>().join(" "));
    }
    put("summary.csv".into(), csv)?;
    put("convergence.dat".into(), dat)?;

    for (eps, t) in &tables {
        let mut s = format!("# {}\n", t.columns.join(" "));
        for row in &t.rows {
            s.push_str(&row.iter().map(|x| num(Some(*x))).collect::<Vec<_>>().join(" "));
            s.push('\n');
        }
        put(format!("diagnostics_eps_{eps}.dat"), s)?;
    }
    Ok(files)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::RunConfig;

    #[test]
    fn empty_dir_is_missing_artifacts() {
        let d = tempfile::tempdir().unwrap();
        assert!(matches!(export(d.path()), Err(Error::MissingArtifacts(_))));
        std::fs::write(d.path().join("config.json"), "{}").unwrap();
        assert!(matches!(export(d.path()), Err(Error::MissingArtifacts(_))));
        assert!(matches!(
            export(&d.path().join("absent")),
            Err(Error::MissingArtifacts(_))
        ));
    }

    #[test]
    fn short_sweep_exports_valid_idempotent_report() {
        let d = tempfile::tempdir().unwrap();
        let cfg = RunConfig {
            epsilons: vec![0.2, 0.15, 0.1],
            t_final: 0.004,
            diag_every: 0.002,
            snapshot_every: 0.0,
            output_dir: d.path().to_path_buf(),
            threads: 1,
            ..RunConfig::default()
        };
        let table = crate::study::converge(&cfg, true).unwrap();
        assert!(table.rows.iter().all(|r| r.failure.is_none()), "{table:?}");
        let files = export(d.path()).unwrap();
        let first: Vec<Vec<u8>> = files.iter().map(|p| std::fs::read(p).unwrap()).collect();
        let again = export(d.path()).unwrap();
        assert_eq!(files, again);
        for (p, b) in again.iter().zip(&first) {
            assert_eq!(&std::fs::read(p).unwrap(), b, "{}", p.display());
        }
        let schema: Value = serde_json::from_str(REPORT_SCHEMA).unwrap();
        let v = jsonschema::JSONSchema::compile(&schema).unwrap();
        let rep: Value = serde_json::from_slice(&first[0]).unwrap();
        let ok = v.is_valid(&rep);
        assert!(ok, "report does not validate");
        assert_eq!(rep["runs"].as_array().unwrap().len(), 3);
        assert!(rep["slopes"].get("sup_e_rel").is_some());
    }
}
