use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::run::{BenchmarkReport, Cell, CellStatus};
use crate::error::Result;

pub const RAW_FILE: &str = "raw.json";
pub const MEANS_FILE: &str = "means.csv";
pub const TABLES_FILE: &str = "tables.md";
pub const TIMINGS_FILE: &str = "timings.json";
pub const TEST_FOLDS_FILE: &str = "test_folds.csv";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Markdown,
    Csv,
}

impl std::str::FromStr for ReportFormat {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "md" | "markdown" => Ok(Self::Markdown),
            "csv" => Ok(Self::Csv),
            other => Err(format!("unknown report format {other:?} (expected md or csv)")),
        }
    }
}

pub fn render(report: &BenchmarkReport, format: ReportFormat) -> Result<String> {
    match format {
        ReportFormat::Markdown => Ok(render_markdown(report)),
        ReportFormat::Csv => render_csv(report),
    }
}

/// Fold-level dump; deterministic for a given config and seed.
pub fn render_raw(report: &BenchmarkReport) -> Result<String> {
    Ok(serde_json::to_string_pretty(report)?)
}

pub fn load_raw(path: impl AsRef<Path>) -> Result<BenchmarkReport> {
    let mut report: BenchmarkReport = serde_json::from_str(&std::fs::read_to_string(path)?)?;
    // Summary statistics are derived data; never trust them from disk.
    report.cells.iter_mut().for_each(Cell::summarize);
    Ok(report)
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |v| v.to_string())
}

pub fn render_csv(report: &BenchmarkReport) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "dataset",
        "oversampler",
        "classifier",
        "status",
        "folds",
        "f1_mean",
        "f1_std",
        "kappa_mean",
        "kappa_std",
    ])?;
    for c in &report.cells {
        let status = match c.status {
            CellStatus::Complete => "complete",
            CellStatus::Failed => "failed",
            CellStatus::NotApplicable => "not_applicable",
        };
        w.write_record([
            c.dataset.clone(),
            c.oversampler.clone(),
            c.classifier.clone(),
            status.into(),
            c.folds.len().to_string(),
            opt(c.f1_mean),
            opt(c.f1_std),
            opt(c.kappa_mean),
            opt(c.kappa_std),
        ])?;
    }
    let bytes = w.into_inner().map_err(|e| std::io::Error::other(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn ordered_unique<'a>(items: impl Iterator<Item = &'a str>) -> Vec<&'a str> {
    let mut out: Vec<&str> = Vec::new();
    for i in items {
        if !out.contains(&i) {
            out.push(i);
        }
    }
    out
}

/// One table per classifier: datasets as rows, oversamplers as columns,
/// entries `F1 / κ` with the best mean F1 of each row in bold.
pub fn render_markdown(report: &BenchmarkReport) -> String {
    let mut out = String::from("# Benchmark results\n");
    let classifiers = ordered_unique(report.cells.iter().map(|c| c.classifier.as_str()));
    let oversamplers = ordered_unique(report.cells.iter().map(|c| c.oversampler.as_str()));
    let datasets = ordered_unique(report.cells.iter().map(|c| c.dataset.as_str()));
    for clf in classifiers {
        let _ = write!(out, "\n## {clf}\n\nMean F1 / κ over {} x {} folds.\n\n| dataset |", report.config.n_shuffles, report.config.n_folds);
        for o in &oversamplers {
            let _ = write!(out, " {o} |");
        }
        out.push_str("\n|---|");
        out.push_str(&"---|".repeat(oversamplers.len()));
        out.push('\n');
        for ds in &datasets {
            let row: Vec<Option<&Cell>> = oversamplers.iter().map(|o| report.cell(ds, o, clf)).collect();
            let best = row
                .iter()
                .filter_map(|c| c.and_then(|c| c.f1_mean))
                .fold(f64::NEG_INFINITY, f64::max);
            let _ = write!(out, "| {ds} |");
            for cell in row {
                let text = match cell {
                    None => "".to_string(),
                    Some(c) => match (c.status, c.f1_mean, c.kappa_mean) {
                        (CellStatus::Complete, Some(f1), Some(k)) => {
                            let entry = format!("{f1:.3} / {k:.3}");
                            if f1 == best {
                                format!("**{entry}**")
                            } else {
                                entry
                            }
                        }
                        (CellStatus::NotApplicable, ..) => "n/a".into(),
                        _ => "failed".into(),
                    },
                };
                let _ = write!(out, " {text} |");
            }
            out.push('\n');
        }
    }
    let failures: Vec<&Cell> = report.cells.iter().filter(|c| c.status == CellStatus::Failed).collect();
    if !failures.is_empty() {
        out.push_str("\n## Failures\n\n");
        for c in failures {
            for f in &c.failures {
                let _ = writeln!(
                    out,
                    "- {} / {} / {} (shuffle {}, fold {}): {}",
                    c.dataset, c.oversampler, c.classifier, f.shuffle, f.fold, f.message
                );
            }
        }
    }
    out
}

/// Test-fold row order, the reference for external prediction files.
pub fn render_test_folds(report: &BenchmarkReport) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["dataset", "shuffle", "fold", "position", "row_id"])?;
    for rec in &report.folds {
        for (pos, id) in rec.test_ids.iter().enumerate() {
            w.write_record([
                rec.dataset.clone(),
                rec.shuffle.to_string(),
                rec.fold.to_string(),
                pos.to_string(),
                id.to_string(),
            ])?;
        }
    }
    let bytes = w.into_inner().map_err(|e| std::io::Error::other(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Writes the raw dump, means CSV, Markdown tables, timings and the
/// test-fold order into `dir`. Returns the written paths.
pub fn emit_report(report: &BenchmarkReport, dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;
    let files = [
        (RAW_FILE, render_raw(report)?),
        (MEANS_FILE, render_csv(report)?),
        (TABLES_FILE, render_markdown(report)),
        (TIMINGS_FILE, serde_json::to_string_pretty(&report.timings)?),
        (TEST_FOLDS_FILE, render_test_folds(report)?),
    ];
    let mut written = Vec::new();
    for (name, text) in files {
        let path = dir.join(name);
        std::fs::write(&path, text)?;
        written.push(path);
    }
    Ok(written)
}
