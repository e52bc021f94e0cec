//! Removal logs, metrics files, and report tables.
//!
//! The removal log is line-delimited JSON with one record per input
//! detection. Metrics and reports are written as JSON or CSV depending on the
//! requested extension; the report also renders as fixed-width text for the
//! terminal.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::eval::{round_1dp, round_2dp, FpCategory, Metrics};
use crate::filter::LogRecord;
use crate::io::{atomic_write, read_to_string};
use crate::report::Report;

pub fn write_log(path: &Path, records: &[LogRecord]) -> Result<()> {
    let mut out = String::new();
    for rec in records {
        out.push_str(&serde_json::to_string(rec).expect("serializable"));
        out.push('\n');
    }
    atomic_write(path, out.as_bytes())
}

pub fn read_log(path: &Path) -> Result<Vec<LogRecord>> {
    let text = read_to_string(path)?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, line)| {
            serde_json::from_str(line)
                .map_err(|e| Error::parse(path, format!("log line {}: {e}", i + 1)))
        })
        .collect()
}

/// Writes metrics as JSON or CSV depending on the file extension.
pub fn write_metrics(path: &Path, metrics: &Metrics) -> Result<()> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("csv") => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record([
                "tp",
                "fp",
                "fn",
                "n_cases",
                "fp_per_case",
                "sensitivity",
                "sensitivity_defined",
            ])
            .expect("in-memory writer");
            w.write_record([
                metrics.tp.to_string(),
                metrics.fp.to_string(),
                metrics.fn_count.to_string(),
                metrics.n_cases.to_string(),
                format!("{:.2}", round_2dp(metrics.fp_per_case)),
                format!("{:.4}", metrics.sensitivity),
                metrics.sensitivity_defined.to_string(),
            ])
            .expect("in-memory writer");
            let bytes = w.into_inner().expect("in-memory writer");
            atomic_write(path, &bytes)
        }
        _ => {
            let mut bytes = serde_json::to_vec_pretty(metrics).expect("serializable");
            bytes.push(b'\n');
            atomic_write(path, &bytes)
        }
    }
}

pub fn write_report_json(path: &Path, report: &Report) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(report).expect("serializable");
    bytes.push(b'\n');
    atomic_write(path, &bytes)
}

/// Detection-count grid: rows TP / FP / FP-per-case / FN, one column per
/// method plus the unfiltered baseline.
pub fn detection_table_csv(report: &Report) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["row".to_string(), "none".to_string()];
    header.extend(report.methods.iter().map(|m| m.method.to_string()));
    w.write_record(&header).expect("in-memory writer");

    type CellFn = fn(&crate::report::ColumnCounts) -> String;
    let rows: [(&str, CellFn); 4] = [
        ("tp", |c| c.tp.to_string()),
        ("fp", |c| c.fp.to_string()),
        ("fp_per_case", |c| format!("{:.2}", round_2dp(c.fp_per_case))),
        ("fn", |c| c.fn_count.to_string()),
    ];
    for (name, getter) in &rows {
        let mut record = vec![name.to_string(), getter(&report.baseline)];
        record.extend(report.methods.iter().map(|m| getter(&m.counts)));
        w.write_record(&record).expect("in-memory writer");
    }
    String::from_utf8(w.into_inner().expect("in-memory writer")).expect("utf8")
}

/// Category grid: all FPs per anatomic category and how many each method
/// removed, with intracranial/extracranial subtotals.
pub fn category_table_csv(report: &Report) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["category".to_string(), "all_fps".to_string()];
    header.extend(
        report
            .methods
            .iter()
            .map(|m| format!("removed_{}", m.method)),
    );
    w.write_record(&header).expect("in-memory writer");

    for cat in FpCategory::ALL {
        let mut rec = vec![
            cat.name().to_string(),
            report.baseline_fp_by_category[&cat].to_string(),
        ];
        rec.extend(
            report
                .methods
                .iter()
                .map(|m| m.removed_fp_by_category[&cat].to_string()),
        );
        w.write_record(&rec).expect("in-memory writer");
    }

    let intracranial = |by_cat: &std::collections::BTreeMap<FpCategory, u64>| -> u64 {
        by_cat
            .iter()
            .filter(|(c, _)| **c != FpCategory::Extracranial)
            .map(|(_, n)| n)
            .sum()
    };
    let mut rec = vec![
        "intracranial_subtotal".to_string(),
        intracranial(&report.baseline_fp_by_category).to_string(),
    ];
    rec.extend(
        report
            .methods
            .iter()
            .map(|m| intracranial(&m.removed_fp_by_category).to_string()),
    );
    w.write_record(&rec).expect("in-memory writer");

    let mut rec = vec![
        "extracranial_subtotal".to_string(),
        report.extracranial_fp_total().to_string(),
    ];
    rec.extend(
        report
            .methods
            .iter()
            .map(|m| m.removed_fp_by_category[&FpCategory::Extracranial].to_string()),
    );
    w.write_record(&rec).expect("in-memory writer");

    let mut rec = vec!["total".to_string(), report.baseline.fp.to_string()];
    rec.extend(
        report
            .methods
            .iter()
            .map(|m| m.removed_fp_total.to_string()),
    );
    w.write_record(&rec).expect("in-memory writer");

    String::from_utf8(w.into_inner().expect("in-memory writer")).expect("utf8")
}

/// Fixed-width text rendering of both grids plus the removal summary.
pub fn render_report(report: &Report) -> String {
    let mut out = String::new();
    let cols: Vec<String> = std::iter::once("none".to_string())
        .chain(report.methods.iter().map(|m| m.method.to_string()))
        .collect();

    let _ = writeln!(
        out,
        "detections over {} case(s), {} ground-truth boxes",
        report.n_cases, report.total_gt
    );
    let _ = write!(out, "{:<14}", "");
    for c in &cols {
        let _ = write!(out, "{c:>12}");
    }
    out.push('\n');

    let all_counts: Vec<&crate::report::ColumnCounts> = std::iter::once(&report.baseline)
        .chain(report.methods.iter().map(|m| &m.counts))
        .collect();
    let _ = write!(out, "{:<14}", "TP");
    for c in &all_counts {
        let _ = write!(out, "{:>12}", c.tp);
    }
    out.push('\n');
    let _ = write!(out, "{:<14}", "FP (FP/case)");
    for c in &all_counts {
        let cell = format!("{} ({:.2})", c.fp, round_2dp(c.fp_per_case));
        let _ = write!(out, "{cell:>12}");
    }
    out.push('\n');
    let _ = write!(out, "{:<14}", "FN");
    for c in &all_counts {
        let _ = write!(out, "{:>12}", c.fn_count);
    }
    out.push('\n');

    let _ = write!(out, "{:<14}", "removed FP");
    let _ = write!(out, "{:>12}", "-");
    for m in &report.methods {
        let _ = write!(out, "{:>12}", m.removed_fp_total);
    }
    out.push('\n');
    let _ = write!(out, "{:<14}", "reduction %");
    let _ = write!(out, "{:>12}", "-");
    for m in &report.methods {
        let cell = match m.reduction_pct {
            Some(p) => format!("{:.1}", round_1dp(p)),
            None => "n/a".to_string(),
        };
        let _ = write!(out, "{cell:>12}");
    }
    out.push('\n');

    let _ = writeln!(out, "\nfalse positives by category (all / removed per method)");
    for cat in FpCategory::ALL {
        let _ = write!(
            out,
            "{:<14}{:>12}",
            cat.name(),
            report.baseline_fp_by_category[&cat]
        );
        for m in &report.methods {
            let _ = write!(out, "{:>12}", m.removed_fp_by_category[&cat]);
        }
        out.push('\n');
    }
    let _ = writeln!(
        out,
        "intracranial {} / extracranial {} of {} FPs",
        report.intracranial_fp_total(),
        report.extracranial_fp_total(),
        report.baseline.fp
    );
    match (
        report.extracranial_pct_of_total,
        report.extracranial_pct_of_intracranial,
    ) {
        (Some(t), Some(i)) => {
            let _ = writeln!(
                out,
                "extracranial share: {:.1}% of all FPs ({:.1}% of intracranial count)",
                round_1dp(t),
                round_1dp(i)
            );
        }
        (Some(t), None) => {
            let _ = writeln!(out, "extracranial share: {:.1}% of all FPs", round_1dp(t));
        }
        _ => {}
    }
    if !report.consistency_failures.is_empty() {
        let _ = writeln!(out, "\nconsistency checks FAILED:");
        for f in &report.consistency_failures {
            let _ = writeln!(out, "  - {f}");
        }
    }
    out
}
