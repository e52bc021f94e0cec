//! Aggregated result tables across cases and methods.
//!
//! The report has two faces: a detection-count grid (TP / FP with FP-per-case
//! / FN, one column per method plus an unfiltered baseline) and a category
//! grid (false positives by anatomic category, overall and removed per
//! method, with intracranial/extracranial subtotals). Internal consistency
//! between the two is checked and any violations are recorded on the report
//! rather than silently dropped.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::{
    compute_metrics, match_detections, reduction_percentage, FpCategory, GroundTruthBox, Matching,
};
use crate::filter::{Detection, LogRecord, Method};

/// One method's inputs for one case.
#[derive(Debug, Clone)]
pub struct MethodRun {
    /// Detections that survived the method's filter.
    pub kept: Vec<Detection>,
    /// Full per-detection log of the filter run (kept and removed).
    pub log: Vec<LogRecord>,
}

/// Everything one case contributes to a report.
#[derive(Debug, Clone)]
pub struct CaseRunData {
    pub case_id: String,
    pub truth: Vec<GroundTruthBox>,
    /// Thresholded but unfiltered detections (the "none" column).
    pub baseline: Vec<Detection>,
    pub methods: BTreeMap<Method, MethodRun>,
}

/// Counts for one column of the detection grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ColumnCounts {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_count: u64,
    pub fp_per_case: f64,
    pub sensitivity: f64,
}

/// Per-method removal accounting for the category grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodOutcome {
    pub method: Method,
    pub counts: ColumnCounts,
    pub removed_fp_by_category: BTreeMap<FpCategory, u64>,
    pub removed_fp_total: u64,
    /// Percentage of baseline FPs this method removed; None when there were
    /// no baseline FPs to remove.
    pub reduction_pct: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub n_cases: u64,
    pub total_gt: u64,
    pub baseline: ColumnCounts,
    pub baseline_fp_by_category: BTreeMap<FpCategory, u64>,
    pub methods: Vec<MethodOutcome>,
    /// Extracranial FPs as a percentage of all FPs.
    pub extracranial_pct_of_total: Option<f64>,
    /// Extracranial FPs as a percentage of intracranial FPs. Reported
    /// alongside the total-based figure because both denominators appear in
    /// the wild; readers can pick.
    pub extracranial_pct_of_intracranial: Option<f64>,
    /// Human-readable internal-consistency violations; empty on a clean run.
    pub consistency_failures: Vec<String>,
}

impl Report {
    pub fn intracranial_fp_total(&self) -> u64 {
        self.baseline_fp_by_category
            .iter()
            .filter(|(c, _)| **c != FpCategory::Extracranial)
            .map(|(_, n)| n)
            .sum()
    }

    pub fn extracranial_fp_total(&self) -> u64 {
        *self
            .baseline_fp_by_category
            .get(&FpCategory::Extracranial)
            .unwrap_or(&0)
    }
}

fn category_zeroes() -> BTreeMap<FpCategory, u64> {
    FpCategory::ALL.iter().map(|c| (*c, 0)).collect()
}

/// Builds the aggregated report.
///
/// Every case must carry the same set of methods, and each method's log must
/// cover exactly the case's baseline detections; anything else is an
/// inconsistent run layout and rejected.
pub fn build_report(cases: &[CaseRunData], iou_threshold: f64) -> Result<Report> {
    if cases.is_empty() {
        return Err(Error::InvalidInput("report needs at least one case".into()));
    }
    let mut seen_cases = BTreeSet::new();
    for c in cases {
        if !seen_cases.insert(c.case_id.clone()) {
            return Err(Error::InvalidInput(format!(
                "duplicate case id {} across runs",
                c.case_id
            )));
        }
    }
    let method_set: Vec<Method> = cases[0].methods.keys().copied().collect();
    if method_set.is_empty() {
        return Err(Error::InvalidInput(
            "report needs at least one filtered method per case".into(),
        ));
    }
    for c in cases {
        let this: Vec<Method> = c.methods.keys().copied().collect();
        if this != method_set {
            return Err(Error::InvalidInput(format!(
                "case {} carries methods {:?} but {} carries {:?}",
                cases[0].case_id, method_set, c.case_id, this
            )));
        }
    }

    let n_cases = cases.len() as u64;
    let mut baseline_matchings: Vec<Matching> = Vec::with_capacity(cases.len());
    // per case: baseline FP id -> category (from the logged profiles)
    let mut fp_categories: Vec<BTreeMap<String, FpCategory>> = Vec::with_capacity(cases.len());

    for c in cases {
        let matching = match_detections(&c.baseline, &c.truth, iou_threshold)?;
        let baseline_ids: BTreeSet<&str> = c.baseline.iter().map(|d| d.id.as_str()).collect();
        let mut categories = BTreeMap::new();

        for (method, run) in &c.methods {
            let log_ids: BTreeSet<&str> =
                run.log.iter().map(|r| r.detection_id.as_str()).collect();
            if log_ids != baseline_ids {
                return Err(Error::InvalidInput(format!(
                    "case {}: {method} log does not cover exactly the baseline detections",
                    c.case_id
                )));
            }
        }
        // profiles are method-independent; read them off the first method's log
        let first = &c.methods[&method_set[0]];
        for record in &first.log {
            categories.insert(
                record.detection_id.clone(),
                FpCategory::from_profile(&record.profile),
            );
        }
        fp_categories.push(
            matching
                .fp_ids
                .iter()
                .map(|id| (id.clone(), categories[id]))
                .collect(),
        );
        baseline_matchings.push(matching);
    }

    let baseline_metrics = compute_metrics(&baseline_matchings, n_cases)?;
    let total_gt: u64 = cases.iter().map(|c| c.truth.len() as u64).sum();

    let mut baseline_fp_by_category = category_zeroes();
    for per_case in &fp_categories {
        for cat in per_case.values() {
            *baseline_fp_by_category.get_mut(cat).unwrap() += 1;
        }
    }

    let mut consistency_failures = Vec::new();
    if baseline_metrics.tp + baseline_metrics.fn_count != total_gt {
        consistency_failures.push(format!(
            "baseline: TP {} + FN {} != ground-truth total {}",
            baseline_metrics.tp, baseline_metrics.fn_count, total_gt
        ));
    }

    let mut methods = Vec::new();
    for method in &method_set {
        let mut matchings = Vec::with_capacity(cases.len());
        let mut removed_by_cat = category_zeroes();
        let mut remaining_by_cat = category_zeroes();

        for (ci, c) in cases.iter().enumerate() {
            let run = &c.methods[method];
            let matching = match_detections(&run.kept, &c.truth, iou_threshold)?;

            let removed_ids: BTreeSet<&str> = run
                .log
                .iter()
                .filter(|r| r.removed)
                .map(|r| r.detection_id.as_str())
                .collect();
            for (fp_id, cat) in &fp_categories[ci] {
                if removed_ids.contains(fp_id.as_str()) {
                    *removed_by_cat.get_mut(cat).unwrap() += 1;
                }
            }
            for fp_id in &matching.fp_ids {
                match fp_categories[ci].get(fp_id) {
                    Some(cat) => *remaining_by_cat.get_mut(cat).unwrap() += 1,
                    None => consistency_failures.push(format!(
                        "case {}: {method} FP {} was not a baseline FP",
                        c.case_id, fp_id
                    )),
                }
            }
            matchings.push(matching);
        }

        let metrics = compute_metrics(&matchings, n_cases)?;
        let removed_fp_total: u64 = removed_by_cat.values().sum();

        if metrics.tp + metrics.fn_count != total_gt {
            consistency_failures.push(format!(
                "{method}: TP {} + FN {} != ground-truth total {}",
                metrics.tp, metrics.fn_count, total_gt
            ));
        }
        if baseline_metrics.fp != metrics.fp + removed_fp_total {
            consistency_failures.push(format!(
                "{method}: baseline FP {} != remaining FP {} + removed {}",
                baseline_metrics.fp, metrics.fp, removed_fp_total
            ));
        }
        for cat in FpCategory::ALL {
            let all = baseline_fp_by_category[&cat];
            let removed = removed_by_cat[&cat];
            let remaining = remaining_by_cat[&cat];
            if all != removed + remaining {
                consistency_failures.push(format!(
                    "{method}/{}: baseline {} != removed {} + remaining {}",
                    cat.name(),
                    all,
                    removed,
                    remaining
                ));
            }
        }

        methods.push(MethodOutcome {
            method: *method,
            counts: ColumnCounts {
                tp: metrics.tp,
                fp: metrics.fp,
                fn_count: metrics.fn_count,
                fp_per_case: metrics.fp_per_case,
                sensitivity: metrics.sensitivity,
            },
            removed_fp_by_category: removed_by_cat,
            removed_fp_total,
            reduction_pct: reduction_percentage(removed_fp_total, baseline_metrics.fp)?,
        });
    }

    let extracranial = *baseline_fp_by_category
        .get(&FpCategory::Extracranial)
        .unwrap_or(&0);
    let intracranial = baseline_metrics.fp - extracranial;
    let extracranial_pct_of_total = if baseline_metrics.fp > 0 {
        Some(100.0 * extracranial as f64 / baseline_metrics.fp as f64)
    } else {
        None
    };
    let extracranial_pct_of_intracranial = if intracranial > 0 {
        Some(100.0 * extracranial as f64 / intracranial as f64)
    } else {
        None
    };

    Ok(Report {
        n_cases,
        total_gt,
        baseline: ColumnCounts {
            tp: baseline_metrics.tp,
            fp: baseline_metrics.fp,
            fn_count: baseline_metrics.fn_count,
            fp_per_case: baseline_metrics.fp_per_case,
            sensitivity: baseline_metrics.sensitivity,
        },
        baseline_fp_by_category,
        methods,
        extracranial_pct_of_total,
        extracranial_pct_of_intracranial,
        consistency_failures,
    })
}
