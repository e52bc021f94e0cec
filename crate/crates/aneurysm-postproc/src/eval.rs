//! Detection-vs-ground-truth matching, counting metrics, and FP categories.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::boxes::VoxelBox;
use crate::error::{Error, Result};
use crate::filter::{Detection, OverlapProfile};
use crate::pipeline::MaskSet;

/// An annotated aneurysm box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthBox {
    pub id: String,
    #[serde(flatten)]
    pub bbox: VoxelBox,
}

impl GroundTruthBox {
    pub fn new(id: impl Into<String>, bbox: VoxelBox) -> Result<Self> {
        if bbox.is_empty() {
            return Err(Error::InvalidArgument(
                "ground-truth box must be non-empty".into(),
            ));
        }
        Ok(GroundTruthBox {
            id: id.into(),
            bbox,
        })
    }
}

/// Intersection-over-union of two non-empty voxel boxes.
pub fn box_iou(a: &VoxelBox, b: &VoxelBox) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InvalidArgument(
            "iou requires non-empty boxes".into(),
        ));
    }
    let inter = a.intersect(b).volume();
    let union = a.volume() + b.volume() - inter;
    Ok(inter as f64 / union as f64)
}

/// One matched detection / ground-truth pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchPair {
    pub detection_id: String,
    pub ground_truth_id: String,
    pub iou: f64,
}

/// Result of matching one case.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Matching {
    pub pairs: Vec<MatchPair>,
    pub fp_ids: Vec<String>,
    pub fn_ids: Vec<String>,
}

impl Matching {
    pub fn tp(&self) -> u64 {
        self.pairs.len() as u64
    }

    pub fn fp(&self) -> u64 {
        self.fp_ids.len() as u64
    }

    pub fn fn_count(&self) -> u64 {
        self.fn_ids.len() as u64
    }
}

fn check_unique(ids: impl Iterator<Item = String>, what: &str) -> Result<()> {
    let mut seen = BTreeSet::new();
    let mut dupes = BTreeSet::new();
    for id in ids {
        if !seen.insert(id.clone()) {
            dupes.insert(id);
        }
    }
    if dupes.is_empty() {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!(
            "duplicate {what} ids: {}",
            dupes.into_iter().collect::<Vec<_>>().join(", ")
        )))
    }
}

/// Matches detections to ground truth.
///
/// A pair is admissible when the detection box's center lies inside the
/// ground-truth box and their IoU is at least `iou_threshold`. Admissible
/// pairs are assigned one-to-one greedily in descending IoU order, ties
/// broken by detection id then ground-truth id. Unmatched detections become
/// FPs, unmatched ground truth FNs, both in input order.
pub fn match_detections(
    dets: &[Detection],
    gts: &[GroundTruthBox],
    iou_threshold: f64,
) -> Result<Matching> {
    if !iou_threshold.is_finite() || !(0.0..=1.0).contains(&iou_threshold) {
        return Err(Error::InvalidArgument(format!(
            "iou threshold must be in [0, 1], got {iou_threshold}"
        )));
    }
    check_unique(dets.iter().map(|d| d.id.clone()), "detection")?;
    check_unique(gts.iter().map(|g| g.id.clone()), "ground-truth")?;

    let mut candidates: Vec<(f64, usize, usize)> = Vec::new();
    for (di, d) in dets.iter().enumerate() {
        for (gi, g) in gts.iter().enumerate() {
            if !g.bbox.contains_point(d.bbox.center()) {
                continue;
            }
            let iou = box_iou(&d.bbox, &g.bbox)?;
            if iou >= iou_threshold {
                candidates.push((iou, di, gi));
            }
        }
    }
    candidates.sort_by(|a, b| {
        b.0.total_cmp(&a.0)
            .then_with(|| dets[a.1].id.cmp(&dets[b.1].id))
            .then_with(|| gts[a.2].id.cmp(&gts[b.2].id))
    });

    let mut det_taken = vec![false; dets.len()];
    let mut gt_taken = vec![false; gts.len()];
    let mut pairs = Vec::new();
    for (iou, di, gi) in candidates {
        if det_taken[di] || gt_taken[gi] {
            continue;
        }
        det_taken[di] = true;
        gt_taken[gi] = true;
        pairs.push(MatchPair {
            detection_id: dets[di].id.clone(),
            ground_truth_id: gts[gi].id.clone(),
            iou,
        });
    }

    let fp_ids = dets
        .iter()
        .zip(&det_taken)
        .filter(|(_, &taken)| !taken)
        .map(|(d, _)| d.id.clone())
        .collect();
    let fn_ids = gts
        .iter()
        .zip(&gt_taken)
        .filter(|(_, &taken)| !taken)
        .map(|(g, _)| g.id.clone())
        .collect();

    Ok(Matching {
        pairs,
        fp_ids,
        fn_ids,
    })
}

/// Aggregated counts over a set of cases.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_count: u64,
    pub n_cases: u64,
    pub fp_per_case: f64,
    pub sensitivity: f64,
    /// False when there was no ground truth at all, in which case
    /// `sensitivity` is reported as 0.
    pub sensitivity_defined: bool,
}

/// Sums per-case matchings into totals. Rounding happens only at
/// presentation time, never here.
pub fn compute_metrics(matchings: &[Matching], n_cases: u64) -> Result<Metrics> {
    if n_cases == 0 {
        return Err(Error::InvalidArgument(
            "metrics need at least one case".into(),
        ));
    }
    let tp: u64 = matchings.iter().map(Matching::tp).sum();
    let fp: u64 = matchings.iter().map(Matching::fp).sum();
    let fn_count: u64 = matchings.iter().map(Matching::fn_count).sum();
    let denominator = tp + fn_count;
    let sensitivity_defined = denominator > 0;
    Ok(Metrics {
        tp,
        fp,
        fn_count,
        n_cases,
        fp_per_case: fp as f64 / n_cases as f64,
        sensitivity: if sensitivity_defined {
            tp as f64 / denominator as f64
        } else {
            0.0
        },
        sensitivity_defined,
    })
}

/// Rounds half-up at two decimals, the presentation rule for FP/case.
pub fn round_2dp(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}

/// Rounds half-up at one decimal, the presentation rule for percentages.
pub fn round_1dp(x: f64) -> f64 {
    (x * 10.0).round() / 10.0
}

/// Percentage of FPs removed. `Ok(None)` means not applicable (no FPs at all).
pub fn reduction_percentage(removed: u64, total_fp: u64) -> Result<Option<f64>> {
    if total_fp == 0 {
        return Ok(None);
    }
    if removed > total_fp {
        return Err(Error::InvalidArgument(format!(
            "removed count {removed} exceeds total FP count {total_fp}"
        )));
    }
    Ok(Some(100.0 * removed as f64 / total_fp as f64))
}

/// Coarse anatomic category of a false positive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FpCategory {
    Extracranial,
    Venous,
    Cvs,
    Arterial,
    Nonvascular,
}

impl FpCategory {
    pub const ALL: [FpCategory; 5] = [
        FpCategory::Extracranial,
        FpCategory::Venous,
        FpCategory::Cvs,
        FpCategory::Arterial,
        FpCategory::Nonvascular,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            FpCategory::Extracranial => "extracranial",
            FpCategory::Venous => "venous",
            FpCategory::Cvs => "cvs",
            FpCategory::Arterial => "arterial",
            FpCategory::Nonvascular => "nonvascular",
        }
    }

    /// Priority rules over an overlap profile: outside the brain first, then
    /// CVS dominance, then vein-over-artery, then any artery, else tissue.
    pub fn from_profile(p: &OverlapProfile) -> FpCategory {
        if p.brain == 0 {
            FpCategory::Extracranial
        } else if p.cvs >= 1 && p.cvs >= p.vein.max(p.artery) {
            FpCategory::Cvs
        } else if p.vein > p.artery {
            FpCategory::Venous
        } else if p.artery >= 1 {
            FpCategory::Arterial
        } else {
            FpCategory::Nonvascular
        }
    }
}

/// Categorizes one box against a mask set.
pub fn categorize_fp(bbox: &VoxelBox, masks: &MaskSet) -> FpCategory {
    FpCategory::from_profile(&crate::filter::overlap_profile(bbox, masks))
}
