//! Confidence thresholding and the five overlap-filtering methods.
//!
//! Every detection box gets an overlap profile against the mask set; a method
//! turns that profile into a keep/remove decision with a machine-readable
//! reason. Method 1 removes boxes with no brain overlap, method 2 boxes that
//! touch the (CVS-subtracted) vein mask, method 3 boxes overlapping vein more
//! than artery, and methods 4 and 5 are the unions 1+2 and 1+3.

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::boxes::VoxelBox;
use crate::error::{Error, Result};
use crate::pipeline::MaskSet;

/// One model output box with its confidence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub id: String,
    #[serde(flatten)]
    pub bbox: VoxelBox,
    pub confidence: f64,
}

impl Detection {
    pub fn new(id: impl Into<String>, bbox: VoxelBox, confidence: f64) -> Result<Self> {
        if bbox.is_empty() {
            return Err(Error::InvalidArgument(
                "detection box must be non-empty".into(),
            ));
        }
        if !confidence.is_finite() || !(0.0..=1.0).contains(&confidence) {
            return Err(Error::InvalidArgument(format!(
                "detection confidence must be in [0, 1], got {confidence}"
            )));
        }
        Ok(Detection {
            id: id.into(),
            bbox,
            confidence,
        })
    }
}

/// Voxel overlap counts of one box against each mask, plus the box volume
/// clipped to the grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OverlapProfile {
    pub brain: u64,
    pub artery: u64,
    pub vein: u64,
    pub cvs: u64,
    pub box_volume: u64,
}

/// The five post-processing methods.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Method {
    M1,
    M2,
    M3,
    M4,
    M5,
}

impl Method {
    pub const ALL: [Method; 5] = [Method::M1, Method::M2, Method::M3, Method::M4, Method::M5];

    pub fn number(&self) -> u8 {
        match self {
            Method::M1 => 1,
            Method::M2 => 2,
            Method::M3 => 3,
            Method::M4 => 4,
            Method::M5 => 5,
        }
    }

    pub fn from_number(n: u8) -> Result<Method> {
        match n {
            1 => Ok(Method::M1),
            2 => Ok(Method::M2),
            3 => Ok(Method::M3),
            4 => Ok(Method::M4),
            5 => Ok(Method::M5),
            _ => Err(Error::InvalidArgument(format!(
                "method must be 1..=5, got {n}"
            ))),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "M{}", self.number())
    }
}

/// Filtering knobs beyond the method choice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterParams {
    /// Minimum vein-overlap voxel count that triggers method 2's "any
    /// overlap" rule. The stated rule is any overlap at all, i.e. 1.
    pub m2_min_voxels: u64,
}

impl Default for FilterParams {
    fn default() -> Self {
        FilterParams { m2_min_voxels: 1 }
    }
}

/// Keeps detections with confidence at or above `tau`, preserving order.
pub fn threshold_detections(dets: &[Detection], tau: f64) -> Result<Vec<Detection>> {
    if !tau.is_finite() || !(0.0..=1.0).contains(&tau) {
        return Err(Error::InvalidArgument(format!(
            "confidence threshold must be in [0, 1], got {tau}"
        )));
    }
    Ok(dets
        .iter()
        .filter(|d| d.confidence >= tau)
        .cloned()
        .collect())
}

/// Counts a box against every mask in the set.
pub fn overlap_profile(bbox: &VoxelBox, masks: &MaskSet) -> OverlapProfile {
    let clipped = bbox.clip_to_dims(masks.geometry().dims());
    OverlapProfile {
        brain: masks.brain.box_overlap(bbox),
        artery: masks.artery.box_overlap(bbox),
        vein: masks.vein_final.box_overlap(bbox),
        cvs: masks.cvs.box_overlap(bbox),
        box_volume: clipped.volume(),
    }
}

/// Applies one method's rule to a profile. Returns whether the box is removed
/// and, if so, a reason naming the triggering sub-rule(s).
pub fn decide_removal(
    p: &OverlapProfile,
    method: Method,
    params: &FilterParams,
) -> (bool, Option<String>) {
    let brain_rule = p.brain == 0;
    let vein_any_rule = p.vein >= params.m2_min_voxels.max(1);
    let vein_gt_artery_rule = p.vein > p.artery;

    let mut parts: Vec<String> = Vec::new();
    match method {
        Method::M1 => {
            if brain_rule {
                parts.push("brain_overlap=0".into());
            }
        }
        Method::M2 => {
            if vein_any_rule {
                parts.push(format!("vein_overlap={}", p.vein));
            }
        }
        Method::M3 => {
            if vein_gt_artery_rule {
                parts.push(format!("vein_overlap={}>artery_overlap={}", p.vein, p.artery));
            }
        }
        Method::M4 => {
            if brain_rule {
                parts.push("brain_overlap=0".into());
            }
            if vein_any_rule {
                parts.push(format!("vein_overlap={}", p.vein));
            }
        }
        Method::M5 => {
            if brain_rule {
                parts.push("brain_overlap=0".into());
            }
            if vein_gt_artery_rule {
                parts.push(format!("vein_overlap={}>artery_overlap={}", p.vein, p.artery));
            }
        }
    }
    if parts.is_empty() {
        (false, None)
    } else {
        (true, Some(format!("{method}:{}", parts.join(";"))))
    }
}

/// Outcome for one input detection.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterRecord {
    pub detection: Detection,
    pub profile: OverlapProfile,
    pub removed: bool,
    pub reason: Option<String>,
}

/// Partition of an input detection list into kept and removed, in input order.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterResult {
    records: Vec<FilterRecord>,
}

impl FilterResult {
    pub fn records(&self) -> &[FilterRecord] {
        &self.records
    }

    pub fn kept(&self) -> impl Iterator<Item = &Detection> {
        self.records
            .iter()
            .filter(|r| !r.removed)
            .map(|r| &r.detection)
    }

    pub fn removed(&self) -> impl Iterator<Item = &FilterRecord> {
        self.records.iter().filter(|r| r.removed)
    }

    pub fn kept_detections(&self) -> Vec<Detection> {
        self.kept().cloned().collect()
    }

    pub fn removed_ids(&self) -> Vec<String> {
        self.removed().map(|r| r.detection.id.clone()).collect()
    }

    pub fn kept_count(&self) -> usize {
        self.records.iter().filter(|r| !r.removed).count()
    }

    pub fn removed_count(&self) -> usize {
        self.records.len() - self.kept_count()
    }
}

/// One line of the removal log: everything needed to audit (and replay) a
/// single keep/remove decision.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRecord {
    pub case_id: String,
    pub detection_id: String,
    pub method: Method,
    pub removed: bool,
    pub reason: Option<String>,
    pub profile: OverlapProfile,
}

impl FilterResult {
    /// Flattens the result into removal-log records, one per input detection.
    pub fn log_records(&self, case_id: &str, method: Method) -> Vec<LogRecord> {
        self.records
            .iter()
            .map(|r| LogRecord {
                case_id: case_id.to_string(),
                detection_id: r.detection.id.clone(),
                method,
                removed: r.removed,
                reason: r.reason.clone(),
                profile: r.profile,
            })
            .collect()
    }
}

/// Runs one method over a detection list. Profiles are computed per detection
/// in parallel; output order is input order.
pub fn apply_method(
    dets: &[Detection],
    masks: &MaskSet,
    method: Method,
    params: &FilterParams,
) -> FilterResult {
    let records = dets
        .par_iter()
        .map(|d| {
            let profile = overlap_profile(&d.bbox, masks);
            let (removed, reason) = decide_removal(&profile, method, params);
            FilterRecord {
                detection: d.clone(),
                profile,
                removed,
                reason,
            }
        })
        .collect();
    FilterResult { records }
}
