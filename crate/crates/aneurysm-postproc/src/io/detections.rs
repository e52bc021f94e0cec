//! Detection and ground-truth documents.
//!
//! One JSON object per case: `{"case_id": ..., "detections": [...]}` where
//! each entry carries `id`, `min_voxel`, `max_voxel` (min inclusive, max
//! exclusive, in the case grid's index space) and, for model output,
//! `confidence`. Ground truth uses the identical schema minus confidence.
//! Unknown fields are preserved through a read/write cycle.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::boxes::VoxelBox;
use crate::error::{Error, Result};
use crate::eval::GroundTruthBox;
use crate::filter::Detection;
use crate::io::{atomic_write, read_bytes};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxRecord {
    pub id: String,
    pub min_voxel: [i64; 3],
    pub max_voxel: [i64; 3],
    #[serde(skip_serializing_if = "Option::is_none")]
    pub confidence: Option<f64>,
    #[serde(flatten)]
    pub extra: Map<String, Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionDoc {
    pub case_id: String,
    pub detections: Vec<BoxRecord>,
    #[serde(flatten)]
    pub extra: Map<String, Value>,
}

impl DetectionDoc {
    pub fn from_detections(case_id: &str, dets: &[Detection]) -> DetectionDoc {
        DetectionDoc {
            case_id: case_id.to_string(),
            detections: dets
                .iter()
                .map(|d| BoxRecord {
                    id: d.id.clone(),
                    min_voxel: d.bbox.min(),
                    max_voxel: d.bbox.max(),
                    confidence: Some(d.confidence),
                    extra: Map::new(),
                })
                .collect(),
            extra: Map::new(),
        }
    }

    pub fn from_ground_truth(case_id: &str, gts: &[GroundTruthBox]) -> DetectionDoc {
        DetectionDoc {
            case_id: case_id.to_string(),
            detections: gts
                .iter()
                .map(|g| BoxRecord {
                    id: g.id.clone(),
                    min_voxel: g.bbox.min(),
                    max_voxel: g.bbox.max(),
                    confidence: None,
                    extra: Map::new(),
                })
                .collect(),
            extra: Map::new(),
        }
    }

    /// Keeps only the records whose ids appear in `ids`, preserving order
    /// and any unknown fields on the surviving entries.
    pub fn retain_ids(&self, ids: &BTreeSet<String>) -> DetectionDoc {
        DetectionDoc {
            case_id: self.case_id.clone(),
            detections: self
                .detections
                .iter()
                .filter(|r| ids.contains(&r.id))
                .cloned()
                .collect(),
            extra: self.extra.clone(),
        }
    }

    fn validate(&self, require_confidence: bool) -> Result<()> {
        let mut problems = Vec::new();
        let mut seen = BTreeSet::new();
        for (i, rec) in self.detections.iter().enumerate() {
            if !seen.insert(rec.id.clone()) {
                problems.push(format!("entry {i} (id '{}'): duplicate id", rec.id));
            }
            for a in 0..3 {
                if rec.min_voxel[a] >= rec.max_voxel[a] {
                    problems.push(format!(
                        "entry {i} (id '{}'): min_voxel {:?} not strictly below max_voxel {:?} on axis {a}",
                        rec.id, rec.min_voxel, rec.max_voxel
                    ));
                    break;
                }
            }
            match rec.confidence {
                Some(c) if !(0.0..=1.0).contains(&c) || !c.is_finite() => {
                    problems.push(format!(
                        "entry {i} (id '{}'): confidence {c} outside [0, 1]",
                        rec.id
                    ));
                }
                None if require_confidence => {
                    problems.push(format!("entry {i} (id '{}'): missing confidence", rec.id));
                }
                _ => {}
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!(
                "detection document '{}' failed validation:\n  {}",
                self.case_id,
                problems.join("\n  ")
            )))
        }
    }

    pub fn to_detections(&self) -> Result<Vec<Detection>> {
        self.validate(true)?;
        self.detections
            .iter()
            .map(|r| {
                Detection::new(
                    &r.id,
                    VoxelBox::new(r.min_voxel, r.max_voxel)?,
                    r.confidence.expect("validated"),
                )
            })
            .collect()
    }

    pub fn to_ground_truth(&self) -> Result<Vec<GroundTruthBox>> {
        self.validate(false)?;
        self.detections
            .iter()
            .map(|r| GroundTruthBox::new(&r.id, VoxelBox::new(r.min_voxel, r.max_voxel)?))
            .collect()
    }
}

pub fn read_doc(path: &Path) -> Result<DetectionDoc> {
    let bytes = read_bytes(path)?;
    serde_json::from_slice(&bytes).map_err(|e| {
        Error::parse_at(path, e.column().saturating_sub(1) as u64, e.to_string())
    })
}

pub fn write_doc(path: &Path, doc: &DetectionDoc) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(doc).expect("serializable");
    bytes.push(b'\n');
    atomic_write(path, &bytes)
}
