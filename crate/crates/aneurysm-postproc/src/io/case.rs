//! On-disk layout of cases, derived-mask directories, and report run
//! directories.
//!
//! A case directory is named after its case id and contains:
//!
//! ```text
//! <case>/
//!   brain_seg.nii.gz   artery.nii.gz   vein.nii.gz
//!   transform.txt      detections.json [truth.json]
//!   [template_cvs.json] [planted_labels.json]        (phantom extras)
//! ```
//!
//! `build-masks` writes a masks directory (`brain.nii.gz`, `vein_final.nii.gz`,
//! `cvs.nii.gz`, `cvs_region_box.json`); `filter` and `evaluate` produce the
//! per-case run layout `report` consumes (`truth.json`, `none.json`,
//! `method<N>.json`, `log_method<N>.jsonl`).

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::affine::Affine4;
use crate::boxes::{VoxelBox, WorldBox};
use crate::error::{Error, Result};
use crate::filter::Method;
use crate::grid::BinaryMask;
use crate::io::{affine_io, atomic_write, detections, nifti, read_bytes};
use crate::phantom::{PhantomCase, PlantedKind};
use crate::pipeline::MaskSet;
use crate::report::{CaseRunData, MethodRun};

pub const BRAIN_SEG_FILE: &str = "brain_seg.nii.gz";
pub const ARTERY_FILE: &str = "artery.nii.gz";
pub const VEIN_FILE: &str = "vein.nii.gz";
pub const TRANSFORM_FILE: &str = "transform.txt";
pub const DETECTIONS_FILE: &str = "detections.json";
pub const TRUTH_FILE: &str = "truth.json";
pub const TEMPLATE_CVS_FILE: &str = "template_cvs.json";
pub const PLANTED_LABELS_FILE: &str = "planted_labels.json";

pub const BRAIN_MASK_FILE: &str = "brain.nii.gz";
pub const VEIN_FINAL_MASK_FILE: &str = "vein_final.nii.gz";
pub const CVS_MASK_FILE: &str = "cvs.nii.gz";
pub const CVS_REGION_BOX_FILE: &str = "cvs_region_box.json";

pub const BASELINE_RUN_FILE: &str = "none.json";

pub fn method_run_file(m: Method) -> String {
    format!("method{}.json", m.number())
}

pub fn method_log_file(m: Method) -> String {
    format!("log_method{}.jsonl", m.number())
}

/// Handle to a case directory; file presence is checked at open time, the
/// volumes are loaded on demand.
#[derive(Debug, Clone)]
pub struct CaseDirectory {
    pub case_id: String,
    pub root: PathBuf,
}

impl CaseDirectory {
    pub fn open(root: &Path) -> Result<CaseDirectory> {
        let case_id = root
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .ok_or_else(|| {
                Error::InvalidInput(format!("{} has no directory name", root.display()))
            })?;
        for required in [BRAIN_SEG_FILE, ARTERY_FILE, VEIN_FILE, TRANSFORM_FILE] {
            let p = root.join(required);
            if !p.is_file() {
                return Err(Error::InvalidInput(format!(
                    "case directory {} is missing {required}",
                    root.display()
                )));
            }
        }
        Ok(CaseDirectory {
            case_id,
            root: root.to_path_buf(),
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    /// Loads the three segmentation masks and checks they share one grid.
    pub fn load_masks(&self) -> Result<(BinaryMask, BinaryMask, BinaryMask)> {
        let brain_seg = nifti::read_mask(&self.path(BRAIN_SEG_FILE))?;
        let artery = nifti::read_mask(&self.path(ARTERY_FILE))?;
        let vein = nifti::read_mask(&self.path(VEIN_FILE))?;
        brain_seg.geometry().check_same(artery.geometry())?;
        brain_seg.geometry().check_same(vein.geometry())?;
        Ok((brain_seg, artery, vein))
    }

    pub fn load_transform(&self) -> Result<Affine4> {
        affine_io::read_affine(&self.path(TRANSFORM_FILE))
    }

    /// Loads the detection document and checks its case id matches the
    /// directory name.
    pub fn load_detections(&self) -> Result<detections::DetectionDoc> {
        let doc = detections::read_doc(&self.path(DETECTIONS_FILE))?;
        if doc.case_id != self.case_id {
            return Err(Error::InvalidInput(format!(
                "detections file says case '{}' but the directory is named '{}'",
                doc.case_id, self.case_id
            )));
        }
        Ok(doc)
    }

    pub fn load_truth(&self) -> Result<detections::DetectionDoc> {
        detections::read_doc(&self.path(TRUTH_FILE))
    }
}

pub fn read_world_box(path: &Path) -> Result<WorldBox> {
    let bytes = read_bytes(path)?;
    let parsed: WorldBox =
        serde_json::from_slice(&bytes).map_err(|e| Error::parse(path, e.to_string()))?;
    // re-validate: serde bypasses the ordering check
    WorldBox::new(parsed.min_mm(), parsed.max_mm())
        .map_err(|e| Error::parse(path, e.to_string()))
}

pub fn write_world_box(path: &Path, b: &WorldBox) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(b).expect("serializable");
    bytes.push(b'\n');
    atomic_write(path, &bytes)
}

pub fn read_voxel_box(path: &Path) -> Result<VoxelBox> {
    let bytes = read_bytes(path)?;
    let parsed: VoxelBox =
        serde_json::from_slice(&bytes).map_err(|e| Error::parse(path, e.to_string()))?;
    Ok(VoxelBox::new_or_empty(parsed.min(), parsed.max()))
}

pub fn write_voxel_box(path: &Path, b: &VoxelBox) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(b).expect("serializable");
    bytes.push(b'\n');
    atomic_write(path, &bytes)
}

/// Writes the derived masks plus the region-box record into `dir`.
pub fn write_mask_set(dir: &Path, masks: &MaskSet) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    nifti::write_mask(&dir.join(BRAIN_MASK_FILE), &masks.brain)?;
    nifti::write_mask(&dir.join(VEIN_FINAL_MASK_FILE), &masks.vein_final)?;
    nifti::write_mask(&dir.join(CVS_MASK_FILE), &masks.cvs)?;
    write_voxel_box(&dir.join(CVS_REGION_BOX_FILE), &masks.cvs_region_box)
}

/// Loads a mask set back: derived masks from `masks_dir`, the artery mask
/// from the case directory.
pub fn load_mask_set(case: &CaseDirectory, masks_dir: &Path) -> Result<MaskSet> {
    let brain = nifti::read_mask(&masks_dir.join(BRAIN_MASK_FILE))?;
    let vein_final = nifti::read_mask(&masks_dir.join(VEIN_FINAL_MASK_FILE))?;
    let cvs = nifti::read_mask(&masks_dir.join(CVS_MASK_FILE))?;
    let artery = nifti::read_mask(&case.path(ARTERY_FILE))?;
    let cvs_region_box = read_voxel_box(&masks_dir.join(CVS_REGION_BOX_FILE))?;
    brain.geometry().check_same(artery.geometry())?;
    brain.geometry().check_same(vein_final.geometry())?;
    brain.geometry().check_same(cvs.geometry())?;
    Ok(MaskSet {
        brain,
        artery,
        vein_final,
        cvs,
        cvs_region_box,
    })
}

/// Writes a generated phantom as a standard case directory. The directory
/// name becomes the case id.
pub fn write_phantom_case(dir: &Path, case: &PhantomCase) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let case_id = dir
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .ok_or_else(|| Error::InvalidInput(format!("{} has no directory name", dir.display())))?;

    nifti::write_mask(&dir.join(BRAIN_SEG_FILE), &case.brain_seg)?;
    nifti::write_mask(&dir.join(ARTERY_FILE), &case.artery)?;
    nifti::write_mask(&dir.join(VEIN_FILE), &case.vein)?;
    affine_io::write_affine(&dir.join(TRANSFORM_FILE), &case.transform)?;

    let det_doc = detections::DetectionDoc::from_detections(&case_id, &case.detections);
    detections::write_doc(&dir.join(DETECTIONS_FILE), &det_doc)?;
    let truth_doc = detections::DetectionDoc::from_ground_truth(&case_id, &case.ground_truth);
    detections::write_doc(&dir.join(TRUTH_FILE), &truth_doc)?;
    write_world_box(&dir.join(TEMPLATE_CVS_FILE), &case.template_cvs_box)?;

    let mut labels = serde_json::to_vec_pretty(&case.planted_labels).expect("serializable");
    labels.push(b'\n');
    atomic_write(&dir.join(PLANTED_LABELS_FILE), &labels)
}

pub fn read_planted_labels(path: &Path) -> Result<BTreeMap<String, PlantedKind>> {
    let bytes = read_bytes(path)?;
    serde_json::from_slice(&bytes).map_err(|e| Error::parse(path, e.to_string()))
}

/// Loads one report run directory: baseline, truth, and every
/// `method<N>.json` / `log_method<N>.jsonl` pair present.
pub fn load_run_dir(dir: &Path) -> Result<CaseRunData> {
    let truth = detections::read_doc(&dir.join(TRUTH_FILE))?;
    let baseline_doc = detections::read_doc(&dir.join(BASELINE_RUN_FILE))?;
    if truth.case_id != baseline_doc.case_id {
        return Err(Error::InvalidInput(format!(
            "{}: truth is for case '{}' but baseline is for '{}'",
            dir.display(),
            truth.case_id,
            baseline_doc.case_id
        )));
    }

    let mut methods = BTreeMap::new();
    for m in Method::ALL {
        let kept_path = dir.join(method_run_file(m));
        let log_path = dir.join(method_log_file(m));
        if !kept_path.is_file() {
            continue;
        }
        let kept_doc = detections::read_doc(&kept_path)?;
        if kept_doc.case_id != baseline_doc.case_id {
            return Err(Error::InvalidInput(format!(
                "{}: {m} output is for case '{}' but baseline is for '{}'",
                dir.display(),
                kept_doc.case_id,
                baseline_doc.case_id
            )));
        }
        let log = crate::io::tables::read_log(&log_path)?;
        methods.insert(
            m,
            MethodRun {
                kept: kept_doc.to_detections()?,
                log,
            },
        );
    }
    if methods.is_empty() {
        return Err(Error::InvalidInput(format!(
            "{} contains no method outputs",
            dir.display()
        )));
    }

    Ok(CaseRunData {
        case_id: baseline_doc.case_id.clone(),
        truth: truth.to_ground_truth()?,
        baseline: baseline_doc.to_detections()?,
        methods,
    })
}
