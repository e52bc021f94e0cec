//! Anatomy-based post-processing for deep-learning aneurysm detections.
//!
//! Detection models for intracranial aneurysms on CTA emit far more false
//! positives than radiologists will tolerate, and most of those land in
//! predictable places: outside the skull, inside veins, or on arterial
//! branch points. This crate removes them after the fact using nothing but
//! segmentation masks and box arithmetic:
//!
//! 1. build a brain mask (dilated brain segmentation plus the cavernous-
//!    sinus region box), a CVS mask (vein voxels inside that box), and a
//!    final vein mask (vein minus CVS) — [`pipeline`];
//! 2. score each detection box by its voxel overlap with those masks and
//!    apply one of five removal rules — [`filter`];
//! 3. match what survives against ground truth and tabulate TP/FP/FN,
//!    FP-per-case, and per-category removal counts — [`eval`], [`report`].
//!
//! Everything is exercised end to end on synthetic cases from [`phantom`],
//! which also hosts the brute-force oracles the fast paths are verified
//! against. See the `examples/` directory for runnable walkthroughs of each
//! capability; a thin CLI binary drives the same code over directories of
//! cases.

pub mod affine;
pub mod boxes;
pub mod cli;
pub mod error;
pub mod eval;
pub mod filter;
pub mod grid;
pub mod io;
pub mod morph;
pub mod phantom;
pub mod pipeline;
pub mod report;

pub use affine::{transform_world_box, Affine4};
pub use boxes::{expand_world_box, VoxelBox, WorldBox};
pub use error::{Error, Result};
pub use eval::{
    box_iou, categorize_fp, compute_metrics, match_detections, reduction_percentage, FpCategory,
    GroundTruthBox, Matching, Metrics,
};
pub use filter::{
    apply_method, decide_removal, overlap_profile, threshold_detections, Detection, FilterParams,
    FilterResult, Method, OverlapProfile,
};
pub use grid::{BinaryMask, GridGeometry, MaskOp, Volume3D};
pub use morph::{dilate_mask, mm_to_voxel_radius};
pub use phantom::{generate_phantom, DecoyCategory, PhantomCase, PhantomSpec, PlantedKind};
pub use pipeline::{build_mask_set, MaskSet, PipelineParams};
pub use report::{build_report, CaseRunData, MethodRun, Report};
