//! Derived-mask construction.
//!
//! From the three segmentation inputs (brain, artery, vein) plus a template
//! CVS box and a registration affine, this module builds the mask set the
//! filters run against: the CVS region box mapped onto the case grid, the CVS
//! mask (vein inside that box), the final vein mask (vein minus CVS), and the
//! brain mask (dilated brain segmentation united with the region box).

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::affine::{transform_world_box, Affine4};
use crate::boxes::{expand_world_box, VoxelBox, WorldBox};
use crate::error::{Error, Result};
use crate::grid::{BinaryMask, GridGeometry, MaskOp};
use crate::morph::dilate_mask;

/// Tunable distances and thresholds of the mask pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PipelineParams {
    /// Brain mask dilation in millimeters.
    pub brain_dilation_mm: f64,
    /// Outward expansion of the registered CVS region box in millimeters.
    pub cvs_expand_mm: f64,
    /// Detection confidence cutoff applied before filtering.
    pub confidence_threshold: f64,
    /// Union the unexpanded (instead of expanded) CVS region box into the
    /// brain mask. Off by default; turning it on relaxes the guarantee that
    /// the brain mask covers the stored region box.
    #[serde(default)]
    pub unexpanded_brain_box: bool,
}

impl Default for PipelineParams {
    fn default() -> Self {
        PipelineParams {
            brain_dilation_mm: 3.6,
            cvs_expand_mm: 3.2,
            confidence_threshold: 0.8,
            unexpanded_brain_box: false,
        }
    }
}

impl PipelineParams {
    pub fn validate(&self) -> Result<()> {
        if !self.brain_dilation_mm.is_finite() || self.brain_dilation_mm < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "brain_dilation_mm must be non-negative, got {}",
                self.brain_dilation_mm
            )));
        }
        if !self.cvs_expand_mm.is_finite() || self.cvs_expand_mm < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "cvs_expand_mm must be non-negative, got {}",
                self.cvs_expand_mm
            )));
        }
        if !self.confidence_threshold.is_finite()
            || !(0.0..=1.0).contains(&self.confidence_threshold)
        {
            return Err(Error::InvalidArgument(format!(
                "confidence_threshold must be in [0, 1], got {}",
                self.confidence_threshold
            )));
        }
        Ok(())
    }
}

/// The four derived masks plus the CVS region box, all on one grid.
#[derive(Debug, Clone)]
pub struct MaskSet {
    pub brain: BinaryMask,
    pub artery: BinaryMask,
    pub vein_final: BinaryMask,
    pub cvs: BinaryMask,
    pub cvs_region_box: VoxelBox,
}

impl MaskSet {
    pub fn geometry(&self) -> &Arc<GridGeometry> {
        self.brain.geometry()
    }

    /// Checks the self-contained structural invariants. `brain_covers_box`
    /// should be false when the set was built with `unexpanded_brain_box`.
    pub fn verify_invariants(&self, brain_covers_box: bool) -> std::result::Result<(), String> {
        let g = self.brain.geometry();
        for (name, mask) in [
            ("artery", &self.artery),
            ("vein_final", &self.vein_final),
            ("cvs", &self.cvs),
        ] {
            if !g.approx_same(mask.geometry()) {
                return Err(format!("mask {name} is on a different grid"));
            }
        }
        if self.vein_final.intersects(&self.cvs).unwrap_or(true) {
            return Err("vein_final and cvs overlap".into());
        }
        let box_mask = BinaryMask::from_box(g.clone(), &self.cvs_region_box);
        if !self.cvs.is_subset_of(&box_mask).unwrap_or(false) {
            return Err("cvs mask extends outside the cvs region box".into());
        }
        if brain_covers_box {
            let clipped = self.cvs_region_box.clip_to_dims(g.dims());
            if self.brain.box_overlap(&clipped) != clipped.volume() {
                return Err("brain mask does not cover the cvs region box".into());
            }
        }
        Ok(())
    }
}

/// Registers the template CVS box onto a case grid: transform into target
/// world space, expand, then voxelize.
pub fn build_cvs_region_box(
    template_box: &WorldBox,
    transform: &Affine4,
    expand_mm: f64,
    grid: &GridGeometry,
) -> Result<VoxelBox> {
    let registered = transform_world_box(transform, template_box);
    let expanded = expand_world_box(&registered, expand_mm)?;
    Ok(grid.voxelize_world_box(&expanded))
}

/// CVS mask: voxels inside the region box that are set in the vein mask.
pub fn build_cvs_mask(cvs_region_box: &VoxelBox, vein: &BinaryMask) -> BinaryMask {
    let box_mask = BinaryMask::from_box(vein.geometry().clone(), cvs_region_box);
    box_mask
        .combine(vein, MaskOp::Intersect)
        .expect("same geometry by construction")
}

/// Final vein mask: vein with the CVS carved out.
pub fn build_vein_final(vein: &BinaryMask, cvs: &BinaryMask) -> Result<BinaryMask> {
    vein.combine(cvs, MaskOp::Subtract)
}

/// Brain mask: dilated brain segmentation united with the CVS region box.
pub fn build_brain_mask(
    brain_seg: &BinaryMask,
    cvs_region_box: &VoxelBox,
    dilate_mm: f64,
) -> Result<BinaryMask> {
    let mut dilated = dilate_mask(brain_seg, dilate_mm)?;
    dilated.set_box(cvs_region_box, true);
    Ok(dilated)
}

/// Builds the full mask set for one case.
pub fn build_mask_set(
    brain_seg: &BinaryMask,
    artery: &BinaryMask,
    vein: &BinaryMask,
    template_box: &WorldBox,
    transform: &Affine4,
    params: &PipelineParams,
) -> Result<MaskSet> {
    params.validate()?;
    brain_seg.geometry().check_same(artery.geometry())?;
    brain_seg.geometry().check_same(vein.geometry())?;

    let grid = brain_seg.geometry();
    let cvs_region_box = build_cvs_region_box(template_box, transform, params.cvs_expand_mm, grid)?;
    if cvs_region_box.is_empty() {
        log::warn!(
            "CVS region box is empty on {} (registration may have failed); \
             CVS mask will be empty and the vein mask is left intact",
            grid
        );
    }
    let cvs = build_cvs_mask(&cvs_region_box, vein);
    let vein_final = build_vein_final(vein, &cvs)?;
    let brain_box = if params.unexpanded_brain_box {
        build_cvs_region_box(template_box, transform, 0.0, grid)?
    } else {
        cvs_region_box
    };
    let brain = build_brain_mask(brain_seg, &brain_box, params.brain_dilation_mm)?;

    Ok(MaskSet {
        brain,
        artery: artery.clone(),
        vein_final,
        cvs,
        cvs_region_box,
    })
}
