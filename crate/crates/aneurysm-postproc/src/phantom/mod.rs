//! Deterministic synthetic cases for testing the full pipeline without
//! clinical data.
//!
//! A phantom is described geometrically (brain ellipsoid, artery and vein
//! tubes, a template CVS box, ground-truth aneurysm boxes anchored on
//! arteries, and decoy boxes with planted categories) and rasterized onto a
//! grid. Generation is pure: the same spec and seed always produce the same
//! case, bit for bit. The only randomness is a small rigid whole-voxel
//! translation of the scene and the detection confidences.

pub mod oracle;

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::affine::Affine4;
use crate::boxes::WorldBox;
use crate::error::{Error, Result};
use crate::eval::GroundTruthBox;
use crate::filter::{Detection, Method};
use crate::grid::{BinaryMask, GridGeometry};
use crate::pipeline::{build_mask_set, MaskSet, PipelineParams};

/// Brain stand-in: a solid ellipsoid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EllipsoidSpec {
    pub center_mm: [f64; 3],
    pub radii_mm: [f64; 3],
}

/// Vessel stand-in: a polyline swept by a sphere.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TubeSpec {
    pub points_mm: Vec<[f64; 3]>,
    pub radius_mm: f64,
}

/// What a decoy is planted to be, which fixes both its expected anatomic
/// category and which methods must remove it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecoyCategory {
    /// Outside the brain mask entirely; removed by methods 1, 4, 5.
    Extracranial,
    /// Inside the brain, more vein than artery; removed by methods 2-5.
    VeinDominant,
    /// Inside the brain, vein overlap exactly equal to artery overlap;
    /// removed by methods 2 and 4 only (3 and 5 keep ties).
    VeinArteryTie,
    /// Inside the brain, artery overlap only; kept by every method.
    Arterial,
    /// Inside the CVS region box overlapping the CVS mask; kept by every
    /// method because the CVS is carved out of the vein mask.
    CvsOverlap,
    /// Inside the brain, no vessel overlap at all; kept by every method.
    Nonvascular,
}

impl DecoyCategory {
    /// Methods that must remove a decoy of this category.
    pub fn expected_removals(&self) -> &'static [Method] {
        match self {
            DecoyCategory::Extracranial => &[Method::M1, Method::M4, Method::M5],
            DecoyCategory::VeinDominant => {
                &[Method::M2, Method::M3, Method::M4, Method::M5]
            }
            DecoyCategory::VeinArteryTie => &[Method::M2, Method::M4],
            DecoyCategory::Arterial => &[],
            DecoyCategory::CvsOverlap => &[],
            DecoyCategory::Nonvascular => &[],
        }
    }

    /// Anatomic category the evaluator must assign to this decoy.
    pub fn expected_fp_category(&self) -> crate::eval::FpCategory {
        use crate::eval::FpCategory;
        match self {
            DecoyCategory::Extracranial => FpCategory::Extracranial,
            DecoyCategory::VeinDominant => FpCategory::Venous,
            DecoyCategory::VeinArteryTie => FpCategory::Arterial,
            DecoyCategory::Arterial => FpCategory::Arterial,
            DecoyCategory::CvsOverlap => FpCategory::Cvs,
            DecoyCategory::Nonvascular => FpCategory::Nonvascular,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecoySpec {
    pub bbox: WorldBox,
    pub category: DecoyCategory,
    /// Fixed confidence, or None to draw uniformly from [0.5, 1.0) at
    /// generation time so the 0.8 threshold is exercised both ways.
    pub confidence: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhantomSpec {
    pub dims: [usize; 3],
    pub spacing_mm: [f64; 3],
    pub brain: EllipsoidSpec,
    pub artery_paths: Vec<TubeSpec>,
    pub vein_paths: Vec<TubeSpec>,
    pub template_cvs_box: WorldBox,
    pub gt_aneurysms: Vec<WorldBox>,
    pub decoys: Vec<DecoySpec>,
}

/// Label attached to each generated detection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlantedKind {
    /// Derived from a ground-truth box; must match it.
    TruePositive,
    Decoy(DecoyCategory),
}

/// A fully rasterized synthetic case.
#[derive(Debug, Clone)]
pub struct PhantomCase {
    pub brain_seg: BinaryMask,
    pub artery: BinaryMask,
    pub vein: BinaryMask,
    pub template_cvs_box: WorldBox,
    pub transform: Affine4,
    pub detections: Vec<Detection>,
    pub ground_truth: Vec<GroundTruthBox>,
    pub planted_labels: BTreeMap<String, PlantedKind>,
}

impl PhantomCase {
    pub fn geometry(&self) -> &Arc<GridGeometry> {
        self.brain_seg.geometry()
    }

    /// Mask set built from this case with the given parameters.
    pub fn build_masks(&self, params: &PipelineParams) -> Result<MaskSet> {
        build_mask_set(
            &self.brain_seg,
            &self.artery,
            &self.vein,
            &self.template_cvs_box,
            &self.transform,
            params,
        )
    }
}

fn shift_box(b: &WorldBox, offset: [f64; 3]) -> WorldBox {
    let mut min = b.min_mm();
    let mut max = b.max_mm();
    for a in 0..3 {
        min[a] += offset[a];
        max[a] += offset[a];
    }
    WorldBox::new(min, max).expect("shift preserves ordering")
}

fn rasterize_ellipsoid(mask: &mut BinaryMask, e: &EllipsoidSpec) {
    let g = mask.geometry().clone();
    let dims = g.dims();
    let spacing = g.spacing_mm();
    let mut lo = [0usize; 3];
    let mut hi = [0usize; 3];
    for a in 0..3 {
        lo[a] = (((e.center_mm[a] - e.radii_mm[a]) / spacing[a]).floor().max(0.0)) as usize;
        hi[a] = ((((e.center_mm[a] + e.radii_mm[a]) / spacing[a]).ceil()) as usize)
            .min(dims[a].saturating_sub(1));
    }
    let occ = mask.occupancy_mut();
    for z in lo[2]..=hi[2] {
        for y in lo[1]..=hi[1] {
            for x in lo[0]..=hi[0] {
                let p = [
                    x as f64 * spacing[0],
                    y as f64 * spacing[1],
                    z as f64 * spacing[2],
                ];
                let mut s = 0.0;
                for ((&pa, &ca), &ra) in p.iter().zip(&e.center_mm).zip(&e.radii_mm) {
                    let d = (pa - ca) / ra;
                    s += d * d;
                }
                if s <= 1.0 {
                    occ[x + dims[0] * (y + dims[1] * z)] = true;
                }
            }
        }
    }
}

fn rasterize_tube(mask: &mut BinaryMask, tube: &TubeSpec) {
    let g = mask.geometry().clone();
    let dims = g.dims();
    let spacing = g.spacing_mm();
    let r = tube.radius_mm;
    let r2 = r * r;
    let occ = mask.occupancy_mut();
    for seg in tube.points_mm.windows(2) {
        let (a, b) = (seg[0], seg[1]);
        let mut lo = [0usize; 3];
        let mut hi = [0usize; 3];
        for ax in 0..3 {
            let min_mm = a[ax].min(b[ax]) - r;
            let max_mm = a[ax].max(b[ax]) + r;
            lo[ax] = ((min_mm / spacing[ax]).floor().max(0.0)) as usize;
            hi[ax] = (((max_mm / spacing[ax]).ceil()) as usize).min(dims[ax].saturating_sub(1));
        }
        let d = [b[0] - a[0], b[1] - a[1], b[2] - a[2]];
        let len2 = d[0] * d[0] + d[1] * d[1] + d[2] * d[2];
        for z in lo[2]..=hi[2] {
            for y in lo[1]..=hi[1] {
                for x in lo[0]..=hi[0] {
                    let p = [
                        x as f64 * spacing[0],
                        y as f64 * spacing[1],
                        z as f64 * spacing[2],
                    ];
                    let ap = [p[0] - a[0], p[1] - a[1], p[2] - a[2]];
                    let t = if len2 > 0.0 {
                        ((ap[0] * d[0] + ap[1] * d[1] + ap[2] * d[2]) / len2).clamp(0.0, 1.0)
                    } else {
                        0.0
                    };
                    let dx = ap[0] - t * d[0];
                    let dy = ap[1] - t * d[1];
                    let dz = ap[2] - t * d[2];
                    if dx * dx + dy * dy + dz * dz <= r2 {
                        occ[x + dims[0] * (y + dims[1] * z)] = true;
                    }
                }
            }
        }
    }
}

/// Generates a case from a spec and seed.
///
/// The seed drives a whole-voxel rigid translation of the entire scene
/// (±2 voxels per axis) and the detection confidences: ground-truth derived
/// detections draw from [0.85, 1.0), decoys without a fixed confidence from
/// [0.5, 1.0). After rasterization every planted guarantee is re-checked
/// against the masks and a descriptive error raised on any violation.
pub fn generate_phantom(spec: &PhantomSpec, seed: u64) -> Result<PhantomCase> {
    let geometry = Arc::new(GridGeometry::axis_aligned(
        spec.dims,
        spec.spacing_mm,
        [0.0; 3],
    )?);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // rigid scene translation by whole voxels keeps every relative overlap
    // relation intact while varying absolute placement across seeds
    let mut offset = [0.0; 3];
    for (a, o) in offset.iter_mut().enumerate() {
        *o = rng.gen_range(-2i64..=2) as f64 * spec.spacing_mm[a];
    }

    let extent = [
        (spec.dims[0] - 1) as f64 * spec.spacing_mm[0],
        (spec.dims[1] - 1) as f64 * spec.spacing_mm[1],
        (spec.dims[2] - 1) as f64 * spec.spacing_mm[2],
    ];
    let shift_point = |p: [f64; 3]| [p[0] + offset[0], p[1] + offset[1], p[2] + offset[2]];

    let brain = EllipsoidSpec {
        center_mm: shift_point(spec.brain.center_mm),
        radii_mm: spec.brain.radii_mm,
    };
    let shift_tubes = |tubes: &[TubeSpec]| -> Result<Vec<TubeSpec>> {
        tubes
            .iter()
            .map(|t| {
                let points_mm: Vec<[f64; 3]> =
                    t.points_mm.iter().map(|&p| shift_point(p)).collect();
                for p in &points_mm {
                    for a in 0..3 {
                        if p[a] < 0.0 || p[a] > extent[a] {
                            return Err(Error::InvalidArgument(format!(
                                "vessel path point {:?} lies outside the grid extent {:?}",
                                p, extent
                            )));
                        }
                    }
                }
                Ok(TubeSpec {
                    points_mm,
                    radius_mm: t.radius_mm,
                })
            })
            .collect()
    };
    let artery_paths = shift_tubes(&spec.artery_paths)?;
    let vein_paths = shift_tubes(&spec.vein_paths)?;
    let template_cvs_box = shift_box(&spec.template_cvs_box, offset);

    let mut brain_seg = BinaryMask::empty(geometry.clone());
    rasterize_ellipsoid(&mut brain_seg, &brain);
    let mut artery = BinaryMask::empty(geometry.clone());
    for t in &artery_paths {
        rasterize_tube(&mut artery, t);
    }
    let mut vein = BinaryMask::empty(geometry.clone());
    for t in &vein_paths {
        rasterize_tube(&mut vein, t);
    }

    let mut ground_truth = Vec::new();
    let mut detections = Vec::new();
    let mut planted_labels = BTreeMap::new();

    for (i, gt_world) in spec.gt_aneurysms.iter().enumerate() {
        let shifted = shift_box(gt_world, offset);
        let bbox = geometry.voxelize_world_box(&shifted);
        if bbox.is_empty() {
            return Err(Error::InvalidArgument(format!(
                "ground-truth box {i} voxelizes to nothing on the grid"
            )));
        }
        let gt_id = format!("gt-{i:03}");
        let det_id = format!("det-gt-{i:03}");
        ground_truth.push(GroundTruthBox::new(&gt_id, bbox)?);
        let confidence = rng.gen_range(0.85..1.0);
        detections.push(Detection::new(&det_id, bbox, confidence)?);
        planted_labels.insert(det_id, PlantedKind::TruePositive);
    }

    for (i, decoy) in spec.decoys.iter().enumerate() {
        let shifted = shift_box(&decoy.bbox, offset);
        let bbox = geometry.voxelize_world_box(&shifted);
        if bbox.is_empty() {
            return Err(Error::InvalidArgument(format!(
                "decoy box {i} ({:?}) voxelizes to nothing on the grid",
                decoy.category
            )));
        }
        let confidence = match decoy.confidence {
            Some(c) => {
                if !(0.0..=1.0).contains(&c) {
                    return Err(Error::InvalidArgument(format!(
                        "decoy {i} confidence {c} out of [0, 1]"
                    )));
                }
                c
            }
            None => rng.gen_range(0.5..1.0),
        };
        let det_id = format!("det-decoy-{:03}", i);
        detections.push(Detection::new(&det_id, bbox, confidence)?);
        planted_labels.insert(det_id, PlantedKind::Decoy(decoy.category));
    }

    let case = PhantomCase {
        brain_seg,
        artery,
        vein,
        template_cvs_box,
        transform: Affine4::identity(),
        detections,
        ground_truth,
        planted_labels,
    };
    validate_planted(&case, spec)?;
    Ok(case)
}

/// Re-checks every planted guarantee against the rasterized masks using the
/// default pipeline parameters.
fn validate_planted(case: &PhantomCase, spec: &PhantomSpec) -> Result<()> {
    if case.ground_truth.is_empty() && case.detections.is_empty() {
        return Ok(());
    }
    let masks = case.build_masks(&PipelineParams::default())?;

    for (i, gt) in case.ground_truth.iter().enumerate() {
        let artery = masks.artery.box_overlap(&gt.bbox);
        let vein = masks.vein_final.box_overlap(&gt.bbox);
        let brain = masks.brain.box_overlap(&gt.bbox);
        if artery == 0 {
            return Err(Error::InvalidArgument(format!(
                "ground-truth box {i} does not intersect any artery tube"
            )));
        }
        if brain == 0 || artery < vein {
            return Err(Error::InvalidArgument(format!(
                "ground-truth box {i} violates the sensitivity guarantee \
                 (brain {brain}, artery {artery}, vein {vein})"
            )));
        }
    }

    for (det, spec_decoy) in case
        .detections
        .iter()
        .filter(|d| matches!(case.planted_labels[&d.id], PlantedKind::Decoy(_)))
        .zip(spec.decoys.iter())
    {
        let brain = masks.brain.box_overlap(&det.bbox);
        let artery = masks.artery.box_overlap(&det.bbox);
        let vein = masks.vein_final.box_overlap(&det.bbox);
        let cvs = masks.cvs.box_overlap(&det.bbox);
        let cat = spec_decoy.category;
        let ok = match cat {
            DecoyCategory::Extracranial => brain == 0,
            DecoyCategory::VeinDominant => brain >= 1 && vein > artery,
            DecoyCategory::VeinArteryTie => brain >= 1 && artery >= 1 && vein == artery,
            DecoyCategory::Arterial => brain >= 1 && artery >= 1 && vein == 0,
            DecoyCategory::CvsOverlap => brain >= 1 && cvs >= 1 && cvs >= vein.max(artery),
            DecoyCategory::Nonvascular => {
                brain >= 1 && artery == 0 && vein == 0 && cvs == 0
            }
        };
        if !ok {
            return Err(Error::InvalidArgument(format!(
                "decoy {} planted as {:?} is not realizable \
                 (brain {brain}, artery {artery}, vein {vein}, cvs {cvs})",
                det.id, cat
            )));
        }
    }
    Ok(())
}

impl PhantomSpec {
    /// The stock 64-voxel cube at 1 mm spacing used throughout the test
    /// suites: two arterial ground-truth boxes plus one inside the CVS
    /// region, and one decoy of every category (one of them sub-threshold).
    pub fn standard() -> PhantomSpec {
        PhantomSpec {
            dims: [64, 64, 64],
            spacing_mm: [1.0; 3],
            brain: EllipsoidSpec {
                center_mm: [32.0, 32.0, 36.0],
                radii_mm: [24.0, 24.0, 22.0],
            },
            artery_paths: vec![
                // main artery running front-to-back
                TubeSpec {
                    points_mm: vec![[32.0, 14.0, 40.0], [32.0, 50.0, 40.0]],
                    radius_mm: 2.0,
                },
                // artery crossing the CVS region
                TubeSpec {
                    points_mm: vec![[24.0, 31.0, 22.0], [40.0, 31.0, 22.0]],
                    radius_mm: 1.6,
                },
                // left half of the mirrored artery/vein pair (tie decoy)
                TubeSpec {
                    points_mm: vec![[42.0, 24.0, 36.0], [42.0, 32.0, 36.0]],
                    radius_mm: 1.5,
                },
            ],
            vein_paths: vec![
                // vein crossing the CVS region
                TubeSpec {
                    points_mm: vec![[22.0, 35.0, 25.0], [42.0, 35.0, 25.0]],
                    radius_mm: 1.8,
                },
                // main vein, far from every artery
                TubeSpec {
                    points_mm: vec![[16.0, 16.0, 44.0], [16.0, 48.0, 44.0]],
                    radius_mm: 2.0,
                },
                // right half of the mirrored pair
                TubeSpec {
                    points_mm: vec![[46.0, 24.0, 36.0], [46.0, 32.0, 36.0]],
                    radius_mm: 1.5,
                },
            ],
            template_cvs_box: WorldBox::new([26.0, 27.0, 20.0], [38.0, 37.0, 28.0]).unwrap(),
            gt_aneurysms: vec![
                WorldBox::new([29.0, 20.0, 37.0], [35.0, 26.0, 43.0]).unwrap(),
                WorldBox::new([29.0, 40.0, 37.0], [35.0, 46.0, 43.0]).unwrap(),
                // inside the CVS region box, on the crossing artery
                WorldBox::new([29.0, 29.0, 21.0], [35.0, 35.0, 27.0]).unwrap(),
            ],
            decoys: vec![
                DecoySpec {
                    bbox: WorldBox::new([1.0, 1.0, 1.0], [6.0, 6.0, 6.0]).unwrap(),
                    category: DecoyCategory::Extracranial,
                    confidence: None,
                },
                DecoySpec {
                    bbox: WorldBox::new([13.0, 29.0, 41.0], [19.0, 35.0, 47.0]).unwrap(),
                    category: DecoyCategory::VeinDominant,
                    confidence: None,
                },
                DecoySpec {
                    // symmetric around the mirrored tube pair at x = 44
                    bbox: WorldBox::new([40.0, 24.0, 32.0], [48.0, 32.0, 40.0]).unwrap(),
                    category: DecoyCategory::VeinArteryTie,
                    confidence: None,
                },
                DecoySpec {
                    bbox: WorldBox::new([29.0, 46.0, 37.0], [35.0, 52.0, 43.0]).unwrap(),
                    category: DecoyCategory::Arterial,
                    confidence: None,
                },
                DecoySpec {
                    bbox: WorldBox::new([24.0, 33.0, 22.0], [30.0, 38.0, 28.0]).unwrap(),
                    category: DecoyCategory::CvsOverlap,
                    confidence: None,
                },
                DecoySpec {
                    bbox: WorldBox::new([20.0, 20.0, 46.0], [26.0, 26.0, 52.0]).unwrap(),
                    category: DecoyCategory::Nonvascular,
                    confidence: None,
                },
                DecoySpec {
                    // fixed below the 0.8 threshold: always dropped
                    bbox: WorldBox::new([38.0, 18.0, 44.0], [44.0, 24.0, 50.0]).unwrap(),
                    category: DecoyCategory::Nonvascular,
                    confidence: Some(0.6),
                },
            ],
        }
    }

    /// `standard()` plus a vein crossing one additional ground-truth box, so
    /// that box overlaps both vessels with artery >= vein >= 1. The derived
    /// detection survives methods 1, 3, and 5 but is lost to 2 and 4.
    pub fn standard_vein_touching() -> PhantomSpec {
        let mut spec = PhantomSpec::standard();
        spec.vein_paths.push(TubeSpec {
            points_mm: vec![[28.0, 32.0, 38.0], [36.0, 32.0, 38.0]],
            radius_mm: 1.2,
        });
        spec.gt_aneurysms
            .push(WorldBox::new([29.0, 29.0, 37.0], [35.0, 35.0, 43.0]).unwrap());
        spec
    }

    /// Large-grid variant for performance work: same anatomy style, no
    /// ground truth or decoys (callers bring their own detections).
    pub fn performance(dims: [usize; 3], spacing_mm: [f64; 3]) -> PhantomSpec {
        let extent = [
            (dims[0] - 1) as f64 * spacing_mm[0],
            (dims[1] - 1) as f64 * spacing_mm[1],
            (dims[2] - 1) as f64 * spacing_mm[2],
        ];
        let c = [extent[0] / 2.0, extent[1] / 2.0, extent[2] / 2.0];
        let r = extent[0].min(extent[1]).min(extent[2]);
        PhantomSpec {
            dims,
            spacing_mm,
            brain: EllipsoidSpec {
                center_mm: c,
                radii_mm: [0.38 * extent[0], 0.38 * extent[1], 0.36 * extent[2]],
            },
            artery_paths: vec![TubeSpec {
                points_mm: vec![
                    [c[0], 0.2 * extent[1], c[2]],
                    [c[0], 0.8 * extent[1], c[2]],
                ],
                radius_mm: 0.03 * r,
            }],
            vein_paths: vec![TubeSpec {
                points_mm: vec![
                    [0.3 * extent[0], 0.2 * extent[1], 0.6 * extent[2]],
                    [0.3 * extent[0], 0.8 * extent[1], 0.6 * extent[2]],
                ],
                radius_mm: 0.03 * r,
            }],
            template_cvs_box: WorldBox::new(
                [0.42 * extent[0], 0.42 * extent[1], 0.3 * extent[2]],
                [0.58 * extent[0], 0.58 * extent[1], 0.4 * extent[2]],
            )
            .unwrap(),
            gt_aneurysms: vec![],
            decoys: vec![],
        }
    }
}

#[cfg(test)]
mod tests {
    use super::oracle::{oracle_box_overlap, oracle_dilate};
    use super::*;
    use crate::grid::MaskOp;

    #[test]
    fn generation_is_deterministic() {
        let spec = PhantomSpec::standard();
        let a = generate_phantom(&spec, 7).unwrap();
        let b = generate_phantom(&spec, 7).unwrap();
        assert_eq!(a.brain_seg, b.brain_seg);
        assert_eq!(a.artery, b.artery);
        assert_eq!(a.vein, b.vein);
        assert_eq!(a.detections, b.detections);
        assert_eq!(a.ground_truth, b.ground_truth);
        assert_eq!(a.template_cvs_box, b.template_cvs_box);

        let c = generate_phantom(&spec, 8).unwrap();
        assert_ne!(
            a.detections.iter().map(|d| d.confidence).collect::<Vec<_>>(),
            c.detections.iter().map(|d| d.confidence).collect::<Vec<_>>()
        );
    }

    #[test]
    fn gt_boxes_touch_arteries_per_oracle() {
        let case = generate_phantom(&PhantomSpec::standard(), 3).unwrap();
        let masks = case.build_masks(&PipelineParams::default()).unwrap();
        for gt in &case.ground_truth {
            assert!(oracle_box_overlap(&gt.bbox, &case.artery) >= 1, "{}", gt.id);
            let artery = oracle_box_overlap(&gt.bbox, &masks.artery);
            let vein = oracle_box_overlap(&gt.bbox, &masks.vein_final);
            assert!(artery >= vein, "{}: artery {artery} < vein {vein}", gt.id);
        }
    }

    #[test]
    fn extracranial_decoy_clears_dilated_brain_per_oracle() {
        let case = generate_phantom(&PhantomSpec::standard(), 11).unwrap();
        let dilated = oracle_dilate(&case.brain_seg, 3.6);
        for det in &case.detections {
            if case.planted_labels[&det.id] == PlantedKind::Decoy(DecoyCategory::Extracranial) {
                assert_eq!(oracle_box_overlap(&det.bbox, &dilated), 0);
            }
        }
    }

    #[test]
    fn every_decoy_category_is_realized() {
        // several seeds to cover different jitter offsets
        for seed in [0, 1, 2, 42] {
            let case = generate_phantom(&PhantomSpec::standard(), seed).unwrap();
            let cats: Vec<_> = case
                .planted_labels
                .values()
                .filter_map(|k| match k {
                    PlantedKind::Decoy(c) => Some(*c),
                    _ => None,
                })
                .collect();
            for want in [
                DecoyCategory::Extracranial,
                DecoyCategory::VeinDominant,
                DecoyCategory::VeinArteryTie,
                DecoyCategory::Arterial,
                DecoyCategory::CvsOverlap,
                DecoyCategory::Nonvascular,
            ] {
                assert!(cats.contains(&want), "seed {seed} missing {want:?}");
            }
        }
    }

    #[test]
    fn planted_decoys_categorize_as_planted() {
        for seed in [0, 9, 17] {
            let case = generate_phantom(&PhantomSpec::standard(), seed).unwrap();
            let masks = case.build_masks(&PipelineParams::default()).unwrap();
            for det in &case.detections {
                if let PlantedKind::Decoy(cat) = case.planted_labels[&det.id] {
                    assert_eq!(
                        crate::eval::categorize_fp(&det.bbox, &masks),
                        cat.expected_fp_category(),
                        "seed {seed}, decoy {} planted as {cat:?}",
                        det.id
                    );
                }
            }
        }
    }

    #[test]
    fn vein_touching_variant_adds_a_mixed_gt() {
        let case = generate_phantom(&PhantomSpec::standard_vein_touching(), 5).unwrap();
        let masks = case.build_masks(&PipelineParams::default()).unwrap();
        let last = case.ground_truth.last().unwrap();
        let vein = masks.vein_final.box_overlap(&last.bbox);
        let artery = masks.artery.box_overlap(&last.bbox);
        assert!(vein >= 1, "variant gt must touch the vein");
        assert!(artery >= vein, "variant gt must stay artery-dominant");
    }

    #[test]
    fn mask_set_invariants_hold_on_phantoms() {
        for seed in 0..5 {
            let case = generate_phantom(&PhantomSpec::standard(), seed).unwrap();
            let masks = case.build_masks(&PipelineParams::default()).unwrap();
            masks.verify_invariants(true).unwrap();
            assert!(masks.cvs.is_subset_of(&case.vein).unwrap());
            let reunion = masks
                .vein_final
                .combine(&masks.cvs, MaskOp::Union)
                .unwrap();
            assert_eq!(reunion, case.vein);
            // the cvs mask is exactly the vein voxels inside the region box,
            // counted here by the brute-force oracle
            assert_eq!(
                masks.cvs.count_set(),
                oracle_box_overlap(&masks.cvs_region_box, &case.vein),
                "seed {seed}"
            );
        }
    }

    #[test]
    fn bad_spec_is_rejected_with_a_description() {
        let mut spec = PhantomSpec::standard();
        spec.artery_paths[0].points_mm[1][1] = 500.0; // runs off the grid
        let err = generate_phantom(&spec, 0).unwrap_err();
        assert!(err.to_string().contains("outside the grid"), "{err}");

        let mut spec = PhantomSpec::standard();
        // plant an "arterial" decoy in empty space: not realizable
        spec.decoys[3].bbox = WorldBox::new([50.0, 14.0, 14.0], [56.0, 20.0, 20.0]).unwrap();
        let err = generate_phantom(&spec, 0).unwrap_err();
        assert!(err.to_string().contains("not realizable"), "{err}");
    }
}
