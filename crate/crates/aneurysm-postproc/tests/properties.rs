//! Property tests for the geometry and filtering invariants.

use std::sync::Arc;

use proptest::prelude::*;

use aneurysm_postproc::boxes::{expand_world_box, VoxelBox, WorldBox};
use aneurysm_postproc::eval::{box_iou, match_detections, GroundTruthBox};
use aneurysm_postproc::filter::{threshold_detections, Detection};
use aneurysm_postproc::grid::{BinaryMask, GridGeometry, MaskOp};
use aneurysm_postproc::morph::dilate_mask;
use aneurysm_postproc::{transform_world_box, Affine4};

fn small_dims() -> impl Strategy<Value = [usize; 3]> {
    prop::array::uniform3(1usize..12)
}

fn mask_on(dims: [usize; 3]) -> impl Strategy<Value = BinaryMask> {
    let n = dims[0] * dims[1] * dims[2];
    prop::collection::vec(any::<bool>(), n).prop_map(move |occ| {
        let g = Arc::new(GridGeometry::axis_aligned(dims, [1.0; 3], [0.0; 3]).unwrap());
        BinaryMask::new(g, occ).unwrap()
    })
}

fn grid_and_masks() -> impl Strategy<Value = (BinaryMask, BinaryMask)> {
    small_dims().prop_flat_map(|dims| (mask_on(dims), mask_on(dims)))
}

fn voxel_box() -> impl Strategy<Value = VoxelBox> {
    (
        prop::array::uniform3(-6i64..14),
        prop::array::uniform3(1i64..8),
    )
        .prop_map(|(min, size)| {
            VoxelBox::new(min, [min[0] + size[0], min[1] + size[1], min[2] + size[2]]).unwrap()
        })
}

fn world_box() -> impl Strategy<Value = WorldBox> {
    (
        prop::array::uniform3(-30.0f64..30.0),
        prop::array::uniform3(0.1f64..25.0),
    )
        .prop_map(|(min, size)| {
            WorldBox::new(min, [min[0] + size[0], min[1] + size[1], min[2] + size[2]]).unwrap()
        })
}

proptest! {
    /// Dilation never loses voxels, is the identity at radius 0, and grows
    /// monotonically with the radius.
    #[test]
    fn dilation_superset_and_monotone(
        mask in small_dims().prop_flat_map(mask_on),
        r1 in 0.0f64..3.0,
        r2 in 0.0f64..3.0,
    ) {
        let zero = dilate_mask(&mask, 0.0).unwrap();
        prop_assert_eq!(&zero, &mask);

        let (lo, hi) = if r1 <= r2 { (r1, r2) } else { (r2, r1) };
        let small = dilate_mask(&mask, lo).unwrap();
        let large = dilate_mask(&mask, hi).unwrap();
        prop_assert!(mask.is_subset_of(&small).unwrap());
        prop_assert!(small.is_subset_of(&large).unwrap());
    }

    /// Overlap counting is bounded by both box volume and mask popcount and
    /// adds up over disjoint masks.
    #[test]
    fn overlap_bounds_and_additivity((a, b) in grid_and_masks(), bbox in voxel_box()) {
        let count = a.box_overlap(&bbox);
        prop_assert!(count <= bbox.volume());
        prop_assert!(count <= a.count_set());

        // split b into parts inside/outside a: disjoint by construction
        let inside = b.combine(&a, MaskOp::Intersect).unwrap();
        let outside = b.combine(&a, MaskOp::Subtract).unwrap();
        prop_assert!(!inside.intersects(&outside).unwrap());
        prop_assert_eq!(
            b.box_overlap(&bbox),
            inside.box_overlap(&bbox) + outside.box_overlap(&bbox)
        );
    }

    /// Boolean mask ops agree with a naive per-voxel loop.
    #[test]
    fn mask_boolean_matches_naive_loop((a, b) in grid_and_masks()) {
        for op in [MaskOp::Union, MaskOp::Intersect, MaskOp::Subtract] {
            let fast = a.combine(&b, op).unwrap();
            let naive: Vec<bool> = a
                .occupancy()
                .iter()
                .zip(b.occupancy())
                .map(|(&x, &y)| match op {
                    MaskOp::Union => x || y,
                    MaskOp::Intersect => x && y,
                    MaskOp::Subtract => x && !y,
                })
                .collect();
            prop_assert_eq!(fast.occupancy(), naive.as_slice());
        }
    }

    /// Transforming a box by the identity changes nothing; composing with a
    /// translation shifts both corners by exactly that translation.
    #[test]
    fn transform_box_translation_equivariance(
        b in world_box(),
        shift in prop::array::uniform3(-50.0f64..50.0),
    ) {
        let same = transform_world_box(&Affine4::identity(), &b);
        prop_assert_eq!(same, b);

        let moved = transform_world_box(&Affine4::translation(shift), &b);
        for (a, &s) in shift.iter().enumerate() {
            prop_assert!((moved.min_mm()[a] - (b.min_mm()[a] + s)).abs() < 1e-9);
            prop_assert!((moved.max_mm()[a] - (b.max_mm()[a] + s)).abs() < 1e-9);
        }
    }

    /// Voxelizing a world box and mapping the result back to world space
    /// always covers the part of the box that lies on the grid.
    #[test]
    fn voxelize_rounds_outward(
        b in world_box(),
        dims in prop::array::uniform3(2usize..24),
        spacing in prop::array::uniform3(0.3f64..2.0),
        origin in prop::array::uniform3(-10.0f64..10.0),
    ) {
        let g = GridGeometry::axis_aligned(dims, spacing, origin).unwrap();
        let vb = g.voxelize_world_box(&b);
        if let Some(back) = g.voxel_box_to_world(&vb) {
            // grid's world extent spanned by its sample points
            let lo = g.index_to_world_point([0.0, 0.0, 0.0]);
            let hi = g.index_to_world_point([
                (dims[0] - 1) as f64,
                (dims[1] - 1) as f64,
                (dims[2] - 1) as f64,
            ]);
            for a in 0..3 {
                let clipped_min = b.min_mm()[a].max(lo[a]);
                let clipped_max = b.max_mm()[a].min(hi[a]);
                if clipped_min <= clipped_max {
                    prop_assert!(back.min_mm()[a] <= clipped_min + 1e-6);
                    prop_assert!(back.max_mm()[a] >= clipped_max - 1e-6);
                }
            }
        }
    }

    /// Expanding then voxelizing never yields a smaller box than voxelizing
    /// alone.
    #[test]
    fn expansion_is_monotone_after_voxelization(
        b in world_box(),
        margin in 0.0f64..6.0,
    ) {
        let g = GridGeometry::axis_aligned([24, 24, 24], [1.0; 3], [0.0; 3]).unwrap();
        let plain = g.voxelize_world_box(&b);
        let grown = g.voxelize_world_box(&expand_world_box(&b, margin).unwrap());
        prop_assert_eq!(plain.intersect(&grown), plain);
    }

    /// IoU is symmetric, lands in [0, 1], and is 1 exactly for identical
    /// boxes.
    #[test]
    fn iou_symmetric_unit_range(a in voxel_box(), b in voxel_box()) {
        let ab = box_iou(&a, &b).unwrap();
        let ba = box_iou(&b, &a).unwrap();
        prop_assert_eq!(ab, ba);
        prop_assert!((0.0..=1.0).contains(&ab));
        prop_assert_eq!(box_iou(&a, &a).unwrap(), 1.0);
        if ab == 1.0 {
            prop_assert_eq!(a, b);
        }
    }

    /// Thresholding equals the one-line brute filter and preserves order.
    #[test]
    fn threshold_matches_brute_filter(
        confs in prop::collection::vec(0.0f64..=1.0, 0..40),
        tau in 0.0f64..=1.0,
    ) {
        let dets: Vec<Detection> = confs
            .iter()
            .enumerate()
            .map(|(i, &c)| {
                Detection::new(
                    format!("d{i}"),
                    VoxelBox::new([0, 0, 0], [1, 1, 1]).unwrap(),
                    c,
                )
                .unwrap()
            })
            .collect();
        let kept = threshold_detections(&dets, tau).unwrap();
        let brute: Vec<&Detection> = dets.iter().filter(|d| d.confidence >= tau).collect();
        prop_assert_eq!(kept.len(), brute.len());
        for (k, b) in kept.iter().zip(brute) {
            prop_assert_eq!(&k.id, &b.id);
        }
    }

    /// Matching bookkeeping: every detection lands in exactly one bucket and
    /// pairs + misses account for all ground truth.
    #[test]
    fn matching_partitions_both_sides(
        det_boxes in prop::collection::vec(voxel_box(), 0..6),
        gt_boxes in prop::collection::vec(voxel_box(), 0..6),
        iou_threshold in 0.0f64..=1.0,
    ) {
        let dets: Vec<Detection> = det_boxes
            .iter()
            .enumerate()
            .map(|(i, b)| Detection::new(format!("d{i}"), *b, 0.9).unwrap())
            .collect();
        let gts: Vec<GroundTruthBox> = gt_boxes
            .iter()
            .enumerate()
            .map(|(i, b)| GroundTruthBox::new(format!("g{i}"), *b).unwrap())
            .collect();
        let m = match_detections(&dets, &gts, iou_threshold).unwrap();
        prop_assert_eq!(m.pairs.len() + m.fp_ids.len(), dets.len());
        prop_assert_eq!(m.pairs.len() + m.fn_ids.len(), gts.len());

        let mut det_ids: Vec<&String> = m
            .pairs
            .iter()
            .map(|p| &p.detection_id)
            .chain(m.fp_ids.iter())
            .collect();
        det_ids.sort();
        det_ids.dedup();
        prop_assert_eq!(det_ids.len(), dets.len());
        for p in &m.pairs {
            prop_assert!(p.iou >= iou_threshold);
        }
    }
}

/// Greedy matching equals an exhaustive best-assignment oracle on scenes
/// where each detection is admissible to at most one ground-truth box
/// (separated ground truth), which the generator below guarantees.
#[test]
fn matching_counts_equal_exhaustive_oracle_on_separated_scenes() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4242);

    for scene in 0..300 {
        // up to 5 well-separated gt boxes on a coarse lattice
        let n_gt = rng.gen_range(0..=5);
        let gts: Vec<GroundTruthBox> = (0..n_gt)
            .map(|i| {
                let base = [i as i64 * 40, 0, 0];
                GroundTruthBox::new(
                    format!("g{i}"),
                    VoxelBox::new(base, [base[0] + 8, 8, 8]).unwrap(),
                )
                .unwrap()
            })
            .collect();
        // detections jittered around gt boxes plus strays
        let n_det = rng.gen_range(0..=5);
        let dets: Vec<Detection> = (0..n_det)
            .map(|i| {
                let bbox = if n_gt > 0 && rng.gen_bool(0.7) {
                    let g = rng.gen_range(0..n_gt) as i64;
                    let dx = rng.gen_range(-3..3);
                    let size = rng.gen_range(4..10);
                    VoxelBox::new(
                        [g * 40 + dx, dx.max(0), 0],
                        [g * 40 + dx + size, dx.max(0) + size, size],
                    )
                    .unwrap()
                } else {
                    VoxelBox::new([1000 + i as i64 * 20, 0, 0], [1006 + i as i64 * 20, 6, 6])
                        .unwrap()
                };
                Detection::new(format!("d{i}"), bbox, 0.9).unwrap()
            })
            .collect();

        let got = match_detections(&dets, &gts, 0.1).unwrap();

        // oracle: enumerate every one-to-one assignment of admissible pairs
        // and keep the best by (cardinality, total iou)
        let mut admissible: Vec<(usize, usize, f64)> = Vec::new();
        for (di, d) in dets.iter().enumerate() {
            for (gi, g) in gts.iter().enumerate() {
                if g.bbox.contains_point(d.bbox.center()) {
                    let iou = box_iou(&d.bbox, &g.bbox).unwrap();
                    if iou >= 0.1 {
                        admissible.push((di, gi, iou));
                    }
                }
            }
        }
        fn best(
            pairs: &[(usize, usize, f64)],
            used_d: u32,
            used_g: u32,
            from: usize,
        ) -> (usize, f64) {
            let mut top = (0usize, 0.0f64);
            for (k, &(di, gi, iou)) in pairs.iter().enumerate().skip(from) {
                if used_d & (1 << di) != 0 || used_g & (1 << gi) != 0 {
                    continue;
                }
                let (n, total) = best(pairs, used_d | (1 << di), used_g | (1 << gi), k + 1);
                let cand = (n + 1, total + iou);
                if cand.0 > top.0 || (cand.0 == top.0 && cand.1 > top.1) {
                    top = cand;
                }
            }
            top
        }
        let (oracle_pairs, _) = best(&admissible, 0, 0, 0);

        assert_eq!(
            got.pairs.len(),
            oracle_pairs,
            "scene {scene}: greedy {} vs oracle {oracle_pairs}",
            got.pairs.len()
        );
        assert_eq!(got.fp_ids.len(), dets.len() - oracle_pairs, "scene {scene}");
        assert_eq!(got.fn_ids.len(), gts.len() - oracle_pairs, "scene {scene}");
    }
}
