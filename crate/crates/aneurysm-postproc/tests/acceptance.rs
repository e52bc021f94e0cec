//! Acceptance suite: one test per release criterion, each printing a PASS
//! line once its checks hold at the stated tolerance.
//!
//! Run with `cargo test --test acceptance -- --nocapture` to see the lines.

use std::alloc::{GlobalAlloc, Layout, System};
use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::process::Command;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use aneurysm_postproc::boxes::VoxelBox;
use aneurysm_postproc::eval::{
    compute_metrics, match_detections, reduction_percentage, round_1dp, round_2dp,
    GroundTruthBox, MatchPair, Matching,
};
use aneurysm_postproc::filter::{
    apply_method, decide_removal, threshold_detections, Detection, FilterParams, LogRecord,
    Method, OverlapProfile,
};
use aneurysm_postproc::grid::{BinaryMask, GridGeometry, MaskOp};
use aneurysm_postproc::io::{case as case_io, tables};
use aneurysm_postproc::phantom::oracle::{oracle_box_overlap, oracle_dilate};
use aneurysm_postproc::phantom::{generate_phantom, DecoyCategory, PhantomSpec, PlantedKind};
use aneurysm_postproc::pipeline::{build_cvs_mask, build_cvs_region_box, PipelineParams};
use aneurysm_postproc::report::{build_report, CaseRunData, MethodRun};
use aneurysm_postproc::{Affine4, WorldBox};

/// Heap accounting for the performance criterion: some sandboxed kernels do
/// not expose VmHWM, so the binary tracks its own peak allocation.
struct PeakAllocator {
    current: AtomicUsize,
    peak: AtomicUsize,
}

unsafe impl GlobalAlloc for PeakAllocator {
    unsafe fn alloc(&self, layout: Layout) -> *mut u8 {
        let p = System.alloc(layout);
        if !p.is_null() {
            let now = self.current.fetch_add(layout.size(), Ordering::Relaxed) + layout.size();
            self.peak.fetch_max(now, Ordering::Relaxed);
        }
        p
    }

    unsafe fn dealloc(&self, ptr: *mut u8, layout: Layout) {
        System.dealloc(ptr, layout);
        self.current.fetch_sub(layout.size(), Ordering::Relaxed);
    }
}

#[global_allocator]
static PEAK_ALLOC: PeakAllocator = PeakAllocator {
    current: AtomicUsize::new(0),
    peak: AtomicUsize::new(0),
};

fn random_grid(rng: &mut ChaCha8Rng, max_dim: usize) -> Arc<GridGeometry> {
    let dims = [
        rng.gen_range(1..=max_dim),
        rng.gen_range(1..=max_dim),
        rng.gen_range(1..=max_dim),
    ];
    Arc::new(GridGeometry::axis_aligned(dims, [1.0; 3], [0.0; 3]).unwrap())
}

fn random_mask(rng: &mut ChaCha8Rng, geometry: Arc<GridGeometry>, density: f64) -> BinaryMask {
    let occupancy = (0..geometry.voxel_count())
        .map(|_| rng.gen_bool(density))
        .collect();
    BinaryMask::new(geometry, occupancy).unwrap()
}

#[test]
fn acceptance_oracle_equivalence_overlap() {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    for trial in 0..1000 {
        let g = random_grid(&mut rng, 32);
        let density = rng.gen_range(0.05..0.6);
        let mask = random_mask(&mut rng, g.clone(), density);
        let dims = g.dims();
        let bbox = if trial % 10 == 0 {
            VoxelBox::empty()
        } else {
            let mut min = [0i64; 3];
            let mut max = [0i64; 3];
            for a in 0..3 {
                min[a] = rng.gen_range(-8..dims[a] as i64 + 8);
                max[a] = min[a] + rng.gen_range(1..=12);
            }
            VoxelBox::new(min, max).unwrap()
        };
        let fast = mask.box_overlap(&bbox);
        let reference = oracle_box_overlap(&bbox, &mask);
        assert_eq!(fast, reference, "trial {trial}: box {bbox:?} on {}", g);
    }
    let elapsed = started.elapsed();
    assert!(elapsed.as_secs() < 60, "took {elapsed:?}, budget 60 s");
    println!("acceptance: oracle equivalence (overlap, 1000 randomized pairs) ... PASS ({elapsed:?})");
}

#[test]
fn acceptance_oracle_equivalence_dilation() {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    for trial in 0..100 {
        let dims = [
            rng.gen_range(1..=32),
            rng.gen_range(1..=32),
            rng.gen_range(1..=32),
        ];
        let spacing = rng.gen_range(0.4..2.0);
        let g = Arc::new(GridGeometry::axis_aligned(dims, [spacing; 3], [0.0; 3]).unwrap());
        let density = rng.gen_range(0.02..0.4);
        let mask = random_mask(&mut rng, g, density);
        for radius_mm in [0.0, spacing, 2.5 * spacing] {
            let fast = aneurysm_postproc::dilate_mask(&mask, radius_mm).unwrap();
            let reference = oracle_dilate(&mask, radius_mm);
            assert_eq!(
                fast.occupancy(),
                reference.occupancy(),
                "trial {trial}: dims {dims:?} spacing {spacing} radius {radius_mm}"
            );
        }
    }
    let elapsed = started.elapsed();
    assert!(elapsed.as_secs() < 120, "took {elapsed:?}, budget 120 s");
    println!("acceptance: oracle equivalence (dilation, 100 randomized masks) ... PASS ({elapsed:?})");
}

#[test]
fn acceptance_filter_algebra() {
    let params = FilterParams::default();

    // 10^4 randomized profiles: combined methods are exact unions, method 3
    // removals imply method 2 removals
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    for _ in 0..10_000 {
        let p = OverlapProfile {
            brain: rng.gen_range(0..4),
            artery: rng.gen_range(0..6),
            vein: rng.gen_range(0..6),
            cvs: rng.gen_range(0..3),
            box_volume: 1000,
        };
        let d = |m| decide_removal(&p, m, &params).0;
        assert_eq!(d(Method::M4), d(Method::M1) || d(Method::M2), "{p:?}");
        assert_eq!(d(Method::M5), d(Method::M1) || d(Method::M3), "{p:?}");
        assert!(!d(Method::M3) || d(Method::M2), "{p:?}");
    }

    // 20 phantom cases: the same algebra over real mask overlaps, as id sets,
    // plus idempotence of every method
    for seed in 0..20 {
        let case = generate_phantom(&PhantomSpec::standard(), seed).unwrap();
        let masks = case.build_masks(&PipelineParams::default()).unwrap();
        let ids = |m: Method| -> BTreeSet<String> {
            apply_method(&case.detections, &masks, m, &params)
                .removed_ids()
                .into_iter()
                .collect()
        };
        let (r1, r2, r3, r4, r5) = (
            ids(Method::M1),
            ids(Method::M2),
            ids(Method::M3),
            ids(Method::M4),
            ids(Method::M5),
        );
        assert_eq!(r4, &r1 | &r2, "seed {seed}: M4 != M1 ∪ M2");
        assert_eq!(r5, &r1 | &r3, "seed {seed}: M5 != M1 ∪ M3");
        assert!(r3.is_subset(&r2), "seed {seed}: M3 ⊄ M2");

        for m in Method::ALL {
            let first = apply_method(&case.detections, &masks, m, &params);
            let again = apply_method(&first.kept_detections(), &masks, m, &params);
            assert_eq!(again.removed_count(), 0, "seed {seed}: {m} not idempotent");
            assert_eq!(again.kept_count(), first.kept_count());
        }
    }
    println!("acceptance: filter algebra (10^4 profiles + 20 phantom cases) ... PASS");
}

#[test]
fn acceptance_sensitivity_preservation() {
    let params = FilterParams::default();
    let pipeline = PipelineParams::default();

    // standard phantoms: ground truth is artery-dominant and intracranial,
    // so methods 1, 3, 5 must not lose a single matched TP
    for seed in 0..20 {
        let case = generate_phantom(&PhantomSpec::standard(), seed).unwrap();
        let masks = case.build_masks(&pipeline).unwrap();
        let dets = threshold_detections(&case.detections, pipeline.confidence_threshold).unwrap();
        let baseline = match_detections(&dets, &case.ground_truth, 0.3).unwrap();
        assert_eq!(
            baseline.tp() as usize,
            case.ground_truth.len(),
            "seed {seed}: every planted gt should be matched at baseline"
        );
        let tp_ids: BTreeSet<&str> =
            baseline.pairs.iter().map(|p| p.detection_id.as_str()).collect();

        for m in [Method::M1, Method::M3, Method::M5] {
            let result = apply_method(&dets, &masks, m, &params);
            let removed_tps: Vec<_> = result
                .removed()
                .filter(|r| tp_ids.contains(r.detection.id.as_str()))
                .map(|r| r.detection.id.clone())
                .collect();
            assert!(
                removed_tps.is_empty(),
                "seed {seed}: {m} removed matched TPs {removed_tps:?}"
            );
            let rematch =
                match_detections(&result.kept_detections(), &case.ground_truth, 0.3).unwrap();
            assert_eq!(rematch.tp(), baseline.tp(), "seed {seed}: {m} changed TP");
        }
    }

    // vein-touching variant: the mixed gt detection is lost to methods 2 and
    // 4 only, mirroring the TP drop of the vein-only rules
    for seed in 0..20 {
        let case = generate_phantom(&PhantomSpec::standard_vein_touching(), seed).unwrap();
        let masks = case.build_masks(&pipeline).unwrap();
        let dets = threshold_detections(&case.detections, pipeline.confidence_threshold).unwrap();
        let baseline = match_detections(&dets, &case.ground_truth, 0.3).unwrap();
        let n_gt = case.ground_truth.len() as u64;
        assert_eq!(baseline.tp(), n_gt);

        // exactly the vein-touching ground truth loses its detection
        let vein_touching: BTreeSet<String> = case
            .ground_truth
            .iter()
            .filter(|g| masks.vein_final.box_overlap(&g.bbox) >= 1)
            .map(|g| format!("det-{}", g.id))
            .collect();
        assert!(!vein_touching.is_empty(), "variant must plant a vein-toucher");

        for m in Method::ALL {
            let result = apply_method(&dets, &masks, m, &params);
            let removed: BTreeSet<String> = result.removed_ids().into_iter().collect();
            let removed_tp: BTreeSet<String> = removed
                .iter()
                .filter(|id| id.starts_with("det-gt-"))
                .cloned()
                .collect();
            let rematch =
                match_detections(&result.kept_detections(), &case.ground_truth, 0.3).unwrap();
            match m {
                Method::M2 | Method::M4 => {
                    assert_eq!(
                        removed_tp, vein_touching,
                        "seed {seed}: {m} should remove exactly the vein-touching gt"
                    );
                    assert_eq!(rematch.tp(), n_gt - vein_touching.len() as u64);
                }
                _ => {
                    assert!(removed_tp.is_empty(), "seed {seed}: {m} removed {removed_tp:?}");
                    assert_eq!(rematch.tp(), n_gt);
                }
            }
        }
    }
    println!("acceptance: sensitivity preservation (M1/M3/M5 lossless, M2/M4 lose vein-touching TPs) ... PASS");
}

#[test]
fn acceptance_metrics_arithmetic() {
    let fabricate = |tp: usize, fp: usize, fn_n: usize| Matching {
        pairs: (0..tp)
            .map(|i| MatchPair {
                detection_id: format!("d{i}"),
                ground_truth_id: format!("g{i}"),
                iou: 1.0,
            })
            .collect(),
        fp_ids: (0..fp).map(|i| format!("f{i}")).collect(),
        fn_ids: (0..fn_n).map(|i| format!("n{i}")).collect(),
    };

    // the four FP/case figures from integer counts at 2-decimal rounding
    for (fp, cases, expect) in [
        (126u64, 143u64, 0.88),
        (182, 143, 1.27),
        (37, 143, 0.26),
        (88, 143, 0.62),
    ] {
        let m = compute_metrics(&[fabricate(0, fp as usize, 0)], cases).unwrap();
        assert_eq!(
            round_2dp(m.fp_per_case),
            expect,
            "{fp} FPs over {cases} cases"
        );
    }

    // TP + FN = 218 in every column (FN is defined as total GT minus TP)
    for (tp, fn_n) in [(139, 79), (129, 89), (179, 39), (169, 49)] {
        let m = compute_metrics(&[fabricate(tp, 0, fn_n)], 143).unwrap();
        assert_eq!(m.tp + m.fn_count, 218, "column ({tp}, {fn_n})");
    }
    println!("acceptance: metrics arithmetic (FP/case and TP+FN totals) ... PASS");
}

/// Fabricates a full multi-case run: `n_cases` cases, 218 ground-truth boxes,
/// `tp` of them detected, `fp` false positives of which `removed` carry an
/// outside-the-brain profile and are removed by method 5.
fn fabricate_run(n_cases: usize, total_gt: usize, tp: usize, fp: usize, removed: usize) -> Vec<CaseRunData> {
    assert!(removed <= fp);
    let tp_profile = OverlapProfile {
        brain: 50,
        artery: 5,
        vein: 0,
        cvs: 0,
        box_volume: 64,
    };
    let kept_fp_profile = OverlapProfile {
        brain: 9,
        artery: 3,
        vein: 0,
        cvs: 0,
        box_volume: 64,
    };
    let removed_fp_profile = OverlapProfile {
        brain: 0,
        artery: 0,
        vein: 0,
        cvs: 0,
        box_volume: 64,
    };

    let mut cases: Vec<CaseRunData> = (0..n_cases)
        .map(|i| CaseRunData {
            case_id: format!("case-{i:03}"),
            truth: Vec::new(),
            baseline: Vec::new(),
            methods: BTreeMap::new(),
        })
        .collect();
    let mut logs: Vec<Vec<LogRecord>> = vec![Vec::new(); n_cases];
    let mut kept: Vec<Vec<Detection>> = vec![Vec::new(); n_cases];

    // ground truth round-robin; the first `tp` get an exactly matching
    // detection, the rest stay undetected
    for g in 0..total_gt {
        let ci = g % n_cases;
        let slot = cases[ci].truth.len() as i64;
        let bbox = VoxelBox::new(
            [slot * 100, 0, 0],
            [slot * 100 + 4, 4, 4],
        )
        .unwrap();
        let gt_id = format!("g{g}");
        cases[ci]
            .truth
            .push(GroundTruthBox::new(&gt_id, bbox).unwrap());
        if g < tp {
            let det_id = format!("d{g}");
            let det = Detection::new(&det_id, bbox, 0.95).unwrap();
            cases[ci].baseline.push(det.clone());
            kept[ci].push(det);
            logs[ci].push(LogRecord {
                case_id: cases[ci].case_id.clone(),
                detection_id: det_id,
                method: Method::M5,
                removed: false,
                reason: None,
                profile: tp_profile,
            });
        }
    }

    // false positives far away from every ground-truth box
    for f in 0..fp {
        let ci = f % n_cases;
        let det_id = format!("fp{f}");
        let bbox = VoxelBox::new(
            [1000 + f as i64 * 10, 1000, 1000],
            [1004 + f as i64 * 10, 1004, 1004],
        )
        .unwrap();
        let det = Detection::new(&det_id, bbox, 0.9).unwrap();
        cases[ci].baseline.push(det.clone());
        let is_removed = f < removed;
        if !is_removed {
            kept[ci].push(det);
        }
        logs[ci].push(LogRecord {
            case_id: cases[ci].case_id.clone(),
            detection_id: det_id,
            method: Method::M5,
            removed: is_removed,
            reason: is_removed.then(|| "M5:brain_overlap=0".to_string()),
            profile: if is_removed {
                removed_fp_profile
            } else {
                kept_fp_profile
            },
        });
    }

    for (ci, case) in cases.iter_mut().enumerate() {
        // every logged decision must replay exactly
        for rec in &logs[ci] {
            let (is_removed, reason) =
                decide_removal(&rec.profile, rec.method, &FilterParams::default());
            assert_eq!(is_removed, rec.removed);
            assert_eq!(reason, rec.reason);
        }
        case.methods.insert(
            Method::M5,
            MethodRun {
                kept: kept[ci].clone(),
                log: logs[ci].clone(),
            },
        );
    }
    cases
}

#[test]
fn acceptance_reduction_percentages() {
    // key figures straight from the counts
    assert_eq!(round_1dp(reduction_percentage(89, 126).unwrap().unwrap()), 70.6);
    assert_eq!(round_1dp(reduction_percentage(94, 182).unwrap().unwrap()), 51.6);

    // the same figures through the full report builder, checking the
    // detection grid and category grid stay consistent
    for (fp, tp, removed, expect_pct, expect_fp_per_case) in [
        (126u64, 139u64, 89u64, 70.6, 0.88),
        (182, 179, 94, 51.6, 1.27),
    ] {
        let cases = fabricate_run(143, 218, tp as usize, fp as usize, removed as usize);
        let report = build_report(&cases, 0.3).unwrap();
        assert!(
            report.consistency_failures.is_empty(),
            "{:?}",
            report.consistency_failures
        );
        assert_eq!(report.baseline.fp, fp);
        assert_eq!(report.baseline.tp, tp);
        assert_eq!(round_2dp(report.baseline.fp_per_case), expect_fp_per_case);
        assert_eq!(report.baseline.tp + report.baseline.fn_count, 218);

        let m5 = &report.methods[0];
        assert_eq!(m5.method, Method::M5);
        assert_eq!(m5.counts.fp, fp - removed);
        assert_eq!(m5.removed_fp_total, removed);
        assert_eq!(m5.counts.tp + m5.counts.fn_count, 218);
        // Table-2 column difference equals the Table-3/4 removed total
        assert_eq!(report.baseline.fp - m5.counts.fp, m5.removed_fp_total);
        let by_cat: u64 = m5.removed_fp_by_category.values().sum();
        assert_eq!(by_cat, removed);
        assert_eq!(round_1dp(m5.reduction_pct.unwrap()), expect_pct);
    }

    // the rendered report prints the removed count and percentage
    let cases = fabricate_run(143, 218, 139, 126, 89);
    let rendered = tables::render_report(&build_report(&cases, 0.3).unwrap());
    assert!(rendered.contains("89"), "{rendered}");
    assert!(rendered.contains("70.6"), "{rendered}");
    println!("acceptance: reduction percentages and table consistency ... PASS");
}

#[test]
fn acceptance_mask_set_invariants() {
    // all standard phantoms
    for seed in 0..20 {
        let case = generate_phantom(&PhantomSpec::standard(), seed).unwrap();
        let masks = case.build_masks(&PipelineParams::default()).unwrap();
        // bit-identical determinism of the whole construction
        let again = case.build_masks(&PipelineParams::default()).unwrap();
        assert_eq!(masks.brain, again.brain);
        assert_eq!(masks.vein_final, again.vein_final);
        assert_eq!(masks.cvs, again.cvs);
        assert_eq!(masks.cvs_region_box, again.cvs_region_box);
        masks.verify_invariants(true).unwrap();
        assert!(masks.cvs.is_subset_of(&case.vein).unwrap(), "seed {seed}");
        assert!(!masks.vein_final.intersects(&masks.cvs).unwrap());
        let reunion = masks.vein_final.combine(&masks.cvs, MaskOp::Union).unwrap();
        assert_eq!(reunion, case.vein, "seed {seed}: vein partition broken");
    }

    // 100 randomized inputs: random masks, template boxes, and axis-aligned
    // transforms, with cvs monotonicity in the expansion margin
    let mut rng = ChaCha8Rng::seed_from_u64(808);
    for trial in 0..100 {
        let g = random_grid(&mut rng, 24);
        let brain_seg = random_mask(&mut rng, g.clone(), 0.2);
        let artery = random_mask(&mut rng, g.clone(), 0.1);
        let vein = random_mask(&mut rng, g.clone(), 0.15);
        let dims = g.dims();
        let mut lo = [0.0; 3];
        let mut hi = [0.0; 3];
        for a in 0..3 {
            lo[a] = rng.gen_range(-(dims[a] as f64)..dims[a] as f64);
            hi[a] = lo[a] + rng.gen_range(0.5..dims[a] as f64 + 2.0);
        }
        let template = WorldBox::new(lo, hi).unwrap();
        let scale = [
            rng.gen_range(0.6..1.8),
            rng.gen_range(0.6..1.8),
            rng.gen_range(0.6..1.8),
        ];
        let shift = [
            rng.gen_range(-10.0..10.0),
            rng.gen_range(-10.0..10.0),
            rng.gen_range(-10.0..10.0),
        ];
        let transform = Affine4::scale_translation(scale, shift).unwrap();

        let expand = rng.gen_range(0.0..4.0);
        let params = PipelineParams {
            cvs_expand_mm: expand,
            ..PipelineParams::default()
        };
        let masks = aneurysm_postproc::build_mask_set(
            &brain_seg, &artery, &vein, &template, &transform, &params,
        )
        .unwrap();
        masks.verify_invariants(true).unwrap();
        assert!(masks.cvs.is_subset_of(&vein).unwrap(), "trial {trial}");
        let reunion = masks.vein_final.combine(&masks.cvs, MaskOp::Union).unwrap();
        assert_eq!(reunion, vein, "trial {trial}");

        // growing the expansion can only grow the cvs mask
        let wider = build_cvs_region_box(&template, &transform, expand + 1.7, &g).unwrap();
        let cvs_wider = build_cvs_mask(&wider, &vein);
        assert!(
            masks.cvs.is_subset_of(&cvs_wider).unwrap(),
            "trial {trial}: cvs shrank when the margin grew"
        );
    }
    println!("acceptance: mask-set invariant suite (20 phantoms + 100 randomized inputs) ... PASS");
}

fn run_cli(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_aneurysm-postproc"))
        .args(args)
        .output()
        .expect("spawn CLI")
}

fn run_cli_ok(args: &[&str]) {
    let out = run_cli(args);
    assert!(
        out.status.success(),
        "command {:?} failed\nstdout: {}\nstderr: {}",
        args,
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn acceptance_end_to_end_phantom_batch() {
    let tmp = tempfile::tempdir().unwrap();
    let root = tmp.path();
    let spec_path = root.join("spec.json");
    std::fs::write(
        &spec_path,
        serde_json::to_string_pretty(&PhantomSpec::standard()).unwrap(),
    )
    .unwrap();

    let n_cases = 20;
    let mut run_dirs = Vec::new();
    for seed in 0..n_cases {
        let case_dir = root.join(format!("cases/case-{seed:02}"));
        let masks_dir = root.join(format!("masks/case-{seed:02}"));
        let run_dir = root.join(format!("runs/case-{seed:02}"));
        std::fs::create_dir_all(&run_dir).unwrap();

        run_cli_ok(&[
            "phantom",
            "--spec",
            spec_path.to_str().unwrap(),
            "--seed",
            &seed.to_string(),
            "--out",
            case_dir.to_str().unwrap(),
        ]);
        run_cli_ok(&[
            "build-masks",
            "--case",
            case_dir.to_str().unwrap(),
            "--template-cvs",
            case_dir.join("template_cvs.json").to_str().unwrap(),
            "--out",
            masks_dir.to_str().unwrap(),
        ]);
        for method in 1..=5u8 {
            let mut args = vec![
                "filter".to_string(),
                "--case".into(),
                case_dir.to_str().unwrap().into(),
                "--masks".into(),
                masks_dir.to_str().unwrap().into(),
                "--method".into(),
                method.to_string(),
                "--out".into(),
                run_dir
                    .join(format!("method{method}.json"))
                    .to_str()
                    .unwrap()
                    .into(),
                "--log".into(),
                run_dir
                    .join(format!("log_method{method}.jsonl"))
                    .to_str()
                    .unwrap()
                    .into(),
            ];
            if method == 5 {
                args.push("--baseline-out".into());
                args.push(run_dir.join("none.json").to_str().unwrap().into());
            }
            let args: Vec<&str> = args.iter().map(String::as_str).collect();
            run_cli_ok(&args);
        }
        std::fs::copy(case_dir.join("truth.json"), run_dir.join("truth.json")).unwrap();
        run_cli_ok(&[
            "evaluate",
            "--pred",
            run_dir.join("method5.json").to_str().unwrap(),
            "--truth",
            case_dir.join("truth.json").to_str().unwrap(),
            "--out",
            run_dir.join("metrics_m5.json").to_str().unwrap(),
        ]);
        run_dirs.push(run_dir);
    }

    // every planted detection behaves per its category's method signature
    let mut checked_decoys = 0usize;
    let mut present_by_category: BTreeMap<DecoyCategory, usize> = BTreeMap::new();
    for seed in 0..n_cases {
        let case_dir = root.join(format!("cases/case-{seed:02}"));
        let run_dir = root.join(format!("runs/case-{seed:02}"));
        let labels =
            case_io::read_planted_labels(&case_dir.join("planted_labels.json")).unwrap();
        let detections = aneurysm_postproc::io::detections::read_doc(
            &case_dir.join("detections.json"),
        )
        .unwrap()
        .to_detections()
        .unwrap();

        let mut removed_by: BTreeMap<Method, BTreeSet<String>> = BTreeMap::new();
        let mut logged_ids: BTreeSet<String> = BTreeSet::new();
        for m in Method::ALL {
            let log = tables::read_log(
                &run_dir.join(format!("log_method{}.jsonl", m.number())),
            )
            .unwrap();
            for rec in &log {
                logged_ids.insert(rec.detection_id.clone());
                if rec.removed {
                    removed_by.entry(m).or_default().insert(rec.detection_id.clone());
                }
            }
        }

        for det in &detections {
            let kind = labels[&det.id];
            if det.confidence < 0.8 {
                assert!(
                    !logged_ids.contains(&det.id),
                    "case {seed}: sub-threshold {} leaked into the filters",
                    det.id
                );
                continue;
            }
            match kind {
                PlantedKind::TruePositive => {
                    for m in [Method::M1, Method::M3, Method::M5] {
                        assert!(
                            !removed_by.get(&m).is_some_and(|s| s.contains(&det.id)),
                            "case {seed}: {m} removed planted TP {}",
                            det.id
                        );
                    }
                }
                PlantedKind::Decoy(cat) => {
                    checked_decoys += 1;
                    *present_by_category.entry(cat).or_default() += 1;
                    let expected: BTreeSet<Method> =
                        cat.expected_removals().iter().copied().collect();
                    for m in Method::ALL {
                        let was_removed =
                            removed_by.get(&m).is_some_and(|s| s.contains(&det.id));
                        assert_eq!(
                            was_removed,
                            expected.contains(&m),
                            "case {seed}: decoy {} ({cat:?}) vs {m}",
                            det.id
                        );
                    }
                }
            }
        }
    }
    assert!(checked_decoys >= 50, "only {checked_decoys} decoys crossed the threshold");
    for cat in [
        DecoyCategory::Extracranial,
        DecoyCategory::VeinDominant,
        DecoyCategory::VeinArteryTie,
        DecoyCategory::Arterial,
        DecoyCategory::CvsOverlap,
    ] {
        assert!(
            present_by_category.get(&cat).copied().unwrap_or(0) > 0,
            "no {cat:?} decoy survived thresholding in any case"
        );
    }

    // the aggregated report over all 20 runs is internally consistent
    let mut args: Vec<String> = vec!["report".into(), "--runs".into()];
    args.extend(run_dirs.iter().map(|d| d.to_str().unwrap().to_string()));
    args.push("--out".into());
    args.push(root.join("report").to_str().unwrap().to_string());
    let arg_refs: Vec<&str> = args.iter().map(String::as_str).collect();
    run_cli_ok(&arg_refs);

    let report_json = std::fs::read_to_string(root.join("report/report.json")).unwrap();
    let report: serde_json::Value = serde_json::from_str(&report_json).unwrap();
    assert_eq!(report["n_cases"], 20);
    assert_eq!(
        report["consistency_failures"].as_array().unwrap().len(),
        0,
        "{report_json}"
    );
    assert!(Path::new(&root.join("report/detection_table.csv")).is_file());
    assert!(Path::new(&root.join("report/fp_categories.csv")).is_file());
    println!("acceptance: end-to-end phantom batch (20 cases, full CLI path, planted signatures 100%) ... PASS");
}

#[test]
fn acceptance_performance_large_grid() {
    let dims = [512, 512, 400];
    let spec = PhantomSpec::performance(dims, [0.5, 0.5, 0.5]);
    let case = generate_phantom(&spec, 99).unwrap();

    // 50 detection boxes scattered over the grid
    let mut rng = ChaCha8Rng::seed_from_u64(909);
    let dets: Vec<Detection> = (0..50)
        .map(|i| {
            let mut min = [0i64; 3];
            let mut max = [0i64; 3];
            for a in 0..3 {
                min[a] = rng.gen_range(0..dims[a] as i64 - 32);
                max[a] = min[a] + rng.gen_range(8..32);
            }
            Detection::new(format!("d{i}"), VoxelBox::new(min, max).unwrap(), 0.9).unwrap()
        })
        .collect();

    let started = Instant::now();
    let masks = case.build_masks(&PipelineParams::default()).unwrap();
    let result = apply_method(&dets, &masks, Method::M5, &FilterParams::default());
    let elapsed = started.elapsed();

    assert_eq!(result.kept_count() + result.removed_count(), 50);
    assert!(
        elapsed.as_secs_f64() <= 30.0,
        "mask build + M5 filtering took {elapsed:?}, budget 30 s"
    );

    // peak heap from our own accounting, plus the kernel's high-water mark
    // when the platform exposes one
    let heap_peak_gb = PEAK_ALLOC.peak.load(Ordering::Relaxed) as f64 / f64::powi(1024.0, 3);
    assert!(
        heap_peak_gb <= 4.0,
        "peak heap {heap_peak_gb:.2} GB exceeds 4 GB"
    );
    let vm_hwm_gb = std::fs::read_to_string("/proc/self/status")
        .ok()
        .and_then(|s| {
            s.lines()
                .find(|l| l.starts_with("VmHWM:"))
                .and_then(|l| l.split_whitespace().nth(1).map(str::to_string))
        })
        .and_then(|v| v.parse::<u64>().ok())
        .map(|kb| kb as f64 / (1024.0 * 1024.0));
    if let Some(gb) = vm_hwm_gb {
        assert!(gb <= 4.0, "VmHWM {gb:.2} GB exceeds 4 GB");
    }

    println!(
        "acceptance: performance on 512x512x400 ... PASS ({elapsed:?}, peak heap {heap_peak_gb:.2} GB)"
    );
}
