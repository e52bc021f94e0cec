//! Match detections against ground truth and compute metrics, before and
//! after filtering.
//!
//! ```sh
//! cargo run --example evaluate_detections
//! ```

use aneurysm_postproc::eval::{
    categorize_fp, compute_metrics, match_detections, reduction_percentage, round_1dp, round_2dp,
};
use aneurysm_postproc::filter::{apply_method, threshold_detections, FilterParams, Method};
use aneurysm_postproc::phantom::{generate_phantom, PhantomSpec};
use aneurysm_postproc::pipeline::PipelineParams;

fn main() -> aneurysm_postproc::Result<()> {
    let case = generate_phantom(&PhantomSpec::standard(), 20)?;
    let params = PipelineParams::default();
    let masks = case.build_masks(&params)?;
    let dets = threshold_detections(&case.detections, params.confidence_threshold)?;

    // unfiltered baseline
    let baseline = match_detections(&dets, &case.ground_truth, 0.3)?;
    let metrics = compute_metrics(std::slice::from_ref(&baseline), 1)?;
    println!(
        "baseline: TP {} FP {} FN {} | FP/case {:.2} | sensitivity {:.3}",
        metrics.tp,
        metrics.fp,
        metrics.fn_count,
        round_2dp(metrics.fp_per_case),
        metrics.sensitivity
    );
    for fp_id in &baseline.fp_ids {
        let det = dets.iter().find(|d| d.id == *fp_id).unwrap();
        println!(
            "  FP {:<22} categorized as {}",
            fp_id,
            categorize_fp(&det.bbox, &masks).name()
        );
    }

    // after method 5
    let kept = apply_method(&dets, &masks, Method::M5, &FilterParams::default())
        .kept_detections();
    let filtered = match_detections(&kept, &case.ground_truth, 0.3)?;
    let after = compute_metrics(std::slice::from_ref(&filtered), 1)?;
    println!(
        "after M5: TP {} FP {} FN {} | FP/case {:.2} | sensitivity {:.3}",
        after.tp,
        after.fp,
        after.fn_count,
        round_2dp(after.fp_per_case),
        after.sensitivity
    );

    let removed = metrics.fp - after.fp;
    if let Some(pct) = reduction_percentage(removed, metrics.fp)? {
        println!(
            "method 5 removed {removed}/{} false positives ({:.1}%) at unchanged sensitivity",
            metrics.fp,
            round_1dp(pct)
        );
    }
    assert_eq!(after.tp, metrics.tp, "sensitivity must be preserved");
    Ok(())
}
