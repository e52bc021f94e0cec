//! Run all five post-processing methods over one case and compare what each
//! removes.
//!
//! ```sh
//! cargo run --example filter_methods
//! ```

use aneurysm_postproc::filter::{apply_method, threshold_detections, FilterParams, Method};
use aneurysm_postproc::phantom::{generate_phantom, PhantomSpec, PlantedKind};
use aneurysm_postproc::pipeline::PipelineParams;

fn main() -> aneurysm_postproc::Result<()> {
    let case = generate_phantom(&PhantomSpec::standard(), 20)?;
    let params = PipelineParams::default();
    let masks = case.build_masks(&params)?;

    let dets = threshold_detections(&case.detections, params.confidence_threshold)?;
    println!(
        "{} detections, {} above the {} confidence threshold:",
        case.detections.len(),
        dets.len(),
        params.confidence_threshold
    );
    for d in &dets {
        println!("  {:<22} conf {:.2}  planted as {:?}", d.id, d.confidence, case.planted_labels[&d.id]);
    }

    let filter_params = FilterParams::default();
    for method in Method::ALL {
        let result = apply_method(&dets, &masks, method, &filter_params);
        println!(
            "\n{method}: kept {}, removed {}",
            result.kept_count(),
            result.removed_count()
        );
        for r in result.removed() {
            println!(
                "  removed {:<22} {}",
                r.detection.id,
                r.reason.as_deref().unwrap_or("-")
            );
        }
    }

    // combined methods are exact unions of their parts
    let ids = |m| {
        apply_method(&dets, &masks, m, &filter_params)
            .removed_ids()
            .into_iter()
            .collect::<std::collections::BTreeSet<_>>()
    };
    assert_eq!(ids(Method::M4), &ids(Method::M1) | &ids(Method::M2));
    assert_eq!(ids(Method::M5), &ids(Method::M1) | &ids(Method::M3));
    println!("\nverified: M4 = M1 ∪ M2 and M5 = M1 ∪ M3 as removed-id sets");

    // and nothing planted as a true aneurysm is lost to method 5
    let removed5 = ids(Method::M5);
    for d in &dets {
        if case.planted_labels[&d.id] == PlantedKind::TruePositive {
            assert!(!removed5.contains(&d.id));
        }
    }
    println!("verified: method 5 keeps every planted true positive");
    Ok(())
}
