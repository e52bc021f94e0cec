//! Build the four filtering masks for a synthetic case and inspect them.
//!
//! ```sh
//! cargo run --example build_masks
//! ```

use aneurysm_postproc::phantom::{generate_phantom, PhantomSpec};
use aneurysm_postproc::pipeline::PipelineParams;

fn main() -> aneurysm_postproc::Result<()> {
    let case = generate_phantom(&PhantomSpec::standard(), 42)?;
    println!("case grid: {}", case.geometry());
    println!(
        "inputs: brain_seg {} voxels, artery {}, vein {}",
        case.brain_seg.count_set(),
        case.artery.count_set(),
        case.vein.count_set()
    );

    let params = PipelineParams::default();
    println!(
        "params: brain dilation {} mm, cvs expansion {} mm",
        params.brain_dilation_mm, params.cvs_expand_mm
    );

    let masks = case.build_masks(&params)?;
    println!(
        "cvs region box: {:?} -> {:?} ({} voxels)",
        masks.cvs_region_box.min(),
        masks.cvs_region_box.max(),
        masks.cvs_region_box.volume()
    );
    println!("derived masks:");
    println!("  brain      {:>8} voxels (dilated segmentation + region box)", masks.brain.count_set());
    println!("  artery     {:>8} voxels (passed through)", masks.artery.count_set());
    println!("  cvs        {:>8} voxels (vein inside the region box)", masks.cvs.count_set());
    println!("  vein_final {:>8} voxels (vein minus cvs)", masks.vein_final.count_set());

    // the subtraction partitions the vein input exactly
    assert_eq!(
        masks.vein_final.count_set() + masks.cvs.count_set(),
        case.vein.count_set()
    );
    masks
        .verify_invariants(true)
        .expect("mask set invariants hold");
    println!("invariants verified: vein partitioned, brain covers the region box");
    Ok(())
}
