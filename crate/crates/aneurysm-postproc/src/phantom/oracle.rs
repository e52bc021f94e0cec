//! Brute-force reference implementations.
//!
//! These are the ground truth the fast mask operations are tested against.
//! They stay deliberately naive — straight nested loops, no separability, no
//! early exits — and share no code with the optimized paths.

use crate::boxes::VoxelBox;
use crate::grid::BinaryMask;

/// Counts set voxels inside the box by walking every index in the box range
/// and skipping indices that fall off the grid.
pub fn oracle_box_overlap(b: &VoxelBox, mask: &BinaryMask) -> u64 {
    if b.is_empty() {
        return 0;
    }
    let dims = mask.geometry().dims();
    let occ = mask.occupancy();
    let mut count = 0u64;
    for z in b.min()[2]..b.max()[2] {
        for y in b.min()[1]..b.max()[1] {
            for x in b.min()[0]..b.max()[0] {
                if x < 0 || y < 0 || z < 0 {
                    continue;
                }
                let (x, y, z) = (x as usize, y as usize, z as usize);
                if x >= dims[0] || y >= dims[1] || z >= dims[2] {
                    continue;
                }
                if occ[x + dims[0] * (y + dims[1] * z)] {
                    count += 1;
                }
            }
        }
    }
    count
}

/// Dilation by full neighborhood scan: each output voxel looks at every input
/// voxel within the per-axis radius box. O(n * r^3).
pub fn oracle_dilate(mask: &BinaryMask, radius_mm: f64) -> BinaryMask {
    assert!(radius_mm >= 0.0, "oracle_dilate needs a non-negative radius");
    let spacing = mask.geometry().spacing_mm();
    // same ceil-with-snap conversion rule as the fast path, restated here so
    // the oracle does not call into it
    let mut radius = [0i64; 3];
    for a in 0..3 {
        let q = radius_mm / spacing[a];
        let near = q.round();
        let q = if (q - near).abs() <= 1e-9 * q.abs().max(1.0) { near } else { q };
        radius[a] = q.ceil() as i64;
    }

    let dims = mask.geometry().dims();
    let (nx, ny, nz) = (dims[0] as i64, dims[1] as i64, dims[2] as i64);
    let occ = mask.occupancy();
    let mut out = vec![false; occ.len()];
    for z in 0..nz {
        for y in 0..ny {
            for x in 0..nx {
                let mut any = false;
                for dz in -radius[2]..=radius[2] {
                    for dy in -radius[1]..=radius[1] {
                        for dx in -radius[0]..=radius[0] {
                            let (sx, sy, sz) = (x + dx, y + dy, z + dz);
                            if sx < 0 || sy < 0 || sz < 0 || sx >= nx || sy >= ny || sz >= nz {
                                continue;
                            }
                            if occ[(sx + nx * (sy + ny * sz)) as usize] {
                                any = true;
                            }
                        }
                    }
                }
                out[(x + nx * (y + ny * z)) as usize] = any;
            }
        }
    }
    BinaryMask::new(mask.geometry().clone(), out).expect("same geometry")
}
