//! Binary morphology on masks.
//!
//! Dilation uses an axis-aligned box structuring element whose per-axis voxel
//! radius is derived from a physical radius in millimeters. The box element is
//! separable, so the implementation runs three 1D sliding-window passes instead
//! of scanning the full neighborhood per voxel.

use crate::error::{Error, Result};
use crate::grid::{snap_to_integer, BinaryMask};

/// Converts a physical radius to per-axis voxel radii, rounding up so the
/// stated margin is never undershot on coarse grids. Values a hair away from
/// an integer quotient snap to it first (3.6 mm at 0.4 mm spacing is 9 voxels,
/// not 10).
pub fn mm_to_voxel_radius(spacing_mm: [f64; 3], radius_mm: f64) -> Result<[usize; 3]> {
    if !radius_mm.is_finite() || radius_mm < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "radius must be non-negative, got {radius_mm}"
        )));
    }
    if spacing_mm.iter().any(|&s| !(s.is_finite() && s > 0.0)) {
        return Err(Error::InvalidArgument(format!(
            "spacing must be positive, got {spacing_mm:?}"
        )));
    }
    let mut r = [0usize; 3];
    for a in 0..3 {
        r[a] = snap_to_integer(radius_mm / spacing_mm[a]).ceil() as usize;
    }
    Ok(r)
}

/// Dilates a mask by `radius_mm`: an output voxel is set when any input voxel
/// within the per-axis box neighborhood is set. The neighborhood is clipped at
/// the grid boundary; radius 0 returns the input unchanged.
pub fn dilate_mask(mask: &BinaryMask, radius_mm: f64) -> Result<BinaryMask> {
    let radius = mm_to_voxel_radius(mask.geometry().spacing_mm(), radius_mm)?;
    if radius == [0, 0, 0] {
        return Ok(mask.clone());
    }
    let [nx, ny, nz] = mask.geometry().dims();
    let mut out = mask.clone();
    let occ = out.occupancy_mut();

    if radius[0] > 0 {
        let mut dst = vec![false; nx];
        for z in 0..nz {
            for y in 0..ny {
                let row = (z * ny + y) * nx;
                dilate_line(&occ[row..row + nx], &mut dst, radius[0]);
                occ[row..row + nx].copy_from_slice(&dst);
            }
        }
    }
    if radius[1] > 0 {
        let mut src = vec![false; ny];
        let mut dst = vec![false; ny];
        for z in 0..nz {
            for x in 0..nx {
                let base = z * ny * nx + x;
                for y in 0..ny {
                    src[y] = occ[base + y * nx];
                }
                dilate_line(&src, &mut dst, radius[1]);
                for y in 0..ny {
                    occ[base + y * nx] = dst[y];
                }
            }
        }
    }
    if radius[2] > 0 {
        let plane = nx * ny;
        let mut src = vec![false; nz];
        let mut dst = vec![false; nz];
        for y in 0..ny {
            for x in 0..nx {
                let base = y * nx + x;
                for z in 0..nz {
                    src[z] = occ[base + z * plane];
                }
                dilate_line(&src, &mut dst, radius[2]);
                for z in 0..nz {
                    occ[base + z * plane] = dst[z];
                }
            }
        }
    }
    Ok(out)
}

/// 1D window-OR: dst[i] = any(src[i-r ..= i+r]), clipped to the line.
fn dilate_line(src: &[bool], dst: &mut [bool], r: usize) {
    let n = src.len();
    let mut in_window = 0usize;
    for &v in src.iter().take((r + 1).min(n)) {
        in_window += v as usize;
    }
    for i in 0..n {
        dst[i] = in_window > 0;
        if i + r + 1 < n {
            in_window += src[i + r + 1] as usize;
        }
        if i >= r {
            in_window -= src[i - r] as usize;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridGeometry;
    use std::sync::Arc;

    #[test]
    fn radius_examples() {
        assert_eq!(mm_to_voxel_radius([0.4; 3], 3.6).unwrap(), [9, 9, 9]);
        assert_eq!(mm_to_voxel_radius([0.4; 3], 3.2).unwrap(), [8, 8, 8]);
        assert_eq!(mm_to_voxel_radius([0.7, 1.3, 2.1], 0.0).unwrap(), [0, 0, 0]);
        assert_eq!(mm_to_voxel_radius([1.0, 1.0, 2.5], 3.6).unwrap(), [4, 4, 2]);
        assert!(mm_to_voxel_radius([1.0; 3], -0.1).is_err());
    }

    fn single_voxel_mask(dims: [usize; 3], at: [usize; 3]) -> BinaryMask {
        let g = Arc::new(GridGeometry::axis_aligned(dims, [1.0; 3], [0.0; 3]).unwrap());
        let mut occ = vec![false; g.voxel_count()];
        occ[g.linear_index(at[0], at[1], at[2])] = true;
        BinaryMask::new(g, occ).unwrap()
    }

    #[test]
    fn dilate_zero_radius_is_identity() {
        let m = single_voxel_mask([8, 8, 8], [3, 3, 3]);
        let d = dilate_mask(&m, 0.0).unwrap();
        assert_eq!(d, m);
    }

    #[test]
    fn dilate_single_voxel_gives_27_block() {
        let m = single_voxel_mask([32, 32, 32], [10, 10, 10]);
        let d = dilate_mask(&m, 1.0).unwrap();
        assert_eq!(d.count_set(), 27);
        assert!(d.get(9, 9, 9) && d.get(11, 11, 11) && d.get(10, 10, 10));
        assert!(!d.get(8, 10, 10));
    }

    #[test]
    fn dilate_corner_voxel_clips_to_8() {
        let m = single_voxel_mask([8, 8, 8], [0, 0, 0]);
        let d = dilate_mask(&m, 1.0).unwrap();
        assert_eq!(d.count_set(), 8);
        assert!(d.get(1, 1, 1));
    }

    #[test]
    fn dilate_rejects_negative_radius() {
        let m = single_voxel_mask([4, 4, 4], [1, 1, 1]);
        assert!(dilate_mask(&m, -1.0).is_err());
    }

    #[test]
    fn dilate_is_anisotropic_in_voxels() {
        // spacing (1, 1, 2.5): 2.5mm radius is (3, 3, 1) voxels
        let g = Arc::new(
            GridGeometry::axis_aligned([16, 16, 16], [1.0, 1.0, 2.5], [0.0; 3]).unwrap(),
        );
        let mut occ = vec![false; g.voxel_count()];
        occ[g.linear_index(8, 8, 8)] = true;
        let m = BinaryMask::new(g, occ).unwrap();
        let d = dilate_mask(&m, 2.5).unwrap();
        assert_eq!(d.count_set(), 7 * 7 * 3);
    }
}
