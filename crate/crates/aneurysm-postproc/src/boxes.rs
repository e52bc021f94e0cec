//! Axis-aligned boxes in voxel index space and millimeter world space.
//!
//! A [`VoxelBox`] lives on an integer grid with min-inclusive / max-exclusive
//! corners; boxes are allowed to extend past the grid and are clipped where
//! that matters. A [`WorldBox`] is a closed box in millimeter coordinates.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Integer box, min inclusive, max exclusive.
///
/// The empty box is a distinguished value (`VoxelBox::empty()`) with zero
/// volume on every axis; non-empty boxes have `min < max` on every axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct VoxelBox {
    #[serde(rename = "min_voxel")]
    min: [i64; 3],
    #[serde(rename = "max_voxel")]
    max: [i64; 3],
}

impl VoxelBox {
    /// Builds a non-empty box; rejects `min >= max` on any axis.
    pub fn new(min: [i64; 3], max: [i64; 3]) -> Result<Self> {
        for axis in 0..3 {
            if min[axis] >= max[axis] {
                return Err(Error::InvalidArgument(format!(
                    "voxel box min {:?} must be strictly below max {:?} on every axis",
                    min, max
                )));
            }
        }
        Ok(VoxelBox { min, max })
    }

    /// The canonical empty box.
    pub const fn empty() -> Self {
        VoxelBox {
            min: [0, 0, 0],
            max: [0, 0, 0],
        }
    }

    /// Builds either a validated box or the canonical empty box when the
    /// corners enclose nothing. Used where emptiness is a legal outcome
    /// (clipping, voxelization) rather than an input error.
    pub fn new_or_empty(min: [i64; 3], max: [i64; 3]) -> Self {
        if (0..3).any(|a| min[a] >= max[a]) {
            VoxelBox::empty()
        } else {
            VoxelBox { min, max }
        }
    }

    pub fn is_empty(&self) -> bool {
        (0..3).any(|a| self.min[a] >= self.max[a])
    }

    pub fn min(&self) -> [i64; 3] {
        self.min
    }

    pub fn max(&self) -> [i64; 3] {
        self.max
    }

    /// Number of voxels covered; 0 for the empty box.
    pub fn volume(&self) -> u64 {
        if self.is_empty() {
            return 0;
        }
        (0..3).map(|a| (self.max[a] - self.min[a]) as u64).product()
    }

    /// Geometric center in continuous index coordinates.
    pub fn center(&self) -> [f64; 3] {
        [
            (self.min[0] + self.max[0]) as f64 / 2.0,
            (self.min[1] + self.max[1]) as f64 / 2.0,
            (self.min[2] + self.max[2]) as f64 / 2.0,
        ]
    }

    /// Whether a continuous index-space point falls inside `[min, max)`.
    pub fn contains_point(&self, p: [f64; 3]) -> bool {
        !self.is_empty()
            && (0..3).all(|a| p[a] >= self.min[a] as f64 && p[a] < self.max[a] as f64)
    }

    pub fn contains_index(&self, idx: [i64; 3]) -> bool {
        !self.is_empty() && (0..3).all(|a| idx[a] >= self.min[a] && idx[a] < self.max[a])
    }

    /// Intersection; empty box when disjoint.
    pub fn intersect(&self, other: &VoxelBox) -> VoxelBox {
        if self.is_empty() || other.is_empty() {
            return VoxelBox::empty();
        }
        let mut min = [0i64; 3];
        let mut max = [0i64; 3];
        for a in 0..3 {
            min[a] = self.min[a].max(other.min[a]);
            max[a] = self.max[a].min(other.max[a]);
        }
        VoxelBox::new_or_empty(min, max)
    }

    /// Clips to `[0, dims)`; empty box when nothing remains.
    pub fn clip_to_dims(&self, dims: [usize; 3]) -> VoxelBox {
        let grid = VoxelBox {
            min: [0, 0, 0],
            max: [dims[0] as i64, dims[1] as i64, dims[2] as i64],
        };
        self.intersect(&grid)
    }
}

/// Closed axis-aligned box in millimeter world coordinates.
///
/// Degenerate boxes (`min == max` on an axis) are legal; inverted ones are not.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WorldBox {
    #[serde(rename = "min_world_mm")]
    min_mm: [f64; 3],
    #[serde(rename = "max_world_mm")]
    max_mm: [f64; 3],
}

impl WorldBox {
    pub fn new(min_mm: [f64; 3], max_mm: [f64; 3]) -> Result<Self> {
        for a in 0..3 {
            if !(min_mm[a].is_finite() && max_mm[a].is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "world box corners must be finite, got {:?} .. {:?}",
                    min_mm, max_mm
                )));
            }
            if min_mm[a] > max_mm[a] {
                return Err(Error::InvalidArgument(format!(
                    "world box min {:?} exceeds max {:?} on axis {}",
                    min_mm, max_mm, a
                )));
            }
        }
        Ok(WorldBox { min_mm, max_mm })
    }

    pub fn min_mm(&self) -> [f64; 3] {
        self.min_mm
    }

    pub fn max_mm(&self) -> [f64; 3] {
        self.max_mm
    }

    /// The eight corner points.
    pub fn corners(&self) -> [[f64; 3]; 8] {
        let lo = self.min_mm;
        let hi = self.max_mm;
        let mut out = [[0.0; 3]; 8];
        for (i, corner) in out.iter_mut().enumerate() {
            for a in 0..3 {
                corner[a] = if (i >> a) & 1 == 0 { lo[a] } else { hi[a] };
            }
        }
        out
    }

    /// Smallest box containing a set of points.
    pub fn bounding(points: &[[f64; 3]]) -> Result<Self> {
        let mut min = [f64::INFINITY; 3];
        let mut max = [f64::NEG_INFINITY; 3];
        for p in points {
            for a in 0..3 {
                min[a] = min[a].min(p[a]);
                max[a] = max[a].max(p[a]);
            }
        }
        WorldBox::new(min, max)
    }
}

/// Grows a world box by `margin_mm` on every face.
pub fn expand_world_box(b: &WorldBox, margin_mm: f64) -> Result<WorldBox> {
    if !margin_mm.is_finite() || margin_mm < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "expansion margin must be non-negative, got {margin_mm}"
        )));
    }
    let mut min = b.min_mm;
    let mut max = b.max_mm;
    for a in 0..3 {
        min[a] -= margin_mm;
        max[a] += margin_mm;
    }
    WorldBox::new(min, max)
}
