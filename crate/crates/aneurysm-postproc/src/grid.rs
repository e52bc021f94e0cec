//! Grid geometry, scalar volumes, and binary masks.
//!
//! All voxel data is stored x-fastest (index = x + nx*(y + ny*z)), matching
//! the on-disk layout of the volume files this crate reads and writes. Voxel
//! index (i, j, k) denotes the sample point at continuous index coordinates
//! (i, j, k); the index-to-world affine maps those coordinates to millimeters.

use std::fmt;
use std::sync::Arc;

use crate::affine::Affine4;
use crate::boxes::{VoxelBox, WorldBox};
use crate::error::{Error, Result};

/// Relative tolerance used when deciding whether two grids are the same.
pub const GEOMETRY_REL_TOL: f64 = 1e-4;

/// Snaps a value onto the nearest integer when it is within a hair of it,
/// so that rounding rules see the intended coordinate rather than float
/// noise from spacing division (e.g. 4.0 / 0.4 = 9.999999999999998).
pub(crate) fn snap_to_integer(v: f64) -> f64 {
    let nearest = v.round();
    if (v - nearest).abs() <= 1e-9 * v.abs().max(1.0) {
        nearest
    } else {
        v
    }
}

/// Dimensions, spacing, and index-to-world affine of one voxel grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridGeometry {
    dims: [usize; 3],
    spacing_mm: [f64; 3],
    index_to_world: Affine4,
    world_to_index: Affine4,
}

impl GridGeometry {
    pub fn new(dims: [usize; 3], spacing_mm: [f64; 3], index_to_world: Affine4) -> Result<Self> {
        if dims.contains(&0) {
            return Err(Error::InvalidArgument(format!(
                "grid dims must all be >= 1, got {dims:?}"
            )));
        }
        if spacing_mm.iter().any(|&s| !(s.is_finite() && s > 0.0)) {
            return Err(Error::InvalidArgument(format!(
                "grid spacing must be positive, got {spacing_mm:?}"
            )));
        }
        let world_to_index = index_to_world.inverse();
        Ok(GridGeometry {
            dims,
            spacing_mm,
            index_to_world,
            world_to_index,
        })
    }

    /// Axis-aligned grid: world = index * spacing + origin.
    pub fn axis_aligned(dims: [usize; 3], spacing_mm: [f64; 3], origin_mm: [f64; 3]) -> Result<Self> {
        let affine = Affine4::scale_translation(spacing_mm, origin_mm)?;
        GridGeometry::new(dims, spacing_mm, affine)
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn spacing_mm(&self) -> [f64; 3] {
        self.spacing_mm
    }

    pub fn index_to_world(&self) -> &Affine4 {
        &self.index_to_world
    }

    pub fn voxel_count(&self) -> usize {
        self.dims[0] * self.dims[1] * self.dims[2]
    }

    pub fn linear_index(&self, x: usize, y: usize, z: usize) -> usize {
        x + self.dims[0] * (y + self.dims[1] * z)
    }

    pub fn index_to_world_point(&self, idx: [f64; 3]) -> [f64; 3] {
        self.index_to_world.apply_point(idx)
    }

    pub fn world_to_index_point(&self, world: [f64; 3]) -> [f64; 3] {
        self.world_to_index.apply_point(world)
    }

    /// Same grid within tolerance: dims exact, spacing and affine entries
    /// within a relative tolerance (floored at 1 to keep near-zero entries
    /// from demanding absolute precision).
    pub fn approx_same(&self, other: &GridGeometry) -> bool {
        if self.dims != other.dims {
            return false;
        }
        let close = |a: f64, b: f64| (a - b).abs() <= GEOMETRY_REL_TOL * a.abs().max(b.abs()).max(1.0);
        if !(0..3).all(|i| close(self.spacing_mm[i], other.spacing_mm[i])) {
            return false;
        }
        let ma = self.index_to_world.matrix();
        let mb = other.index_to_world.matrix();
        ma.iter()
            .zip(mb.iter())
            .all(|(ra, rb)| ra.iter().zip(rb.iter()).all(|(&a, &b)| close(a, b)))
    }

    pub fn check_same(&self, other: &GridGeometry) -> Result<()> {
        if self.approx_same(other) {
            Ok(())
        } else {
            Err(Error::GeometryMismatch {
                left: self.to_string(),
                right: other.to_string(),
            })
        }
    }

    /// Maps a world box onto this grid.
    ///
    /// All eight world corners go through the inverse affine, the index-space
    /// AABB is rounded outward (floor on the min, last contained index plus
    /// one on the max, so the result is exclusive and never undershoots the
    /// box), then the result is clipped to the grid. A box entirely outside
    /// the grid voxelizes to the empty box.
    pub fn voxelize_world_box(&self, world: &WorldBox) -> VoxelBox {
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for corner in &world.corners() {
            let p = self.world_to_index.apply_point(*corner);
            for a in 0..3 {
                lo[a] = lo[a].min(p[a]);
                hi[a] = hi[a].max(p[a]);
            }
        }
        let mut min = [0i64; 3];
        let mut max = [0i64; 3];
        for a in 0..3 {
            min[a] = snap_to_integer(lo[a]).floor() as i64;
            max[a] = snap_to_integer(hi[a]).floor() as i64 + 1;
        }
        VoxelBox::new_or_empty(min, max).clip_to_dims(self.dims)
    }

    /// World-space AABB of a voxel box (the reverse of `voxelize_world_box`;
    /// corners are the box's continuous index corners).
    pub fn voxel_box_to_world(&self, b: &VoxelBox) -> Option<WorldBox> {
        if b.is_empty() {
            return None;
        }
        let lo = b.min();
        let hi = b.max();
        let mut corners = Vec::with_capacity(8);
        for i in 0..8 {
            let mut c = [0.0; 3];
            for a in 0..3 {
                c[a] = if (i >> a) & 1 == 0 { lo[a] as f64 } else { hi[a] as f64 };
            }
            corners.push(self.index_to_world.apply_point(c));
        }
        Some(WorldBox::bounding(&corners).expect("finite corners"))
    }
}

impl fmt::Display for GridGeometry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "grid {}x{}x{} @ ({:.4}, {:.4}, {:.4}) mm",
            self.dims[0],
            self.dims[1],
            self.dims[2],
            self.spacing_mm[0],
            self.spacing_mm[1],
            self.spacing_mm[2]
        )
    }
}

/// Scalar volume on a grid. Mostly an IO vehicle: masks are derived from it
/// by thresholding.
#[derive(Debug, Clone)]
pub struct Volume3D {
    geometry: Arc<GridGeometry>,
    data: Vec<f32>,
}

impl Volume3D {
    pub fn new(geometry: Arc<GridGeometry>, data: Vec<f32>) -> Result<Self> {
        if data.len() != geometry.voxel_count() {
            return Err(Error::InvalidArgument(format!(
                "volume data length {} does not match {} ({} voxels)",
                data.len(),
                geometry,
                geometry.voxel_count()
            )));
        }
        Ok(Volume3D { geometry, data })
    }

    pub fn geometry(&self) -> &Arc<GridGeometry> {
        &self.geometry
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    /// Binary mask of voxels with value strictly above `threshold`.
    pub fn threshold_mask(&self, threshold: f32) -> BinaryMask {
        let occupancy = self.data.iter().map(|&v| v > threshold).collect();
        BinaryMask {
            geometry: self.geometry.clone(),
            occupancy,
        }
    }
}

/// How two masks are combined voxelwise.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MaskOp {
    Union,
    Intersect,
    Subtract,
}

/// Boolean occupancy on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryMask {
    geometry: Arc<GridGeometry>,
    occupancy: Vec<bool>,
}

impl BinaryMask {
    pub fn new(geometry: Arc<GridGeometry>, occupancy: Vec<bool>) -> Result<Self> {
        if occupancy.len() != geometry.voxel_count() {
            return Err(Error::InvalidArgument(format!(
                "mask occupancy length {} does not match {} ({} voxels)",
                occupancy.len(),
                geometry,
                geometry.voxel_count()
            )));
        }
        Ok(BinaryMask { geometry, occupancy })
    }

    pub fn empty(geometry: Arc<GridGeometry>) -> Self {
        let occupancy = vec![false; geometry.voxel_count()];
        BinaryMask { geometry, occupancy }
    }

    pub fn full(geometry: Arc<GridGeometry>) -> Self {
        let occupancy = vec![true; geometry.voxel_count()];
        BinaryMask { geometry, occupancy }
    }

    /// Mask whose set voxels are exactly the box interior (clipped to the grid).
    pub fn from_box(geometry: Arc<GridGeometry>, b: &VoxelBox) -> Self {
        let mut mask = BinaryMask::empty(geometry);
        mask.set_box(b, true);
        mask
    }

    pub fn geometry(&self) -> &Arc<GridGeometry> {
        &self.geometry
    }

    pub fn occupancy(&self) -> &[bool] {
        &self.occupancy
    }

    pub fn get(&self, x: usize, y: usize, z: usize) -> bool {
        self.occupancy[self.geometry.linear_index(x, y, z)]
    }

    pub fn count_set(&self) -> u64 {
        self.occupancy.iter().filter(|&&v| v).count() as u64
    }

    /// Number of set voxels whose index lies inside the box. Voxels outside
    /// the grid contribute nothing; the empty box counts zero.
    pub fn box_overlap(&self, b: &VoxelBox) -> u64 {
        let c = b.clip_to_dims(self.geometry.dims);
        if c.is_empty() {
            return 0;
        }
        let [nx, ny, _] = self.geometry.dims;
        let (min, max) = (c.min(), c.max());
        let mut count = 0u64;
        for z in min[2]..max[2] {
            for y in min[1]..max[1] {
                let row = (z as usize * ny + y as usize) * nx;
                let span = &self.occupancy[row + min[0] as usize..row + max[0] as usize];
                count += span.iter().filter(|&&v| v).count() as u64;
            }
        }
        count
    }

    /// Voxelwise boolean combination; both masks must live on the same grid.
    pub fn combine(&self, other: &BinaryMask, op: MaskOp) -> Result<BinaryMask> {
        self.geometry.check_same(&other.geometry)?;
        let occupancy = self
            .occupancy
            .iter()
            .zip(other.occupancy.iter())
            .map(|(&a, &b)| match op {
                MaskOp::Union => a | b,
                MaskOp::Intersect => a & b,
                MaskOp::Subtract => a & !b,
            })
            .collect();
        Ok(BinaryMask {
            geometry: self.geometry.clone(),
            occupancy,
        })
    }

    /// True when no voxel of `self` is set outside `other`.
    pub fn is_subset_of(&self, other: &BinaryMask) -> Result<bool> {
        self.geometry.check_same(&other.geometry)?;
        Ok(self
            .occupancy
            .iter()
            .zip(other.occupancy.iter())
            .all(|(&a, &b)| !a || b))
    }

    pub fn intersects(&self, other: &BinaryMask) -> Result<bool> {
        self.geometry.check_same(&other.geometry)?;
        Ok(self
            .occupancy
            .iter()
            .zip(other.occupancy.iter())
            .any(|(&a, &b)| a && b))
    }

    pub(crate) fn set_box(&mut self, b: &VoxelBox, value: bool) {
        let c = b.clip_to_dims(self.geometry.dims);
        if c.is_empty() {
            return;
        }
        let [nx, ny, _] = self.geometry.dims;
        let (min, max) = (c.min(), c.max());
        for z in min[2]..max[2] {
            for y in min[1]..max[1] {
                let row = (z as usize * ny + y as usize) * nx;
                self.occupancy[row + min[0] as usize..row + max[0] as usize].fill(value);
            }
        }
    }

    pub(crate) fn occupancy_mut(&mut self) -> &mut [bool] {
        &mut self.occupancy
    }
}
