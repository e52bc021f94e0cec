//! 4x4 affine transforms over millimeter coordinates.
//!
//! An [`Affine4`] is validated at construction: the last row must be
//! (0, 0, 0, 1) and the upper-left 3x3 must be invertible. Every value of the
//! type is therefore applicable and invertible, which keeps the downstream
//! geometry operations infallible.

use crate::boxes::WorldBox;
use crate::error::{Error, Result};

const LAST_ROW_TOL: f64 = 1e-9;
const MIN_DET: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Affine4 {
    m: [[f64; 4]; 4],
}

impl Affine4 {
    /// Validates and wraps a row-major 4x4 matrix.
    pub fn new(m: [[f64; 4]; 4]) -> Result<Self> {
        for row in &m {
            for v in row {
                if !v.is_finite() {
                    return Err(Error::InvalidTransform(
                        "matrix entries must be finite".into(),
                    ));
                }
            }
        }
        let last = m[3];
        if (last[0]).abs() > LAST_ROW_TOL
            || (last[1]).abs() > LAST_ROW_TOL
            || (last[2]).abs() > LAST_ROW_TOL
            || (last[3] - 1.0).abs() > LAST_ROW_TOL
        {
            return Err(Error::InvalidTransform(format!(
                "last row must be (0, 0, 0, 1), got {:?}",
                last
            )));
        }
        let det = det3(&m);
        if det.abs() <= MIN_DET {
            return Err(Error::InvalidTransform(format!(
                "upper-left 3x3 is singular (|det| = {:e})",
                det.abs()
            )));
        }
        Ok(Affine4 { m })
    }

    pub fn identity() -> Self {
        let mut m = [[0.0; 4]; 4];
        for (i, row) in m.iter_mut().enumerate() {
            row[i] = 1.0;
        }
        Affine4 { m }
    }

    /// Pure translation.
    pub fn translation(t: [f64; 3]) -> Self {
        let mut a = Self::identity();
        a.m[0][3] = t[0];
        a.m[1][3] = t[1];
        a.m[2][3] = t[2];
        a
    }

    /// Diagonal scale plus translation; rejects zero scales.
    pub fn scale_translation(scale: [f64; 3], t: [f64; 3]) -> Result<Self> {
        let mut m = [[0.0; 4]; 4];
        for a in 0..3 {
            m[a][a] = scale[a];
            m[a][3] = t[a];
        }
        m[3][3] = 1.0;
        Affine4::new(m)
    }

    pub fn matrix(&self) -> &[[f64; 4]; 4] {
        &self.m
    }

    pub fn apply_point(&self, p: [f64; 3]) -> [f64; 3] {
        let m = &self.m;
        let mut out = [0.0; 3];
        for (r, o) in out.iter_mut().enumerate() {
            *o = m[r][0] * p[0] + m[r][1] * p[1] + m[r][2] * p[2] + m[r][3];
        }
        out
    }

    /// Inverse affine. Construction guarantees the 3x3 part is invertible.
    pub fn inverse(&self) -> Affine4 {
        let m = &self.m;
        let det = det3(m);
        // adjugate / det of the 3x3, then -R^-1 * t for the translation
        let inv = |r: usize, c: usize| -> f64 {
            let (r1, r2) = ((r + 1) % 3, (r + 2) % 3);
            let (c1, c2) = ((c + 1) % 3, (c + 2) % 3);
            (m[c1][r1] * m[c2][r2] - m[c1][r2] * m[c2][r1]) / det
        };
        let mut out = [[0.0; 4]; 4];
        for (r, row) in out.iter_mut().take(3).enumerate() {
            for (c, v) in row.iter_mut().take(3).enumerate() {
                *v = inv(r, c);
            }
        }
        for row in out.iter_mut().take(3) {
            row[3] = -(row[0] * m[0][3] + row[1] * m[1][3] + row[2] * m[2][3]);
        }
        out[3][3] = 1.0;
        Affine4 { m: out }
    }

    /// `self` after `other` (matrix product `self * other`).
    pub fn compose(&self, other: &Affine4) -> Affine4 {
        let mut out = [[0.0; 4]; 4];
        for (r, row) in out.iter_mut().enumerate() {
            for (c, v) in row.iter_mut().enumerate() {
                *v = (0..4).map(|k| self.m[r][k] * other.m[k][c]).sum();
            }
        }
        Affine4 { m: out }
    }

    pub fn approx_eq(&self, other: &Affine4, tol: f64) -> bool {
        self.m
            .iter()
            .zip(other.m.iter())
            .all(|(a, b)| a.iter().zip(b.iter()).all(|(x, y)| (x - y).abs() <= tol))
    }
}

fn det3(m: &[[f64; 4]; 4]) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

/// Axis-aligned bounding box of the eight transformed corners.
pub fn transform_world_box(t: &Affine4, b: &WorldBox) -> WorldBox {
    let corners = b.corners();
    let mut min = [f64::INFINITY; 3];
    let mut max = [f64::NEG_INFINITY; 3];
    for corner in &corners {
        let p = t.apply_point(*corner);
        for a in 0..3 {
            min[a] = min[a].min(p[a]);
            max[a] = max[a].max(p[a]);
        }
    }
    // corners of a valid box transformed by a valid affine always bound a valid box
    WorldBox::new(min, max).expect("transformed box corners")
}
