//! Rigid rotations about the origin and bounding-box alignment.

use std::fmt;
use std::str::FromStr;

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::Vertex;
use crate::sampling::PointCloud;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TransformError {
    #[error("cannot align an empty point cloud")]
    EmptyInput,
    #[error("rotation must be three finite comma-separated degrees, got {0:?}")]
    BadRotation(String),
}

/// Rotation angles in degrees, applied as `Rz(rz) * Ry(ry) * Rx(rx)`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct RotationVector {
    pub rx: f64,
    pub ry: f64,
    pub rz: f64,
}

impl RotationVector {
    pub const IDENTITY: RotationVector = RotationVector { rx: 0.0, ry: 0.0, rz: 0.0 };

    pub fn new(rx: f64, ry: f64, rz: f64) -> Self {
        RotationVector { rx, ry, rz }
    }

    pub fn is_identity(&self) -> bool {
        self.rx == 0.0 && self.ry == 0.0 && self.rz == 0.0
    }

    pub fn matrix(&self) -> Matrix3<f64> {
        let (sx, cx) = sin_cos_deg(self.rx);
        let (sy, cy) = sin_cos_deg(self.ry);
        let (sz, cz) = sin_cos_deg(self.rz);
        let rx = Matrix3::new(1.0, 0.0, 0.0, 0.0, cx, -sx, 0.0, sx, cx);
        let ry = Matrix3::new(cy, 0.0, sy, 0.0, 1.0, 0.0, -sy, 0.0, cy);
        let rz = Matrix3::new(cz, -sz, 0.0, sz, cz, 0.0, 0.0, 0.0, 1.0);
        rz * ry * rx
    }

    /// The matrix undoing [`matrix`](Self::matrix).
    pub fn inverse_matrix(&self) -> Matrix3<f64> {
        self.matrix().transpose()
    }
}

impl fmt::Display for RotationVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{},{}", self.rx, self.ry, self.rz)
    }
}

impl FromStr for RotationVector {
    type Err = TransformError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || TransformError::BadRotation(s.to_string());
        let parts: Vec<f64> = s
            .split(',')
            .map(|t| t.trim().parse::<f64>().map_err(|_| bad()))
            .collect::<Result<_, _>>()?;
        match parts[..] {
            [rx, ry, rz] if parts.iter().all(|v| v.is_finite()) => Ok(RotationVector { rx, ry, rz }),
            _ => Err(bad()),
        }
    }
}

/// Exact values at multiples of 90 degrees so quarter turns do not leave
/// `1e-17` residue in the matrix.
fn sin_cos_deg(deg: f64) -> (f64, f64) {
    let r = deg.rem_euclid(360.0);
    match r {
        0.0 => (0.0, 1.0),
        90.0 => (1.0, 0.0),
        180.0 => (0.0, -1.0),
        270.0 => (-1.0, 0.0),
        _ => r.to_radians().sin_cos(),
    }
}

pub fn apply_matrix(pc: &PointCloud, m: &Matrix3<f64>) -> PointCloud {
    let m = *m;
    pc.map(move |p| {
        let r = m * Vector3::new(p.x, p.y, p.z);
        Vertex::new(r.x, r.y, r.z)
    })
}

pub fn rotate_point_cloud(pc: &PointCloud, v: RotationVector) -> PointCloud {
    if v.is_identity() {
        return pc.clone();
    }
    apply_matrix(pc, &v.matrix())
}

/// Undo a rotation by `v`.
pub fn counter_rotate(pc: &PointCloud, v: RotationVector) -> PointCloud {
    if v.is_identity() {
        return pc.clone();
    }
    apply_matrix(pc, &v.inverse_matrix())
}

pub fn translate(pc: &PointCloud, t: Vertex) -> PointCloud {
    pc.map(move |p| p + t)
}

/// Translate `moving` so its bounding-box minimum matches `reference`'s.
pub fn align_min_corner(reference: &PointCloud, moving: &PointCloud) -> Result<PointCloud, TransformError> {
    let (r, m) = match (reference.bbox(), moving.bbox()) {
        (Some(r), Some(m)) => (r, m),
        _ => return Err(TransformError::EmptyInput),
    };
    let t = r.min - m.min;
    if t == Vertex::ORIGIN {
        return Ok(moving.clone());
    }
    Ok(translate(moving, t))
}
