//! Synthetic sliced G-code for slabs, slabs with a missing sub-box, and
//! cross-hatched prisms.

use std::fmt::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{snap_ceil, snap_floor, BoundingBox, Vertex};
use crate::numfmt::sig;

/// Filament per mm of extruded line.
const E_PER_MM: f64 = 0.0333;

/// Fill lines this close to a hole face count as inside it.
const HOLE_SLACK: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FixtureError {
    #[error("invalid fixture dimensions: {0}")]
    InvalidDims(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FixtureKind {
    /// Every layer filled along x.
    Slab,
    /// A slab with no material inside `hole`.
    SlabWithHole,
    /// Fill direction alternates between x and y by layer.
    Prism,
}

impl FromStr for FixtureKind {
    type Err = FixtureError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.replace('_', "-").as_str() {
            "slab" => Ok(FixtureKind::Slab),
            "slab-with-hole" => Ok(FixtureKind::SlabWithHole),
            "prism" => Ok(FixtureKind::Prism),
            _ => Err(FixtureError::InvalidDims(format!("unknown fixture kind {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FixtureSpec {
    pub kind: FixtureKind,
    /// Footprint length (x), width (y) and height (z), mm.
    pub size: (f64, f64, f64),
    /// Distance between neighbouring fill lines, mm.
    pub spacing: f64,
    pub nozzle_diameter: f64,
    pub layer_height: f64,
    /// Region left empty by `SlabWithHole`, in unrotated model coordinates.
    pub hole: Option<BoundingBox>,
    /// Model turned by this many quarter turns about z before slicing.
    pub quarter_turns: u8,
}

impl FixtureSpec {
    pub fn new(kind: FixtureKind, size: (f64, f64, f64), spacing: f64, nozzle_diameter: f64, layer_height: f64) -> Self {
        FixtureSpec { kind, size, spacing, nozzle_diameter, layer_height, hole: None, quarter_turns: 0 }
    }

    pub fn with_hole(mut self, hole: BoundingBox) -> Self {
        self.hole = Some(hole);
        self
    }

    pub fn rotated(mut self, quarter_turns: u8) -> Self {
        self.quarter_turns = quarter_turns % 4;
        self
    }

    fn validate(&self) -> Result<(), FixtureError> {
        let (l, w, h) = self.size;
        let pos = |v: f64| v > 0.0 && v.is_finite();
        if !(pos(l) && pos(w) && pos(h)) {
            return Err(FixtureError::InvalidDims(format!("size {l} x {w} x {h} must be positive")));
        }
        if !pos(self.nozzle_diameter) || !pos(self.layer_height) {
            return Err(FixtureError::InvalidDims("nozzle diameter and layer height must be positive".into()));
        }
        if !(self.spacing.is_finite() && self.spacing >= self.nozzle_diameter) {
            return Err(FixtureError::InvalidDims(format!(
                "spacing {} must be at least the nozzle diameter {}",
                self.spacing, self.nozzle_diameter
            )));
        }
        match (self.kind, self.hole) {
            (FixtureKind::SlabWithHole, None) => Err(FixtureError::InvalidDims("slab-with-hole needs a hole".into())),
            (FixtureKind::SlabWithHole, Some(b)) if !(b.min.x < b.max.x && b.min.y < b.max.y && b.min.z < b.max.z) => {
                Err(FixtureError::InvalidDims("hole must have positive extent".into()))
            }
            _ => Ok(()),
        }
    }

    /// Footprint and hole after the quarter turns, re-anchored at the origin.
    pub fn oriented(&self) -> ((f64, f64, f64), Option<BoundingBox>) {
        let (l, w, h) = self.size;
        let turn = |x: f64, y: f64| match self.quarter_turns % 4 {
            0 => (x, y),
            1 => (w - y, x),
            2 => (l - x, w - y),
            _ => (y, l - x),
        };
        let size = if self.quarter_turns % 2 == 1 { (w, l, h) } else { (l, w, h) };
        let hole = self.hole.filter(|_| self.kind == FixtureKind::SlabWithHole).map(|b| {
            let (ax, ay) = turn(b.min.x, b.min.y);
            let (bx, by) = turn(b.max.x, b.max.y);
            BoundingBox::new(
                Vertex::new(ax.min(bx), ay.min(by), b.min.z),
                Vertex::new(ax.max(bx), ay.max(by), b.max.z),
            )
        });
        (size, hole)
    }
}

pub fn layer_count(height: f64, layer_height: f64) -> usize {
    (snap_ceil(height / layer_height) as usize).max(1)
}

pub fn fill_line_count(width: f64, spacing: f64) -> usize {
    snap_floor(width / spacing) as usize + 1
}

/// Split `[0, len]` around `[a, b]`, dropping empty pieces.
fn split_around(len: f64, a: f64, b: f64) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    if a > 0.0 {
        out.push((0.0, a.min(len)));
    }
    if b < len {
        out.push((b.max(0.0), len));
    }
    out
}

/// Absolute-mode G-code for `spec`.
pub fn generate(spec: &FixtureSpec) -> Result<String, FixtureError> {
    spec.validate()?;
    let ((l, w, _), hole) = spec.oriented();
    let layers = layer_count(spec.size.2, spec.layer_height);
    let mut out = String::new();
    let kind = match spec.kind {
        FixtureKind::Slab => "slab",
        FixtureKind::SlabWithHole => "slab-with-hole",
        FixtureKind::Prism => "prism",
    };
    let _ = writeln!(out, "; fixture {kind} {} x {} x {} spacing {}", spec.size.0, spec.size.1, spec.size.2, spec.spacing);
    let _ = writeln!(out, "; nozzle {} layer {} quarter_turns {}", spec.nozzle_diameter, spec.layer_height, spec.quarter_turns);
    out.push_str("G21\nG90\nM82\nG92 E0\n");

    let mut e = 0.0;
    for layer in 0..layers {
        let z = spec.layer_height * (layer + 1) as f64;
        // Prisms alternate the fill axis; axis 0 means lines run along x.
        let along_x = spec.kind != FixtureKind::Prism || layer % 2 == 0;
        let (run_len, cross_len) = if along_x { (l, w) } else { (w, l) };
        // A layer is cut when its mid-height falls inside the hole.
        let mid = z - spec.layer_height / 2.0;
        let in_hole_layer = hole.map_or(false, |b| mid >= b.min.z && mid <= b.max.z);
        let lines = fill_line_count(cross_len, spec.spacing);
        let _ = writeln!(out, "; layer {layer}");
        for j in 0..lines {
            let c = j as f64 * spec.spacing;
            let mut pieces = vec![(0.0, run_len)];
            if let Some(b) = hole.filter(|_| in_hole_layer) {
                let (c_lo, c_hi, r_lo, r_hi) =
                    if along_x { (b.min.y, b.max.y, b.min.x, b.max.x) } else { (b.min.x, b.max.x, b.min.y, b.max.y) };
                if c >= c_lo - HOLE_SLACK && c <= c_hi + HOLE_SLACK {
                    pieces = split_around(run_len, r_lo, r_hi);
                }
            }
            if j % 2 == 1 {
                pieces = pieces.into_iter().rev().map(|(a, b)| (b, a)).collect();
            }
            for (start, end) in pieces {
                let point = |r: f64| if along_x { (r, c) } else { (c, r) };
                let (sx, sy) = point(start);
                let (ex, ey) = point(end);
                let _ = writeln!(out, "G0 X{} Y{} Z{}", sig(sx, 9), sig(sy, 9), sig(z, 9));
                e += (end - start).abs() * E_PER_MM;
                let _ = writeln!(out, "G1 X{} Y{} E{:.5}", sig(ex, 9), sig(ey, 9), e);
            }
        }
    }
    Ok(out)
}
