//! Proportional sampling of cuboids into point clouds.
//!
//! A cuboid of length `l + d`, breadth `d` and height `h` yields a regular
//! lattice of `(ceil((l+d)/g)+1) * (ceil(d/g)+1) * (ceil(h/g)+1)` points in
//! its own frame, so long extrusions get proportionally more samples than
//! short ones and no lattice pitch exceeds the sampling gap `g`.

use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{snap_ceil, BoundingBox, Vertex};
use crate::numfmt;
use crate::semantics::Cuboid;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplingParams {
    /// Sampling gap `g`, mm.
    pub g: f64,
}

#[derive(Debug, Error, Clone, PartialEq)]
#[error("sampling gap must be positive, got {0}")]
pub struct InvalidGap(pub f64);

impl SamplingParams {
    pub fn new(g: f64) -> Result<Self, InvalidGap> {
        if g > 0.0 && g.is_finite() {
            Ok(SamplingParams { g })
        } else {
            Err(InvalidGap(g))
        }
    }
}

/// Flat list of points with a cached bounding box (`None` iff empty).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PointCloud {
    points: Vec<Vertex>,
    bbox: Option<BoundingBox>,
}

impl PointCloud {
    pub fn new(points: Vec<Vertex>) -> Self {
        let bbox = BoundingBox::from_points(&points);
        PointCloud { points, bbox }
    }

    pub fn points(&self) -> &[Vertex] {
        &self.points
    }

    pub fn into_points(self) -> Vec<Vertex> {
        self.points
    }

    pub fn bbox(&self) -> Option<BoundingBox> {
        self.bbox
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Apply `f` to every point and recompute the bounding box.
    pub fn map(&self, f: impl Fn(Vertex) -> Vertex + Sync) -> PointCloud {
        PointCloud::new(self.points.par_iter().map(|p| f(*p)).collect())
    }
}

/// Lattice sizes along the move, across it, and vertically.
pub fn sample_counts(cuboid: &Cuboid, g: f64) -> (usize, usize, usize) {
    let n = |span: f64| snap_ceil(span / g) as usize + 1;
    (n(cuboid.length), n(cuboid.breadth), n(cuboid.height))
}

pub fn sample_count(cuboid: &Cuboid, g: f64) -> usize {
    let (a, b, c) = sample_counts(cuboid, g);
    a * b * c
}

/// Visit every lattice point of `cuboid` without materialising them.
pub fn for_each_sample(cuboid: &Cuboid, g: f64, mut f: impl FnMut(Vertex)) {
    let (n_len, n_wid, n_hgt) = sample_counts(cuboid, g);
    let origin = cuboid.bottom[0];
    let along = cuboid.bottom[1] - origin;
    let across = cuboid.bottom[3] - origin;
    let up = cuboid.top[0] - origin;
    let frac = |i: usize, n: usize| if n > 1 { i as f64 / (n - 1) as f64 } else { 0.0 };
    for i in 0..n_len {
        let a = origin + along * frac(i, n_len);
        for j in 0..n_wid {
            let b = a + across * frac(j, n_wid);
            for k in 0..n_hgt {
                f(b + up * frac(k, n_hgt));
            }
        }
    }
}

pub fn sample_cuboid(cuboid: &Cuboid, g: f64) -> Vec<Vertex> {
    let mut out = Vec::with_capacity(sample_count(cuboid, g));
    for_each_sample(cuboid, g, |p| out.push(p));
    out
}

/// Concatenate the samples of every cuboid, in cuboid order.
pub fn build_point_cloud(cuboids: &[Cuboid], g: f64) -> PointCloud {
    let counts: Vec<usize> = cuboids.iter().map(|c| sample_count(c, g)).collect();
    let total = counts.iter().sum();
    let mut points = vec![Vertex::ORIGIN; total];
    let mut chunks = Vec::with_capacity(cuboids.len());
    let mut rest = points.as_mut_slice();
    for &n in &counts {
        let (head, tail) = rest.split_at_mut(n);
        chunks.push(head);
        rest = tail;
    }
    chunks.into_par_iter().zip(cuboids.par_iter()).for_each(|(chunk, cuboid)| {
        let mut i = 0;
        for_each_sample(cuboid, g, |p| {
            chunk[i] = p;
            i += 1;
        });
    });
    PointCloud::new(points)
}

#[derive(Debug, Error)]
pub enum XyzError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}:{line}: expected three numbers")]
    Malformed { path: String, line: usize },
}

/// One `x y z` line per point, 9 significant digits.
pub fn write_xyz(cloud: &PointCloud, path: &Path) -> Result<(), XyzError> {
    let io = |source| XyzError::Io { path: path.display().to_string(), source };
    let mut w = BufWriter::new(std::fs::File::create(path).map_err(io)?);
    for p in cloud.points() {
        writeln!(w, "{} {} {}", numfmt::sig(p.x, 9), numfmt::sig(p.y, 9), numfmt::sig(p.z, 9)).map_err(io)?;
    }
    w.flush().map_err(io)
}

pub fn read_xyz(path: &Path) -> Result<PointCloud, XyzError> {
    let io = |source| XyzError::Io { path: path.display().to_string(), source };
    let reader = BufReader::new(std::fs::File::open(path).map_err(io)?);
    let mut points = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(io)?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let malformed = || XyzError::Malformed { path: path.display().to_string(), line: idx + 1 };
        let coords: Vec<f64> = line
            .split_whitespace()
            .map(|t| t.parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|_| malformed())?;
        if coords.len() < 3 {
            return Err(malformed());
        }
        points.push(Vertex::new(coords[0], coords[1], coords[2]));
    }
    Ok(PointCloud::new(points))
}
