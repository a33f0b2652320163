//! Small geometric vocabulary shared by every stage of the pipeline.

use std::ops::{Add, Mul, Sub};

use serde::{Deserialize, Serialize};

/// A point in machine space, millimetres.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vertex {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vertex {
    pub const ORIGIN: Vertex = Vertex { x: 0.0, y: 0.0, z: 0.0 };

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Vertex { x, y, z }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn dot(&self, other: Vertex) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn norm(&self) -> f64 {
        self.dot(*self).sqrt()
    }

    /// Squared Euclidean distance. Every nearest-neighbour routine in the
    /// crate goes through this so that indexed and brute-force searches
    /// agree bit for bit.
    #[inline]
    pub fn distance_sq(&self, other: &Vertex) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        let dz = self.z - other.z;
        dx * dx + dy * dy + dz * dz
    }

    pub fn distance(&self, other: &Vertex) -> f64 {
        self.distance_sq(other).sqrt()
    }

    /// Length of the displacement projected onto the build plate.
    pub fn xy_distance(&self, other: &Vertex) -> f64 {
        (other.x - self.x).hypot(other.y - self.y)
    }

    #[inline]
    pub fn axis(&self, axis: usize) -> f64 {
        match axis {
            0 => self.x,
            1 => self.y,
            _ => self.z,
        }
    }

    pub fn min(&self, other: &Vertex) -> Vertex {
        Vertex::new(self.x.min(other.x), self.y.min(other.y), self.z.min(other.z))
    }

    pub fn max(&self, other: &Vertex) -> Vertex {
        Vertex::new(self.x.max(other.x), self.y.max(other.y), self.z.max(other.z))
    }
}

impl Add for Vertex {
    type Output = Vertex;
    fn add(self, rhs: Vertex) -> Vertex {
        Vertex::new(self.x + rhs.x, self.y + rhs.y, self.z + rhs.z)
    }
}

impl Sub for Vertex {
    type Output = Vertex;
    fn sub(self, rhs: Vertex) -> Vertex {
        Vertex::new(self.x - rhs.x, self.y - rhs.y, self.z - rhs.z)
    }
}

impl Mul<f64> for Vertex {
    type Output = Vertex;
    fn mul(self, s: f64) -> Vertex {
        Vertex::new(self.x * s, self.y * s, self.z * s)
    }
}

impl From<[f64; 3]> for Vertex {
    fn from(v: [f64; 3]) -> Self {
        Vertex::new(v[0], v[1], v[2])
    }
}

/// Axis-aligned box, `min <= max` componentwise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub min: Vertex,
    pub max: Vertex,
}

impl BoundingBox {
    pub fn new(min: Vertex, max: Vertex) -> Self {
        debug_assert!(min.x <= max.x && min.y <= max.y && min.z <= max.z);
        BoundingBox { min, max }
    }

    pub fn from_point(p: Vertex) -> Self {
        BoundingBox { min: p, max: p }
    }

    /// Tightest box around `points`; `None` for an empty slice.
    pub fn from_points<'a, I>(points: I) -> Option<Self>
    where
        I: IntoIterator<Item = &'a Vertex>,
    {
        let mut iter = points.into_iter();
        let first = *iter.next()?;
        let mut bbox = BoundingBox::from_point(first);
        for p in iter {
            bbox.include(*p);
        }
        Some(bbox)
    }

    pub fn include(&mut self, p: Vertex) {
        self.min = self.min.min(&p);
        self.max = self.max.max(&p);
    }

    pub fn union(&self, other: &BoundingBox) -> BoundingBox {
        BoundingBox { min: self.min.min(&other.min), max: self.max.max(&other.max) }
    }

    pub fn extent(&self) -> Vertex {
        self.max - self.min
    }

    pub fn contains(&self, p: &Vertex, slack: f64) -> bool {
        p.x >= self.min.x - slack
            && p.y >= self.min.y - slack
            && p.z >= self.min.z - slack
            && p.x <= self.max.x + slack
            && p.y <= self.max.y + slack
            && p.z <= self.max.z + slack
    }

    pub fn inflate(&self, by: f64) -> BoundingBox {
        let d = Vertex::new(by, by, by);
        BoundingBox { min: self.min - d, max: self.max + d }
    }

    pub fn intersects(&self, other: &BoundingBox) -> bool {
        self.min.x <= other.max.x
            && other.min.x <= self.max.x
            && self.min.y <= other.max.y
            && other.min.y <= self.max.y
            && self.min.z <= other.max.z
            && other.min.z <= self.max.z
    }
}

// Ratios such as 10.4 / 0.1 land a few ulps away from the integer they
// represent; anything within this relative distance counts as that integer.
const SNAP_REL: f64 = 1e-9;

fn snapped(x: f64) -> Option<f64> {
    let r = x.round();
    ((x - r).abs() <= SNAP_REL * r.abs().max(1.0)).then_some(r)
}

/// `ceil(x)` that treats near-integers as exact.
pub fn snap_ceil(x: f64) -> f64 {
    snapped(x).unwrap_or_else(|| x.ceil())
}

/// `floor(x)` that treats near-integers as exact.
pub fn snap_floor(x: f64) -> f64 {
    snapped(x).unwrap_or_else(|| x.floor())
}
