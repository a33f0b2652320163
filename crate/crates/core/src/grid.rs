//! Uniform unit-box segmentation of two point clouds over a shared bounding
//! box, plus 27-cell neighbourhood queries.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{snap_ceil, BoundingBox, Vertex};
use crate::sampling::PointCloud;

/// Points may sit this far outside the bounding box and still be binned.
pub const BBOX_SLACK: f64 = 1e-9;

/// Above this many cells the per-cell slot table is skipped and lookups
/// fall back to binary search over occupied cells.
pub const DENSE_CELL_LIMIT: usize = 50_000_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridError {
    #[error("both point clouds are empty")]
    EmptyInput,
    #[error("point ({}, {}, {}) lies outside the bounding box", .0.x, .0.y, .0.z)]
    OutOfBounds(Vertex),
    #[error("unit box dimensions must be positive, got {0} x {1} x {2}")]
    InvalidUnitBox(f64, f64, f64),
    #[error("grid of {0} x {1} x {2} cells is too large to index")]
    TooManyCells(usize, usize, usize),
}

/// Unit box edge lengths, mm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnitBoxSpec {
    pub dx: f64,
    pub dy: f64,
    pub dz: f64,
}

impl UnitBoxSpec {
    pub fn new(dx: f64, dy: f64, dz: f64) -> Result<Self, GridError> {
        let ok = |v: f64| v > 0.0 && v.is_finite();
        if ok(dx) && ok(dy) && ok(dz) {
            Ok(UnitBoxSpec { dx, dy, dz })
        } else {
            Err(GridError::InvalidUnitBox(dx, dy, dz))
        }
    }

    pub fn cube(side: f64) -> Result<Self, GridError> {
        Self::new(side, side, side)
    }

    fn axis(&self, axis: usize) -> f64 {
        match axis {
            0 => self.dx,
            1 => self.dy,
            _ => self.dz,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridDims {
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
}

pub type CellIndex = (usize, usize, usize);

impl GridDims {
    pub fn cells(&self) -> usize {
        self.nx * self.ny * self.nz
    }

    /// Row-major linearisation, `ix` fastest.
    #[inline]
    pub fn linear(&self, (ix, iy, iz): CellIndex) -> usize {
        ix + self.nx * (iy + self.ny * iz)
    }

    #[inline]
    pub fn unravel(&self, cell: usize) -> CellIndex {
        (cell % self.nx, (cell / self.nx) % self.ny, cell / (self.nx * self.ny))
    }

    fn axis(&self, axis: usize) -> usize {
        match axis {
            0 => self.nx,
            1 => self.ny,
            _ => self.nz,
        }
    }
}

/// Union bounding box of both clouds.
pub fn bounding_box(pc1: &PointCloud, pc2: &PointCloud) -> Result<BoundingBox, GridError> {
    match (pc1.bbox(), pc2.bbox()) {
        (Some(a), Some(b)) => Ok(a.union(&b)),
        (Some(a), None) | (None, Some(a)) => Ok(a),
        (None, None) => Err(GridError::EmptyInput),
    }
}

/// Boxes per axis, `max(1, ceil(extent / d))`. Boxes on the max side may be
/// partial.
pub fn count_unit_boxes(ubox: &UnitBoxSpec, bbox: &BoundingBox) -> GridDims {
    let extent = bbox.extent();
    let n = |e: f64, d: f64| (snap_ceil(e / d) as usize).max(1);
    GridDims { nx: n(extent.x, ubox.dx), ny: n(extent.y, ubox.dy), nz: n(extent.z, ubox.dz) }
}

/// Grid geometry: where the boxes are and how many there are.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub bbox: BoundingBox,
    pub ubox: UnitBoxSpec,
    pub dims: GridDims,
}

impl Grid {
    pub fn new(bbox: BoundingBox, ubox: UnitBoxSpec) -> Result<Self, GridError> {
        let dims = count_unit_boxes(&ubox, &bbox);
        dims.nx
            .checked_mul(dims.ny)
            .and_then(|v| v.checked_mul(dims.nz))
            .filter(|&n| n < u32::MAX as usize * 64)
            .ok_or(GridError::TooManyCells(dims.nx, dims.ny, dims.nz))?;
        Ok(Grid { bbox, ubox, dims })
    }

    pub fn cells(&self) -> usize {
        self.dims.cells()
    }

    /// `floor((p - min) / d)` per axis, clamped into the grid.
    pub fn index_of(&self, p: &Vertex) -> Result<CellIndex, GridError> {
        if !self.bbox.contains(p, BBOX_SLACK) {
            return Err(GridError::OutOfBounds(*p));
        }
        let idx = |axis: usize| {
            let raw = ((p.axis(axis) - self.bbox.min.axis(axis)) / self.ubox.axis(axis)).floor();
            (raw.max(0.0) as usize).min(self.dims.axis(axis) - 1)
        };
        Ok((idx(0), idx(1), idx(2)))
    }

    pub fn cell_of(&self, p: &Vertex) -> Result<usize, GridError> {
        self.index_of(p).map(|i| self.dims.linear(i))
    }

    /// Nominal extent of a cell (not clipped to the bounding box).
    pub fn cell_bounds(&self, (ix, iy, iz): CellIndex) -> BoundingBox {
        let min = self.bbox.min
            + Vertex::new(ix as f64 * self.ubox.dx, iy as f64 * self.ubox.dy, iz as f64 * self.ubox.dz);
        BoundingBox::new(min, min + Vertex::new(self.ubox.dx, self.ubox.dy, self.ubox.dz))
    }
}

pub fn find_box_index(p: &Vertex, ubox: &UnitBoxSpec, bbox: &BoundingBox) -> Result<CellIndex, GridError> {
    Grid::new(*bbox, *ubox)?.index_of(p)
}

/// All cells within one step along every axis, clipped to the grid,
/// including `idx` itself.
pub fn neighborhood(idx: CellIndex, dims: GridDims) -> Vec<usize> {
    let span = |i: usize, n: usize| i.saturating_sub(1)..=(i + 1).min(n - 1);
    let mut out = Vec::with_capacity(27);
    for iz in span(idx.2, dims.nz) {
        for iy in span(idx.1, dims.ny) {
            for ix in span(idx.0, dims.nx) {
                out.push(dims.linear((ix, iy, iz)));
            }
        }
    }
    out
}

/// Points of one cloud grouped by cell.
#[derive(Debug, Clone)]
struct CellStore {
    /// Points reordered so each cell's points are contiguous, original order
    /// preserved within a cell.
    points: Vec<Vertex>,
    /// Occupied cells, ascending.
    occupied: Vec<usize>,
    /// `points[starts[k]..starts[k + 1]]` belong to `occupied[k]`.
    starts: Vec<usize>,
    /// cell -> position in `occupied` (`u32::MAX` when empty); only for
    /// grids up to `DENSE_CELL_LIMIT` cells.
    slots: Option<Vec<u32>>,
}

impl CellStore {
    fn build(cloud: &PointCloud, grid: &Grid) -> Result<Self, GridError> {
        let pts = cloud.points();
        let cells: Vec<usize> = pts.par_iter().map(|p| grid.cell_of(p)).collect::<Result<_, _>>()?;
        let mut order: Vec<usize> = (0..pts.len()).collect();
        order.par_sort_by_key(|&i| cells[i]);

        let points: Vec<Vertex> = order.iter().map(|&i| pts[i]).collect();
        let mut occupied = Vec::new();
        let mut starts = Vec::new();
        for (pos, &i) in order.iter().enumerate() {
            if occupied.last() != Some(&cells[i]) {
                occupied.push(cells[i]);
                starts.push(pos);
            }
        }
        starts.push(points.len());

        let slots = (grid.cells() <= DENSE_CELL_LIMIT).then(|| {
            let mut slots = vec![u32::MAX; grid.cells()];
            for (k, &c) in occupied.iter().enumerate() {
                slots[c] = k as u32;
            }
            slots
        });
        Ok(CellStore { points, occupied, starts, slots })
    }

    fn slot(&self, cell: usize) -> Option<usize> {
        match &self.slots {
            Some(slots) => match slots.get(cell) {
                Some(&s) if s != u32::MAX => Some(s as usize),
                _ => None,
            },
            None => self.occupied.binary_search(&cell).ok(),
        }
    }

    fn cell(&self, cell: usize) -> &[Vertex] {
        match self.slot(cell) {
            Some(k) => &self.points[self.starts[k]..self.starts[k + 1]],
            None => &[],
        }
    }
}

/// Which input cloud a point came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    A = 0,
    B = 1,
}

/// Both clouds bucketed into the same grid.
#[derive(Debug, Clone)]
pub struct BoxedPointSets {
    grid: Grid,
    sides: [CellStore; 2],
}

impl BoxedPointSets {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn dims(&self) -> GridDims {
        self.grid.dims
    }

    pub fn cell_points(&self, side: Side, cell: usize) -> &[Vertex] {
        self.sides[side as usize].cell(cell)
    }

    pub fn occupied_cells(&self, side: Side) -> &[usize] {
        &self.sides[side as usize].occupied
    }

    /// Cells holding at least one point of either cloud, ascending.
    pub fn occupied_union(&self) -> Vec<usize> {
        let (a, b) = (&self.sides[0].occupied, &self.sides[1].occupied);
        let mut out = Vec::with_capacity(a.len().max(b.len()));
        let (mut i, mut j) = (0, 0);
        while i < a.len() || j < b.len() {
            let next = match (a.get(i), b.get(j)) {
                (Some(&x), Some(&y)) if x == y => {
                    i += 1;
                    j += 1;
                    x
                }
                (Some(&x), Some(&y)) if x < y => {
                    i += 1;
                    x
                }
                (Some(&x), None) => {
                    i += 1;
                    x
                }
                (_, Some(&y)) => {
                    j += 1;
                    y
                }
                (None, None) => unreachable!(),
            };
            out.push(next);
        }
        out
    }

    pub fn side_len(&self, side: Side) -> usize {
        self.sides[side as usize].points.len()
    }

    /// Points of `side` in every cell of `idx`'s neighbourhood.
    pub fn gather_neighborhood(&self, side: Side, idx: CellIndex) -> Vec<Vertex> {
        let cells = neighborhood(idx, self.grid.dims);
        let store = &self.sides[side as usize];
        let total = cells.iter().map(|&c| store.cell(c).len()).sum();
        let mut out = Vec::with_capacity(total);
        for c in cells {
            out.extend_from_slice(store.cell(c));
        }
        out
    }
}

/// Segment both clouds over their union bounding box.
pub fn segment(pc1: &PointCloud, pc2: &PointCloud, ubox: UnitBoxSpec) -> Result<BoxedPointSets, GridError> {
    let bbox = bounding_box(pc1, pc2)?;
    segment_in(pc1, pc2, Grid::new(bbox, ubox)?)
}

/// Segment both clouds over a caller-chosen grid, e.g. one shared by
/// several comparisons.
pub fn segment_in(pc1: &PointCloud, pc2: &PointCloud, grid: Grid) -> Result<BoxedPointSets, GridError> {
    let (a, b) = rayon::join(|| CellStore::build(pc1, &grid), || CellStore::build(pc2, &grid));
    Ok(BoxedPointSets { grid, sides: [a?, b?] })
}
