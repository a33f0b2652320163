//! Per-cell Hausdorff distances where each side's points are matched against
//! the other side's points gathered from the surrounding 3x3x3 block of
//! cells, so points binned on the wrong side of a box face still find their
//! partners.

use std::fmt;
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::grid::{BoxedPointSets, CellIndex, Grid, GridDims, Side};
use crate::kdtree::KdTree;
use crate::geometry::Vertex;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Distance {
    Num(f64),
    /// Neither side has points in the cell.
    None,
    /// One side has points and the other has none anywhere in reach.
    Inf,
}

impl Distance {
    pub fn from_sq(sq: f64) -> Distance {
        if sq.is_infinite() {
            Distance::Inf
        } else {
            Distance::Num(sq.sqrt())
        }
    }

    pub fn num(&self) -> Option<f64> {
        match self {
            Distance::Num(v) => Some(*v),
            _ => None,
        }
    }

    pub fn is_none(&self) -> bool {
        matches!(self, Distance::None)
    }

    pub fn is_inf(&self) -> bool {
        matches!(self, Distance::Inf)
    }
}

impl fmt::Display for Distance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Distance::Num(v) => write!(f, "{v}"),
            Distance::None => f.write_str("none"),
            Distance::Inf => f.write_str("inf"),
        }
    }
}

impl Serialize for Distance {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Distance::Num(v) => s.serialize_f64(*v),
            other => s.serialize_str(&other.to_string()),
        }
    }
}

/// `sup_{x in xs} min_{y in ys} |x - y|`; `Num(0)` when `xs` is empty.
pub fn one_way_hd(xs: &[Vertex], ys: &[Vertex]) -> Distance {
    if xs.is_empty() {
        return Distance::Num(0.0);
    }
    Distance::from_sq(KdTree::build(ys).sup_min_sq(xs))
}

fn one_way_sq(xs: &[Vertex], ys: impl FnOnce() -> Vec<Vertex>) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    let ys = ys();
    if ys.is_empty() {
        return f64::INFINITY;
    }
    KdTree::build(&ys).sup_min_sq(xs)
}

/// Augmented distance of one cell.
pub fn box_distance(sets: &BoxedPointSets, idx: CellIndex) -> Distance {
    let cell = sets.dims().linear(idx);
    let xs = sets.cell_points(Side::A, cell);
    let ys = sets.cell_points(Side::B, cell);
    if xs.is_empty() && ys.is_empty() {
        return Distance::None;
    }
    let ab = one_way_sq(xs, || sets.gather_neighborhood(Side::B, idx));
    if ab.is_infinite() {
        return Distance::Inf;
    }
    let ba = one_way_sq(ys, || sets.gather_neighborhood(Side::A, idx));
    Distance::from_sq(ab.max(ba))
}

/// Plain Hausdorff distance between the two sides' points inside one cell,
/// ignoring neighbours.
pub fn cell_only_distance(sets: &BoxedPointSets, idx: CellIndex) -> Distance {
    let cell = sets.dims().linear(idx);
    let xs = sets.cell_points(Side::A, cell);
    let ys = sets.cell_points(Side::B, cell);
    if xs.is_empty() && ys.is_empty() {
        return Distance::None;
    }
    let ab = one_way_sq(xs, || ys.to_vec());
    let ba = one_way_sq(ys, || xs.to_vec());
    Distance::from_sq(ab.max(ba))
}

/// Augmented distance for every cell of the grid.
pub fn compare(sets: &BoxedPointSets) -> DistanceField {
    let dims = sets.dims();
    let occupied = sets.occupied_union();
    let computed: Vec<(usize, Distance)> = occupied
        .par_iter()
        .map(|&cell| (cell, box_distance(sets, dims.unravel(cell))))
        .collect();
    let mut values = vec![Distance::None; dims.cells()];
    for (cell, d) in computed {
        values[cell] = d;
    }
    DistanceField::new(*sets.grid(), values)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct TagCounts {
    pub num: usize,
    pub none: usize,
    pub inf: usize,
}

/// Distances aligned with a grid, plus the metadata needed to interpret and
/// combine them.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceField {
    pub grid: Grid,
    pub sampling_gap: Option<f64>,
    pub labels: (String, String),
    values: Vec<Distance>,
}

impl DistanceField {
    /// Panics if `values` does not have one entry per cell.
    pub fn new(grid: Grid, values: Vec<Distance>) -> Self {
        assert_eq!(values.len(), grid.cells(), "field length must match grid");
        DistanceField { grid, sampling_gap: None, labels: Default::default(), values }
    }

    pub fn with_sampling_gap(mut self, g: f64) -> Self {
        self.sampling_gap = Some(g);
        self
    }

    pub fn with_labels(mut self, a: impl Into<String>, b: impl Into<String>) -> Self {
        self.labels = (a.into(), b.into());
        self
    }

    /// Copy of the metadata with different values.
    pub fn with_values(&self, values: Vec<Distance>) -> Self {
        assert_eq!(values.len(), self.values.len(), "field length must match grid");
        DistanceField { values, ..self.clone_meta() }
    }

    fn clone_meta(&self) -> Self {
        DistanceField {
            grid: self.grid,
            sampling_gap: self.sampling_gap,
            labels: self.labels.clone(),
            values: Vec::new(),
        }
    }

    pub fn dims(&self) -> GridDims {
        self.grid.dims
    }

    pub fn values(&self) -> &[Distance] {
        &self.values
    }

    pub fn get(&self, idx: CellIndex) -> Distance {
        self.values[self.grid.dims.linear(idx)]
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn counts(&self) -> TagCounts {
        let mut c = TagCounts::default();
        for v in &self.values {
            match v {
                Distance::Num(_) => c.num += 1,
                Distance::None => c.none += 1,
                Distance::Inf => c.inf += 1,
            }
        }
        c
    }

    pub fn num_values(&self) -> Vec<f64> {
        self.values.iter().filter_map(Distance::num).collect()
    }

    /// Same dims, unit box and bounding box.
    pub fn same_grid(&self, other: &DistanceField) -> bool {
        self.grid == other.grid
    }

    /// `#`-prefixed header lines, then `ix,iy,iz,distance` for every cell in
    /// linear order.
    pub fn write_csv(&self, mut w: impl Write) -> std::io::Result<()> {
        let g = &self.grid;
        writeln!(w, "# grid {} {} {}", g.dims.nx, g.dims.ny, g.dims.nz)?;
        writeln!(w, "# ubox {} {} {}", g.ubox.dx, g.ubox.dy, g.ubox.dz)?;
        writeln!(
            w,
            "# bbox {} {} {} {} {} {}",
            g.bbox.min.x, g.bbox.min.y, g.bbox.min.z, g.bbox.max.x, g.bbox.max.y, g.bbox.max.z
        )?;
        match self.sampling_gap {
            Some(gap) => writeln!(w, "# sampling_gap {gap}")?,
            None => writeln!(w, "# sampling_gap none")?,
        }
        writeln!(w, "ix,iy,iz,distance")?;
        for (cell, d) in self.values.iter().enumerate() {
            let (ix, iy, iz) = g.dims.unravel(cell);
            writeln!(w, "{ix},{iy},{iz},{d}")?;
        }
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> std::io::Result<()> {
        let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_csv(&mut w)?;
        w.flush()
    }
}
