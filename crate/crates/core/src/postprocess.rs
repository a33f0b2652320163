//! Smoothing, combining, thresholding and summarising distance fields.

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::geometry::snap_ceil;
use crate::grid::neighborhood;
use crate::hausdorff::{Distance, DistanceField};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PostError {
    #[error("field has no numeric cells")]
    NoNumericCells,
    #[error("fields were computed on different grids")]
    GridMismatch,
    #[error("no fields to combine")]
    NoFields,
    #[error("percentile must lie in (0, 100], got {0}")]
    InvalidPercentile(f64),
    #[error("bin count must be positive")]
    InvalidBinCount,
}

/// Each numeric cell becomes the mean of the numeric cells in its
/// neighbourhood; `None` and `Inf` cells are kept as they are.
pub fn spatial_average(field: &DistanceField) -> DistanceField {
    let dims = field.dims();
    let values = field.values();
    let averaged: Vec<Distance> = (0..values.len())
        .into_par_iter()
        .map(|cell| match values[cell] {
            Distance::Num(_) => {
                let nums: Vec<f64> =
                    neighborhood(dims.unravel(cell), dims).into_iter().filter_map(|c| values[c].num()).collect();
                Distance::Num(mean(&nums))
            }
            other => other,
        })
        .collect();
    field.with_values(averaged)
}

/// Mean taken as offsets from the smallest value, so equal inputs return
/// that value exactly.
fn mean(values: &[f64]) -> f64 {
    let base = values.iter().copied().fold(f64::INFINITY, f64::min);
    base + values.iter().map(|v| v - base).sum::<f64>() / values.len() as f64
}

/// Cell-wise mean over several fields on one grid. Any `Inf` wins, `None`
/// entries are skipped.
pub fn combine_fields(fields: &[DistanceField]) -> Result<DistanceField, PostError> {
    let first = fields.first().ok_or(PostError::NoFields)?;
    if fields.iter().any(|f| !f.same_grid(first)) {
        return Err(PostError::GridMismatch);
    }
    let combined: Vec<Distance> = (0..first.len())
        .into_par_iter()
        .map(|cell| {
            let mut nums = Vec::with_capacity(fields.len());
            for f in fields {
                match f.values()[cell] {
                    Distance::Inf => return Distance::Inf,
                    Distance::Num(v) => nums.push(v),
                    Distance::None => {}
                }
            }
            if nums.is_empty() {
                return Distance::None;
            }
            // Sorting first makes the sum independent of input order.
            nums.sort_by(f64::total_cmp);
            Distance::Num(mean(&nums))
        })
        .collect();
    let mut out = first.with_values(combined);
    if fields.iter().any(|f| f.sampling_gap != first.sampling_gap) {
        out.sampling_gap = None;
    }
    Ok(out)
}

/// Nearest-rank percentile of `sorted` (ascending, non-empty).
pub fn nearest_rank(sorted: &[f64], percentile: f64) -> f64 {
    let n = sorted.len();
    let rank = (snap_ceil(percentile * n as f64 / 100.0) as usize).clamp(1, n);
    sorted[rank - 1]
}

/// Ramp positions in `[0, 1]` per cell; `None` cells carry no color.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ColorField {
    pub values: Vec<Option<f64>>,
    pub threshold: f64,
    pub v_max: f64,
}

impl ColorField {
    pub fn colored_cells(&self) -> usize {
        self.values.iter().filter(|c| c.is_some()).count()
    }

    pub fn max_color(&self) -> Option<f64> {
        self.values.iter().flatten().copied().reduce(f64::max)
    }
}

/// Numeric cells at or below the percentile threshold map to 0, larger
/// values scale linearly up to 1 at the largest numeric value, `Inf` maps
/// to 1.
pub fn threshold_colorize(field: &DistanceField, percentile: f64) -> Result<ColorField, PostError> {
    if !(percentile > 0.0 && percentile <= 100.0) {
        return Err(PostError::InvalidPercentile(percentile));
    }
    let mut nums = field.num_values();
    if nums.is_empty() {
        return Err(PostError::NoNumericCells);
    }
    nums.sort_by(f64::total_cmp);
    let t = nearest_rank(&nums, percentile);
    let v_max = *nums.last().expect("non-empty");
    let values = field
        .values()
        .iter()
        .map(|d| match *d {
            Distance::None => None,
            Distance::Inf => Some(1.0),
            Distance::Num(v) if v <= t => Some(0.0),
            Distance::Num(v) => Some(((v - t) / (v_max - t)).min(1.0)),
        })
        .collect();
    Ok(ColorField { values, threshold: t, v_max })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Bin {
    pub lower: f64,
    pub upper: f64,
    pub count: usize,
}

/// Summary of the numeric cells of a field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Stats {
    pub count: usize,
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    pub median: f64,
    pub skewness: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Histogram {
    pub bins: Vec<Bin>,
    pub inf_count: usize,
    /// `None` when the field has no numeric cells.
    pub stats: Option<Stats>,
}

impl Histogram {
    /// No bins, only an infinity tally.
    pub fn empty(inf_count: usize) -> Self {
        Histogram { bins: Vec::new(), inf_count, stats: None }
    }

    pub fn total(&self) -> usize {
        self.bins.iter().map(|b| b.count).sum::<usize>() + self.inf_count
    }
}

pub fn stats(values: &[f64]) -> Option<Stats> {
    if values.is_empty() {
        return None;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let mean = mean(&sorted);
    let median = if n % 2 == 1 { sorted[n / 2] } else { (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0 };
    let (m2, m3) = sorted.iter().fold((0.0, 0.0), |(m2, m3), v| {
        let d = v - mean;
        (m2 + d * d, m3 + d * d * d)
    });
    let (m2, m3) = (m2 / n as f64, m3 / n as f64);
    let skewness = if m2 > 0.0 { m3 / m2.powf(1.5) } else { 0.0 };
    Some(Stats { count: n, min: sorted[0], max: sorted[n - 1], mean, median, skewness })
}

/// `bin_count` equal-width bins over the numeric range.
pub fn histogram(field: &DistanceField, bin_count: usize) -> Result<Histogram, PostError> {
    if bin_count == 0 {
        return Err(PostError::InvalidBinCount);
    }
    let nums = field.num_values();
    let stats = stats(&nums).ok_or(PostError::NoNumericCells)?;
    let width = (stats.max - stats.min) / bin_count as f64;
    let mut bins: Vec<Bin> = (0..bin_count)
        .map(|i| Bin {
            lower: stats.min + i as f64 * width,
            upper: if i + 1 == bin_count { stats.max } else { stats.min + (i + 1) as f64 * width },
            count: 0,
        })
        .collect();
    for v in nums {
        let i = if width > 0.0 { (((v - stats.min) / width).floor() as usize).min(bin_count - 1) } else { 0 };
        bins[i].count += 1;
    }
    Ok(Histogram { bins, inf_count: field.counts().inf, stats: Some(stats) })
}
