use std::time::Instant;

use glitch_core::grid::Grid;
use glitch_core::hausdorff::TagCounts;
use glitch_core::postprocess::Stats;
use glitch_core::transforms::RotationVector;
use serde::Serialize;

use crate::RunConfig;

#[derive(Debug, Clone, Serialize)]
pub struct Params {
    pub nozzle_diameter: f64,
    pub layer_height: f64,
    pub sampling_gap: f64,
    pub unit_box: [f64; 3],
    pub threshold_percentile: f64,
    pub bins: usize,
    pub extrusion_mode: String,
    pub rotations: Vec<RotationVector>,
    pub align: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
}

impl Params {
    pub fn from_config(cfg: &RunConfig, rotations: Vec<RotationVector>) -> Self {
        Params {
            nozzle_diameter: cfg.slicing.d,
            layer_height: cfg.slicing.h,
            sampling_gap: cfg.sampling_gap,
            unit_box: [cfg.unit_box.dx, cfg.unit_box.dy, cfg.unit_box.dz],
            threshold_percentile: cfg.threshold_percentile,
            bins: cfg.bins,
            extrusion_mode: format!("{:?}", cfg.extrusion_mode).to_lowercase(),
            rotations,
            align: cfg.align,
            tolerance: None,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GridReport {
    pub dims: [usize; 3],
    pub cells: usize,
    pub bbox_min: [f64; 3],
    pub bbox_max: [f64; 3],
}

impl From<&Grid> for GridReport {
    fn from(g: &Grid) -> Self {
        GridReport {
            dims: [g.dims.nx, g.dims.ny, g.dims.nz],
            cells: g.cells(),
            bbox_min: [g.bbox.min.x, g.bbox.min.y, g.bbox.min.z],
            bbox_max: [g.bbox.max.x, g.bbox.max.y, g.bbox.max.z],
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct InputReport {
    pub path: String,
    pub cuboids: Option<usize>,
    pub points: usize,
}

/// Distribution of one field.
#[derive(Debug, Clone, Serialize)]
pub struct FieldSummary {
    pub cells: TagCounts,
    pub stats: Option<Stats>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ColorSummary {
    pub threshold: Option<f64>,
    pub v_max: Option<f64>,
    pub colored_cells: usize,
    pub max_ramp: Option<f64>,
    pub heatmap_points: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct Verdict {
    pub pass: bool,
    pub tolerance: f64,
    pub reason: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct ComparisonReport {
    pub command: &'static str,
    pub inputs: Vec<InputReport>,
    pub params: Params,
    pub grid: GridReport,
    /// Per-cell distances before smoothing.
    pub raw: FieldSummary,
    /// After neighbourhood averaging (and combining, for check-invariant).
    pub averaged: FieldSummary,
    pub color: ColorSummary,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verdict: Option<Verdict>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ReconstructReport {
    pub command: &'static str,
    pub input: InputReport,
    pub params: Params,
    pub extruding_moves: usize,
    pub bbox_min: Option<[f64; 3]>,
    pub bbox_max: Option<[f64; 3]>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Stage {
    pub stage: String,
    pub seconds: f64,
}

/// Wall-clock per pipeline stage, kept out of the report so reports stay
/// byte-identical across runs.
#[derive(Debug, Default, Clone, Serialize)]
pub struct Timings {
    pub stages: Vec<Stage>,
}

impl Timings {
    pub fn time<T>(&mut self, stage: &str, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let out = f();
        self.stages.push(Stage { stage: stage.to_string(), seconds: start.elapsed().as_secs_f64() });
        out
    }
}
