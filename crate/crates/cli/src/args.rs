//! Command-line surface.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use glitch_core::fixture::{FixtureKind, FixtureSpec};
use glitch_core::gcode::ExtrusionModeOption;
use glitch_core::geometry::{BoundingBox, Vertex};
use glitch_core::grid::UnitBoxSpec;
use glitch_core::transforms::RotationVector;

use crate::{CliError, RunConfig};

#[derive(Debug, Parser)]
#[command(name = "glitch", version, about = "Reconstruct and compare the geometry printed by G-code programs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Cmd,
}

#[derive(Debug, Subcommand)]
pub enum Cmd {
    /// Turn a G-code program into a point cloud.
    Reconstruct {
        input: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Compare two G-code programs (or .xyz clouds) cell by cell.
    Compare {
        a: PathBuf,
        b: PathBuf,
        /// Rotation (degrees) the second input was produced with; undone
        /// before comparing.
        #[arg(long, value_name = "RX,RY,RZ", value_parser = parse_rotation, default_value = "0,0,0")]
        rotate: RotationVector,
        #[command(flatten)]
        common: Common,
    },
    /// Check that slicing rotated copies of a model yields the same geometry.
    CheckInvariant {
        original: PathBuf,
        /// Rotated inputs, one per --rotate.
        #[arg(required = true)]
        rotated: Vec<PathBuf>,
        /// Rotation of each rotated input, in order.
        #[arg(long, value_name = "RX,RY,RZ", value_parser = parse_rotation, required = true)]
        rotate: Vec<RotationVector>,
        /// Largest averaged distance (mm) still counted as equal; defaults to
        /// the sampling gap.
        #[arg(long)]
        tolerance: Option<f64>,
        /// Shell template run per rotated input to produce its G-code;
        /// placeholders {input} {output} {rx} {ry} {rz}.
        #[arg(long, value_name = "TEMPLATE")]
        slicer_cmd: Option<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Write synthetic sliced G-code.
    GenFixture {
        #[arg(long, value_parser = parse_kind)]
        kind: FixtureKind,
        /// Length, width and height in mm.
        #[arg(long, value_name = "L,W,H", value_parser = parse_triple)]
        size: [f64; 3],
        /// Fill line spacing in mm; defaults to the nozzle diameter.
        #[arg(long)]
        spacing: Option<f64>,
        #[arg(long)]
        nozzle_diameter: f64,
        #[arg(long)]
        layer_height: f64,
        /// Empty region for slab-with-hole.
        #[arg(long, value_name = "X0,Y0,Z0,X1,Y1,Z1", value_parser = parse_hole)]
        hole: Option<BoundingBox>,
        /// Rotate the model about z before slicing; multiple of 90 degrees.
        #[arg(long, default_value_t = 0, allow_negative_numbers = true)]
        rotate_z: i64,
        #[arg(long, short)]
        output: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModeArg {
    Auto,
    Absolute,
    Relative,
}

/// Flags shared by the pipeline commands.
#[derive(Debug, Args)]
pub struct Common {
    /// Nozzle diameter d, mm.
    #[arg(long)]
    pub nozzle_diameter: f64,
    /// Layer height h, mm.
    #[arg(long)]
    pub layer_height: f64,
    /// Sampling gap g, mm.
    #[arg(long, default_value_t = 0.1)]
    pub sampling_gap: f64,
    /// Unit box edge(s), mm: one value for a cube or DX,DY,DZ.
    #[arg(long, value_name = "DX,DY,DZ", default_value = "1")]
    pub unit_box: String,
    #[arg(long, default_value_t = 90.0)]
    pub threshold_percentile: f64,
    /// Histogram bins.
    #[arg(long, default_value_t = 50)]
    pub bins: usize,
    #[arg(long, value_enum, default_value_t = ModeArg::Auto)]
    pub extrusion_mode: ModeArg,
    /// Skip aligning the second cloud's bounding-box minimum to the first.
    #[arg(long)]
    pub no_align: bool,
    /// Also write a top-down PNG projection of the heatmap.
    #[arg(long)]
    pub png: bool,
    /// Also write the reconstructed cuboids as CSV.
    #[arg(long)]
    pub dump_cuboids: bool,
    #[arg(long, default_value = "glitch-out")]
    pub out: PathBuf,
}

impl Common {
    pub fn to_config(&self) -> Result<RunConfig, CliError> {
        let mut cfg = RunConfig::new(self.nozzle_diameter, self.layer_height, &self.out)?;
        cfg.sampling_gap = self.sampling_gap;
        cfg.unit_box = parse_unit_box(&self.unit_box)?;
        cfg.threshold_percentile = self.threshold_percentile;
        cfg.bins = self.bins;
        cfg.extrusion_mode = match self.extrusion_mode {
            ModeArg::Auto => ExtrusionModeOption::Auto,
            ModeArg::Absolute => ExtrusionModeOption::Absolute,
            ModeArg::Relative => ExtrusionModeOption::Relative,
        };
        cfg.align = !self.no_align;
        cfg.png = self.png;
        cfg.dump_cuboids = self.dump_cuboids;
        cfg.validate()?;
        Ok(cfg)
    }
}

fn numbers(s: &str) -> Result<Vec<f64>, String> {
    s.split(',').map(|t| t.trim().parse::<f64>().map_err(|_| format!("not a number: {t:?}"))).collect()
}

pub fn parse_rotation(s: &str) -> Result<RotationVector, String> {
    s.parse().map_err(|e: glitch_core::transforms::TransformError| e.to_string())
}

fn parse_kind(s: &str) -> Result<FixtureKind, String> {
    s.parse().map_err(|e: glitch_core::fixture::FixtureError| e.to_string())
}

fn parse_triple(s: &str) -> Result<[f64; 3], String> {
    match numbers(s)?[..] {
        [a, b, c] => Ok([a, b, c]),
        _ => Err(format!("expected three comma-separated numbers, got {s:?}")),
    }
}

fn parse_hole(s: &str) -> Result<BoundingBox, String> {
    match numbers(s)?[..] {
        [x0, y0, z0, x1, y1, z1] if x0 <= x1 && y0 <= y1 && z0 <= z1 => {
            Ok(BoundingBox::new(Vertex::new(x0, y0, z0), Vertex::new(x1, y1, z1)))
        }
        _ => Err(format!("expected X0,Y0,Z0,X1,Y1,Z1 with min <= max, got {s:?}")),
    }
}

pub fn parse_unit_box(s: &str) -> Result<UnitBoxSpec, CliError> {
    let bad = |msg: String| CliError::Usage(format!("--unit-box: {msg}"));
    let v = numbers(s).map_err(bad)?;
    let spec = match v[..] {
        [d] => UnitBoxSpec::cube(d),
        [dx, dy, dz] => UnitBoxSpec::new(dx, dy, dz),
        _ => return Err(bad(format!("expected one or three numbers, got {s:?}"))),
    };
    spec.map_err(|e| bad(e.to_string()))
}

/// Fixture spec from gen-fixture flags.
pub fn fixture_spec(
    kind: FixtureKind,
    size: [f64; 3],
    spacing: Option<f64>,
    nozzle_diameter: f64,
    layer_height: f64,
    hole: Option<BoundingBox>,
    rotate_z: i64,
) -> Result<FixtureSpec, CliError> {
    if rotate_z % 90 != 0 {
        return Err(CliError::Usage(format!("--rotate-z must be a multiple of 90, got {rotate_z}")));
    }
    let mut spec = FixtureSpec::new(kind, (size[0], size[1], size[2]), spacing.unwrap_or(nozzle_diameter), nozzle_diameter, layer_height)
        .rotated((rotate_z / 90).rem_euclid(4) as u8);
    spec.hole = hole;
    Ok(spec)
}
