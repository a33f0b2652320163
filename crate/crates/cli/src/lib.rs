//! Library side of the `glitch` command: configuration, the four
//! subcommands and the artifacts they write.

pub mod args;
pub mod commands;
pub mod report;

use std::path::PathBuf;

use glitch_core::gcode::{ExtrusionModeOption, ParseError};
use glitch_core::grid::UnitBoxSpec;
use glitch_core::semantics::SlicingParams;
use thiserror::Error;

pub use commands::{cmd_check_invariant, cmd_compare, cmd_gen_fixture, cmd_reconstruct};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VIOLATION: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_PARSE: i32 = 3;

/// Fixed artifact names under the output directory.
pub mod names {
    pub const REPORT: &str = "report.json";
    pub const FIELD: &str = "field.csv";
    pub const AVERAGED_FIELD: &str = "field_averaged.csv";
    pub const HEATMAP: &str = "heatmap.ply";
    pub const HISTOGRAM: &str = "histogram.csv";
    pub const TIMINGS: &str = "timings.json";
    pub const CLOUD: &str = "cloud.xyz";
    pub const CUBOIDS: &str = "cuboids.csv";
    pub const PNG: &str = "heatmap.png";
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    /// Input could not be parsed or executed.
    #[error("{0}")]
    Program(glitch_core::Error),
    #[error("{0}")]
    Pipeline(glitch_core::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Program(_) => EXIT_PARSE,
            _ => EXIT_USAGE,
        }
    }
}

impl From<glitch_core::Error> for CliError {
    fn from(e: glitch_core::Error) -> Self {
        use glitch_core::Error as E;
        match e {
            E::Parse(ParseError::Io { .. }) | E::Xyz(glitch_core::sampling::XyzError::Io { .. }) => {
                CliError::Usage(e.to_string())
            }
            E::Parse(_) | E::Run(_) | E::Xyz(_) => CliError::Program(e),
            E::Params(_) | E::Gap(_) => CliError::Usage(e.to_string()),
            other => CliError::Pipeline(other),
        }
    }
}

macro_rules! via_core {
    ($($t:ty),*) => {$(
        impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CliError::from(glitch_core::Error::from(e))
            }
        }
    )*};
}

via_core!(
    glitch_core::gcode::ParseError,
    glitch_core::semantics::RunError,
    glitch_core::sampling::XyzError,
    glitch_core::grid::GridError,
    glitch_core::postprocess::PostError,
    glitch_core::transforms::TransformError,
    glitch_core::render::RenderError,
    glitch_core::fixture::FixtureError
);

/// Parameters shared by every pipeline command.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub slicing: SlicingParams,
    pub sampling_gap: f64,
    pub unit_box: UnitBoxSpec,
    pub threshold_percentile: f64,
    pub bins: usize,
    pub extrusion_mode: ExtrusionModeOption,
    pub align: bool,
    pub png: bool,
    pub dump_cuboids: bool,
    /// Largest numeric distance still accepted as equal by check-invariant;
    /// defaults to the sampling gap.
    pub tolerance: Option<f64>,
    pub slicer_cmd: Option<String>,
    pub out_dir: PathBuf,
}

impl RunConfig {
    /// Validated config with defaults for everything but `d`, `h` and the
    /// output directory.
    pub fn new(d: f64, h: f64, out_dir: impl Into<PathBuf>) -> Result<Self, CliError> {
        let slicing = SlicingParams::new(d, h).map_err(|e| CliError::Usage(e.to_string()))?;
        Ok(RunConfig {
            slicing,
            sampling_gap: 0.1,
            unit_box: UnitBoxSpec::cube(1.0).expect("positive"),
            threshold_percentile: 90.0,
            bins: 50,
            extrusion_mode: ExtrusionModeOption::Auto,
            align: true,
            png: false,
            dump_cuboids: false,
            tolerance: None,
            slicer_cmd: None,
            out_dir: out_dir.into(),
        })
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let pos = |v: f64| v > 0.0 && v.is_finite();
        if !pos(self.sampling_gap) {
            return Err(CliError::Usage(format!("sampling gap must be positive, got {}", self.sampling_gap)));
        }
        if !(self.threshold_percentile > 0.0 && self.threshold_percentile < 100.0) {
            return Err(CliError::Usage(format!(
                "threshold percentile must lie in (0, 100), got {}",
                self.threshold_percentile
            )));
        }
        if self.bins == 0 {
            return Err(CliError::Usage("bin count must be positive".into()));
        }
        if let Some(t) = self.tolerance {
            if !(t >= 0.0 && t.is_finite()) {
                return Err(CliError::Usage(format!("tolerance must be non-negative, got {t}")));
            }
        }
        Ok(())
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance.unwrap_or(self.sampling_gap)
    }
}
