//! Big-step semantics of linear-motion G-code parametrised by nozzle
//! diameter `d` and layer height `h`.
//!
//! The machine state is the extruder position plus the sequence of cuboids
//! deposited so far. A travel move only updates the position; a depositing
//! move also appends the cuboid swept by the nozzle footprint between the
//! previous and the new position.

use std::f64::consts::FRAC_PI_4;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gcode::{MotionCommand, Program};
use crate::geometry::{BoundingBox, Vertex};

const PLANAR_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StepError {
    #[error("zero-length extruding move")]
    DegenerateMove,
    #[error("extruding move changes height from {from} to {to}")]
    NonPlanarMove { from: f64, to: f64 },
}

#[derive(Debug, Error, Clone, PartialEq)]
#[error("{} command(s) could not be executed; first at line {}: {}", .0.len(), .0[0].0, .0[0].1)]
pub struct RunError(pub Vec<(usize, StepError)>);

#[derive(Debug, Error, Clone, PartialEq)]
#[error("invalid slicing parameters: nozzle diameter {d}, layer height {h} (both must be > 0)")]
pub struct InvalidParams {
    pub d: f64,
    pub h: f64,
}

/// Nozzle diameter `d` and layer height `h`, both in mm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlicingParams {
    pub d: f64,
    pub h: f64,
}

impl SlicingParams {
    pub fn new(d: f64, h: f64) -> Result<Self, InvalidParams> {
        if d > 0.0 && h > 0.0 && d.is_finite() && h.is_finite() {
            Ok(SlicingParams { d, h })
        } else {
            Err(InvalidParams { d, h })
        }
    }
}

/// Quad face, vertices in winding order.
pub type Face = [Vertex; 4];

/// Box denoting one extruded line. `bottom[0]` and `bottom[3]` sit behind
/// the start point, `bottom[1]` and `bottom[2]` beyond the end point, so
/// `bottom[0] -> bottom[1]` runs along the move and `bottom[0] -> bottom[3]`
/// across it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cuboid {
    pub top: Face,
    pub bottom: Face,
    /// Move length plus `d`.
    pub length: f64,
    pub breadth: f64,
    pub height: f64,
    /// Source line of the G1 that deposited it (0 when built directly).
    pub line_no: usize,
}

impl Cuboid {
    pub fn vertices(&self) -> impl Iterator<Item = &Vertex> {
        self.bottom.iter().chain(self.top.iter())
    }

    pub fn bbox(&self) -> BoundingBox {
        BoundingBox::from_points(self.vertices()).expect("cuboid has vertices")
    }
}

/// Extruder position and deposited cuboids.
#[derive(Debug, Clone, PartialEq)]
pub struct MachineState {
    pub position: Vertex,
    pub cuboids: Vec<Cuboid>,
}

impl Default for MachineState {
    fn default() -> Self {
        MachineState { position: Vertex::ORIGIN, cuboids: Vec::new() }
    }
}

/// Cuboid swept by a nozzle of diameter `d` moving from `from` to `to`,
/// occupying the layer `[z - h, z]` below the nozzle tip.
pub fn cuboid_from_move(from: Vertex, to: Vertex, params: SlicingParams) -> Result<Cuboid, StepError> {
    if (from.z - to.z).abs() > PLANAR_TOL {
        return Err(StepError::NonPlanarMove { from: from.z, to: to.z });
    }
    let dx = to.x - from.x;
    let dy = to.y - from.y;
    let len = dx.hypot(dy);
    if len == 0.0 {
        return Err(StepError::DegenerateMove);
    }
    // Distance from a segment endpoint to its two nearest corners.
    let k = std::f64::consts::SQRT_2 * (params.d / 2.0);
    let theta = dy.atan2(dx);
    let a = -theta + FRAC_PI_4;
    let b = theta + FRAC_PI_4;
    let z = to.z - params.h;
    let bottom = [
        Vertex::new(from.x - k * a.cos(), from.y + k * a.sin(), z),
        Vertex::new(to.x + k * b.cos(), to.y + k * b.sin(), z),
        Vertex::new(to.x + k * a.cos(), to.y - k * a.sin(), z),
        Vertex::new(from.x - k * b.cos(), from.y - k * b.sin(), z),
    ];
    let lift = Vertex::new(0.0, 0.0, params.h);
    let top = bottom.map(|v| v + lift);
    Ok(Cuboid { top, bottom, length: len + params.d, breadth: params.d, height: params.h, line_no: 0 })
}

impl MachineState {
    /// Execute one resolved command.
    pub fn step(mut self, cmd: &MotionCommand, params: SlicingParams) -> Result<Self, StepError> {
        self.apply(cmd, params)?;
        Ok(self)
    }

    /// In-place `step`. The position advances even when the move is rejected.
    fn apply(&mut self, cmd: &MotionCommand, params: SlicingParams) -> Result<(), StepError> {
        let from = std::mem::replace(&mut self.position, cmd.target);
        if !cmd.extruding {
            return Ok(());
        }
        match cuboid_from_move(from, cmd.target, params) {
            Ok(mut c) => {
                c.line_no = cmd.line_no;
                self.cuboids.push(c);
                Ok(())
            }
            Err(StepError::DegenerateMove) => {
                log::warn!("line {}: skipping zero-length extruding move", cmd.line_no);
                Ok(())
            }
            Err(e) => Err(e),
        }
    }
}

/// Fold `step` over the whole program from the origin with no cuboids.
/// Every failing command is reported, not only the first.
pub fn run(program: &Program, params: SlicingParams) -> Result<MachineState, RunError> {
    let mut errors = Vec::new();
    let mut state = MachineState::default();
    for cmd in &program.commands {
        if let Err(e) = state.apply(cmd, params) {
            errors.push((cmd.line_no, e));
        }
    }
    if errors.is_empty() {
        Ok(state)
    } else {
        Err(RunError(errors))
    }
}
