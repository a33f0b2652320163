//! Reconstruct the geometry a G-code program prints and compare two programs
//! cell by cell.
//!
//! Pipeline: [`gcode`] parses text into motion commands, [`semantics`] turns
//! extruding moves into cuboids, [`sampling`] discretises cuboids into point
//! clouds, [`grid`] buckets two clouds into unit boxes, [`hausdorff`] scores
//! each box, and [`postprocess`] / [`render`] summarise and export the result.

pub mod fixture;
pub mod gcode;
pub mod geometry;
pub mod grid;
pub mod hausdorff;
pub mod kdtree;
pub mod numfmt;
pub mod postprocess;
pub mod render;
pub mod sampling;
pub mod semantics;
pub mod transforms;

pub use geometry::{BoundingBox, Vertex};
pub use hausdorff::{Distance, DistanceField};
pub use sampling::PointCloud;

use thiserror::Error;

/// Any pipeline failure.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] gcode::ParseError),
    #[error(transparent)]
    Run(#[from] semantics::RunError),
    #[error(transparent)]
    Params(#[from] semantics::InvalidParams),
    #[error(transparent)]
    Gap(#[from] sampling::InvalidGap),
    #[error(transparent)]
    Xyz(#[from] sampling::XyzError),
    #[error(transparent)]
    Grid(#[from] grid::GridError),
    #[error(transparent)]
    Post(#[from] postprocess::PostError),
    #[error(transparent)]
    Transform(#[from] transforms::TransformError),
    #[error(transparent)]
    Render(#[from] render::RenderError),
    #[error(transparent)]
    Fixture(#[from] fixture::FixtureError),
}
