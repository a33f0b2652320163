//! Artifact writers: colored PLY heatmaps, PNG projections, histogram CSV,
//! JSON reports and cuboid dumps. All output is deterministic.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use image::{Rgba, RgbaImage};
use serde::Serialize;
use thiserror::Error;

use crate::grid::{BoxedPointSets, Side};
use crate::numfmt::sig;
use crate::postprocess::{ColorField, Histogram};
use crate::semantics::Cuboid;

pub const RAMP_LIGHT: [u8; 3] = [255, 245, 240];
pub const RAMP_DARK: [u8; 3] = [103, 0, 13];

#[derive(Debug, Error)]
pub enum RenderError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {message}")]
    Encode { path: PathBuf, message: String },
    #[error("color field has {got} cells but the grid has {expected}")]
    Misaligned { expected: usize, got: usize },
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> RenderError + '_ {
    move |source| RenderError::Io { path: path.to_path_buf(), source }
}

/// Linear RGB interpolation, 0 = lightest, 1 = darkest.
pub fn ramp_rgb(t: f64) -> [u8; 3] {
    let t = t.clamp(0.0, 1.0);
    let mut out = [0u8; 3];
    for i in 0..3 {
        let (a, b) = (RAMP_LIGHT[i] as f64, RAMP_DARK[i] as f64);
        out[i] = (a + (b - a) * t).round() as u8;
    }
    out
}

/// ASCII PLY of every point (both clouds) in every colored cell, tinted by
/// the cell's ramp position. Returns the number of vertices written.
pub fn export_heatmap(
    sets: &BoxedPointSets,
    colors: &ColorField,
    comments: &[(&str, String)],
    path: &Path,
) -> Result<usize, RenderError> {
    export_heatmap_layers(&[(sets, &[Side::A, Side::B])], colors, comments, path)
}

/// Heatmap over several segmentations sharing one grid, e.g. an original
/// compared against several variants. Each entry lists which sides to emit.
/// Points are written cell by cell, then in entry order.
pub fn export_heatmap_layers(
    layers: &[(&BoxedPointSets, &[Side])],
    colors: &ColorField,
    comments: &[(&str, String)],
    path: &Path,
) -> Result<usize, RenderError> {
    for (sets, _) in layers {
        let cells = sets.dims().cells();
        if colors.values.len() != cells {
            return Err(RenderError::Misaligned { expected: cells, got: colors.values.len() });
        }
    }
    let colored: Vec<(usize, [u8; 3])> = colors
        .values
        .iter()
        .enumerate()
        .filter_map(|(cell, c)| c.map(|t| (cell, ramp_rgb(t))))
        .collect();
    let cell_points = |cell: usize| {
        layers.iter().flat_map(move |(sets, sides)| sides.iter().map(move |&side| sets.cell_points(side, cell)))
    };
    let count: usize = colored.iter().map(|&(cell, _)| cell_points(cell).map(<[_]>::len).sum::<usize>()).sum();

    let err = io_err(path);
    let mut w = BufWriter::new(File::create(path).map_err(&err)?);
    writeln!(w, "ply\nformat ascii 1.0").map_err(&err)?;
    for (key, value) in comments {
        writeln!(w, "comment {key} {value}").map_err(&err)?;
    }
    writeln!(
        w,
        "element vertex {count}\nproperty double x\nproperty double y\nproperty double z\n\
         property uchar red\nproperty uchar green\nproperty uchar blue\nend_header"
    )
    .map_err(&err)?;
    for (cell, [r, g, b]) in colored {
        for points in cell_points(cell) {
            for p in points {
                writeln!(w, "{} {} {} {r} {g} {b}", sig(p.x, 9), sig(p.y, 9), sig(p.z, 9)).map_err(&err)?;
            }
        }
    }
    w.flush().map_err(&err)?;
    Ok(count)
}

/// Top-down projection, one pixel per (ix, iy) column, colored by the
/// darkest ramp position over z. Columns without color are transparent.
pub fn export_png(sets: &BoxedPointSets, colors: &ColorField, path: &Path) -> Result<(), RenderError> {
    let dims = sets.dims();
    if colors.values.len() != dims.cells() {
        return Err(RenderError::Misaligned { expected: dims.cells(), got: colors.values.len() });
    }
    let mut img = RgbaImage::new(dims.nx as u32, dims.ny as u32);
    for iy in 0..dims.ny {
        for ix in 0..dims.nx {
            let darkest = (0..dims.nz)
                .filter_map(|iz| colors.values[dims.linear((ix, iy, iz))])
                .reduce(f64::max);
            let px = match darkest {
                Some(t) => {
                    let [r, g, b] = ramp_rgb(t);
                    Rgba([r, g, b, 255])
                }
                None => Rgba([0, 0, 0, 0]),
            };
            // Image rows run top-down, grid y runs bottom-up.
            img.put_pixel(ix as u32, (dims.ny - 1 - iy) as u32, px);
        }
    }
    img.save_with_format(path, image::ImageFormat::Png)
        .map_err(|e| RenderError::Encode { path: path.to_path_buf(), message: e.to_string() })
}

pub fn write_histogram(h: &Histogram, mut w: impl Write) -> std::io::Result<()> {
    writeln!(w, "bin_lower,bin_upper,count")?;
    for b in &h.bins {
        writeln!(w, "{},{},{}", b.lower, b.upper, b.count)?;
    }
    writeln!(w, "inf,{}", h.inf_count)
}

pub fn export_histogram(h: &Histogram, path: &Path) -> Result<(), RenderError> {
    let err = io_err(path);
    let mut w = BufWriter::new(File::create(path).map_err(&err)?);
    write_histogram(h, &mut w).map_err(&err)?;
    w.flush().map_err(&err)
}

/// Pretty-printed JSON with a trailing newline.
pub fn write_report<T: Serialize>(report: &T, path: &Path) -> Result<(), RenderError> {
    let mut text = serde_json::to_string_pretty(report)
        .map_err(|e| RenderError::Encode { path: path.to_path_buf(), message: e.to_string() })?;
    text.push('\n');
    std::fs::write(path, text).map_err(io_err(path))
}

/// One row per cuboid: source line, then the eight corners (bottom face
/// first).
pub fn export_cuboids(cuboids: &[Cuboid], path: &Path) -> Result<(), RenderError> {
    let err = io_err(path);
    let mut w = BufWriter::new(File::create(path).map_err(&err)?);
    write!(w, "line").map_err(&err)?;
    for face in ["b", "t"] {
        for i in 0..4 {
            write!(w, ",{face}{i}x,{face}{i}y,{face}{i}z").map_err(&err)?;
        }
    }
    writeln!(w).map_err(&err)?;
    for c in cuboids {
        write!(w, "{}", c.line_no).map_err(&err)?;
        for v in c.bottom.iter().chain(c.top.iter()) {
            write!(w, ",{},{},{}", sig(v.x, 9), sig(v.y, 9), sig(v.z, 9)).map_err(&err)?;
        }
        writeln!(w).map_err(&err)?;
    }
    w.flush().map_err(&err)
}
