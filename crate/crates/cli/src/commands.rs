use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use glitch_core::fixture::{self, FixtureSpec};
use glitch_core::gcode::{parse_file, ParseOptions};
use glitch_core::grid::{bounding_box, segment_in, BoxedPointSets, Grid, Side};
use glitch_core::hausdorff::{compare, Distance, DistanceField};
use glitch_core::postprocess::{combine_fields, histogram, spatial_average, threshold_colorize, ColorField, Histogram, PostError};
use glitch_core::render::{export_cuboids, export_heatmap_layers, export_histogram, export_png, write_report};
use glitch_core::sampling::{build_point_cloud, read_xyz, write_xyz, PointCloud};
use glitch_core::semantics::{run, Cuboid};
use glitch_core::transforms::{align_min_corner, counter_rotate, RotationVector};
use rayon::prelude::*;

use crate::report::{
    ColorSummary, ComparisonReport, FieldSummary, GridReport, InputReport, Params, ReconstructReport, Timings, Verdict,
};
use crate::{names, CliError, RunConfig};

/// A reconstructed (or directly loaded) point cloud.
#[derive(Debug, Clone)]
pub struct Loaded {
    pub path: String,
    pub cloud: PointCloud,
    /// `None` for clouds read from `.xyz` files.
    pub cuboids: Option<Vec<Cuboid>>,
    pub extruding_moves: usize,
}

impl Loaded {
    fn input_report(&self) -> InputReport {
        InputReport { path: self.path.clone(), cuboids: self.cuboids.as_ref().map(Vec::len), points: self.cloud.len() }
    }
}

fn is_xyz(path: &Path) -> bool {
    path.extension().map_or(false, |e| e.eq_ignore_ascii_case("xyz"))
}

/// G-code is parsed, executed and sampled; `.xyz` files are read as is.
pub fn load_input(path: &Path, cfg: &RunConfig) -> Result<Loaded, CliError> {
    let label = path.display().to_string();
    if is_xyz(path) {
        let cloud = read_xyz(path)?;
        return Ok(Loaded { path: label, cloud, cuboids: None, extruding_moves: 0 });
    }
    let program = parse_file(path, ParseOptions { extrusion_mode: cfg.extrusion_mode })?;
    let state = run(&program, cfg.slicing)?;
    if state.cuboids.is_empty() {
        log::warn!("{label}: no extruding moves, point cloud is empty");
    }
    let cloud = build_point_cloud(&state.cuboids, cfg.sampling_gap);
    Ok(Loaded { path: label, cloud, cuboids: Some(state.cuboids), extruding_moves: program.extruding_moves() })
}

fn create_out_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|source| CliError::Io { path: dir.to_path_buf(), source })
}

fn bbox_arrays(cloud: &PointCloud) -> (Option<[f64; 3]>, Option<[f64; 3]>) {
    match cloud.bbox() {
        Some(b) => (Some([b.min.x, b.min.y, b.min.z]), Some([b.max.x, b.max.y, b.max.z])),
        None => (None, None),
    }
}

#[derive(Debug, Clone)]
pub struct ReconstructOutcome {
    pub report: ReconstructReport,
    pub cloud: PointCloud,
}

/// G-code to point cloud: writes `cloud.xyz`, `report.json`, `timings.json`
/// and optionally `cuboids.csv`.
pub fn cmd_reconstruct(input: &Path, cfg: &RunConfig) -> Result<ReconstructOutcome, CliError> {
    cfg.validate()?;
    let mut timings = Timings::default();
    let loaded = timings.time("reconstruct", || load_input(input, cfg))?;
    let (bbox_min, bbox_max) = bbox_arrays(&loaded.cloud);
    let report = ReconstructReport {
        command: "reconstruct",
        input: loaded.input_report(),
        params: Params::from_config(cfg, Vec::new()),
        extruding_moves: loaded.extruding_moves,
        bbox_min,
        bbox_max,
    };

    create_out_dir(&cfg.out_dir)?;
    let out = |name: &str| cfg.out_dir.join(name);
    timings.time("write", || -> Result<(), CliError> {
        write_xyz(&loaded.cloud, &out(names::CLOUD))?;
        if let (true, Some(cuboids)) = (cfg.dump_cuboids, &loaded.cuboids) {
            export_cuboids(cuboids, &out(names::CUBOIDS))?;
        }
        write_report(&report, &out(names::REPORT))?;
        Ok(())
    })?;
    write_report(&timings, &out(names::TIMINGS))?;
    Ok(ReconstructOutcome { report, cloud: loaded.cloud })
}

/// Undo the declared rotation of `moving`, then shift it onto `reference`'s
/// minimum corner unless alignment is off.
pub fn prepare_moving(reference: &PointCloud, moving: &PointCloud, v: RotationVector, align: bool) -> Result<PointCloud, CliError> {
    let turned = counter_rotate(moving, v);
    if align && !reference.is_empty() && !turned.is_empty() {
        Ok(align_min_corner(reference, &turned)?)
    } else {
        Ok(turned)
    }
}

#[derive(Debug, Clone)]
pub struct CompareOutcome {
    pub report: ComparisonReport,
    /// Raw per-cell distances (combined across rotations for
    /// check-invariant).
    pub field: DistanceField,
    /// Field the heatmap and histogram are drawn from.
    pub averaged: DistanceField,
    pub colors: ColorField,
    pub histogram: Histogram,
}

impl CompareOutcome {
    pub fn passed(&self) -> bool {
        self.report.verdict.as_ref().map_or(true, |v| v.pass)
    }
}

fn summarize(field: &DistanceField) -> FieldSummary {
    FieldSummary { cells: field.counts(), stats: glitch_core::postprocess::stats(&field.num_values()) }
}

/// Colors and histogram; a field whose only non-empty cells are `Inf` still
/// gets a heatmap.
fn colorize_and_bin(field: &DistanceField, cfg: &RunConfig) -> Result<(ColorField, Histogram, bool), CliError> {
    match threshold_colorize(field, cfg.threshold_percentile) {
        Ok(colors) => Ok((colors, histogram(field, cfg.bins)?, true)),
        Err(PostError::NoNumericCells) => {
            let values = field.values().iter().map(|d| d.is_inf().then_some(1.0)).collect();
            let colors = ColorField { values, threshold: f64::NAN, v_max: f64::NAN };
            Ok((colors, Histogram::empty(field.counts().inf), false))
        }
        Err(e) => Err(e.into()),
    }
}

struct Emit<'a> {
    command: &'static str,
    inputs: Vec<InputReport>,
    params: Params,
    grid: Grid,
    layers: Vec<(&'a BoxedPointSets, &'a [Side])>,
    raw: DistanceField,
    averaged: DistanceField,
    check: bool,
}

fn emit(e: Emit<'_>, cfg: &RunConfig, timings: &mut Timings) -> Result<CompareOutcome, CliError> {
    let (colors, hist, numeric) = timings.time("postprocess", || colorize_and_bin(&e.averaged, cfg))?;
    let mut params = e.params;
    let max_ramp = colors.max_color();
    let verdict = e.check.then(|| {
        let tol = cfg.tolerance();
        params.tolerance = Some(tol);
        let inf = e.averaged.counts().inf;
        let v_max = numeric.then_some(colors.v_max);
        let (pass, reason) = if inf > 0 {
            (false, format!("{inf} cell(s) have material on one side only"))
        } else if max_ramp.map_or(true, |m| m < 1.0) {
            (true, "no cell reaches the top of the color ramp".to_string())
        } else if v_max.map_or(false, |v| v <= tol) {
            (true, format!("largest averaged distance {} is within tolerance {tol}", v_max.unwrap_or(0.0)))
        } else {
            (false, format!("largest averaged distance {} exceeds tolerance {tol}", v_max.unwrap_or(f64::NAN)))
        };
        Verdict { pass, tolerance: tol, reason }
    });

    create_out_dir(&cfg.out_dir)?;
    let out = |name: &str| cfg.out_dir.join(name);
    let (a, b) = &e.raw.labels;
    let comments = [
        ("inputs", format!("{a} {b}")),
        ("sampling_gap", cfg.sampling_gap.to_string()),
        ("unit_box", format!("{} {} {}", cfg.unit_box.dx, cfg.unit_box.dy, cfg.unit_box.dz)),
        ("threshold_percentile", cfg.threshold_percentile.to_string()),
    ];
    let heatmap_points = timings.time("render", || -> Result<usize, CliError> {
        e.raw.save_csv(&out(names::FIELD)).map_err(|source| CliError::Io { path: out(names::FIELD), source })?;
        e.averaged
            .save_csv(&out(names::AVERAGED_FIELD))
            .map_err(|source| CliError::Io { path: out(names::AVERAGED_FIELD), source })?;
        let n = export_heatmap_layers(&e.layers, &colors, &comments, &out(names::HEATMAP))?;
        export_histogram(&hist, &out(names::HISTOGRAM))?;
        if cfg.png {
            export_png(e.layers[0].0, &colors, &out(names::PNG))?;
        }
        Ok(n)
    })?;

    let report = ComparisonReport {
        command: e.command,
        inputs: e.inputs,
        params,
        grid: GridReport::from(&e.grid),
        raw: summarize(&e.raw),
        averaged: summarize(&e.averaged),
        color: ColorSummary {
            threshold: numeric.then_some(colors.threshold),
            v_max: numeric.then_some(colors.v_max),
            colored_cells: colors.colored_cells(),
            max_ramp,
            heatmap_points,
        },
        verdict,
    };
    write_report(&report, &out(names::REPORT))?;
    write_report(&*timings, &out(names::TIMINGS))?;
    Ok(CompareOutcome { report, field: e.raw, averaged: e.averaged, colors, histogram: hist })
}

/// Compare two programs (or clouds). `rotation` is the rotation the second
/// input was produced with; it is undone before comparing.
pub fn cmd_compare(a: &Path, b: &Path, rotation: RotationVector, cfg: &RunConfig) -> Result<CompareOutcome, CliError> {
    cfg.validate()?;
    let mut timings = Timings::default();
    let (la, lb) = timings.time("reconstruct", || rayon::join(|| load_input(a, cfg), || load_input(b, cfg)));
    let (la, lb) = (la?, lb?);
    let moving = timings.time("transform", || prepare_moving(&la.cloud, &lb.cloud, rotation, cfg.align))?;
    if cfg.dump_cuboids {
        create_out_dir(&cfg.out_dir)?;
        for (i, l) in [&la, &lb].into_iter().enumerate() {
            if let Some(c) = &l.cuboids {
                export_cuboids(c, &cfg.out_dir.join(format!("cuboids_{}.csv", i + 1)))?;
            }
        }
    }
    let sets = timings.time("segment", || -> Result<BoxedPointSets, CliError> {
        let grid = Grid::new(bounding_box(&la.cloud, &moving)?, cfg.unit_box)?;
        Ok(segment_in(&la.cloud, &moving, grid)?)
    })?;
    let raw = timings
        .time("compare", || compare(&sets))
        .with_sampling_gap(cfg.sampling_gap)
        .with_labels(la.path.clone(), lb.path.clone());
    let averaged = timings.time("average", || spatial_average(&raw));
    let both: &[Side] = &[Side::A, Side::B];
    emit(
        Emit {
            command: "compare",
            inputs: vec![la.input_report(), lb.input_report()],
            params: Params::from_config(cfg, vec![rotation]),
            grid: *sets.grid(),
            layers: vec![(&sets, both)],
            raw,
            averaged,
            check: false,
        },
        cfg,
        &mut timings,
    )
}

/// Run the slicer template for one rotated input, returning the G-code it
/// produced.
fn slice_with(template: &str, input: &Path, v: RotationVector, index: usize, cfg: &RunConfig) -> Result<PathBuf, CliError> {
    let dir = cfg.out_dir.join("slices");
    create_out_dir(&dir)?;
    let output = dir.join(format!("rotated_{}.gcode", index + 1));
    let cmd = template
        .replace("{input}", &input.display().to_string())
        .replace("{output}", &output.display().to_string())
        .replace("{rx}", &v.rx.to_string())
        .replace("{ry}", &v.ry.to_string())
        .replace("{rz}", &v.rz.to_string());
    log::info!("slicing: {cmd}");
    let status = Command::new("sh")
        .arg("-c")
        .arg(&cmd)
        .status()
        .map_err(|source| CliError::Io { path: PathBuf::from("sh"), source })?;
    if !status.success() {
        return Err(CliError::Usage(format!("slicer command failed ({status}): {cmd}")));
    }
    Ok(output)
}

/// Compare an original against copies produced under the given rotations,
/// on one shared grid, and combine the per-rotation fields. The verdict
/// passes when no cell is one-sided and either no cell reaches the top of
/// the ramp or every averaged distance is within the tolerance.
pub fn cmd_check_invariant(
    original: &Path,
    rotated: &[PathBuf],
    rotations: &[RotationVector],
    cfg: &RunConfig,
) -> Result<CompareOutcome, CliError> {
    cfg.validate()?;
    if rotated.is_empty() || rotated.len() != rotations.len() {
        return Err(CliError::Usage(format!(
            "need one --rotate per rotated input (got {} inputs, {} rotations)",
            rotated.len(),
            rotations.len()
        )));
    }
    let mut timings = Timings::default();
    let rotated: Vec<PathBuf> = match &cfg.slicer_cmd {
        Some(t) => timings.time("slice", || {
            rotated.iter().zip(rotations).enumerate().map(|(i, (p, v))| slice_with(t, p, *v, i, cfg)).collect::<Result<_, _>>()
        })?,
        None => rotated.to_vec(),
    };

    let (base, others) = timings.time("reconstruct", || {
        rayon::join(
            || load_input(original, cfg),
            || rotated.par_iter().map(|p| load_input(p, cfg)).collect::<Result<Vec<_>, _>>(),
        )
    });
    let (base, others) = (base?, others?);
    let moved: Vec<PointCloud> = timings.time("transform", || {
        others
            .par_iter()
            .zip(rotations.par_iter())
            .map(|(l, v)| prepare_moving(&base.cloud, &l.cloud, *v, cfg.align))
            .collect::<Result<_, _>>()
    })?;

    let all_sets = timings.time("segment", || -> Result<Vec<BoxedPointSets>, CliError> {
        let mut bbox = base.cloud.bbox();
        for m in &moved {
            bbox = match (bbox, m.bbox()) {
                (Some(a), Some(b)) => Some(a.union(&b)),
                (a, b) => a.or(b),
            };
        }
        let bbox = bbox.ok_or(glitch_core::grid::GridError::EmptyInput)?;
        let grid = Grid::new(bbox, cfg.unit_box)?;
        moved.par_iter().map(|m| Ok(segment_in(&base.cloud, m, grid)?)).collect()
    })?;
    let raws: Vec<DistanceField> = timings.time("compare", || {
        all_sets
            .par_iter()
            .zip(others.par_iter())
            .map(|(s, l)| compare(s).with_sampling_gap(cfg.sampling_gap).with_labels(base.path.clone(), l.path.clone()))
            .collect()
    });
    let averaged: Vec<DistanceField> = timings.time("average", || raws.par_iter().map(spatial_average).collect());
    let (raw, averaged) = timings.time("combine", || -> Result<_, CliError> {
        let label_b = others.iter().map(|l| l.path.as_str()).collect::<Vec<_>>().join(",");
        let raw = combine_fields(&raws)?.with_labels(base.path.clone(), label_b.clone());
        let averaged = combine_fields(&averaged)?.with_labels(base.path.clone(), label_b);
        Ok((raw, averaged))
    })?;

    let a_and_b: &[Side] = &[Side::A, Side::B];
    let only_b: &[Side] = &[Side::B];
    let layers = all_sets.iter().enumerate().map(|(i, s)| (s, if i == 0 { a_and_b } else { only_b })).collect();
    let mut inputs = vec![base.input_report()];
    inputs.extend(others.iter().map(Loaded::input_report));
    emit(
        Emit {
            command: "check-invariant",
            inputs,
            params: Params::from_config(cfg, rotations.to_vec()),
            grid: *all_sets[0].grid(),
            layers,
            raw,
            averaged,
            check: true,
        },
        cfg,
        &mut timings,
    )
}

/// Write fixture G-code to `output`.
pub fn cmd_gen_fixture(spec: &FixtureSpec, output: &Path) -> Result<usize, CliError> {
    let text = fixture::generate(spec)?;
    if let Some(parent) = output.parent().filter(|p| !p.as_os_str().is_empty()) {
        create_out_dir(parent)?;
    }
    fs::write(output, &text).map_err(|source| CliError::Io { path: output.to_path_buf(), source })?;
    Ok(text.lines().count())
}

/// Largest numeric distance of a field, `0` if it has none.
pub fn max_num(field: &DistanceField) -> f64 {
    field.values().iter().filter_map(Distance::num).fold(0.0, f64::max)
}
