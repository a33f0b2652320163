//! Acceptance suite. Runs every criterion in sequence (so timings are not
//! disturbed by other tests), prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails.
//!
//! Pass criterion numbers or name fragments as arguments to run a subset:
//! `cargo test -p glitch-cli --test acceptance -- 1 5`.

use std::collections::HashSet;
use std::ops::Index;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use glitch_cli::{cmd_check_invariant, cmd_compare, RunConfig};
use glitch_core::fixture::{generate, FixtureKind, FixtureSpec};
use glitch_core::gcode::{parse_program, ParseOptions};
use glitch_core::geometry::{BoundingBox, Vertex};
use glitch_core::grid::{neighborhood, segment_in, Grid, UnitBoxSpec};
use glitch_core::hausdorff::{box_distance, cell_only_distance, compare, one_way_hd, Distance, DistanceField};
use glitch_core::postprocess::{combine_fields, nearest_rank, spatial_average, threshold_colorize};
use glitch_core::sampling::{build_point_cloud, for_each_sample, sample_count, PointCloud};
use glitch_core::semantics::{cuboid_from_move, run, Cuboid, SlicingParams};
use glitch_core::transforms::{align_min_corner, counter_rotate, RotationVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;

const D: f64 = 0.4;
const H: f64 = 0.2;

fn params() -> SlicingParams {
    SlicingParams::new(D, H).unwrap()
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn cuboids_of(spec: &FixtureSpec) -> Vec<Cuboid> {
    let text = generate(spec).expect("valid fixture");
    let program = parse_program(&text, ParseOptions::default()).expect("fixture parses");
    run(&program, params()).expect("fixture runs").cuboids
}

fn write_fixture(dir: &Path, name: &str, spec: &FixtureSpec) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, generate(spec).expect("valid fixture")).unwrap();
    path
}

fn config(out: &Path, g: f64) -> RunConfig {
    let mut cfg = RunConfig::new(D, H, out).unwrap();
    cfg.sampling_gap = g;
    cfg
}

fn unit() -> UnitBoxSpec {
    UnitBoxSpec::cube(1.0).unwrap()
}

// 1 -------------------------------------------------------------------------

/// Both clouds of the rotate-and-back experiment, keeping only points whose
/// cell lies in `keep` (all points when `keep` is `None`). Bounding boxes are
/// taken over every sample, so the grid matches the full clouds exactly.
fn rotate_back_clouds(cuboids: &[Cuboid], g: f64, rot: RotationVector, keep: Option<&dyn Fn(&Grid) -> Vec<bool>>) -> (Grid, PointCloud, PointCloud, usize) {
    // Rotate then rotate back; the round trip leaves only rounding noise.
    let (fwd, back) = (rot.matrix(), rot.inverse_matrix());
    let twin = |p: Vertex| mat_vec(&back, mat_vec(&fwd, p));
    let mut bbox: Option<BoundingBox> = None;
    let mut total = 0usize;
    for c in cuboids {
        for_each_sample(c, g, |p| {
            total += 1;
            for q in [p, twin(p)] {
                match bbox.as_mut() {
                    Some(b) => b.include(q),
                    None => bbox = Some(BoundingBox::from_point(q)),
                }
            }
        });
    }
    let grid = Grid::new(bbox.expect("non-empty"), unit()).unwrap();
    let mask = keep.map(|f| f(&grid));
    let (mut a, mut b) = (Vec::new(), Vec::new());
    for c in cuboids {
        for_each_sample(c, g, |p| {
            let q = twin(p);
            let wanted = |v: &Vertex| mask.as_ref().map_or(true, |m| m[grid.cell_of(v).unwrap()]);
            if wanted(&p) {
                a.push(p);
            }
            if wanted(&q) {
                b.push(q);
            }
        });
    }
    (grid, PointCloud::new(a), PointCloud::new(b), total)
}

fn mat_vec(m: &impl Index<(usize, usize), Output = f64>, p: Vertex) -> Vertex {
    let row = |i: usize| m[(i, 0)] * p.x + m[(i, 1)] * p.y + m[(i, 2)] * p.z;
    Vertex::new(row(0), row(1), row(2))
}

fn non_increasing(seq: &[f64], tol: f64) -> bool {
    seq.windows(2).all(|w| w[1] <= w[0] + tol)
}

fn as_value(d: Distance) -> Option<f64> {
    match d {
        Distance::Num(v) => Some(v),
        Distance::Inf => Some(f64::INFINITY),
        Distance::None => None,
    }
}

fn c1_monotone_refinement() -> Check {
    const TRACKED: usize = 6;
    let gaps = [0.10, 0.08, 0.06, 0.04, 0.02];
    let spec = FixtureSpec::new(FixtureKind::Prism, (20.0, 10.0, 2.0), 0.4, D, H);
    let cuboids = cuboids_of(&spec);
    let rot = RotationVector::new(0.0, 0.0, 30.0);

    // Pick tracked cells among the material-bearing cells of the coarsest run.
    let (grid0, a0, _, _) = rotate_back_clouds(&cuboids, gaps[0], rot, None);
    let occupied: Vec<usize> = {
        let mut v: Vec<usize> = a0.points().iter().map(|p| grid0.cell_of(p).unwrap()).collect();
        v.sort_unstable();
        v.dedup();
        v
    };
    drop(a0);
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0001);
    let mut tracked: Vec<usize> = Vec::new();
    while tracked.len() < TRACKED.min(occupied.len()) {
        let c = occupied[rng.gen_range(0..occupied.len())];
        if !tracked.contains(&c) {
            tracked.push(c);
        }
    }
    tracked.sort_unstable();

    let mut augmented: Vec<Vec<Option<f64>>> = vec![Vec::new(); tracked.len()];
    let mut naive: Vec<Vec<Option<f64>>> = vec![Vec::new(); tracked.len()];
    let mut sizes = Vec::new();
    for &g in &gaps {
        let tracked_ref = &tracked;
        let keep = move |grid: &Grid| {
            let mut mask = vec![false; grid.cells()];
            for &c in tracked_ref {
                for n in neighborhood(grid.dims.unravel(c), grid.dims) {
                    mask[n] = true;
                }
            }
            mask
        };
        let (grid, a, b, total) = rotate_back_clouds(&cuboids, g, rot, Some(&keep));
        if grid.dims != grid0.dims {
            return Err(format!("grid changed with g: {:?} vs {:?}", grid.dims, grid0.dims));
        }
        sizes.push(total);
        let sets = segment_in(&a, &b, grid).map_err(|e| e.to_string())?;
        drop((a, b));
        for (k, &c) in tracked.iter().enumerate() {
            let idx = grid.dims.unravel(c);
            augmented[k].push(as_value(box_distance(&sets, idx)));
            naive[k].push(as_value(cell_only_distance(&sets, idx)));
        }
    }

    let mut lines = Vec::new();
    let mut naive_breaks = 0;
    for (k, &c) in tracked.iter().enumerate() {
        if augmented[k].iter().any(Option::is_none) {
            lines.push(format!("cell {c} is empty at some g, skipped"));
            continue;
        }
        let aug: Vec<f64> = augmented[k].iter().map(|v| v.unwrap()).collect();
        ensure(non_increasing(&aug, 1e-9), || format!("augmented distance of cell {c} increases as g shrinks: {aug:?}"))?;
        let nv: Vec<f64> = naive[k].iter().map(|v| v.unwrap_or(0.0)).collect();
        if !non_increasing(&nv, 1e-9) {
            naive_breaks += 1;
        }
        lines.push(format!("cell {c}: augmented max {:.2e}, naive {:?}", aug.iter().cloned().fold(0.0, f64::max), nv));
    }
    ensure(lines.iter().filter(|l| !l.contains("skipped")).count() > 0, || "no tracked cell was non-empty".into())?;
    ensure(naive_breaks > 0, || format!("naive per-cell distance was monotone in every tracked cell: {lines:?}"))?;
    Ok(format!(
        "{} tracked cells monotone (tol 1e-9); naive variant non-monotone in {naive_breaks}; samples per cloud {:?}",
        tracked.len(),
        sizes
    ))
}

// 2 -------------------------------------------------------------------------

/// Independent cell bookkeeping for the oracle.
struct OracleGrid {
    min: Vertex,
    d: [f64; 3],
    n: [usize; 3],
}

impl OracleGrid {
    fn new(points: &[Vertex], d: [f64; 3]) -> Self {
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for p in points {
            for (a, v) in [p.x, p.y, p.z].into_iter().enumerate() {
                lo[a] = lo[a].min(v);
                hi[a] = hi[a].max(v);
            }
        }
        let mut n = [1usize; 3];
        for a in 0..3 {
            let q = (hi[a] - lo[a]) / d[a];
            // Quotients within 1e-9 (relative) of an integer count as exact.
            let r = q.round();
            let c = if (q - r).abs() <= 1e-9 * r.abs().max(1.0) { r } else { q.ceil() };
            n[a] = (c as usize).max(1);
        }
        OracleGrid { min: Vertex::new(lo[0], lo[1], lo[2]), d, n }
    }

    fn index(&self, p: &Vertex) -> [usize; 3] {
        let mut out = [0; 3];
        for (a, (v, m)) in [(p.x, self.min.x), (p.y, self.min.y), (p.z, self.min.z)].into_iter().enumerate() {
            let f = ((v - m) / self.d[a]).floor();
            out[a] = if f < 0.0 { 0 } else { (f as usize).min(self.n[a] - 1) };
        }
        out
    }
}

fn brute_sup_min(xs: &[Vertex], ys: &[Vertex]) -> f64 {
    let mut sup = 0.0f64;
    for x in xs {
        let mut best = f64::INFINITY;
        for y in ys {
            let (dx, dy, dz) = (x.x - y.x, x.y - y.y, x.z - y.z);
            best = best.min((dx * dx + dy * dy + dz * dz).sqrt());
        }
        sup = sup.max(best);
    }
    sup
}

fn random_cloud(rng: &mut ChaCha8Rng, n: usize, extent: [f64; 3], snap: Option<f64>) -> Vec<Vertex> {
    (0..n)
        .map(|_| {
            let mut c = [0.0; 3];
            for a in 0..3 {
                c[a] = rng.gen_range(0.0..extent[a]);
                if let Some(s) = snap {
                    // Lattice coordinates land exactly on box faces.
                    c[a] = (c[a] / s).round() * s;
                }
            }
            Vertex::new(c[0], c[1], c[2])
        })
        .collect()
}

fn c2_oracle_equivalence() -> Check {
    const INSTANCES: usize = 120;
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0002);
    let mut cells_checked = 0usize;
    let mut tags = [0usize; 3];
    let mut worst = 0.0f64;
    for inst in 0..INSTANCES {
        let extent = [rng.gen_range(1.0..6.0), rng.gen_range(1.0..6.0), rng.gen_range(0.5..3.0)];
        let ubox = [rng.gen_range(0.3..2.0), rng.gen_range(0.3..2.0), rng.gen_range(0.3..2.0)];
        let snap = if rng.gen_bool(0.3) { Some(0.25) } else { None };
        let na = rng.gen_range(1..=5000);
        let a = random_cloud(&mut rng, na, extent, snap);
        let b: Vec<Vertex> = match inst % 3 {
            // Perturbed copy of A.
            0 => a
                .iter()
                .map(|p| *p + Vertex::new(rng.gen_range(-0.05..0.05), rng.gen_range(-0.05..0.05), rng.gen_range(-0.05..0.05)))
                .collect(),
            // Independent cloud over part of the region, leaving one-sided cells.
            1 => {
                let nb = rng.gen_range(1..=5000);
                let part = [extent[0] * 0.5, extent[1], extent[2]];
                random_cloud(&mut rng, nb, part, snap)
            }
            _ => {
                let nb = rng.gen_range(1..=5000);
                random_cloud(&mut rng, nb, extent, snap)
            }
        };

        let all: Vec<Vertex> = a.iter().chain(&b).copied().collect();
        let oracle = OracleGrid::new(&all, ubox);
        let (pa, pb) = (PointCloud::new(a.clone()), PointCloud::new(b.clone()));
        let spec = UnitBoxSpec::new(ubox[0], ubox[1], ubox[2]).unwrap();
        let sets = glitch_core::grid::segment(&pa, &pb, spec).map_err(|e| e.to_string())?;
        let dims = sets.dims();
        ensure([dims.nx, dims.ny, dims.nz] == oracle.n, || format!("instance {inst}: dims {dims:?} vs oracle {:?}", oracle.n))?;
        let field = compare(&sets);

        let (nx, ny, nz) = (oracle.n[0], oracle.n[1], oracle.n[2]);
        let lin = |i: [usize; 3]| i[0] + nx * (i[1] + ny * i[2]);
        let mut buckets: [Vec<Vec<Vertex>>; 2] = [vec![Vec::new(); nx * ny * nz], vec![Vec::new(); nx * ny * nz]];
        for p in &a {
            buckets[0][lin(oracle.index(p))].push(*p);
        }
        for p in &b {
            buckets[1][lin(oracle.index(p))].push(*p);
        }
        for iz in 0..nz {
            for iy in 0..ny {
                for ix in 0..nx {
                    let cell = lin([ix, iy, iz]);
                    let (x, y) = (&buckets[0][cell], &buckets[1][cell]);
                    let gather = |side: usize| {
                        let mut out = Vec::new();
                        for jz in iz.saturating_sub(1)..=(iz + 1).min(nz - 1) {
                            for jy in iy.saturating_sub(1)..=(iy + 1).min(ny - 1) {
                                for jx in ix.saturating_sub(1)..=(ix + 1).min(nx - 1) {
                                    out.extend_from_slice(&buckets[side][lin([jx, jy, jz])]);
                                }
                            }
                        }
                        out
                    };
                    let expected = if x.is_empty() && y.is_empty() {
                        Distance::None
                    } else {
                        let (xn, yn) = (gather(0), gather(1));
                        let t1 = if x.is_empty() { 0.0 } else if yn.is_empty() { f64::INFINITY } else { brute_sup_min(x, &yn) };
                        let t2 = if y.is_empty() { 0.0 } else if xn.is_empty() { f64::INFINITY } else { brute_sup_min(y, &xn) };
                        let m = t1.max(t2);
                        if m.is_infinite() { Distance::Inf } else { Distance::Num(m) }
                    };
                    let got = field.values()[cell];
                    match (expected, got) {
                        (Distance::Num(e), Distance::Num(g)) => {
                            worst = worst.max((e - g).abs());
                            ensure((e - g).abs() <= 1e-12, || format!("instance {inst} cell {cell}: {g} vs oracle {e}"))?;
                            tags[0] += 1;
                        }
                        (Distance::None, Distance::None) => tags[1] += 1,
                        (Distance::Inf, Distance::Inf) => tags[2] += 1,
                        (e, g) => return Err(format!("instance {inst} cell {cell}: {g} vs oracle {e}")),
                    }
                    cells_checked += 1;
                }
            }
        }
    }
    ensure(tags.iter().all(|&t| t > 0), || format!("instances did not cover every tag: {tags:?}"))?;
    Ok(format!(
        "{INSTANCES} instances, {cells_checked} cells ({} num, {} none, {} inf), max |diff| {worst:.1e}",
        tags[0], tags[1], tags[2]
    ))
}

// 3 -------------------------------------------------------------------------

fn fixture_kinds() -> Vec<(&'static str, FixtureSpec)> {
    let hole = BoundingBox::new(Vertex::new(2.0, 1.6, 0.2), Vertex::new(5.0, 4.4, 0.6));
    vec![
        ("slab", FixtureSpec::new(FixtureKind::Slab, (8.0, 6.0, 0.8), 0.4, D, H)),
        ("slab-with-hole", FixtureSpec::new(FixtureKind::SlabWithHole, (8.0, 6.0, 0.8), 0.4, D, H).with_hole(hole)),
        ("prism", FixtureSpec::new(FixtureKind::Prism, (8.0, 6.0, 0.8), 0.4, D, H)),
    ]
}

fn c3_self_comparison() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut notes = Vec::new();
    for (name, spec) in fixture_kinds() {
        let path = write_fixture(dir.path(), &format!("{name}.gcode"), &spec);
        let out = cmd_compare(&path, &path, RotationVector::IDENTITY, &config(&dir.path().join(format!("{name}-cmp")), 0.1))
            .map_err(|e| e.to_string())?;
        let stats = out.report.raw.stats.ok_or("no numeric cells")?;
        ensure(stats.max == 0.0, || format!("{name}: max distance {}", stats.max))?;
        ensure(out.report.raw.cells.inf == 0, || format!("{name}: {} inf cells", out.report.raw.cells.inf))?;
        let check = cmd_check_invariant(
            &path,
            &[path.clone()],
            &[RotationVector::IDENTITY],
            &config(&dir.path().join(format!("{name}-inv")), 0.1),
        )
        .map_err(|e| e.to_string())?;
        ensure(check.passed(), || format!("{name}: check-invariant failed: {:?}", check.report.verdict))?;
        notes.push(format!("{name} ({} cells)", out.report.raw.cells.num));
    }
    Ok(format!("max 0, no inf, verdict pass for {}", notes.join(", ")))
}

// 4 -------------------------------------------------------------------------

fn c4_sampling_formula() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0004);
    let mut total = 0usize;
    for i in 0..100 {
        let d = rng.gen_range(0.1..1.0);
        let h = rng.gen_range(0.05..0.4);
        let g = rng.gen_range(0.02..0.5);
        let z = rng.gen_range(0.2..20.0);
        let from = Vertex::new(rng.gen_range(-20.0..20.0), rng.gen_range(-20.0..20.0), z);
        let len = rng.gen_range(0.05..20.0);
        let theta: f64 = rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI);
        let to = Vertex::new(from.x + len * theta.cos(), from.y + len * theta.sin(), z);
        let cuboid = cuboid_from_move(from, to, SlicingParams::new(d, h).unwrap()).map_err(|e| e.to_string())?;
        let l = ((to.x - from.x).powi(2) + (to.y - from.y).powi(2)).sqrt();
        let expected = (((l + d) / g).ceil() as usize + 1) * ((d / g).ceil() as usize + 1) * ((h / g).ceil() as usize + 1);
        let mut produced = 0usize;
        for_each_sample(&cuboid, g, |_| produced += 1);
        ensure(produced == expected && sample_count(&cuboid, g) == expected, || {
            format!("cuboid {i} (l={l}, d={d}, h={h}, g={g}): {produced} points, formula {expected}")
        })?;
        total += produced;
    }
    Ok(format!("100 cuboids, {total} points, all counts exact"))
}

// 5 -------------------------------------------------------------------------

fn c5_fault_localization() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let size = (14.0, 14.0, 6.0);
    // 5 x 5 x 4 unit boxes, so interior cells have neighbourhoods inside it.
    let hole = BoundingBox::new(Vertex::new(4.0, 4.0, 1.0), Vertex::new(9.0, 9.0, 5.0));
    let slab = write_fixture(dir.path(), "slab.gcode", &FixtureSpec::new(FixtureKind::Slab, size, 0.4, D, H));
    let holed = write_fixture(
        dir.path(),
        "hole.gcode",
        &FixtureSpec::new(FixtureKind::SlabWithHole, size, 0.4, D, H).with_hole(hole),
    );
    let out = cmd_compare(&slab, &holed, RotationVector::IDENTITY, &config(&dir.path().join("out"), 0.1)).map_err(|e| e.to_string())?;
    let field = &out.averaged;
    let grid = field.grid;
    let region = BoundingBox::new(hole.min - Vertex::new(1.0, 1.0, 1.0), hole.max + Vertex::new(1.0, 1.0, 1.0)).inflate(1e-9);

    let mut nums = field.num_values();
    nums.sort_by(f64::total_cmp);
    let t99 = nearest_rank(&nums, 99.0);
    let (mut flagged, mut inside, mut inf_outside, mut inf_total) = (0, 0, 0, 0);
    for (cell, d) in field.values().iter().enumerate() {
        let bounds = grid.cell_bounds(grid.dims.unravel(cell));
        let within = region.contains(&bounds.min, 0.0) && region.contains(&bounds.max, 0.0);
        let is_flagged = match d {
            Distance::Inf => {
                inf_total += 1;
                if !within {
                    inf_outside += 1;
                }
                true
            }
            Distance::Num(v) => *v >= t99,
            Distance::None => false,
        };
        if is_flagged {
            flagged += 1;
            if within {
                inside += 1;
            }
        }
    }
    ensure(flagged > 0, || "no cell flagged".into())?;
    ensure(inf_outside == 0, || format!("{inf_outside} Inf cells outside the dilated hole"))?;
    let share = inside as f64 / flagged as f64;
    ensure(share >= 0.9, || format!("only {inside}/{flagged} flagged cells inside the dilated hole"))?;
    Ok(format!(
        "{inside}/{flagged} flagged cells ({:.0}%) inside dilated hole; {inf_total} Inf cells, none outside; p99 = {t99:.4}",
        share * 100.0
    ))
}

// 6 -------------------------------------------------------------------------

fn c6_distance_algebra() -> Check {
    let v = Vertex::new;
    // one_way_hd conventions.
    ensure(one_way_hd(&[], &[]) == Distance::Num(0.0), || "sup over empty set must be 0".into())?;
    ensure(one_way_hd(&[v(0.0, 0.0, 0.0)], &[]) == Distance::Inf, || "no neighbour must be Inf".into())?;

    // Cell 1 of a 3x1x1 grid with every presence pattern of: A in the cell,
    // B in the cell, A in cell 0, B in cell 2.
    let grid = Grid::new(BoundingBox::new(v(0.0, 0.0, 0.0), v(3.0, 1.0, 1.0)), unit()).unwrap();
    let mut box_cases = 0;
    for mask in 0..16u32 {
        let (x, y, an, bn) = (mask & 1 != 0, mask & 2 != 0, mask & 4 != 0, mask & 8 != 0);
        // The grid is fixed up front, so empty sides are allowed.
        let (mut a, mut b) = (Vec::new(), Vec::new());
        if x {
            a.push(v(1.5, 0.5, 0.5));
        }
        if y {
            b.push(v(1.5, 0.5, 0.5));
        }
        if an {
            a.push(v(0.5, 0.5, 0.5));
        }
        if bn {
            b.push(v(2.5, 0.5, 0.5));
        }
        let sets = segment_in(&PointCloud::new(a), &PointCloud::new(b), grid).map_err(|e| e.to_string())?;
        let got = box_distance(&sets, (1, 0, 0));
        let expected = if !x && !y {
            Distance::None
        } else {
            let t1 = if !x { 0.0 } else if y { 0.0 } else if bn { 1.0 } else { f64::INFINITY };
            let t2 = if !y { 0.0 } else if x { 0.0 } else if an { 1.0 } else { f64::INFINITY };
            let m = t1.max(t2);
            if m.is_infinite() { Distance::Inf } else { Distance::Num(m) }
        };
        ensure(got == expected, || format!("presence mask {mask:04b}: got {got}, expected {expected}"))?;
        box_cases += 1;
    }

    // combine_fields over every list of length 1..=4 from {3, 6, None, Inf}.
    let alphabet = [Distance::Num(3.0), Distance::Num(6.0), Distance::None, Distance::Inf];
    let one = Grid::new(BoundingBox::new(v(0.0, 0.0, 0.0), v(1.0, 1.0, 1.0)), unit()).unwrap();
    let mut combine_cases = 0;
    for len in 1..=4u32 {
        for code in 0..4usize.pow(len) {
            let items: Vec<Distance> = (0..len).map(|i| alphabet[(code / 4usize.pow(i)) % 4]).collect();
            let fields: Vec<DistanceField> = items.iter().map(|d| DistanceField::new(one, vec![*d])).collect();
            let got = combine_fields(&fields).map_err(|e| e.to_string())?.values()[0];
            let nums: Vec<f64> = items.iter().filter_map(Distance::num).collect();
            let expected = if items.iter().any(|d| d.is_inf()) {
                Distance::Inf
            } else if nums.is_empty() {
                Distance::None
            } else {
                Distance::Num(nums.iter().sum::<f64>() / nums.len() as f64)
            };
            ensure(got == expected, || format!("combine {items:?}: got {got}, expected {expected}"))?;
            combine_cases += 1;
        }
    }
    let other = Grid::new(BoundingBox::new(v(0.0, 0.0, 0.0), v(2.0, 1.0, 1.0)), unit()).unwrap();
    ensure(
        combine_fields(&[DistanceField::new(one, vec![Distance::None]), DistanceField::new(other, vec![Distance::None; 2])]).is_err(),
        || "mismatched grids must be rejected".into(),
    )?;

    // spatial_average and colorize over every assignment of a 5x1x1 grid.
    let line = Grid::new(BoundingBox::new(v(0.0, 0.0, 0.0), v(5.0, 1.0, 1.0)), unit()).unwrap();
    let mut average_cases = 0;
    for code in 0..4usize.pow(5) {
        let values: Vec<Distance> = (0..5).map(|i| alphabet[(code / 4usize.pow(i)) % 4]).collect();
        let field = DistanceField::new(line, values.clone());
        let avg = spatial_average(&field);
        for i in 0..5 {
            let expected = match values[i] {
                Distance::Num(_) => {
                    let lo = i.saturating_sub(1);
                    let hi = (i + 1).min(4);
                    let nums: Vec<f64> = values[lo..=hi].iter().filter_map(Distance::num).collect();
                    Distance::Num(nums.iter().sum::<f64>() / nums.len() as f64)
                }
                other => other,
            };
            ensure(avg.values()[i] == expected, || format!("average {values:?} at {i}: got {}, expected {expected}", avg.values()[i]))?;
        }
        if let Ok(colors) = threshold_colorize(&field, 90.0) {
            for (d, c) in values.iter().zip(&colors.values) {
                let ok = match d {
                    Distance::None => c.is_none(),
                    Distance::Inf => *c == Some(1.0),
                    Distance::Num(_) => c.map_or(false, |c| (0.0..=1.0).contains(&c)),
                };
                ensure(ok, || format!("colorize {values:?}: {d} -> {c:?}"))?;
            }
        } else {
            ensure(values.iter().all(|d| d.num().is_none()), || format!("colorize rejected {values:?}"))?;
        }
        average_cases += 1;
    }
    Ok(format!("{box_cases} box cases, {combine_cases} combine cases, {average_cases} averaging/coloring cases, all exact"))
}

// 7 -------------------------------------------------------------------------

fn c7_skewness() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0007);
    let mut pairs = Vec::new();
    for trial in 0..10 {
        let l = 0.4 * rng.gen_range(20..35) as f64;
        let w = 0.4 * rng.gen_range(15..30) as f64;
        let h = 0.2 * rng.gen_range(4..8) as f64;
        let (hw, hl) = (rng.gen_range(2.5..4.0), rng.gen_range(2.5..4.0));
        let (hx, hy) = (rng.gen_range(1.0..l - hl - 1.0), rng.gen_range(1.0..w - hw - 1.0));
        let hole = BoundingBox::new(Vertex::new(hx, hy, 0.0), Vertex::new(hx + hl, hy + hw, h));
        let turns: u8 = rng.gen_range(1..4);
        let rotation = RotationVector::new(0.0, 0.0, 90.0 * turns as f64);

        let base = FixtureSpec::new(FixtureKind::Slab, (l, w, h), 0.4, D, H);
        let slab = write_fixture(dir.path(), &format!("slab{trial}.gcode"), &base);
        let turned = write_fixture(dir.path(), &format!("turned{trial}.gcode"), &base.clone().rotated(turns));
        let defect = write_fixture(
            dir.path(),
            &format!("defect{trial}.gcode"),
            &FixtureSpec { kind: FixtureKind::SlabWithHole, ..base.clone() }.with_hole(hole).rotated(turns),
        );
        let skew = |b: &Path, tag: &str| -> Result<f64, String> {
            let out = cmd_compare(&slab, b, rotation, &config(&dir.path().join(format!("{tag}{trial}")), 0.1)).map_err(|e| e.to_string())?;
            Ok(out.report.averaged.stats.map_or(0.0, |s| s.skewness))
        };
        let matched = skew(&turned, "m")?;
        let injected = skew(&defect, "d")?;
        ensure(matched < injected, || format!("trial {trial}: matched skewness {matched} >= defect skewness {injected}"))?;
        pairs.push(format!("{matched:.2}<{injected:.2}"));
    }
    Ok(format!("10/10 trials: {}", pairs.join(" ")))
}

// 8 -------------------------------------------------------------------------

fn c8_scalability() -> Check {
    // Grow the slab sideways: the grid stays several boxes deep on every axis,
    // so neighbourhood sizes (and per-point work) stay comparable.
    let widths = [8.0, 16.0, 32.0, 64.0];
    let g = 0.1;
    let mut rows = Vec::new();
    let mut times = Vec::new();
    for &w in &widths {
        let base = FixtureSpec::new(FixtureKind::Slab, (10.0, w, 3.0), 0.4, D, H);
        let a = build_point_cloud(&cuboids_of(&base), g);
        let turned = build_point_cloud(&cuboids_of(&base.clone().rotated(1)), g);
        let b = align_min_corner(&a, &counter_rotate(&turned, RotationVector::new(0.0, 0.0, 90.0))).map_err(|e| e.to_string())?;
        drop(turned);
        let mut runs: Vec<Duration> = (0..3)
            .map(|_| {
                let start = Instant::now();
                let sets = glitch_core::grid::segment(&a, &b, unit()).expect("segment");
                let field = compare(&sets);
                std::hint::black_box(field.counts());
                start.elapsed()
            })
            .collect();
        runs.sort();
        times.push(runs[1].as_secs_f64());
        rows.push((a.len() + b.len(), runs[1].as_secs_f64()));
    }
    let mut ratios = Vec::new();
    for k in 1..rows.len() {
        let points = rows[k].0 as f64 / rows[k - 1].0 as f64;
        let time = rows[k].1 / rows[k - 1].1;
        ensure((1.9..=2.1).contains(&points), || format!("point count ratio {points:.3} is not a doubling"))?;
        ensure(time < 2.5, || format!("time ratio {time:.2} for doubling {} -> {} points ({:?})", rows[k - 1].0, rows[k].0, rows))?;
        ratios.push(format!("{time:.2}"));
    }
    Ok(format!(
        "time ratios {} for points {:?}, median seconds {:?}",
        ratios.join(", "),
        rows.iter().map(|r| r.0).collect::<Vec<_>>(),
        times.iter().map(|t| (t * 1000.0).round() / 1000.0).collect::<Vec<_>>()
    ))
}

// 9 -------------------------------------------------------------------------

fn c9_determinism() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let (name, spec) = fixture_kinds().remove(1);
    let holed = write_fixture(dir.path(), &format!("{name}.gcode"), &spec);
    let plain = write_fixture(dir.path(), "slab.gcode", &FixtureSpec { kind: FixtureKind::Slab, hole: None, ..spec });
    let (o1, o2) = (dir.path().join("run1"), dir.path().join("run2"));
    cmd_compare(&plain, &holed, RotationVector::IDENTITY, &config(&o1, 0.1)).map_err(|e| e.to_string())?;
    cmd_compare(&plain, &holed, RotationVector::IDENTITY, &config(&o2, 0.1)).map_err(|e| e.to_string())?;
    let mut bytes = 0;
    for file in ["report.json", "field.csv", "heatmap.ply", "histogram.csv"] {
        let a = std::fs::read(o1.join(file)).map_err(|e| e.to_string())?;
        let b = std::fs::read(o2.join(file)).map_err(|e| e.to_string())?;
        ensure(a == b, || format!("{file} differs between runs"))?;
        bytes += a.len();
    }
    Ok(format!("4 artifacts byte-identical ({bytes} bytes)"))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Check); 9] = [
        ("monotone refinement", c1_monotone_refinement),
        ("oracle equivalence", c2_oracle_equivalence),
        ("self-comparison zero", c3_self_comparison),
        ("sampling formula", c4_sampling_formula),
        ("fault localization", c5_fault_localization),
        ("distance algebra", c6_distance_algebra),
        ("skewness discrimination", c7_skewness),
        ("scalability", c8_scalability),
        ("determinism", c9_determinism),
    ];
    let filters: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let selected: HashSet<usize> = (1..=criteria.len())
        .filter(|i| {
            filters.is_empty()
                || filters.iter().any(|f| f == &i.to_string() || criteria[i - 1].0.contains(f.as_str()))
        })
        .collect();

    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let n = i + 1;
        if !selected.contains(&n) {
            continue;
        }
        let start = Instant::now();
        let result = check();
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("PASS {n} {name} ({secs:.1}s): {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL {n} {name} ({secs:.1}s): {detail}");
            }
        }
    }
    println!("acceptance: {} run, {failed} failed", selected.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
