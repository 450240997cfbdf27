//! Scenario orchestration: propagate, detect cuts, rasterize, export.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;
use windfront_core::{
    conservation_report, detect_cuts, front_at, propagate, wavemap_arrival_field, ArrivalField, ArrivalGrid, CutCause,
    CutReport, FrontSlice, Wavemap, Witness,
};

use crate::export::{fmt_f64, point, to_json, Num};
use crate::scenario::{BuildError, Format, Scenario};

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Build(#[from] BuildError),
    #[error("propagation failed: {0}")]
    Engine(#[from] windfront_core::Error),
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// An invariant checked after the run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Monitor {
    pub name: &'static str,
    pub ok: bool,
    pub value: Num,
    pub limit: Num,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeedFailure {
    pub seed: usize,
    pub s: Num,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Drift {
    /// Largest `|G(1, xdot)|` over all samples.
    pub max_abs: Num,
    /// Largest `|G(1, xdot)| / t`.
    pub max_rate: Num,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub seeds: usize,
    pub seeded: usize,
    pub steps: usize,
    pub horizon: Num,
    pub drift: Drift,
    pub min_cut: Num,
    pub cut_causes: BTreeMap<&'static str, usize>,
    pub resolution_warnings: usize,
    pub seed_failures: Vec<SeedFailure>,
    pub arrival_grid: GridInfo,
    pub unreachable_cells: usize,
    pub monitors: Vec<Monitor>,
    pub files: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridInfo {
    pub min: [Num; 2],
    pub max: [Num; 2],
    pub nx: usize,
    pub ny: usize,
}

impl Report {
    pub fn tripped(&self) -> bool {
        self.monitors.iter().any(|m| !m.ok)
    }
}

/// Everything a run computes, before export.
pub struct RunOutput {
    pub wavemap: Wavemap,
    pub cuts: CutReport,
    pub slices: Vec<FrontSlice>,
    pub arrival: ArrivalField,
    pub report: Report,
}

/// Bounding box of every sample, widened by 10% per side, at 41 x 41 nodes.
fn default_grid(wm: &Wavemap) -> ArrivalGrid {
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for seed in &wm.seeds {
        if let Some(tr) = &seed.trajectory {
            for p in &tr.points {
                for d in 0..2 {
                    lo[d] = lo[d].min(p[d]);
                    hi[d] = hi[d].max(p[d]);
                }
            }
        }
    }
    for d in 0..2 {
        let pad = 0.1 * (hi[d] - lo[d]).max(1e-3);
        lo[d] -= pad;
        hi[d] += pad;
    }
    ArrivalGrid::new(lo, hi, 41, 41).expect("padded box is nonempty")
}

/// Runs the scenario in memory.
pub fn execute(sc: &Scenario) -> Result<RunOutput, RunError> {
    let metric = sc.spacetime()?;
    let front = sc.initial_front()?;
    let params = sc.integrator_params()?;
    let wm = propagate(&metric, &front, &params, sc.front.side)?;
    let cuts = if sc.run.cuts {
        detect_cuts(&wm)?
    } else {
        // Without detection every seed survives to the end of its trajectory.
        let mut c = detect_cuts(&wm)?;
        for r in &mut c.records {
            if !matches!(r.cause, CutCause::Failed | CutCause::Exit) {
                r.t_cut = f64::INFINITY;
                r.cause = CutCause::Horizon;
                r.witness = Witness::None;
            }
        }
        c.warnings.clear();
        c
    };
    let slices = sc
        .run
        .slices
        .iter()
        .map(|t| front_at(&wm, &cuts, *t))
        .collect::<Result<Vec<_>, _>>()?;
    let grid = match &sc.grid {
        Some(g) => ArrivalGrid::new(g.min, g.max, g.nx, g.ny)?,
        None => default_grid(&wm),
    };
    let arrival = wavemap_arrival_field(&wm, &cuts, &grid);

    let drifts: Vec<(f64, f64)> = wm
        .seeds
        .par_iter()
        .filter_map(|s| s.trajectory.as_ref())
        .map(|tr| conservation_report(tr, &metric).map(|r| (r.max_abs_g, r.max_rate)))
        .collect::<Result<_, _>>()?;
    let (max_abs, max_rate) = drifts.iter().fold((0.0f64, 0.0f64), |(a, b), (x, y)| (a.max(*x), b.max(*y)));

    let mut cut_causes = BTreeMap::new();
    for r in &cuts.records {
        *cut_causes.entry(r.cause.as_str()).or_insert(0) += 1;
    }
    let seed_failures = wm
        .seeds
        .iter()
        .enumerate()
        .filter_map(|(i, s)| {
            s.failure.as_ref().map(|e| SeedFailure {
                seed: i,
                s: Num(s.s),
                error: e.to_string(),
            })
        })
        .collect();
    let all_finite = wm.seeds.iter().filter_map(|s| s.trajectory.as_ref()).all(|tr| {
        tr.points.iter().chain(&tr.velocities).all(|p| p[..tr.dim].iter().all(|v| v.is_finite()))
    });
    let min_cut = cuts.min_cut();
    let mut monitors = vec![Monitor {
        name: "null_drift_rate",
        ok: max_rate <= sc.run.drift_tolerance,
        value: Num(max_rate),
        limit: Num(sc.run.drift_tolerance),
    }];
    if sc.run.cuts {
        monitors.push(Monitor {
            name: "first_cut_after_first_step",
            ok: min_cut >= sc.run.dt,
            value: Num(min_cut),
            limit: Num(sc.run.dt),
        });
    }
    monitors.push(Monitor {
        name: "finite_samples",
        ok: all_finite,
        value: Num(if all_finite { 1.0 } else { 0.0 }),
        limit: Num(1.0),
    });

    let report = Report {
        seeds: wm.len(),
        seeded: wm.seeded(),
        steps: wm.times.len() - 1,
        horizon: Num(wm.horizon()),
        drift: Drift {
            max_abs: Num(max_abs),
            max_rate: Num(max_rate),
        },
        min_cut: Num(min_cut),
        cut_causes,
        resolution_warnings: cuts.warnings.len(),
        seed_failures,
        arrival_grid: GridInfo {
            min: point(grid.min),
            max: point(grid.max),
            nx: grid.nx,
            ny: grid.ny,
        },
        unreachable_cells: arrival.unreachable(),
        monitors,
        files: vec![],
    };
    Ok(RunOutput {
        wavemap: wm,
        cuts,
        slices,
        arrival,
        report,
    })
}

fn cell(x: f64) -> String {
    fmt_f64(x)
}

/// `t,seed,x,y,alive` for every slice time and seed; position cells are
/// empty when the trajectory did not reach `t`.
pub fn fronts_csv(out: &RunOutput) -> String {
    let mut s = String::from("t,seed,x,y,alive\n");
    let wm = &out.wavemap;
    for slice in &out.slices {
        let t = slice.t;
        let alive: std::collections::HashMap<usize, [f64; 2]> = slice
            .segments
            .iter()
            .flat_map(|seg| seg.seeds.iter().copied().zip(seg.points.iter().copied()))
            .collect();
        for i in 0..wm.len() {
            let (p, live) = match alive.get(&i) {
                Some(p) => (Some(*p), 1),
                None => (position(wm, i, t), 0),
            };
            let (x, y) = p.map_or((String::new(), String::new()), |p| (cell(p[0]), cell(p[1])));
            writeln!(s, "{},{i},{x},{y},{live}", cell(t)).unwrap();
        }
    }
    s
}

fn position(wm: &Wavemap, i: usize, t: f64) -> Option<[f64; 2]> {
    let tr = wm.seeds[i].trajectory.as_ref()?;
    let k = tr.times.iter().position(|s| *s >= t - 1e-12)?;
    if k == 0 || (tr.times[k] - t).abs() <= 1e-12 {
        return Some([tr.points[k][0], tr.points[k][1]]);
    }
    let f = (t - tr.times[k - 1]) / (tr.times[k] - tr.times[k - 1]);
    let (p, q) = (tr.points[k - 1], tr.points[k]);
    Some([p[0] + f * (q[0] - p[0]), p[1] + f * (q[1] - p[1])])
}

/// `seed,s,step,t,x,y,vx,vy` for every stored sample.
pub fn trajectories_csv(out: &RunOutput) -> String {
    let mut s = String::from("seed,s,step,t,x,y,vx,vy\n");
    for (i, seed) in out.wavemap.seeds.iter().enumerate() {
        let Some(tr) = &seed.trajectory else { continue };
        let ss = cell(seed.s);
        for k in 0..tr.len() {
            let (p, v) = (tr.points[k], tr.velocities[k]);
            writeln!(
                s,
                "{i},{ss},{k},{},{},{},{},{}",
                cell(tr.times[k]),
                cell(p[0]),
                cell(p[1]),
                cell(v[0]),
                cell(v[1])
            )
            .unwrap();
        }
    }
    s
}

/// `i,j,x,y,t` per grid node, `t` empty when unreachable.
pub fn arrival_csv(out: &RunOutput) -> String {
    let f = &out.arrival;
    let mut s = String::from("i,j,x,y,t\n");
    for j in 0..f.grid.ny {
        for i in 0..f.grid.nx {
            let p = f.grid.node(i, j);
            let t = f.get(i, j).map_or(String::new(), cell);
            writeln!(s, "{i},{j},{},{},{t}", cell(p[0]), cell(p[1])).unwrap();
        }
    }
    s
}

#[derive(Serialize)]
struct CutJson {
    seed: usize,
    s: Num,
    t_cut: Num,
    cause: &'static str,
    witness: WitnessJson,
}

#[derive(Serialize)]
#[serde(rename_all = "snake_case")]
enum WitnessJson {
    Seed(usize),
    Determinant(Num),
    None,
}

pub fn cuts_json(out: &RunOutput) -> String {
    let recs: Vec<CutJson> = out
        .cuts
        .records
        .iter()
        .map(|r| CutJson {
            seed: r.seed,
            s: Num(r.s),
            t_cut: Num(r.t_cut),
            cause: r.cause.as_str(),
            witness: match r.witness {
                Witness::Seed(i) => WitnessJson::Seed(i),
                Witness::Determinant(d) => WitnessJson::Determinant(Num(d)),
                Witness::None => WitnessJson::None,
            },
        })
        .collect();
    to_json(&recs)
}

#[derive(Serialize)]
struct SegmentJson {
    closed: bool,
    seeds: Vec<usize>,
    points: Vec<[Num; 2]>,
}

#[derive(Serialize)]
struct SliceJson {
    t: Num,
    breaks: usize,
    segments: Vec<SegmentJson>,
}

pub fn fronts_json(out: &RunOutput) -> String {
    let slices: Vec<SliceJson> = out
        .slices
        .iter()
        .map(|sl| SliceJson {
            t: Num(sl.t),
            breaks: sl.breaks(),
            segments: sl
                .segments
                .iter()
                .map(|seg| SegmentJson {
                    closed: seg.closed,
                    seeds: seg.seeds.clone(),
                    points: seg.points.iter().map(|p| point(*p)).collect(),
                })
                .collect(),
        })
        .collect();
    to_json(&slices)
}

fn write(dir: &Path, name: &str, text: &str, written: &mut Vec<String>) -> Result<(), RunError> {
    let path = dir.join(name);
    std::fs::write(&path, text).map_err(|source| RunError::Io { path, source })?;
    written.push(name.to_string());
    Ok(())
}

/// Writes the exports selected by `output.formats` plus `report.json` into
/// `dir` and returns the report.
pub fn run_scenario(sc: &Scenario, dir: &Path) -> Result<Report, RunError> {
    let mut out = execute(sc)?;
    std::fs::create_dir_all(dir).map_err(|source| RunError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut files = Vec::new();
    if sc.output.formats.contains(&Format::Csv) {
        write(dir, "fronts.csv", &fronts_csv(&out), &mut files)?;
        write(dir, "trajectories.csv", &trajectories_csv(&out), &mut files)?;
        write(dir, "arrival.csv", &arrival_csv(&out), &mut files)?;
    }
    if sc.output.formats.contains(&Format::Json) {
        write(dir, "fronts.json", &fronts_json(&out), &mut files)?;
        write(dir, "cuts.json", &cuts_json(&out), &mut files)?;
    }
    files.push("report.json".into());
    out.report.files = files;
    let mut ignored = Vec::new();
    write(dir, "report.json", &to_json(&out.report), &mut ignored)?;
    Ok(out.report)
}

/// Output directory of a scenario, relative to the scenario file.
pub fn output_dir(sc: &Scenario) -> PathBuf {
    sc.base_dir.join(&sc.output.directory)
}
