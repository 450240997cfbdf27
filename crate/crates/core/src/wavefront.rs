//! Wavemaps: one lightlike pregeodesic per seed of an initial front, the cut
//! function of each seed, front slices and first-arrival fields.

use std::collections::HashMap;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geodesics::{integrate_pregeodesic, lightlike_orthogonal_init, IntegratorParams, Side, Stop, Trajectory};
use crate::spacetime::SpacetimeMetric;

/// Radius of the circle standing in for a point source.
pub const POINT_RADIUS: f64 = 1e-6;

type P2 = [f64; 2];

#[derive(Debug, Clone, PartialEq)]
pub enum FrontShape {
    Circle { center: P2, radius: f64 },
    Ellipse { center: P2, semi_axes: P2 },
    /// Vertices of a polyline; closed curves are stored counterclockwise
    /// without repeating the first vertex.
    Polyline { points: Vec<P2>, closed: bool },
}

/// A curve in the plane with `seeds` evenly spaced parameters. Closed
/// curves run counterclockwise with the outward normal on the right; open
/// polylines take the right-hand side of their direction as outward.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialFront {
    shape: FrontShape,
    seeds: usize,
    /// Cumulative arc length at each polyline vertex.
    arc: Vec<f64>,
}

/// Point, unit tangent and unit outward normal at a front parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrontSample {
    pub point: P2,
    pub tangent: P2,
    pub normal: P2,
}

fn unit(v: P2) -> P2 {
    let n = v[0].hypot(v[1]);
    [v[0] / n, v[1] / n]
}

fn sub(a: P2, b: P2) -> P2 {
    [a[0] - b[0], a[1] - b[1]]
}

fn cross(a: P2, b: P2) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

fn dist(a: P2, b: P2) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// Parameters `(alpha, beta)` where segments `p0 p1` and `q0 q1` cross.
fn segment_intersection(p0: P2, p1: P2, q0: P2, q1: P2) -> Option<(f64, f64)> {
    let r = sub(p1, p0);
    let s = sub(q1, q0);
    let den = cross(r, s);
    let scale = (r[0].abs() + r[1].abs()) * (s[0].abs() + s[1].abs());
    if den.abs() <= 1e-14 * scale || scale == 0.0 {
        return None;
    }
    let qp = sub(q0, p0);
    let a = cross(qp, s) / den;
    let b = cross(qp, r) / den;
    ((0.0..=1.0).contains(&a) && (0.0..=1.0).contains(&b)).then_some((a, b))
}

impl InitialFront {
    fn check_seeds(seeds: usize) -> Result<()> {
        if seeds < 3 {
            return Err(Error::InvalidInput("a front needs at least 3 seeds".into()));
        }
        Ok(())
    }

    pub fn circle(center: P2, radius: f64, seeds: usize) -> Result<Self> {
        Self::check_seeds(seeds)?;
        if !(radius > 0.0) {
            return Err(Error::InvalidInput("circle radius must be positive".into()));
        }
        Ok(InitialFront {
            shape: FrontShape::Circle { center, radius },
            seeds,
            arc: vec![],
        })
    }

    /// Point source, modelled as a circle of radius [`POINT_RADIUS`].
    pub fn point(center: P2, seeds: usize) -> Result<Self> {
        Self::circle(center, POINT_RADIUS, seeds)
    }

    pub fn ellipse(center: P2, a: f64, b: f64, seeds: usize) -> Result<Self> {
        Self::check_seeds(seeds)?;
        if !(a > 0.0 && b > 0.0) {
            return Err(Error::InvalidInput("ellipse semi-axes must be positive".into()));
        }
        Ok(InitialFront {
            shape: FrontShape::Ellipse {
                center,
                semi_axes: [a, b],
            },
            seeds,
            arc: vec![],
        })
    }

    /// A polyline; it is closed when the last vertex repeats the first.
    pub fn polyline(mut points: Vec<P2>, seeds: usize) -> Result<Self> {
        Self::check_seeds(seeds)?;
        if points.iter().flatten().any(|c| !c.is_finite()) {
            return Err(Error::InvalidInput("polyline has non-finite vertices".into()));
        }
        points.dedup_by(|a, b| dist(*a, *b) < 1e-12);
        let closed = points.len() > 3 && dist(points[0], *points.last().unwrap()) < 1e-12;
        if closed {
            points.pop();
        }
        if points.len() < 2 || (closed && points.len() < 3) {
            return Err(Error::InvalidInput("polyline needs at least 2 distinct vertices".into()));
        }
        let m = points.len();
        let segs = if closed { m } else { m - 1 };
        for i in 0..segs {
            for j in i + 1..segs {
                let adjacent = j == i + 1 || (closed && i == 0 && j == segs - 1);
                if adjacent {
                    continue;
                }
                let (p0, p1) = (points[i], points[(i + 1) % m]);
                let (q0, q1) = (points[j], points[(j + 1) % m]);
                if segment_intersection(p0, p1, q0, q1).is_some() {
                    return Err(Error::InvalidInput(format!("polyline self-intersects (segments {i} and {j})")));
                }
            }
        }
        if closed {
            let area: f64 = (0..m).map(|i| cross(points[i], points[(i + 1) % m])).sum();
            if area < 0.0 {
                points[1..].reverse();
            }
        }
        let mut arc = vec![0.0];
        for i in 0..segs {
            let l = dist(points[i], points[(i + 1) % m]);
            arc.push(arc[i] + l);
        }
        Ok(InitialFront {
            shape: FrontShape::Polyline { points, closed },
            seeds,
            arc,
        })
    }

    pub fn shape(&self) -> &FrontShape {
        &self.shape
    }

    pub fn seeds(&self) -> usize {
        self.seeds
    }

    pub fn with_seeds(&self, seeds: usize) -> Result<Self> {
        Self::check_seeds(seeds)?;
        Ok(InitialFront { seeds, ..self.clone() })
    }

    pub fn is_closed(&self) -> bool {
        !matches!(self.shape, FrontShape::Polyline { closed: false, .. })
    }

    /// Seed parameters: `k / N` on closed fronts, `k / (N - 1)` on open ones.
    pub fn params(&self) -> Vec<f64> {
        let n = self.seeds;
        if self.is_closed() {
            (0..n).map(|k| k as f64 / n as f64).collect()
        } else {
            (0..n).map(|k| k as f64 / (n - 1) as f64).collect()
        }
    }

    pub fn sample(&self, s: f64) -> FrontSample {
        let tau = std::f64::consts::TAU;
        let (point, tangent) = match &self.shape {
            FrontShape::Circle { center, radius } => {
                let (sn, cs) = (tau * s).sin_cos();
                ([center[0] + radius * cs, center[1] + radius * sn], [-sn, cs])
            }
            FrontShape::Ellipse { center, semi_axes } => {
                let (sn, cs) = (tau * s).sin_cos();
                let [a, b] = *semi_axes;
                ([center[0] + a * cs, center[1] + b * sn], unit([-a * sn, b * cs]))
            }
            FrontShape::Polyline { points, closed } => {
                let m = points.len();
                let total = *self.arc.last().unwrap();
                let target = if *closed { s.rem_euclid(1.0) * total } else { s.clamp(0.0, 1.0) * total };
                let segs = self.arc.len() - 1;
                let i = (self.arc.partition_point(|v| *v <= target).max(1) - 1).min(segs - 1);
                let (p0, p1) = (points[i], points[(i + 1) % m]);
                let f = (target - self.arc[i]) / (self.arc[i + 1] - self.arc[i]);
                let point = [p0[0] + f * (p1[0] - p0[0]), p0[1] + f * (p1[1] - p0[1])];
                let dir = unit(sub(p1, p0));
                // At a vertex take the bisecting tangent.
                let at_start = (target - self.arc[i]).abs() < 1e-12 * total.max(1.0);
                let tangent = if at_start && (*closed || i > 0) {
                    let prev = unit(sub(p0, points[(i + m - 1) % m]));
                    unit([prev[0] + dir[0], prev[1] + dir[1]])
                } else {
                    dir
                };
                (point, tangent)
            }
        };
        FrontSample {
            point,
            tangent,
            normal: [tangent[1], -tangent[0]],
        }
    }
}

/// One seed of a wavemap.
#[derive(Debug, Clone, PartialEq)]
pub struct Seed {
    pub s: f64,
    pub trajectory: Option<Trajectory>,
    /// Why no trajectory could be started.
    pub failure: Option<Error>,
}

/// The family of trajectories `x(t, s)` leaving a front. All trajectories
/// share the time grid `times` (shorter ones stopped early).
#[derive(Debug, Clone, PartialEq)]
pub struct Wavemap {
    pub times: Vec<f64>,
    pub seeds: Vec<Seed>,
    pub closed: bool,
    pub side: Side,
}

impl Wavemap {
    pub fn len(&self) -> usize {
        self.seeds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.seeds.is_empty()
    }

    pub fn horizon(&self) -> f64 {
        *self.times.last().unwrap()
    }

    pub fn dt(&self) -> f64 {
        if self.times.len() > 1 {
            self.times[1] - self.times[0]
        } else {
            0.0
        }
    }

    /// Position of seed `i` at step `k`, if it got that far.
    pub fn point(&self, i: usize, k: usize) -> Option<P2> {
        let tr = self.seeds[i].trajectory.as_ref()?;
        (k < tr.len()).then(|| [tr.points[k][0], tr.points[k][1]])
    }

    pub fn velocity(&self, i: usize, k: usize) -> Option<P2> {
        let tr = self.seeds[i].trajectory.as_ref()?;
        (k < tr.len()).then(|| [tr.velocities[k][0], tr.velocities[k][1]])
    }

    fn steps(&self, i: usize) -> usize {
        self.seeds[i].trajectory.as_ref().map_or(0, |t| t.len())
    }

    fn neighbors(&self, i: usize) -> (Option<usize>, Option<usize>) {
        let n = self.len();
        if self.closed {
            ((i + n - 1) % n, (i + 1) % n).into_opt()
        } else {
            ((i > 0).then(|| i - 1), (i + 1 < n).then_some(i + 1))
        }
    }

    /// Number of seeds with a trajectory.
    pub fn seeded(&self) -> usize {
        self.seeds.iter().filter(|s| s.trajectory.is_some()).count()
    }
}

trait IntoOpt {
    fn into_opt(self) -> (Option<usize>, Option<usize>);
}

impl IntoOpt for (usize, usize) {
    fn into_opt(self) -> (Option<usize>, Option<usize>) {
        (Some(self.0), Some(self.1))
    }
}

/// Integrates one trajectory per seed (in parallel, deterministic order).
pub fn propagate(
    metric: &SpacetimeMetric,
    front: &InitialFront,
    params: &IntegratorParams,
    side: Side,
) -> Result<Wavemap> {
    params.validate()?;
    if metric.dim() != 2 {
        return Err(Error::InvalidInput("fronts are plane curves; the metric must be 2-dimensional".into()));
    }
    let seeds: Vec<Seed> = front
        .params()
        .into_par_iter()
        .map(|s| {
            let traj = lightlike_orthogonal_init(metric, front, s, side, 0.0)
                .and_then(|init| integrate_pregeodesic(metric, &init, params));
            match traj {
                Ok(t) => Seed {
                    s,
                    trajectory: Some(t),
                    failure: None,
                },
                Err(e) => Seed {
                    s,
                    trajectory: None,
                    failure: Some(e),
                },
            }
        })
        .collect();
    if seeds.iter().all(|s| s.trajectory.is_none()) {
        return Err(seeds[0].failure.clone().expect("failed seed carries its error"));
    }
    Ok(Wavemap {
        times: params.time_grid(0.0),
        seeds,
        closed: front.is_closed(),
        side,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CutCause {
    /// Another trajectory (or the seed itself) reached the point first.
    Intersection,
    /// The wavemap stops being an immersion.
    Focal,
    Both,
    /// No cut before the horizon; `t_cut` is infinite.
    Horizon,
    /// The trajectory left the domain.
    Exit,
    /// No trajectory could be started at this seed.
    Failed,
}

impl CutCause {
    pub fn as_str(&self) -> &'static str {
        match self {
            CutCause::Intersection => "intersection",
            CutCause::Focal => "focal",
            CutCause::Both => "both",
            CutCause::Horizon => "horizon",
            CutCause::Exit => "exit",
            CutCause::Failed => "failed",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Witness {
    Seed(usize),
    /// Jacobian determinant just past the focal sign change.
    Determinant(f64),
    None,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CutRecord {
    pub seed: usize,
    pub s: f64,
    pub t_cut: f64,
    pub cause: CutCause,
    pub witness: Witness,
}

/// Neighbor spacing at a cut exceeded ten times its initial value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResolutionWarning {
    pub seed: usize,
    pub t: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CutReport {
    pub records: Vec<CutRecord>,
    pub warnings: Vec<ResolutionWarning>,
}

impl CutReport {
    /// Smallest finite cut time among seeds with a trajectory.
    pub fn min_cut(&self) -> f64 {
        self.records
            .iter()
            .filter(|r| r.cause != CutCause::Failed)
            .fold(f64::INFINITY, |m, r| m.min(r.t_cut))
    }

    pub fn cut_of(&self, seed: usize) -> f64 {
        self.records[seed].t_cut
    }
}

#[derive(Clone, Copy)]
struct Hit {
    t: f64,
    witness: Witness,
}

fn earlier(a: Option<Hit>, b: Option<Hit>) -> Option<Hit> {
    match (a, b) {
        (Some(x), Some(y)) => Some(if y.t < x.t { y } else { x }),
        (x, None) => x,
        (None, y) => y,
    }
}

/// Cut instants of every seed: the earlier of the first crossing with the
/// rest of the front and the first focal point.
pub fn detect_cuts(wm: &Wavemap) -> Result<CutReport> {
    if wm.is_empty() || wm.seeded() == 0 {
        return Err(Error::InvalidInput("empty wavemap".into()));
    }
    let n = wm.len();
    let crossing = front_crossings(wm);
    let self_cross: Vec<Option<Hit>> = (0..n).into_par_iter().map(|i| self_crossing(wm, i)).collect();
    let focal: Vec<Option<Hit>> = (0..n).into_par_iter().map(|i| focal_point(wm, i)).collect();
    let dt = wm.dt();
    let mut records = Vec::with_capacity(n);
    let mut warnings = Vec::new();
    for i in 0..n {
        let seed = &wm.seeds[i];
        let Some(tr) = &seed.trajectory else {
            records.push(CutRecord {
                seed: i,
                s: seed.s,
                t_cut: wm.times[0],
                cause: CutCause::Failed,
                witness: Witness::None,
            });
            continue;
        };
        let inter = earlier(crossing[i], self_cross[i]);
        let foc = focal[i];
        let mut rec = match (inter, foc) {
            (Some(a), Some(b)) if (a.t - b.t).abs() <= dt * (1.0 + 1e-9) => CutRecord {
                seed: i,
                s: seed.s,
                t_cut: a.t.min(b.t),
                cause: CutCause::Both,
                witness: a.witness,
            },
            (a, b) => match earlier(a, b) {
                Some(h) => CutRecord {
                    seed: i,
                    s: seed.s,
                    t_cut: h.t,
                    cause: if matches!(h.witness, Witness::Determinant(_)) {
                        CutCause::Focal
                    } else {
                        CutCause::Intersection
                    },
                    witness: h.witness,
                },
                None => CutRecord {
                    seed: i,
                    s: seed.s,
                    t_cut: f64::INFINITY,
                    cause: CutCause::Horizon,
                    witness: Witness::None,
                },
            },
        };
        if tr.stop != Stop::Horizon && tr.last_time() < rec.t_cut {
            rec.t_cut = tr.last_time();
            rec.cause = CutCause::Exit;
            rec.witness = Witness::None;
        }
        if rec.t_cut.is_finite() && matches!(rec.cause, CutCause::Intersection | CutCause::Focal | CutCause::Both) {
            if let Some(ratio) = spacing_ratio(wm, i, rec.t_cut) {
                if ratio > 10.0 {
                    warnings.push(ResolutionWarning {
                        seed: i,
                        t: rec.t_cut,
                        ratio,
                    });
                }
            }
        }
        records.push(rec);
    }
    Ok(CutReport { records, warnings })
}

fn spacing_ratio(wm: &Wavemap, i: usize, t: f64) -> Option<f64> {
    let k = crate::geodesics::locate(&wm.times, t)?;
    let (a, b) = wm.neighbors(i);
    let mut ratio: Option<f64> = None;
    for j in [a, b].into_iter().flatten() {
        let (Some(p0), Some(q0), Some(pk), Some(qk)) = (wm.point(i, 0), wm.point(j, 0), wm.point(i, k), wm.point(j, k))
        else {
            continue;
        };
        let d0 = dist(p0, q0);
        if d0 > 0.0 {
            let r = dist(pk, qk) / d0;
            ratio = Some(ratio.map_or(r, |m: f64| m.max(r)));
        }
    }
    ratio
}

/// Seeds swallowed by self-crossings of the front polyline, per time step.
fn front_crossings(wm: &Wavemap) -> Vec<Option<Hit>> {
    let n = wm.len();
    let steps = wm.times.len();
    let per_step: Vec<Vec<(usize, usize)>> = (1..steps)
        .into_par_iter()
        .map(|k| {
            let mut marks = Vec::new();
            for (a, b) in crossing_pairs(wm, k) {
                for (seed, witness) in swallowed(wm, a, b) {
                    marks.push((seed, witness));
                }
            }
            marks.sort_unstable();
            marks.dedup_by_key(|m| m.0);
            marks
        })
        .collect();
    let mut out: Vec<Option<Hit>> = vec![None; n];
    for (idx, marks) in per_step.iter().enumerate() {
        let t = wm.times[idx + 1];
        for &(seed, witness) in marks {
            if out[seed].is_none() {
                out[seed] = Some(Hit {
                    t,
                    witness: Witness::Seed(witness),
                });
            }
        }
    }
    out
}

/// Front segments `(i, next(i))` present at step `k`.
fn front_segments(wm: &Wavemap, k: usize) -> Vec<(usize, P2, P2)> {
    let n = wm.len();
    let last = if wm.closed { n } else { n - 1 };
    (0..last)
        .filter_map(|i| {
            let j = (i + 1) % n;
            let p = wm.point(i, k)?;
            let q = wm.point(j, k)?;
            (dist(p, q) > 0.0).then_some((i, p, q))
        })
        .collect()
}

/// Pairs of non-adjacent front segments that cross at step `k`.
fn crossing_pairs(wm: &Wavemap, k: usize) -> Vec<(usize, usize)> {
    let n = wm.len();
    let segs = front_segments(wm, k);
    if segs.len() < 3 {
        return vec![];
    }
    let mut lengths: Vec<f64> = segs.iter().map(|(_, p, q)| dist(*p, *q)).collect();
    let mid = lengths.len() / 2;
    lengths.select_nth_unstable_by(mid, f64::total_cmp);
    let cell = 2.0 * lengths[mid];
    let key = |p: P2| ((p[0] / cell).floor() as i64, (p[1] / cell).floor() as i64);
    let mut grid: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
    let mut oversize = Vec::new();
    for (idx, (_, p, q)) in segs.iter().enumerate() {
        let (a, b) = (key([p[0].min(q[0]), p[1].min(q[1])]), key([p[0].max(q[0]), p[1].max(q[1])]));
        if (b.0 - a.0 + 1) * (b.1 - a.1 + 1) > 64 {
            oversize.push(idx);
            continue;
        }
        for cx in a.0..=b.0 {
            for cy in a.1..=b.1 {
                grid.entry((cx, cy)).or_default().push(idx);
            }
        }
    }
    let adjacent = |a: usize, b: usize| {
        let (i, j) = (segs[a].0, segs[b].0);
        i == j || (i + 1) % n == j || (j + 1) % n == i
    };
    let mut pairs = Vec::new();
    let mut test = |a: usize, b: usize, cell_key: Option<(i64, i64)>| {
        if adjacent(a, b) {
            return;
        }
        let (_, p0, p1) = segs[a];
        let (_, q0, q1) = segs[b];
        if let Some((al, _)) = segment_intersection(p0, p1, q0, q1) {
            let x = [p0[0] + al * (p1[0] - p0[0]), p0[1] + al * (p1[1] - p0[1])];
            // Report each crossing once: in the cell holding the point.
            if cell_key.is_none_or(|c| key(x) == c) {
                let (i, j) = (segs[a].0.min(segs[b].0), segs[a].0.max(segs[b].0));
                pairs.push((i, j));
            }
        }
    };
    let mut cells: Vec<_> = grid.iter().collect();
    cells.sort_unstable_by_key(|(c, _)| **c);
    for (c, members) in cells {
        for x in 0..members.len() {
            for y in x + 1..members.len() {
                test(members[x], members[y], Some(*c));
            }
        }
    }
    for &o in &oversize {
        for other in 0..segs.len() {
            if other != o && (!oversize.contains(&other) || other > o) {
                test(o, other, None);
            }
        }
    }
    pairs.sort_unstable();
    pairs.dedup();
    pairs
}

/// Seeds strictly between crossing segments `a < b` (the smaller loop on
/// closed fronts), each with the nearest seed outside the loop as witness.
fn swallowed(wm: &Wavemap, a: usize, b: usize) -> Vec<(usize, usize)> {
    let n = wm.len();
    let inner: Vec<usize> = (a + 1..=b).collect();
    let (arc, outside) = if wm.closed && inner.len() > n - inner.len() {
        ((b + 1..=a + n).map(|i| i % n).collect(), (b, (a + 1) % n))
    } else {
        (inner, (a, (b + 1) % n))
    };
    arc.into_iter().map(|s| (s, if s.abs_diff(outside.0) <= s.abs_diff(outside.1) { outside.0 } else { outside.1 })).collect()
}

/// First time a trajectory crosses its own earlier path.
fn self_crossing(wm: &Wavemap, i: usize) -> Option<Hit> {
    let tr = wm.seeds[i].trajectory.as_ref()?;
    let m = tr.len();
    if m < 4 {
        return None;
    }
    let pts: Vec<P2> = (0..m).map(|k| [tr.points[k][0], tr.points[k][1]]).collect();
    let max_len = pts.windows(2).map(|w| dist(w[0], w[1])).fold(0.0, f64::max);
    if max_len == 0.0 {
        return None;
    }
    let cell = 2.0 * max_len;
    let key = |p: P2| ((p[0] / cell).floor() as i64, (p[1] / cell).floor() as i64);
    let mut grid: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
    for k in 0..m - 1 {
        let (p0, p1) = (pts[k], pts[k + 1]);
        let c = key(p0);
        for cx in c.0 - 1..=c.0 + 1 {
            for cy in c.1 - 1..=c.1 + 1 {
                if let Some(list) = grid.get(&(cx, cy)) {
                    for &j in list {
                        if j + 1 >= k {
                            continue;
                        }
                        if let Some((al, _)) = segment_intersection(p0, p1, pts[j], pts[j + 1]) {
                            return Some(Hit {
                                t: tr.times[k] + al * (tr.times[k + 1] - tr.times[k]),
                                witness: Witness::Seed(i),
                            });
                        }
                    }
                }
            }
        }
        grid.entry(c).or_default().push(k);
    }
    None
}

/// `det[x_s | x_t]` of seed `i` at step `k`.
fn jacobian(wm: &Wavemap, i: usize, k: usize) -> Option<(f64, f64)> {
    let p = wm.point(i, k)?;
    let v = wm.velocity(i, k)?;
    let (a, b) = wm.neighbors(i);
    let pa = a.and_then(|j| wm.point(j, k));
    let pb = b.and_then(|j| wm.point(j, k));
    let xs = match (pa, pb) {
        (Some(l), Some(r)) => sub(r, l),
        (None, Some(r)) => sub(r, p),
        (Some(l), None) => sub(p, l),
        (None, None) => return None,
    };
    let scale = xs[0].hypot(xs[1]) * v[0].hypot(v[1]);
    Some((cross(xs, v), scale))
}

/// First sign change of the Jacobian determinant, linearly interpolated.
fn focal_point(wm: &Wavemap, i: usize) -> Option<Hit> {
    let m = wm.steps(i);
    let (d0, s0) = jacobian(wm, i, 0)?;
    if d0.abs() <= 1e-12 * s0 {
        return None;
    }
    let sign = d0.signum();
    let mut prev = d0;
    for k in 1..m {
        let Some((d, scale)) = jacobian(wm, i, k) else {
            return None;
        };
        let zero = d.abs() <= 1e-12 * scale;
        if zero || d.signum() != sign {
            let f = if zero { 1.0 } else { prev / (prev - d) };
            let t = wm.times[k - 1] + f * (wm.times[k] - wm.times[k - 1]);
            return Some(Hit {
                t,
                witness: Witness::Determinant(d),
            });
        }
        prev = d;
    }
    None
}

/// A maximal run of consecutive surviving seeds.
#[derive(Debug, Clone, PartialEq)]
pub struct FrontSegment {
    pub seeds: Vec<usize>,
    pub points: Vec<P2>,
    /// True when the run is the whole closed front.
    pub closed: bool,
}

/// The front at time `t`: surviving points `x(t, s)` with `t <= cut(s)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FrontSlice {
    pub t: f64,
    pub segments: Vec<FrontSegment>,
}

impl FrontSlice {
    pub fn points(&self) -> Vec<P2> {
        self.segments.iter().flat_map(|s| s.points.iter().copied()).collect()
    }

    pub fn breaks(&self) -> usize {
        match self.segments.as_slice() {
            [single] if single.closed => 0,
            segs => segs.len(),
        }
    }
}

fn position_at(wm: &Wavemap, i: usize, t: f64) -> Option<P2> {
    let tr = wm.seeds[i].trajectory.as_ref()?;
    let k = crate::geodesics::locate(&tr.times, t)?;
    if k + 1 >= tr.len() {
        return ((t - tr.last_time()).abs() <= 1e-12).then(|| [tr.points[k][0], tr.points[k][1]]);
    }
    let f = (t - tr.times[k]) / (tr.times[k + 1] - tr.times[k]);
    let (p, q) = (tr.points[k], tr.points[k + 1]);
    Some([p[0] + f * (q[0] - p[0]), p[1] + f * (q[1] - p[1])])
}

pub fn front_at(wm: &Wavemap, cuts: &CutReport, t: f64) -> Result<FrontSlice> {
    let horizon = wm.horizon();
    if !(t >= wm.times[0] - 1e-12 && t <= horizon + 1e-12) {
        return Err(Error::OutOfHorizon { t, horizon });
    }
    let n = wm.len();
    let alive: Vec<Option<P2>> = (0..n)
        .map(|i| {
            if t > cuts.records[i].t_cut {
                None
            } else {
                position_at(wm, i, t)
            }
        })
        .collect();
    let mut segments: Vec<FrontSegment> = Vec::new();
    let mut current: Option<FrontSegment> = None;
    for (i, p) in alive.iter().enumerate() {
        match p {
            Some(p) => {
                let seg = current.get_or_insert_with(|| FrontSegment {
                    seeds: vec![],
                    points: vec![],
                    closed: false,
                });
                seg.seeds.push(i);
                seg.points.push(*p);
            }
            None => segments.extend(current.take()),
        }
    }
    if let Some(seg) = current.take() {
        segments.push(seg);
    }
    if wm.closed && !segments.is_empty() {
        let all = segments.len() == 1 && segments[0].seeds.len() == n;
        if all {
            segments[0].closed = true;
        } else if segments.len() > 1 && segments[0].seeds[0] == 0 && *segments.last().unwrap().seeds.last().unwrap() == n - 1 {
            // Merge the run that wraps past seed 0.
            let first = segments.remove(0);
            let last = segments.last_mut().unwrap();
            last.seeds.extend(first.seeds);
            last.points.extend(first.points);
        }
    }
    Ok(FrontSlice { t, segments })
}

/// Regular grid of nodes `min + (i dx, j dy)`, `i < nx`, `j < ny`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArrivalGrid {
    pub min: P2,
    pub max: P2,
    pub nx: usize,
    pub ny: usize,
}

impl ArrivalGrid {
    pub fn new(min: P2, max: P2, nx: usize, ny: usize) -> Result<Self> {
        if nx < 2 || ny < 2 || !(max[0] > min[0] && max[1] > min[1]) {
            return Err(Error::InvalidInput("arrival grid needs >= 2 nodes per axis and a nonempty box".into()));
        }
        Ok(ArrivalGrid { min, max, nx, ny })
    }

    pub fn spacing(&self) -> P2 {
        [
            (self.max[0] - self.min[0]) / (self.nx - 1) as f64,
            (self.max[1] - self.min[1]) / (self.ny - 1) as f64,
        ]
    }

    pub fn node(&self, i: usize, j: usize) -> P2 {
        let h = self.spacing();
        [self.min[0] + i as f64 * h[0], self.min[1] + j as f64 * h[1]]
    }

    pub fn cell_diameter(&self) -> f64 {
        let h = self.spacing();
        h[0].hypot(h[1])
    }
}

/// First-arrival times at grid nodes; `None` marks unreachable nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct ArrivalField {
    pub grid: ArrivalGrid,
    /// Row-major by `j` then `i`: `values[j * nx + i]`.
    pub values: Vec<Option<f64>>,
}

impl ArrivalField {
    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        self.values[j * self.grid.nx + i]
    }

    /// Value at the node nearest to `p`.
    pub fn at(&self, p: P2) -> Option<f64> {
        let h = self.grid.spacing();
        let i = ((p[0] - self.grid.min[0]) / h[0]).round();
        let j = ((p[1] - self.grid.min[1]) / h[1]).round();
        if i < 0.0 || j < 0.0 || i as usize >= self.grid.nx || j as usize >= self.grid.ny {
            return None;
        }
        self.get(i as usize, j as usize)
    }

    pub fn unreachable(&self) -> usize {
        self.values.iter().filter(|v| v.is_none()).count()
    }
}

/// Surviving spacetime triangles of the wavemap: consecutive seeds by
/// consecutive steps, each quad split in two.
fn for_each_triangle(wm: &Wavemap, cuts: &CutReport, mut f: impl FnMut([P2; 3], [f64; 3], [f64; 3])) {
    let n = wm.len();
    let last = if wm.closed { n } else { n - 1 };
    for i in 0..last {
        let j = (i + 1) % n;
        let (ci, cj) = (cuts.records[i].t_cut, cuts.records[j].t_cut);
        let steps = wm.steps(i).min(wm.steps(j));
        for k in 0..steps.saturating_sub(1) {
            let (t0, t1) = (wm.times[k], wm.times[k + 1]);
            if t0 > ci || t0 > cj {
                break;
            }
            let (a, b) = (wm.point(i, k).unwrap(), wm.point(j, k).unwrap());
            let (c, d) = (wm.point(j, k + 1).unwrap(), wm.point(i, k + 1).unwrap());
            let (si, sj) = (i as f64, i as f64 + 1.0);
            f([a, b, c], [t0, t0, t1], [si, sj, sj]);
            f([a, c, d], [t0, t1, t1], [si, sj, si]);
        }
    }
}

fn barycentric(tri: &[P2; 3], p: P2) -> Option<[f64; 3]> {
    let (a, b, c) = (tri[0], tri[1], tri[2]);
    let det = cross(sub(b, a), sub(c, a));
    if det.abs() < 1e-300 {
        return None;
    }
    let l1 = cross(sub(p, a), sub(c, a)) / det;
    let l2 = cross(sub(b, a), sub(p, a)) / det;
    let l0 = 1.0 - l1 - l2;
    let eps = -1e-12;
    (l0 >= eps && l1 >= eps && l2 >= eps).then_some([l0, l1, l2])
}

/// Closest point of segment `ab` to `p`: `(distance, fraction)`.
fn point_segment(a: P2, b: P2, p: P2) -> (f64, f64) {
    let ab = sub(b, a);
    let l2 = ab[0] * ab[0] + ab[1] * ab[1];
    let f = if l2 == 0.0 {
        0.0
    } else {
        (((p[0] - a[0]) * ab[0] + (p[1] - a[1]) * ab[1]) / l2).clamp(0.0, 1.0)
    };
    (dist([a[0] + f * ab[0], a[1] + f * ab[1]], p), f)
}

/// Rasterizes a wavemap into first-arrival times on `grid`.
pub fn wavemap_arrival_field(wm: &Wavemap, cuts: &CutReport, grid: &ArrivalGrid) -> ArrivalField {
    let (nx, ny) = (grid.nx, grid.ny);
    let h = grid.spacing();
    let mut values: Vec<Option<f64>> = vec![None; nx * ny];
    let mut put = |i: usize, j: usize, t: f64| {
        let v = &mut values[j * nx + i];
        if v.is_none_or(|old| t < old) {
            *v = Some(t);
        }
    };
    let index_range = |lo: f64, hi: f64, axis: usize, count: usize| {
        let a = ((lo - grid.min[axis]) / h[axis]).ceil().max(0.0);
        let b = ((hi - grid.min[axis]) / h[axis]).floor().min(count as f64 - 1.0);
        (a as i64, b as i64)
    };
    for_each_triangle(wm, cuts, |tri, ts, _| {
        let lo = [tri.iter().map(|p| p[0]).fold(f64::INFINITY, f64::min), tri.iter().map(|p| p[1]).fold(f64::INFINITY, f64::min)];
        let hi = [
            tri.iter().map(|p| p[0]).fold(f64::NEG_INFINITY, f64::max),
            tri.iter().map(|p| p[1]).fold(f64::NEG_INFINITY, f64::max),
        ];
        let (i0, i1) = index_range(lo[0], hi[0], 0, nx);
        let (j0, j1) = index_range(lo[1], hi[1], 1, ny);
        for j in j0..=j1 {
            for i in i0..=i1 {
                let p = grid.node(i as usize, j as usize);
                if let Some(l) = barycentric(&tri, p) {
                    put(i as usize, j as usize, l[0] * ts[0] + l[1] * ts[1] + l[2] * ts[2]);
                }
            }
        }
    });
    // Thin regions (the source itself, collapsed fans): trajectory segments.
    let radius = 0.5 * grid.cell_diameter();
    for (i, seed) in wm.seeds.iter().enumerate() {
        let Some(tr) = &seed.trajectory else { continue };
        let cut = cuts.records[i].t_cut;
        for k in 0..tr.len().saturating_sub(1) {
            if tr.times[k] > cut {
                break;
            }
            let (a, b) = ([tr.points[k][0], tr.points[k][1]], [tr.points[k + 1][0], tr.points[k + 1][1]]);
            let (i0, i1) = index_range(a[0].min(b[0]) - radius, a[0].max(b[0]) + radius, 0, nx);
            let (j0, j1) = index_range(a[1].min(b[1]) - radius, a[1].max(b[1]) + radius, 1, ny);
            for jj in j0..=j1 {
                for ii in i0..=i1 {
                    let p = grid.node(ii as usize, jj as usize);
                    let (d, f) = point_segment(a, b, p);
                    if d <= radius {
                        put(ii as usize, jj as usize, tr.times[k] + f * (tr.times[k + 1] - tr.times[k]));
                    }
                }
            }
        }
    }
    ArrivalField { grid: *grid, values }
}

/// Propagates `front` and rasterizes first-arrival times on `grid`.
pub fn arrival_time_field(
    metric: &SpacetimeMetric,
    front: &InitialFront,
    grid: &ArrivalGrid,
    params: &IntegratorParams,
    side: Side,
) -> Result<ArrivalField> {
    let wm = propagate(metric, front, params, side)?;
    let cuts = detect_cuts(&wm)?;
    Ok(wavemap_arrival_field(&wm, &cuts, grid))
}

/// Earliest surviving wavemap sample covering `p`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coverage {
    pub t: f64,
    /// Fractional seed index of the covering trajectories.
    pub seed: f64,
}

/// Locates `p` in the surviving part of the wavemap; `radius` adds segment
/// proximity for points the triangles miss (near the source).
pub fn locate_point(wm: &Wavemap, cuts: &CutReport, p: P2, radius: f64) -> Option<Coverage> {
    let mut best: Option<Coverage> = None;
    let mut offer = |c: Coverage| {
        if best.is_none_or(|b| c.t < b.t) {
            best = Some(c);
        }
    };
    for_each_triangle(wm, cuts, |tri, ts, ss| {
        let lo0 = tri[0][0].min(tri[1][0]).min(tri[2][0]);
        let hi0 = tri[0][0].max(tri[1][0]).max(tri[2][0]);
        let lo1 = tri[0][1].min(tri[1][1]).min(tri[2][1]);
        let hi1 = tri[0][1].max(tri[1][1]).max(tri[2][1]);
        if p[0] < lo0 || p[0] > hi0 || p[1] < lo1 || p[1] > hi1 {
            return;
        }
        if let Some(l) = barycentric(&tri, p) {
            offer(Coverage {
                t: l[0] * ts[0] + l[1] * ts[1] + l[2] * ts[2],
                seed: l[0] * ss[0] + l[1] * ss[1] + l[2] * ss[2],
            });
        }
    });
    if radius > 0.0 {
        for (i, seed) in wm.seeds.iter().enumerate() {
            let Some(tr) = &seed.trajectory else { continue };
            let cut = cuts.records[i].t_cut;
            for k in 0..tr.len().saturating_sub(1) {
                if tr.times[k] > cut {
                    break;
                }
                let (a, b) = ([tr.points[k][0], tr.points[k][1]], [tr.points[k + 1][0], tr.points[k + 1][1]]);
                let (d, f) = point_segment(a, b, p);
                if d <= radius {
                    offer(Coverage {
                        t: tr.times[k] + f * (tr.times[k + 1] - tr.times[k]),
                        seed: i as f64,
                    });
                }
            }
        }
    }
    best
}

/// Symmetric Hausdorff distance between two point sets.
pub fn hausdorff(a: &[P2], b: &[P2]) -> f64 {
    let one_way = |x: &[P2], y: &[P2]| {
        x.iter()
            .map(|p| y.iter().map(|q| dist(*p, *q)).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max)
    };
    one_way(a, b).max(one_way(b, a))
}

/// Even-odd point-in-polygon test.
pub fn polygon_contains(poly: &[P2], p: P2) -> bool {
    let mut inside = false;
    let m = poly.len();
    for i in 0..m {
        let (a, b) = (poly[i], poly[(i + 1) % m]);
        if (a[1] > p[1]) != (b[1] > p[1]) {
            let x = a[0] + (p[1] - a[1]) / (b[1] - a[1]) * (b[0] - a[0]);
            if p[0] < x {
                inside = !inside;
            }
        }
    }
    inside
}

/// Distance from `p` to the closed polygon through `poly`.
pub fn distance_to_polygon(poly: &[P2], p: P2) -> f64 {
    let m = poly.len();
    (0..m)
        .map(|i| point_segment(poly[i], poly[(i + 1) % m], p).0)
        .fold(f64::INFINITY, f64::min)
}
