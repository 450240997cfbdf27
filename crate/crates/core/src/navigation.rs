//! Zermelo navigation queries: non-symmetric distance, forward and backward
//! balls, and fastest paths, answered from point-source wavemaps.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::finsler::{hermite, Branch, DomainClass, FinslerMetricSpec, MetricKind, SampledCurve, TimeMode};
use crate::geodesics::{integrate_pregeodesic, orthogonal_directions, select_side, IntegratorParams, OrthoMethod, Side, Trajectory, TrajectoryState};
use crate::spacetime::{navigation_of, sstk_from_zermelo, SpacetimeMetric};
use crate::wavefront::{detect_cuts, front_at, locate_point, propagate, CutReport, FrontSlice, InitialFront, Wavemap};

type P2 = [f64; 2];

/// The spacetime used to propagate fronts of `spec`. Wind-type metrics go
/// through their quadratic spacetime, which stays smooth for any wind.
pub fn spacetime_for(spec: &FinslerMetricSpec) -> SpacetimeMetric {
    match spec.kind() {
        MetricKind::Zermelo(nav) => {
            let s = sstk_from_zermelo(nav);
            SpacetimeMetric::Sstk(if spec.is_reversed() { s.reversed() } else { s })
        }
        MetricKind::SstkProjected(s) => SpacetimeMetric::Sstk(if spec.is_reversed() { s.reversed() } else { s.clone() }),
        _ => SpacetimeMetric::LorentzFinsler(spec.clone()),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NavOptions {
    pub seeds: usize,
    pub dt: f64,
    /// Endpoint tolerance of the shooting polish.
    pub tolerance: f64,
    /// Skip the shooting polish and report wavemap times.
    pub coarse_only: bool,
    /// How often the horizon is doubled before a target counts as unreachable.
    pub max_doublings: usize,
}

impl Default for NavOptions {
    fn default() -> Self {
        NavOptions {
            seeds: 256,
            dt: 1e-3,
            tolerance: 1e-10,
            coarse_only: false,
            max_doublings: 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BallSide {
    Forward,
    Backward,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PathStatus {
    /// Endpoint reached to the requested tolerance.
    Optimal,
    /// Shooting stalled; the wavemap estimate is reported instead.
    Coarse,
}

/// A fastest path from `x0` to `y0`.
#[derive(Debug, Clone, PartialEq)]
pub struct PathResult {
    pub time: f64,
    /// Arrival time read off the wavemap before polishing.
    pub coarse_time: f64,
    pub times: Vec<f64>,
    pub points: Vec<P2>,
    pub velocities: Vec<P2>,
    /// Engine direction `xdot - W` at each sample.
    pub headings: Vec<P2>,
    /// Initial front-normal angle of the shot.
    pub launch_angle: f64,
    pub miss: f64,
    pub status: PathStatus,
}

impl PathResult {
    pub fn curve(&self) -> SampledCurve {
        SampledCurve {
            params: self.times.clone(),
            points: self.points.iter().map(|p| p.to_vec()).collect(),
            velocities: Some(self.velocities.iter().map(|v| v.to_vec()).collect()),
        }
    }

    /// Length of the path under `spec`, the time of each point being its
    /// arrival time.
    pub fn length(&self, spec: &FinslerMetricSpec) -> Result<f64> {
        spec.path_length(&self.curve(), TimeMode::Parameter)
    }
}

fn check_point(spec: &FinslerMetricSpec, p: P2) -> Result<()> {
    if spec.dim() != 2 {
        return Err(Error::InvalidInput("navigation queries are planar".into()));
    }
    if !(p[0].is_finite() && p[1].is_finite()) {
        return Err(Error::InvalidInput("non-finite query point".into()));
    }
    if !spec.bounds().contains(&p) {
        return Err(Error::DomainViolation(format!("point ({}, {}) outside the metric domain", p[0], p[1])));
    }
    Ok(())
}

/// Largest speed in the indicatrix at `x`, or 1 when unavailable.
fn max_speed(spec: &FinslerMetricSpec, x: P2) -> f64 {
    spec.indicatrix_sample(0.0, &x, 64)
        .ok()
        .and_then(|pts| pts.iter().map(|v| v[0].hypot(v[1])).reduce(f64::max))
        .filter(|v| v.is_finite() && *v > 0.0)
        .unwrap_or(1.0)
}

/// Cheap certificate: in a homogeneous medium the straight segment is
/// optimal, so a target in a direction outside the cone is unreachable.
fn trivially_unreachable(spec: &FinslerMetricSpec, x0: P2, y0: P2) -> bool {
    spec.is_homogeneous()
        && matches!(
            spec.domain(0.0, &x0, &[y0[0] - x0[0], y0[1] - x0[1]], Branch::Upper),
            Ok(DomainClass::Outside)
        )
}

fn horizon_estimate(spec: &FinslerMetricSpec, x0: P2, y0: P2, dt: f64) -> f64 {
    let d = (y0[0] - x0[0]).hypot(y0[1] - x0[1]);
    let straight = spec
        .path_length(&SampledCurve::polyline(vec![x0.to_vec(), y0.to_vec()]), TimeMode::Frozen(0.0))
        .ok()
        .filter(|c| c.is_finite())
        .unwrap_or(0.0);
    1.5 * straight.max(d / max_speed(spec, x0)) + 10.0 * dt
}

/// A point-source wavemap from `x0` with its cut report.
pub struct PointSource {
    pub metric: SpacetimeMetric,
    pub origin: P2,
    pub wavemap: Wavemap,
    pub cuts: CutReport,
}

impl PointSource {
    pub fn new(spec: &FinslerMetricSpec, x0: P2, t_max: f64, opts: &NavOptions) -> Result<Self> {
        check_point(spec, x0)?;
        let metric = spacetime_for(spec);
        let front = InitialFront::point(x0, opts.seeds)?;
        let params = IntegratorParams {
            bounds: spec.bounds(),
            ..IntegratorParams::new(opts.dt, t_max)
        };
        let wavemap = propagate(&metric, &front, &params, Side::Outward)?;
        let cuts = detect_cuts(&wavemap)?;
        Ok(PointSource {
            metric,
            origin: x0,
            wavemap,
            cuts,
        })
    }

    /// First arrival at `y` and the launch angle of the covering seeds.
    pub fn arrival(&self, y: P2) -> Option<(f64, f64)> {
        let radius = 1e-9 * (1.0 + y[0].abs().max(y[1].abs()));
        let c = locate_point(&self.wavemap, &self.cuts, y, radius)?;
        Some((c.t, std::f64::consts::TAU * c.seed / self.wavemap.len() as f64))
    }

    /// True when some seed is still on the front at the horizon.
    pub fn front_alive(&self) -> bool {
        let h = self.wavemap.horizon();
        self.cuts.records.iter().any(|r| r.t_cut >= h)
    }
}

/// Propagates from `x0` until every target is covered, doubling the
/// horizon as needed. Targets still uncovered are unreachable.
fn cover(spec: &FinslerMetricSpec, x0: P2, targets: &[P2], opts: &NavOptions) -> Result<(PointSource, Vec<Option<(f64, f64)>>)> {
    let mut t_max = targets
        .iter()
        .map(|y| horizon_estimate(spec, x0, *y, opts.dt))
        .fold(10.0 * opts.dt, f64::max);
    let mut doublings = 0;
    loop {
        let source = PointSource::new(spec, x0, t_max, opts)?;
        let hits: Vec<_> = targets.iter().map(|y| source.arrival(*y)).collect();
        let missing = hits.iter().zip(targets).any(|(h, y)| h.is_none() && !trivially_unreachable(spec, x0, *y));
        if !missing || doublings >= opts.max_doublings || !source.front_alive() {
            return Ok((source, hits));
        }
        t_max *= 2.0;
        doublings += 1;
    }
}

/// Closest approach of a trajectory to `y`: `(time, point, velocity,
/// sample index, signed miss)`. The sign tells on which side of the ray
/// `y` lies.
fn closest_approach(tr: &Trajectory, y: P2) -> Option<(f64, P2, P2, usize, f64)> {
    let m = tr.len();
    if m < 2 {
        return None;
    }
    let p = |k: usize| [tr.points[k][0], tr.points[k][1]];
    let mut best = (f64::INFINITY, 0usize);
    for k in 0..m - 1 {
        let (a, b) = (p(k), p(k + 1));
        let ab = [b[0] - a[0], b[1] - a[1]];
        let l2 = ab[0] * ab[0] + ab[1] * ab[1];
        let f = if l2 > 0.0 {
            (((y[0] - a[0]) * ab[0] + (y[1] - a[1]) * ab[1]) / l2).clamp(0.0, 1.0)
        } else {
            0.0
        };
        let d = (a[0] + f * ab[0] - y[0]).hypot(a[1] + f * ab[1] - y[1]);
        if d < best.0 {
            best = (d, k);
        }
    }
    let interp = |k: usize, s: f64| {
        let h = tr.times[k + 1] - tr.times[k];
        let mut x = [0.0; 2];
        let mut v = [0.0; 2];
        hermite(tr.point(k), tr.velocity(k), tr.point(k + 1), tr.velocity(k + 1), h, s, &mut x, &mut v);
        (x, v)
    };
    let dist2 = |k: usize, s: f64| {
        let (x, _) = interp(k, s);
        (x[0] - y[0]).powi(2) + (x[1] - y[1]).powi(2)
    };
    let lo = best.1.saturating_sub(1);
    let hi = (best.1 + 1).min(m - 2);
    let mut out: Option<(f64, usize, f64)> = None;
    for k in lo..=hi {
        let s = golden_min(|s| dist2(k, s), 0.0, 1.0, 1e-13);
        let d = dist2(k, s);
        if out.is_none_or(|o| d < o.0) {
            out = Some((d, k, s));
        }
    }
    let (_, k, s) = out?;
    let (x, v) = interp(k, s);
    let t = tr.times[k] + s * (tr.times[k + 1] - tr.times[k]);
    let speed = v[0].hypot(v[1]);
    let miss = (v[0] * (y[1] - x[1]) - v[1] * (y[0] - x[0])) / speed;
    Some((t, x, v, k, miss))
}

fn golden_min(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

struct Shot {
    angle: f64,
    trajectory: Trajectory,
    t: f64,
    x: P2,
    v: P2,
    k: usize,
    miss: f64,
}

fn shoot(metric: &SpacetimeMetric, spec: &FinslerMetricSpec, x0: P2, y0: P2, angle: f64, t_end: f64, dt: f64) -> Option<Shot> {
    let (sn, cs) = angle.sin_cos();
    let dirs = orthogonal_directions(metric, 0.0, &x0, &[-sn, cs], &[cs, sn], OrthoMethod::Auto).ok()?;
    let d = select_side(&dirs, Side::Outward, angle).ok()?;
    let init = TrajectoryState {
        t: 0.0,
        x: x0.to_vec(),
        xdot: d.xdot,
    };
    let params = IntegratorParams {
        bounds: spec.bounds(),
        ..IntegratorParams::new(dt, t_end)
    };
    let trajectory = integrate_pregeodesic(metric, &init, &params).ok()?;
    let (t, x, v, k, miss) = closest_approach(&trajectory, y0)?;
    Some(Shot {
        angle,
        trajectory,
        t,
        x,
        v,
        k,
        miss,
    })
}

/// Bisection on the launch angle driven by the signed miss, with a
/// golden-section fallback when no bracket is found.
fn polish(
    metric: &SpacetimeMetric,
    spec: &FinslerMetricSpec,
    x0: P2,
    y0: P2,
    coarse: (f64, f64),
    seeds: usize,
    opts: &NavOptions,
) -> std::result::Result<Shot, Option<Shot>> {
    let (t_coarse, angle0) = coarse;
    let t_end = t_coarse + (0.2 * t_coarse).max(20.0 * opts.dt);
    let fire = |a: f64| shoot(metric, spec, x0, y0, a, t_end, opts.dt);
    let step = std::f64::consts::TAU / seeds as f64;
    let mut best: Option<Shot> = None;
    let keep = |best: &mut Option<Shot>, s: Shot| {
        if best.as_ref().is_none_or(|b| s.miss.abs() < b.miss.abs()) {
            *best = Some(s);
        }
    };
    let Some(center) = fire(angle0) else {
        return Err(None);
    };
    if center.miss.abs() <= opts.tolerance {
        return Ok(center);
    }
    let mut bracket = None;
    let mut width = step;
    for _ in 0..5 {
        let (Some(l), Some(r)) = (fire(angle0 - width), fire(angle0 + width)) else {
            break;
        };
        if l.miss.signum() != center.miss.signum() {
            bracket = Some((l, center));
            break;
        }
        if r.miss.signum() != center.miss.signum() {
            bracket = Some((center, r));
            break;
        }
        keep(&mut best, l);
        keep(&mut best, r);
        width *= 2.0;
    }
    let Some((mut lo, mut hi)) = bracket else {
        let a = golden_min(|a| fire(a).map_or(f64::INFINITY, |s| s.miss.abs()), angle0 - width, angle0 + width, 1e-14);
        if let Some(s) = fire(a) {
            keep(&mut best, s);
        }
        return match best {
            Some(b) if b.miss.abs() <= opts.tolerance => Ok(b),
            other => Err(other),
        };
    };
    for _ in 0..200 {
        let mid_angle = 0.5 * (lo.angle + hi.angle);
        let Some(mid) = fire(mid_angle) else { break };
        if mid.miss.abs() <= opts.tolerance {
            return Ok(mid);
        }
        if (hi.angle - lo.angle).abs() < 1e-15 {
            keep(&mut best, mid);
            break;
        }
        if mid.miss.signum() == lo.miss.signum() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    keep(&mut best, lo);
    keep(&mut best, hi);
    match best {
        Some(b) if b.miss.abs() <= opts.tolerance => Ok(b),
        other => Err(other),
    }
}

fn path_from(spec: &FinslerMetricSpec, shot: Shot, coarse_time: f64, status: PathStatus) -> PathResult {
    let tr = &shot.trajectory;
    let mut times: Vec<f64> = tr.times[..=shot.k].to_vec();
    let mut points: Vec<P2> = (0..=shot.k).map(|k| [tr.points[k][0], tr.points[k][1]]).collect();
    let mut velocities: Vec<P2> = (0..=shot.k).map(|k| [tr.velocities[k][0], tr.velocities[k][1]]).collect();
    if shot.t > times[shot.k] {
        times.push(shot.t);
        points.push(shot.x);
        velocities.push(shot.v);
    }
    let headings = times
        .iter()
        .zip(points.iter().zip(&velocities))
        .map(|(t, (x, v))| match navigation_of(spec, *t, x) {
            Ok(nav) => [v[0] - nav.wind[0], v[1] - nav.wind[1]],
            Err(_) => *v,
        })
        .collect();
    PathResult {
        time: shot.t,
        coarse_time,
        times,
        points,
        velocities,
        headings,
        launch_angle: shot.angle,
        miss: shot.miss.abs(),
        status,
    }
}

fn solve_one(
    spec: &FinslerMetricSpec,
    source: &PointSource,
    y0: P2,
    hit: Option<(f64, f64)>,
    opts: &NavOptions,
) -> Result<PathResult> {
    let x0 = source.origin;
    let Some(coarse) = hit else {
        return Err(Error::Unreachable);
    };
    match polish(&source.metric, spec, x0, y0, coarse, source.wavemap.len(), opts) {
        Ok(shot) => Ok(path_from(spec, shot, coarse.0, PathStatus::Optimal)),
        Err(Some(best)) => Err(Error::ShootingStalled {
            miss: best.miss.abs(),
            time: best.t,
            heading: best.angle,
        }),
        Err(None) => Err(Error::ShootingStalled {
            miss: f64::INFINITY,
            time: coarse.0,
            heading: coarse.1,
        }),
    }
}

/// Fastest path from `x0` to `y0`.
pub fn fastest_path(spec: &FinslerMetricSpec, x0: P2, y0: P2, opts: &NavOptions) -> Result<PathResult> {
    check_point(spec, y0)?;
    if x0 == y0 {
        return Err(Error::InvalidInput("origin and target coincide".into()));
    }
    if trivially_unreachable(spec, x0, y0) {
        return Err(Error::Unreachable);
    }
    let (source, hits) = cover(spec, x0, &[y0], opts)?;
    solve_one(spec, &source, y0, hits[0], opts)
}

/// `d_F(x0, y0)`; `None` when `y0` is unreachable from `x0`.
pub fn distance(spec: &FinslerMetricSpec, x0: P2, y0: P2, opts: &NavOptions) -> Result<Option<f64>> {
    Ok(distances_from(spec, x0, &[y0], opts)?[0])
}

/// `d_F(x0, y)` for every target, from a single propagation.
pub fn distances_from(spec: &FinslerMetricSpec, x0: P2, targets: &[P2], opts: &NavOptions) -> Result<Vec<Option<f64>>> {
    check_point(spec, x0)?;
    for y in targets {
        check_point(spec, *y)?;
    }
    let pending: Vec<P2> = targets
        .iter()
        .copied()
        .filter(|y| *y != x0 && !trivially_unreachable(spec, x0, *y))
        .collect();
    let (source, hits) = if pending.is_empty() {
        (None, vec![])
    } else {
        let (s, h) = cover(spec, x0, &pending, opts)?;
        (Some(s), h)
    };
    let solved: Vec<Option<f64>> = pending
        .par_iter()
        .zip(hits.par_iter())
        .map(|(y, hit)| {
            let source = source.as_ref().expect("pending targets imply a propagation");
            let coarse = (*hit)?;
            if opts.coarse_only {
                return Some(coarse.0);
            }
            match solve_one(spec, source, *y, Some(coarse), opts) {
                Ok(p) => Some(p.time),
                Err(_) => Some(coarse.0),
            }
        })
        .collect();
    let mut it = solved.into_iter();
    Ok(targets
        .iter()
        .map(|y| {
            if *y == x0 {
                Some(0.0)
            } else if trivially_unreachable(spec, x0, *y) {
                None
            } else {
                it.next().expect("one result per pending target")
            }
        })
        .collect())
}

/// Boundary of the forward ball `{y : d(x0, y) < r}` or the backward ball
/// `{y : d(y, x0) < r}` (the forward ball of the reversed metric).
pub fn ball_boundary(spec: &FinslerMetricSpec, x0: P2, r: f64, side: BallSide, opts: &NavOptions) -> Result<FrontSlice> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::InvalidInput(format!("ball radius must be positive, got {r}")));
    }
    let spec = match side {
        BallSide::Forward => spec.clone(),
        BallSide::Backward => spec.reversed(),
    };
    let source = PointSource::new(&spec, x0, r, opts)?;
    front_at(&source.wavemap, &source.cuts, r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::finsler::NavigationData;
    use crate::wavefront::hausdorff;

    fn wind(w: P2) -> FinslerMetricSpec {
        FinslerMetricSpec::zermelo(NavigationData::euclidean_constant(&w))
    }

    fn fast() -> NavOptions {
        NavOptions {
            seeds: 64,
            dt: 1e-2,
            ..Default::default()
        }
    }

    #[test]
    fn euclidean_distance() {
        let d = distance(&FinslerMetricSpec::euclidean(2), [0.0, 0.0], [3.0, 4.0], &fast()).unwrap().unwrap();
        assert!((d - 5.0).abs() < 1e-8, "{d}");
    }

    #[test]
    fn tail_head_and_crosswind() {
        let z = wind([0.5, 0.0]);
        let o = fast();
        let d = distances_from(&z, [0.0, 0.0], &[[1.0, 0.0], [0.0, 1.0], [0.0, 0.0]], &o).unwrap();
        assert!((d[0].unwrap() - 2.0 / 3.0).abs() < 1e-8);
        assert!((d[1].unwrap() - 2.0 / 3f64.sqrt()).abs() < 1e-8);
        assert_eq!(d[2], Some(0.0));
        let back = distance(&z, [1.0, 0.0], [0.0, 0.0], &o).unwrap().unwrap();
        assert!((back - 2.0).abs() < 1e-8);
    }

    #[test]
    fn crosswind_heading_compensates_drift() {
        let p = fastest_path(&wind([0.5, 0.0]), [0.0, 0.0], [0.0, 1.0], &fast()).unwrap();
        assert_eq!(p.status, PathStatus::Optimal);
        for h in &p.headings {
            assert!((h[0] + 0.5).abs() < 1e-8 && (h[1] - 0.75f64.sqrt()).abs() < 1e-8, "{h:?}");
        }
        let len = p.length(&wind([0.5, 0.0])).unwrap();
        assert!((len - p.time).abs() < 1e-6 * p.time);
    }

    #[test]
    fn strong_wind_target_is_unreachable() {
        let z = wind([2.0, 0.0]);
        assert_eq!(distance(&z, [0.0, 0.0], [0.0, 1.0], &fast()).unwrap(), None);
        assert!(matches!(fastest_path(&z, [0.0, 0.0], [0.0, 1.0], &fast()), Err(Error::Unreachable)));
        let d = distance(&z, [0.0, 0.0], [3.0, 0.0], &fast()).unwrap().unwrap();
        assert!((d - 1.0).abs() < 1e-8);
    }

    #[test]
    fn balls_are_translated_circles() {
        let z = wind([0.5, 0.0]);
        let circle = |c: P2| -> Vec<P2> {
            (0..720)
                .map(|k| {
                    let a = k as f64 * std::f64::consts::TAU / 720.0;
                    [c[0] + a.cos(), c[1] + a.sin()]
                })
                .collect()
        };
        let fwd = ball_boundary(&z, [0.0, 0.0], 1.0, BallSide::Forward, &fast()).unwrap();
        assert_eq!(fwd.breaks(), 0);
        assert!(hausdorff(&fwd.points(), &circle([0.5, 0.0])) < 0.06);
        let bwd = ball_boundary(&z, [0.0, 0.0], 1.0, BallSide::Backward, &fast()).unwrap();
        assert!(hausdorff(&bwd.points(), &circle([-0.5, 0.0])) < 0.06);
    }
}
