//! Lightlike pregeodesics parametrized by coordinate time, their
//! G-orthogonal initial conditions on a front, and unit-speed Finsler
//! geodesics for cross-checks.

use crate::error::{Error, Result};
use crate::field::Bounds;
use crate::finsler::{Branch, FinslerMetricSpec, MetricKind};
use crate::jet::Jet;
use crate::linalg::{self, Mat3, Vec3, CAP};
use crate::spacetime::SpacetimeMetric;
use crate::wavefront::InitialFront;

/// Position and spatial velocity at time `t`; the lifted velocity is `(1, xdot)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryState {
    pub t: f64,
    pub x: Vec<f64>,
    pub xdot: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntegratorParams {
    pub dt: f64,
    pub t_max: f64,
    /// Rescale the spatial velocity back onto the light cone after each step.
    pub renormalize_null: bool,
    /// Allowed growth of `|G(1, xdot)|` per unit time.
    pub drift_tolerance: f64,
    /// Spatial region the trajectory must stay in.
    pub bounds: Bounds,
}

impl Default for IntegratorParams {
    fn default() -> Self {
        IntegratorParams {
            dt: 1e-3,
            t_max: 1.0,
            renormalize_null: true,
            drift_tolerance: 1e-6,
            bounds: Bounds::unbounded(),
        }
    }
}

impl IntegratorParams {
    pub fn new(dt: f64, t_max: f64) -> Self {
        IntegratorParams {
            dt,
            t_max,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidInput(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_max > 0.0 && self.t_max.is_finite()) {
            return Err(Error::InvalidInput(format!("t_max must be positive, got {}", self.t_max)));
        }
        Ok(())
    }

    /// Sample times `t0, t0 + dt, .., t_max`; the last step may be shorter.
    pub fn time_grid(&self, t0: f64) -> Vec<f64> {
        let span = self.t_max - t0;
        if span <= 0.0 {
            return vec![t0];
        }
        let steps = (span / self.dt - 1e-9).ceil().max(1.0) as usize;
        (0..=steps)
            .map(|k| if k == steps { self.t_max } else { t0 + k as f64 * self.dt })
            .collect()
    }
}

/// Why integration ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stop {
    Horizon,
    DomainExit,
    SmoothnessViolation,
    StepRejected,
}

/// A sampled trajectory. Samples are kept up to the last valid step, so a
/// trajectory that leaves the domain still carries its history.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub dim: usize,
    pub times: Vec<f64>,
    pub points: Vec<Vec3<f64>>,
    pub velocities: Vec<Vec3<f64>>,
    pub stop: Stop,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last_time(&self) -> f64 {
        *self.times.last().expect("trajectory has samples")
    }

    pub fn point(&self, k: usize) -> &[f64] {
        &self.points[k][..self.dim]
    }

    pub fn velocity(&self, k: usize) -> &[f64] {
        &self.velocities[k][..self.dim]
    }

    pub fn end(&self) -> &[f64] {
        self.point(self.len() - 1)
    }

    /// The stop reason as an error, `None` when the horizon was reached.
    pub fn error(&self) -> Option<Error> {
        let t = self.last_time();
        match self.stop {
            Stop::Horizon => None,
            Stop::DomainExit => Some(Error::DomainExit { t }),
            Stop::SmoothnessViolation => Some(Error::SmoothnessViolation),
            Stop::StepRejected => Some(Error::StepRejected { t }),
        }
    }

    /// Position at time `t` by cubic Hermite interpolation between samples.
    pub fn position_at(&self, t: f64) -> Option<Vec<f64>> {
        let n = self.dim;
        let k = locate(&self.times, t)?;
        if k + 1 == self.len() {
            return Some(self.point(k).to_vec());
        }
        let h = self.times[k + 1] - self.times[k];
        let s = (t - self.times[k]) / h;
        let mut x = vec![0.0; n];
        let mut v = vec![0.0; n];
        crate::finsler::hermite(
            self.point(k),
            self.velocity(k),
            self.point(k + 1),
            self.velocity(k + 1),
            h,
            s,
            &mut x,
            &mut v,
        );
        Some(x)
    }
}

/// Index `k` with `times[k] <= t < times[k + 1]` (or the last index when
/// `t` equals the final time).
pub(crate) fn locate(times: &[f64], t: f64) -> Option<usize> {
    let first = *times.first()?;
    let last = *times.last()?;
    if t < first - 1e-12 || t > last + 1e-12 {
        return None;
    }
    if t >= last {
        return Some(times.len() - 1);
    }
    let k = times.partition_point(|v| *v <= t);
    Some(k.saturating_sub(1))
}

enum StepFailure {
    Exit,
    Smooth,
    Rejected,
}

fn classify_failure(e: &Error) -> StepFailure {
    match e {
        Error::SmoothnessViolation => StepFailure::Smooth,
        Error::StepRejected { .. } | Error::InvalidInput(_) => StepFailure::Rejected,
        _ => StepFailure::Exit,
    }
}

type Rhs<'a> = dyn Fn(f64, &[f64], &[f64]) -> Result<Vec3<f64>> + 'a;

/// One classical Runge-Kutta step of `x'' = a(t, x, x')`.
fn rk4_step(rhs: &Rhs, n: usize, t: f64, h: f64, x: &[f64], v: &[f64]) -> Result<(Vec3<f64>, Vec3<f64>)> {
    let mut xs = [0.0; 3];
    let mut vs = [0.0; 3];
    let a1 = rhs(t, x, v)?;
    let k1x = v;
    for i in 0..n {
        xs[i] = x[i] + 0.5 * h * k1x[i];
        vs[i] = v[i] + 0.5 * h * a1[i];
    }
    let k2x = vs;
    let a2 = rhs(t + 0.5 * h, &xs[..n], &k2x[..n])?;
    for i in 0..n {
        xs[i] = x[i] + 0.5 * h * k2x[i];
        vs[i] = v[i] + 0.5 * h * a2[i];
    }
    let k3x = vs;
    let a3 = rhs(t + 0.5 * h, &xs[..n], &k3x[..n])?;
    for i in 0..n {
        xs[i] = x[i] + h * k3x[i];
        vs[i] = v[i] + h * a3[i];
    }
    let k4x = vs;
    let a4 = rhs(t + h, &xs[..n], &k4x[..n])?;
    let mut xn = [0.0; 3];
    let mut vn = [0.0; 3];
    for i in 0..n {
        xn[i] = x[i] + h / 6.0 * (k1x[i] + 2.0 * k2x[i] + 2.0 * k3x[i] + k4x[i]);
        vn[i] = v[i] + h / 6.0 * (a1[i] + 2.0 * a2[i] + 2.0 * a3[i] + a4[i]);
    }
    if xn.iter().chain(&vn).any(|c| !c.is_finite()) {
        return Err(Error::StepRejected { t: t + h });
    }
    Ok((xn, vn))
}

fn run(
    n: usize,
    t0: f64,
    x0: &[f64],
    v0: &[f64],
    params: &IntegratorParams,
    rhs: &Rhs,
    project: &dyn Fn(f64, &[f64], &mut [f64]) -> Result<()>,
) -> Result<Trajectory> {
    params.validate()?;
    let grid = params.time_grid(t0);
    let mut traj = Trajectory {
        dim: n,
        times: Vec::with_capacity(grid.len()),
        points: Vec::with_capacity(grid.len()),
        velocities: Vec::with_capacity(grid.len()),
        stop: Stop::Horizon,
    };
    let mut x = [0.0; 3];
    let mut v = [0.0; 3];
    x[..n].copy_from_slice(x0);
    v[..n].copy_from_slice(v0);
    traj.times.push(t0);
    traj.points.push(x);
    traj.velocities.push(v);
    for w in grid.windows(2) {
        let (t, h) = (w[0], w[1] - w[0]);
        let step = rk4_step(rhs, n, t, h, &x[..n], &v[..n]).and_then(|(xn, mut vn)| {
            if !params.bounds.contains(&xn[..n]) {
                return Err(Error::DomainExit { t: w[1] });
            }
            project(w[1], &xn[..n], &mut vn[..n])?;
            Ok((xn, vn))
        });
        match step {
            Ok((xn, vn)) => {
                x = xn;
                v = vn;
                traj.times.push(w[1]);
                traj.points.push(x);
                traj.velocities.push(v);
            }
            Err(e) => {
                traj.stop = match classify_failure(&e) {
                    StepFailure::Exit => Stop::DomainExit,
                    StepFailure::Smooth => Stop::SmoothnessViolation,
                    StepFailure::Rejected => Stop::StepRejected,
                };
                break;
            }
        }
    }
    Ok(traj)
}

/// Scale factor `sigma` with `G(1, sigma xdot) = 0`, the root nearest 1.
pub(crate) fn null_scale(metric: &SpacetimeMetric, t: f64, x: &[f64], xdot: &[f64]) -> Result<f64> {
    match metric {
        SpacetimeMetric::LorentzFinsler(f) => Ok(1.0 / f.cost(t, x, xdot)?),
        SpacetimeMetric::Sstk(s) => {
            let n = s.dim();
            let l = s.local::<f64>(t, x)?;
            // g0 sigma^2 + 2 omega sigma - Lam = 0
            let a = linalg::quad(&l.g0, xdot, n);
            let b = linalg::pair(&l.omega, xdot, n);
            let mut disc = b * b + l.lambda * a;
            if disc < 0.0 {
                if disc < -1e-9 * (b * b + a * l.lambda.abs()) {
                    return Err(Error::DomainViolation("velocity left the light cone".into()));
                }
                disc = 0.0;
            }
            let q = -(b + b.signum() * disc.sqrt());
            let mut roots = [q / a, if q != 0.0 { -l.lambda / q } else { f64::NAN }];
            roots.sort_by(|p, r| (p - 1.0).abs().total_cmp(&(r - 1.0).abs()));
            let sigma = roots[0];
            if !(sigma > 0.0) {
                return Err(Error::DomainViolation("no future null rescaling".into()));
            }
            Ok(sigma)
        }
    }
}

/// Integrates the pregeodesic system for `f(t) = (t, x(t))` with fixed-step
/// RK4. Leaving the domain stops the integration; see [`Trajectory::stop`].
pub fn integrate_pregeodesic(
    metric: &SpacetimeMetric,
    init: &TrajectoryState,
    params: &IntegratorParams,
) -> Result<Trajectory> {
    let n = metric.dim();
    if init.x.len() != n || init.xdot.len() != n {
        return Err(Error::InvalidInput(format!("initial state must have dimension {n}")));
    }
    let mut u = vec![1.0];
    u.extend_from_slice(&init.xdot);
    let g = metric.eval_g(init.t, &init.x, &u)?;
    let scale = u.iter().map(|c| c * c).sum::<f64>();
    if g.abs() > 1e-9 * scale {
        return Err(Error::NotLightlike { residual: g.abs() });
    }
    let rhs = |t: f64, x: &[f64], v: &[f64]| metric.acceleration(t, x, v);
    let project = |t: f64, x: &[f64], v: &mut [f64]| -> Result<()> {
        if params.renormalize_null {
            let sigma = null_scale(metric, t, x, v)?;
            for c in v.iter_mut() {
                *c *= sigma;
            }
        } else if metric.dim() > 0 {
            // Still make sure the velocity is admissible for the next step.
            let mut u = [1.0; CAP];
            u[1..=v.len()].copy_from_slice(v);
            metric.eval_g(t, x, &u[..=v.len()])?;
        }
        Ok(())
    };
    run(n, init.t, &init.x, &init.xdot, params, &rhs, &project)
}

/// Geodesic spray of `F` at fixed time: `x''^k = -gamma^k_ij(x') x'^i x'^j`
/// built from the fundamental tensor at `x'`.
pub(crate) fn finsler_acceleration(spec: &FinslerMetricSpec, t: f64, x: &[f64], v: &[f64]) -> Result<Vec3<f64>> {
    let n = spec.dim();
    let g: [[Jet; 3]; 3] = spec.tensor(t, x, v, Branch::Upper)?;
    let mut c = [0.0; CAP];
    for (r, cr) in c.iter_mut().enumerate().take(n) {
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                acc += (g[r][j].du[i + 1] - 0.5 * g[i][j].du[r + 1]) * v[i] * v[j];
            }
        }
        *cr = acc;
    }
    let mut m = [[0.0; CAP]; CAP];
    for i in 0..n {
        for j in 0..n {
            m[i][j] = g[i][j].re;
        }
    }
    let a = linalg::solve(&m, &c, n).ok_or_else(|| Error::DegenerateMetric("singular fundamental tensor".into()))?;
    Ok([-a[0], -a[1], -a[2]])
}

/// Unit-speed geodesic of a time-independent Finsler metric, parametrized by
/// length and sampled on the same grid as [`integrate_pregeodesic`].
pub fn integrate_finsler_geodesic(
    spec: &FinslerMetricSpec,
    x0: &[f64],
    v0: &[f64],
    params: &IntegratorParams,
) -> Result<Trajectory> {
    if spec.is_time_dependent() {
        return Err(Error::InvalidInput("Finsler geodesics need a time-independent metric".into()));
    }
    let n = spec.dim();
    if x0.len() != n || v0.len() != n {
        return Err(Error::InvalidInput(format!("initial data must have dimension {n}")));
    }
    let speed = spec.cost(0.0, x0, v0)?;
    if (speed - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidInput(format!("initial velocity must have unit cost, got {speed}")));
    }
    let rhs = |_t: f64, x: &[f64], v: &[f64]| finsler_acceleration(spec, 0.0, x, v);
    let project = |_t: f64, x: &[f64], v: &mut [f64]| -> Result<()> {
        let f = spec.cost(0.0, x, v)?;
        if params.renormalize_null {
            for c in v.iter_mut() {
                *c /= f;
            }
        }
        Ok(())
    };
    run(n, 0.0, x0, v0, params, &rhs, &project)
}

/// Null-constraint monitor over a trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct ConservationReport {
    /// `max_k |G(1, xdot_k)|`.
    pub max_abs_g: f64,
    /// `|G(1, xdot_k)|` at every sample.
    pub series: Vec<f64>,
    /// `max_k |G(1, xdot_k)| / (t_k - t_0)` over samples after the first.
    pub max_rate: f64,
}

pub fn conservation_report(traj: &Trajectory, metric: &SpacetimeMetric) -> Result<ConservationReport> {
    if traj.is_empty() {
        return Err(Error::InvalidInput("empty trajectory".into()));
    }
    let n = traj.dim;
    let mut series = Vec::with_capacity(traj.len());
    let mut max_rate: f64 = 0.0;
    let mut u = [1.0; CAP];
    for k in 0..traj.len() {
        u[1..=n].copy_from_slice(traj.velocity(k));
        let g = metric.eval_g(traj.times[k], traj.point(k), &u[..=n])?.abs();
        if k > 0 {
            max_rate = max_rate.max(g / (traj.times[k] - traj.times[0]));
        }
        series.push(g);
    }
    Ok(ConservationReport {
        max_abs_g: series.iter().fold(0.0, |m, v| m.max(*v)),
        series,
        max_rate,
    })
}

/// Which of the two G-orthogonal lightlike directions to take.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Side {
    #[default]
    Outward,
    Inward,
}

/// How to solve the orthogonality condition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OrthoMethod {
    /// Closed form for quadratic spacetimes, root finding otherwise.
    #[default]
    Auto,
    ClosedForm,
    RootFind,
}

/// A future lightlike `(1, xdot)` that is G-orthogonal to a front.
#[derive(Debug, Clone, PartialEq)]
pub struct OrthogonalDirection {
    pub xdot: Vec<f64>,
    pub branch: Branch,
    /// `-g^G_u(u, (0, n))` for the outward normal `n`: positive on the
    /// outward side.
    pub side_value: f64,
}

const SCAN_ANGLES: usize = 720;

/// All G-orthogonal future lightlike directions at a front point with unit
/// tangent `e` and outward normal `normal` (plane only).
pub fn orthogonal_directions(
    metric: &SpacetimeMetric,
    t: f64,
    x: &[f64],
    e: &[f64],
    normal: &[f64],
    method: OrthoMethod,
) -> Result<Vec<OrthogonalDirection>> {
    if metric.dim() != 2 || e.len() != 2 || normal.len() != 2 {
        return Err(Error::InvalidInput("orthogonal initial data is implemented for plane fronts".into()));
    }
    let quadratic = quadratic_data(metric, t, x)?;
    let closed = match method {
        OrthoMethod::Auto => quadratic.is_some(),
        OrthoMethod::ClosedForm => true,
        OrthoMethod::RootFind => false,
    };
    if closed {
        let Some((lambda, omega, g0)) = quadratic else {
            return Err(Error::InvalidInput("closed-form orthogonality needs a quadratic spacetime".into()));
        };
        // Omega = g0^{-1} omega; n_g spans the g0-orthogonal complement of e.
        let om = linalg::solve3(&g0, &omega[..2], 2).ok_or_else(|| Error::DegenerateMetric("singular g0".into()))?;
        let ge = linalg::matvec(&g0, e, 2);
        let mut ng = [-ge[1], ge[0]];
        let len = linalg::quad(&g0, &ng, 2).sqrt();
        ng = [ng[0] / len, ng[1] / len];
        let mu = (lambda + linalg::quad(&g0, &om[..2], 2)).sqrt();
        let gn = linalg::bilinear(&g0, &ng, normal, 2);
        return Ok([mu, -mu]
            .iter()
            .map(|m| {
                let xdot = vec![-om[0] + m * ng[0], -om[1] + m * ng[1]];
                let branch = branch_of(metric, t, x, &xdot);
                OrthogonalDirection {
                    xdot,
                    branch,
                    side_value: m * gn,
                }
            })
            .collect());
    }
    root_find_directions(metric, t, x, e, normal)
}

/// `(Lambda, omega, g0)` when G is a quadratic form in `(tau, v)`.
fn quadratic_data(metric: &SpacetimeMetric, t: f64, x: &[f64]) -> Result<Option<(f64, Vec3<f64>, Mat3<f64>)>> {
    match metric {
        SpacetimeMetric::Sstk(s) => {
            let l = s.local::<f64>(t, x)?;
            Ok(Some((l.lambda, l.omega, l.g0)))
        }
        SpacetimeMetric::LorentzFinsler(spec) => match spec.kind() {
            MetricKind::Riemannian { h } => Ok(Some((1.0, [0.0; 3], h.at(t, x)))),
            _ => Ok(None),
        },
    }
}

fn branch_of(metric: &SpacetimeMetric, t: f64, x: &[f64], xdot: &[f64]) -> Branch {
    match metric.fermat().cost(t, x, xdot) {
        Ok(c) if (c - 1.0).abs() < 1e-6 => Branch::Upper,
        Ok(_) => Branch::Lower,
        Err(_) => Branch::Lower,
    }
}

/// Residual `g^G_u(u, (0, e))` and side value for the lift on `branch` of
/// the direction at angle `theta`, normalized to `tau = 1`.
fn ortho_residual(
    metric: &SpacetimeMetric,
    t: f64,
    x: &[f64],
    e: &[f64],
    normal: &[f64],
    theta: f64,
    branch: Branch,
) -> Option<(f64, f64, [f64; 2])> {
    let d = [theta.cos(), theta.sin()];
    let lift = metric
        .lightlike_lift(t, x, &d)
        .ok()?
        .into_iter()
        .find(|l| l.branch == branch)?;
    let v = [d[0] / lift.tau, d[1] / lift.tau];
    let u = [1.0, v[0], v[1]];
    let g = metric.fundamental_tensor_g(t, x, &u).ok()?;
    let pair = |w: &[f64]| -> f64 {
        let w = [0.0, w[0], w[1]];
        (0..3).map(|i| (0..3).map(|j| u[i] * g[(i, j)] * w[j]).sum::<f64>()).sum()
    };
    Some((pair(e), -pair(normal), v))
}

fn root_find_directions(
    metric: &SpacetimeMetric,
    t: f64,
    x: &[f64],
    e: &[f64],
    normal: &[f64],
) -> Result<Vec<OrthogonalDirection>> {
    let mut out: Vec<OrthogonalDirection> = Vec::new();
    let step = std::f64::consts::TAU / SCAN_ANGLES as f64;
    for branch in [Branch::Upper, Branch::Lower] {
        let eval = |th: f64| ortho_residual(metric, t, x, e, normal, th, branch);
        // Offset grid, scanned cyclically so the wrap-around interval counts.
        let angle = |k: usize| (k as f64 + 0.37) * step;
        let values: Vec<_> = (0..SCAN_ANGLES).map(|k| eval(angle(k))).collect();
        for k in 0..SCAN_ANGLES {
            let (a, b) = (angle(k), angle(k) + step);
            if let (Some(ra), Some(rb)) = (values[k], values[(k + 1) % SCAN_ANGLES]) {
                if ra.0 == 0.0 || ra.0.signum() != rb.0.signum() {
                    if let Some(root) = bisect(&eval, a, b, ra.0) {
                        let dup = out.iter().any(|o| {
                            (o.xdot[0] - root.2[0]).abs() + (o.xdot[1] - root.2[1]).abs() < 1e-9
                        });
                        if !dup {
                            out.push(OrthogonalDirection {
                                xdot: root.2.to_vec(),
                                branch,
                                side_value: root.1,
                            });
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

fn bisect(
    eval: &dyn Fn(f64) -> Option<(f64, f64, [f64; 2])>,
    mut a: f64,
    mut b: f64,
    mut fa: f64,
) -> Option<(f64, f64, [f64; 2])> {
    if fa == 0.0 {
        return eval(a);
    }
    for _ in 0..80 {
        let m = 0.5 * (a + b);
        let fm = eval(m)?.0;
        if fm == 0.0 {
            return eval(m);
        }
        if fm.signum() == fa.signum() {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
        if b - a < 1e-15 {
            break;
        }
    }
    eval(0.5 * (a + b))
}

/// Picks the requested side among the orthogonal directions.
pub fn select_side(dirs: &[OrthogonalDirection], side: Side, s: f64) -> Result<OrthogonalDirection> {
    let sign = match side {
        Side::Outward => 1.0,
        Side::Inward => -1.0,
    };
    let mut best: Option<&OrthogonalDirection> = None;
    for d in dirs {
        let scale = linalg::norm(&d.xdot).max(1.0);
        if d.side_value.abs() < 1e-10 * scale {
            return Err(Error::AmbiguousSide { s });
        }
        if d.side_value * sign > 0.0 {
            // Prefer the fastest (upper-branch) direction.
            if best.is_none_or(|b| b.branch == Branch::Lower && d.branch == Branch::Upper) {
                best = Some(d);
            }
        }
    }
    best.cloned().ok_or(Error::NoSolution { s })
}

/// Initial condition for the seed at parameter `s` of `front`, at time `t0`.
pub fn lightlike_orthogonal_init(
    metric: &SpacetimeMetric,
    front: &InitialFront,
    s: f64,
    side: Side,
    t0: f64,
) -> Result<TrajectoryState> {
    let p = front.sample(s);
    let dirs = orthogonal_directions(metric, t0, &p.point, &p.tangent, &p.normal, OrthoMethod::Auto)?;
    let d = select_side(&dirs, side, s)?;
    Ok(TrajectoryState {
        t: t0,
        x: p.point.to_vec(),
        xdot: d.xdot,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{ScalarField, SymField, VectorField};
    use crate::finsler::NavigationData;
    use crate::spacetime::sstk_from_zermelo;

    fn lf(spec: FinslerMetricSpec) -> SpacetimeMetric {
        SpacetimeMetric::LorentzFinsler(spec)
    }

    fn shear(k: f64) -> NavigationData {
        NavigationData::new(
            SymField::identity(2),
            VectorField::new(vec![ScalarField::parse(&format!("{k}*y")).unwrap(), ScalarField::Const(0.0)]),
        )
        .unwrap()
    }

    #[test]
    fn constant_wind_ray_is_straight() {
        let m = lf(FinslerMetricSpec::zermelo(NavigationData::euclidean_constant(&[0.5, 0.0])));
        let init = TrajectoryState {
            t: 0.0,
            x: vec![0.0, 0.0],
            xdot: vec![1.5, 0.0],
        };
        let tr = integrate_pregeodesic(&m, &init, &IntegratorParams::new(1e-3, 1.0)).unwrap();
        assert_eq!(tr.stop, Stop::Horizon);
        assert_eq!(tr.len(), 1001);
        let end = tr.end();
        assert!((end[0] - 1.5).abs() < 1e-12 && end[1].abs() < 1e-15);
    }

    #[test]
    fn isotropic_rays_move_at_medium_speed() {
        let m = lf(FinslerMetricSpec::isotropic(2, 2.0));
        let init = TrajectoryState {
            t: 0.0,
            x: vec![0.3, -0.2],
            xdot: vec![2.0 * 0.6, 2.0 * 0.8],
        };
        let tr = integrate_pregeodesic(&m, &init, &IntegratorParams::new(1e-3, 1.0)).unwrap();
        let d = [tr.end()[0] - 0.3, tr.end()[1] + 0.2];
        assert!((linalg::norm(&d) - 2.0).abs() < 1e-8);
    }

    #[test]
    fn lightlike_check_on_init() {
        let m = lf(FinslerMetricSpec::euclidean(2));
        let init = TrajectoryState {
            t: 0.0,
            x: vec![0.0, 0.0],
            xdot: vec![0.5, 0.0],
        };
        assert!(matches!(
            integrate_pregeodesic(&m, &init, &IntegratorParams::default()),
            Err(Error::NotLightlike { .. })
        ));
    }

    #[test]
    fn bounds_stop_with_domain_exit() {
        let m = lf(FinslerMetricSpec::euclidean(2));
        let mut params = IntegratorParams::new(1e-2, 2.0);
        params.bounds = Bounds::new(&[-1.0, -1.0], &[1.0, 1.0]);
        let init = TrajectoryState {
            t: 0.0,
            x: vec![0.0, 0.0],
            xdot: vec![1.0, 0.0],
        };
        let tr = integrate_pregeodesic(&m, &init, &params).unwrap();
        assert_eq!(tr.stop, Stop::DomainExit);
        assert!((tr.last_time() - 1.0).abs() < 1e-9);
        assert!(matches!(tr.error(), Some(Error::DomainExit { .. })));
    }

    #[test]
    fn shear_rays_agree_between_spacetime_forms() {
        let nav = shear(0.2);
        let a = lf(FinslerMetricSpec::zermelo(nav.clone()));
        let b = SpacetimeMetric::Sstk(sstk_from_zermelo(&nav));
        let x0 = [0.0, 0.1];
        let d = [0.6, 0.8];
        let tau = a.fermat().cost(0.0, &x0, &d).unwrap();
        let init = TrajectoryState {
            t: 0.0,
            x: x0.to_vec(),
            xdot: vec![d[0] / tau, d[1] / tau],
        };
        let p = IntegratorParams::new(1e-3, 1.0);
        let ta = integrate_pregeodesic(&a, &init, &p).unwrap();
        let tb = integrate_pregeodesic(&b, &init, &p).unwrap();
        let diff = linalg::norm(&[ta.end()[0] - tb.end()[0], ta.end()[1] - tb.end()[1]]);
        assert!(diff < 1e-10, "{diff}");
    }

    #[test]
    fn null_scale_keeps_branch() {
        let m = SpacetimeMetric::Sstk(sstk_from_zermelo(&NavigationData::euclidean_constant(&[2.0, 0.0])));
        // Lower-branch velocity (1, 0) slightly off the cone.
        let s = null_scale(&m, 0.0, &[0.0, 0.0], &[1.001, 0.0]).unwrap();
        assert!((s * 1.001 - 1.0).abs() < 1e-14);
        let s = null_scale(&m, 0.0, &[0.0, 0.0], &[3.0003, 0.0]).unwrap();
        assert!((s * 3.0003 - 3.0).abs() < 1e-13);
    }

    #[test]
    fn isotropic_orthogonal_direction_is_normal() {
        let m = lf(FinslerMetricSpec::isotropic(2, 1.5));
        let dirs = orthogonal_directions(&m, 0.0, &[1.0, 0.0], &[0.0, 1.0], &[1.0, 0.0], OrthoMethod::Auto).unwrap();
        let out = select_side(&dirs, Side::Outward, 0.0).unwrap();
        assert!((out.xdot[0] - 1.5).abs() < 1e-12 && out.xdot[1].abs() < 1e-12);
        let inw = select_side(&dirs, Side::Inward, 0.0).unwrap();
        assert!((inw.xdot[0] + 1.5).abs() < 1e-12);
    }

    #[test]
    fn closed_form_matches_root_finding() {
        let nav = NavigationData::new(
            SymField::constant(&[&[1.3, 0.2], &[0.2, 0.8]]),
            VectorField::constant(&[0.4, -0.3]),
        )
        .unwrap();
        let m = SpacetimeMetric::Sstk(sstk_from_zermelo(&nav));
        let e = [0.6, 0.8];
        let n = [0.8, -0.6];
        let cf = orthogonal_directions(&m, 0.0, &[0.0, 0.0], &e, &n, OrthoMethod::ClosedForm).unwrap();
        let rf = orthogonal_directions(&m, 0.0, &[0.0, 0.0], &e, &n, OrthoMethod::RootFind).unwrap();
        assert_eq!(rf.len(), 2);
        for side in [Side::Outward, Side::Inward] {
            let a = select_side(&cf, side, 0.0).unwrap();
            let b = select_side(&rf, side, 0.0).unwrap();
            assert!((a.xdot[0] - b.xdot[0]).abs() < 1e-10 && (a.xdot[1] - b.xdot[1]).abs() < 1e-10);
        }
    }

    #[test]
    fn strong_wind_orthogonal_pair_lies_downwind() {
        let m = SpacetimeMetric::Sstk(sstk_from_zermelo(&NavigationData::euclidean_constant(&[2.0, 0.0])));
        let dirs = orthogonal_directions(&m, 0.0, &[0.0, 0.0], &[0.0, 1.0], &[1.0, 0.0], OrthoMethod::Auto).unwrap();
        let out = select_side(&dirs, Side::Outward, 0.0).unwrap();
        let inw = select_side(&dirs, Side::Inward, 0.0).unwrap();
        assert!((out.xdot[0] - 3.0).abs() < 1e-14 && out.branch == Branch::Upper);
        assert!((inw.xdot[0] - 1.0).abs() < 1e-14 && inw.branch == Branch::Lower);
        // The Lorentz-Finsler form only has the upper sheet.
        let lfm = lf(FinslerMetricSpec::zermelo(NavigationData::euclidean_constant(&[2.0, 0.0])));
        let dirs = orthogonal_directions(&lfm, 0.0, &[0.0, 0.0], &[0.0, 1.0], &[1.0, 0.0], OrthoMethod::Auto).unwrap();
        assert!(matches!(select_side(&dirs, Side::Inward, 0.3), Err(Error::NoSolution { .. })));
    }

    #[test]
    fn finsler_geodesic_matches_spacetime_projection() {
        let nav = shear(0.2);
        let spec = FinslerMetricSpec::zermelo(nav);
        let st = lf(spec.clone());
        let x0 = [0.0, -0.2];
        let d = [0.8, 0.6];
        let tau = spec.cost(0.0, &x0, &d).unwrap();
        let v0 = vec![d[0] / tau, d[1] / tau];
        let p = IntegratorParams::new(1e-3, 1.0);
        let a = integrate_finsler_geodesic(&spec, &x0, &v0, &p).unwrap();
        let b = integrate_pregeodesic(
            &st,
            &TrajectoryState {
                t: 0.0,
                x: x0.to_vec(),
                xdot: v0,
            },
            &p,
        )
        .unwrap();
        let diff = linalg::norm(&[a.end()[0] - b.end()[0], a.end()[1] - b.end()[1]]);
        assert!(diff < 1e-6, "{diff}");
    }

    #[test]
    fn conservation_of_exact_line_is_zero() {
        let m = lf(FinslerMetricSpec::zermelo(NavigationData::euclidean_constant(&[0.5, 0.0])));
        let init = TrajectoryState {
            t: 0.0,
            x: vec![0.0, 0.0],
            xdot: vec![1.5, 0.0],
        };
        let mut p = IntegratorParams::new(1e-2, 1.0);
        p.renormalize_null = false;
        let tr = integrate_pregeodesic(&m, &init, &p).unwrap();
        let rep = conservation_report(&tr, &m).unwrap();
        assert!(rep.max_abs_g < 1e-14);
        assert_eq!(rep.series.len(), tr.len());
    }

    #[test]
    fn time_grid_lands_on_horizon() {
        let g = IntegratorParams::new(0.3, 1.0).time_grid(0.0);
        assert_eq!(g.len(), 5);
        assert_eq!(*g.last().unwrap(), 1.0);
        assert_eq!(IntegratorParams::new(1e-3, 1.0).time_grid(0.0).len(), 1001);
    }
}
