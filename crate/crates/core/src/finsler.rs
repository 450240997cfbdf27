//! Finsler metrics: the Riemannian / Randers / Zermelo / Kropina / Fermat
//! catalogue, their conic domains and fundamental tensors.
//!
//! Every wind-type metric (Zermelo data, Kropina, projected SSTK) reduces
//! locally to the same algebraic form
//!
//! ```text
//! F(v) = a(v,v) / ( sqrt(lam a(v,v) + b(v)^2) + b(v) )        upper branch
//! F(v) = a(v,v) / ( b(v) - sqrt(lam a(v,v) + b(v)^2) )        lower branch
//! ```
//!
//! with `a` positive definite, `b` a one-form and `lam` a scalar of any sign.
//! For navigation data `(h, W)`: `a = h`, `b = h(W, .)`, `lam = 1 - h(W, W)`.
//! The quotient form stays finite through critical wind (`lam = 0`, Kropina).

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::field::{Bounds, FieldScalar, ScalarField, SymField, VectorField, MAX_DIM};
use crate::jet::{Jet, Real};
use crate::linalg::{self, Mat3, Vec3};
use crate::spacetime::SstkMetric;

/// Tolerance band on the normalized discriminant `lam + b(v)^2` (with
/// `a(v,v) = 1`) inside which a direction counts as boundary.
pub const DOMAIN_TOLERANCE: f64 = 1e-10;

/// Which root of the wind quadratic to evaluate: `Z` (fastest) or `Z_l`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Branch {
    #[default]
    Upper,
    Lower,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DomainClass {
    Interior,
    Boundary,
    Outside,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WindRegime {
    Mild,
    Critical,
    Strong,
}

impl WindRegime {
    pub fn classify(lambda: f64) -> Self {
        if lambda > 0.0 {
            WindRegime::Mild
        } else if lambda == 0.0 {
            WindRegime::Critical
        } else {
            WindRegime::Strong
        }
    }
}

/// Zermelo navigation data `(h, W)` as fields.
#[derive(Debug, Clone)]
pub struct NavigationData {
    pub h: SymField,
    pub wind: VectorField,
}

impl NavigationData {
    pub fn new(h: SymField, wind: VectorField) -> Result<Self> {
        if h.dim() != wind.dim() {
            return Err(Error::InvalidInput(format!(
                "metric has dimension {} but wind has {} components",
                h.dim(),
                wind.dim()
            )));
        }
        Ok(NavigationData { h, wind })
    }

    /// Euclidean engine metric with a constant wind.
    pub fn euclidean_constant(wind: &[f64]) -> Self {
        NavigationData {
            h: SymField::identity(wind.len()),
            wind: VectorField::constant(wind),
        }
    }

    pub fn dim(&self) -> usize {
        self.h.dim()
    }

    pub fn at(&self, t: f64, x: &[f64]) -> Navigation {
        let n = self.dim();
        let h: Mat3<f64> = self.h.at(t, x);
        let w: Vec3<f64> = self.wind.at(t, x);
        Navigation {
            h: DMatrix::from_fn(n, n, |i, j| h[i][j]),
            wind: DVector::from_fn(n, |i, _| w[i]),
        }
    }

    pub fn lambda(&self, t: f64, x: &[f64]) -> f64 {
        self.at(t, x).lambda()
    }

    pub fn regime(&self, t: f64, x: &[f64]) -> WindRegime {
        WindRegime::classify(self.lambda(t, x))
    }
}

/// Navigation data frozen at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct Navigation {
    pub h: DMatrix<f64>,
    pub wind: DVector<f64>,
}

impl Navigation {
    pub fn lambda(&self) -> f64 {
        1.0 - (&self.h * &self.wind).dot(&self.wind)
    }
}

/// Randers data `F(v) = sqrt(h(v,v)) + omega(v)` frozen at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct RandersCoefficients {
    pub h: DMatrix<f64>,
    pub omega: DVector<f64>,
}

impl RandersCoefficients {
    /// `|omega|` measured with the dual of `h`.
    pub fn omega_norm(&self) -> Option<f64> {
        let inv = self.h.clone().cholesky()?.inverse();
        Some((&inv * &self.omega).dot(&self.omega).max(0.0).sqrt())
    }

    pub fn eval(&self, v: &[f64]) -> f64 {
        let v = DVector::from_column_slice(v);
        (&self.h * &v).dot(&v).sqrt() + self.omega.dot(&v)
    }
}

/// Zermelo data to Randers coefficients at a mild-wind point:
/// `h~ = h/lam + (hW)(hW)^T/lam^2`, `omega~ = -hW/lam`.
pub fn randers_from_zermelo(nav: &Navigation) -> Result<RandersCoefficients> {
    let lambda = nav.lambda();
    if lambda <= 0.0 {
        return Err(Error::NotMild { lambda });
    }
    let hw = &nav.h * &nav.wind;
    let h = &nav.h / lambda + (&hw * hw.transpose()) / (lambda * lambda);
    Ok(RandersCoefficients {
        h,
        omega: -hw / lambda,
    })
}

/// Inverse of [`randers_from_zermelo`]: with `eps = 1 - |omega~|^2`,
/// `h = eps (h~ - omega~ omega~^T)` and `W = -h~^{-1} omega~ / eps`.
pub fn zermelo_from_randers(rc: &RandersCoefficients) -> Result<Navigation> {
    let chol = rc
        .h
        .clone()
        .cholesky()
        .ok_or_else(|| Error::DegenerateMetric("Randers quadratic form is not positive definite".into()))?;
    let sharp = chol.solve(&rc.omega);
    let norm2 = sharp.dot(&rc.omega);
    if !(norm2 < 1.0 - 1e-12) {
        return Err(Error::NotRanders {
            norm: norm2.max(0.0).sqrt(),
        });
    }
    let eps = 1.0 - norm2;
    let h = (&rc.h - &rc.omega * rc.omega.transpose()) * eps;
    Ok(Navigation {
        h,
        wind: -sharp / eps,
    })
}

type CustomNorm = dyn Fn(f64, &[f64], &[f64]) -> f64 + Send + Sync;

/// A user-supplied Finsler function `F(t, x, v)`; non-finite or
/// non-positive values mark directions outside the domain.
#[derive(Clone)]
pub struct CustomFinsler {
    pub dim: usize,
    pub time_dependent: bool,
    norm: Arc<CustomNorm>,
}

impl CustomFinsler {
    pub fn new(
        dim: usize,
        time_dependent: bool,
        norm: impl Fn(f64, &[f64], &[f64]) -> f64 + Send + Sync + 'static,
    ) -> Self {
        CustomFinsler {
            dim,
            time_dependent,
            norm: Arc::new(norm),
        }
    }

    fn eval(&self, t: f64, x: &[f64], v: &[f64]) -> f64 {
        (self.norm)(t, x, v)
    }
}

impl fmt::Debug for CustomFinsler {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CustomFinsler(dim {})", self.dim)
    }
}

#[derive(Debug, Clone)]
pub enum MetricKind {
    Riemannian { h: SymField },
    Randers { h: SymField, omega: VectorField },
    Zermelo(NavigationData),
    /// `F(v) = -h(v,v) / (2 omega(v))` on the half-space `omega(v) < 0`.
    Kropina { h: SymField, omega: VectorField },
    /// Fermat metric of an SSTK spacetime.
    SstkProjected(SstkMetric),
    Custom(CustomFinsler),
}

/// A possibly conic, possibly time-dependent Finsler metric.
#[derive(Debug, Clone)]
pub struct FinslerMetricSpec {
    kind: MetricKind,
    dim: usize,
    reversed: bool,
}

/// Pointwise algebraic data of a metric.
pub(crate) enum LocalForm<S> {
    Quadratic { a: Mat3<S> },
    Randers { a: Mat3<S>, b: Vec3<S> },
    Wind { a: Mat3<S>, b: Vec3<S>, lam: S },
}

/// `F`, its gradient and Hessian in `v`.
pub(crate) struct Derivs<S> {
    pub f: S,
    pub grad: Vec3<S>,
    pub hess: Mat3<S>,
}

impl<S: Real> Derivs<S> {
    /// `g_ij = F F_ij + F_i F_j`.
    pub fn tensor(&self, n: usize) -> Mat3<S> {
        let mut g = [[S::cst(0.0); 3]; 3];
        for i in 0..n {
            for j in 0..n {
                g[i][j] = self.f * self.hess[i][j] + self.grad[i] * self.grad[j];
            }
        }
        g
    }
}

fn check_dim(dim: usize) -> Result<()> {
    if dim == 0 || dim > MAX_DIM {
        return Err(Error::InvalidInput(format!("dimension {dim} not in 1..={MAX_DIM}")));
    }
    Ok(())
}

fn check_positive_definite(a: &Mat3<f64>, n: usize, what: &str) -> Result<()> {
    if linalg::cholesky(a, n).is_none() {
        return Err(Error::DegenerateMetric(format!("{what} is not positive definite")));
    }
    Ok(())
}

fn check_vector(v: &[f64], n: usize) -> Result<()> {
    if v.len() != n {
        return Err(Error::InvalidInput(format!("expected a {n}-vector, got {}", v.len())));
    }
    if v.iter().all(|c| *c == 0.0) {
        return Err(Error::InvalidInput("zero tangent vector".into()));
    }
    if v.iter().any(|c| !c.is_finite()) {
        return Err(Error::InvalidInput("non-finite tangent vector".into()));
    }
    Ok(())
}

impl FinslerMetricSpec {
    pub fn new(kind: MetricKind) -> Result<Self> {
        let dim = match &kind {
            MetricKind::Riemannian { h } => h.dim(),
            MetricKind::Randers { h, omega } | MetricKind::Kropina { h, omega } => {
                if omega.dim() != h.dim() {
                    return Err(Error::InvalidInput("one-form and metric dimensions differ".into()));
                }
                h.dim()
            }
            MetricKind::Zermelo(nav) => {
                if nav.wind.dim() != nav.h.dim() {
                    return Err(Error::InvalidInput("wind and metric dimensions differ".into()));
                }
                nav.dim()
            }
            MetricKind::SstkProjected(s) => s.dim(),
            MetricKind::Custom(c) => c.dim,
        };
        check_dim(dim)?;
        Ok(FinslerMetricSpec {
            kind,
            dim,
            reversed: false,
        })
    }

    pub fn riemannian(h: SymField) -> Self {
        FinslerMetricSpec::new(MetricKind::Riemannian { h }).expect("valid Riemannian metric")
    }

    pub fn euclidean(dim: usize) -> Self {
        FinslerMetricSpec::riemannian(SymField::identity(dim))
    }

    /// Isotropic medium with propagation speed `c` (so `F = |v| / c`).
    pub fn isotropic(dim: usize, speed: f64) -> Self {
        FinslerMetricSpec::riemannian(SymField::conformal(dim, ScalarField::Const(1.0 / (speed * speed))))
    }

    pub fn zermelo(nav: NavigationData) -> Self {
        FinslerMetricSpec::new(MetricKind::Zermelo(nav)).expect("valid navigation data")
    }

    pub fn randers(h: SymField, omega: VectorField) -> Result<Self> {
        FinslerMetricSpec::new(MetricKind::Randers { h, omega })
    }

    pub fn kropina(h: SymField, omega: VectorField) -> Result<Self> {
        FinslerMetricSpec::new(MetricKind::Kropina { h, omega })
    }

    pub fn custom(c: CustomFinsler) -> Result<Self> {
        FinslerMetricSpec::new(MetricKind::Custom(c))
    }

    pub fn kind(&self) -> &MetricKind {
        &self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_reversed(&self) -> bool {
        self.reversed
    }

    /// The reverse metric `F~(v) = F(-v)`.
    pub fn reversed(&self) -> Self {
        FinslerMetricSpec {
            kind: self.kind.clone(),
            dim: self.dim,
            reversed: !self.reversed,
        }
    }

    pub fn is_time_dependent(&self) -> bool {
        match &self.kind {
            MetricKind::Riemannian { h } => h.is_time_dependent(),
            MetricKind::Randers { h, omega } | MetricKind::Kropina { h, omega } => {
                h.is_time_dependent() || omega.is_time_dependent()
            }
            MetricKind::Zermelo(nav) => nav.h.is_time_dependent() || nav.wind.is_time_dependent(),
            MetricKind::SstkProjected(s) => s.is_time_dependent(),
            MetricKind::Custom(c) => c.time_dependent,
        }
    }

    /// True when neither position nor time enters the metric.
    pub fn is_homogeneous(&self) -> bool {
        match &self.kind {
            MetricKind::Riemannian { h } => h.is_constant(),
            MetricKind::Randers { h, omega } | MetricKind::Kropina { h, omega } => {
                h.is_constant() && omega.is_constant()
            }
            MetricKind::Zermelo(nav) => nav.h.is_constant() && nav.wind.is_constant(),
            MetricKind::SstkProjected(s) => s.is_constant(),
            MetricKind::Custom(_) => false,
        }
    }

    pub fn bounds(&self) -> Bounds {
        match &self.kind {
            MetricKind::Riemannian { h } => h.bounds(),
            MetricKind::Randers { h, omega } | MetricKind::Kropina { h, omega } => {
                h.bounds().intersect(&omega.bounds())
            }
            MetricKind::Zermelo(nav) => nav.h.bounds().intersect(&nav.wind.bounds()),
            MetricKind::SstkProjected(s) => s.bounds(),
            MetricKind::Custom(_) => Bounds::unbounded(),
        }
    }

    /// Navigation data of a Zermelo-kind metric (wind already reversed when
    /// the metric is).
    pub fn navigation_at(&self, t: f64, x: &[f64]) -> Option<Navigation> {
        match &self.kind {
            MetricKind::Zermelo(nav) => {
                let mut n = nav.at(t, x);
                if self.reversed {
                    n.wind = -n.wind;
                }
                Some(n)
            }
            _ => None,
        }
    }

    pub(crate) fn local<S: FieldScalar>(&self, t: f64, x: &[f64]) -> Result<Option<LocalForm<S>>> {
        let n = self.dim;
        let flip = |mut b: Vec3<S>| {
            if self.reversed {
                for c in b.iter_mut() {
                    *c = -*c;
                }
            }
            b
        };
        let form = match &self.kind {
            MetricKind::Riemannian { h } => {
                let a: Mat3<S> = h.at(t, x);
                check_positive_definite(&linalg::re_mat(&a), n, "metric")?;
                LocalForm::Quadratic { a }
            }
            MetricKind::Randers { h, omega } => {
                let a: Mat3<S> = h.at(t, x);
                let ar = linalg::re_mat(&a);
                check_positive_definite(&ar, n, "Randers quadratic form")?;
                let b: Vec3<S> = omega.at(t, x);
                let br: Vec<f64> = b.iter().take(n).map(Real::re).collect();
                let sharp = linalg::solve3(&ar, &br, n).unwrap_or([0.0; 3]);
                let norm2: f64 = (0..n).map(|i| sharp[i] * br[i]).sum();
                if norm2 >= 1.0 {
                    return Err(Error::NotRanders { norm: norm2.sqrt() });
                }
                LocalForm::Randers { a, b: flip(b) }
            }
            MetricKind::Zermelo(nav) => {
                let a: Mat3<S> = nav.h.at(t, x);
                check_positive_definite(&linalg::re_mat(&a), n, "navigation metric")?;
                let w: Vec3<S> = nav.wind.at(t, x);
                let mut b = [S::cst(0.0); 3];
                for i in 0..n {
                    for j in 0..n {
                        b[i] = b[i] + a[i][j] * w[j];
                    }
                }
                let mut hww = S::cst(0.0);
                for i in 0..n {
                    hww = hww + b[i] * w[i];
                }
                LocalForm::Wind {
                    a,
                    b: flip(b),
                    lam: S::cst(1.0) - hww,
                }
            }
            MetricKind::Kropina { h, omega } => {
                let a: Mat3<S> = h.at(t, x);
                check_positive_definite(&linalg::re_mat(&a), n, "Kropina metric")?;
                let w: Vec3<S> = omega.at(t, x);
                let mut b = [S::cst(0.0); 3];
                for i in 0..n {
                    b[i] = -w[i];
                }
                LocalForm::Wind {
                    a,
                    b: flip(b),
                    lam: S::cst(0.0),
                }
            }
            MetricKind::SstkProjected(s) => {
                let l = s.local::<S>(t, x)?;
                let mut b = [S::cst(0.0); 3];
                for i in 0..n {
                    b[i] = -l.omega[i];
                }
                LocalForm::Wind {
                    a: l.g0,
                    b: flip(b),
                    lam: l.lambda,
                }
            }
            MetricKind::Custom(_) => return Ok(None),
        };
        Ok(Some(form))
    }

    fn custom_value(&self, c: &CustomFinsler, t: f64, x: &[f64], v: &[f64]) -> Result<f64> {
        let f = if self.reversed {
            let w: Vec<f64> = v.iter().map(|c| -c).collect();
            c.eval(t, x, &w)
        } else {
            c.eval(t, x, v)
        };
        if f.is_finite() && f > 0.0 {
            Ok(f)
        } else {
            Err(Error::DomainViolation(format!("custom metric undefined at v = {v:?}")))
        }
    }

    /// Classifies `v` against the conic domain `A` (upper branch) or `A_l`.
    pub fn domain(&self, t: f64, x: &[f64], v: &[f64], branch: Branch) -> Result<DomainClass> {
        check_vector(v, self.dim)?;
        match self.local::<f64>(t, x)? {
            Some(form) => Ok(classify(&form, v, self.dim, branch)),
            None => {
                if branch == Branch::Lower {
                    return Ok(DomainClass::Outside);
                }
                let MetricKind::Custom(c) = &self.kind else { unreachable!() };
                Ok(match self.custom_value(c, t, x, v) {
                    Ok(_) => DomainClass::Interior,
                    Err(_) => DomainClass::Outside,
                })
            }
        }
    }

    /// Time cost of `v`: `Z(v)` or `Z_l(v)`. Directions on the boundary of the
    /// domain get the continuous extension.
    pub fn eval(&self, t: f64, x: &[f64], v: &[f64], branch: Branch) -> Result<f64> {
        check_vector(v, self.dim)?;
        match self.local::<f64>(t, x)? {
            Some(form) => {
                match classify(&form, v, self.dim, branch) {
                    DomainClass::Outside => {
                        return Err(Error::DomainViolation(format!(
                            "v = {v:?} outside the {} domain",
                            branch_name(branch)
                        )))
                    }
                    DomainClass::Boundary | DomainClass::Interior => {}
                }
                Ok(value(&form, v, self.dim, branch).re())
            }
            None => {
                if branch == Branch::Lower {
                    return Err(Error::DomainViolation("custom metrics have no lower branch".into()));
                }
                let MetricKind::Custom(c) = &self.kind else { unreachable!() };
                self.custom_value(c, t, x, v)
            }
        }
    }

    /// Upper-branch cost, the common case.
    pub fn cost(&self, t: f64, x: &[f64], v: &[f64]) -> Result<f64> {
        self.eval(t, x, v, Branch::Upper)
    }

    pub(crate) fn derivs<S: FieldScalar>(
        &self,
        t: f64,
        x: &[f64],
        v: &[f64],
        branch: Branch,
    ) -> Result<Derivs<S>> {
        let form = self
            .local::<S>(t, x)?
            .ok_or_else(|| Error::InvalidInput("custom metric has no closed form".into()))?;
        match classify(&form, v, self.dim, branch) {
            DomainClass::Interior => Ok(derivs(&form, v, self.dim, branch)),
            DomainClass::Boundary => Err(Error::DomainViolation(
                "fundamental tensor does not extend to the boundary of the domain".into(),
            )),
            DomainClass::Outside => Err(Error::DomainViolation(format!("v = {v:?} outside the domain"))),
        }
    }

    /// Fundamental tensor `g_v` as fixed-size arrays, generic over jets.
    pub(crate) fn tensor<S: FieldScalar>(&self, t: f64, x: &[f64], v: &[f64], branch: Branch) -> Result<Mat3<S>> {
        check_vector(v, self.dim)?;
        if let MetricKind::Custom(c) = &self.kind {
            if branch == Branch::Lower {
                return Err(Error::DomainViolation("custom metrics have no lower branch".into()));
            }
            return custom_tensor_jet::<S>(self, c, t, x, v);
        }
        Ok(self.derivs::<S>(t, x, v, branch)?.tensor(self.dim))
    }

    /// The fundamental tensor `g_v(u, w) = 1/2 d^2/ds dr F(v + s u + r w)^2`.
    pub fn fundamental_tensor(&self, t: f64, x: &[f64], v: &[f64], branch: Branch) -> Result<DMatrix<f64>> {
        let g: Mat3<f64> = self.tensor(t, x, v, branch)?;
        let n = self.dim;
        Ok(DMatrix::from_fn(n, n, |i, j| g[i][j]))
    }

    /// `n` points of the indicatrix `{F = 1}` at `(t, x)`. For wind metrics
    /// this is the whole translated sphere, so under strong wind some points
    /// lie on the lower branch (`Z_l = 1`).
    pub fn indicatrix_sample(&self, t: f64, x: &[f64], count: usize) -> Result<Vec<Vec<f64>>> {
        if count < 3 {
            return Err(Error::InvalidInput("indicatrix sample needs at least 3 points".into()));
        }
        let n = self.dim;
        let dirs = sphere_directions(n, count);
        if let Some(LocalForm::Wind { a, b, lam }) = self.local::<f64>(t, x)? {
            // a(v,v) - 2 b(v) - lam = 0: sphere centred at a^{-1} b.
            let center = linalg::solve3(&a, &b[..n], n)
                .ok_or_else(|| Error::DegenerateMetric("singular metric".into()))?;
            let c2: f64 = (0..n).map(|i| center[i] * b[i]).sum();
            let radius = (lam + c2).max(0.0).sqrt();
            let l = linalg::cholesky(&a, n)
                .ok_or_else(|| Error::DegenerateMetric("metric is not positive definite".into()))?;
            return Ok(dirs
                .iter()
                .map(|d| {
                    // u = L^{-T} d has a(u, u) = 1.
                    let mut u = [0.0; 3];
                    for i in (0..n).rev() {
                        let mut s = d[i];
                        for k in i + 1..n {
                            s -= l[k][i] * u[k];
                        }
                        u[i] = s / l[i][i];
                    }
                    (0..n).map(|i| center[i] + radius * u[i]).collect()
                })
                .collect());
        }
        dirs.iter()
            .map(|d| {
                let f = self.eval(t, x, d, Branch::Upper)?;
                Ok(d.iter().map(|c| c / f).collect())
            })
            .collect()
    }

    /// Length (elapsed time) of a sampled curve.
    pub fn path_length(&self, curve: &SampledCurve, time: TimeMode) -> Result<f64> {
        curve.validate(self.dim)?;
        // 3-point Gauss-Legendre on [0, 1].
        const NODES: [f64; 3] = [0.112_701_665_379_258_3, 0.5, 0.887_298_334_620_741_7];
        const WEIGHTS: [f64; 3] = [5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0];
        let n = self.dim;
        let mut total = 0.0;
        let mut x = vec![0.0; n];
        let mut vel = vec![0.0; n];
        for k in 0..curve.len() - 1 {
            let (s0, s1) = (curve.params[k], curve.params[k + 1]);
            let ds = s1 - s0;
            if ds <= 0.0 {
                return Err(Error::InvalidInput("curve parameters must increase".into()));
            }
            let (p0, p1) = (&curve.points[k], &curve.points[k + 1]);
            for (node, w) in NODES.iter().zip(WEIGHTS) {
                match &curve.velocities {
                    None => {
                        for i in 0..n {
                            x[i] = p0[i] + node * (p1[i] - p0[i]);
                            vel[i] = (p1[i] - p0[i]) / ds;
                        }
                    }
                    Some(vs) => hermite(p0, &vs[k], p1, &vs[k + 1], ds, *node, &mut x, &mut vel),
                }
                if vel.iter().all(|c| *c == 0.0) {
                    continue;
                }
                let t = match time {
                    TimeMode::Frozen(t) => t,
                    TimeMode::Parameter => s0 + node * ds,
                };
                total += w * ds * self.eval(t, &x, &vel, Branch::Upper)?;
            }
        }
        Ok(total)
    }
}

fn branch_name(b: Branch) -> &'static str {
    match b {
        Branch::Upper => "Z",
        Branch::Lower => "Z_l",
    }
}

/// Cubic Hermite position and velocity at fraction `s` of a step of length `h`.
#[allow(clippy::too_many_arguments)]
pub(crate) fn hermite(p0: &[f64], v0: &[f64], p1: &[f64], v1: &[f64], h: f64, s: f64, x: &mut [f64], v: &mut [f64]) {
    let (s2, s3) = (s * s, s * s * s);
    let (h00, h10, h01, h11) = (2.0 * s3 - 3.0 * s2 + 1.0, s3 - 2.0 * s2 + s, -2.0 * s3 + 3.0 * s2, s3 - s2);
    let (d00, d10, d01, d11) = (6.0 * s2 - 6.0 * s, 3.0 * s2 - 4.0 * s + 1.0, -6.0 * s2 + 6.0 * s, 3.0 * s2 - 2.0 * s);
    for i in 0..x.len() {
        x[i] = h00 * p0[i] + h10 * h * v0[i] + h01 * p1[i] + h11 * h * v1[i];
        v[i] = (d00 * p0[i] + d01 * p1[i]) / h + d10 * v0[i] + d11 * v1[i];
    }
}

/// Directions spread over the unit sphere of `R^n`.
fn sphere_directions(n: usize, count: usize) -> Vec<Vec<f64>> {
    match n {
        1 => (0..count).map(|k| vec![if k % 2 == 0 { 1.0 } else { -1.0 }]).collect(),
        2 => (0..count)
            .map(|k| {
                let th = std::f64::consts::TAU * k as f64 / count as f64;
                vec![th.cos(), th.sin()]
            })
            .collect(),
        _ => {
            // Fibonacci lattice.
            let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
            (0..count)
                .map(|k| {
                    let z = 1.0 - 2.0 * (k as f64 + 0.5) / count as f64;
                    let r = (1.0 - z * z).sqrt();
                    let th = golden * k as f64;
                    vec![r * th.cos(), r * th.sin(), z]
                })
                .collect()
        }
    }
}

pub(crate) fn classify<S: Real>(form: &LocalForm<S>, v: &[f64], n: usize, branch: Branch) -> DomainClass {
    let LocalForm::Wind { a, b, lam } = form else {
        return if branch == Branch::Upper {
            DomainClass::Interior
        } else {
            DomainClass::Outside
        };
    };
    let lam = lam.re();
    if branch == Branch::Upper && lam > 0.0 {
        return DomainClass::Interior;
    }
    if branch == Branch::Lower && lam >= 0.0 {
        return DomainClass::Outside;
    }
    let av = linalg::quad(a, v, n).re();
    let beta = linalg::pair(b, v, n).re() / av.sqrt();
    let disc = lam + beta * beta;
    if disc < -DOMAIN_TOLERANCE {
        DomainClass::Outside
    } else if disc <= DOMAIN_TOLERANCE {
        if beta >= -DOMAIN_TOLERANCE.sqrt() {
            DomainClass::Boundary
        } else {
            DomainClass::Outside
        }
    } else if beta > 0.0 {
        DomainClass::Interior
    } else {
        DomainClass::Outside
    }
}

fn value<S: Real>(form: &LocalForm<S>, v: &[f64], n: usize, branch: Branch) -> S {
    match form {
        LocalForm::Quadratic { a } => linalg::quad(a, v, n).sqrt(),
        LocalForm::Randers { a, b } => linalg::quad(a, v, n).sqrt() + linalg::pair(b, v, n),
        LocalForm::Wind { a, b, lam } => {
            let num = linalg::quad(a, v, n);
            let beta = linalg::pair(b, v, n);
            let d = *lam * num + beta * beta;
            let r = if d.re() > 0.0 { d.sqrt() } else { S::cst(0.0) };
            match branch {
                Branch::Upper => num / (r + beta),
                Branch::Lower => num / (beta - r),
            }
        }
    }
}

fn derivs<S: Real>(form: &LocalForm<S>, v: &[f64], n: usize, branch: Branch) -> Derivs<S> {
    let zero = S::cst(0.0);
    let mut grad = [zero; 3];
    let mut hess = [[zero; 3]; 3];
    match form {
        LocalForm::Quadratic { a } | LocalForm::Randers { a, .. } => {
            let av = linalg::matvec(a, v, n);
            let alpha = linalg::quad(a, v, n).sqrt();
            let mut ai = [zero; 3];
            for i in 0..n {
                ai[i] = av[i] / alpha;
            }
            for i in 0..n {
                for j in 0..n {
                    hess[i][j] = (a[i][j] - ai[i] * ai[j]) / alpha;
                }
            }
            let mut f = alpha;
            grad[..n].copy_from_slice(&ai[..n]);
            if let LocalForm::Randers { b, .. } = form {
                f = f + linalg::pair(b, v, n);
                for i in 0..n {
                    grad[i] = grad[i] + b[i];
                }
            }
            Derivs { f, grad, hess }
        }
        LocalForm::Wind { a, b, lam } => {
            let av = linalg::matvec(a, v, n);
            let num = linalg::quad(a, v, n);
            let beta = linalg::pair(b, v, n);
            let d = *lam * num + beta * beta;
            let r = d.sqrt();
            let two = S::cst(2.0);
            let mut ni = [zero; 3];
            let mut ri = [zero; 3];
            let mut mi = [zero; 3];
            for i in 0..n {
                ni[i] = two * av[i];
                let di = *lam * ni[i] + two * beta * b[i];
                ri[i] = di / (two * r);
            }
            let sign = match branch {
                Branch::Upper => 1.0,
                Branch::Lower => -1.0,
            };
            let m = match branch {
                Branch::Upper => r + beta,
                Branch::Lower => beta - r,
            };
            for i in 0..n {
                mi[i] = b[i] + ri[i].scale(sign);
            }
            let f = num / m;
            for i in 0..n {
                grad[i] = (ni[i] - f * mi[i]) / m;
            }
            for i in 0..n {
                for j in 0..n {
                    let dij = two * (*lam * a[i][j] + b[i] * b[j]);
                    let rij = (dij - two * ri[i] * ri[j]) / (two * r);
                    let mij = rij.scale(sign);
                    hess[i][j] = (two * a[i][j] - grad[i] * mi[j] - grad[j] * mi[i] - f * mij) / m;
                }
            }
            Derivs { f, grad, hess }
        }
    }
}

/// Second differences of `F^2 / 2` with step `1e-4 |v|`, two-level
/// Richardson extrapolation.
pub(crate) fn fd_tensor(f: &dyn Fn(&[f64]) -> Result<f64>, v: &[f64]) -> Result<Mat3<f64>> {
    let n = v.len();
    let scale = linalg::norm(v);
    let q = |w: &[f64]| -> Result<f64> { Ok(0.5 * f(w)?.powi(2)) };
    let hessian = |h: f64| -> Result<Mat3<f64>> {
        let mut g = [[0.0; 3]; 3];
        let mut w = [0.0; 3];
        for i in 0..n {
            for j in i..n {
                let mut acc = 0.0;
                for (si, sj, sign) in [(1.0, 1.0, 1.0), (1.0, -1.0, -1.0), (-1.0, 1.0, -1.0), (-1.0, -1.0, 1.0)] {
                    w[..n].copy_from_slice(v);
                    w[i] += si * h;
                    w[j] += sj * h;
                    acc += sign * q(&w[..n])?;
                }
                g[i][j] = acc / (4.0 * h * h);
                g[j][i] = g[i][j];
            }
        }
        Ok(g)
    };
    let h = 1e-4 * scale.max(1e-300);
    let coarse = hessian(2.0 * h)?;
    let fine = hessian(h)?;
    let mut g = [[0.0; 3]; 3];
    for i in 0..n {
        for j in 0..n {
            g[i][j] = (4.0 * fine[i][j] - coarse[i][j]) / 3.0;
        }
    }
    Ok(g)
}

fn custom_tensor_jet<S: FieldScalar>(
    spec: &FinslerMetricSpec,
    c: &CustomFinsler,
    t: f64,
    x: &[f64],
    v: &[f64],
) -> Result<Mat3<S>> {
    let at = |t: f64, x: &[f64]| fd_tensor(&|w| spec.custom_value(c, t, x, w), v);
    let g0 = at(t, x)?;
    let mut out = [[S::cst(0.0); 3]; 3];
    if !S::DIFFERENTIAL {
        for i in 0..3 {
            for j in 0..3 {
                out[i][j] = S::cst(g0[i][j]);
            }
        }
        return Ok(out);
    }
    let n = x.len();
    let h = 1e-3;
    let mut grads = [[[0.0; 4]; 3]; 3];
    let mut p = [0.0; 3];
    for k in 0..n {
        p[..n].copy_from_slice(x);
        let mut sample = |d: f64| -> Result<Mat3<f64>> {
            p[k] = x[k] + d;
            at(t, &p[..n])
        };
        let (a, b, cc, d) = (sample(2.0 * h)?, sample(h)?, sample(-h)?, sample(-2.0 * h)?);
        for i in 0..n {
            for j in 0..n {
                grads[i][j][k + 1] = (-a[i][j] + 8.0 * b[i][j] - 8.0 * cc[i][j] + d[i][j]) / (12.0 * h);
            }
        }
    }
    if c.time_dependent {
        let ht = 1e-4;
        let (a, b) = (at(t + ht, x)?, at(t - ht, x)?);
        for i in 0..n {
            for j in 0..n {
                grads[i][j][0] = (a[i][j] - b[i][j]) / (2.0 * ht);
            }
        }
    }
    for i in 0..n {
        for j in 0..n {
            out[i][j] = S::from_jet(Jet::new(g0[i][j], grads[i][j]));
        }
    }
    Ok(out)
}

/// A curve sampled at increasing parameters, optionally with velocities
/// (then each piece is the cubic Hermite interpolant).
#[derive(Debug, Clone, PartialEq)]
pub struct SampledCurve {
    pub params: Vec<f64>,
    pub points: Vec<Vec<f64>>,
    pub velocities: Option<Vec<Vec<f64>>>,
}

impl SampledCurve {
    /// Polyline with parameters `0, 1, 2, ..`.
    pub fn polyline(points: Vec<Vec<f64>>) -> Self {
        SampledCurve {
            params: (0..points.len()).map(|k| k as f64).collect(),
            points,
            velocities: None,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    fn validate(&self, n: usize) -> Result<()> {
        if self.points.len() < 2 || self.params.len() != self.points.len() {
            return Err(Error::InvalidInput("curve needs >= 2 samples with matching parameters".into()));
        }
        if self.points.iter().any(|p| p.len() != n) {
            return Err(Error::InvalidInput(format!("curve points must have {n} coordinates")));
        }
        if let Some(v) = &self.velocities {
            if v.len() != self.points.len() || v.iter().any(|p| p.len() != n) {
                return Err(Error::InvalidInput("velocity samples do not match the curve".into()));
            }
        }
        Ok(())
    }
}

/// Which time the metric is evaluated at along a curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TimeMode {
    Frozen(f64),
    /// The curve parameter is the time.
    Parameter,
}
