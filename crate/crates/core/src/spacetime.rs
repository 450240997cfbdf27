//! Spacetime metrics on `R x M`: the Lorentz-Finsler `G = tau^2 - F_t(v)^2`
//! and the quadratic SSTK metric `G = Lam tau^2 - 2 omega(v) tau - g0(v, v)`.
//!
//! Sign convention: `G > 0` on future timelike vectors. Spacetime vectors are
//! slices `u = (tau, v1, .., vn)`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::field::{Bounds, FieldScalar, ScalarField, SymField, VectorField};
use crate::finsler::{
    classify, zermelo_from_randers, Branch, DomainClass, FinslerMetricSpec, LocalForm, MetricKind, Navigation,
    NavigationData, RandersCoefficients,
};
use crate::jet::{Jet, Real};
use crate::linalg::{self, Mat3, Mat4, Vec3, CAP};

/// Half-angle of the excluded cone around `d/dt` for non-quadratic `F`.
pub const GUARD_ANGLE: f64 = 1e-6;

/// Relative tolerance of the causal classification.
pub const NULL_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone)]
enum SstkSource {
    Fields {
        lambda: ScalarField,
        omega: VectorField,
        g0: SymField,
    },
    Zermelo(NavigationData),
}

/// The SSTK data `(Lam, omega, g0)`; stored either as explicit fields or as
/// the navigation data it was built from.
#[derive(Debug, Clone)]
pub struct SstkMetric {
    source: SstkSource,
    reversed: bool,
}

/// SSTK data at one spacetime point.
#[derive(Debug, Clone, PartialEq)]
pub struct SstkPoint {
    pub lambda: f64,
    pub omega: DVector<f64>,
    pub g0: DMatrix<f64>,
}

pub(crate) struct SstkLocal<S> {
    pub lambda: S,
    pub omega: Vec3<S>,
    pub g0: Mat3<S>,
}

impl SstkMetric {
    pub fn new(lambda: ScalarField, omega: VectorField, g0: SymField) -> Result<Self> {
        if omega.dim() != g0.dim() {
            return Err(Error::InvalidInput("omega and g0 dimensions differ".into()));
        }
        let m = SstkMetric {
            source: SstkSource::Fields { lambda, omega, g0 },
            reversed: false,
        };
        if m.is_constant() {
            let x = [0.0; 3];
            m.local::<f64>(0.0, &x[..m.dim()])?;
        }
        Ok(m)
    }

    pub fn dim(&self) -> usize {
        match &self.source {
            SstkSource::Fields { g0, .. } => g0.dim(),
            SstkSource::Zermelo(nav) => nav.dim(),
        }
    }

    /// The metric with `omega` negated (its Fermat metric is the reverse one).
    pub fn reversed(&self) -> Self {
        SstkMetric {
            source: self.source.clone(),
            reversed: !self.reversed,
        }
    }

    pub fn is_constant(&self) -> bool {
        match &self.source {
            SstkSource::Fields { lambda, omega, g0 } => lambda.is_constant() && omega.is_constant() && g0.is_constant(),
            SstkSource::Zermelo(nav) => nav.h.is_constant() && nav.wind.is_constant(),
        }
    }

    pub fn is_time_dependent(&self) -> bool {
        match &self.source {
            SstkSource::Fields { lambda, omega, g0 } => {
                lambda.is_time_dependent() || omega.is_time_dependent() || g0.is_time_dependent()
            }
            SstkSource::Zermelo(nav) => nav.h.is_time_dependent() || nav.wind.is_time_dependent(),
        }
    }

    pub fn bounds(&self) -> Bounds {
        match &self.source {
            SstkSource::Fields { lambda, omega, g0 } => lambda.bounds().intersect(&omega.bounds()).intersect(&g0.bounds()),
            SstkSource::Zermelo(nav) => nav.h.bounds().intersect(&nav.wind.bounds()),
        }
    }

    pub(crate) fn local<S: FieldScalar>(&self, t: f64, x: &[f64]) -> Result<SstkLocal<S>> {
        let n = self.dim();
        let mut local = match &self.source {
            SstkSource::Fields { lambda, omega, g0 } => SstkLocal {
                lambda: lambda.eval::<S>(t, x),
                omega: omega.at::<S>(t, x),
                g0: g0.at::<S>(t, x),
            },
            SstkSource::Zermelo(nav) => {
                let h: Mat3<S> = nav.h.at(t, x);
                let w: Vec3<S> = nav.wind.at(t, x);
                let mut omega = [S::cst(0.0); 3];
                let mut hww = S::cst(0.0);
                for i in 0..n {
                    for j in 0..n {
                        omega[i] = omega[i] - h[i][j] * w[j];
                    }
                    hww = hww - omega[i] * w[i];
                }
                SstkLocal {
                    lambda: S::cst(1.0) - hww,
                    omega,
                    g0: h,
                }
            }
        };
        if self.reversed {
            for c in local.omega.iter_mut() {
                *c = -*c;
            }
        }
        let g0 = linalg::re_mat(&local.g0);
        if linalg::cholesky(&g0, n).is_none() {
            return Err(Error::DegenerateMetric("g0 is not positive definite".into()));
        }
        let om: Vec<f64> = local.omega.iter().take(n).map(Real::re).collect();
        let sharp = linalg::solve3(&g0, &om, n).unwrap_or([0.0; 3]);
        let value = local.lambda.re() + (0..n).map(|i| sharp[i] * om[i]).sum::<f64>();
        if !(value > 0.0) {
            return Err(Error::SignatureViolation { value });
        }
        Ok(local)
    }

    pub fn at(&self, t: f64, x: &[f64]) -> Result<SstkPoint> {
        let n = self.dim();
        let l = self.local::<f64>(t, x)?;
        Ok(SstkPoint {
            lambda: l.lambda,
            omega: DVector::from_fn(n, |i, _| l.omega[i]),
            g0: DMatrix::from_fn(n, n, |i, j| l.g0[i][j]),
        })
    }

    /// Normalized navigation data with the same light cones:
    /// `h = g0 / (Lam + |omega|^2)`, `W = -g0^{-1} omega`.
    pub fn navigation_at(&self, t: f64, x: &[f64]) -> Result<Navigation> {
        let p = self.at(t, x)?;
        let sharp = p
            .g0
            .clone()
            .cholesky()
            .ok_or_else(|| Error::DegenerateMetric("g0 is not positive definite".into()))?
            .solve(&p.omega);
        let c = p.lambda + sharp.dot(&p.omega);
        Ok(Navigation {
            h: p.g0 / c,
            wind: -sharp,
        })
    }
}

/// `g0 = h`, `omega = -h(W, .)`, `Lam = 1 - h(W, W)`; valid for any wind.
pub fn sstk_from_zermelo(nav: &NavigationData) -> SstkMetric {
    SstkMetric {
        source: SstkSource::Zermelo(nav.clone()),
        reversed: false,
    }
}

/// The Fermat metric of an SSTK spacetime. Its upper branch is `Z`; where
/// `Lam < 0`, evaluating with [`Branch::Lower`] gives `Z_l`.
pub fn fermat_from_sstk(sstk: &SstkMetric) -> Result<FinslerMetricSpec> {
    if sstk.is_constant() {
        let x = [0.0; 3];
        sstk.local::<f64>(0.0, &x[..sstk.dim()])?;
    }
    FinslerMetricSpec::new(MetricKind::SstkProjected(sstk.clone()))
}

/// Normalized navigation data generating the same indicatrix as `spec` at a
/// point. Available for every closed-form kind.
pub fn navigation_of(spec: &FinslerMetricSpec, t: f64, x: &[f64]) -> Result<Navigation> {
    let n = spec.dim();
    let form = spec
        .local::<f64>(t, x)?
        .ok_or_else(|| Error::InvalidInput("custom metric has no navigation data".into()))?;
    let mat = |a: &Mat3<f64>| DMatrix::from_fn(n, n, |i, j| a[i][j]);
    let vec = |b: &Vec3<f64>| DVector::from_fn(n, |i, _| b[i]);
    match form {
        LocalForm::Quadratic { a } => Ok(Navigation {
            h: mat(&a),
            wind: DVector::zeros(n),
        }),
        LocalForm::Randers { a, b } => zermelo_from_randers(&RandersCoefficients {
            h: mat(&a),
            omega: vec(&b),
        }),
        LocalForm::Wind { a, b, lam } => {
            let a = mat(&a);
            let b = vec(&b);
            let w = a
                .clone()
                .cholesky()
                .ok_or_else(|| Error::DegenerateMetric("metric is not positive definite".into()))?
                .solve(&b);
            let c = lam + w.dot(&b);
            if !(c > 0.0) {
                return Err(Error::SignatureViolation { value: c });
            }
            Ok(Navigation { h: a / c, wind: w })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CausalClass {
    Timelike,
    Lightlike,
    Other,
}

#[derive(Debug, Clone)]
pub enum SpacetimeMetric {
    /// `G = tau^2 - F_t(v)^2`.
    LorentzFinsler(FinslerMetricSpec),
    Sstk(SstkMetric),
}

/// A future lightlike vector `(tau, v)` together with the branch it lies on.
#[derive(Debug, Clone, PartialEq)]
pub struct SpacetimeVector {
    pub tau: f64,
    pub v: Vec<f64>,
    pub branch: Branch,
}

impl SpacetimeVector {
    pub fn components(&self) -> Vec<f64> {
        std::iter::once(self.tau).chain(self.v.iter().copied()).collect()
    }
}

/// Formal Christoffel symbols `gamma^k_ij(u)`, indices `0..=n` with `0` the
/// time coordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct Christoffel {
    pub dim: usize,
    gamma: [[[f64; CAP]; CAP]; CAP],
}

impl Christoffel {
    pub fn get(&self, k: usize, i: usize, j: usize) -> f64 {
        self.gamma[k][i][j]
    }

    pub fn max_abs(&self) -> f64 {
        self.gamma
            .iter()
            .flatten()
            .flatten()
            .fold(0.0, |m, v| m.max(v.abs()))
    }
}

fn split(u: &[f64], n: usize) -> Result<(f64, &[f64])> {
    if u.len() != n + 1 {
        return Err(Error::InvalidInput(format!("expected {} spacetime components, got {}", n + 1, u.len())));
    }
    Ok((u[0], &u[1..]))
}

impl SpacetimeMetric {
    pub fn dim(&self) -> usize {
        match self {
            SpacetimeMetric::LorentzFinsler(f) => f.dim(),
            SpacetimeMetric::Sstk(s) => s.dim(),
        }
    }

    pub fn is_time_dependent(&self) -> bool {
        match self {
            SpacetimeMetric::LorentzFinsler(f) => f.is_time_dependent(),
            SpacetimeMetric::Sstk(s) => s.is_time_dependent(),
        }
    }

    pub fn is_homogeneous(&self) -> bool {
        match self {
            SpacetimeMetric::LorentzFinsler(f) => f.is_homogeneous(),
            SpacetimeMetric::Sstk(s) => s.is_constant(),
        }
    }

    pub fn bounds(&self) -> Bounds {
        match self {
            SpacetimeMetric::LorentzFinsler(f) => f.bounds(),
            SpacetimeMetric::Sstk(s) => s.bounds(),
        }
    }

    /// The metric whose light cones are the reversed ones in space.
    pub fn reversed(&self) -> Self {
        match self {
            SpacetimeMetric::LorentzFinsler(f) => SpacetimeMetric::LorentzFinsler(f.reversed()),
            SpacetimeMetric::Sstk(s) => SpacetimeMetric::Sstk(s.reversed()),
        }
    }

    /// The time-cost Finsler metric whose indicatrix is the light cone slice.
    pub fn fermat(&self) -> FinslerMetricSpec {
        match self {
            SpacetimeMetric::LorentzFinsler(f) => f.clone(),
            SpacetimeMetric::Sstk(s) => FinslerMetricSpec::new(MetricKind::SstkProjected(s.clone()))
                .expect("SSTK dimension already validated"),
        }
    }

    pub fn eval_g(&self, t: f64, x: &[f64], u: &[f64]) -> Result<f64> {
        let (tau, v) = split(u, self.dim())?;
        match self {
            SpacetimeMetric::LorentzFinsler(f) => {
                if v.iter().all(|c| *c == 0.0) {
                    return Ok(tau * tau);
                }
                let c = f.cost(t, x, v)?;
                Ok(tau * tau - c * c)
            }
            SpacetimeMetric::Sstk(s) => {
                let l = s.local::<f64>(t, x)?;
                let n = s.dim();
                Ok(l.lambda * tau * tau - 2.0 * linalg::pair(&l.omega, v, n) * tau - linalg::quad(&l.g0, v, n))
            }
        }
    }

    pub fn causal_class(&self, t: f64, x: &[f64], u: &[f64]) -> Result<CausalClass> {
        let tol = NULL_TOLERANCE * u.iter().map(|c| c * c).sum::<f64>();
        let g = match self.eval_g(t, x, u) {
            Ok(g) => g,
            Err(Error::DomainViolation(_)) => return Ok(CausalClass::Other),
            Err(e) => return Err(e),
        };
        Ok(if u[0] <= 0.0 {
            CausalClass::Other
        } else if g.abs() <= tol {
            CausalClass::Lightlike
        } else if g > 0.0 {
            CausalClass::Timelike
        } else {
            CausalClass::Other
        })
    }

    /// `g^G_u` with entries generic over jets (for Christoffel symbols).
    pub(crate) fn tensor<S: FieldScalar>(&self, t: f64, x: &[f64], u: &[f64]) -> Result<[[S; CAP]; CAP]> {
        let n = self.dim();
        let (tau, v) = split(u, n)?;
        let mut g = [[S::cst(0.0); CAP]; CAP];
        match self {
            SpacetimeMetric::LorentzFinsler(f) => {
                let quadratic = matches!(f.kind(), MetricKind::Riemannian { .. });
                let vn = linalg::norm(v);
                if !quadratic && vn <= GUARD_ANGLE * tau.abs() {
                    return Err(Error::SmoothnessViolation);
                }
                let gf: Mat3<S> = if vn == 0.0 {
                    // Only reachable for quadratic F, whose tensor ignores v.
                    let mut e = [0.0; 3];
                    e[0] = 1.0;
                    f.tensor(t, x, &e[..n], Branch::Upper)?
                } else {
                    f.tensor(t, x, v, Branch::Upper)?
                };
                g[0][0] = S::cst(1.0);
                for i in 0..n {
                    for j in 0..n {
                        g[i + 1][j + 1] = -gf[i][j];
                    }
                }
            }
            SpacetimeMetric::Sstk(s) => {
                let l = s.local::<S>(t, x)?;
                g[0][0] = l.lambda;
                for i in 0..n {
                    g[0][i + 1] = -l.omega[i];
                    g[i + 1][0] = -l.omega[i];
                    for j in 0..n {
                        g[i + 1][j + 1] = -l.g0[i][j];
                    }
                }
            }
        }
        Ok(g)
    }

    /// Fundamental tensor `g^G_u` on `R^{n+1}`.
    pub fn fundamental_tensor_g(&self, t: f64, x: &[f64], u: &[f64]) -> Result<DMatrix<f64>> {
        let n = self.dim();
        let g: [[f64; CAP]; CAP] = self.tensor(t, x, u)?;
        Ok(DMatrix::from_fn(n + 1, n + 1, |i, j| g[i][j]))
    }

    pub fn christoffel(&self, t: f64, x: &[f64], u: &[f64]) -> Result<Christoffel> {
        let n1 = self.dim() + 1;
        let g: [[Jet; CAP]; CAP] = self.tensor(t, x, u)?;
        let inv = invert(&g, n1)?;
        let mut lower = [[[0.0; CAP]; CAP]; CAP];
        for r in 0..n1 {
            for i in 0..n1 {
                for j in 0..n1 {
                    lower[r][i][j] = 0.5 * (g[r][j].du[i] + g[r][i].du[j] - g[i][j].du[r]);
                }
            }
        }
        let mut gamma = [[[0.0; CAP]; CAP]; CAP];
        for k in 0..n1 {
            for i in 0..n1 {
                for j in 0..n1 {
                    gamma[k][i][j] = (0..n1).map(|r| inv[k][r] * lower[r][i][j]).sum();
                }
            }
        }
        Ok(Christoffel { dim: n1 - 1, gamma })
    }

    /// Right-hand side of the pregeodesic system for `u = (1, xdot)`:
    /// `xddot^k = -gamma^k_ij u^i u^j + gamma^0_ij u^i u^j xdot^k`.
    pub(crate) fn acceleration(&self, t: f64, x: &[f64], xdot: &[f64]) -> Result<Vec3<f64>> {
        let n = self.dim();
        let n1 = n + 1;
        let mut u = [1.0; CAP];
        u[1..n1].copy_from_slice(xdot);
        let g: [[Jet; CAP]; CAP] = self.tensor(t, x, &u[..n1])?;
        let mut c = [0.0; CAP];
        for r in 0..n1 {
            let mut acc = 0.0;
            for i in 0..n1 {
                for j in 0..n1 {
                    acc += (g[r][j].du[i] - 0.5 * g[i][j].du[r]) * u[i] * u[j];
                }
            }
            c[r] = acc;
        }
        let mut m = [[0.0; CAP]; CAP];
        for i in 0..n1 {
            for j in 0..n1 {
                m[i][j] = g[i][j].re;
            }
        }
        let a = linalg::solve(&m, &c, n1).ok_or_else(|| Error::DegenerateMetric("singular spacetime tensor".into()))?;
        let mut out = [0.0; 3];
        for k in 0..n {
            out[k] = -a[k + 1] + a[0] * xdot[k];
        }
        Ok(out)
    }

    /// Future lightlike vectors over the spatial direction `d`, sorted by
    /// increasing `tau`. Only the quadratic kind sees the second (`Z_l`) cone
    /// sheet of strong wind.
    pub fn lightlike_lift(&self, t: f64, x: &[f64], d: &[f64]) -> Result<Vec<SpacetimeVector>> {
        let n = self.dim();
        if d.len() != n || d.iter().all(|c| *c == 0.0) {
            return Err(Error::InvalidInput("lift direction must be a nonzero spatial vector".into()));
        }
        let lift = |tau: f64, branch| SpacetimeVector {
            tau,
            v: d.to_vec(),
            branch,
        };
        match self {
            SpacetimeMetric::LorentzFinsler(f) => match f.cost(t, x, d) {
                Ok(tau) => Ok(vec![lift(tau, Branch::Upper)]),
                Err(Error::DomainViolation(_)) => Ok(vec![]),
                Err(e) => Err(e),
            },
            SpacetimeMetric::Sstk(s) => {
                let l = s.local::<f64>(t, x)?;
                let mut b = [0.0; 3];
                for i in 0..n {
                    b[i] = -l.omega[i];
                }
                let form = LocalForm::Wind {
                    a: l.g0,
                    b,
                    lam: l.lambda,
                };
                let mut out = Vec::new();
                let fermat = self.fermat();
                match classify(&form, d, n, Branch::Upper) {
                    DomainClass::Outside => return Ok(out),
                    DomainClass::Boundary => {
                        out.push(lift(fermat.eval(t, x, d, Branch::Upper)?, Branch::Upper));
                        return Ok(out);
                    }
                    DomainClass::Interior => out.push(lift(fermat.eval(t, x, d, Branch::Upper)?, Branch::Upper)),
                }
                if classify(&form, d, n, Branch::Lower) == DomainClass::Interior {
                    out.push(lift(fermat.eval(t, x, d, Branch::Lower)?, Branch::Lower));
                }
                Ok(out)
            }
        }
    }
}

fn invert(g: &[[Jet; CAP]; CAP], n: usize) -> Result<Mat4> {
    let mut m = [[0.0; CAP]; CAP];
    for i in 0..n {
        for j in 0..n {
            m[i][j] = g[i][j].re;
        }
    }
    linalg::inverse(&m, n).ok_or_else(|| Error::DegenerateMetric("singular spacetime tensor".into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    const O: [f64; 2] = [0.0, 0.0];

    fn nav(w: &[f64]) -> NavigationData {
        NavigationData::euclidean_constant(w)
    }

    #[test]
    fn sstk_of_zermelo_examples() {
        let p = sstk_from_zermelo(&nav(&[0.0, 0.0])).at(0.0, &O).unwrap();
        assert_eq!(p.lambda, 1.0);
        assert_eq!(p.omega.amax(), 0.0);
        let p = sstk_from_zermelo(&nav(&[0.5, 0.0])).at(0.0, &O).unwrap();
        assert!((p.lambda - 0.75).abs() < 1e-15);
        assert!((p.omega[0] + 0.5).abs() < 1e-15);
        assert!((p.lambda + p.omega.norm_squared() - 1.0).abs() < 1e-15);
        let p = sstk_from_zermelo(&nav(&[2.0, 0.0])).at(0.0, &O).unwrap();
        assert_eq!(p.lambda, -3.0);
        assert_eq!(p.omega[0], -2.0);
    }

    #[test]
    fn eval_g_examples() {
        let iso = SpacetimeMetric::LorentzFinsler(FinslerMetricSpec::euclidean(2));
        assert!((iso.eval_g(0.0, &O, &[1.0, 0.6, 0.0]).unwrap() - 0.64).abs() < 1e-15);
        let s = SpacetimeMetric::Sstk(sstk_from_zermelo(&nav(&[0.5, 0.0])));
        assert!((s.eval_g(0.0, &O, &[1.0, 1.0, 0.0]).unwrap() - 0.75).abs() < 1e-15);
        // (1, v) with v on the indicatrix |v - W| = 1.
        assert!(s.eval_g(0.0, &O, &[1.0, 1.5, 0.0]).unwrap().abs() < 1e-15);
        assert_eq!(s.causal_class(0.0, &O, &[1.0, 0.5, 1.0]).unwrap(), CausalClass::Lightlike);
        assert_eq!(s.causal_class(0.0, &O, &[1.0, 0.5, 0.5]).unwrap(), CausalClass::Timelike);
        assert_eq!(s.causal_class(0.0, &O, &[-1.0, 0.5, 0.5]).unwrap(), CausalClass::Other);
    }

    #[test]
    fn sstk_tensor_is_constant_matrix() {
        let s = SpacetimeMetric::Sstk(sstk_from_zermelo(&nav(&[0.5, 0.2])));
        let g = s.fundamental_tensor_g(0.0, &O, &[1.0, 0.3, 0.9]).unwrap();
        let g2 = s.fundamental_tensor_g(0.0, &O, &[2.0, -0.3, 0.1]).unwrap();
        assert_eq!(g, g2);
        assert!((g[(0, 0)] - (1.0 - 0.29)).abs() < 1e-15);
        assert!((g[(0, 1)] - 0.5).abs() < 1e-15);
        assert!((g[(2, 2)] + 1.0).abs() < 1e-15);
    }

    #[test]
    fn isotropic_tensor_and_guard_cone() {
        let iso = SpacetimeMetric::LorentzFinsler(FinslerMetricSpec::euclidean(2));
        let g = iso.fundamental_tensor_g(0.0, &O, &[1.0, 0.0, 1.0]).unwrap();
        assert_eq!(g, DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, -1.0, -1.0])));
        // Quadratic F is smooth along the time axis.
        assert!(iso.fundamental_tensor_g(0.0, &O, &[1.0, 0.0, 0.0]).is_ok());
        let z = SpacetimeMetric::LorentzFinsler(FinslerMetricSpec::zermelo(nav(&[0.5, 0.0])));
        assert!(matches!(
            z.fundamental_tensor_g(0.0, &O, &[1.0, 1e-8, 0.0]),
            Err(Error::SmoothnessViolation)
        ));
    }

    #[test]
    fn homogeneous_christoffels_vanish() {
        let z = SpacetimeMetric::LorentzFinsler(FinslerMetricSpec::zermelo(nav(&[0.5, 0.0])));
        assert_eq!(z.christoffel(0.0, &O, &[1.0, 1.5, 0.0]).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn lifts_in_mild_and_strong_wind() {
        let mild = SpacetimeMetric::Sstk(sstk_from_zermelo(&nav(&[0.5, 0.0])));
        let l = mild.lightlike_lift(0.0, &O, &[1.0, 0.0]).unwrap();
        assert_eq!(l.len(), 1);
        assert!((l[0].tau - 2.0 / 3.0).abs() < 1e-15);
        let strong = SpacetimeMetric::Sstk(sstk_from_zermelo(&nav(&[2.0, 0.0])));
        let l = strong.lightlike_lift(0.0, &O, &[1.0, 0.0]).unwrap();
        assert_eq!(l.len(), 2);
        assert!((l[0].tau - 1.0 / 3.0).abs() < 1e-15);
        assert!((l[1].tau - 1.0).abs() < 1e-15);
        assert_eq!(l[1].branch, Branch::Lower);
        for u in &l {
            assert!(strong.eval_g(0.0, &O, &u.components()).unwrap().abs() < 1e-12);
        }
        assert!(strong.lightlike_lift(0.0, &O, &[0.0, 1.0]).unwrap().is_empty());
        let lf = SpacetimeMetric::LorentzFinsler(FinslerMetricSpec::zermelo(nav(&[2.0, 0.0])));
        assert_eq!(lf.lightlike_lift(0.0, &O, &[1.0, 0.0]).unwrap().len(), 1);
        assert!(lf.lightlike_lift(0.0, &O, &[0.0, 1.0]).unwrap().is_empty());
    }

    #[test]
    fn fermat_examples() {
        let static_case = SstkMetric::new(
            ScalarField::Const(1.0),
            VectorField::zero(2),
            SymField::constant(&[&[4.0, 0.0], &[0.0, 1.0]]),
        )
        .unwrap();
        let f = fermat_from_sstk(&static_case).unwrap();
        assert!((f.cost(0.0, &O, &[1.0, 1.0]).unwrap() - 5f64.sqrt()).abs() < 1e-15);
        let f = fermat_from_sstk(&sstk_from_zermelo(&nav(&[0.5, 0.0]))).unwrap();
        assert!((f.cost(0.0, &O, &[1.0, 0.0]).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        let kropina = SstkMetric::new(
            ScalarField::Const(0.0),
            VectorField::constant(&[-0.5, 0.0]),
            SymField::identity(2),
        )
        .unwrap();
        let f = fermat_from_sstk(&kropina).unwrap();
        let v = [1.0, 0.7];
        assert!((f.cost(0.0, &O, &v).unwrap() - 1.49 / (2.0 * 0.5)).abs() < 1e-14);
        let bad = SstkMetric::new(ScalarField::Const(-1.0), VectorField::zero(2), SymField::identity(2));
        assert!(matches!(bad, Err(Error::SignatureViolation { .. })));
    }

    #[test]
    fn navigation_round_trip_through_sstk() {
        let data = NavigationData::new(
            SymField::constant(&[&[2.0, 0.4], &[0.4, 1.5]]),
            VectorField::constant(&[0.3, -0.2]),
        )
        .unwrap();
        let f = fermat_from_sstk(&sstk_from_zermelo(&data)).unwrap();
        let back = navigation_of(&f, 0.0, &O).unwrap();
        let orig = data.at(0.0, &O);
        assert!((back.h - orig.h).amax() < 1e-14);
        assert!((back.wind - orig.wind).amax() < 1e-14);
    }
}
