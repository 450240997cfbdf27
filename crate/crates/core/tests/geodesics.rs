use windfront_core::*;

fn shear(k: f64) -> NavigationData {
    NavigationData::new(
        SymField::identity(2),
        VectorField::new(vec![ScalarField::parse(&format!("{k}*y")).unwrap(), ScalarField::Const(0.0)]),
    )
    .unwrap()
}

/// Lightlike initial velocity of heading angle `a` (engine direction) in
/// Euclidean navigation with wind `w` at the origin.
fn launch(w: [f64; 2], a: f64) -> TrajectoryState {
    TrajectoryState {
        t: 0.0,
        x: vec![0.0, 0.0],
        xdot: vec![a.cos() + w[0], a.sin() + w[1]],
    }
}

fn params(dt: f64, t_max: f64, renormalize: bool) -> IntegratorParams {
    IntegratorParams {
        renormalize_null: renormalize,
        ..IntegratorParams::new(dt, t_max)
    }
}

fn shear_endpoint(dt: f64, renormalize: bool) -> Vec<f64> {
    let m = SpacetimeMetric::Sstk(sstk_from_zermelo(&shear(0.2)));
    let tr = integrate_pregeodesic(&m, &launch([0.0, 0.0], 0.7), &params(dt, 1.0, renormalize)).unwrap();
    tr.end().to_vec()
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt()
}

#[test]
fn fourth_order_self_convergence() {
    let reference = shear_endpoint(1e-5, false);
    let errors: Vec<f64> = [0.04, 0.02, 0.01].iter().map(|dt| dist(&shear_endpoint(*dt, false), &reference)).collect();
    for w in errors.windows(2) {
        assert!(w[0] / w[1] >= 12.0, "error ratio {} ({errors:?})", w[0] / w[1]);
    }
    assert!(dist(&shear_endpoint(1e-3, true), &reference) < 1e-6);
}

#[test]
fn null_drift_with_and_without_reprojection() {
    let m = SpacetimeMetric::Sstk(sstk_from_zermelo(&shear(0.2)));
    let init = launch([0.0, 0.0], 0.7);
    let free = integrate_pregeodesic(&m, &init, &params(1e-3, 1.0, false)).unwrap();
    let r = conservation_report(&free, &m).unwrap();
    assert!(r.max_rate <= 1e-6, "{}", r.max_rate);
    let coarse = integrate_pregeodesic(&m, &init, &params(2e-2, 1.0, false)).unwrap();
    let rc = conservation_report(&coarse, &m).unwrap();
    let fine = integrate_pregeodesic(&m, &init, &params(1e-2, 1.0, false)).unwrap();
    let rf = conservation_report(&fine, &m).unwrap();
    assert!(rc.max_abs_g / rf.max_abs_g > 8.0, "{} {}", rc.max_abs_g, rf.max_abs_g);
    let fixed = integrate_pregeodesic(&m, &init, &params(1e-3, 1.0, true)).unwrap();
    let rr = conservation_report(&fixed, &m).unwrap();
    assert!(rr.series.iter().all(|g| *g <= 1e-12), "{}", rr.max_abs_g);
}

/// The shear navigation data written as an explicit Randers metric:
/// `h~ = h / lam + W W^T / lam^2`, `omega~ = -W / lam`, `lam = 1 - (ky)^2`.
fn shear_randers() -> FinslerMetricSpec {
    let f = |s: &str| ScalarField::parse(s).unwrap();
    let lam = "(1 - (0.2*y)^2)";
    let h = SymField::from_rows(vec![
        vec![f(&format!("1/{lam} + (0.2*y)^2/{lam}^2")), f("0")],
        vec![f("0"), f(&format!("1/{lam}"))],
    ])
    .unwrap();
    let omega = VectorField::new(vec![f(&format!("-0.2*y/{lam}")), f("0")]);
    FinslerMetricSpec::randers(h, omega).unwrap()
}

#[test]
fn spacetime_projection_equals_finsler_geodesic_for_randers() {
    let spec = shear_randers();
    let zermelo = FinslerMetricSpec::zermelo(shear(0.2));
    let x = [0.2, 0.7];
    for a in [0.0f64, 1.0, 2.0, 4.0] {
        let v = [a.cos(), a.sin()];
        let (fr, fz) = (spec.cost(0.0, &x, &v).unwrap(), zermelo.cost(0.0, &x, &v).unwrap());
        assert!((fr - fz).abs() < 1e-13);
    }
    let m = SpacetimeMetric::LorentzFinsler(spec.clone());
    let init = launch([0.0, 0.0], 1.1);
    let tr = integrate_pregeodesic(&m, &init, &IntegratorParams::new(1e-3, 1.0)).unwrap();
    let geo = integrate_finsler_geodesic(&spec, &init.x, &init.xdot, &IntegratorParams::new(1e-3, 1.0)).unwrap();
    assert!(dist(tr.end(), geo.end()) < 1e-6);
    for k in 0..geo.len() {
        let f = spec.cost(0.0, geo.point(k), geo.velocity(k)).unwrap();
        assert!((f - 1.0).abs() < 1e-8);
    }
}

#[test]
fn reversed_metric_retraces_the_curve() {
    let spec = FinslerMetricSpec::zermelo(shear(0.2));
    let init = launch([0.0, 0.0], 0.4);
    let p = IntegratorParams::new(1e-3, 1.0);
    let fwd = integrate_finsler_geodesic(&spec, &init.x, &init.xdot, &p).unwrap();
    let end = fwd.end().to_vec();
    let v = fwd.velocity(fwd.len() - 1);
    let back = integrate_finsler_geodesic(&spec.reversed(), &end, &[-v[0], -v[1]], &p).unwrap();
    assert!(dist(back.end(), &init.x) < 1e-8, "{:?}", back.end());
}

#[test]
fn randers_front_orthogonality_residual() {
    let spec = FinslerMetricSpec::zermelo(NavigationData::euclidean_constant(&[0.3, 0.4]));
    let m = SpacetimeMetric::LorentzFinsler(spec);
    // Flat front along the y axis; outward normal +x.
    let dirs = orthogonal_directions(&m, 0.0, &[0.0, 0.0], &[0.0, 1.0], &[1.0, 0.0], OrthoMethod::RootFind).unwrap();
    assert_eq!(dirs.len(), 2);
    for d in &dirs {
        let u = [1.0, d.xdot[0], d.xdot[1]];
        let g = m.fundamental_tensor_g(0.0, &[0.0, 0.0], &u).unwrap();
        let residual = g[(0, 2)] + u[1] * g[(1, 2)] + u[2] * g[(2, 2)];
        assert!(residual.abs() < 1e-8);
        assert!(m.eval_g(0.0, &[0.0, 0.0], &u).unwrap().abs() < 1e-9);
    }
    let out = select_side(&dirs, Side::Outward, 0.0).unwrap();
    // Engine heading points along +x; the wind adds its full component.
    assert!((out.xdot[0] - 1.3).abs() < 1e-9 && (out.xdot[1] - 0.4).abs() < 1e-9, "{:?}", out.xdot);
}
