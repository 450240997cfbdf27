use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use windfront_core::*;

fn spd(a: f64, b: f64, c: f64) -> [[f64; 2]; 2] {
    // L L^T with a positive diagonal.
    let l = [[a, 0.0], [b, c]];
    [
        [l[0][0] * l[0][0], l[0][0] * l[1][0]],
        [l[1][0] * l[0][0], l[1][0] * l[1][0] + l[1][1] * l[1][1]],
    ]
}

/// Navigation data with `h(W, W) = ratio^2`.
fn nav_data(h: [[f64; 2]; 2], dir: f64, ratio: f64) -> NavigationData {
    let d = [dir.cos(), dir.sin()];
    let n = (h[0][0] * d[0] * d[0] + 2.0 * h[0][1] * d[0] * d[1] + h[1][1] * d[1] * d[1]).sqrt();
    let w = [ratio * d[0] / n, ratio * d[1] / n];
    NavigationData::new(SymField::constant(&[&h[0], &h[1]]), VectorField::constant(&w)).unwrap()
}

fn spd_strategy() -> impl Strategy<Value = [[f64; 2]; 2]> {
    (0.5f64..2.0, -0.8f64..0.8, 0.5f64..2.0).prop_map(|(a, b, c)| spd(a, b, c))
}

fn angle() -> impl Strategy<Value = f64> {
    0.0..std::f64::consts::TAU
}

fn unit(a: f64) -> [f64; 2] {
    [a.cos(), a.sin()]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn positive_homogeneity(h in spd_strategy(), dir in angle(), ratio in 0.0f64..3.0, va in angle(), r in 0.1f64..5.0) {
        let spec = FinslerMetricSpec::zermelo(nav_data(h, dir, ratio));
        let v = [r * va.cos(), r * va.sin()];
        let x = [0.3, -0.2];
        if let Ok(f) = spec.eval(0.0, &x, &v, Branch::Upper) {
            for c in [0.5, 2.0, 7.3] {
                let fc = spec.eval(0.0, &x, &[c * v[0], c * v[1]], Branch::Upper).unwrap();
                prop_assert!((fc - c * f).abs() <= 1e-12 * (c * f).abs().max(1e-300));
            }
        }
    }

    #[test]
    fn triangle_inequality_in_the_domain(h in spd_strategy(), dir in angle(), ratio in 0.0f64..2.5, a in angle(), b in angle(), ra in 0.1f64..3.0, rb in 0.1f64..3.0) {
        let spec = FinslerMetricSpec::zermelo(nav_data(h, dir, ratio));
        let x = [0.0, 0.0];
        let v = [ra * a.cos(), ra * a.sin()];
        let w = [rb * b.cos(), rb * b.sin()];
        let s = [v[0] + w[0], v[1] + w[1]];
        let inside = |u: &[f64]| spec.domain(0.0, &x, u, Branch::Upper) == Ok(DomainClass::Interior);
        if inside(&v) && inside(&w) && inside(&s) {
            let f = |u: &[f64]| spec.eval(0.0, &x, u, Branch::Upper).unwrap();
            prop_assert!(f(&s) <= f(&v) + f(&w) + 1e-12);
        }
    }

    #[test]
    fn indicatrix_samples_have_unit_cost(h in spd_strategy(), dir in angle(), ratio in 0.0f64..3.0) {
        let spec = FinslerMetricSpec::zermelo(nav_data(h, dir, ratio));
        let x = [1.0, 2.0];
        for v in spec.indicatrix_sample(0.0, &x, 64).unwrap() {
            // Under strong wind part of the sphere lies on the lower branch.
            let up = spec.eval(0.0, &x, &v, Branch::Upper);
            let low = spec.eval(0.0, &x, &v, Branch::Lower);
            let hit = [up, low].into_iter().flatten().any(|c| (c - 1.0).abs() < 1e-10);
            prop_assert!(hit, "{v:?}");
        }
    }

    #[test]
    fn zermelo_randers_round_trip(h in spd_strategy(), dir in angle(), ratio in 0.0f64..0.95) {
        let nav = nav_data(h, dir, ratio).at(0.0, &[0.0, 0.0]);
        let rc = randers_from_zermelo(&nav).unwrap();
        let back = zermelo_from_randers(&rc).unwrap();
        let scale = nav.h.amax().max(nav.wind.amax()).max(1.0);
        prop_assert!((back.h - &nav.h).amax() < 1e-9 * scale);
        prop_assert!((back.wind - &nav.wind).amax() < 1e-9 * scale);
        // Both descriptions measure the same cost.
        let z = FinslerMetricSpec::zermelo(nav_data(h, dir, ratio));
        for a in [0.0, 1.0, 2.5, 4.0] {
            let v = unit(a);
            let fz = z.eval(0.0, &[0.0, 0.0], &v, Branch::Upper).unwrap();
            prop_assert!((fz - rc.eval(&v)).abs() < 1e-12 * fz);
        }
    }

    #[test]
    fn fundamental_tensor_is_symmetric_positive_definite(h in spd_strategy(), dir in angle(), ratio in 0.0f64..0.95, a in angle()) {
        let spec = FinslerMetricSpec::zermelo(nav_data(h, dir, ratio));
        let g = spec.fundamental_tensor(0.0, &[0.0, 0.0], &unit(a), Branch::Upper).unwrap();
        prop_assert!((&g - g.transpose()).amax() < 1e-12 * g.amax());
        prop_assert!(g.clone().cholesky().is_some());
    }

    #[test]
    fn lift_costs_match_metric(dir in angle(), ratio in 0.0f64..3.0, a in angle(), r in 0.1f64..4.0) {
        let data = nav_data([[1.0, 0.0], [0.0, 1.0]], dir, ratio);
        let spec = FinslerMetricSpec::zermelo(data.clone());
        let m = SpacetimeMetric::Sstk(sstk_from_zermelo(&data));
        let d = [r * a.cos(), r * a.sin()];
        let x = [0.0, 0.0];
        for lift in m.lightlike_lift(0.0, &x, &d).unwrap() {
            let f = spec.eval(0.0, &x, &d, lift.branch).unwrap();
            prop_assert!((lift.tau - f).abs() < 1e-9 * f.max(1.0));
            prop_assert!(m.eval_g(0.0, &x, &lift.components()).unwrap().abs() < 1e-9 * f.max(1.0).powi(2));
        }
    }

    #[test]
    fn conformal_scaling_keeps_causal_class(k in 0.1f64..5.0, tau in 0.1f64..3.0, a in angle(), r in 0.0f64..3.0) {
        let base = |c: f64| {
            SpacetimeMetric::Sstk(SstkMetric::new(
                ScalarField::Const(c * -3.0),
                VectorField::constant(&[c * -2.0, 0.0]),
                SymField::constant(&[&[c, 0.0], &[0.0, c]]),
            ).unwrap())
        };
        let u = [tau, r * a.cos(), r * a.sin()];
        let x = [0.0, 0.0];
        prop_assert_eq!(base(1.0).causal_class(0.0, &x, &u).unwrap(), base(k).causal_class(0.0, &x, &u).unwrap());
    }

    #[test]
    fn spacetime_tensor_is_scale_invariant(c in 0.1f64..10.0, a in angle(), r in 0.0f64..0.5) {
        let m = SpacetimeMetric::LorentzFinsler(FinslerMetricSpec::zermelo(nav_data([[1.0, 0.0], [0.0, 1.0]], 0.3, 0.5)));
        let u = [1.0, r * a.cos(), r * a.sin()];
        let x = [0.0, 0.0];
        let g1 = m.fundamental_tensor_g(0.0, &x, &u).unwrap();
        let g2 = m.fundamental_tensor_g(0.0, &x, &[c * u[0], c * u[1], c * u[2]]).unwrap();
        prop_assert!((g1 - g2).amax() < 1e-10);
    }
}

#[test]
fn kropina_limit_converges_monotonically() {
    // |W| -> 1 along the x axis: lambda = 1 - |W|^2.
    let v = [1.0, 0.3];
    let kropina = (v[0] * v[0] + v[1] * v[1]) / (2.0 * v[0]);
    let mut last = f64::INFINITY;
    for lambda in [1e-2, 1e-4, 1e-6] {
        let w = (1.0f64 - lambda).sqrt();
        let spec = FinslerMetricSpec::zermelo(NavigationData::euclidean_constant(&[w, 0.0]));
        let err = (spec.eval(0.0, &[0.0, 0.0], &v, Branch::Upper).unwrap() - kropina).abs();
        assert!(err < last, "{lambda}: {err} !< {last}");
        last = err;
    }
    assert!(last < 1e-5);
}

fn shear(k: f64) -> NavigationData {
    NavigationData::new(
        SymField::identity(2),
        VectorField::new(vec![ScalarField::parse(&format!("{k}*y")).unwrap(), ScalarField::Const(0.0)]),
    )
    .unwrap()
}

#[test]
fn christoffels_match_finite_differences() {
    let m = SpacetimeMetric::LorentzFinsler(FinslerMetricSpec::zermelo(shear(0.2)));
    let x = [0.3, 0.4];
    let u = [1.0, 0.9, 0.5];
    let sym = m.christoffel(0.0, &x, &u).unwrap();
    let h = 1e-5;
    let g = |t: f64, x: &[f64]| m.fundamental_tensor_g(t, x, &u).unwrap();
    // d_r g_ij by central differences; slot 0 is time.
    let dg = |r: usize| -> DMatrix<f64> {
        let (mut tp, mut tm) = (0.0, 0.0);
        let (mut xp, mut xm) = (x, x);
        if r == 0 {
            tp += h;
            tm -= h;
        } else {
            xp[r - 1] += h;
            xm[r - 1] -= h;
        }
        (g(tp, &xp) - g(tm, &xm)) / (2.0 * h)
    };
    let d: Vec<DMatrix<f64>> = (0..3).map(dg).collect();
    let inv = g(0.0, &x).try_inverse().unwrap();
    let mut max = 0.0f64;
    for k in 0..3 {
        for i in 0..3 {
            for j in 0..3 {
                let fd: f64 = (0..3)
                    .map(|r| inv[(k, r)] * 0.5 * (d[i][(r, j)] + d[j][(r, i)] - d[r][(i, j)]))
                    .sum();
                assert!((sym.get(k, i, j) - sym.get(k, j, i)).abs() < 1e-14);
                max = max.max((fd - sym.get(k, i, j)).abs());
            }
        }
    }
    assert!(max < 1e-5, "max deviation {max}");
    assert!(sym.max_abs() > 1e-3);
}

#[test]
fn quadratic_spacetime_symbols_do_not_depend_on_direction() {
    let m = SpacetimeMetric::Sstk(sstk_from_zermelo(&shear(0.2)));
    let x = [0.1, -0.3];
    let reference = m.christoffel(0.0, &x, &[1.0, 1.0, 0.0]).unwrap();
    let mut rng_angle = 0.0;
    for _ in 0..100 {
        rng_angle += 0.61803398875;
        let d = unit(rng_angle * std::f64::consts::TAU);
        for lift in m.lightlike_lift(0.0, &x, &d).unwrap() {
            let c = m.christoffel(0.0, &x, &lift.components()).unwrap();
            for k in 0..3 {
                for i in 0..3 {
                    for j in 0..3 {
                        assert!((c.get(k, i, j) - reference.get(k, i, j)).abs() < 1e-10);
                    }
                }
            }
        }
    }
}

#[test]
fn navigation_survives_the_quadratic_spacetime() {
    let mut state = 0x2545F4914F6CDD1Du64;
    let mut next = || {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        (state >> 11) as f64 / (1u64 << 53) as f64
    };
    for _ in 0..100 {
        let h = spd(0.5 + 1.5 * next(), -0.8 + 1.6 * next(), 0.5 + 1.5 * next());
        let data = nav_data(h, std::f64::consts::TAU * next(), 0.95 * next());
        let spec = fermat_from_sstk(&sstk_from_zermelo(&data)).unwrap();
        let nav = navigation_of(&spec, 0.0, &[0.0, 0.0]).unwrap();
        let orig = data.at(0.0, &[0.0, 0.0]);
        let hm = DMatrix::from_fn(2, 2, |i, j| h[i][j]);
        assert!((nav.h - hm).amax() < 1e-9);
        assert!((nav.wind - DVector::from_column_slice(orig.wind.as_slice())).amax() < 1e-9);
    }
}
