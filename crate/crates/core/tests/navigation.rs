use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use windfront_core::wavefront::polygon_contains;
use windfront_core::*;

type P2 = [f64; 2];

fn shear() -> FinslerMetricSpec {
    FinslerMetricSpec::zermelo(
        NavigationData::new(
            SymField::identity(2),
            VectorField::new(vec![ScalarField::parse("0.2*y").unwrap(), ScalarField::Const(0.0)]),
        )
        .unwrap(),
    )
}

fn mild() -> FinslerMetricSpec {
    FinslerMetricSpec::zermelo(NavigationData::euclidean_constant(&[0.5, 0.0]))
}

fn opts() -> NavOptions {
    NavOptions {
        seeds: 96,
        dt: 1e-2,
        ..Default::default()
    }
}

fn random_points(rng: &mut ChaCha8Rng, n: usize) -> Vec<P2> {
    (0..n).map(|_| [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)]).collect()
}

fn distance_matrix(spec: &FinslerMetricSpec, pts: &[P2]) -> Vec<Vec<f64>> {
    pts.iter()
        .map(|a| {
            distances_from(spec, *a, pts, &opts())
                .unwrap()
                .into_iter()
                .map(|d| d.expect("mild wind reaches everything"))
                .collect()
        })
        .collect()
}

#[test]
fn generalized_distance_axioms() {
    let dt = opts().dt;
    for spec in [mild(), shear()] {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let pts = random_points(&mut rng, 12);
        let d = distance_matrix(&spec, &pts);
        for _ in 0..200 {
            let (a, b, c) = (rng.gen_range(0..12), rng.gen_range(0..12), rng.gen_range(0..12));
            assert!(d[a][b] >= 0.0);
            assert!(d[a][c] <= d[a][b] + d[b][c] + 2.0 * dt, "{a} {b} {c}");
            if a == b {
                assert_eq!(d[a][b], 0.0);
            } else {
                let gap = (pts[a][0] - pts[b][0]).hypot(pts[a][1] - pts[b][1]);
                assert!(d[a][b] > 0.0 || gap < dt);
            }
        }
    }
}

#[test]
fn reverse_metric_swaps_arguments() {
    let spec = shear();
    let rev = spec.reversed();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..6 {
        let p = random_points(&mut rng, 2);
        let fwd = distance(&spec, p[0], p[1], &opts()).unwrap().unwrap();
        let back = distance(&rev, p[1], p[0], &opts()).unwrap().unwrap();
        assert!((fwd - back).abs() <= 2.0 * opts().dt, "{fwd} {back}");
    }
}

#[test]
fn balls_are_nested() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for spec in [mild(), shear()] {
        let source = PointSource::new(&spec, [0.0, 0.0], 1.5, &opts()).unwrap();
        for _ in 0..200 {
            let r1 = rng.gen_range(0.05..1.4);
            let r2 = rng.gen_range(r1 + 0.02..1.5);
            let inner = front_at(&source.wavemap, &source.cuts, r1).unwrap().points();
            let outer = front_at(&source.wavemap, &source.cuts, r2).unwrap().points();
            assert!(inner.iter().all(|p| polygon_contains(&outer, *p)));
        }
        for side in [BallSide::Forward, BallSide::Backward] {
            let small = ball_boundary(&spec, [0.0, 0.0], 0.5, side, &opts()).unwrap().points();
            let large = ball_boundary(&spec, [0.0, 0.0], 0.8, side, &opts()).unwrap().points();
            assert!(small.iter().all(|p| polygon_contains(&large, *p)));
            assert!(polygon_contains(&small, [0.0, 0.0]));
        }
    }
}

#[test]
fn fastest_path_beats_random_paths() {
    let spec = shear();
    let (x0, y0) = ([0.0, 0.0], [1.0, 0.5]);
    let best = fastest_path(&spec, x0, y0, &NavOptions::default()).unwrap();
    assert_eq!(best.status, PathStatus::Optimal);
    let len = best.length(&spec).unwrap();
    assert!((len - best.time).abs() < 1e-6 * best.time, "{len} {}", best.time);
    let mut rng = ChaCha8Rng::seed_from_u64(19);
    for _ in 0..50 {
        // Straight chord plus a random sine bump normal to it.
        let amp: Vec<f64> = (0..3).map(|_| rng.gen_range(-0.3..0.3)).collect();
        let pts: Vec<Vec<f64>> = (0..=200)
            .map(|i| {
                let s = i as f64 / 200.0;
                let bump: f64 = amp.iter().enumerate().map(|(k, a)| a * ((k + 1) as f64 * std::f64::consts::PI * s).sin()).sum();
                vec![x0[0] + s * (y0[0] - x0[0]) - 0.5 * bump, x0[1] + s * (y0[1] - x0[1]) + bump]
            })
            .collect();
        let cost = spec.path_length(&SampledCurve::polyline(pts), TimeMode::Frozen(0.0)).unwrap();
        assert!(best.time <= cost + 1e-9, "{} > {cost}", best.time);
    }
}

#[test]
fn crosswind_path_is_straight_with_constant_heading() {
    let p = fastest_path(&mild(), [0.0, 0.0], [0.0, 1.0], &NavOptions::default()).unwrap();
    assert!((p.time - 2.0 / 3f64.sqrt()).abs() < 1e-6);
    for x in &p.points {
        assert!(x[0].abs() < 1e-9);
    }
    for h in &p.headings {
        assert!((h[0] + 0.5).abs() < 1e-9 && (h[1] - 0.75f64.sqrt()).abs() < 1e-9);
    }
}
