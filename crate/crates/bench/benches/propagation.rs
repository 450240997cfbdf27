use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use windfront_core::*;

fn shear() -> SpacetimeMetric {
    let nav = NavigationData::new(
        SymField::identity(2),
        VectorField::new(vec![ScalarField::parse("0.2*y").unwrap(), ScalarField::Const(0.0)]),
    )
    .unwrap();
    SpacetimeMetric::Sstk(sstk_from_zermelo(&nav))
}

fn single_trajectory(c: &mut Criterion) {
    let m = shear();
    let init = TrajectoryState {
        t: 0.0,
        x: vec![0.0, 0.0],
        xdot: vec![0.7f64.cos(), 0.7f64.sin()],
    };
    let params = IntegratorParams::new(1e-3, 1.0);
    c.bench_function("pregeodesic_shear_1000_steps", |b| {
        b.iter(|| integrate_pregeodesic(&m, black_box(&init), &params).unwrap())
    });
    let lf = SpacetimeMetric::LorentzFinsler(FinslerMetricSpec::zermelo(NavigationData::euclidean_constant(&[0.3, 0.1])));
    let windy = TrajectoryState {
        xdot: vec![init.xdot[0] + 0.3, init.xdot[1] + 0.1],
        ..init.clone()
    };
    c.bench_function("pregeodesic_lorentz_finsler_1000_steps", |b| {
        b.iter(|| integrate_pregeodesic(&lf, black_box(&windy), &params).unwrap())
    });
}

fn wavefront(c: &mut Criterion) {
    let m = shear();
    let mut group = c.benchmark_group("ellipse_inward");
    group.sample_size(10);
    for seeds in [128usize, 256, 512] {
        let front = InitialFront::ellipse([0.0, 0.0], 2.0, 1.0, seeds).unwrap();
        let params = IntegratorParams::new(2e-3, 0.8);
        group.bench_with_input(BenchmarkId::new("propagate", seeds), &front, |b, f| {
            b.iter(|| propagate(&m, f, &params, Side::Inward).unwrap())
        });
        let wm = propagate(&m, &front, &params, Side::Inward).unwrap();
        group.bench_with_input(BenchmarkId::new("detect_cuts", seeds), &wm, |b, wm| b.iter(|| detect_cuts(wm).unwrap()));
    }
    group.finish();
}

fn queries(c: &mut Criterion) {
    let spec = FinslerMetricSpec::zermelo(NavigationData::euclidean_constant(&[0.5, 0.0]));
    let mut group = c.benchmark_group("navigation");
    group.sample_size(10);
    group.bench_function("fastest_path_crosswind", |b| {
        b.iter(|| fastest_path(&spec, [0.0, 0.0], black_box([0.0, 1.0]), &NavOptions::default()).unwrap())
    });
    group.finish();
}

criterion_group!(benches, single_trajectory, wavefront, queries);
criterion_main!(benches);
