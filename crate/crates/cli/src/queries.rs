//! Point-to-point queries rendered as JSON records.

use serde::Serialize;
use windfront_core::{ball_boundary, fastest_path, BallSide, Error, PathStatus};

use crate::export::{point, to_json, Num};
use crate::run::RunError;
use crate::scenario::Scenario;

type P2 = [f64; 2];

#[derive(Serialize)]
struct DistanceJson {
    from: [Num; 2],
    to: [Num; 2],
    reachable: bool,
    distance: Num,
    status: &'static str,
}

fn status(s: PathStatus) -> &'static str {
    match s {
        PathStatus::Optimal => "optimal",
        PathStatus::Coarse => "coarse",
    }
}

/// `{from, to, reachable, distance, status}`; unreachable targets get a
/// null distance.
pub fn distance(sc: &Scenario, from: P2, to: P2) -> Result<String, RunError> {
    let spec = sc.metric_spec()?;
    let rec = match fastest_path(&spec, from, to, &sc.nav_options()) {
        Ok(p) => DistanceJson {
            from: point(from),
            to: point(to),
            reachable: true,
            distance: Num(p.time),
            status: status(p.status),
        },
        Err(Error::Unreachable) => DistanceJson {
            from: point(from),
            to: point(to),
            reachable: false,
            distance: Num(f64::INFINITY),
            status: "unreachable",
        },
        Err(Error::ShootingStalled { time, .. }) => DistanceJson {
            from: point(from),
            to: point(to),
            reachable: true,
            distance: Num(time),
            status: "coarse",
        },
        Err(e) => return Err(e.into()),
    };
    Ok(to_json(&rec))
}

#[derive(Serialize)]
struct BallJson {
    center: [Num; 2],
    radius: Num,
    side: &'static str,
    breaks: usize,
    segments: Vec<Vec<[Num; 2]>>,
}

pub fn ball(sc: &Scenario, center: P2, radius: f64, side: BallSide) -> Result<String, RunError> {
    let spec = sc.metric_spec()?;
    let slice = ball_boundary(&spec, center, radius, side, &sc.nav_options())?;
    let rec = BallJson {
        center: point(center),
        radius: Num(radius),
        side: match side {
            BallSide::Forward => "fwd",
            BallSide::Backward => "bwd",
        },
        breaks: slice.breaks(),
        segments: slice.segments.iter().map(|s| s.points.iter().map(|p| point(*p)).collect()).collect(),
    };
    Ok(to_json(&rec))
}

#[derive(Serialize)]
struct Sample {
    t: Num,
    x: [Num; 2],
    velocity: [Num; 2],
    heading: [Num; 2],
}

#[derive(Serialize)]
struct PathJson {
    from: [Num; 2],
    to: [Num; 2],
    time: Num,
    coarse_time: Num,
    launch_angle: Num,
    miss: Num,
    status: &'static str,
    samples: Vec<Sample>,
}

/// Fastest path with its time-parametrized samples and engine headings.
pub fn path(sc: &Scenario, from: P2, to: P2) -> Result<String, RunError> {
    let spec = sc.metric_spec()?;
    let p = fastest_path(&spec, from, to, &sc.nav_options())?;
    let samples = (0..p.times.len())
        .map(|k| Sample {
            t: Num(p.times[k]),
            x: point(p.points[k]),
            velocity: point(p.velocities[k]),
            heading: point(p.headings[k]),
        })
        .collect();
    let rec = PathJson {
        from: point(from),
        to: point(to),
        time: Num(p.time),
        coarse_time: Num(p.coarse_time),
        launch_angle: Num(p.launch_angle),
        miss: Num(p.miss),
        status: status(p.status),
        samples,
    };
    Ok(to_json(&rec))
}
