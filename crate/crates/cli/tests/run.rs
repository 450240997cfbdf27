use std::path::Path;
use std::process::Command;

use windfront::run::{cuts_json, execute, fronts_csv, run_scenario};
use windfront::Scenario;

fn scenario(dir: &Path, text: &str) -> Scenario {
    let path = dir.join("scenario.toml");
    std::fs::write(&path, text).unwrap();
    Scenario::load(&path).unwrap()
}

const CIRCLE: &str = r#"
[metric]
kind = "isotropic"
speed = 1.0
[front]
shape = "circle"
radius = 0.5
[run]
t_max = 1.0
dt = 0.01
seeds = 64
slices = [0.0, 0.5, 1.0]
"#;

#[test]
fn isotropic_circle_keeps_null_drift_at_roundoff() {
    let dir = tempfile::tempdir().unwrap();
    let out = execute(&scenario(dir.path(), CIRCLE)).unwrap();
    assert!(out.report.drift.max_abs.0 < 1e-12);
    assert!(!out.report.tripped());
    let csv = fronts_csv(&out);
    assert!(csv.starts_with("t,seed,x,y,alive\n"));
    assert_eq!(csv.lines().count(), 1 + 3 * 64);
    // Seed 0 starts at (0.5, 0) and reaches (1.5, 0) at t = 1.
    let last = csv.lines().find(|l| l.starts_with("1.0000000000000000e0,0,")).unwrap();
    let x: f64 = last.split(',').nth(2).unwrap().parse().unwrap();
    assert!((x - 1.5).abs() < 1e-9);
}

#[test]
fn inward_ellipse_reports_cuts_near_b_squared_over_a() {
    let dir = tempfile::tempdir().unwrap();
    let text = r#"
[metric]
kind = "riemannian"
h = [[1.0, 0.0], [0.0, 1.0]]
[front]
shape = "ellipse"
semi_axes = [2.0, 1.0]
side = "inward"
[run]
t_max = 0.8
dt = 0.005
seeds = 128
"#;
    let out = execute(&scenario(dir.path(), text)).unwrap();
    let min_cut = out.report.min_cut.0;
    assert!((min_cut - 0.5).abs() <= 2.0 * 0.005, "{min_cut}");
    let json: serde_json::Value = serde_json::from_str(&cuts_json(&out)).unwrap();
    let recs = json.as_array().unwrap();
    assert_eq!(recs.len(), 128);
    for key in ["seed", "t_cut", "cause", "witness"] {
        assert!(recs[0].get(key).is_some(), "{key}");
    }
    assert!(recs.iter().any(|r| r["cause"] != "horizon"));
}

#[test]
fn strong_wind_flags_unreachable_cells() {
    let dir = tempfile::tempdir().unwrap();
    let text = r#"
[metric]
kind = "zermelo"
wind = [2.0, 0.0]
[run]
t_max = 1.0
dt = 0.01
seeds = 64
"#;
    let out = execute(&scenario(dir.path(), text)).unwrap();
    assert!(out.report.unreachable_cells > 0);
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let sc = scenario(dir.path(), CIRCLE);
    run_scenario(&sc, &dir.path().join("a")).unwrap();
    run_scenario(&sc, &dir.path().join("b")).unwrap();
    for f in ["fronts.csv", "trajectories.csv", "arrival.csv", "fronts.json", "cuts.json", "report.json"] {
        let a = std::fs::read(dir.path().join("a").join(f)).unwrap();
        let b = std::fs::read(dir.path().join("b").join(f)).unwrap();
        assert!(!a.is_empty() && a == b, "{f}");
    }
}

fn windfront(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_windfront")).args(args).output().unwrap()
}

#[test]
fn tripped_monitor_gives_nonzero_exit() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.toml");
    let ok = CIRCLE.replace("[run]", "[output]\ndirectory = \"ok\"\n[run]");
    std::fs::write(&path, &ok).unwrap();
    assert_eq!(windfront(&["run", path.to_str().unwrap()]).status.code(), Some(0));
    let shear = ok.replace("kind = \"isotropic\"\nspeed = 1.0", "kind = \"zermelo\"\nwind = [\"0.2*y\", 0.0]");
    let strict = format!("{shear}renormalize = false\ndrift_tolerance = 1e-30\n");
    std::fs::write(&path, strict).unwrap();
    let out = windfront(&["run", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("null_drift_rate"));
    assert!(dir.path().join("ok/timing.json").is_file());
}

#[test]
fn check_lists_all_errors() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    std::fs::write(&path, "[metric]\nkind = \"warp\"\n[run]\nt_max = -1.0\nseeds = 3\n").unwrap();
    let out = windfront(&["check", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    for p in ["metric.kind", "run.t_max", "run.seeds"] {
        assert!(err.contains(p), "{err}");
    }
}

#[test]
fn query_subcommands_print_json() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("w.toml");
    std::fs::write(&path, "[metric]\nkind = \"zermelo\"\nwind = [0.5, 0.0]\n[run]\nt_max = 1.0\ndt = 0.01\nseeds = 64\n").unwrap();
    let p = path.to_str().unwrap();
    let out = windfront(&["distance", p, "--from", "1,0", "--to", "0,0"]);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!((v["distance"].as_f64().unwrap() - 2.0).abs() < 1e-6);
    let out = windfront(&["ball", p, "--center", "0,0", "--radius", "0.5", "--side", "bwd"]);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["side"], "bwd");
    // Backward ball under wind (0.5, 0): centre at -0.25, radius 0.5.
    for pt in v["segments"][0].as_array().unwrap() {
        let (x, y) = (pt[0].as_f64().unwrap(), pt[1].as_f64().unwrap());
        assert!(((x + 0.25).hypot(y) - 0.5).abs() < 1e-3);
    }
    let out = windfront(&["path", p, "--from", "0,0", "--to", "0,1"]);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["status"], "optimal");
    assert!((v["time"].as_f64().unwrap() - 2.0 / 3f64.sqrt()).abs() < 1e-6);
    let out = windfront(&["distance", p, "--from", "-1,-1", "--to", "nope"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn shipped_scenarios_validate_and_build() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios");
    let mut count = 0;
    for entry in std::fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            let sc = Scenario::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            sc.spacetime().unwrap();
            sc.initial_front().unwrap();
            assert_eq!(Scenario::parse(&sc.render(), &sc.base_dir).unwrap(), sc);
            count += 1;
        }
    }
    assert!(count >= 5);
}
