use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use windfront::export::{fmt_f64, to_json};
use windfront::{queries, run, Scenario};
use windfront_core::BallSide;

#[derive(Parser)]
#[command(name = "windfront", version, about = "Anisotropic wavefronts and Zermelo navigation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum SideArg {
    Fwd,
    Bwd,
}

#[derive(Subcommand)]
enum Command {
    /// Propagate the scenario front and write exports.
    Run {
        scenario: PathBuf,
        /// Override `output.directory`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Travel time between two points.
    Distance {
        scenario: PathBuf,
        #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
        from: [f64; 2],
        #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
        to: [f64; 2],
    },
    /// Boundary of a forward or backward ball.
    Ball {
        scenario: PathBuf,
        #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
        center: [f64; 2],
        #[arg(long)]
        radius: f64,
        #[arg(long, value_enum, default_value = "fwd")]
        side: SideArg,
    },
    /// Fastest path between two points.
    Path {
        scenario: PathBuf,
        #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
        from: [f64; 2],
        #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
        to: [f64; 2],
    },
    /// Validate a scenario without running it.
    Check { scenario: PathBuf },
}

fn parse_point(s: &str) -> Result<[f64; 2], String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    match parts.as_slice() {
        [x, y] => Ok([
            x.parse().map_err(|e| format!("bad x `{x}`: {e}"))?,
            y.parse().map_err(|e| format!("bad y `{y}`: {e}"))?,
        ]),
        _ => Err(format!("expected `x,y`, got `{s}`")),
    }
}

fn configure_threads() -> Result<(), String> {
    let Ok(v) = std::env::var("WINDFRONT_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| format!("WINDFRONT_THREADS must be a positive integer, got `{v}`"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| e.to_string())
}

fn load(path: &Path) -> Result<Scenario, ExitCode> {
    Scenario::load(path).map_err(|e| {
        eprintln!("{}: {e}", path.display());
        ExitCode::from(2)
    })
}

fn emit(r: Result<String, windfront::RunError>) -> ExitCode {
    match r {
        Ok(s) => {
            print!("{s}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn real_main() -> Result<ExitCode, ExitCode> {
    let cli = Cli::parse();
    configure_threads().map_err(|e| {
        eprintln!("error: {e}");
        ExitCode::from(2)
    })?;
    Ok(match cli.command {
        Command::Check { scenario } => {
            let sc = load(&scenario)?;
            // Building catches problems inside referenced files.
            if let Err(e) = sc.spacetime().and_then(|_| sc.initial_front()) {
                eprintln!("{}: {e}", scenario.display());
                return Err(ExitCode::from(2));
            }
            println!("{}: ok", scenario.display());
            ExitCode::SUCCESS
        }
        Command::Run { scenario, out } => {
            let sc = load(&scenario)?;
            let dir = out.unwrap_or_else(|| run::output_dir(&sc));
            let start = Instant::now();
            let report = run::run_scenario(&sc, &dir).map_err(|e| {
                eprintln!("error: {e}");
                ExitCode::from(2)
            })?;
            let wall = start.elapsed().as_secs_f64();
            let timing = serde_json::json!({ "wall_time_s": serde_json::value::RawValue::from_string(fmt_f64(wall)).unwrap() });
            if let Err(e) = std::fs::write(dir.join("timing.json"), to_json(&timing)) {
                eprintln!("warning: cannot write timing.json: {e}");
            }
            eprintln!("wrote {} files to {} in {wall:.3} s", report.files.len(), dir.display());
            for m in report.monitors.iter().filter(|m| !m.ok) {
                eprintln!("monitor tripped: {} (value {}, limit {})", m.name, fmt_f64(m.value.0), fmt_f64(m.limit.0));
            }
            if report.tripped() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            }
        }
        Command::Distance { scenario, from, to } => emit(queries::distance(&load(&scenario)?, from, to)),
        Command::Ball {
            scenario,
            center,
            radius,
            side,
        } => {
            let side = match side {
                SideArg::Fwd => BallSide::Forward,
                SideArg::Bwd => BallSide::Backward,
            };
            emit(queries::ball(&load(&scenario)?, center, radius, side))
        }
        Command::Path { scenario, from, to } => emit(queries::path(&load(&scenario)?, from, to)),
    })
}

fn main() -> ExitCode {
    real_main().unwrap_or_else(|code| code)
}
