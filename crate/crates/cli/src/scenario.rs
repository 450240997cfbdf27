//! Scenario files: a TOML document with `[metric]`, `[front]`, `[run]`,
//! `[grid]` and `[output]` tables.

use std::fmt;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use toml::{Table, Value};
use windfront_core::{
    Bounds, FinslerMetricSpec, InitialFront, IntegratorParams, NavOptions, NavigationData, RegularGrid, ScalarField,
    Side, SpacetimeMetric, SstkMetric, SymField, VectorField,
};

/// A scalar entry: a number, an expression in `x`, `y`, `t`, or a column
/// of a gridded CSV table.
#[derive(Debug, Clone, PartialEq)]
pub enum FieldValue {
    Number(f64),
    Expr(String),
    Csv { path: String, column: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MetricKindName {
    Isotropic,
    Riemannian,
    Randers,
    Zermelo,
    Kropina,
    Sstk,
}

impl MetricKindName {
    const ALL: [(&'static str, MetricKindName); 6] = [
        ("isotropic", MetricKindName::Isotropic),
        ("riemannian", MetricKindName::Riemannian),
        ("randers", MetricKindName::Randers),
        ("zermelo", MetricKindName::Zermelo),
        ("kropina", MetricKindName::Kropina),
        ("sstk", MetricKindName::Sstk),
    ];

    pub fn name(self) -> &'static str {
        Self::ALL.iter().find(|(_, k)| *k == self).unwrap().0
    }

    /// Keys this kind requires and the ones it accepts.
    fn keys(self) -> (&'static [&'static str], &'static [&'static str]) {
        match self {
            MetricKindName::Isotropic => (&["speed"], &[]),
            MetricKindName::Riemannian => (&["h"], &[]),
            MetricKindName::Randers | MetricKindName::Kropina => (&["h", "omega"], &[]),
            MetricKindName::Zermelo => (&["wind"], &["h"]),
            MetricKindName::Sstk => (&["lambda", "omega", "g0"], &[]),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpacetimeChoice {
    /// Quadratic spacetime for wind-type metrics, `dt^2 - F^2` otherwise.
    Auto,
    LorentzFinsler,
    Sstk,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricSection {
    pub kind: MetricKindName,
    pub speed: Option<FieldValue>,
    pub h: Option<[[FieldValue; 2]; 2]>,
    pub wind: Option<[FieldValue; 2]>,
    pub omega: Option<[FieldValue; 2]>,
    pub lambda: Option<FieldValue>,
    pub g0: Option<[[FieldValue; 2]; 2]>,
    pub reversed: bool,
    pub spacetime: SpacetimeChoice,
    pub bounds: Option<([f64; 2], [f64; 2])>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum FrontSpec {
    Point { center: [f64; 2] },
    Circle { center: [f64; 2], radius: f64 },
    Ellipse { center: [f64; 2], semi_axes: [f64; 2] },
    Polyline { points: Vec<[f64; 2]> },
    PolylineFile { path: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrontSection {
    pub shape: FrontSpec,
    pub side: Side,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSection {
    pub dt: f64,
    pub t_max: f64,
    pub seeds: usize,
    pub slices: Vec<f64>,
    pub cuts: bool,
    pub renormalize: bool,
    pub drift_tolerance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridSection {
    pub min: [f64; 2],
    pub max: [f64; 2],
    pub nx: usize,
    pub ny: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputSection {
    pub directory: String,
    pub formats: Vec<Format>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub metric: MetricSection,
    pub front: FrontSection,
    pub run: RunSection,
    pub grid: Option<GridSection>,
    pub output: OutputSection,
    /// Directory relative file references are resolved against.
    pub base_dir: PathBuf,
}

/// A violated constraint, located by its dotted field path.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidationError {
    pub path: String,
    pub message: String,
}

impl fmt::Display for ValidationError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ScenarioError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("{} validation error(s):\n{}", .0.len(), .0.iter().map(|e| format!("  {e}")).collect::<Vec<_>>().join("\n"))]
    Validation(Vec<ValidationError>),
}

pub const DEFAULT_DT: f64 = 1e-3;
pub const DEFAULT_SEEDS: usize = 256;

/// Collects errors while walking the document.
struct Reader<'a> {
    errors: Vec<ValidationError>,
    base: &'a Path,
}

impl Reader<'_> {
    fn err(&mut self, path: &str, message: impl Into<String>) {
        self.errors.push(ValidationError {
            path: path.to_string(),
            message: message.into(),
        });
    }

    fn table<'t>(&mut self, root: &'t Table, key: &str, allowed: &[&str]) -> Option<&'t Table> {
        match root.get(key) {
            None => None,
            Some(Value::Table(t)) => {
                for k in t.keys() {
                    if !allowed.contains(&k.as_str()) {
                        self.err(&format!("{key}.{k}"), "unknown field");
                    }
                }
                Some(t)
            }
            Some(_) => {
                self.err(key, "expected a table");
                None
            }
        }
    }

    fn number(&mut self, v: &Value, path: &str) -> Option<f64> {
        match v {
            Value::Float(f) if f.is_finite() => Some(*f),
            Value::Integer(i) => Some(*i as f64),
            _ => {
                self.err(path, "expected a finite number");
                None
            }
        }
    }

    fn opt_number(&mut self, t: Option<&Table>, key: &str, path: &str) -> Option<f64> {
        let v = t?.get(key)?;
        self.number(v, path)
    }

    fn point(&mut self, v: &Value, path: &str) -> Option<[f64; 2]> {
        match v.as_array() {
            Some(a) if a.len() == 2 => {
                let x = self.number(&a[0], &format!("{path}[0]"));
                let y = self.number(&a[1], &format!("{path}[1]"));
                Some([x?, y?])
            }
            _ => {
                self.err(path, "expected a pair of numbers");
                None
            }
        }
    }

    fn boolean(&mut self, t: Option<&Table>, key: &str, path: &str, default: bool) -> bool {
        match t.and_then(|t| t.get(key)) {
            None => default,
            Some(Value::Boolean(b)) => *b,
            Some(_) => {
                self.err(path, "expected true or false");
                default
            }
        }
    }

    fn string<'v>(&mut self, v: &'v Value, path: &str) -> Option<&'v str> {
        let s = v.as_str();
        if s.is_none() {
            self.err(path, "expected a string");
        }
        s
    }

    fn file_exists(&mut self, file: &str, path: &str) {
        if !self.base.join(file).is_file() {
            self.err(path, format!("referenced file `{file}` does not exist"));
        }
    }

    fn field(&mut self, v: &Value, path: &str) -> Option<FieldValue> {
        match v {
            Value::Float(_) | Value::Integer(_) => self.number(v, path).map(FieldValue::Number),
            Value::String(s) => match ScalarField::parse(s) {
                Ok(_) => Some(FieldValue::Expr(s.clone())),
                Err(e) => {
                    self.err(path, format!("bad expression `{s}`: {e}"));
                    None
                }
            },
            Value::Table(t) => {
                for k in t.keys() {
                    if k != "csv" && k != "column" {
                        self.err(&format!("{path}.{k}"), "unknown field");
                    }
                }
                let file = t.get("csv").and_then(Value::as_str);
                let column = t.get("column").and_then(Value::as_str);
                match (file, column) {
                    (Some(f), Some(c)) => {
                        self.file_exists(f, &format!("{path}.csv"));
                        Some(FieldValue::Csv {
                            path: f.to_string(),
                            column: c.to_string(),
                        })
                    }
                    _ => {
                        self.err(path, "gridded field needs `csv` and `column` strings");
                        None
                    }
                }
            }
            _ => {
                self.err(path, "expected a number, an expression string or {csv, column}");
                None
            }
        }
    }

    fn vector(&mut self, v: &Value, path: &str) -> Option<[FieldValue; 2]> {
        match v.as_array() {
            Some(a) if a.len() == 2 => {
                let x = self.field(&a[0], &format!("{path}[0]"));
                let y = self.field(&a[1], &format!("{path}[1]"));
                Some([x?, y?])
            }
            _ => {
                self.err(path, "expected two components");
                None
            }
        }
    }

    fn matrix(&mut self, v: &Value, path: &str) -> Option<[[FieldValue; 2]; 2]> {
        match v.as_array() {
            Some(a) if a.len() == 2 => {
                let r0 = self.vector(&a[0], &format!("{path}[0]"));
                let r1 = self.vector(&a[1], &format!("{path}[1]"));
                let (r0, r1) = (r0?, r1?);
                if r0[1] != r1[0] {
                    self.err(path, "matrix must be symmetric");
                    return None;
                }
                Some([r0, r1])
            }
            _ => {
                self.err(path, "expected a 2x2 array");
                None
            }
        }
    }
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, column)
}

impl Scenario {
    /// Reads and validates a scenario file.
    pub fn load(path: &Path) -> Result<Self, ScenarioError> {
        let text = std::fs::read_to_string(path).map_err(|e| ScenarioError::Parse {
            line: 0,
            column: 0,
            message: format!("cannot read {}: {e}", path.display()),
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        Scenario::parse(&text, base)
    }

    /// Parses and validates scenario text; file references resolve against
    /// `base`. Every violated field is reported.
    pub fn parse(text: &str, base: &Path) -> Result<Self, ScenarioError> {
        let doc: Table = text.parse().map_err(|e: toml::de::Error| {
            let (line, column) = e.span().map_or((0, 0), |s| line_col(text, s.start));
            ScenarioError::Parse {
                line,
                column,
                message: e.message().to_string(),
            }
        })?;
        let mut r = Reader { errors: vec![], base };
        for k in doc.keys() {
            if !["metric", "front", "run", "grid", "output"].contains(&k.as_str()) {
                r.err(k, "unknown section");
            }
        }
        let metric = parse_metric(&mut r, &doc);
        let front = parse_front(&mut r, &doc);
        let run = parse_run(&mut r, &doc);
        let grid = parse_grid(&mut r, &doc);
        let output = parse_output(&mut r, &doc);
        if !r.errors.is_empty() {
            return Err(ScenarioError::Validation(r.errors));
        }
        Ok(Scenario {
            metric: metric.expect("no errors"),
            front: front.expect("no errors"),
            run: run.expect("no errors"),
            grid,
            output: output.expect("no errors"),
            base_dir: base.to_path_buf(),
        })
    }
}

const METRIC_KEYS: [&str; 10] = ["kind", "speed", "h", "wind", "omega", "lambda", "g0", "reversed", "spacetime", "bounds"];

/// `None` when absent, `Err` when present but invalid.
fn flat<T>(o: Option<Option<T>>) -> Result<Option<T>, ()> {
    match o {
        None => Ok(None),
        Some(Some(v)) => Ok(Some(v)),
        Some(None) => Err(()),
    }
}

fn parse_metric(r: &mut Reader, doc: &Table) -> Option<MetricSection> {
    let Some(t) = r.table(doc, "metric", &METRIC_KEYS) else {
        if !doc.contains_key("metric") {
            r.err("metric", "missing section");
        }
        return None;
    };
    let kind = match t.get("kind") {
        None => {
            r.err("metric.kind", "missing field");
            None
        }
        Some(v) => r.string(v, "metric.kind").and_then(|s| {
            let k = MetricKindName::ALL.iter().find(|(n, _)| *n == s).map(|(_, k)| *k);
            if k.is_none() {
                let names: Vec<_> = MetricKindName::ALL.iter().map(|(n, _)| *n).collect();
                r.err("metric.kind", format!("unknown kind `{s}` (expected one of {})", names.join(", ")));
            }
            k
        }),
    };
    let mut ok = true;
    if let Some(kind) = kind {
        let (required, optional) = kind.keys();
        for key in ["speed", "h", "wind", "omega", "lambda", "g0"] {
            let present = t.contains_key(key);
            if required.contains(&key) && !present {
                r.err(&format!("metric.{key}"), format!("required for kind `{}`", kind.name()));
                ok = false;
            } else if present && !required.contains(&key) && !optional.contains(&key) {
                r.err(&format!("metric.{key}"), format!("not used by kind `{}`", kind.name()));
                ok = false;
            }
        }
    }
    let get_field = |_: &mut Reader, key: &str| t.get(key).map(|v| (v, format!("metric.{key}")));
    let speed = get_field(r, "speed").map(|(v, p)| r.field(v, &p));
    let lambda = get_field(r, "lambda").map(|(v, p)| r.field(v, &p));
    let h = get_field(r, "h").map(|(v, p)| r.matrix(v, &p));
    let g0 = get_field(r, "g0").map(|(v, p)| r.matrix(v, &p));
    let wind = get_field(r, "wind").map(|(v, p)| r.vector(v, &p));
    let omega = get_field(r, "omega").map(|(v, p)| r.vector(v, &p));
    if let Some(Some(FieldValue::Csv { .. })) = &speed {
        r.err("metric.speed", "speed must be a number or an expression");
        ok = false;
    }
    let reversed = r.boolean(Some(t), "reversed", "metric.reversed", false);
    let spacetime = match t.get("spacetime") {
        None => Some(SpacetimeChoice::Auto),
        Some(v) => match r.string(v, "metric.spacetime") {
            Some("auto") => Some(SpacetimeChoice::Auto),
            Some("lorentz_finsler") => Some(SpacetimeChoice::LorentzFinsler),
            Some("sstk") => Some(SpacetimeChoice::Sstk),
            Some(other) => {
                r.err("metric.spacetime", format!("unknown spacetime `{other}` (auto, lorentz_finsler, sstk)"));
                None
            }
            None => None,
        },
    };
    if spacetime == Some(SpacetimeChoice::Sstk) && !matches!(kind, Some(MetricKindName::Zermelo | MetricKindName::Sstk)) {
        r.err("metric.spacetime", "the quadratic spacetime needs kind `zermelo` or `sstk`");
        ok = false;
    }
    let bounds = match t.get("bounds") {
        None => Some(None),
        Some(v) => match v.as_array() {
            Some(a) if a.len() == 2 => {
                let lo = r.point(&a[0], "metric.bounds[0]");
                let hi = r.point(&a[1], "metric.bounds[1]");
                match (lo, hi) {
                    (Some(lo), Some(hi)) if lo[0] < hi[0] && lo[1] < hi[1] => Some(Some((lo, hi))),
                    (Some(_), Some(_)) => {
                        r.err("metric.bounds", "min corner must be below the max corner");
                        None
                    }
                    _ => None,
                }
            }
            _ => {
                r.err("metric.bounds", "expected [[xmin, ymin], [xmax, ymax]]");
                None
            }
        },
    };
    let (speed, lambda, h, g0, wind, omega) = (flat(speed), flat(lambda), flat(h), flat(g0), flat(wind), flat(omega));
    if !ok {
        return None;
    }
    Some(MetricSection {
        kind: kind?,
        speed: speed.ok()?,
        h: h.ok()?,
        wind: wind.ok()?,
        omega: omega.ok()?,
        lambda: lambda.ok()?,
        g0: g0.ok()?,
        reversed,
        spacetime: spacetime?,
        bounds: bounds?,
    })
}

fn parse_front(r: &mut Reader, doc: &Table) -> Option<FrontSection> {
    let default = FrontSection {
        shape: FrontSpec::Point { center: [0.0, 0.0] },
        side: Side::Outward,
    };
    let Some(t) = r.table(doc, "front", &["shape", "center", "radius", "semi_axes", "points", "file", "side"]) else {
        return doc.get("front").is_none().then_some(default);
    };
    let side = match t.get("side") {
        None => Some(Side::Outward),
        Some(v) => match r.string(v, "front.side") {
            Some("outward") => Some(Side::Outward),
            Some("inward") => Some(Side::Inward),
            Some(other) => {
                r.err("front.side", format!("unknown side `{other}` (outward, inward)"));
                None
            }
            None => None,
        },
    };
    let shape_name = match t.get("shape") {
        None => Some("point"),
        Some(v) => r.string(v, "front.shape"),
    };
    let center = match t.get("center") {
        None => Some([0.0, 0.0]),
        Some(v) => r.point(v, "front.center"),
    };
    let positive = |r: &mut Reader, key: &str| -> Option<f64> {
        let path = format!("front.{key}");
        match t.get(key) {
            None => {
                r.err(&path, "missing field");
                None
            }
            Some(v) => r.number(v, &path).filter(|x| {
                let ok = *x > 0.0;
                if !ok {
                    r.errors.push(ValidationError {
                        path: path.clone(),
                        message: "must be positive".into(),
                    });
                }
                ok
            }),
        }
    };
    let used: &[&str] = match shape_name {
        Some("point") => &["center"],
        Some("circle") => &["center", "radius"],
        Some("ellipse") => &["center", "semi_axes"],
        Some("polyline") => &["points", "file"],
        _ => &["center", "radius", "semi_axes", "points", "file"],
    };
    for key in ["center", "radius", "semi_axes", "points", "file"] {
        if t.contains_key(key) && !used.contains(&key) {
            r.err(&format!("front.{key}"), format!("not used by shape `{}`", shape_name.unwrap_or("?")));
        }
    }
    let shape = match shape_name {
        Some("point") => center.map(|center| FrontSpec::Point { center }),
        Some("circle") => {
            let radius = positive(r, "radius");
            Some(FrontSpec::Circle { center: center?, radius: radius? })
        }
        Some("ellipse") => match t.get("semi_axes") {
            None => {
                r.err("front.semi_axes", "missing field");
                None
            }
            Some(v) => {
                let ax = r.point(v, "front.semi_axes");
                if let Some(a) = ax.filter(|a| !(a[0] > 0.0 && a[1] > 0.0)) {
                    r.err("front.semi_axes", format!("semi-axes must be positive, got {a:?}"));
                    None
                } else {
                    Some(FrontSpec::Ellipse {
                        center: center?,
                        semi_axes: ax?,
                    })
                }
            }
        },
        Some("polyline") => match (t.get("points"), t.get("file")) {
            (Some(v), None) => {
                let pts: Option<Vec<[f64; 2]>> = match v.as_array() {
                    Some(a) if a.len() >= 2 => {
                        let pts: Vec<_> = a.iter().enumerate().map(|(i, p)| r.point(p, &format!("front.points[{i}]"))).collect();
                        pts.into_iter().collect()
                    }
                    _ => {
                        r.err("front.points", "expected at least two [x, y] points");
                        None
                    }
                };
                pts.map(|points| FrontSpec::Polyline { points })
            }
            (None, Some(v)) => r.string(v, "front.file").map(|f| {
                let f = f.to_string();
                r.file_exists(&f, "front.file");
                FrontSpec::PolylineFile { path: f }
            }),
            _ => {
                r.err("front", "polyline needs exactly one of `points` or `file`");
                None
            }
        },
        Some(other) => {
            r.err("front.shape", format!("unknown shape `{other}` (point, circle, ellipse, polyline)"));
            None
        }
        None => None,
    };
    Some(FrontSection { shape: shape?, side: side? })
}

fn parse_run(r: &mut Reader, doc: &Table) -> Option<RunSection> {
    let t = r.table(doc, "run", &["dt", "t_max", "seeds", "slices", "cuts", "renormalize", "drift_tolerance"]);
    let t_max = match t.and_then(|t| t.get("t_max")) {
        None => {
            r.err("run.t_max", "missing field");
            None
        }
        Some(v) => r.number(v, "run.t_max"),
    };
    let t_max = t_max.filter(|v| {
        let ok = *v > 0.0;
        if !ok {
            r.err("run.t_max", "must be positive");
        }
        ok
    });
    let dt = r.opt_number(t, "dt", "run.dt").or(t.and_then(|t| t.get("dt")).is_none().then_some(DEFAULT_DT));
    let dt = dt.filter(|dt| {
        if !(*dt > 0.0) {
            r.err("run.dt", "must be positive");
            return false;
        }
        if let Some(tm) = t_max {
            if *dt > tm / 10.0 {
                r.err("run.dt", format!("dt = {dt} exceeds t_max / 10 = {}", tm / 10.0));
                return false;
            }
        }
        true
    });
    let seeds = match t.and_then(|t| t.get("seeds")) {
        None => Some(DEFAULT_SEEDS),
        Some(Value::Integer(n)) if *n >= 8 && *n <= 1 << 20 => Some(*n as usize),
        Some(_) => {
            r.err("run.seeds", "expected an integer of at least 8");
            None
        }
    };
    let slices = match t.and_then(|t| t.get("slices")) {
        None => t_max.map(|tm| vec![tm]),
        Some(v) => match v.as_array() {
            Some(a) if !a.is_empty() => {
                let vals: Vec<_> = a.iter().enumerate().map(|(i, x)| r.number(x, &format!("run.slices[{i}]"))).collect();
                let vals: Option<Vec<f64>> = vals.into_iter().collect();
                vals.filter(|vals| {
                    let bad = t_max.is_some_and(|tm| vals.iter().any(|s| *s < 0.0 || *s > tm));
                    if bad {
                        r.err("run.slices", "slice times must lie in [0, t_max]");
                    }
                    !bad
                })
            }
            _ => {
                r.err("run.slices", "expected a nonempty array of times");
                None
            }
        },
    };
    let cuts = r.boolean(t, "cuts", "run.cuts", true);
    let renormalize = r.boolean(t, "renormalize", "run.renormalize", true);
    let drift_tolerance = match t.and_then(|t| t.get("drift_tolerance")) {
        None => Some(1e-6),
        Some(v) => r.number(v, "run.drift_tolerance").filter(|x| {
            let ok = *x > 0.0;
            if !ok {
                r.err("run.drift_tolerance", "must be positive");
            }
            ok
        }),
    };
    Some(RunSection {
        dt: dt?,
        t_max: t_max?,
        seeds: seeds?,
        slices: slices?,
        cuts,
        renormalize,
        drift_tolerance: drift_tolerance?,
    })
}

fn parse_grid(r: &mut Reader, doc: &Table) -> Option<GridSection> {
    let t = r.table(doc, "grid", &["min", "max", "nx", "ny"])?;
    let min = t.get("min").and_then(|v| r.point(v, "grid.min"));
    let max = t.get("max").and_then(|v| r.point(v, "grid.max"));
    let count = |r: &mut Reader, key: &str| match t.get(key) {
        Some(Value::Integer(n)) if *n >= 2 && *n <= 100_000 => Some(*n as usize),
        _ => {
            r.err(&format!("grid.{key}"), "expected an integer of at least 2");
            None
        }
    };
    let (nx, ny) = (count(r, "nx"), count(r, "ny"));
    match (min, max) {
        (Some(lo), Some(hi)) if lo[0] < hi[0] && lo[1] < hi[1] => Some(GridSection {
            min: lo,
            max: hi,
            nx: nx?,
            ny: ny?,
        }),
        _ => {
            r.err("grid", "needs `min` and `max` corners with min < max");
            None
        }
    }
}

fn parse_output(r: &mut Reader, doc: &Table) -> Option<OutputSection> {
    let t = r.table(doc, "output", &["directory", "formats"]);
    let directory = match t.and_then(|t| t.get("directory")) {
        None => Some("out".to_string()),
        Some(v) => r.string(v, "output.directory").map(str::to_string),
    };
    let formats = match t.and_then(|t| t.get("formats")) {
        None => Some(vec![Format::Csv, Format::Json]),
        Some(v) => match v.as_array() {
            Some(a) => {
                let mut out = Vec::new();
                let mut ok = true;
                for (i, f) in a.iter().enumerate() {
                    match f.as_str() {
                        Some("csv") => out.push(Format::Csv),
                        Some("json") => out.push(Format::Json),
                        _ => {
                            r.err(&format!("output.formats[{i}]"), "expected \"csv\" or \"json\"");
                            ok = false;
                        }
                    }
                }
                out.dedup();
                ok.then_some(out)
            }
            None => {
                r.err("output.formats", "expected an array");
                None
            }
        },
    };
    Some(OutputSection {
        directory: directory?,
        formats: formats?,
    })
}

fn field_value(f: &FieldValue) -> Value {
    match f {
        FieldValue::Number(x) => Value::Float(*x),
        FieldValue::Expr(s) => Value::String(s.clone()),
        FieldValue::Csv { path, column } => {
            let mut t = Table::new();
            t.insert("csv".into(), Value::String(path.clone()));
            t.insert("column".into(), Value::String(column.clone()));
            Value::Table(t)
        }
    }
}

fn pair(p: [f64; 2]) -> Value {
    Value::Array(vec![Value::Float(p[0]), Value::Float(p[1])])
}

fn vector_value(v: &[FieldValue; 2]) -> Value {
    Value::Array(v.iter().map(field_value).collect())
}

fn matrix_value(m: &[[FieldValue; 2]; 2]) -> Value {
    Value::Array(m.iter().map(vector_value).collect())
}

impl Scenario {
    /// Canonical text form; every default is written out.
    pub fn render(&self) -> String {
        let m = &self.metric;
        let mut metric = Table::new();
        metric.insert("kind".into(), Value::String(m.kind.name().into()));
        let spacetime = match m.spacetime {
            SpacetimeChoice::Auto => "auto",
            SpacetimeChoice::LorentzFinsler => "lorentz_finsler",
            SpacetimeChoice::Sstk => "sstk",
        };
        metric.insert("spacetime".into(), Value::String(spacetime.into()));
        metric.insert("reversed".into(), Value::Boolean(m.reversed));
        if let Some(s) = &m.speed {
            metric.insert("speed".into(), field_value(s));
        }
        if let Some(l) = &m.lambda {
            metric.insert("lambda".into(), field_value(l));
        }
        for (key, mat) in [("h", &m.h), ("g0", &m.g0)] {
            if let Some(mat) = mat {
                metric.insert(key.into(), matrix_value(mat));
            }
        }
        for (key, v) in [("wind", &m.wind), ("omega", &m.omega)] {
            if let Some(v) = v {
                metric.insert(key.into(), vector_value(v));
            }
        }
        if let Some((lo, hi)) = m.bounds {
            metric.insert("bounds".into(), Value::Array(vec![pair(lo), pair(hi)]));
        }
        let mut front = Table::new();
        let (shape, side) = (&self.front.shape, self.front.side);
        let name = match shape {
            FrontSpec::Point { center } => {
                front.insert("center".into(), pair(*center));
                "point"
            }
            FrontSpec::Circle { center, radius } => {
                front.insert("center".into(), pair(*center));
                front.insert("radius".into(), Value::Float(*radius));
                "circle"
            }
            FrontSpec::Ellipse { center, semi_axes } => {
                front.insert("center".into(), pair(*center));
                front.insert("semi_axes".into(), pair(*semi_axes));
                "ellipse"
            }
            FrontSpec::Polyline { points } => {
                front.insert("points".into(), Value::Array(points.iter().map(|p| pair(*p)).collect()));
                "polyline"
            }
            FrontSpec::PolylineFile { path } => {
                front.insert("file".into(), Value::String(path.clone()));
                "polyline"
            }
        };
        front.insert("shape".into(), Value::String(name.into()));
        let side = match side {
            Side::Outward => "outward",
            Side::Inward => "inward",
        };
        front.insert("side".into(), Value::String(side.into()));
        let r = &self.run;
        let mut run = Table::new();
        run.insert("dt".into(), Value::Float(r.dt));
        run.insert("t_max".into(), Value::Float(r.t_max));
        run.insert("seeds".into(), Value::Integer(r.seeds as i64));
        run.insert("slices".into(), Value::Array(r.slices.iter().map(|s| Value::Float(*s)).collect()));
        run.insert("cuts".into(), Value::Boolean(r.cuts));
        run.insert("renormalize".into(), Value::Boolean(r.renormalize));
        run.insert("drift_tolerance".into(), Value::Float(r.drift_tolerance));
        let mut output = Table::new();
        output.insert("directory".into(), Value::String(self.output.directory.clone()));
        let formats = self
            .output
            .formats
            .iter()
            .map(|f| Value::String(if *f == Format::Csv { "csv" } else { "json" }.into()))
            .collect();
        output.insert("formats".into(), Value::Array(formats));
        let mut doc = Table::new();
        doc.insert("metric".into(), Value::Table(metric));
        doc.insert("front".into(), Value::Table(front));
        doc.insert("run".into(), Value::Table(run));
        if let Some(g) = &self.grid {
            let mut grid = Table::new();
            grid.insert("min".into(), pair(g.min));
            grid.insert("max".into(), pair(g.max));
            grid.insert("nx".into(), Value::Integer(g.nx as i64));
            grid.insert("ny".into(), Value::Integer(g.ny as i64));
            doc.insert("grid".into(), Value::Table(grid));
        }
        doc.insert("output".into(), Value::Table(output));
        toml::to_string(&doc).expect("tables always serialize")
    }
}

/// Failure to turn a validated scenario into engine objects.
#[derive(Debug, thiserror::Error)]
pub enum BuildError {
    #[error("{path}: {message}")]
    Field { path: String, message: String },
    #[error(transparent)]
    Engine(#[from] windfront_core::Error),
}

fn field_err(path: &str, message: impl Into<String>) -> BuildError {
    BuildError::Field {
        path: path.into(),
        message: message.into(),
    }
}

impl Scenario {
    fn scalar(&self, f: &FieldValue, path: &str) -> Result<ScalarField, BuildError> {
        match f {
            FieldValue::Number(x) => Ok(ScalarField::Const(*x)),
            FieldValue::Expr(s) => ScalarField::parse(s).map_err(|e| field_err(path, e.to_string())),
            FieldValue::Csv { path: file, column } => {
                let full = self.base_dir.join(file);
                let text = std::fs::read_to_string(&full).map_err(|e| field_err(path, format!("{}: {e}", full.display())))?;
                let header = text.lines().next().unwrap_or("");
                let cols: Vec<&str> = header.split(',').map(str::trim).collect();
                let component = cols
                    .iter()
                    .skip(3)
                    .position(|c| c == column)
                    .ok_or_else(|| field_err(path, format!("column `{column}` not found in {file}")))?;
                let grid = RegularGrid::from_csv(&text).map_err(|e| field_err(path, e.to_string()))?;
                Ok(ScalarField::Grid {
                    grid: Arc::new(grid),
                    component,
                })
            }
        }
    }

    fn sym(&self, m: &[[FieldValue; 2]; 2], path: &str) -> Result<SymField, BuildError> {
        let mut rows = Vec::new();
        for (i, row) in m.iter().enumerate() {
            let mut out = Vec::new();
            for (j, f) in row.iter().enumerate() {
                out.push(self.scalar(f, &format!("{path}[{i}][{j}]"))?);
            }
            rows.push(out);
        }
        Ok(SymField::from_rows(rows)?)
    }

    fn vector(&self, v: &[FieldValue; 2], path: &str) -> Result<VectorField, BuildError> {
        Ok(VectorField::new(vec![
            self.scalar(&v[0], &format!("{path}[0]"))?,
            self.scalar(&v[1], &format!("{path}[1]"))?,
        ]))
    }

    fn sstk(&self) -> Result<Option<SstkMetric>, BuildError> {
        let m = &self.metric;
        let s = match m.kind {
            MetricKindName::Zermelo => Some(windfront_core::sstk_from_zermelo(&self.navigation()?)),
            MetricKindName::Sstk => Some(SstkMetric::new(
                self.scalar(m.lambda.as_ref().unwrap(), "metric.lambda")?,
                self.vector(m.omega.as_ref().unwrap(), "metric.omega")?,
                self.sym(m.g0.as_ref().unwrap(), "metric.g0")?,
            )?),
            _ => None,
        };
        Ok(s.map(|s| if m.reversed { s.reversed() } else { s }))
    }

    fn navigation(&self) -> Result<NavigationData, BuildError> {
        let m = &self.metric;
        let h = match &m.h {
            Some(h) => self.sym(h, "metric.h")?,
            None => SymField::identity(2),
        };
        Ok(NavigationData::new(h, self.vector(m.wind.as_ref().unwrap(), "metric.wind")?)?)
    }

    /// The Finsler metric measuring travel time.
    pub fn metric_spec(&self) -> Result<FinslerMetricSpec, BuildError> {
        let m = &self.metric;
        let spec = match m.kind {
            MetricKindName::Isotropic => match m.speed.as_ref().unwrap() {
                FieldValue::Number(c) => FinslerMetricSpec::isotropic(2, *c),
                FieldValue::Expr(s) => FinslerMetricSpec::riemannian(SymField::conformal(
                    2,
                    ScalarField::parse(&format!("1/(({s})^2)")).map_err(|e| field_err("metric.speed", e.to_string()))?,
                )),
                FieldValue::Csv { .. } => return Err(field_err("metric.speed", "gridded speed is not supported")),
            },
            MetricKindName::Riemannian => FinslerMetricSpec::riemannian(self.sym(m.h.as_ref().unwrap(), "metric.h")?),
            MetricKindName::Randers => FinslerMetricSpec::randers(
                self.sym(m.h.as_ref().unwrap(), "metric.h")?,
                self.vector(m.omega.as_ref().unwrap(), "metric.omega")?,
            )?,
            MetricKindName::Kropina => FinslerMetricSpec::kropina(
                self.sym(m.h.as_ref().unwrap(), "metric.h")?,
                self.vector(m.omega.as_ref().unwrap(), "metric.omega")?,
            )?,
            MetricKindName::Zermelo => FinslerMetricSpec::zermelo(self.navigation()?),
            MetricKindName::Sstk => {
                let s = self.sstk()?.expect("sstk kind");
                // `sstk()` already applied the reversal.
                return Ok(windfront_core::fermat_from_sstk(&s)?);
            }
        };
        Ok(if m.reversed { spec.reversed() } else { spec })
    }

    /// Region trajectories must stay in: where the fields are defined,
    /// clipped to `metric.bounds`.
    pub fn domain(&self) -> Result<Bounds, BuildError> {
        let b = self.spacetime()?.bounds();
        Ok(match self.metric.bounds {
            Some((lo, hi)) => b.intersect(&Bounds::new(&lo, &hi)),
            None => b,
        })
    }

    pub fn spacetime(&self) -> Result<SpacetimeMetric, BuildError> {
        match self.metric.spacetime {
            SpacetimeChoice::LorentzFinsler => Ok(SpacetimeMetric::LorentzFinsler(self.metric_spec()?)),
            SpacetimeChoice::Sstk | SpacetimeChoice::Auto => match self.sstk()? {
                Some(s) => Ok(SpacetimeMetric::Sstk(s)),
                None => Ok(SpacetimeMetric::LorentzFinsler(self.metric_spec()?)),
            },
        }
    }

    pub fn initial_front(&self) -> Result<InitialFront, BuildError> {
        let n = self.run.seeds;
        Ok(match &self.front.shape {
            FrontSpec::Point { center } => InitialFront::point(*center, n)?,
            FrontSpec::Circle { center, radius } => InitialFront::circle(*center, *radius, n)?,
            FrontSpec::Ellipse { center, semi_axes } => InitialFront::ellipse(*center, semi_axes[0], semi_axes[1], n)?,
            FrontSpec::Polyline { points } => InitialFront::polyline(points.clone(), n)?,
            FrontSpec::PolylineFile { path } => InitialFront::polyline(read_points(&self.base_dir.join(path))?, n)?,
        })
    }

    pub fn integrator_params(&self) -> Result<IntegratorParams, BuildError> {
        Ok(IntegratorParams {
            dt: self.run.dt,
            t_max: self.run.t_max,
            renormalize_null: self.run.renormalize,
            drift_tolerance: self.run.drift_tolerance,
            bounds: self.domain()?,
        })
    }

    pub fn nav_options(&self) -> NavOptions {
        NavOptions {
            seeds: self.run.seeds,
            dt: self.run.dt,
            ..Default::default()
        }
    }
}

/// Points of a CSV file with header `x,y`.
fn read_points(path: &Path) -> Result<Vec<[f64; 2]>, BuildError> {
    let p = path.display().to_string();
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| field_err("front.file", format!("{p}: {e}")))?;
    let header = reader.headers().map_err(|e| field_err("front.file", e.to_string()))?.clone();
    if header.iter().take(2).collect::<Vec<_>>() != ["x", "y"] {
        return Err(field_err("front.file", format!("{p}: header must start with x,y")));
    }
    let mut out = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| field_err("front.file", e.to_string()))?;
        let num = |k: usize| -> Result<f64, BuildError> {
            rec.get(k)
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| field_err("front.file", format!("{p}: bad number on row {}", i + 2)))
        };
        out.push([num(0)?, num(1)?]);
    }
    Ok(out)
}
