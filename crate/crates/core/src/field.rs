//! Scalar, vector and symmetric-tensor fields on `R x R^n`.
//!
//! A field is a closed-form expression, a constant, a regular grid with
//! bilinear (space) by linear (time) interpolation, or an arbitrary closure.
//! Every field can be evaluated on a [`Jet`] to get its time and space
//! gradient: exactly for expressions, by finite differences otherwise
//! (4th-order central in space, 2nd-order central in time).

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::jet::{Jet, Real, JET_SLOTS};

/// Largest supported spatial dimension.
pub const MAX_DIM: usize = 3;

/// Axis-aligned box in space; points outside count as leaving the domain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bounds {
    pub min: [f64; MAX_DIM],
    pub max: [f64; MAX_DIM],
}

impl Bounds {
    pub fn new(min: &[f64], max: &[f64]) -> Self {
        let mut b = Bounds {
            min: [f64::NEG_INFINITY; MAX_DIM],
            max: [f64::INFINITY; MAX_DIM],
        };
        b.min[..min.len()].copy_from_slice(min);
        b.max[..max.len()].copy_from_slice(max);
        b
    }

    pub fn unbounded() -> Self {
        Bounds::new(&[], &[])
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .enumerate()
            .all(|(i, v)| *v >= self.min[i] && *v <= self.max[i])
    }

    pub fn intersect(&self, other: &Bounds) -> Bounds {
        let mut b = *self;
        for i in 0..MAX_DIM {
            b.min[i] = b.min[i].max(other.min[i]);
            b.max[i] = b.max[i].min(other.max[i]);
        }
        b
    }
}

/// Samples on a regular 2-D grid, possibly over several time levels.
#[derive(Debug, Clone, PartialEq)]
pub struct RegularGrid {
    xs: Vec<f64>,
    ys: Vec<f64>,
    ts: Vec<f64>,
    components: usize,
    data: Vec<f64>,
}

fn axis_from(values: &mut Vec<f64>) -> Vec<f64> {
    values.sort_by(|a, b| a.total_cmp(b));
    values.dedup();
    values.clone()
}

impl RegularGrid {
    /// Builds a grid from scattered rows `(x, y, t, values..)` that must cover
    /// every node of the tensor-product grid exactly once.
    pub fn from_rows(rows: &[Vec<f64>], components: usize) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::InvalidInput("grid has no rows".into()));
        }
        let mut xs: Vec<f64> = rows.iter().map(|r| r[0]).collect();
        let mut ys: Vec<f64> = rows.iter().map(|r| r[1]).collect();
        let mut ts: Vec<f64> = rows.iter().map(|r| r[2]).collect();
        let (xs, ys, ts) = (axis_from(&mut xs), axis_from(&mut ys), axis_from(&mut ts));
        if xs.len() < 2 || ys.len() < 2 {
            return Err(Error::InvalidInput("grid needs at least two nodes per axis".into()));
        }
        let n = xs.len() * ys.len() * ts.len();
        if rows.len() != n {
            return Err(Error::InvalidInput(format!(
                "grid is not a full tensor product: {} rows for {}x{}x{} nodes",
                rows.len(),
                xs.len(),
                ys.len(),
                ts.len()
            )));
        }
        let mut data = vec![f64::NAN; n * components];
        let find = |axis: &[f64], v: f64| axis.binary_search_by(|a| a.total_cmp(&v)).unwrap();
        for r in rows {
            if r.len() != 3 + components {
                return Err(Error::InvalidInput("grid row has the wrong number of columns".into()));
            }
            let (ix, iy, it) = (find(&xs, r[0]), find(&ys, r[1]), find(&ts, r[2]));
            let base = ((it * ys.len() + iy) * xs.len() + ix) * components;
            if !data[base].is_nan() {
                return Err(Error::InvalidInput(format!(
                    "duplicate grid node ({}, {}, {})",
                    r[0], r[1], r[2]
                )));
            }
            data[base..base + components].copy_from_slice(&r[3..]);
        }
        Ok(RegularGrid {
            xs,
            ys,
            ts,
            components,
            data,
        })
    }

    /// Parses a CSV table whose header starts with `x,y,t` followed by the
    /// value columns.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let header = reader
            .headers()
            .map_err(|e| Error::InvalidInput(e.to_string()))?
            .clone();
        let cols: Vec<&str> = header.iter().collect();
        if cols.len() < 4 || cols[..3] != ["x", "y", "t"] {
            return Err(Error::InvalidInput(format!(
                "grid header must start with x,y,t (got {})",
                cols.join(",")
            )));
        }
        let mut rows = Vec::new();
        for (line, rec) in reader.records().enumerate() {
            let rec = rec.map_err(|e| Error::InvalidInput(e.to_string()))?;
            let row: std::result::Result<Vec<f64>, _> = rec.iter().map(str::parse::<f64>).collect();
            let row = row.map_err(|e| Error::InvalidInput(format!("row {}: {e}", line + 2)))?;
            rows.push(row);
        }
        RegularGrid::from_rows(&rows, cols.len() - 3)
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn is_time_dependent(&self) -> bool {
        self.ts.len() > 1
    }

    pub fn bounds(&self) -> Bounds {
        Bounds::new(
            &[self.xs[0], self.ys[0]],
            &[*self.xs.last().unwrap(), *self.ys.last().unwrap()],
        )
    }

    fn locate(axis: &[f64], v: f64) -> (usize, f64) {
        let n = axis.len();
        if n == 1 {
            return (0, 0.0);
        }
        let v = v.clamp(axis[0], axis[n - 1]);
        let i = match axis.binary_search_by(|a| a.total_cmp(&v)) {
            Ok(i) => i.min(n - 2),
            Err(i) => i.saturating_sub(1).min(n - 2),
        };
        (i, (v - axis[i]) / (axis[i + 1] - axis[i]))
    }

    fn node(&self, ix: usize, iy: usize, it: usize, c: usize) -> f64 {
        self.data[((it * self.ys.len() + iy) * self.xs.len() + ix) * self.components + c]
    }

    /// Interpolated value, clamped to the grid extent.
    pub fn value(&self, c: usize, t: f64, x: &[f64]) -> f64 {
        let (ix, fx) = Self::locate(&self.xs, x[0]);
        let (iy, fy) = Self::locate(&self.ys, x.get(1).copied().unwrap_or(0.0));
        let (it, ft) = Self::locate(&self.ts, t);
        let slab = |it: usize| {
            let a = self.node(ix, iy, it, c) * (1.0 - fx) + self.node(ix + 1, iy, it, c) * fx;
            let b = self.node(ix, iy + 1, it, c) * (1.0 - fx) + self.node(ix + 1, iy + 1, it, c) * fx;
            a * (1.0 - fy) + b * fy
        };
        if self.ts.len() == 1 {
            slab(0)
        } else {
            slab(it) * (1.0 - ft) + slab(it + 1) * ft
        }
    }

    fn min_spacing(axis: &[f64]) -> f64 {
        axis.windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::INFINITY, f64::min)
    }

    fn space_step(&self) -> f64 {
        0.25 * Self::min_spacing(&self.xs).min(Self::min_spacing(&self.ys))
    }

    fn time_step(&self) -> Option<f64> {
        (self.ts.len() > 1).then(|| 0.25 * Self::min_spacing(&self.ts))
    }
}

type CustomFn = dyn Fn(f64, &[f64]) -> f64 + Send + Sync;

/// A scalar field on `R x R^n`.
#[derive(Clone)]
pub enum ScalarField {
    Const(f64),
    Expr(Arc<Expr>),
    Grid { grid: Arc<RegularGrid>, component: usize },
    Custom(Arc<CustomFn>),
}

impl fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScalarField::Const(v) => write!(f, "Const({v})"),
            ScalarField::Expr(e) => write!(f, "Expr({:?})", e.source()),
            ScalarField::Grid { component, .. } => write!(f, "Grid(component {component})"),
            ScalarField::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

impl From<f64> for ScalarField {
    fn from(v: f64) -> Self {
        ScalarField::Const(v)
    }
}

impl ScalarField {
    /// Parses an expression, collapsing constant expressions.
    pub fn parse(src: &str) -> std::result::Result<Self, crate::expr::ExprError> {
        let e = Expr::parse(src)?;
        Ok(match e.as_constant() {
            Some(v) => ScalarField::Const(v),
            None => ScalarField::Expr(Arc::new(e)),
        })
    }

    pub fn custom(f: impl Fn(f64, &[f64]) -> f64 + Send + Sync + 'static) -> Self {
        ScalarField::Custom(Arc::new(f))
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, ScalarField::Const(_))
    }

    pub fn as_constant(&self) -> Option<f64> {
        match self {
            ScalarField::Const(v) => Some(*v),
            _ => None,
        }
    }

    /// Conservative: custom closures are assumed to depend on time.
    pub fn is_time_dependent(&self) -> bool {
        match self {
            ScalarField::Const(_) => false,
            ScalarField::Expr(e) => e.uses_time(),
            ScalarField::Grid { grid, .. } => grid.is_time_dependent(),
            ScalarField::Custom(_) => true,
        }
    }

    pub fn bounds(&self) -> Bounds {
        match self {
            ScalarField::Grid { grid, .. } => grid.bounds(),
            _ => Bounds::unbounded(),
        }
    }

    pub fn value(&self, t: f64, x: &[f64]) -> f64 {
        match self {
            ScalarField::Const(v) => *v,
            ScalarField::Expr(e) => e.eval(t, x),
            ScalarField::Grid { grid, component } => grid.value(*component, t, x),
            ScalarField::Custom(f) => f(t, x),
        }
    }

    /// Value with its gradient in slots `(t, x1, .., xn)`.
    pub fn jet(&self, t: f64, x: &[f64]) -> Jet {
        match self {
            ScalarField::Const(v) => Jet::cst(*v),
            ScalarField::Expr(e) => {
                let mut xs = [Jet::cst(0.0); MAX_DIM];
                for (i, v) in x.iter().enumerate() {
                    xs[i] = Jet::variable(*v, i + 1);
                }
                e.eval(Jet::variable(t, 0), &xs[..x.len()])
            }
            ScalarField::Grid { grid, component } => {
                let f = |t: f64, x: &[f64]| grid.value(*component, t, x);
                fd_jet(&f, t, x, grid.space_step(), grid.time_step())
            }
            ScalarField::Custom(f) => fd_jet(&**f, t, x, 1e-3, Some(1e-4)),
        }
    }

    pub fn eval<S: FieldScalar>(&self, t: f64, x: &[f64]) -> S {
        S::from_field(self, t, x)
    }
}

/// Scalars a field can be sampled into.
pub trait FieldScalar: Real {
    /// Whether position and time derivatives are carried.
    const DIFFERENTIAL: bool;
    fn from_field(field: &ScalarField, t: f64, x: &[f64]) -> Self;
    fn from_jet(j: Jet) -> Self;
}

impl FieldScalar for f64 {
    const DIFFERENTIAL: bool = false;
    #[inline]
    fn from_jet(j: Jet) -> Self {
        j.re
    }
    #[inline]
    fn from_field(field: &ScalarField, t: f64, x: &[f64]) -> Self {
        field.value(t, x)
    }
}

impl FieldScalar for Jet {
    const DIFFERENTIAL: bool = true;
    #[inline]
    fn from_jet(j: Jet) -> Self {
        j
    }
    #[inline]
    fn from_field(field: &ScalarField, t: f64, x: &[f64]) -> Self {
        field.jet(t, x)
    }
}

fn fd_jet(f: &dyn Fn(f64, &[f64]) -> f64, t: f64, x: &[f64], h: f64, ht: Option<f64>) -> Jet {
    let mut du = [0.0; JET_SLOTS];
    let mut p = [0.0; MAX_DIM];
    p[..x.len()].copy_from_slice(x);
    let n = x.len();
    for i in 0..n {
        let at = |d: f64| {
            let mut q = p;
            q[i] += d;
            f(t, &q[..n])
        };
        du[i + 1] = (-at(2.0 * h) + 8.0 * at(h) - 8.0 * at(-h) + at(-2.0 * h)) / (12.0 * h);
    }
    if let Some(ht) = ht {
        du[0] = (f(t + ht, x) - f(t - ht, x)) / (2.0 * ht);
    }
    Jet::new(f(t, x), du)
}

/// A vector (or one-form) field given by its components.
#[derive(Debug, Clone)]
pub struct VectorField {
    pub components: Vec<ScalarField>,
}

impl VectorField {
    pub fn new(components: Vec<ScalarField>) -> Self {
        VectorField { components }
    }

    pub fn constant(v: &[f64]) -> Self {
        VectorField::new(v.iter().map(|c| ScalarField::Const(*c)).collect())
    }

    pub fn zero(dim: usize) -> Self {
        VectorField::constant(&vec![0.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn is_constant(&self) -> bool {
        self.components.iter().all(ScalarField::is_constant)
    }

    pub fn is_time_dependent(&self) -> bool {
        self.components.iter().any(ScalarField::is_time_dependent)
    }

    pub fn bounds(&self) -> Bounds {
        self.components
            .iter()
            .fold(Bounds::unbounded(), |b, c| b.intersect(&c.bounds()))
    }

    pub fn at<S: FieldScalar>(&self, t: f64, x: &[f64]) -> [S; MAX_DIM] {
        let mut out = [S::cst(0.0); MAX_DIM];
        for (o, c) in out.iter_mut().zip(&self.components) {
            *o = c.eval(t, x);
        }
        out
    }
}

/// A symmetric bilinear-form field; stores the upper triangle row by row.
#[derive(Debug, Clone)]
pub struct SymField {
    dim: usize,
    entries: Vec<ScalarField>,
}

impl SymField {
    /// `rows` must be square and symmetric in the sense that only the upper
    /// triangle is read.
    pub fn from_rows(rows: Vec<Vec<ScalarField>>) -> Result<Self> {
        let dim = rows.len();
        if dim == 0 || dim > MAX_DIM || rows.iter().any(|r| r.len() != dim) {
            return Err(Error::InvalidInput(format!(
                "bilinear form must be square with dimension 1..={MAX_DIM}"
            )));
        }
        let mut entries = Vec::with_capacity(dim * (dim + 1) / 2);
        for (i, row) in rows.into_iter().enumerate() {
            entries.extend(row.into_iter().skip(i));
        }
        Ok(SymField { dim, entries })
    }

    pub fn constant(m: &[&[f64]]) -> Self {
        let rows = m
            .iter()
            .map(|r| r.iter().map(|v| ScalarField::Const(*v)).collect())
            .collect();
        SymField::from_rows(rows).expect("constant bilinear form")
    }

    pub fn identity(dim: usize) -> Self {
        let rows = (0..dim)
            .map(|i| (0..dim).map(|j| ScalarField::Const(if i == j { 1.0 } else { 0.0 })).collect())
            .collect();
        SymField::from_rows(rows).expect("identity")
    }

    /// `c * identity` with `c` any scalar field.
    pub fn conformal(dim: usize, c: ScalarField) -> Self {
        let rows = (0..dim)
            .map(|i| {
                (0..dim)
                    .map(|j| if i == j { c.clone() } else { ScalarField::Const(0.0) })
                    .collect()
            })
            .collect();
        SymField::from_rows(rows).expect("conformal")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn index(&self, i: usize, j: usize) -> usize {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        i * self.dim - i * (i + 1) / 2 + j
    }

    pub fn entry(&self, i: usize, j: usize) -> &ScalarField {
        &self.entries[self.index(i, j)]
    }

    pub fn is_constant(&self) -> bool {
        self.entries.iter().all(ScalarField::is_constant)
    }

    pub fn is_time_dependent(&self) -> bool {
        self.entries.iter().any(ScalarField::is_time_dependent)
    }

    pub fn bounds(&self) -> Bounds {
        self.entries
            .iter()
            .fold(Bounds::unbounded(), |b, c| b.intersect(&c.bounds()))
    }

    pub fn at<S: FieldScalar>(&self, t: f64, x: &[f64]) -> [[S; MAX_DIM]; MAX_DIM] {
        let mut out = [[S::cst(0.0); MAX_DIM]; MAX_DIM];
        for i in 0..self.dim {
            for j in i..self.dim {
                let v: S = self.entry(i, j).eval(t, x);
                out[i][j] = v;
                out[j][i] = v;
            }
        }
        out
    }
}
