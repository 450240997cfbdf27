//! Closed-form field expressions.
//!
//! Grammar: numbers, the variables `x`, `y`, `z`, `t`, the constant `pi`,
//! binary `+ - * / ^` (with `^` right-associative and binding tighter than
//! unary minus), parentheses and the functions `sin`, `cos`, `exp`, `sqrt`,
//! `min`, `max`.

use std::fmt;

use crate::jet::Real;

#[derive(Debug, Clone, PartialEq)]
pub struct ExprError {
    pub message: String,
    /// 1-based character column in the source text.
    pub column: usize,
}

impl fmt::Display for ExprError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (column {})", self.message, self.column)
    }
}

impl std::error::Error for ExprError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Var {
    T,
    X(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Func {
    Sin,
    Cos,
    Exp,
    Sqrt,
    Min,
    Max,
}

impl Func {
    fn lookup(name: &str) -> Option<(Func, usize)> {
        Some(match name {
            "sin" => (Func::Sin, 1),
            "cos" => (Func::Cos, 1),
            "exp" => (Func::Exp, 1),
            "sqrt" => (Func::Sqrt, 1),
            "min" => (Func::Min, 2),
            "max" => (Func::Max, 2),
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Num(f64),
    Var(Var),
    Neg(Box<Node>),
    Bin(BinOp, Box<Node>, Box<Node>),
    Call(Func, Vec<Node>),
}

/// A parsed expression in `t` and the spatial coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    source: String,
    root: Node,
}

impl Expr {
    pub fn parse(source: &str) -> Result<Expr, ExprError> {
        let tokens = tokenize(source)?;
        let mut p = Parser { tokens, pos: 0 };
        let root = p.expr()?;
        if let Some(tok) = p.tokens.get(p.pos) {
            return Err(ExprError {
                message: format!("unexpected '{}'", tok.text),
                column: tok.column,
            });
        }
        Ok(Expr {
            source: source.trim().to_string(),
            root: fold(root),
        })
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    /// The value when the expression reduces to a constant.
    pub fn as_constant(&self) -> Option<f64> {
        match self.root {
            Node::Num(v) => Some(v),
            _ => None,
        }
    }

    pub fn uses_time(&self) -> bool {
        uses(&self.root, Var::T)
    }

    /// Highest spatial coordinate index referenced, if any.
    pub fn max_spatial_index(&self) -> Option<usize> {
        fn walk(n: &Node, best: &mut Option<usize>) {
            match n {
                Node::Var(Var::X(i)) => *best = Some(best.map_or(*i, |b| b.max(*i))),
                Node::Neg(a) => walk(a, best),
                Node::Bin(_, a, b) => {
                    walk(a, best);
                    walk(b, best);
                }
                Node::Call(_, args) => args.iter().for_each(|a| walk(a, best)),
                _ => {}
            }
        }
        let mut best = None;
        walk(&self.root, &mut best);
        best
    }

    pub fn eval<S: Real>(&self, t: S, x: &[S]) -> S {
        eval(&self.root, t, x)
    }
}

fn uses(n: &Node, v: Var) -> bool {
    match n {
        Node::Var(w) => *w == v,
        Node::Neg(a) => uses(a, v),
        Node::Bin(_, a, b) => uses(a, v) || uses(b, v),
        Node::Call(_, args) => args.iter().any(|a| uses(a, v)),
        Node::Num(_) => false,
    }
}

fn eval<S: Real>(n: &Node, t: S, x: &[S]) -> S {
    match n {
        Node::Num(v) => S::cst(*v),
        Node::Var(Var::T) => t,
        Node::Var(Var::X(i)) => x.get(*i).copied().unwrap_or(S::cst(0.0)),
        Node::Neg(a) => -eval(a, t, x),
        Node::Bin(op, a, b) => {
            let (a, b) = (eval(a, t, x), eval(b, t, x));
            match op {
                BinOp::Add => a + b,
                BinOp::Sub => a - b,
                BinOp::Mul => a * b,
                BinOp::Div => a / b,
                BinOp::Pow => a.powf(b),
            }
        }
        Node::Call(f, args) => {
            let a = eval(&args[0], t, x);
            match f {
                Func::Sin => a.sin(),
                Func::Cos => a.cos(),
                Func::Exp => a.exp(),
                Func::Sqrt => a.sqrt(),
                Func::Min => a.min(eval(&args[1], t, x)),
                Func::Max => a.max(eval(&args[1], t, x)),
            }
        }
    }
}

fn fold(n: Node) -> Node {
    match n {
        Node::Neg(a) => match fold(*a) {
            Node::Num(v) => Node::Num(-v),
            a => Node::Neg(Box::new(a)),
        },
        Node::Bin(op, a, b) => {
            let (a, b) = (fold(*a), fold(*b));
            if let (Node::Num(x), Node::Num(y)) = (&a, &b) {
                let node = Node::Bin(op, Box::new(Node::Num(*x)), Box::new(Node::Num(*y)));
                return Node::Num(eval::<f64>(&node, 0.0, &[]));
            }
            Node::Bin(op, Box::new(a), Box::new(b))
        }
        Node::Call(f, args) => {
            let args: Vec<Node> = args.into_iter().map(fold).collect();
            if args.iter().all(|a| matches!(a, Node::Num(_))) {
                return Node::Num(eval::<f64>(&Node::Call(f, args), 0.0, &[]));
            }
            Node::Call(f, args)
        }
        n => n,
    }
}

#[derive(Debug, Clone)]
struct Token {
    text: String,
    column: usize,
}

fn tokenize(src: &str) -> Result<Vec<Token>, ExprError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let column = i + 1;
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    i = j;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            out.push(Token {
                text: chars[start..i].iter().collect(),
                column,
            });
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push(Token {
                text: chars[start..i].iter().collect(),
                column,
            });
        } else if "+-*/^(),".contains(c) {
            out.push(Token {
                text: c.to_string(),
                column,
            });
            i += 1;
        } else {
            return Err(ExprError {
                message: format!("unexpected character '{c}'"),
                column,
            });
        }
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&str> {
        self.tokens.get(self.pos).map(|t| t.text.as_str())
    }

    fn column(&self) -> usize {
        self.tokens
            .get(self.pos)
            .map(|t| t.column)
            .or_else(|| self.tokens.last().map(|t| t.column + t.text.len()))
            .unwrap_or(1)
    }

    fn fail<T>(&self, message: impl Into<String>) -> Result<T, ExprError> {
        Err(ExprError {
            message: message.into(),
            column: self.column(),
        })
    }

    fn expect(&mut self, s: &str) -> Result<(), ExprError> {
        if self.peek() == Some(s) {
            self.pos += 1;
            Ok(())
        } else {
            self.fail(format!("expected '{s}'"))
        }
    }

    fn expr(&mut self) -> Result<Node, ExprError> {
        let mut lhs = self.term()?;
        while let Some(op) = self.peek() {
            let op = match op {
                "+" => BinOp::Add,
                "-" => BinOp::Sub,
                _ => break,
            };
            self.pos += 1;
            let rhs = self.term()?;
            lhs = Node::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Node, ExprError> {
        let mut lhs = self.unary()?;
        while let Some(op) = self.peek() {
            let op = match op {
                "*" => BinOp::Mul,
                "/" => BinOp::Div,
                _ => break,
            };
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = Node::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Node, ExprError> {
        match self.peek() {
            Some("-") => {
                self.pos += 1;
                Ok(Node::Neg(Box::new(self.unary()?)))
            }
            Some("+") => {
                self.pos += 1;
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Node, ExprError> {
        let base = self.atom()?;
        if self.peek() == Some("^") {
            self.pos += 1;
            let exp = self.unary()?;
            return Ok(Node::Bin(BinOp::Pow, Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Node, ExprError> {
        let Some(tok) = self.tokens.get(self.pos).cloned() else {
            return self.fail("unexpected end of expression");
        };
        let first = tok.text.chars().next().unwrap_or(' ');
        if first.is_ascii_digit() || first == '.' {
            self.pos += 1;
            return tok.text.parse::<f64>().map(Node::Num).map_err(|_| ExprError {
                message: format!("invalid number '{}'", tok.text),
                column: tok.column,
            });
        }
        if tok.text == "(" {
            self.pos += 1;
            let e = self.expr()?;
            self.expect(")")?;
            return Ok(e);
        }
        if first.is_ascii_alphabetic() || first == '_' {
            self.pos += 1;
            let var = match tok.text.as_str() {
                "t" => Some(Node::Var(Var::T)),
                "x" => Some(Node::Var(Var::X(0))),
                "y" => Some(Node::Var(Var::X(1))),
                "z" => Some(Node::Var(Var::X(2))),
                "pi" => Some(Node::Num(std::f64::consts::PI)),
                _ => None,
            };
            if let Some(v) = var {
                return Ok(v);
            }
            let Some((func, arity)) = Func::lookup(&tok.text) else {
                return Err(ExprError {
                    message: format!("unknown identifier '{}'", tok.text),
                    column: tok.column,
                });
            };
            self.expect("(")?;
            let mut args = vec![self.expr()?];
            while self.peek() == Some(",") {
                self.pos += 1;
                args.push(self.expr()?);
            }
            self.expect(")")?;
            if args.len() != arity {
                return Err(ExprError {
                    message: format!("{} takes {} argument(s), got {}", tok.text, arity, args.len()),
                    column: tok.column,
                });
            }
            return Ok(Node::Call(func, args));
        }
        self.fail(format!("unexpected '{}'", tok.text))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jet::Jet;

    fn ev(s: &str, t: f64, x: &[f64]) -> f64 {
        Expr::parse(s).unwrap().eval(t, x)
    }

    #[test]
    fn precedence_and_associativity() {
        assert_eq!(ev("1 + 2 * 3", 0.0, &[]), 7.0);
        assert_eq!(ev("2 ^ 3 ^ 2", 0.0, &[]), 512.0);
        assert_eq!(ev("-2 ^ 2", 0.0, &[]), -4.0);
        assert_eq!(ev("(1 - 2) - 3", 0.0, &[]), -4.0);
        assert_eq!(ev("8 / 4 / 2", 0.0, &[]), 1.0);
        assert_eq!(ev("2^-1", 0.0, &[]), 0.5);
    }

    #[test]
    fn variables_and_functions() {
        let v = ev("0.2*y + sin(t) - max(x, 1) + sqrt(4)", 0.5, &[3.0, 2.0]);
        assert!((v - (0.4 + 0.5f64.sin() - 3.0 + 2.0)).abs() < 1e-15);
        assert!((ev("1e-3 * 2.5E2", 0.0, &[]) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn constant_folding() {
        let e = Expr::parse("2 * (3 + pi) - cos(0)").unwrap();
        assert!((e.as_constant().unwrap() - (2.0 * (3.0 + std::f64::consts::PI) - 1.0)).abs() < 1e-15);
        assert!(Expr::parse("0.2 * y").unwrap().as_constant().is_none());
        assert!(Expr::parse("t*x").unwrap().uses_time());
        assert_eq!(Expr::parse("x + z").unwrap().max_spatial_index(), Some(2));
    }

    #[test]
    fn errors_carry_columns() {
        let e = Expr::parse("1 + * 2").unwrap_err();
        assert_eq!(e.column, 5);
        let e = Expr::parse("foo(1)").unwrap_err();
        assert!(e.message.contains("foo"));
        let e = Expr::parse("min(1)").unwrap_err();
        assert!(e.message.contains("argument"));
        assert!(Expr::parse("(1 + 2").is_err());
        assert!(Expr::parse("1 $ 2").is_err());
        assert!(Expr::parse("1 2").is_err());
    }

    #[test]
    fn jet_evaluation_gives_exact_gradient() {
        let e = Expr::parse("x^2 * y + t * exp(y)").unwrap();
        let j = e.eval(
            Jet::variable(0.5, 0),
            &[Jet::variable(1.5, 1), Jet::variable(-2.0, 2)],
        );
        assert!((j.du[0] - (-2.0f64).exp()).abs() < 1e-15);
        assert!((j.du[1] - 2.0 * 1.5 * -2.0).abs() < 1e-14);
        assert!((j.du[2] - (2.25 + 0.5 * (-2.0f64).exp())).abs() < 1e-14);
    }
}
