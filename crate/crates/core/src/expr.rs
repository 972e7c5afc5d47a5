//! A small arithmetic expression language for declaring functions and
//! constraints on grids.
//!
//! Grammar (all binary operators left-associative, `^` binds tightest,
//! so `-y^2` is `-(y^2)` and `2^3^2` is `(2^3)^2`):
//!
//! ```text
//! expr  := term (('+' | '-') term)*
//! term  := unary (('*' | '/') unary)*
//! unary := '-' unary | power
//! power := atom ('^' atom)*
//! atom  := number | 'inf' | var | func '(' expr (',' expr)* ')' | '(' expr ')'
//! func  := 'abs' | 'min' | 'max'
//! var   := 'x1'..'x3' | 'y1'..'y3' | 'x' | 'y'
//! ```
//!
//! `x`/`y` are aliases for `x1`/`y1` and only allowed when that block is
//! one-dimensional. The literal `inf` marks a node as infeasible (`+∞`);
//! products use `0 · (±∞) = 0`.

use std::fmt;

use crate::error::{Error, Result};
use crate::grid::MAX_DIM;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Block {
    X,
    Y,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Var {
    pub block: Block,
    /// Zero-based component index.
    pub index: usize,
    pub alias: bool,
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let b = match self.block {
            Block::X => 'x',
            Block::Y => 'y',
        };
        if self.alias {
            write!(f, "{b}")
        } else {
            write!(f, "{b}{}", self.index + 1)
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Func {
    Abs,
    Min,
    Max,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(Var),
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Vec<Expr>),
}

/// How many coordinates of a node belong to the `x` block and how many to
/// the `y` block. Nodes of a product grid list `x` coordinates first.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct VarLayout {
    pub x_dims: usize,
    pub y_dims: usize,
}

impl VarLayout {
    pub fn x(d: usize) -> Self {
        VarLayout { x_dims: d, y_dims: 0 }
    }

    pub fn y(d: usize) -> Self {
        VarLayout { x_dims: 0, y_dims: d }
    }

    pub fn xy(m: usize, n: usize) -> Self {
        VarLayout { x_dims: m, y_dims: n }
    }

    pub fn total(&self) -> usize {
        self.x_dims + self.y_dims
    }
}

/// Failure while evaluating at one point; callers attach coordinates.
#[derive(Clone, Debug, PartialEq)]
pub enum EvalError {
    UnknownVariable(String),
    NonFinite(String),
}

impl Expr {
    pub fn parse(text: &str) -> Result<Expr> {
        let mut p = Parser { src: text.as_bytes(), pos: 0 };
        let e = p.expr()?;
        p.skip_ws();
        if p.pos != p.src.len() {
            return Err(p.error("unexpected trailing input"));
        }
        Ok(e)
    }

    pub fn var(block: Block, index: usize) -> Expr {
        Expr::Var(Var { block, index, alias: false })
    }

    pub fn difference(a: Expr, b: Expr) -> Expr {
        Expr::Bin(BinOp::Sub, Box::new(a), Box::new(b))
    }

    /// Whether any variable of the given block appears.
    pub fn uses(&self, block: Block) -> bool {
        match self {
            Expr::Num(_) => false,
            Expr::Var(v) => v.block == block,
            Expr::Neg(e) => e.uses(block),
            Expr::Bin(_, a, b) => a.uses(block) || b.uses(block),
            Expr::Call(_, args) => args.iter().any(|a| a.uses(block)),
        }
    }

    /// First variable that does not fit the layout, if any.
    pub fn unknown_variable(&self, layout: VarLayout) -> Option<String> {
        match self {
            Expr::Num(_) => None,
            Expr::Var(v) => {
                let dims = match v.block {
                    Block::X => layout.x_dims,
                    Block::Y => layout.y_dims,
                };
                let ok = v.index < dims && (!v.alias || dims == 1);
                (!ok).then(|| v.to_string())
            }
            Expr::Neg(e) => e.unknown_variable(layout),
            Expr::Bin(_, a, b) => a.unknown_variable(layout).or_else(|| b.unknown_variable(layout)),
            Expr::Call(_, args) => args.iter().find_map(|a| a.unknown_variable(layout)),
        }
    }

    /// Evaluates at a point whose coordinates are laid out as `x` then `y`.
    ///
    /// Division by zero and NaN are errors; `inf` may propagate.
    pub fn eval(&self, point: &[f64], layout: VarLayout) -> std::result::Result<f64, EvalError> {
        let v = match self {
            Expr::Num(v) => *v,
            Expr::Var(var) => {
                let (dims, offset) = match var.block {
                    Block::X => (layout.x_dims, 0),
                    Block::Y => (layout.y_dims, layout.x_dims),
                };
                if var.index >= dims || (var.alias && dims != 1) {
                    return Err(EvalError::UnknownVariable(var.to_string()));
                }
                point[offset + var.index]
            }
            Expr::Neg(e) => -e.eval(point, layout)?,
            Expr::Bin(op, a, b) => {
                let a = a.eval(point, layout)?;
                let b = b.eval(point, layout)?;
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    // 0 · (±∞) = 0, so `max(c, 0) * inf` reads as an indicator
                    BinOp::Mul if a == 0.0 || b == 0.0 => 0.0,
                    BinOp::Mul => a * b,
                    BinOp::Div => {
                        if b == 0.0 {
                            return Err(EvalError::NonFinite(format!("division of {a} by zero")));
                        }
                        a / b
                    }
                    BinOp::Pow => a.powf(b),
                }
            }
            Expr::Call(f, args) => {
                let vals = args.iter().map(|a| a.eval(point, layout)).collect::<std::result::Result<Vec<_>, _>>()?;
                match f {
                    Func::Abs => vals[0].abs(),
                    Func::Min => vals.iter().copied().fold(f64::INFINITY, f64::min),
                    Func::Max => vals.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                }
            }
        };
        if v.is_nan() {
            return Err(EvalError::NonFinite(format!("`{self}` evaluates to NaN")));
        }
        Ok(v)
    }
}

fn precedence(e: &Expr) -> u8 {
    match e {
        Expr::Bin(BinOp::Add | BinOp::Sub, ..) => 1,
        Expr::Bin(BinOp::Mul | BinOp::Div, ..) => 2,
        Expr::Neg(_) => 3,
        Expr::Bin(BinOp::Pow, ..) => 4,
        _ => 5,
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) if v.is_infinite() => f.write_str("inf"),
            Expr::Num(v) => write!(f, "{v}"),
            Expr::Var(v) => write!(f, "{v}"),
            Expr::Neg(e) => {
                if precedence(e) < 4 {
                    write!(f, "-({e})")
                } else {
                    write!(f, "-{e}")
                }
            }
            Expr::Bin(op, a, b) => {
                let p = precedence(self);
                let sym = match op {
                    BinOp::Add => " + ",
                    BinOp::Sub => " - ",
                    BinOp::Mul => " * ",
                    BinOp::Div => " / ",
                    BinOp::Pow => "^",
                };
                // left operand may share precedence (left-assoc), right may not
                if precedence(a) < p {
                    write!(f, "({a})")?;
                } else {
                    write!(f, "{a}")?;
                }
                f.write_str(sym)?;
                if precedence(b) <= p {
                    write!(f, "({b})")
                } else {
                    write!(f, "{b}")
                }
            }
            Expr::Call(func, args) => {
                let name = match func {
                    Func::Abs => "abs",
                    Func::Min => "min",
                    Func::Max => "max",
                };
                write!(f, "{name}(")?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(")")
            }
        }
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn error(&self, message: &str) -> Error {
        Error::Parse { column: self.pos + 1, message: message.to_string() }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Some(b'+') => BinOp::Add,
                Some(b'-') => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.term()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Some(b'*') => BinOp::Mul,
                Some(b'/') => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.eat(b'-') {
            Ok(Expr::Neg(Box::new(self.unary()?)))
        } else {
            self.power()
        }
    }

    fn power(&mut self) -> Result<Expr> {
        let mut lhs = self.atom()?;
        while self.eat(b'^') {
            let rhs = self.atom()?;
            lhs = Expr::Bin(BinOp::Pow, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn atom(&mut self) -> Result<Expr> {
        match self.peek() {
            None => Err(self.error("unexpected end of input")),
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                if !self.eat(b')') {
                    return Err(self.error("expected `)`"));
                }
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() => self.ident(),
            Some(_) => Err(self.error("unexpected character")),
        }
    }

    fn number(&mut self) -> Result<Expr> {
        let start = self.pos;
        let digits = |p: &mut Self| {
            while p.pos < p.src.len() && p.src[p.pos].is_ascii_digit() {
                p.pos += 1;
            }
        };
        digits(self);
        if self.src.get(self.pos) == Some(&b'.') {
            self.pos += 1;
            digits(self);
        }
        if matches!(self.src.get(self.pos), Some(b'e' | b'E')) {
            let save = self.pos;
            self.pos += 1;
            if matches!(self.src.get(self.pos), Some(b'+' | b'-')) {
                self.pos += 1;
            }
            let exp_start = self.pos;
            digits(self);
            if self.pos == exp_start {
                self.pos = save;
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii");
        text.parse::<f64>().map(Expr::Num).map_err(|_| Error::Parse { column: start + 1, message: format!("bad number `{text}`") })
    }

    fn ident(&mut self) -> Result<Expr> {
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_alphanumeric() {
            self.pos += 1;
        }
        let name = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii");
        let func = match name {
            "abs" => Some(Func::Abs),
            "min" => Some(Func::Min),
            "max" => Some(Func::Max),
            _ => None,
        };
        if let Some(func) = func {
            if !self.eat(b'(') {
                return Err(self.error(&format!("expected `(` after `{name}`")));
            }
            let mut args = vec![self.expr()?];
            while self.eat(b',') {
                args.push(self.expr()?);
            }
            if !self.eat(b')') {
                return Err(self.error("expected `)`"));
            }
            if func == Func::Abs && args.len() != 1 {
                return Err(Error::Parse { column: start + 1, message: "abs takes one argument".into() });
            }
            return Ok(Expr::Call(func, args));
        }
        if name == "inf" {
            return Ok(Expr::Num(f64::INFINITY));
        }
        let block = match name.as_bytes()[0] {
            b'x' => Block::X,
            b'y' => Block::Y,
            _ => return Err(Error::Parse { column: start + 1, message: format!("unknown identifier `{name}`") }),
        };
        let rest = &name[1..];
        if rest.is_empty() {
            return Ok(Expr::Var(Var { block, index: 0, alias: true }));
        }
        match rest.parse::<usize>() {
            Ok(k) if (1..=MAX_DIM).contains(&k) && !rest.starts_with('0') => Ok(Expr::Var(Var { block, index: k - 1, alias: false })),
            _ => Err(Error::Parse { column: start + 1, message: format!("unknown identifier `{name}`") }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eval1(text: &str, layout: VarLayout, point: &[f64]) -> f64 {
        Expr::parse(text).unwrap().eval(point, layout).unwrap()
    }

    #[test]
    fn precedence_and_associativity() {
        let l = VarLayout::y(1);
        assert_eq!(eval1("-y^2", l, &[3.0]), -9.0);
        assert_eq!(eval1("2^3^2", l, &[0.0]), 64.0);
        assert_eq!(eval1("1 - 2 - 3", l, &[0.0]), -4.0);
        assert_eq!(eval1("8 / 4 / 2", l, &[0.0]), 1.0);
        assert_eq!(eval1("1 + 2 * 3", l, &[0.0]), 7.0);
        assert_eq!(eval1("(1 + 2) * 3", l, &[0.0]), 9.0);
    }

    #[test]
    fn functions_and_variables() {
        let l = VarLayout::xy(2, 1);
        assert_eq!(eval1("abs(x1 - y1) + max(x2, 0, -1)", l, &[1.0, -2.0, 4.0]), 3.0);
        assert_eq!(eval1("min(x1, x2)", l, &[1.0, -2.0, 4.0]), -2.0);
        assert_eq!(eval1("1e-1 * 10", l, &[0.0, 0.0, 0.0]), 1.0);
    }

    #[test]
    fn aliases_need_one_dimensional_blocks() {
        let e = Expr::parse("x + y").unwrap();
        assert_eq!(e.unknown_variable(VarLayout::xy(1, 1)), None);
        assert_eq!(e.unknown_variable(VarLayout::xy(2, 1)), Some("x".to_string()));
        let e = Expr::parse("x2").unwrap();
        assert_eq!(e.unknown_variable(VarLayout::x(1)), Some("x2".to_string()));
    }

    #[test]
    fn guarded_singularities() {
        let e = Expr::parse("1/x").unwrap();
        assert!(matches!(e.eval(&[0.0], VarLayout::x(1)), Err(EvalError::NonFinite(_))));
        let e = Expr::parse("inf - inf").unwrap();
        assert!(matches!(e.eval(&[0.0], VarLayout::x(1)), Err(EvalError::NonFinite(_))));
        assert_eq!(eval1("inf", VarLayout::x(1), &[0.0]), f64::INFINITY);
        assert_eq!(eval1("0 * inf", VarLayout::x(1), &[0.0]), 0.0);
    }

    #[test]
    fn parse_errors_carry_columns() {
        assert!(matches!(Expr::parse("1 +"), Err(Error::Parse { column: 4, .. })));
        assert!(matches!(Expr::parse("z"), Err(Error::Parse { column: 1, .. })));
        assert!(matches!(Expr::parse("abs(1, 2)"), Err(Error::Parse { .. })));
        assert!(matches!(Expr::parse("(1"), Err(Error::Parse { .. })));
        assert!(matches!(Expr::parse("x4"), Err(Error::Parse { .. })));
    }

    #[test]
    fn display_reparses_to_same_tree() {
        for text in ["-y^2", "1 - (2 - x)", "abs(x - y) * 2 / (1 + y)", "(-x)^2", "2^3^2", "-(x + 1)", "max(x, inf)"] {
            let e = Expr::parse(text).unwrap();
            let again = Expr::parse(&e.to_string()).unwrap();
            assert_eq!(e, again, "{text} -> {e}");
        }
    }
}
