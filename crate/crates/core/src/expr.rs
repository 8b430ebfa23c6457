//! Coefficient expressions over `x` and `y`.
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := factor (('*' | '/') factor)*
//! factor := '-' factor | atom ('^' int)?
//! atom   := number | 'x' | 'y' | 'pi' | func '(' args ')' | '(' expr ')'
//! func   := sin | cos | exp | abs | min | max
//! ```
//!
//! `min` and `max` take two comma-separated arguments, the other functions
//! take one.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParseError {
    #[error("syntax error at column {column}: {message}")]
    Syntax { column: usize, message: String },
    #[error("unknown identifier `{name}` at column {column}")]
    UnknownIdentifier { column: usize, name: String },
}

impl ParseError {
    /// 1-based column of the offending token.
    pub fn column(&self) -> usize {
        match self {
            ParseError::Syntax { column, .. } | ParseError::UnknownIdentifier { column, .. } => {
                *column
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Abs,
    Min,
    Max,
}

impl Func {
    fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "abs" => Func::Abs,
            "min" => Func::Min,
            "max" => Func::Max,
            _ => return None,
        })
    }

    fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Abs => "abs",
            Func::Min => "min",
            Func::Max => "max",
        }
    }

    fn arity(self) -> usize {
        match self {
            Func::Min | Func::Max => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CoeffExpr {
    Num(f64),
    X,
    Y,
    Neg(Box<CoeffExpr>),
    Bin(BinOp, Box<CoeffExpr>, Box<CoeffExpr>),
    Pow(Box<CoeffExpr>, i32),
    Call(Func, Vec<CoeffExpr>),
}

impl CoeffExpr {
    pub fn constant(v: f64) -> Self {
        CoeffExpr::Num(v)
    }

    pub fn is_constant(&self) -> bool {
        match self {
            CoeffExpr::Num(_) => true,
            CoeffExpr::X | CoeffExpr::Y => false,
            CoeffExpr::Neg(e) | CoeffExpr::Pow(e, _) => e.is_constant(),
            CoeffExpr::Bin(_, a, b) => a.is_constant() && b.is_constant(),
            CoeffExpr::Call(_, args) => args.iter().all(CoeffExpr::is_constant),
        }
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        match self {
            CoeffExpr::Num(v) => *v,
            CoeffExpr::X => x,
            CoeffExpr::Y => y,
            CoeffExpr::Neg(e) => -e.eval(x, y),
            CoeffExpr::Bin(op, a, b) => {
                let (a, b) = (a.eval(x, y), b.eval(x, y));
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => a / b,
                }
            }
            CoeffExpr::Pow(e, n) => e.eval(x, y).powi(*n),
            CoeffExpr::Call(f, args) => {
                let a = args[0].eval(x, y);
                match f {
                    Func::Sin => a.sin(),
                    Func::Cos => a.cos(),
                    Func::Exp => a.exp(),
                    Func::Abs => a.abs(),
                    Func::Min => a.min(args[1].eval(x, y)),
                    Func::Max => a.max(args[1].eval(x, y)),
                }
            }
        }
    }

    /// `false` if the expression uses `abs`, `min` or `max`.
    pub fn is_smooth(&self) -> bool {
        match self {
            CoeffExpr::Num(_) | CoeffExpr::X | CoeffExpr::Y => true,
            CoeffExpr::Neg(a) | CoeffExpr::Pow(a, _) => a.is_smooth(),
            CoeffExpr::Bin(_, a, b) => a.is_smooth() && b.is_smooth(),
            CoeffExpr::Call(f, args) => {
                matches!(f, Func::Sin | Func::Cos | Func::Exp) && args.iter().all(|a| a.is_smooth())
            }
        }
    }

    /// Value and exact gradient `(f, ∂ₓf, ∂ᵧf)` by forward-mode
    /// differentiation. At kinks of `abs`, `min`, `max` the one-sided
    /// derivative of the active branch is returned.
    pub fn eval_with_gradient(&self, x: f64, y: f64) -> (f64, f64, f64) {
        let d = self.dual(x, y);
        (d.v, d.dx, d.dy)
    }

    fn dual(&self, x: f64, y: f64) -> Dual {
        match self {
            CoeffExpr::Num(v) => Dual::new(*v, 0.0, 0.0),
            CoeffExpr::X => Dual::new(x, 1.0, 0.0),
            CoeffExpr::Y => Dual::new(y, 0.0, 1.0),
            CoeffExpr::Neg(e) => e.dual(x, y).scale(-1.0),
            CoeffExpr::Bin(op, a, b) => {
                let (a, b) = (a.dual(x, y), b.dual(x, y));
                match op {
                    BinOp::Add => Dual::new(a.v + b.v, a.dx + b.dx, a.dy + b.dy),
                    BinOp::Sub => Dual::new(a.v - b.v, a.dx - b.dx, a.dy - b.dy),
                    BinOp::Mul => {
                        Dual::new(a.v * b.v, a.dx * b.v + a.v * b.dx, a.dy * b.v + a.v * b.dy)
                    }
                    BinOp::Div => {
                        let q = a.v / b.v;
                        Dual::new(q, (a.dx - q * b.dx) / b.v, (a.dy - q * b.dy) / b.v)
                    }
                }
            }
            CoeffExpr::Pow(e, n) => {
                let a = e.dual(x, y);
                let d = if *n == 0 {
                    0.0
                } else {
                    *n as f64 * a.v.powi(n - 1)
                };
                Dual::new(a.v.powi(*n), d * a.dx, d * a.dy)
            }
            CoeffExpr::Call(f, args) => {
                let a = args[0].dual(x, y);
                match f {
                    Func::Sin => a.chain(a.v.sin(), a.v.cos()),
                    Func::Cos => a.chain(a.v.cos(), -a.v.sin()),
                    Func::Exp => a.chain(a.v.exp(), a.v.exp()),
                    Func::Abs => a.chain(a.v.abs(), if a.v < 0.0 { -1.0 } else { 1.0 }),
                    Func::Min | Func::Max => {
                        let b = args[1].dual(x, y);
                        let take_a = if *f == Func::Min {
                            a.v <= b.v
                        } else {
                            a.v >= b.v
                        };
                        if take_a {
                            a
                        } else {
                            b
                        }
                    }
                }
            }
        }
    }
}

#[derive(Clone, Copy)]
struct Dual {
    v: f64,
    dx: f64,
    dy: f64,
}

impl Dual {
    fn new(v: f64, dx: f64, dy: f64) -> Self {
        Dual { v, dx, dy }
    }

    fn scale(self, s: f64) -> Self {
        Dual::new(s * self.v, s * self.dx, s * self.dy)
    }

    fn chain(self, value: f64, slope: f64) -> Self {
        Dual::new(value, slope * self.dx, slope * self.dy)
    }
}

/// Fully parenthesized form; `parse_coeff(&e.to_string())` rebuilds `e`.
impl fmt::Display for CoeffExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CoeffExpr::Num(v) if *v < 0.0 || (*v == 0.0 && v.is_sign_negative()) => {
                write!(f, "(-{:?})", -v)
            }
            CoeffExpr::Num(v) => write!(f, "{v:?}"),
            CoeffExpr::X => f.write_str("x"),
            CoeffExpr::Y => f.write_str("y"),
            CoeffExpr::Neg(e) => write!(f, "(-{e})"),
            CoeffExpr::Bin(op, a, b) => {
                let s = match op {
                    BinOp::Add => "+",
                    BinOp::Sub => "-",
                    BinOp::Mul => "*",
                    BinOp::Div => "/",
                };
                write!(f, "({a} {s} {b})")
            }
            CoeffExpr::Pow(e, n) => write!(f, "({e})^{n}"),
            CoeffExpr::Call(func, args) => {
                write!(f, "{}(", func.name())?;
                for (k, a) in args.iter().enumerate() {
                    if k > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(")")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Sym(char),
    End,
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn tokens(src: &'a str) -> Result<Vec<(Tok, usize)>, ParseError> {
        let mut lx = Lexer { src, pos: 0 };
        let mut out = Vec::new();
        loop {
            let (t, col) = lx.next()?;
            let end = t == Tok::End;
            out.push((t, col));
            if end {
                return Ok(out);
            }
        }
    }

    fn column(&self, byte: usize) -> usize {
        self.src[..byte].chars().count() + 1
    }

    fn next(&mut self) -> Result<(Tok, usize), ParseError> {
        let bytes = self.src.as_bytes();
        while self.pos < bytes.len() && bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        let start = self.pos;
        let col = self.column(start);
        let Some(&c) = bytes.get(start) else {
            return Ok((Tok::End, col));
        };
        if c.is_ascii_digit() || c == b'.' {
            let mut end = start;
            while end < bytes.len() && (bytes[end].is_ascii_digit() || bytes[end] == b'.') {
                end += 1;
            }
            if end < bytes.len() && (bytes[end] == b'e' || bytes[end] == b'E') {
                let mut k = end + 1;
                if k < bytes.len() && (bytes[k] == b'+' || bytes[k] == b'-') {
                    k += 1;
                }
                if k < bytes.len() && bytes[k].is_ascii_digit() {
                    while k < bytes.len() && bytes[k].is_ascii_digit() {
                        k += 1;
                    }
                    end = k;
                }
            }
            let text = &self.src[start..end];
            self.pos = end;
            return text
                .parse::<f64>()
                .map(|v| (Tok::Num(v), col))
                .map_err(|_| ParseError::Syntax {
                    column: col,
                    message: format!("malformed number `{text}`"),
                });
        }
        if c.is_ascii_alphabetic() || c == b'_' {
            let mut end = start;
            while end < bytes.len() && (bytes[end].is_ascii_alphanumeric() || bytes[end] == b'_') {
                end += 1;
            }
            self.pos = end;
            return Ok((Tok::Ident(self.src[start..end].to_string()), col));
        }
        if b"+-*/^(),".contains(&c) {
            self.pos += 1;
            return Ok((Tok::Sym(c as char), col));
        }
        let ch = self.src[start..].chars().next().unwrap();
        Err(ParseError::Syntax {
            column: col,
            message: format!("unexpected character `{ch}`"),
        })
    }
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    at: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].0
    }

    fn col(&self) -> usize {
        self.toks[self.at].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.at].0.clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn err<T>(&self, message: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError::Syntax {
            column: self.col(),
            message: message.into(),
        })
    }

    fn expect(&mut self, c: char) -> Result<(), ParseError> {
        if *self.peek() == Tok::Sym(c) {
            self.bump();
            Ok(())
        } else {
            self.err(format!("expected `{c}`"))
        }
    }

    fn expr(&mut self) -> Result<CoeffExpr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Tok::Sym('+') => BinOp::Add,
                Tok::Sym('-') => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.term()?;
            lhs = CoeffExpr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<CoeffExpr, ParseError> {
        let mut lhs = self.factor()?;
        loop {
            let op = match self.peek() {
                Tok::Sym('*') => BinOp::Mul,
                Tok::Sym('/') => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.factor()?;
            lhs = CoeffExpr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn factor(&mut self) -> Result<CoeffExpr, ParseError> {
        if *self.peek() == Tok::Sym('-') {
            self.bump();
            return Ok(CoeffExpr::Neg(Box::new(self.factor()?)));
        }
        let base = self.atom()?;
        if *self.peek() != Tok::Sym('^') {
            return Ok(base);
        }
        self.bump();
        let negative = if *self.peek() == Tok::Sym('-') {
            self.bump();
            true
        } else {
            false
        };
        let col = self.col();
        let Tok::Num(v) = self.peek().clone() else {
            return self.err("exponent must be an integer literal");
        };
        // integer literals are lexed as numbers; reject fractional ones
        if v.fract() != 0.0 || v > i32::MAX as f64 {
            return Err(ParseError::Syntax {
                column: col,
                message: format!("exponent `{v}` is not an integer"),
            });
        }
        self.bump();
        let n = v as i32;
        Ok(CoeffExpr::Pow(
            Box::new(base),
            if negative { -n } else { n },
        ))
    }

    fn atom(&mut self) -> Result<CoeffExpr, ParseError> {
        let col = self.col();
        match self.bump() {
            Tok::Num(v) => Ok(CoeffExpr::Num(v)),
            Tok::Sym('(') => {
                let e = self.expr()?;
                self.expect(')')?;
                Ok(e)
            }
            Tok::Ident(name) => match name.as_str() {
                "x" => Ok(CoeffExpr::X),
                "y" => Ok(CoeffExpr::Y),
                "pi" => Ok(CoeffExpr::Num(std::f64::consts::PI)),
                _ => {
                    let Some(func) = Func::from_name(&name) else {
                        return Err(ParseError::UnknownIdentifier { column: col, name });
                    };
                    self.expect('(')?;
                    let mut args = vec![self.expr()?];
                    while *self.peek() == Tok::Sym(',') {
                        self.bump();
                        args.push(self.expr()?);
                    }
                    if args.len() != func.arity() {
                        return Err(ParseError::Syntax {
                            column: col,
                            message: format!(
                                "`{}` takes {} argument(s), got {}",
                                func.name(),
                                func.arity(),
                                args.len()
                            ),
                        });
                    }
                    self.expect(')')?;
                    Ok(CoeffExpr::Call(func, args))
                }
            },
            Tok::End => Err(ParseError::Syntax {
                column: col,
                message: "unexpected end of input".into(),
            }),
            t => Err(ParseError::Syntax {
                column: col,
                message: format!("unexpected token {t:?}"),
            }),
        }
    }
}

pub fn parse_coeff(src: &str) -> Result<CoeffExpr, ParseError> {
    let toks = Lexer::tokens(src)?;
    let mut p = Parser { toks, at: 0 };
    let e = p.expr()?;
    if *p.peek() != Tok::End {
        return p.err("trailing input");
    }
    Ok(e)
}

impl std::str::FromStr for CoeffExpr {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_coeff(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ev(s: &str, x: f64, y: f64) -> f64 {
        parse_coeff(s).unwrap().eval(x, y)
    }

    #[test]
    fn spot_values() {
        assert_eq!(ev("1", 0.3, 0.7), 1.0);
        assert_eq!(ev("1+0.5*sin(3*x)", 0.0, 0.0), 1.0);
        assert_eq!(ev("min(2, exp(x*y))", 1.0, 1.0), 2.0f64.min(1.0f64.exp()));
        assert_eq!(ev("-x^2", 3.0, 0.0), -9.0);
        assert_eq!(ev("2^-1", 0.0, 0.0), 0.5);
        assert_eq!(ev("1 - 2 - 3", 0.0, 0.0), -4.0);
        assert_eq!(ev("8/4/2", 0.0, 0.0), 1.0);
        assert_eq!(ev("1e-2*x", 2.0, 0.0), 0.02);
        assert_eq!(ev("abs(x-1/2)", 0.25, 0.0), 0.25);
    }

    #[test]
    fn errors_carry_columns() {
        let e = parse_coeff("1 + * x").unwrap_err();
        assert_eq!(e.column(), 5);
        let e = parse_coeff("1+foo(x)").unwrap_err();
        assert_eq!(
            e,
            ParseError::UnknownIdentifier {
                column: 3,
                name: "foo".into()
            }
        );
        assert_eq!(parse_coeff("x^1.5").unwrap_err().column(), 3);
        assert_eq!(parse_coeff("(x").unwrap_err().column(), 3);
        assert_eq!(parse_coeff("min(x)").unwrap_err().column(), 1);
        assert_eq!(parse_coeff("x $ y").unwrap_err().column(), 3);
        assert!(parse_coeff("").is_err());
    }

    #[test]
    fn gradient_of_polynomial() {
        let e = parse_coeff("x*y/4 + x^2/2").unwrap();
        let (v, dx, dy) = e.eval_with_gradient(0.5, 2.0);
        assert_eq!(v, 0.25 + 0.125);
        assert_eq!(dx, 0.5 + 0.5);
        assert_eq!(dy, 0.125);
    }

    #[test]
    fn gradient_of_transcendentals() {
        let e = parse_coeff("exp(x)*sin(y) + cos(x*y) - abs(y-1)").unwrap();
        let (x, y) = (0.3, 0.4);
        let (_, dx, dy) = e.eval_with_gradient(x, y);
        let fdx = x.exp() * y.sin() - y * (x * y).sin();
        let fdy = x.exp() * y.cos() - x * (x * y).sin() + 1.0;
        assert!((dx - fdx).abs() < 1e-15);
        assert!((dy - fdy).abs() < 1e-15);
    }

    fn arb_expr() -> impl Strategy<Value = CoeffExpr> {
        let leaf = prop_oneof![
            (0.0f64..100.0).prop_map(CoeffExpr::Num),
            Just(CoeffExpr::X),
            Just(CoeffExpr::Y),
        ];
        leaf.prop_recursive(5, 40, 3, |inner| {
            prop_oneof![
                inner.clone().prop_map(|e| CoeffExpr::Neg(Box::new(e))),
                (inner.clone(), inner.clone(), 0..4usize).prop_map(|(a, b, k)| {
                    let op = [BinOp::Add, BinOp::Sub, BinOp::Mul, BinOp::Div][k];
                    CoeffExpr::Bin(op, Box::new(a), Box::new(b))
                }),
                (inner.clone(), -3..5i32).prop_map(|(e, n)| CoeffExpr::Pow(Box::new(e), n)),
                (inner.clone(), 0..4usize).prop_map(|(e, k)| {
                    let f = [Func::Sin, Func::Cos, Func::Exp, Func::Abs][k];
                    CoeffExpr::Call(f, vec![e])
                }),
                (inner.clone(), inner, any::<bool>()).prop_map(|(a, b, m)| {
                    CoeffExpr::Call(if m { Func::Min } else { Func::Max }, vec![a, b])
                }),
            ]
        })
    }

    proptest! {
        #[test]
        fn print_parse_is_identity(e in arb_expr()) {
            let printed = e.to_string();
            let back = parse_coeff(&printed).unwrap();
            prop_assert_eq!(&back, &e);
            prop_assert_eq!(parse_coeff(&back.to_string()).unwrap(), back);
        }
    }
}
