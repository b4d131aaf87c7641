//! Rational-function expression trees in `x, y, z`.
//!
//! Evaluation carries a forward-mode complex dual number, so every value comes
//! with its directional derivative.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub const VARIABLES: [&str; 3] = ["x", "y", "z"];

/// A point of `C³` as `[x, y, z]`.
pub type Point3 = [Complex64; 3];

/// Value and directional derivative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dual {
    pub v: Complex64,
    pub d: Complex64,
}

impl Dual {
    pub fn constant(v: Complex64) -> Self {
        Self { v, d: Complex64::new(0.0, 0.0) }
    }

    pub fn powi(self, n: i32) -> Self {
        if n == 0 {
            return Self::constant(Complex64::new(1.0, 0.0));
        }
        let vn1 = self.v.powi(n - 1);
        Self { v: vn1 * self.v, d: self.d * vn1 * f64::from(n) }
    }

    /// `d log f = df / f`.
    pub fn dlog(self) -> Complex64 {
        self.d / self.v
    }
}

impl Add for Dual {
    type Output = Dual;
    fn add(self, o: Dual) -> Dual {
        Dual { v: self.v + o.v, d: self.d + o.d }
    }
}

impl Sub for Dual {
    type Output = Dual;
    fn sub(self, o: Dual) -> Dual {
        Dual { v: self.v - o.v, d: self.d - o.d }
    }
}

impl Mul for Dual {
    type Output = Dual;
    fn mul(self, o: Dual) -> Dual {
        Dual { v: self.v * o.v, d: self.d * o.v + self.v * o.d }
    }
}

impl Div for Dual {
    type Output = Dual;
    fn div(self, o: Dual) -> Dual {
        let q = self.v / o.v;
        Dual { v: q, d: (self.d - q * o.d) / o.v }
    }
}

impl Neg for Dual {
    type Output = Dual;
    fn neg(self) -> Dual {
        Dual { v: -self.v, d: -self.d }
    }
}

/// Rational function of `x, y, z` with exact rational constants.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum RationalExpr {
    Const(BigRational),
    Var(usize),
    Add(Box<RationalExpr>, Box<RationalExpr>),
    Sub(Box<RationalExpr>, Box<RationalExpr>),
    Mul(Box<RationalExpr>, Box<RationalExpr>),
    Div(Box<RationalExpr>, Box<RationalExpr>),
    Neg(Box<RationalExpr>),
    Pow(Box<RationalExpr>, i32),
}

use RationalExpr as E;

impl RationalExpr {
    pub fn int(n: i64) -> Self {
        E::Const(BigRational::from_integer(BigInt::from(n)))
    }

    pub fn x() -> Self {
        E::Var(0)
    }

    pub fn y() -> Self {
        E::Var(1)
    }

    pub fn z() -> Self {
        E::Var(2)
    }

    pub fn pow(self, n: i32) -> Self {
        if n == 1 {
            self
        } else {
            E::Pow(Box::new(self), n)
        }
    }

    /// `1 − self`, written `1 + a` when `self = −a`.
    pub fn one_minus(&self) -> Self {
        match self {
            E::Neg(a) => E::int(1) + (**a).clone(),
            _ => E::int(1) - self.clone(),
        }
    }

    pub fn is_constant(&self) -> bool {
        match self {
            E::Const(_) => true,
            E::Var(_) => false,
            E::Add(a, b) | E::Sub(a, b) | E::Mul(a, b) | E::Div(a, b) => {
                a.is_constant() && b.is_constant()
            }
            E::Neg(a) | E::Pow(a, _) => a.is_constant(),
        }
    }

    /// Exact value when the expression is constant.
    pub fn constant_value(&self) -> Option<BigRational> {
        Some(match self {
            E::Const(c) => c.clone(),
            E::Var(_) => return None,
            E::Add(a, b) => a.constant_value()? + b.constant_value()?,
            E::Sub(a, b) => a.constant_value()? - b.constant_value()?,
            E::Mul(a, b) => a.constant_value()? * b.constant_value()?,
            E::Div(a, b) => {
                let d = b.constant_value()?;
                if d.is_zero() {
                    return None;
                }
                a.constant_value()? / d
            }
            E::Neg(a) => -a.constant_value()?,
            E::Pow(a, n) => {
                let v = a.constant_value()?;
                if v.is_zero() && *n < 0 {
                    return None;
                }
                num_traits::pow::Pow::pow(v, *n)
            }
        })
    }

    pub fn eval(&self, p: &Point3) -> Complex64 {
        match self {
            E::Const(c) => Complex64::new(c.to_f64().unwrap_or(f64::NAN), 0.0),
            E::Var(i) => p[*i],
            E::Add(a, b) => a.eval(p) + b.eval(p),
            E::Sub(a, b) => a.eval(p) - b.eval(p),
            E::Mul(a, b) => a.eval(p) * b.eval(p),
            E::Div(a, b) => a.eval(p) / b.eval(p),
            E::Neg(a) => -a.eval(p),
            E::Pow(a, n) => a.eval(p).powi(*n),
        }
    }

    /// Value and derivative along `dir` at `p`.
    pub fn eval_dual(&self, p: &Point3, dir: &Point3) -> Dual {
        match self {
            E::Const(_) => Dual::constant(self.eval(p)),
            E::Var(i) => Dual { v: p[*i], d: dir[*i] },
            E::Add(a, b) => a.eval_dual(p, dir) + b.eval_dual(p, dir),
            E::Sub(a, b) => a.eval_dual(p, dir) - b.eval_dual(p, dir),
            E::Mul(a, b) => a.eval_dual(p, dir) * b.eval_dual(p, dir),
            E::Div(a, b) => a.eval_dual(p, dir) / b.eval_dual(p, dir),
            E::Neg(a) => -a.eval_dual(p, dir),
            E::Pow(a, n) => a.eval_dual(p, dir).powi(*n),
        }
    }

    /// Substitutes `vars[i]` for variable `i`.
    pub fn substitute(&self, vars: &[RationalExpr; 3]) -> Self {
        let b = |e: &RationalExpr| Box::new(e.substitute(vars));
        match self {
            E::Const(_) => self.clone(),
            E::Var(i) => vars[*i].clone(),
            E::Add(a, c) => E::Add(b(a), b(c)),
            E::Sub(a, c) => E::Sub(b(a), b(c)),
            E::Mul(a, c) => E::Mul(b(a), b(c)),
            E::Div(a, c) => E::Div(b(a), b(c)),
            E::Neg(a) => E::Neg(b(a)),
            E::Pow(a, n) => E::Pow(b(a), *n),
        }
    }

    /// Pullback along `(x, y, z) ↦ (1/x, 1/y, 1/z)`.
    pub fn tau(&self) -> Self {
        let inv = |i| E::Pow(Box::new(E::Var(i)), -1);
        self.substitute(&[inv(0), inv(1), inv(2)])
    }

    pub fn parse(s: &str) -> Result<Self> {
        Parser::new(s)?.parse_all()
    }

    fn precedence(&self) -> u8 {
        match self {
            E::Add(..) | E::Sub(..) => 1,
            E::Mul(..) | E::Div(..) => 2,
            E::Neg(_) => 3,
            E::Pow(..) => 4,
            E::Const(c) if !c.is_integer() || c.is_negative() => 2,
            E::Const(_) | E::Var(_) => 5,
        }
    }

    fn fmt_child(&self, f: &mut fmt::Formatter<'_>, child: &RationalExpr, min: u8) -> fmt::Result {
        if child.precedence() < min {
            write!(f, "({child})")
        } else {
            write!(f, "{child}")
        }
    }
}

impl fmt::Display for RationalExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            E::Const(c) => write!(f, "{c}"),
            E::Var(i) => write!(f, "{}", VARIABLES[*i]),
            E::Add(a, b) => {
                self.fmt_child(f, a, 1)?;
                write!(f, " + ")?;
                self.fmt_child(f, b, 2)
            }
            E::Sub(a, b) => {
                self.fmt_child(f, a, 1)?;
                write!(f, " - ")?;
                self.fmt_child(f, b, 2)
            }
            E::Mul(a, b) => {
                self.fmt_child(f, a, 2)?;
                write!(f, "*")?;
                self.fmt_child(f, b, 3)
            }
            E::Div(a, b) => {
                self.fmt_child(f, a, 2)?;
                write!(f, "/")?;
                self.fmt_child(f, b, 3)
            }
            E::Neg(a) => {
                write!(f, "-")?;
                self.fmt_child(f, a, 3)
            }
            E::Pow(a, n) => {
                self.fmt_child(f, a, 5)?;
                if *n < 0 {
                    write!(f, "^({n})")
                } else {
                    write!(f, "^{n}")
                }
            }
        }
    }
}

impl FromStr for RationalExpr {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::parse(s)
    }
}

macro_rules! binop {
    ($tr:ident, $m:ident, $v:ident) => {
        impl $tr for RationalExpr {
            type Output = RationalExpr;
            fn $m(self, o: RationalExpr) -> RationalExpr {
                E::$v(Box::new(self), Box::new(o))
            }
        }
    };
}
binop!(Add, add, Add);
binop!(Sub, sub, Sub);
binop!(Mul, mul, Mul);
binop!(Div, div, Div);

impl Neg for RationalExpr {
    type Output = RationalExpr;
    fn neg(self) -> RationalExpr {
        E::Neg(Box::new(self))
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(BigInt),
    Ident(String),
    Op(char),
}

fn tokenize(s: &str) -> Result<Vec<Tok>> {
    let mut out = Vec::new();
    let chars: Vec<char> = s.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let digits: String = chars[start..i].iter().collect();
            out.push(Tok::Num(digits.parse().map_err(|_| Error::Parse(digits.clone()))?));
        } else if c.is_ascii_alphabetic() {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push(Tok::Ident(chars[start..i].iter().collect()));
        } else if "+-*/^()".contains(c) || c == '−' {
            out.push(Tok::Op(if c == '−' { '-' } else { c }));
            i += 1;
        } else {
            return Err(Error::Parse(format!("unexpected character {c:?} in {s:?}")));
        }
    }
    Ok(out)
}

/// Recursive-descent parser shared by expressions and polynomials.
///
/// Juxtaposition multiplies: `2x`, `(x+1)(y+1)`. Exponents are integers,
/// optionally negative and parenthesized.
struct Parser {
    toks: Vec<Tok>,
    pos: usize,
}

impl Parser {
    fn new(s: &str) -> Result<Self> {
        Ok(Self { toks: tokenize(s)?, pos: 0 })
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos)
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(&Tok::Op(c)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn parse_all(mut self) -> Result<RationalExpr> {
        if self.toks.is_empty() {
            return Err(Error::Parse("empty expression".into()));
        }
        let e = self.sum()?;
        if self.pos != self.toks.len() {
            return Err(Error::Parse(format!("trailing input at token {}", self.pos)));
        }
        Ok(e)
    }

    fn sum(&mut self) -> Result<RationalExpr> {
        let mut acc = if self.eat('-') {
            -self.product()?
        } else {
            self.eat('+');
            self.product()?
        };
        loop {
            if self.eat('+') {
                acc = acc + self.product()?;
            } else if self.eat('-') {
                acc = acc - self.product()?;
            } else {
                return Ok(acc);
            }
        }
    }

    fn starts_factor(&self) -> bool {
        matches!(self.peek(), Some(Tok::Num(_)) | Some(Tok::Ident(_)) | Some(Tok::Op('(')))
    }

    fn product(&mut self) -> Result<RationalExpr> {
        let mut acc = self.power()?;
        loop {
            if self.eat('*') {
                acc = acc * self.power()?;
            } else if self.eat('/') {
                acc = acc / self.power()?;
            } else if self.starts_factor() {
                acc = acc * self.power()?;
            } else {
                return Ok(acc);
            }
        }
    }

    fn power(&mut self) -> Result<RationalExpr> {
        let base = self.atom()?;
        if !self.eat('^') {
            return Ok(base);
        }
        let paren = self.eat('(');
        let neg = self.eat('-');
        let n = match self.peek() {
            Some(Tok::Num(n)) => n.to_i32().ok_or_else(|| Error::Parse("exponent too large".into()))?,
            _ => return Err(Error::Parse("expected integer exponent".into())),
        };
        self.pos += 1;
        if paren && !self.eat(')') {
            return Err(Error::Parse("unclosed exponent".into()));
        }
        Ok(base.pow(if neg { -n } else { n }))
    }

    fn atom(&mut self) -> Result<RationalExpr> {
        match self.peek().cloned() {
            Some(Tok::Num(n)) => {
                self.pos += 1;
                Ok(E::Const(BigRational::from_integer(n)))
            }
            Some(Tok::Ident(name)) => {
                self.pos += 1;
                match VARIABLES.iter().position(|v| *v == name) {
                    Some(i) => Ok(E::Var(i)),
                    None => Err(Error::Parse(format!("unknown variable {name:?}"))),
                }
            }
            Some(Tok::Op('(')) => {
                self.pos += 1;
                let e = self.sum()?;
                if !self.eat(')') {
                    return Err(Error::Parse("missing )".into()));
                }
                Ok(e)
            }
            Some(Tok::Op('-')) => {
                self.pos += 1;
                Ok(-self.power()?)
            }
            other => Err(Error::Parse(format!("unexpected token {other:?}"))),
        }
    }
}

/// Rational constant from a string such as `-5/4` or `3`.
pub fn parse_rational(s: &str) -> Result<BigRational> {
    let e = RationalExpr::parse(s)?;
    e.constant_value()
        .ok_or_else(|| Error::Parse(format!("{s:?} is not a rational constant")))
}

pub fn rational_to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// Best continued-fraction convergent `p/q` with `q ≤ max_den` and `|v − p/q| ≤ tol`.
pub fn rational_convergent(v: f64, max_den: u64, tol: f64) -> Option<BigRational> {
    if !v.is_finite() {
        return None;
    }
    let (mut h0, mut h1) = (0i128, 1i128);
    let (mut k0, mut k1) = (1i128, 0i128);
    let mut x = v;
    let mut best = None;
    for _ in 0..64 {
        let a = x.floor();
        if a.abs() > 1e15 {
            break;
        }
        let ai = a as i128;
        let (h, k) = (ai * h1 + h0, ai * k1 + k0);
        if k > max_den as i128 {
            break;
        }
        if (v - h as f64 / k as f64).abs() <= tol {
            best = Some(BigRational::new(BigInt::from(h), BigInt::from(k)));
            break;
        }
        (h0, h1, k0, k1) = (h1, h, k1, k);
        let frac = x - a;
        if frac.abs() < 1e-300 {
            break;
        }
        x = 1.0 / frac;
    }
    best
}

pub fn is_one(r: &BigRational) -> bool {
    r.is_one()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn parses_and_evaluates() {
        let e = RationalExpr::parse("(x*y+x+1)/(x*y)").unwrap();
        let p = [c(0.3, 0.1), c(-1.2, 0.5), c(2.0, 0.0)];
        let (x, y) = (p[0], p[1]);
        assert!((e.eval(&p) - (x * y + x + 1.0) / (x * y)).norm() < 1e-14);
        let e = RationalExpr::parse("-(x+1)y^-1 + 1/2 z^(-2)").unwrap();
        let z = p[2];
        let want = -(x + 1.0) / y + 0.5 / (z * z);
        assert!((e.eval(&p) - want).norm() < 1e-14);
        assert!(RationalExpr::parse("x + w").is_err());
        assert!(RationalExpr::parse("(x+1").is_err());
        assert!(RationalExpr::parse("").is_err());
    }

    #[test]
    fn display_round_trips() {
        for s in ["-(x+1)*y", "(x*y + x + 1)/(x*y)", "1 - x^3", "x^(-2)*(y - 1/2)", "-x", "2*x - -y"] {
            let e = RationalExpr::parse(s).unwrap();
            let again = RationalExpr::parse(&e.to_string()).unwrap();
            let p = [c(0.7, 0.2), c(-0.4, 1.1), c(1.3, -0.6)];
            assert!((e.eval(&p) - again.eval(&p)).norm() < 1e-13, "{s} -> {e}");
        }
    }

    #[test]
    fn tau_matches_substitution() {
        let e = RationalExpr::parse("-(x+1)*y").unwrap().tau();
        let p = [c(0.7, 0.2), c(-0.4, 1.1), c(1.3, -0.6)];
        let want = -(p[0] + 1.0) / (p[0] * p[1]);
        assert!((e.eval(&p) - want).norm() < 1e-13);
        let back = e.tau();
        let orig = RationalExpr::parse("-(x+1)*y").unwrap();
        assert!((back.eval(&p) - orig.eval(&p)).norm() < 1e-13);
    }

    #[test]
    fn dual_matches_finite_differences() {
        let e = RationalExpr::parse("(x^2 - 3y)/(1 + x*y*z)^3 + z^(-1)").unwrap();
        let p = [c(0.3, 0.4), c(-0.5, 0.2), c(0.9, -0.1)];
        let dir = [c(0.2, -0.1), c(0.7, 0.3), c(-0.4, 0.5)];
        let dual = e.eval_dual(&p, &dir);
        let h = 1e-6;
        let shift = |s: f64| [p[0] + dir[0] * s, p[1] + dir[1] * s, p[2] + dir[2] * s];
        let fd = (e.eval(&shift(h)) - e.eval(&shift(-h))) / (2.0 * h);
        assert!((dual.d - fd).norm() <= 1e-6 * fd.norm().max(1.0));
        assert!((dual.v - e.eval(&p)).norm() < 1e-15);
    }

    #[test]
    fn constants_fold() {
        assert_eq!(parse_rational("-5/4").unwrap(), BigRational::new((-5).into(), 4.into()));
        assert!(parse_rational("x").is_err());
        assert!(RationalExpr::parse("(2-1)^3").unwrap().is_constant());
    }
}
