//! Multivariate Laurent polynomials with exact rational coefficients.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::expr::{RationalExpr, VARIABLES};

/// Exponent vector to coefficient; zero coefficients are never stored.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LaurentPoly {
    variables: Vec<String>,
    terms: BTreeMap<Vec<i32>, BigRational>,
}

impl LaurentPoly {
    pub fn zero(variables: &[&str]) -> Self {
        Self {
            variables: variables.iter().map(|s| s.to_string()).collect(),
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(c: BigRational, variables: &[&str]) -> Self {
        let mut p = Self::zero(variables);
        if !c.is_zero() {
            p.terms.insert(vec![0; variables.len()], c);
        }
        p
    }

    pub fn from_terms(variables: &[&str], terms: impl IntoIterator<Item = (Vec<i32>, BigRational)>) -> Self {
        let mut p = Self::zero(variables);
        for (e, c) in terms {
            assert_eq!(e.len(), variables.len(), "exponent length");
            p.add_term(e, c);
        }
        p
    }

    fn add_term(&mut self, e: Vec<i32>, c: BigRational) {
        let entry = self.terms.entry(e.clone()).or_insert_with(BigRational::zero);
        *entry += c;
        if entry.is_zero() {
            self.terms.remove(&e);
        }
    }

    /// Parses with the variables that actually occur, in the order `x, y, z`.
    pub fn parse(s: &str) -> Result<Self> {
        let full = Self::parse_xyz(s)?;
        let used: Vec<usize> = (0..3)
            .filter(|&i| full.terms.keys().any(|e| e[i] != 0))
            .collect();
        let names: Vec<&str> = used.iter().map(|&i| VARIABLES[i]).collect();
        let p = Self::from_terms(
            &names,
            full.terms
                .into_iter()
                .map(|(e, c)| (used.iter().map(|&i| e[i]).collect(), c)),
        );
        if p.is_zero() {
            return Err(Error::Parse(format!("{s:?} is the zero polynomial")));
        }
        Ok(p)
    }

    /// Parses in the variables `x, y, z`, whether or not they occur.
    pub fn parse_xyz(s: &str) -> Result<Self> {
        let e = RationalExpr::parse(s)?;
        let p = Self::from_expr(&e)?;
        if p.is_zero() {
            return Err(Error::Parse(format!("{s:?} is the zero polynomial")));
        }
        Ok(p)
    }

    /// Expands an expression whose divisions are by constants or monomials.
    pub fn from_expr(e: &RationalExpr) -> Result<Self> {
        use RationalExpr as E;
        let vars = VARIABLES;
        Ok(match e {
            E::Const(c) => Self::constant(c.clone(), &vars),
            E::Var(i) => {
                let mut ex = vec![0; 3];
                ex[*i] = 1;
                Self::from_terms(&vars, [(ex, BigRational::one())])
            }
            E::Add(a, b) => Self::from_expr(a)?.add(&Self::from_expr(b)?),
            E::Sub(a, b) => Self::from_expr(a)?.sub(&Self::from_expr(b)?),
            E::Mul(a, b) => Self::from_expr(a)?.mul(&Self::from_expr(b)?),
            E::Neg(a) => Self::from_expr(a)?.neg(),
            E::Div(a, b) => {
                let d = Self::from_expr(b)?;
                let inv = d.monomial_inverse().ok_or_else(|| {
                    Error::Parse(format!("division by the non-monomial {b}"))
                })?;
                Self::from_expr(a)?.mul(&inv)
            }
            E::Pow(a, n) => {
                let base = Self::from_expr(a)?;
                if *n >= 0 {
                    base.pow(*n as u32)
                } else {
                    base.monomial_inverse()
                        .ok_or_else(|| Error::Parse(format!("negative power of the non-monomial {a}")))?
                        .pow(n.unsigned_abs())
                }
            }
        })
    }

    fn monomial_inverse(&self) -> Option<Self> {
        if self.terms.len() != 1 {
            return None;
        }
        let (e, c) = self.terms.iter().next()?;
        Some(Self {
            variables: self.variables.clone(),
            terms: [(e.iter().map(|k| -k).collect(), c.recip())].into_iter().collect(),
        })
    }

    pub fn variables(&self) -> &[String] {
        &self.variables
    }

    pub fn nvars(&self) -> usize {
        self.variables.len()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<i32>, &BigRational)> {
        self.terms.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Re-expresses the polynomial in `x, y, z`; fails on other variable names.
    pub fn to_xyz(&self) -> Result<Self> {
        let idx: Vec<usize> = self
            .variables
            .iter()
            .map(|v| {
                VARIABLES
                    .iter()
                    .position(|w| w == v)
                    .ok_or_else(|| Error::Parse(format!("variable {v} is not x, y or z")))
            })
            .collect::<Result<_>>()?;
        Ok(Self::from_terms(
            &VARIABLES,
            self.terms.iter().map(|(e, c)| {
                let mut full = vec![0; 3];
                for (k, &i) in idx.iter().enumerate() {
                    full[i] = e[k];
                }
                (full, c.clone())
            }),
        ))
    }

    pub fn add(&self, o: &Self) -> Self {
        let mut p = self.clone();
        for (e, c) in &o.terms {
            p.add_term(e.clone(), c.clone());
        }
        p
    }

    pub fn neg(&self) -> Self {
        Self {
            variables: self.variables.clone(),
            terms: self.terms.iter().map(|(e, c)| (e.clone(), -c)).collect(),
        }
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.neg())
    }

    pub fn mul(&self, o: &Self) -> Self {
        assert_eq!(self.variables, o.variables, "variable lists differ");
        let mut p = Self { variables: self.variables.clone(), terms: BTreeMap::new() };
        for (e1, c1) in &self.terms {
            for (e2, c2) in &o.terms {
                let e: Vec<i32> = e1.iter().zip(e2).map(|(a, b)| a + b).collect();
                p.add_term(e, c1 * c2);
            }
        }
        p
    }

    pub fn pow(&self, n: u32) -> Self {
        let vars: Vec<&str> = self.variables.iter().map(|s| s.as_str()).collect();
        let mut acc = Self::constant(BigRational::one(), &vars);
        for _ in 0..n {
            acc = acc.mul(self);
        }
        acc
    }

    /// `P(1/x, 1/y, …)`.
    pub fn invert_variables(&self) -> Self {
        Self {
            variables: self.variables.clone(),
            terms: self
                .terms
                .iter()
                .map(|(e, c)| (e.iter().map(|k| -k).collect(), c.clone()))
                .collect(),
        }
    }

    /// `(min, max)` exponent of variable `i`.
    pub fn degree_range(&self, i: usize) -> (i32, i32) {
        let it = self.terms.keys().map(|e| e[i]);
        (it.clone().min().unwrap_or(0), it.max().unwrap_or(0))
    }

    /// Coefficients of the last variable, lowest power first, as polynomials in the rest.
    pub fn last_variable_coefficients(&self) -> Vec<LaurentPoly> {
        let n = self.nvars();
        assert!(n > 0, "no variables");
        let (lo, hi) = self.degree_range(n - 1);
        let rest: Vec<&str> = self.variables[..n - 1].iter().map(|s| s.as_str()).collect();
        let mut out = vec![Self::zero(&rest); (hi - lo + 1) as usize];
        for (e, c) in &self.terms {
            out[(e[n - 1] - lo) as usize].add_term(e[..n - 1].to_vec(), c.clone());
        }
        out
    }

    /// Coefficient of the highest power of the last variable.
    pub fn leading_coefficient(&self) -> LaurentPoly {
        self.last_variable_coefficients().pop().expect("nonempty")
    }

    /// Drops variables in which the polynomial is constant.
    pub fn trim_variables(&self) -> Self {
        let used: Vec<usize> = (0..self.nvars())
            .filter(|&i| self.terms.keys().any(|e| e[i] != 0))
            .collect();
        let names: Vec<&str> = used.iter().map(|&i| self.variables[i].as_str()).collect();
        Self::from_terms(
            &names,
            self.terms
                .iter()
                .map(|(e, c)| (used.iter().map(|&i| e[i]).collect(), c.clone())),
        )
    }

    /// Floating-point copy for fast evaluation.
    pub fn to_f64_terms(&self) -> Vec<(Vec<i32>, f64)> {
        self.terms
            .iter()
            .map(|(e, c)| (e.clone(), c.to_f64().unwrap_or(f64::NAN)))
            .collect()
    }

    pub fn eval(&self, point: &[Complex64]) -> Complex64 {
        eval_terms(&self.to_f64_terms(), point)
    }

    /// Largest coefficient magnitude.
    pub fn scale(&self) -> f64 {
        self.terms
            .values()
            .map(|c| c.abs().to_f64().unwrap_or(f64::INFINITY))
            .fold(0.0, f64::max)
    }

    /// Partial derivative in variable `i`.
    pub fn derivative(&self, i: usize) -> Self {
        let mut p = Self { variables: self.variables.clone(), terms: BTreeMap::new() };
        for (e, c) in &self.terms {
            if e[i] != 0 {
                let mut e2 = e.clone();
                e2[i] -= 1;
                p.add_term(e2, c * BigRational::from_integer(BigInt::from(e[i])));
            }
        }
        p
    }

    /// Multiplies by a monomial so every exponent is non-negative and some exponent of each variable is 0.
    pub fn normalize_exponents(&self) -> Self {
        let mins: Vec<i32> = (0..self.nvars()).map(|i| self.degree_range(i).0).collect();
        Self {
            variables: self.variables.clone(),
            terms: self
                .terms
                .iter()
                .map(|(e, c)| (e.iter().zip(&mins).map(|(a, m)| a - m).collect(), c.clone()))
                .collect(),
        }
    }

    /// Expression tree for the polynomial, in `x, y, z`.
    pub fn to_expr(&self) -> Result<RationalExpr> {
        let p = self.to_xyz()?;
        let mut acc: Option<RationalExpr> = None;
        for (e, c) in &p.terms {
            let mut m = RationalExpr::Const(c.clone());
            for (i, &k) in e.iter().enumerate() {
                if k != 0 {
                    m = m * RationalExpr::Var(i).pow(k);
                }
            }
            acc = Some(match acc {
                None => m,
                Some(a) => a + m,
            });
        }
        Ok(acc.unwrap_or_else(|| RationalExpr::int(0)))
    }
}

pub fn eval_terms(terms: &[(Vec<i32>, f64)], point: &[Complex64]) -> Complex64 {
    let mut s = Complex64::new(0.0, 0.0);
    for (e, c) in terms {
        let mut m = Complex64::new(*c, 0.0);
        for (k, &ex) in e.iter().enumerate() {
            if ex != 0 {
                m *= point[k].powi(ex);
            }
        }
        s += m;
    }
    s
}

impl FromStr for LaurentPoly {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::parse(s)
    }
}

impl fmt::Display for LaurentPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (k, (e, c)) in self.terms.iter().rev().enumerate() {
            let neg = c.is_negative();
            let mag = c.abs();
            if k == 0 {
                if neg {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {} ", if neg { '-' } else { '+' })?;
            }
            let is_const = e.iter().all(|&x| x == 0);
            if !mag.is_one() || is_const {
                if mag.is_integer() {
                    write!(f, "{mag}")?;
                } else {
                    write!(f, "({mag})")?;
                }
                if !is_const {
                    write!(f, "*")?;
                }
            }
            let mut first = true;
            for (i, &x) in e.iter().enumerate() {
                if x == 0 {
                    continue;
                }
                if !first {
                    write!(f, "*")?;
                }
                first = false;
                write!(f, "{}", self.variables[i])?;
                if x < 0 {
                    write!(f, "^({x})")?;
                } else if x != 1 {
                    write!(f, "^{x}")?;
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_products_and_powers() {
        let p = LaurentPoly::parse("(1+x)*(1+y)*(x+y) + z").unwrap();
        assert_eq!(p.variables(), ["x", "y", "z"]);
        assert_eq!(p.terms().count(), 8);
        let q = LaurentPoly::parse("x^-1 + 2x^2y - y").unwrap();
        assert_eq!(q.degree_range(0), (-1, 2));
        assert!(LaurentPoly::parse("1/(x+1)").is_err());
        assert!(LaurentPoly::parse("x - x").is_err());
        let h = LaurentPoly::parse("1/2 (x+2) + (x^2+x+1)y").unwrap();
        let v = h.eval(&[Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0)]);
        assert!((v.re - 4.5).abs() < 1e-15);
    }

    #[test]
    fn variables_are_trimmed() {
        assert_eq!(LaurentPoly::parse("5z + x").unwrap().variables(), ["x", "z"]);
        assert!(LaurentPoly::parse("5").unwrap().variables().is_empty());
        assert_eq!(LaurentPoly::parse_xyz("1+x").unwrap().nvars(), 3);
    }

    #[test]
    fn coefficients_in_last_variable() {
        let p = LaurentPoly::parse("1 + (x+1)*y + (x-1)*z").unwrap();
        let c = p.last_variable_coefficients();
        assert_eq!(c.len(), 2);
        assert_eq!(c[1].variables(), ["x", "y"]);
        let pt = [Complex64::new(0.3, 0.8), Complex64::new(2.0, -1.0)];
        assert!((c[1].eval(&pt) - (pt[0] - 1.0)).norm() < 1e-15);
        assert!((c[0].eval(&pt) - (1.0 + (pt[0] + 1.0) * pt[1])).norm() < 1e-15);
    }

    #[test]
    fn display_round_trips() {
        for s in ["(x+1)^2 + (1-x)*(y+z)", "1/2*(x^4 + x + 2) - x^-3*y", "x^2 + 1 + (x+1)^2*y + (x-1)^2*z"] {
            let p = LaurentPoly::parse(s).unwrap();
            assert_eq!(LaurentPoly::parse(&p.to_string()).unwrap(), p, "{p}");
        }
    }
}
