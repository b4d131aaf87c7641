//! Decompositions `x∧y∧z = Σ c_j f_j∧(1−f_j)∧g_j`, their construction for
//! cyclotomic `A + By + Cz`, and pointwise certification through `η`.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::{parse_rational, rational_to_f64, Point3, RationalExpr};
use crate::forms::{complete_tangent, eta_from};
use crate::poly::LaurentPoly;

/// One term `c {f}₂ ⊗ g`.
#[derive(Debug, Clone, PartialEq)]
pub struct Term {
    pub c: BigRational,
    pub f: RationalExpr,
    pub g: RationalExpr,
}

impl Term {
    pub fn new(c: i64, f: &str, g: &str) -> Result<Self> {
        Ok(Self { c: BigRational::from_integer(c.into()), f: RationalExpr::parse(f)?, g: RationalExpr::parse(g)? })
    }

    pub fn coefficient(&self) -> f64 {
        rational_to_f64(&self.c)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Decomposition {
    pub terms: Vec<Term>,
}

/// Serialized form: `{c, f, g}` strings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermRecord {
    pub c: String,
    pub f: String,
    pub g: String,
}

/// A decomposition file: the polynomial and its terms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecompositionFile {
    pub polynomial: String,
    pub terms: Vec<TermRecord>,
}

impl Decomposition {
    pub fn from_records(records: &[TermRecord]) -> Result<Self> {
        let terms = records
            .iter()
            .map(|r| {
                Ok(Term { c: parse_rational(&r.c)?, f: RationalExpr::parse(&r.f)?, g: RationalExpr::parse(&r.g)? })
            })
            .collect::<Result<Vec<_>>>()?;
        let d = Self { terms };
        d.validate()?;
        Ok(d)
    }

    pub fn to_records(&self) -> Vec<TermRecord> {
        self.terms.iter().map(|t| TermRecord { c: t.c.to_string(), f: t.f.to_string(), g: t.g.to_string() }).collect()
    }

    /// Rejects `f ≡ 1`.
    pub fn validate(&self) -> Result<()> {
        for t in &self.terms {
            if t.f.constant_value().is_some_and(|v| v.is_one()) {
                return Err(Error::Degenerate(format!("term with f = 1: {}", t.f)));
            }
        }
        Ok(())
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn concat(&self, other: &Self) -> Self {
        Self { terms: self.terms.iter().chain(&other.terms).cloned().collect() }
    }

    /// Flips the sign of term `i`.
    pub fn mutate_sign(&self, i: usize) -> Self {
        let mut d = self.clone();
        d.terms[i].c = -d.terms[i].c.clone();
        d
    }
}

impl fmt::Display for Decomposition {
    fn fmt(&self, out: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(out, "0");
        }
        for (k, t) in self.terms.iter().enumerate() {
            let sign = if t.c.is_negative() { "-" } else if k > 0 { "+" } else { "" };
            let mag = t.c.abs();
            let coef = if mag.is_one() { String::new() } else { format!("{mag} ") };
            if k > 0 {
                write!(out, " ")?;
            }
            write!(out, "{sign}{}{{{}}}⊗({})", if k == 0 { "" } else { " " }.to_string() + &coef, t.f, t.g)?;
        }
        Ok(())
    }
}

impl DecompositionFile {
    pub fn decomposition(&self) -> Result<Decomposition> {
        Decomposition::from_records(&self.terms)
    }

    pub fn poly(&self) -> Result<LaurentPoly> {
        LaurentPoly::parse_xyz(&self.polynomial)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

pub const BUILTIN_DECOMPOSITIONS: &str = include_str!("../data/decompositions.json");

/// Decomposition files keyed by name.
pub fn parse_decompositions(json: &str) -> Result<BTreeMap<String, DecompositionFile>> {
    Ok(serde_json::from_str(json)?)
}

pub fn builtin_decompositions() -> BTreeMap<String, DecompositionFile> {
    parse_decompositions(BUILTIN_DECOMPOSITIONS).expect("shipped decomposition file is valid")
}

/// Looks a decomposition up in `dir/decompositions.json`, or in the shipped set.
pub fn find_decomposition(key: &str, dir: Option<&std::path::Path>) -> Result<DecompositionFile> {
    let mut all = match dir {
        Some(d) => parse_decompositions(&std::fs::read_to_string(d.join("decompositions.json"))?)?,
        None => builtin_decompositions(),
    };
    all.remove(key).ok_or_else(|| Error::MissingEntry(format!("decomposition {key}")))
}

/// Pullback of every `f_j`, `g_j` along `τ`.
pub fn tau_pull(d: &Decomposition) -> Decomposition {
    Decomposition { terms: d.terms.iter().map(|t| Term { c: t.c.clone(), f: t.f.tau(), g: t.g.tau() }).collect() }
}

/// `λ = ξ + ξ*`.
pub fn lambda(xi: &Decomposition) -> Decomposition {
    xi.concat(&tau_pull(xi))
}

/// `x^k · Π Φ_n(x)^e_n`, up to sign.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CyclotomicProduct {
    pub x_power: u32,
    /// `n → e_n`.
    pub factors: BTreeMap<u32, u32>,
}

/// Coefficients of `Φ_n`, lowest degree first.
pub fn cyclotomic_poly(n: u32) -> Vec<i64> {
    // x^n − 1 divided by Φ_d for the proper divisors d
    let mut num = vec![0i64; n as usize + 1];
    num[0] = -1;
    num[n as usize] = 1;
    for d in 1..n {
        if n % d == 0 {
            num = exact_div(&num, &cyclotomic_poly(d)).expect("Φ_d divides x^n − 1");
        }
    }
    num
}

fn exact_div(a: &[i64], b: &[i64]) -> Option<Vec<i64>> {
    let mut r = a.to_vec();
    while r.len() > 1 && *r.last().unwrap() == 0 {
        r.pop();
    }
    let db = b.len() - 1;
    if r.len() < b.len() {
        return if r.iter().all(|c| *c == 0) { Some(vec![0]) } else { None };
    }
    let lead = *b.last().unwrap();
    let mut q = vec![0i64; r.len() - db];
    for k in (0..q.len()).rev() {
        let top = r[k + db];
        if top % lead != 0 {
            return None;
        }
        let c = top / lead;
        q[k] = c;
        for (j, bj) in b.iter().enumerate() {
            r[k + j] -= c * bj;
        }
    }
    if r.iter().all(|c| *c == 0) {
        Some(q)
    } else {
        None
    }
}

impl CyclotomicProduct {
    pub fn one() -> Self {
        Self::default()
    }

    pub fn phi(n: u32) -> Self {
        Self::default().times(n, 1)
    }

    pub fn times(mut self, n: u32, e: u32) -> Self {
        if e > 0 {
            *self.factors.entry(n).or_insert(0) += e;
        }
        self
    }

    pub fn with_x_power(mut self, k: u32) -> Self {
        self.x_power = k;
        self
    }

    /// Factors a univariate polynomial in `x` over the cyclotomic polynomials.
    pub fn factor(p: &LaurentPoly) -> Result<Self> {
        let p = p.to_xyz()?;
        let (ylo, yhi) = p.degree_range(1);
        let (zlo, zhi) = p.degree_range(2);
        if p.is_zero() || ylo != 0 || yhi != 0 || zlo != 0 || zhi != 0 {
            return Err(Error::NonCyclotomic(format!("{p} is not a nonzero polynomial in x alone")));
        }
        let (lo, hi) = p.degree_range(0);
        if lo < 0 {
            return Err(Error::NonCyclotomic(format!("{p} has negative powers")));
        }
        let mut coeffs = vec![0i64; (hi + 1) as usize];
        for (e, c) in p.terms() {
            if !c.is_integer() {
                return Err(Error::NonCyclotomic(format!("{p} has non-integer coefficients")));
            }
            coeffs[e[0] as usize] = c.to_integer().to_i64().ok_or_else(|| Error::NonCyclotomic("coefficient overflow".into()))?;
        }
        let mut out = Self::default().with_x_power(lo as u32);
        let mut rest: Vec<i64> = coeffs[lo as usize..].to_vec();
        let mut n = 1u32;
        while rest.len() > 1 {
            let phi = cyclotomic_poly(n);
            if phi.len() > rest.len() {
                if n as usize > 4 * rest.len() * rest.len() + 8 {
                    break;
                }
                n += 1;
                continue;
            }
            match exact_div(&rest, &phi) {
                Some(q) => {
                    rest = q;
                    out = out.times(n, 1);
                }
                None => n += 1,
            }
        }
        if rest.len() != 1 || rest[0].abs() != 1 {
            return Err(Error::NonCyclotomic(format!("{p} leaves the cofactor {rest:?}")));
        }
        Ok(out)
    }

    pub fn to_expr(&self) -> RationalExpr {
        let mut e = RationalExpr::int(1);
        if self.x_power > 0 {
            e = RationalExpr::x().pow(self.x_power as i32);
        }
        for (&n, &k) in &self.factors {
            let phi = cyclotomic_poly(n);
            let mut q = RationalExpr::int(phi[0]);
            for (j, &c) in phi.iter().enumerate().skip(1) {
                let xj = RationalExpr::x().pow(j as i32);
                match c {
                    0 => {}
                    1 => q = q + xj,
                    -1 => q = q - xj,
                    _ => q = q + RationalExpr::int(c) * xj,
                }
            }
            let q = if k == 1 { q } else { q.pow(k as i32) };
            e = if e.constant_value().is_some_and(|v| v.is_one()) { q } else { e * q };
        }
        e
    }

    /// `x ∧ Π Φ_n^e = Σ a_k {±x^j}` as `(a_k, ±x^j)` pairs; the `x^k` part contributes nothing.
    fn wedge_with_x(&self) -> Vec<(BigRational, RationalExpr)> {
        let mut out = Vec::new();
        for (&n, &e) in &self.factors {
            // Φ_n(x) = Φ_m(−x^k) with n = 2^a m, m odd, k = 2^{a−1} when a ≥ 1
            let a = n.trailing_zeros();
            let m = n >> a;
            let (negate, k) = if a == 0 { (false, 1) } else { (true, 1u32 << (a - 1)) };
            for d in (1..=m).rev() {
                if m % d != 0 {
                    continue;
                }
                let mu = mobius(m / d);
                if mu == 0 {
                    continue;
                }
                let j = k * d;
                let c = BigRational::new(BigInt::from(mu * e as i64), BigInt::from(j));
                let xj = if j == 1 { RationalExpr::x() } else { RationalExpr::x().pow(j as i32) };
                let f = if negate { -xj } else { xj };
                out.push((c, f));
            }
        }
        out
    }
}

fn mobius(mut n: u32) -> i64 {
    let mut result = 1;
    let mut p = 2;
    while p * p <= n {
        if n % p == 0 {
            n /= p;
            if n % p == 0 {
                return 0;
            }
            result = -result;
        }
        p += 1;
    }
    if n > 1 {
        result = -result;
    }
    result
}

/// Decomposition of `x∧y∧z` on `A + By + Cz = 0` with cyclotomic `A, B, C`.
///
/// With `f = −(B/A) y` and `w = 1 − f`:
/// `x∧y∧z = x∧y∧A − x∧y∧C + {f}⊗x − x∧B∧w + x∧A∧w`,
/// emitted in that order. `x∧(1 − u^j) = (1/j){u^j}`-type rewriting turns each
/// cyclotomic wedge into terms `{±x^j}`, using `Φ_{2^a m}(x) = Φ_m(−x^{2^{a−1}})`.
pub fn cyclotomic_decompose(a: &CyclotomicProduct, b: &CyclotomicProduct, c: &CyclotomicProduct) -> Result<Decomposition> {
    let (ae, be) = (a.to_expr(), b.to_expr());
    let f = -(be.clone() / ae.clone() * RationalExpr::y());
    let f = simplify_unit(f, &ae, &be);
    let w = f.one_minus();
    let y = RationalExpr::y();
    let mut terms = Vec::new();
    // x∧y∧Φ = −Σ a_k {±x^j}⊗y
    for (coef, fx) in a.wedge_with_x() {
        terms.push(Term { c: -coef, f: fx, g: y.clone() });
    }
    for (coef, fx) in c.wedge_with_x() {
        terms.push(Term { c: coef, f: fx, g: y.clone() });
    }
    terms.push(Term { c: BigRational::one(), f, g: RationalExpr::x() });
    for (coef, fx) in b.wedge_with_x() {
        terms.push(Term { c: -coef, f: fx, g: w.clone() });
    }
    for (coef, fx) in a.wedge_with_x() {
        terms.push(Term { c: coef, f: fx, g: w.clone() });
    }
    Ok(Decomposition { terms })
}

/// `−(B/A)y` without the trivial `1` factors.
fn simplify_unit(f: RationalExpr, a: &RationalExpr, b: &RationalExpr) -> RationalExpr {
    let unit = |e: &RationalExpr| e.constant_value().is_some_and(|v| v.is_one());
    match (unit(a), unit(b)) {
        (true, true) => -RationalExpr::y(),
        (true, false) => -(b.clone() * RationalExpr::y()),
        _ => f,
    }
}

/// Splits `P` into univariate `A + By + Cz` and factors each part.
pub fn cyclotomic_parts(p: &LaurentPoly) -> Result<[CyclotomicProduct; 3]> {
    let p = p.to_xyz()?;
    let mut parts = [BTreeMap::new(), BTreeMap::new(), BTreeMap::new()];
    for (e, c) in p.terms() {
        let slot = match (e[1], e[2]) {
            (0, 0) => 0,
            (1, 0) => 1,
            (0, 1) => 2,
            _ => return Err(Error::NonCyclotomic(format!("{p} is not of the form A + By + Cz"))),
        };
        parts[slot].insert(vec![e[0], 0, 0], c.clone());
    }
    let mut out = Vec::new();
    for part in parts {
        let poly = LaurentPoly::from_terms(&["x", "y", "z"], part);
        out.push(CyclotomicProduct::factor(&poly)?);
    }
    Ok([out[0].clone(), out[1].clone(), out[2].clone()])
}

/// Maximum of `|η(target) − Σ c_j η(f_j, 1−f_j, g_j)|` over random points of `V_P`.
///
/// `(x, y)` are drawn from the torus with radii perturbed by ±0.1, `z` is a fiber root,
/// and the two tangents have random `(dx, dy)` parts of unit size.
pub fn eta_defect(p: &LaurentPoly, target: &[RationalExpr; 3], d: &Decomposition, samples: usize, seed: u64) -> Result<f64> {
    let p = p.to_xyz()?;
    let (px, py, pz) = (p.derivative(0), p.derivative(1), p.derivative(2));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    let mut taken = 0;
    let mut attempts = 0;
    while taken < samples {
        attempts += 1;
        if attempts > 20 * samples + 100 {
            return Err(Error::Sampling(format!("only {taken} of {samples} admissible samples")));
        }
        let x = Complex64::from_polar(rng.gen_range(0.9..1.1), rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI));
        let y = Complex64::from_polar(rng.gen_range(0.9..1.1), rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI));
        let roots = match crate::mahler::fiber_roots(&p, x, y) {
            Ok(r) if !r.is_empty() => r,
            _ => continue,
        };
        let z = roots[rng.gen_range(0..roots.len())];
        let q: Point3 = [x, y, z];
        let grad = [px.eval(&q), py.eval(&q), pz.eval(&q)];
        let mut dir = || {
            let v = [Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)), Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))];
            let n = (v[0].norm_sqr() + v[1].norm_sqr()).sqrt();
            [v[0] / n, v[1] / n]
        };
        let (u, v) = (dir(), dir());
        let (tu, tv) = match (complete_tangent(&grad, u[0], u[1]), complete_tangent(&grad, v[0], v[1])) {
            (Ok(a), Ok(b)) => (a, b),
            _ => continue,
        };
        let dual = |e: &RationalExpr| [e.eval_dual(&q, &tu), e.eval_dual(&q, &tv)];
        let ok = |v: Complex64| v.norm() > 1e-6 && v.norm() < 1e6 && v.re.is_finite();
        let t: Vec<_> = target.iter().map(dual).collect();
        if !t.iter().all(|d| ok(d[0].v)) {
            continue;
        }
        let lhs = eta_from(&t[0], &t[1], &t[2]);
        let mut rhs = 0.0;
        let mut admissible = true;
        for term in &d.terms {
            let (f, g) = (dual(&term.f), dual(&term.g));
            let omf = [f[0].map_one_minus(), f[1].map_one_minus()];
            if !(ok(f[0].v) && ok(omf[0].v) && ok(g[0].v)) {
                admissible = false;
                break;
            }
            rhs += term.coefficient() * eta_from(&f, &omf, &g);
        }
        if !admissible {
            continue;
        }
        worst = worst.max((lhs - rhs).abs());
        taken += 1;
    }
    Ok(worst)
}

/// [`eta_defect`] against `η(x, y, z)`.
pub fn decomposition_defect(p: &LaurentPoly, d: &Decomposition, samples: usize, seed: u64) -> Result<f64> {
    eta_defect(p, &[RationalExpr::x(), RationalExpr::y(), RationalExpr::z()], d, samples, seed)
}

trait OneMinus {
    fn map_one_minus(self) -> Self;
}

impl OneMinus for crate::expr::Dual {
    fn map_one_minus(self) -> Self {
        crate::expr::Dual { v: Complex64::new(1.0, 0.0) - self.v, d: -self.d }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn poly(s: &str) -> LaurentPoly {
        LaurentPoly::parse_xyz(s).unwrap()
    }

    fn cp(p: &str) -> CyclotomicProduct {
        CyclotomicProduct::factor(&poly(p)).unwrap()
    }

    #[test]
    fn cyclotomic_polynomials() {
        assert_eq!(cyclotomic_poly(1), vec![-1, 1]);
        assert_eq!(cyclotomic_poly(2), vec![1, 1]);
        assert_eq!(cyclotomic_poly(6), vec![1, -1, 1]);
        assert_eq!(cyclotomic_poly(12), vec![1, 0, -1, 0, 1]);
        assert_eq!(cyclotomic_poly(15), vec![1, -1, 0, 1, -1, 1, 0, -1, 1]);
    }

    #[test]
    fn factoring() {
        assert_eq!(cp("x^2 - 1"), CyclotomicProduct::phi(1).times(2, 1));
        assert_eq!(cp("x*(x^2+x+1)^2"), CyclotomicProduct::phi(3).times(3, 1).with_x_power(1));
        assert_eq!(cp("-(x+1)^3"), CyclotomicProduct::phi(2).times(2, 2));
        assert!(matches!(CyclotomicProduct::factor(&poly("x^2 + x - 1")), Err(Error::NonCyclotomic(_))));
        assert!(matches!(CyclotomicProduct::factor(&poly("2*x + 2")), Err(Error::NonCyclotomic(_))));
    }

    #[test]
    fn maillot_21a1_shape() {
        let d = cyclotomic_decompose(&CyclotomicProduct::one(), &cp("x+1"), &cp("x-1")).unwrap();
        assert_eq!(d.len(), 3);
        let printed: Vec<String> = d.terms.iter().map(|t| format!("{} {} {}", t.c, t.f, t.g)).collect();
        let want = [("1", "x", "y"), ("1", "-(x+1)*y", "x"), ("-1", "-x", "1+(x+1)*y")];
        for ((c, f, g), got) in want.iter().zip(&d.terms) {
            assert_eq!(got.c.to_string(), *c, "{printed:?}");
            let pt = [Complex64::new(0.3, 0.2), Complex64::new(-0.7, 1.1), Complex64::new(0.4, 0.0)];
            assert!((got.f.eval(&pt) - RationalExpr::parse(f).unwrap().eval(&pt)).norm() < 1e-14, "{printed:?}");
            assert!((got.g.eval(&pt) - RationalExpr::parse(g).unwrap().eval(&pt)).norm() < 1e-14, "{printed:?}");
        }
        let p = poly("1 + (x+1)*y + (x-1)*z");
        assert!(decomposition_defect(&p, &d, 100, 7).unwrap() < 1e-8);
        for i in 0..3 {
            assert!(decomposition_defect(&p, &d.mutate_sign(i), 100, 7).unwrap() > 1e-2);
        }
    }

    #[test]
    fn five_terms_for_45a2_shape() {
        let d = cyclotomic_decompose(&CyclotomicProduct::one(), &cp("x^2-x+1"), &cp("x^2+x+1")).unwrap();
        assert_eq!(d.len(), 5);
        assert_eq!(d.terms[0].f.to_string(), RationalExpr::x().pow(3).to_string());
        assert_eq!(d.terms[1].f.to_string(), "x");
        let p = poly("1 + (x^2-x+1)*y + (x^2+x+1)*z");
        assert!(decomposition_defect(&p, &d, 100, 8).unwrap() < 1e-8);
    }

    #[test]
    fn base_case_is_a_single_term() {
        let one = CyclotomicProduct::one();
        let d = cyclotomic_decompose(&one, &one, &one).unwrap();
        assert_eq!(d.len(), 1);
        assert!(decomposition_defect(&poly("1 + y + z"), &d, 50, 9).unwrap() < 1e-8);
    }

    #[test]
    fn cyclotomic_outputs_certify() {
        for p in [
            "(x+1)*(y+1) + z",
            "x^2+1 + (x+1)^2*y + (x-1)^2*z",
            "x^2+1 + (x+1)^2*y + (x^2-1)*z",
            "1 + (x+1)*(x^2+x+1)*y + (x+1)^3*z",
            "x^4+1 + (x^6-1)*y + x*(x^2+1)*z",
            "x^2+x+1 + (x^2+x+1)*y + (x-1)^2*z",
        ] {
            let p = poly(p);
            let [a, b, c] = cyclotomic_parts(&p).unwrap();
            let d = cyclotomic_decompose(&a, &b, &c).unwrap();
            let defect = decomposition_defect(&p, &d, 100, 10).unwrap();
            assert!(defect < 1e-8, "{p}: {defect}");
        }
    }

    #[test]
    fn tau_pull_examples() {
        let pt = [Complex64::new(0.3, 0.9), Complex64::new(-1.2, 0.5), Complex64::new(2.0, -1.0)];
        let (x, y) = (pt[0], pt[1]);
        let f2 = RationalExpr::parse("-(x+1)*y").unwrap().tau();
        assert!((f2.eval(&pt) - (-(x + 1.0) / (x * y))).norm() < 1e-14);
        let g3 = RationalExpr::parse("1+(x+1)*y").unwrap().tau();
        assert!((g3.eval(&pt) - (x * y + x + 1.0) / (x * y)).norm() < 1e-14);
    }

    #[test]
    fn tau_is_an_involution() {
        let d = cyclotomic_decompose(&CyclotomicProduct::one(), &cp("x^2-x+1"), &cp("x^2+x+1")).unwrap();
        let dd = tau_pull(&tau_pull(&d));
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let mut r = || Complex64::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
            let pt = [r(), r(), r()];
            for (a, b) in d.terms.iter().zip(&dd.terms) {
                for (u, v) in [(a.f.eval(&pt), b.f.eval(&pt)), (a.g.eval(&pt), b.g.eval(&pt))] {
                    assert!((u - v).norm() <= 1e-12 * (1.0 + u.norm()));
                }
            }
        }
    }

    #[test]
    fn lambda_symmetry() {
        let p = poly("1 + (x+1)*y + (x-1)*z");
        let d = cyclotomic_decompose(&CyclotomicProduct::one(), &cp("x+1"), &cp("x-1")).unwrap();
        let base = decomposition_defect(&p, &d, 60, 12).unwrap();
        let target = [RationalExpr::x().tau(), RationalExpr::y().tau(), RationalExpr::z().tau()];
        // the pulled identity lives on τ⁻¹(V_P) = V_{P∘τ}
        let pstar = p.invert_variables().normalize_exponents();
        let pulled = eta_defect(&pstar, &target, &tau_pull(&d), 60, 12).unwrap();
        assert!((base - pulled).abs() < 1e-10, "{base} {pulled}");
    }

    #[test]
    fn empty_decomposition_measures_eta_itself() {
        let p = poly("1 + (x+1)*y + (x-1)*z");
        let v = decomposition_defect(&p, &Decomposition::default(), 30, 13).unwrap();
        assert!(v > 1e-3);
    }

    #[test]
    fn record_round_trip() {
        let d = cyclotomic_decompose(&CyclotomicProduct::one(), &cp("x^2-x+1"), &cp("x^2+x+1")).unwrap();
        let back = Decomposition::from_records(&d.to_records()).unwrap();
        assert_eq!(back.to_records(), d.to_records());
        assert!(Decomposition::from_records(&[TermRecord { c: "1".into(), f: "1".into(), g: "x".into() }]).is_err());
    }
}
