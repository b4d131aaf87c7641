//! Formal sums of dilogarithm symbols, residue elements `u_p` read off curve
//! dossiers, and numeric triviality tests through `D` at every embedding.

use std::collections::BTreeMap;
use std::f64::consts::LN_2;
use std::fmt;
use std::path::Path;

use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::{rational_convergent, rational_to_f64, Point3, RationalExpr};
use crate::mahler::poly_roots;
use crate::poly::LaurentPoly;
use crate::specialfn::{bloch_wigner, ComplexOrInfinity};
use crate::wedge::{find_decomposition, tau_pull, Decomposition};

/// Radius for deciding that two embeddings are the same number.
pub const MATCH_RADIUS: f64 = 1e-8;
/// `max |D| ≤` this counts as numerically zero.
pub const TRIVIALITY_THRESHOLD: f64 = 1e-9;

const LIMIT_STEP: f64 = 1e-3;
const LIMIT_DIRECTION: f64 = 0.7;

fn horner(c: &[i64], z: Complex64) -> Complex64 {
    c.iter().rev().fold(Complex64::zero(), |acc, &k| acc * z + k as f64)
}

fn horner_scale(c: &[i64], z: Complex64) -> f64 {
    let r = z.norm();
    c.iter().enumerate().map(|(k, &a)| (a as f64).abs() * r.powi(k as i32)).sum::<f64>().max(1e-300)
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

/// Algebraic number given by its minimal polynomial and all of its complex embeddings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgebraicPoint {
    /// Integer coefficients, lowest degree first.
    pub minpoly: Vec<i64>,
    pub embeddings: Vec<Complex64>,
}

impl AlgebraicPoint {
    pub fn new(minpoly: Vec<i64>, embeddings: Vec<Complex64>) -> Result<Self> {
        if minpoly.len() < 2 || *minpoly.last().unwrap() == 0 {
            return Err(Error::Degenerate(format!("bad minimal polynomial {minpoly:?}")));
        }
        for z in &embeddings {
            let r = horner(&minpoly, *z).norm() / horner_scale(&minpoly, *z);
            if !(r <= 1e-10) {
                return Err(Error::IncompatibleEmbeddings(format!("{z} is not a root of {minpoly:?} (residual {r:.1e})")));
            }
        }
        for (i, a) in embeddings.iter().enumerate() {
            if embeddings[..i].iter().any(|b| (a - b).norm() <= MATCH_RADIUS) {
                return Err(Error::IncompatibleEmbeddings(format!("repeated embedding {a}")));
            }
        }
        Ok(Self { minpoly, embeddings })
    }

    /// Recovers the minimal polynomial from a complete set of conjugates (repeats allowed)
    /// and polishes the embeddings against it.
    pub fn from_conjugates(values: &[Complex64]) -> Result<Self> {
        let mut distinct: Vec<Complex64> = Vec::new();
        for v in values {
            if distinct.iter().all(|w| (v - w).norm() > 1e-6 * (1.0 + w.norm())) {
                distinct.push(*v);
            }
        }
        let mut c = vec![Complex64::one()];
        for r in &distinct {
            c.insert(0, Complex64::zero());
            for i in 0..c.len() - 1 {
                let next = c[i + 1];
                c[i] -= r * next;
            }
        }
        let fail = || Error::Degenerate(format!("no small-height minimal polynomial through {distinct:?}"));
        let mut q = Vec::with_capacity(c.len());
        for z in &c {
            let tol = 1e-8 * (1.0 + z.norm());
            if z.im.abs() > tol {
                return Err(fail());
            }
            q.push(rational_convergent(z.re, 1000, tol).ok_or_else(fail)?);
        }
        let lcm = q.iter().fold(1i64, |acc, r| {
            let d: i64 = r.denom().try_into().unwrap_or(1);
            acc / gcd(acc, d) * d
        });
        let mut minpoly: Vec<i64> = q
            .iter()
            .map(|r| (r * BigRational::from_integer(lcm.into())).to_integer().try_into().unwrap_or(0))
            .collect();
        let g = minpoly.iter().fold(0, |acc, &k| gcd(acc, k));
        if g > 1 {
            minpoly.iter_mut().for_each(|k| *k /= g);
        }
        let deriv: Vec<i64> = minpoly.iter().enumerate().skip(1).map(|(k, &a)| k as i64 * a).collect();
        let polished = distinct
            .iter()
            .map(|&z0| {
                let mut z = z0;
                for _ in 0..30 {
                    let d = horner(&deriv, z);
                    if d.norm() == 0.0 {
                        break;
                    }
                    let step = horner(&minpoly, z) / d;
                    z -= step;
                    if step.norm() <= 1e-16 * (1.0 + z.norm()) {
                        break;
                    }
                }
                z
            })
            .collect();
        Self::new(minpoly, polished)
    }

    pub fn rational(q: &BigRational) -> Self {
        let n: i64 = q.numer().try_into().expect("small rational");
        let d: i64 = q.denom().try_into().expect("small rational");
        Self { minpoly: vec![-n, d], embeddings: vec![Complex64::new(rational_to_f64(q), 0.0)] }
    }

    pub fn degree(&self) -> usize {
        self.minpoly.len() - 1
    }

    /// The value when the number is rational.
    pub fn as_rational(&self) -> Option<BigRational> {
        (self.degree() == 1).then(|| BigRational::new((-self.minpoly[0]).into(), self.minpoly[1].into()))
    }

    /// `1/a`; the constant term must not vanish.
    pub fn inverse(&self) -> Self {
        let mut minpoly: Vec<i64> = self.minpoly.iter().rev().copied().collect();
        if *minpoly.last().unwrap() < 0 {
            minpoly.iter_mut().for_each(|k| *k = -*k);
        }
        Self { minpoly, embeddings: self.embeddings.iter().map(|z| z.inv()).collect() }
    }

    /// Index of the embedding closest to `z`.
    pub fn nearest(&self, z: Complex64) -> usize {
        let mut best = 0;
        for (i, e) in self.embeddings.iter().enumerate() {
            if (e - z).norm() < (self.embeddings[best] - z).norm() {
                best = i;
            }
        }
        best
    }
}

/// Argument of a symbol `{a}₂`, with one chosen embedding per slot of the ambient frame.
#[derive(Debug, Clone, PartialEq)]
pub enum Argument {
    Zero,
    One,
    Infinity,
    Algebraic { point: AlgebraicPoint, frame: Vec<usize> },
}

impl Argument {
    /// A rational argument, the same in every slot.
    pub fn rational(q: &BigRational, slots: usize) -> Self {
        if q.is_zero() {
            Self::Zero
        } else if q.is_one() {
            Self::One
        } else {
            Self::Algebraic { point: AlgebraicPoint::rational(q), frame: vec![0; slots] }
        }
    }

    /// An argument whose embedding in slot `k` is `values[k]`.
    pub fn from_values(values: &[Complex64]) -> Result<Self> {
        let point = AlgebraicPoint::from_conjugates(values)?;
        if let Some(q) = point.as_rational() {
            if q.is_zero() {
                return Ok(Self::Zero);
            }
            if q.is_one() {
                return Ok(Self::One);
            }
        }
        let frame = values.iter().map(|v| point.nearest(*v)).collect();
        Ok(Self::Algebraic { point, frame })
    }

    pub fn value(&self, slot: usize) -> ComplexOrInfinity {
        match self {
            Self::Zero => ComplexOrInfinity::Finite(Complex64::zero()),
            Self::One => ComplexOrInfinity::Finite(Complex64::one()),
            Self::Infinity => ComplexOrInfinity::Infinity,
            Self::Algebraic { point, frame } => ComplexOrInfinity::Finite(point.embeddings[frame[slot]]),
        }
    }

    pub fn is_degenerate(&self) -> bool {
        !matches!(self, Self::Algebraic { .. })
    }

    fn is_real(&self) -> bool {
        match self {
            Self::Algebraic { point, frame } => frame.iter().all(|&i| point.embeddings[i].im.abs() <= 1e-12 || point.degree() == 1),
            _ => true,
        }
    }

    fn same(&self, other: &Self) -> bool {
        match (self, other) {
            (Self::Algebraic { point: a, frame: fa }, Self::Algebraic { point: b, frame: fb }) => {
                a.minpoly == b.minpoly
                    && fa.len() == fb.len()
                    && fa.iter().zip(fb).all(|(&i, &j)| (a.embeddings[i] - b.embeddings[j]).norm() <= MATCH_RADIUS)
            }
            _ => std::mem::discriminant(self) == std::mem::discriminant(other),
        }
    }

    fn inverted(&self) -> Self {
        match self {
            Self::Algebraic { point, frame } => Self::Algebraic { point: point.inverse(), frame: frame.clone() },
            Self::Zero => Self::Infinity,
            Self::Infinity => Self::Zero,
            Self::One => Self::One,
        }
    }
}

impl fmt::Display for Argument {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Zero => write!(f, "0"),
            Self::One => write!(f, "1"),
            Self::Infinity => write!(f, "∞"),
            Self::Algebraic { point, frame } => match point.as_rational() {
                Some(q) => write!(f, "{q}"),
                None => {
                    let z = point.embeddings[frame.first().copied().unwrap_or(0)];
                    write!(f, "{:.6}{:+.6}i", z.re, z.im)
                }
            },
        }
    }
}

/// `Σ c_i {a_i}₂` over a common frame of `slots` embeddings.
#[derive(Debug, Clone, PartialEq)]
pub struct FormalDilogSum {
    pub slots: usize,
    pub terms: Vec<(BigRational, Argument)>,
}

impl FormalDilogSum {
    pub fn new(slots: usize) -> Self {
        Self { slots, terms: Vec::new() }
    }

    pub fn push(&mut self, c: BigRational, a: Argument) {
        self.terms.push((c, a));
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }
}

impl fmt::Display for FormalDilogSum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (k, (c, a)) in self.terms.iter().enumerate() {
            let sign = if c.is_negative() { "-" } else if k > 0 { "+" } else { "" };
            let mag = c.abs();
            let coef = if mag.is_one() { String::new() } else { format!("{mag}") };
            if k > 0 {
                write!(f, " ")?;
            }
            write!(f, "{sign}{coef}{{{a}}}")?;
        }
        Ok(())
    }
}

/// Drops `{0}, {1}, {∞}`, uses `{1/a} = −{a}` to pick the representative with `|a| > 1`
/// (or `Im a > 0` on the unit circle, read in the first slot), merges equal arguments
/// and drops zero coefficients. `{−1}` vanishes under the inversion rule.
pub fn normalize(s: &FormalDilogSum) -> FormalDilogSum {
    let mut out = FormalDilogSum::new(s.slots);
    for (c, a) in &s.terms {
        if c.is_zero() || a.is_degenerate() {
            continue;
        }
        let (c, a) = match a.value(0) {
            ComplexOrInfinity::Finite(z) => {
                let r = z.norm();
                if (r - 1.0).abs() <= 1e-12 && z.im.abs() <= 1e-12 {
                    // ±1
                    continue;
                }
                if r < 1.0 - 1e-12 || ((r - 1.0).abs() <= 1e-12 && z.im < 0.0) {
                    (-c.clone(), a.inverted())
                } else {
                    (c.clone(), a.clone())
                }
            }
            ComplexOrInfinity::Infinity => continue,
        };
        match out.terms.iter_mut().find(|(_, b)| b.same(&a)) {
            Some((acc, _)) => *acc += c,
            None => out.terms.push((c, a)),
        }
    }
    out.terms.retain(|(c, _)| !c.is_zero());
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Trivial,
    Nontrivial,
    /// `D` vanishes everywhere but the sum is not empty.
    Inconclusive,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Trivial => "trivial",
            Self::Nontrivial => "nontrivial",
            Self::Inconclusive => "inconclusive",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DProfile {
    /// `Σ c_i D(a_i)` in each slot.
    pub values: Vec<f64>,
    pub numerically_trivial: bool,
    /// Every argument is real in every slot.
    pub real_support: bool,
    pub verdict: Verdict,
}

pub fn d_profile(s: &FormalDilogSum) -> Result<DProfile> {
    for (_, a) in &s.terms {
        if let Argument::Algebraic { point, frame } = a {
            if frame.len() != s.slots || frame.iter().any(|&i| i >= point.embeddings.len()) {
                return Err(Error::IncompatibleEmbeddings(format!("{a} does not fit a frame of {} slots", s.slots)));
            }
        }
    }
    let n = normalize(s);
    let values: Vec<f64> = (0..s.slots)
        .map(|k| n.terms.iter().map(|(c, a)| rational_to_f64(c) * bloch_wigner(a.value(k))).sum())
        .collect();
    let numerically_trivial = values.iter().all(|v| v.abs() <= TRIVIALITY_THRESHOLD);
    let verdict = if !numerically_trivial {
        Verdict::Nontrivial
    } else if n.is_empty() {
        Verdict::Trivial
    } else {
        Verdict::Inconclusive
    };
    Ok(DProfile { values, numerically_trivial, real_support: n.terms.iter().all(|(_, a)| a.is_real()), verdict })
}

// ---------------------------------------------------------------------------
// dossiers

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CoordRecord {
    Finite([f64; 2]),
    /// The string `"inf"`.
    Infinite(String),
}

impl CoordRecord {
    fn value(&self) -> Result<ComplexOrInfinity> {
        match self {
            Self::Finite([re, im]) => ComplexOrInfinity::finite(Complex64::new(*re, *im)),
            Self::Infinite(s) if s == "inf" => Ok(ComplexOrInfinity::Infinity),
            Self::Infinite(s) => Err(Error::Parse(format!("coordinate {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingRecord {
    /// Index of the base-field embedding this one lies over.
    pub base: usize,
    pub x: CoordRecord,
    pub y: CoordRecord,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointRecord {
    pub name: String,
    pub minpoly_x: Option<Vec<i64>>,
    pub minpoly_y: Option<Vec<i64>>,
    pub embeddings: Vec<EmbeddingRecord>,
}

/// Plane model of the curve and the map back to the original `x, y`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelRecord {
    pub equation: String,
    pub x: String,
    pub y: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaseFieldRecord {
    pub minpoly: Vec<i64>,
    pub embeddings: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DossierFile {
    pub curve: String,
    pub polynomial: String,
    pub decomposition: String,
    pub model: ModelRecord,
    pub base_field: BaseFieldRecord,
    pub points: Vec<PointRecord>,
    pub divisors: BTreeMap<String, Vec<(String, i32)>>,
}

const BUILTIN_DOSSIERS: [(&str, &str); 3] = [
    ("21a1", include_str!("../data/dossiers/21a1.json")),
    ("45a2", include_str!("../data/dossiers/45a2.json")),
    ("48a1", include_str!("../data/dossiers/48a1.json")),
];

pub fn builtin_dossier_labels() -> Vec<&'static str> {
    BUILTIN_DOSSIERS.iter().map(|(l, _)| *l).collect()
}

/// One embedding of a point, in model coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointRow {
    pub base: usize,
    pub x: ComplexOrInfinity,
    pub y: ComplexOrInfinity,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DossierPoint {
    pub name: String,
    /// Model coordinates; `None` at infinity.
    pub x: Option<AlgebraicPoint>,
    pub y: Option<AlgebraicPoint>,
    pub rows: Vec<PointRow>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DivisorTable {
    pub function: String,
    pub expr: RationalExpr,
    /// `(point index, valuation)`.
    pub entries: Vec<(usize, i32)>,
}

impl DivisorTable {
    pub fn valuation(&self, point: usize) -> i32 {
        self.entries.iter().filter(|(p, _)| *p == point).map(|(_, v)| v).sum()
    }
}

#[derive(Debug, Clone)]
pub struct CurveDossier {
    pub label: String,
    pub polynomial: LaurentPoly,
    pub decomposition: Decomposition,
    pub base: Vec<Complex64>,
    pub points: Vec<DossierPoint>,
    pub divisors: Vec<DivisorTable>,
    /// Model coefficients by power of the second coordinate: `(power of x, coefficient)`.
    model: Vec<Vec<(i32, f64)>>,
    x_map: RationalExpr,
    y_map: RationalExpr,
    /// `P = P0 + P1 z`, when `P` is linear in `z`.
    z_parts: Option<[Vec<(Vec<i32>, f64)>; 2]>,
    samples: Vec<Point3>,
}

fn chordal(a: Complex64, b: ComplexOrInfinity) -> f64 {
    match b {
        ComplexOrInfinity::Infinity => 1.0 / (1.0 + a.norm_sqr()).sqrt(),
        ComplexOrInfinity::Finite(b) => (a - b).norm() / ((1.0 + a.norm_sqr()) * (1.0 + b.norm_sqr())).sqrt(),
    }
}

fn richardson(v: [Complex64; 3]) -> Complex64 {
    (v[0] - v[1] * 6.0 + v[2] * 8.0) / 3.0
}

impl CurveDossier {
    pub fn from_json(json: &str, dir: Option<&Path>) -> Result<Self> {
        Self::from_file(serde_json::from_str(json)?, dir)
    }

    /// Reads `dir/dossiers/<label>.json`, or the shipped dossier when `dir` is `None`.
    pub fn load(label: &str, dir: Option<&Path>) -> Result<Self> {
        match dir {
            Some(d) => Self::from_json(&std::fs::read_to_string(d.join("dossiers").join(format!("{label}.json")))?, dir),
            None => {
                let (_, json) = BUILTIN_DOSSIERS
                    .iter()
                    .find(|(l, _)| *l == label)
                    .ok_or_else(|| Error::MissingEntry(format!("dossier {label}")))?;
                Self::from_json(json, None)
            }
        }
    }

    pub fn from_file(f: DossierFile, dir: Option<&Path>) -> Result<Self> {
        let polynomial = LaurentPoly::parse_xyz(&f.polynomial)?;
        let decomposition = find_decomposition(&f.decomposition, dir)?.decomposition()?;

        let eq = LaurentPoly::parse_xyz(&f.model.equation)?.normalize_exponents();
        let mut model: Vec<Vec<(i32, f64)>> = Vec::new();
        for (e, c) in eq.to_xyz()?.to_f64_terms() {
            if e[2] != 0 {
                return Err(Error::Parse("the model must not involve z".into()));
            }
            let k = e[1] as usize;
            if model.len() <= k {
                model.resize(k + 1, Vec::new());
            }
            model[k].push((e[0], c));
        }
        if model.len() < 2 {
            return Err(Error::Degenerate("the model does not involve y".into()));
        }

        let p = polynomial.to_xyz()?;
        let (zlo, zhi) = p.degree_range(2);
        let z_parts = (zlo == 0 && zhi == 1).then(|| {
            let t = p.to_f64_terms();
            let part = |k| t.iter().filter(|(e, _)| e[2] == k).cloned().collect::<Vec<_>>();
            [part(0), part(1)]
        });

        let base: Vec<Complex64> = f.base_field.embeddings.iter().map(|[re, im]| Complex64::new(*re, *im)).collect();
        AlgebraicPoint::new(f.base_field.minpoly.clone(), base.clone())?;

        let mut points = Vec::new();
        for rec in &f.points {
            let rows = rec
                .embeddings
                .iter()
                .map(|e| {
                    if e.base >= base.len() {
                        return Err(Error::IncompatibleEmbeddings(format!("{}: base index {}", rec.name, e.base)));
                    }
                    Ok(PointRow { base: e.base, x: e.x.value()?, y: e.y.value()? })
                })
                .collect::<Result<Vec<_>>>()?;
            if rows.is_empty() || rows.len() % base.len() != 0 {
                return Err(Error::IncompatibleEmbeddings(format!("{}: {} embeddings", rec.name, rows.len())));
            }
            let coord = |mp: &Option<Vec<i64>>, pick: fn(&PointRow) -> ComplexOrInfinity| -> Result<Option<AlgebraicPoint>> {
                let vals: Vec<ComplexOrInfinity> = rows.iter().map(pick).collect();
                match mp {
                    None if vals.iter().all(|v| v.is_infinite()) => Ok(None),
                    None => Err(Error::IncompatibleEmbeddings(format!("{}: finite coordinate without a minimal polynomial", rec.name))),
                    Some(m) => {
                        let mut distinct: Vec<Complex64> = Vec::new();
                        for v in vals {
                            let ComplexOrInfinity::Finite(z) = v else {
                                return Err(Error::IncompatibleEmbeddings(format!("{}: infinite coordinate with a minimal polynomial", rec.name)));
                            };
                            if distinct.iter().all(|w| (w - z).norm() > MATCH_RADIUS) {
                                distinct.push(z);
                            }
                        }
                        AlgebraicPoint::new(m.clone(), distinct).map(Some)
                    }
                }
            };
            let x = coord(&rec.minpoly_x, |r| r.x)?;
            let y = coord(&rec.minpoly_y, |r| r.y)?;
            points.push(DossierPoint { name: rec.name.clone(), x, y, rows });
        }

        let index = |name: &str| {
            points.iter().position(|p| p.name == name).ok_or_else(|| Error::MissingEntry(format!("point {name} in dossier {}", f.curve)))
        };
        let mut divisors = Vec::new();
        for (function, entries) in &f.divisors {
            let entries = entries.iter().map(|(n, v)| Ok((index(n)?, *v))).collect::<Result<Vec<_>>>()?;
            divisors.push(DivisorTable { function: function.clone(), expr: RationalExpr::parse(function)?, entries });
        }

        let mut d = Self {
            label: f.curve.clone(),
            polynomial,
            decomposition,
            base,
            points,
            divisors,
            model,
            x_map: RationalExpr::parse(&f.model.x)?,
            y_map: RationalExpr::parse(&f.model.y)?,
            z_parts,
            samples: Vec::new(),
        };
        for t in &d.divisors {
            let deg: i64 = t.entries.iter().map(|&(p, v)| v as i64 * d.degree(p) as i64).sum();
            if deg != 0 {
                return Err(Error::Degenerate(format!("div({}) has degree {deg}", t.function)));
            }
        }
        d.samples = [(0.37, 0.61), (-1.3, 0.4), (0.8, -1.1), (2.1, 0.3)]
            .iter()
            .filter_map(|&(re, im)| {
                let u = Complex64::new(re, im);
                let v = *d.fiber(u).first()?;
                let p = d.original(u, v);
                p[..2].iter().all(|c| c.is_finite() && c.norm() > 1e-6).then_some(p)
            })
            .collect();
        Ok(d)
    }

    pub fn point_index(&self, name: &str) -> Result<usize> {
        self.points
            .iter()
            .position(|p| p.name == name)
            .ok_or_else(|| Error::MissingEntry(format!("point {name} in dossier {}", self.label)))
    }

    /// Degree of the point over the base field.
    pub fn degree(&self, point: usize) -> usize {
        self.points[point].rows.len() / self.base.len()
    }

    /// Second coordinates of the model over `x = u`.
    pub fn fiber(&self, u: Complex64) -> Vec<Complex64> {
        let c: Vec<Complex64> = self.model.iter().map(|t| t.iter().map(|&(a, k)| u.powi(a) * k).sum()).collect();
        let top = c.iter().rposition(|z| z.norm() > 1e-300).unwrap_or(0);
        let c = &c[..=top];
        let eval = |v: Complex64| {
            c.iter().rev().fold((Complex64::zero(), Complex64::zero()), |(p, dp), &k| (p * v + k, dp * v + p))
        };
        // widely separated roots lose relative accuracy in the small one
        poly_roots(c)
            .into_iter()
            .map(|mut v| {
                for _ in 0..4 {
                    let (p, dp) = eval(v);
                    let step = p / dp;
                    if !step.is_finite() {
                        break;
                    }
                    v -= step;
                }
                v
            })
            .collect()
    }

    /// Model point `(u, v)` in the original coordinates, with `z` from `P = 0` when `P` is linear in `z`.
    pub fn original(&self, u: Complex64, v: Complex64) -> Point3 {
        let m = [u, v, Complex64::zero()];
        let x = self.x_map.eval(&m);
        let y = self.y_map.eval(&m);
        let z = match &self.z_parts {
            Some([p0, p1]) => {
                let e = |t: &[(Vec<i32>, f64)]| t.iter().map(|(e, c)| x.powi(e[0]) * y.powi(e[1]) * c).sum::<Complex64>();
                -e(p0) / e(p1)
            }
            None => Complex64::new(f64::NAN, f64::NAN),
        };
        [x, y, z]
    }

    /// Model points at distance `h` (in the first coordinate) from the embedded point.
    /// Two branches come back at a ramified point.
    pub fn branches(&self, row: &PointRow, h: f64) -> Vec<(Complex64, Complex64)> {
        let step = Complex64::from_polar(h, LIMIT_DIRECTION);
        let u = match row.x {
            ComplexOrInfinity::Finite(u0) => u0 + step,
            ComplexOrInfinity::Infinity => step.inv(),
        };
        let mut roots: Vec<(f64, Complex64)> = self.fiber(u).into_iter().map(|v| (chordal(v, row.y), v)).collect();
        roots.sort_by(|a, b| a.0.total_cmp(&b.0));
        let Some(&(d0, _)) = roots.first() else { return Vec::new() };
        roots.into_iter().filter(|(d, _)| *d <= 3.0 * d0 + 1e-14).map(|(_, v)| (u, v)).collect()
    }

    fn average_near(&self, f: &RationalExpr, row: &PointRow, h: f64) -> Complex64 {
        let b = self.branches(row, h);
        b.iter().map(|&(u, v)| f.eval(&self.original(u, v))).sum::<Complex64>() / b.len().max(1) as f64
    }

    /// Value of `f` (in the original coordinates) at one embedding of a point, as a limit along the curve.
    pub fn limit(&self, f: &RationalExpr, row: &PointRow) -> ComplexOrInfinity {
        let h = LIMIT_STEP;
        let vals = [h, h / 2.0, h / 4.0].map(|t| self.average_near(f, row, t));
        let inv = richardson(vals.map(|v| v.inv()));
        if inv.norm() < 1e-7 || vals.iter().any(|v| !v.is_finite()) {
            return ComplexOrInfinity::Infinity;
        }
        ComplexOrInfinity::Finite(richardson(vals))
    }

    /// `f(p)` as an argument framed by the embeddings of `p`.
    pub fn argument(&self, f: &RationalExpr, point: usize) -> Result<Argument> {
        let vals: Vec<ComplexOrInfinity> = self.points[point].rows.iter().map(|r| self.limit(f, r)).collect();
        let near = |c: f64| vals.iter().all(|v| matches!(v, ComplexOrInfinity::Finite(z) if (z - c).norm() < 1e-6));
        if vals.iter().all(|v| v.is_infinite()) {
            return Ok(Argument::Infinity);
        }
        if near(0.0) {
            return Ok(Argument::Zero);
        }
        if near(1.0) {
            return Ok(Argument::One);
        }
        let finite: Vec<Complex64> = vals
            .iter()
            .map(|v| match v {
                ComplexOrInfinity::Finite(z) => Ok(*z),
                ComplexOrInfinity::Infinity => Err(Error::IncompatibleEmbeddings(format!(
                    "{f} is infinite at only some embeddings of {}",
                    self.points[point].name
                ))),
            })
            .collect::<Result<_>>()?;
        Argument::from_values(&finite)
    }

    fn table_of(&self, var: usize) -> Option<&DivisorTable> {
        self.divisors.iter().find(|t| t.expr == RationalExpr::Var(var))
    }

    /// Valuation of `g` read from the divisor tables. A table entry matches `g` up to a
    /// constant and a monomial `x^a y^b`, `|a|, |b| ≤ 4`; products, quotients and powers
    /// are split first when the whole expression has no match.
    pub fn valuation(&self, g: &RationalExpr, point: usize) -> Result<i32> {
        self.lookup(g, point).ok_or_else(|| Error::MissingValuation {
            point: self.points[point].name.clone(),
            function: g.to_string(),
        })
    }

    fn lookup(&self, g: &RationalExpr, point: usize) -> Option<i32> {
        use RationalExpr as E;
        if g.is_constant() {
            return g.constant_value().filter(|c| !c.is_zero()).map(|_| 0);
        }
        if let Some(v) = self.match_table(g, point) {
            return Some(v);
        }
        match g {
            E::Neg(a) => self.lookup(a, point),
            E::Mul(a, b) => Some(self.lookup(a, point)? + self.lookup(b, point)?),
            E::Div(a, b) => Some(self.lookup(a, point)? - self.lookup(b, point)?),
            E::Pow(a, n) => Some(n * self.lookup(a, point)?),
            _ => None,
        }
    }

    fn match_table(&self, g: &RationalExpr, point: usize) -> Option<i32> {
        let gv: Vec<Complex64> = self.samples.iter().map(|p| g.eval(p)).collect();
        if gv.iter().any(|v| !v.is_finite() || v.norm() < 1e-12) {
            return None;
        }
        let vx = self.table_of(0).map(|t| t.valuation(point));
        let vy = self.table_of(1).map(|t| t.valuation(point));
        for t in &self.divisors {
            let ev: Vec<Complex64> = self.samples.iter().map(|p| t.expr.eval(p)).collect();
            for a in -4i32..=4 {
                for b in -4i32..=4 {
                    let r: Vec<Complex64> =
                        self.samples.iter().zip(&gv).zip(&ev).map(|((p, g), e)| g / (e * p[0].powi(a) * p[1].powi(b))).collect();
                    let r0 = r[0];
                    if r0.is_finite() && r0.norm() > 1e-12 && r.iter().all(|z| (z - r0).norm() <= 1e-9 * r0.norm()) {
                        let mx = if a == 0 { 0 } else { a * vx? };
                        let my = if b == 0 { 0 } else { b * vy? };
                        return Some(t.valuation(point) + mx + my);
                    }
                }
            }
        }
        None
    }

    /// Order of `g` at one embedding of a point, estimated from the growth of `log|g|`.
    pub fn numeric_valuation(&self, g: &RationalExpr, point: usize, row: usize) -> f64 {
        let r = &self.points[point].rows[row];
        let level = |h: f64| {
            let b = self.branches(r, h);
            let mean = b.iter().map(|&(u, v)| g.eval(&self.original(u, v)).norm().ln()).sum::<f64>() / b.len() as f64;
            (mean, b.len())
        };
        // moderate steps: expanded expressions cancel badly close to the point
        let h = 1e-2;
        let (l0, e) = level(h);
        let (l1, _) = level(h / 2.0);
        let (l2, _) = level(h / 4.0);
        // log|g| = (v/e) log h + a + b h + …; the two slopes differ by the b term
        let (s1, s2) = ((l1 - l0) / -LN_2, (l2 - l1) / -LN_2);
        e as f64 * (2.0 * s2 - s1)
    }

    /// `u_p = Σ_j c_j (v_p(g_j) {f_j(p)}₂ + v_p(g_j∘τ) {f_j∘τ(p)}₂)`, normalized; one slot per embedding of `p`.
    pub fn residue_element(&self, point: &str) -> Result<FormalDilogSum> {
        let p = self.point_index(point)?;
        let mut s = FormalDilogSum::new(self.points[p].rows.len());
        for d in [&self.decomposition, &tau_pull(&self.decomposition)] {
            for t in &d.terms {
                let v = self.valuation(&t.g, p)?;
                if v != 0 {
                    s.push(t.c.clone() * BigRational::from_integer(v.into()), self.argument(&t.f, p)?);
                }
            }
        }
        Ok(normalize(&s))
    }

    /// `Σ_q D(u_q)` in each base embedding; vanishes when `Σ_q u_q = 0`.
    pub fn residue_balance(&self) -> Result<Vec<f64>> {
        let mut total = vec![0.0; self.base.len()];
        for (k, p) in self.points.iter().enumerate() {
            let prof = d_profile(&self.residue_element(&self.points[k].name)?)?;
            for (row, v) in p.rows.iter().zip(&prof.values) {
                total[row.base] += v;
            }
        }
        Ok(total)
    }
}

pub fn residue_element(dossier: &CurveDossier, point: &str) -> Result<FormalDilogSum> {
    dossier.residue_element(point)
}
