//! Identity database, the end-to-end verification pipeline and rational recovery.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::sync::{Mutex, OnceLock};
use std::time::Instant;

use num_rational::BigRational;
use num_traits::{Signed, Zero};
#[cfg(feature = "parallel")]
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chains::{detect_singular_boundary, trace_boundary};
use crate::elliptic::{find_curve, lprime_minus1};
use crate::error::{Error, Result};
use crate::expr::{parse_rational, rational_convergent, rational_to_f64};
use crate::mahler::{leading_coeff_measure, mahler_measure, MahlerEstimate};
use crate::poly::LaurentPoly;
use crate::specialfn::{dirichlet_lprime_minus1, QuadraticCharacter};

pub const BUILTIN_IDENTITIES: &str = include_str!("../data/identities.json");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Proven,
    Conjectural,
    TheoremInapplicable,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Proven => "proven",
            Self::Conjectural => "conjectural",
            Self::TheoremInapplicable => "theorem-inapplicable",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CharacterRecord {
    /// 3 or 4, for `χ₋₃` and `χ₋₄`.
    pub modulus: u64,
    pub b: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityRecord {
    pub id: String,
    pub group: String,
    pub row: u32,
    pub polynomial: String,
    pub curve: Option<String>,
    pub a: Option<String>,
    #[serde(default)]
    pub characters: Vec<CharacterRecord>,
    pub status: Status,
    /// Relative tolerance the identity is expected to meet.
    pub tol: f64,
    #[serde(default)]
    pub note: String,
    #[serde(default)]
    pub long_running: bool,
}

/// `m(P) = a·L′(E,−1) + Σ b_χ·L′(χ,−1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct IdentitySpec {
    pub id: String,
    pub polynomial_text: String,
    pub polynomial: LaurentPoly,
    pub curve: Option<String>,
    pub a: Option<BigRational>,
    pub characters: Vec<(u64, Option<BigRational>)>,
    pub status: Status,
    pub tol: f64,
    pub note: String,
    pub long_running: bool,
}

impl IdentitySpec {
    pub fn from_record(r: &IdentityRecord) -> Result<Self> {
        let parse = |s: &Option<String>| s.as_deref().map(parse_rational).transpose();
        let spec = Self {
            id: r.id.clone(),
            polynomial_text: r.polynomial.clone(),
            polynomial: LaurentPoly::parse_xyz(&r.polynomial)?,
            curve: r.curve.clone(),
            a: parse(&r.a)?,
            characters: r.characters.iter().map(|c| Ok((c.modulus, parse(&c.b)?))).collect::<Result<_>>()?,
            status: r.status,
            tol: r.tol,
            note: r.note.clone(),
            long_running: r.long_running,
        };
        if spec.curve.is_none() && spec.characters.is_empty() {
            return Err(Error::Degenerate(format!("{}: no right-hand side", r.id)));
        }
        if spec.a.is_some() && spec.curve.is_none() {
            return Err(Error::Degenerate(format!("{}: coefficient a without a curve", r.id)));
        }
        for (m, _) in &spec.characters {
            if *m != 3 && *m != 4 {
                return Err(Error::InvalidCharacter(format!("{}: modulus {m}", r.id)));
            }
        }
        if !(spec.tol > 0.0) {
            return Err(Error::Degenerate(format!("{}: tolerance {}", r.id, r.tol)));
        }
        Ok(spec)
    }

    /// Every coefficient of the right-hand side is given.
    pub fn is_fully_conjectured(&self) -> bool {
        (self.curve.is_none() || self.a.is_some()) && self.characters.iter().all(|(_, b)| b.is_some())
    }
}

pub fn parse_identities(json: &str) -> Result<Vec<IdentitySpec>> {
    let recs: Vec<IdentityRecord> = serde_json::from_str(json)?;
    recs.iter().map(IdentitySpec::from_record).collect()
}

/// Identities from `dir/identities.json`, or the shipped set.
pub fn load_identities(dir: Option<&Path>) -> Result<Vec<IdentitySpec>> {
    match dir {
        Some(d) => parse_identities(&std::fs::read_to_string(d.join("identities.json"))?),
        None => parse_identities(BUILTIN_IDENTITIES),
    }
}

pub fn find_identity(id: &str, dir: Option<&Path>) -> Result<IdentitySpec> {
    load_identities(dir)?
        .into_iter()
        .find(|s| s.id == id)
        .ok_or_else(|| Error::MissingEntry(format!("identity {id}")))
}

/// Continued-fraction convergent `p/q`, `q ≤ max_den`, within `1e−4·max(1, |v|)` of `v`.
pub fn recover_rational(v: f64, max_den: u64) -> Option<BigRational> {
    rational_convergent(v, max_den.min(10_000), 1e-4 * v.abs().max(1.0))
}

/// Like [`recover_rational`] but with the gate relative to `|v|`, so small coefficients
/// such as `1/288` are not swallowed by a neighbouring convergent.
pub fn recover_coefficient(v: f64, max_den: u64) -> Option<BigRational> {
    rational_convergent(v, max_den.min(10_000), 1e-4 * v.abs())
}

pub fn character(modulus: u64) -> Result<QuadraticCharacter> {
    match modulus {
        3 => Ok(QuadraticCharacter::chi_minus3()),
        4 => Ok(QuadraticCharacter::chi_minus4()),
        m => Err(Error::InvalidCharacter(format!("no odd quadratic character of modulus {m} in the registry"))),
    }
}

/// `L′(E,−1)` by label, cached for the process.
pub fn curve_lprime(label: &str, dir: Option<&Path>) -> Result<f64> {
    static CACHE: OnceLock<Mutex<BTreeMap<(String, Option<PathBuf>), f64>>> = OnceLock::new();
    let key = (label.to_string(), dir.map(Path::to_path_buf));
    let cache = CACHE.get_or_init(|| Mutex::new(BTreeMap::new()));
    if let Some(v) = cache.lock().unwrap().get(&key) {
        return Ok(*v);
    }
    let v = lprime_minus1(&find_curve(label, dir)?)?;
    cache.lock().unwrap().insert(key, v);
    Ok(v)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Pass,
    Fail,
    Inconclusive,
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Pass => "PASS",
            Self::Fail => "FAIL",
            Self::Inconclusive => "INCONCLUSIVE",
        })
    }
}

/// Process exit code for a batch: 0 all pass, 1 any failure, 2 otherwise.
pub fn exit_code(outcomes: &[Outcome]) -> i32 {
    if outcomes.contains(&Outcome::Fail) {
        1
    } else if outcomes.contains(&Outcome::Inconclusive) {
        2
    } else {
        0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryDiagnostics {
    pub loops: usize,
    /// `(x, y)` on the torus, as arguments in `(−π, π]`.
    pub singular_points: Vec<(f64, f64)>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasisValue {
    pub name: String,
    pub value: f64,
    /// Conjectured coefficient, as text.
    pub coefficient: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub id: String,
    pub polynomial: String,
    pub status: Status,
    pub measure: MahlerEstimate,
    /// `m(P̃)` for the leading coefficient in `z`; reported, not subtracted.
    pub leading_measure: f64,
    pub basis: Vec<BasisValue>,
    pub rhs: Option<f64>,
    pub residual: Option<f64>,
    pub relative_residual: Option<f64>,
    /// The single unknown coefficient solved from the measurement.
    pub fitted: Option<f64>,
    pub recovered: Option<String>,
    pub tol: f64,
    pub verdict: Outcome,
    pub boundary: Option<BoundaryDiagnostics>,
    pub seconds: f64,
}

#[derive(Debug, Clone)]
pub struct VerifyOptions {
    pub registry: Option<PathBuf>,
    /// Absolute tolerance of the Mahler quadrature.
    pub quadrature_tol: f64,
    pub boundary: bool,
    pub max_den: u64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self { registry: None, quadrature_tol: 1e-7, boundary: false, max_den: 1000 }
    }
}

pub fn verify_identity(spec: &IdentitySpec, tol: f64) -> Result<VerificationReport> {
    verify_identity_with(spec, tol, &VerifyOptions::default())
}

/// Measures both sides. With every coefficient given, the verdict is
/// `|m(P) − RHS| ≤ tol·|m(P)|`. With one coefficient missing it is solved for and recovered
/// as a rational; PASS when that succeeds, INCONCLUSIVE otherwise.
pub fn verify_identity_with(spec: &IdentitySpec, tol: f64, opts: &VerifyOptions) -> Result<VerificationReport> {
    let start = Instant::now();
    let dir = opts.registry.as_deref();
    let measure = mahler_measure(&spec.polynomial, opts.quadrature_tol)?;
    let leading_measure = leading_coeff_measure(&spec.polynomial, opts.quadrature_tol)?.value;

    let mut basis = Vec::new();
    // (value, coefficient) with None marking the unknown
    let mut terms: Vec<(f64, Option<f64>)> = Vec::new();
    if let Some(label) = &spec.curve {
        let v = curve_lprime(label, dir)?;
        basis.push(BasisValue { name: format!("L'(E_{label},-1)"), value: v, coefficient: spec.a.as_ref().map(|a| a.to_string()) });
        terms.push((v, spec.a.as_ref().map(rational_to_f64)));
    }
    for (m, b) in &spec.characters {
        let v = dirichlet_lprime_minus1(&character(*m)?);
        basis.push(BasisValue { name: format!("L'(chi_-{m},-1)"), value: v, coefficient: b.as_ref().map(|b| b.to_string()) });
        terms.push((v, b.as_ref().map(rational_to_f64)));
    }

    let known: f64 = terms.iter().filter_map(|(v, c)| c.map(|c| c * v)).sum();
    let unknown: Vec<f64> = terms.iter().filter(|(_, c)| c.is_none()).map(|(v, _)| *v).collect();
    let m = measure.value;
    let (rhs, residual, fitted, verdict) = match unknown.len() {
        0 => {
            let r = m - known;
            let ok = r.abs() <= tol * m.abs().max(f64::MIN_POSITIVE);
            (Some(known), Some(r), None, if ok { Outcome::Pass } else { Outcome::Fail })
        }
        1 => {
            let f = (m - known) / unknown[0];
            let v = if recover_coefficient(f, opts.max_den).is_some() { Outcome::Pass } else { Outcome::Inconclusive };
            (None, None, Some(f), v)
        }
        _ => (None, None, None, Outcome::Inconclusive),
    };
    // the elliptic coefficient as if unknown, for the evidence report
    let fitted = fitted.or_else(|| {
        let (v, a) = terms.first().filter(|_| spec.curve.is_some())?;
        a.map(|a| a + (m - known) / v)
    });
    let recovered = fitted.and_then(|f| recover_coefficient(f, opts.max_den)).map(|q| q.to_string());

    let boundary = if opts.boundary {
        let traced = trace_boundary(&spec.polynomial, 0.01)?;
        let flags = detect_singular_boundary(&spec.polynomial, &traced.paths)?;
        let mut singular_points: Vec<(f64, f64)> = Vec::new();
        for f in flags {
            let pt = (f.x.arg(), f.y.arg());
            if singular_points.iter().all(|q| (q.0 - pt.0).abs() + (q.1 - pt.1).abs() > 1e-3) {
                singular_points.push(pt);
            }
        }
        Some(BoundaryDiagnostics { loops: traced.paths.len(), singular_points, warnings: traced.warnings })
    } else {
        None
    };

    Ok(VerificationReport {
        id: spec.id.clone(),
        polynomial: spec.polynomial_text.clone(),
        status: spec.status,
        measure,
        leading_measure,
        basis,
        rhs,
        residual,
        relative_residual: residual.map(|r| r / m.abs()),
        fitted,
        recovered,
        tol,
        verdict,
        boundary,
        seconds: start.elapsed().as_secs_f64(),
    })
}

/// Verifies independent specs in parallel, each at its own tolerance; order is preserved.
pub fn verify_all(specs: &[IdentitySpec], opts: &VerifyOptions) -> Vec<Result<VerificationReport>> {
    #[cfg(feature = "parallel")]
    let it = specs.par_iter();
    #[cfg(not(feature = "parallel"))]
    let it = specs.iter();
    it.map(|s| verify_identity_with(s, s.tol, opts)).collect()
}

impl fmt::Display for VerificationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{} [{}]  m({}) = {:.12} ± {:.1e}", self.id, self.status, self.polynomial, self.measure.value, self.measure.error)?;
        if !self.leading_measure.abs().le(&1e-9) {
            writeln!(f, "  m(leading coefficient) = {:.12}", self.leading_measure)?;
        }
        for b in &self.basis {
            writeln!(f, "  {} = {:.12}  coefficient {}", b.name, b.value, b.coefficient.as_deref().unwrap_or("?"))?;
        }
        if let (Some(rhs), Some(r)) = (self.rhs, self.residual) {
            writeln!(f, "  rhs = {rhs:.12}  residual {r:.3e} (relative {:.3e}, tol {:.0e})", self.relative_residual.unwrap_or(f64::NAN), self.tol)?;
        }
        if let Some(a) = self.fitted {
            writeln!(f, "  fitted coefficient {a:.9} -> {}", self.recovered.as_deref().unwrap_or("no small rational"))?;
        }
        if let Some(b) = &self.boundary {
            let pts: Vec<String> = b.singular_points.iter().map(|(x, y)| format!("(arg x {x:.6}, arg y {y:.6})")).collect();
            writeln!(f, "  boundary: {} loop(s), singular points [{}]", b.loops, pts.join(", "))?;
        }
        write!(f, "  {}  ({:.2} s)", self.verdict, self.seconds)
    }
}

/// `|recovered − conjectured|` is zero, for the elliptic coefficient.
pub fn recovers_conjectured(spec: &IdentitySpec, report: &VerificationReport) -> bool {
    match (&spec.a, &report.recovered) {
        (Some(a), Some(r)) => parse_rational(r).map(|r| (r - a).abs().is_zero()).unwrap_or(false),
        _ => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_force(v: f64, max_den: u64) -> Option<(i64, u64)> {
        (1..=max_den).find_map(|q| {
            let p = (v * q as f64).round();
            ((v - p / q as f64).abs() <= 1e-4 * v.abs().max(1.0)).then_some((p as i64, q))
        })
    }

    #[test]
    fn recovery_examples() {
        assert_eq!(recover_rational(-1.2500004, 100), Some(BigRational::new((-5).into(), 4.into())));
        assert_eq!(recover_rational(0.3333333, 100), Some(BigRational::new(1.into(), 3.into())));
        assert_eq!(recover_rational(std::f64::consts::PI, 10), None);
        assert_eq!(brute_force(std::f64::consts::PI, 10), None);
    }

    #[test]
    fn small_coefficients_need_the_relative_gate() {
        let v = 1.0 / 288.0 + 2e-10;
        assert_eq!(recover_rational(v, 1000), Some(BigRational::new(1.into(), 287.into())));
        assert_eq!(recover_coefficient(v, 1000), Some(BigRational::new(1.into(), 288.into())));
        assert_eq!(recover_coefficient(-1.2500004, 100), Some(BigRational::new((-5).into(), 4.into())));
    }

    #[test]
    fn recovery_agrees_with_brute_force_on_small_fractions() {
        for q in 1..=40u64 {
            for p in -60i64..=60 {
                let v = p as f64 / q as f64 + 3e-6;
                let r = recover_rational(v, 40).expect("convergent exists");
                let (bp, bq) = brute_force(v, 40).unwrap();
                assert_eq!(r, BigRational::new(bp.into(), (bq as i64).into()), "{p}/{q}");
            }
        }
    }

    #[test]
    fn shipped_identities_are_valid() {
        let all = load_identities(None).unwrap();
        assert_eq!(all.len(), 25);
        for s in &all {
            assert!(s.is_fully_conjectured(), "{}", s.id);
            match s.id.split('-').next().unwrap() {
                "dirichlet" => assert_eq!(s.status, Status::Proven),
                _ if s.id.ends_with("inapplicable-1") || s.id.ends_with("inapplicable-2") => {
                    assert_eq!(s.status, Status::TheoremInapplicable)
                }
                _ => {}
            }
        }
        assert_eq!(all.iter().filter(|s| s.long_running).count(), 1);
    }

    #[test]
    fn exit_codes() {
        use Outcome::*;
        assert_eq!(exit_code(&[Pass, Pass]), 0);
        assert_eq!(exit_code(&[Pass, Inconclusive]), 2);
        assert_eq!(exit_code(&[Inconclusive, Fail]), 1);
        assert_eq!(exit_code(&[]), 0);
    }
}
