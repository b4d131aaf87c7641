//! Hasse–Weil L-series of elliptic curves over Q.
//!
//! `a_p` comes from point counting on a stored Weierstrass model, `a_n` from
//! multiplicativity, `L(E,3)` from a direct sum with a rigorous tail bound, and
//! `L'(E,−1)` from the functional equation.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Curves shipped with the crate.
pub const BUILTIN_CURVES: &str = include_str!("../data/curves.json");

/// Long Weierstrass model `y² + a1·xy + a3·y = x³ + a2·x² + a4·x + a6`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeierstrassCurve {
    pub label: String,
    pub a1: i64,
    pub a2: i64,
    pub a3: i64,
    pub a4: i64,
    pub a6: i64,
    pub conductor: u64,
    #[serde(default)]
    pub root_number: Option<i8>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl WeierstrassCurve {
    pub fn new(label: &str, a: [i64; 5], conductor: u64, root_number: Option<i8>) -> Result<Self> {
        let c = Self {
            label: label.to_string(),
            a1: a[0],
            a2: a[1],
            a3: a[2],
            a4: a[3],
            a6: a[4],
            conductor,
            root_number,
            note: None,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn b_invariants(&self) -> [i128; 4] {
        let (a1, a2, a3, a4, a6) = (
            self.a1 as i128,
            self.a2 as i128,
            self.a3 as i128,
            self.a4 as i128,
            self.a6 as i128,
        );
        let b2 = a1 * a1 + 4 * a2;
        let b4 = 2 * a4 + a1 * a3;
        let b6 = a3 * a3 + 4 * a6;
        let b8 = a1 * a1 * a6 + 4 * a2 * a6 - a1 * a3 * a4 + a2 * a3 * a3 - a4 * a4;
        [b2, b4, b6, b8]
    }

    pub fn c4_c6(&self) -> (i128, i128) {
        let [b2, b4, b6, _] = self.b_invariants();
        (b2 * b2 - 24 * b4, -b2 * b2 * b2 + 36 * b2 * b4 - 216 * b6)
    }

    pub fn discriminant(&self) -> i128 {
        let [b2, b4, b6, b8] = self.b_invariants();
        -b2 * b2 * b8 - 8 * b4 * b4 * b4 - 27 * b6 * b6 + 9 * b2 * b4 * b6
    }

    /// Primes dividing the stored conductor.
    pub fn bad_primes(&self) -> Vec<u64> {
        prime_factors(self.conductor)
    }

    pub fn is_bad(&self, p: u64) -> bool {
        self.conductor % p == 0
    }

    /// Nonzero discriminant, and every prime of the conductor divides it.
    pub fn validate(&self) -> Result<()> {
        let disc = self.discriminant();
        if disc == 0 {
            return Err(Error::InvalidCurve(format!("{}: singular model", self.label)));
        }
        if self.conductor == 0 {
            return Err(Error::InvalidCurve(format!("{}: conductor 0", self.label)));
        }
        for p in self.bad_primes() {
            if disc % p as i128 != 0 {
                return Err(Error::InvalidCurve(format!(
                    "{}: conductor prime {p} does not divide the discriminant {disc}",
                    self.label
                )));
            }
        }
        if let Some(e) = self.root_number {
            if e != 1 && e != -1 {
                return Err(Error::InvalidCurve(format!("{}: root number {e}", self.label)));
            }
        }
        Ok(())
    }

    /// Root number with the sign flipped, for testing the sign dependence.
    pub fn with_root_number(&self, eps: i8) -> Self {
        Self { root_number: Some(eps), ..self.clone() }
    }
}

/// Loads curves from a JSON array.
pub fn parse_curves(json: &str) -> Result<Vec<WeierstrassCurve>> {
    let curves: Vec<WeierstrassCurve> = serde_json::from_str(json)?;
    for c in &curves {
        c.validate()?;
    }
    Ok(curves)
}

pub fn builtin_curves() -> Vec<WeierstrassCurve> {
    parse_curves(BUILTIN_CURVES).expect("shipped curve file is valid")
}

/// Looks a curve up by label in `dir/curves.json`, or in the shipped set when `dir` is `None`.
pub fn find_curve(label: &str, dir: Option<&Path>) -> Result<WeierstrassCurve> {
    let curves = match dir {
        Some(d) => parse_curves(&std::fs::read_to_string(d.join("curves.json"))?)?,
        None => builtin_curves(),
    };
    curves
        .into_iter()
        .find(|c| c.label == label)
        .ok_or_else(|| Error::MissingEntry(format!("curve {label}")))
}

fn prime_factors(mut n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut p = 2;
    while p * p <= n {
        if n % p == 0 {
            out.push(p);
            while n % p == 0 {
                n /= p;
            }
        }
        p += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

fn mul_mod(a: u64, b: u64, p: u64) -> u64 {
    ((a as u128 * b as u128) % p as u128) as u64
}

fn pow_mod(mut b: u64, mut e: u64, p: u64) -> u64 {
    let mut r = 1 % p;
    b %= p;
    while e > 0 {
        if e & 1 == 1 {
            r = mul_mod(r, b, p);
        }
        b = mul_mod(b, b, p);
        e >>= 1;
    }
    r
}

fn inv_mod(a: u64, p: u64) -> u64 {
    pow_mod(a, p - 2, p)
}

fn reduce(a: i128, p: u64) -> u64 {
    a.rem_euclid(p as i128) as u64
}

/// Tonelli–Shanks; `a` must be a nonzero square mod the odd prime `p`.
fn sqrt_mod(a: u64, p: u64) -> u64 {
    if p % 4 == 3 {
        return pow_mod(a, (p + 1) / 4, p);
    }
    let mut q = p - 1;
    let mut s = 0;
    while q % 2 == 0 {
        q /= 2;
        s += 1;
    }
    let mut z = 2;
    while pow_mod(z, (p - 1) / 2, p) != p - 1 {
        z += 1;
    }
    let mut m = s;
    let mut c = pow_mod(z, q, p);
    let mut t = pow_mod(a, q, p);
    let mut r = pow_mod(a, (q + 1) / 2, p);
    while t != 1 {
        let mut i = 0;
        let mut tt = t;
        while tt != 1 {
            tt = mul_mod(tt, tt, p);
            i += 1;
        }
        let mut b = c;
        for _ in 0..(m - i - 1) {
            b = mul_mod(b, b, p);
        }
        m = i;
        c = mul_mod(b, b, p);
        t = mul_mod(t, c, p);
        r = mul_mod(r, b, p);
    }
    r
}

/// `#E(F_p)` on the projective model, counting a singular point if there is one.
fn count_naive(curve: &WeierstrassCurve, p: u64) -> u64 {
    if p == 2 {
        let [a1, a2, a3, a4, a6] =
            [curve.a1, curve.a2, curve.a3, curve.a4, curve.a6].map(|a| reduce(a as i128, 2));
        let mut count = 1;
        for x in 0..2u64 {
            for y in 0..2u64 {
                let lhs = y * y + a1 * x * y + a3 * y;
                let rhs = x * x * x + a2 * x * x + a4 * x + a6;
                if (lhs + rhs) % 2 == 0 {
                    count += 1;
                }
            }
        }
        return count;
    }
    // (2y + a1 x + a3)^2 = 4x^3 + b2 x^2 + 2 b4 x + b6
    let [b2, b4, b6, _] = curve.b_invariants();
    let (b2, b4, b6) = (reduce(b2, p), reduce(2 * b4, p), reduce(b6, p));
    let mut is_square = vec![false; p as usize];
    for y in 1..p {
        is_square[mul_mod(y, y, p) as usize] = true;
    }
    let mut count = 1;
    for x in 0..p {
        let x2 = mul_mod(x, x, p);
        let f = (mul_mod(4 * x % p, x2, p) + mul_mod(b2, x2, p) + mul_mod(b4, x, p) + b6) % p;
        count += if f == 0 {
            1
        } else if is_square[f as usize] {
            2
        } else {
            0
        };
    }
    count
}

type Pt = Option<(u64, u64)>;

/// Short model `y² = x³ + a·x + b` over F_p, p > 3.
struct ShortCurve {
    a: u64,
    b: u64,
    p: u64,
}

impl ShortCurve {
    fn rhs(&self, x: u64) -> u64 {
        let p = self.p;
        (mul_mod(mul_mod(x, x, p), x, p) + mul_mod(self.a, x, p) + self.b) % p
    }

    fn neg(&self, q: Pt) -> Pt {
        q.map(|(x, y)| (x, (self.p - y) % self.p))
    }

    fn add(&self, u: Pt, v: Pt) -> Pt {
        let p = self.p;
        let (Some((x1, y1)), Some((x2, y2))) = (u, v) else {
            return u.or(v);
        };
        let lambda = if x1 == x2 {
            if (y1 + y2) % p == 0 {
                return None;
            }
            let num = (3 * mul_mod(x1, x1, p) + self.a) % p;
            mul_mod(num, inv_mod(2 * y1 % p, p), p)
        } else {
            mul_mod((y2 + p - y1) % p, inv_mod((x2 + p - x1) % p, p), p)
        };
        let x3 = (mul_mod(lambda, lambda, p) + 2 * p - x1 - x2) % p;
        let y3 = (mul_mod(lambda, (x1 + p - x3) % p, p) + p - y1) % p;
        Some((x3, y3))
    }

    fn mul(&self, mut k: u64, q: Pt) -> Pt {
        let mut acc = None;
        let mut base = q;
        while k > 0 {
            if k & 1 == 1 {
                acc = self.add(acc, base);
            }
            base = self.add(base, base);
            k >>= 1;
        }
        acc
    }

    /// Some `m` in `[lo, hi]` with `m·q = O`, by baby-step giant-step.
    fn annihilator_in(&self, q: Pt, lo: u64, hi: u64) -> Option<u64> {
        let width = hi - lo;
        let m = ((width + 1) as f64).sqrt().ceil() as u64;
        let mut baby: HashMap<Pt, u64> = HashMap::with_capacity(m as usize + 1);
        let mut r = None;
        for j in 0..m {
            baby.entry(r).or_insert(j);
            r = self.add(r, q);
        }
        let giant = self.neg(self.mul(m, q));
        let mut target = self.neg(self.mul(lo, q));
        let mut i = 0;
        while i * m <= width {
            if let Some(&j) = baby.get(&target) {
                let k = i * m + j;
                if k <= width {
                    return Some(lo + k);
                }
            }
            target = self.add(target, giant);
            i += 1;
        }
        None
    }

    /// Exact order of `q`, given a multiple `n` of it.
    fn order_from_multiple(&self, q: Pt, mut n: u64) -> u64 {
        for f in prime_factors(n) {
            while n % f == 0 && self.mul(n / f, q).is_none() {
                n /= f;
            }
        }
        n
    }
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// `#E(F_p)` for a good prime `p > 3` by the Mestre-style order search, or `None` when ambiguous.
fn count_bsgs(curve: &WeierstrassCurve, p: u64) -> Option<u64> {
    let (c4, c6) = curve.c4_c6();
    let e = ShortCurve { a: reduce(-27 * c4, p), b: reduce(-54 * c6, p), p };
    let s = (2.0 * (p as f64).sqrt()).floor() as u64;
    let (lo, hi) = (p + 1 - s, p + 1 + s + 1);
    let mut l = 1u64;
    let mut x = 0u64;
    for _ in 0..24 {
        let point = loop {
            x += 1;
            if x >= p {
                return None;
            }
            let f = e.rhs(x);
            if f == 0 {
                break Some((x, 0));
            }
            if pow_mod(f, (p - 1) / 2, p) == 1 {
                break Some((x, sqrt_mod(f, p)));
            }
        };
        let m = e.annihilator_in(point, lo, hi)?;
        let ord = e.order_from_multiple(point, m);
        l = l / gcd(l, ord) * ord;
        let first = lo.div_ceil(l) * l;
        if first <= hi && first + l > hi {
            return Some(first);
        }
    }
    None
}

/// `a_p = p + 1 − #E(F_p)`; at bad primes this is `p − #E^ns(F_p)`.
pub fn ap(curve: &WeierstrassCurve, p: u64) -> Result<i64> {
    if !is_prime(p) {
        return Err(Error::NotPrime(p));
    }
    Ok(ap_unchecked(curve, p))
}

fn ap_unchecked(curve: &WeierstrassCurve, p: u64) -> i64 {
    let n = if p < 500 || curve.is_bad(p) {
        count_naive(curve, p)
    } else {
        count_bsgs(curve, p).unwrap_or_else(|| count_naive(curve, p))
    };
    p as i64 + 1 - n as i64
}

/// Dirichlet coefficients `a_1..a_N` of `L(E, s)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LSeriesPrefix {
    pub label: String,
    /// `coefficients[n - 1] = a_n`.
    pub coefficients: Vec<i64>,
}

impl LSeriesPrefix {
    pub fn len(&self) -> usize {
        self.coefficients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coefficients.is_empty()
    }

    pub fn a(&self, n: usize) -> i64 {
        self.coefficients[n - 1]
    }
}

/// Fills `a_n` for `n ≤ len` by multiplicativity and the Hecke recurrence.
pub fn l_coefficients(curve: &WeierstrassCurve, len: usize) -> LSeriesPrefix {
    let mut spf = vec![0u32; len + 1];
    for i in 2..=len {
        if spf[i] == 0 {
            let mut j = i;
            while j <= len {
                if spf[j] == 0 {
                    spf[j] = i as u32;
                }
                j += i;
            }
        }
    }
    let mut a = vec![0i64; len + 1];
    if len >= 1 {
        a[1] = 1;
    }
    for n in 2..=len {
        let p = spf[n] as usize;
        let mut m = n;
        let mut pk = 1;
        while m % p == 0 {
            m /= p;
            pk *= p;
        }
        if m > 1 {
            a[n] = a[pk] * a[m];
        } else if pk == p {
            a[n] = ap_unchecked(curve, p as u64);
        } else if curve.is_bad(p as u64) {
            a[n] = a[p] * a[pk / p];
        } else {
            a[n] = a[p] * a[pk / p] - p as i64 * a[pk / p / p];
        }
    }
    a.remove(0);
    LSeriesPrefix { label: curve.label.clone(), coefficients: a }
}

/// `Σ_{k ≤ n} ⌊n/k⌋`, the summatory divisor function.
fn divisor_summatory(n: u64) -> u64 {
    let r = (n as f64).sqrt() as u64;
    let s: u64 = (1..=r).map(|k| n / k).sum();
    2 * s - r * r
}

/// Upper bound for `Σ_{n>N} d(n)·n^{−5/2}`, which majorizes the tail of `Σ a_n n^{−3}`.
///
/// Partial summation against `Σ_{k≤x} d(k) ≤ x log x + x`.
pub fn tail_bound(n: u64) -> f64 {
    let nf = n as f64;
    let ln = nf.ln();
    let integral = nf.powf(-1.5) * (5.0 / 3.0 * ln + 25.0 / 9.0);
    (integral - divisor_summatory(n) as f64 * nf.powf(-2.5)).max(0.0)
}

/// Smallest `N` (up to a factor 1.01) with `tail_bound(N) ≤ target`.
pub fn terms_for_tail(target: f64) -> u64 {
    let mut n = 1000u64;
    while tail_bound(n) > target {
        n = (n as f64 * 1.01).ceil() as u64;
    }
    n
}

/// `(Σ_{n≤N} a_n n^{−3}, tail bound)`.
pub fn l_value_3(curve: &WeierstrassCurve, n: usize) -> (f64, f64) {
    let coeffs = l_coefficients(curve, n);
    (sum_l3(&coeffs.coefficients), tail_bound(n as u64))
}

fn sum_l3(a: &[i64]) -> f64 {
    // smallest terms first
    a.iter()
        .enumerate()
        .rev()
        .map(|(i, &c)| {
            let n = (i + 1) as f64;
            c as f64 / (n * n * n)
        })
        .sum()
}

/// `L'(E, −1) = −ε·N²·L(E,3)/(8π⁴)`, with the `L(E,3)` tail below `1e−8`.
pub fn lprime_minus1(curve: &WeierstrassCurve) -> Result<f64> {
    let eps = curve
        .root_number
        .ok_or_else(|| Error::MissingRootNumber(curve.label.clone()))?;
    let n = terms_for_tail(1e-8) as usize;
    let (l3, _) = l_value_3(curve, n);
    Ok(lprime_from_l3(curve.conductor, eps, l3))
}

pub fn lprime_from_l3(conductor: u64, eps: i8, l3: f64) -> f64 {
    let n = conductor as f64;
    -f64::from(eps) * n * n * l3 / (8.0 * PI.powi(4))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn curve(label: &str) -> WeierstrassCurve {
        find_curve(label, None).unwrap()
    }

    #[test]
    fn registry_curves_validate() {
        let curves = builtin_curves();
        assert!(curves.len() >= 13);
        for c in &curves {
            c.validate().unwrap();
        }
    }

    #[test]
    fn rejects_composites() {
        assert!(matches!(ap(&curve("14a4"), 15), Err(Error::NotPrime(15))));
        assert!(ap(&curve("14a4"), 1).is_err());
    }

    #[test]
    fn ap_48a1_at_5_by_enumeration() {
        let mut count = 1;
        for x in 0..5i64 {
            for y in 0..5i64 {
                if (y * y - (x * x * x + x * x - 4 * x - 4)).rem_euclid(5) == 0 {
                    count += 1;
                }
            }
        }
        assert_eq!(ap(&curve("48a1"), 5).unwrap(), 6 - count);
    }

    #[test]
    fn ap_14a4_at_2_on_smooth_locus() {
        // y^2 + xy + y = x^3 - x over F_2; the singular point is (1, 1)
        let mut smooth = 0;
        for x in 0..2i64 {
            for y in 0..2i64 {
                let f = y * y + x * y + y - x * x * x + x;
                let fx = y - 3 * x * x + 1;
                let fy = 2 * y + x + 1;
                if f.rem_euclid(2) == 0 && !(fx.rem_euclid(2) == 0 && fy.rem_euclid(2) == 0) {
                    smooth += 1;
                }
            }
        }
        let ns = smooth + 1;
        let v = ap(&curve("14a4"), 2).unwrap();
        assert_eq!(v, 2 - ns);
        assert!((-1..=1).contains(&v));
    }

    #[test]
    fn ap_matches_pari_tables() {
        // PARI ellap
        let table = [
            ("14a4", [-1, -2, 0, 1, 0, -4, -10]),
            ("15a8", [-1, -1, 1, 0, -4, -2, 2]),
            ("48a1", [0, 1, -2, 0, -4, -2, 2]),
            ("45a2", [1, 0, -1, 0, 4, -2, 2]),
            ("225c2", [-1, 0, 0, 0, 4, 2, -2]),
        ];
        for (label, expected) in table {
            let c = curve(label);
            for (p, e) in [2u64, 3, 5, 7, 11, 13, 97].iter().zip(expected) {
                assert_eq!(ap(&c, *p).unwrap(), e, "{label} p={p}");
            }
        }
    }

    #[test]
    fn bsgs_agrees_with_naive_counting() {
        for label in ["15a8", "21a1", "48a1", "450c1"] {
            let c = curve(label);
            for p in (500..4000u64).filter(|&p| is_prime(p)).step_by(7) {
                let naive = count_naive(&c, p);
                if let Some(fast) = count_bsgs(&c, p) {
                    assert_eq!(fast, naive, "{label} p={p}");
                }
            }
        }
    }

    #[test]
    fn hasse_bound_small_primes() {
        for c in builtin_curves() {
            for p in (2..=97u64).filter(|&p| is_prime(p) && !c.is_bad(p)) {
                let a = ap(&c, p).unwrap() as f64;
                assert!(a.abs() <= 2.0 * (p as f64).sqrt(), "{} p={p}", c.label);
            }
        }
    }

    #[test]
    fn maillot_model_of_21a1_is_isogenous() {
        let a = curve("21a1");
        let b = curve("21a1-maillot");
        for p in (2..300u64).filter(|&p| is_prime(p) && 21 % p != 0) {
            assert_eq!(ap(&a, p).unwrap(), ap(&b, p).unwrap(), "p={p}");
        }
    }

    #[test]
    fn coefficient_table_structure() {
        let c = curve("48a1");
        let t = l_coefficients(&c, 200);
        assert_eq!(t.a(1), 1);
        assert_eq!(t.a(6), t.a(2) * t.a(3));
        // a_9 re-derived from the recurrence at the good prime 3? 3 is bad for 48a1
        assert_eq!(t.a(9), t.a(3) * t.a(3));
        let a5 = ap(&c, 5).unwrap();
        assert_eq!(t.a(25), a5 * a5 - 5);
        assert_eq!(t.a(125), a5 * t.a(25) - 5 * a5);
        // PARI ellan
        let pari = [1, 0, 1, 0, -2, 0, 0, 0, 1, 0, -4, 0];
        assert_eq!(&t.coefficients[..12], &pari);
    }

    #[test]
    fn tail_bound_contract() {
        assert!(tail_bound(1_000_000) <= 1e-6);
        let n = terms_for_tail(1e-8);
        assert!(tail_bound(n) <= 1e-8);
        assert!(n < 2_000_000);
        // direct check of the majorant against a long partial sum of d(n) n^{-5/2}
        let big = 200_000usize;
        let mut d = vec![0u32; big + 1];
        for i in 1..=big {
            for j in (i..=big).step_by(i) {
                d[j] += 1;
            }
        }
        let partial: f64 = (1001..=big).map(|k| f64::from(d[k]) * (k as f64).powf(-2.5)).sum();
        assert!(partial <= tail_bound(1000));
    }

    #[test]
    fn l3_doubling_is_cauchy() {
        let c = curve("15a8");
        let (v1, t1) = l_value_3(&c, 4000);
        let (v2, _) = l_value_3(&c, 8000);
        assert!((v1 - v2).abs() < t1);
        assert!(v1 > 0.0);
        // PARI lfun(E, 3)
        assert!((v2 - 0.838147602824060).abs() < 1e-5);
    }

    #[test]
    fn missing_root_number_is_an_error() {
        let mut c = curve("15a8");
        c.root_number = None;
        assert!(matches!(lprime_minus1(&c), Err(Error::MissingRootNumber(_))));
    }

    #[test]
    fn sign_flip_is_exact() {
        let a = lprime_from_l3(15, 1, 0.8381);
        let b = lprime_from_l3(15, -1, 0.8381);
        assert_eq!(a, -b);
    }
}
