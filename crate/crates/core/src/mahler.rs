//! Logarithmic Mahler measures by Jensen reduction and adaptive quadrature.
//!
//! The last variable is eliminated exactly with Jensen's formula; the
//! remaining torus integral (dimension ≤ 2) is done with adaptive
//! Gauss–Kronrod panels driven by a priority queue on the local error.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly::LaurentPoly;

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
/// Gauss weights on the odd-indexed Kronrod nodes `XGK[1], XGK[3], XGK[5], XGK[7]`.
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

/// The 15 Kronrod nodes on `[-1, 1]` with Kronrod and Gauss weights (0 off the Gauss subset).
fn rule() -> [(f64, f64, f64); 15] {
    let mut out = [(0.0, 0.0, 0.0); 15];
    for k in 0..7 {
        let wg = if k % 2 == 1 { WG[k / 2] } else { 0.0 };
        out[k] = (-XGK[k], WGK[k], wg);
        out[14 - k] = (XGK[k], WGK[k], wg);
    }
    out[7] = (0.0, WGK[7], WG[3]);
    out
}

/// Roots of `Σ c_k z^k` (lowest power first, leading coefficient nonzero).
pub fn poly_roots(c: &[Complex64]) -> Vec<Complex64> {
    let zero = Complex64::new(0.0, 0.0);
    let low = c.iter().take_while(|v| **v == zero).count();
    let mut roots = vec![zero; low];
    let c = &c[low..];
    let d = c.len() - 1;
    match d {
        0 => {}
        1 => roots.push(-c[0] / c[1]),
        2 => {
            let (a, b, cc) = (c[2], c[1], c[0]);
            let disc = (b * b - a * cc * 4.0).sqrt();
            let q = if (b.conj() * disc).re >= 0.0 { -(b + disc) / 2.0 } else { -(b - disc) / 2.0 };
            if q == zero {
                roots.extend([zero, zero]);
            } else {
                roots.extend([q / a, cc / q]);
            }
        }
        3 | 4 => {
            let lead = c[d];
            let m = DMatrix::from_fn(d, d, |i, j| {
                if i == 0 {
                    -c[d - 1 - j] / lead
                } else if i == j + 1 {
                    Complex64::new(1.0, 0.0)
                } else {
                    zero
                }
            });
            match m.clone().schur().eigenvalues() {
                Some(ev) => roots.extend(ev.iter().map(|r| polish(c, *r))),
                None => roots.extend(aberth(c)),
            }
        }
        _ => roots.extend(aberth(c)),
    }
    roots
}

fn horner(c: &[Complex64], z: Complex64) -> (Complex64, Complex64) {
    let mut p = Complex64::new(0.0, 0.0);
    let mut dp = Complex64::new(0.0, 0.0);
    for &a in c.iter().rev() {
        dp = dp * z + p;
        p = p * z + a;
    }
    (p, dp)
}

fn polish(c: &[Complex64], z: Complex64) -> Complex64 {
    polish_n(c, z, 3)
}

fn polish_n(c: &[Complex64], mut z: Complex64, steps: usize) -> Complex64 {
    for _ in 0..steps {
        let (p, dp) = horner(c, z);
        if dp.norm() == 0.0 {
            break;
        }
        let step = p / dp;
        if !step.re.is_finite() || !step.im.is_finite() {
            break;
        }
        z -= step;
        if step.norm() <= 1e-16 * z.norm() {
            break;
        }
    }
    z
}

/// Aberth–Ehrlich simultaneous iteration; tolerance 1e−12, at most 100 sweeps.
pub fn aberth(c: &[Complex64]) -> Vec<Complex64> {
    let d = c.len() - 1;
    let lead = c[d].norm();
    // Cauchy bound
    let radius = 1.0 + c[..d].iter().map(|a| a.norm() / lead).fold(0.0, f64::max);
    let r0 = radius.min((c[0].norm() / lead).powf(1.0 / d as f64).max(1e-3));
    let mut z: Vec<Complex64> = (0..d)
        .map(|k| Complex64::from_polar(r0, 2.0 * PI * k as f64 / d as f64 + 0.4))
        .collect();
    for _ in 0..100 {
        let mut biggest: f64 = 0.0;
        for i in 0..d {
            let (p, dp) = horner(c, z[i]);
            if p.norm() == 0.0 {
                continue;
            }
            let ratio = p / dp;
            let s: Complex64 = (0..d).filter(|&j| j != i).map(|j| (z[i] - z[j]).inv()).sum();
            let w = ratio / (Complex64::new(1.0, 0.0) - ratio * s);
            if w.re.is_finite() && w.im.is_finite() {
                z[i] -= w;
                biggest = biggest.max(w.norm() / z[i].norm().max(1e-300));
            }
        }
        if biggest < 1e-12 {
            break;
        }
    }
    z
}

/// Coefficients of `P` in its last variable, tabulated densely in the others.
#[derive(Debug, Clone)]
pub struct FiberPoly {
    nbase: usize,
    /// `table[k][j][i]`: coefficient of `x^(i+lo[0]) y^(j+lo[1]) z^(k+lo_z)`.
    table: Vec<Vec<Vec<Complex64>>>,
    lo: [i32; 2],
    lo_z: i32,
}

impl FiberPoly {
    pub fn new(p: &LaurentPoly) -> Result<Self> {
        let n = p.nvars();
        if n == 0 || n > 3 {
            return Err(Error::Degenerate(format!("expected 1 to 3 variables, got {n}")));
        }
        let nbase = n - 1;
        let range = |i: usize| if i < nbase { p.degree_range(i) } else { (0, 0) };
        let (rx, ry, rz) = (range(0), range(1), p.degree_range(n - 1));
        let zero = Complex64::new(0.0, 0.0);
        let mut table = vec![
            vec![vec![zero; (rx.1 - rx.0 + 1) as usize]; (ry.1 - ry.0 + 1) as usize];
            (rz.1 - rz.0 + 1) as usize
        ];
        for (e, c) in p.to_f64_terms() {
            let i = if nbase > 0 { e[0] - rx.0 } else { 0 } as usize;
            let j = if nbase > 1 { e[1] - ry.0 } else { 0 } as usize;
            let k = (e[n - 1] - rz.0) as usize;
            table[k][j][i] += c;
        }
        Ok(Self { nbase, table, lo: [rx.0, ry.0], lo_z: rz.0 })
    }

    pub fn nbase(&self) -> usize {
        self.nbase
    }

    pub fn lowest_z_power(&self) -> i32 {
        self.lo_z
    }

    /// Collapses the `x` direction: `out[k][j]`.
    pub fn at_x(&self, x: Complex64) -> Vec<Vec<Complex64>> {
        self.table
            .iter()
            .map(|rows| rows.iter().map(|r| horner(r, x).0).collect())
            .collect()
    }

    /// z-coefficients from a partial evaluation at `x`, up to the unit factor `x^lo y^lo`.
    pub fn at_y(partial: &[Vec<Complex64>], y: Complex64) -> Vec<Complex64> {
        partial.iter().map(|r| horner(r, y).0).collect()
    }

    /// z-coefficients (lowest power first) at a base point, exact values.
    pub fn coefficients(&self, base: &[Complex64]) -> Vec<Complex64> {
        let one = Complex64::new(1.0, 0.0);
        let x = base.first().copied().unwrap_or(one);
        let y = base.get(1).copied().unwrap_or(one);
        let mut scale = one;
        if self.nbase > 0 {
            scale *= x.powi(self.lo[0]);
        }
        if self.nbase > 1 {
            scale *= y.powi(self.lo[1]);
        }
        Self::at_y(&self.at_x(x), y).into_iter().map(|c| c * scale).collect()
    }
}

/// `log|c_d| + Σ log⁺|r_i|`, the mean of `log|Σ c_k z^k|` over `|z| = 1`; `None` if all `c_k` vanish.
pub fn jensen(c: &[Complex64]) -> Option<f64> {
    let zero = Complex64::new(0.0, 0.0);
    let hi = c.iter().rposition(|v| *v != zero)?;
    let lo = c.iter().position(|v| *v != zero)?;
    let c = &c[lo..=hi];
    match c.len() {
        1 => Some(c[0].norm().ln()),
        2 => Some(c[0].norm().max(c[1].norm()).ln()),
        _ => {
            let rev: Vec<Complex64>;
            let c = if c[0].norm() > c[c.len() - 1].norm() {
                rev = c.iter().rev().copied().collect();
                &rev[..]
            } else {
                c
            };
            let lead = c[c.len() - 1].norm().ln();
            Some(lead + log_plus_sum(c, &poly_roots(c)))
        }
    }
}

/// `Σ log⁺|r_i|` over the roots of `c`. A tight cluster is treated as one multiple root and
/// refined as the simple root of the matching derivative, since the individual roots of a
/// multiple root are only good to `ε^{1/k}`.
fn log_plus_sum(c: &[Complex64], roots: &[Complex64]) -> f64 {
    let mut used = vec![false; roots.len()];
    let mut total = 0.0;
    for i in 0..roots.len() {
        if used[i] {
            continue;
        }
        used[i] = true;
        let mut members = vec![roots[i]];
        let mut k = 0;
        while k < members.len() {
            let r = members[k];
            for j in 0..roots.len() {
                if !used[j] && (roots[j] - r).norm() < 2e-5 * (1.0 + r.norm()) {
                    used[j] = true;
                    members.push(roots[j]);
                }
            }
            k += 1;
        }
        if members.len() == 1 {
            total += roots[i].norm().ln().max(0.0);
            continue;
        }
        let mut d = c.to_vec();
        for _ in 1..members.len() {
            d = d.iter().enumerate().skip(1).map(|(k, a)| a * k as f64).collect();
        }
        let mean = members.iter().sum::<Complex64>() / members.len() as f64;
        let centre = polish_n(&d, mean, 20);
        total += members.len() as f64 * centre.norm().ln().max(0.0);
    }
    total
}

/// All roots in the last variable at the base point `(x0, y0)`, with multiplicity.
pub fn fiber_roots(p: &LaurentPoly, x0: Complex64, y0: Complex64) -> Result<Vec<Complex64>> {
    let f = FiberPoly::new(p)?;
    let c = f.coefficients(&[x0, y0]);
    let scale = c.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let lead = *c.last().expect("nonempty");
    if c.len() < 2 || lead.norm() <= 1e-14 * scale {
        return Err(Error::FiberDegeneracy { x: x0.to_string(), y: y0.to_string() });
    }
    Ok(poly_roots(&c))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureOptions {
    /// Absolute tolerance on the measure.
    pub tol: f64,
    pub max_panels: usize,
}

impl Default for QuadratureOptions {
    fn default() -> Self {
        Self { tol: 1e-6, max_panels: 60_000 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MahlerEstimate {
    pub value: f64,
    pub error: f64,
    pub panels: usize,
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    t: (f64, f64),
    s: (f64, f64),
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, o: &Self) -> bool {
        self.error == o.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Panel {
    fn cmp(&self, o: &Self) -> Ordering {
        self.error.total_cmp(&o.error)
    }
}

/// Jensen integrand on the torus, nudging nodes that land on the singular set.
struct Integrand {
    fiber: FiberPoly,
}

impl Integrand {
    fn value_2d(&self, partial: &[Vec<Complex64>], y: Complex64) -> Option<f64> {
        let c = FiberPoly::at_y(partial, y);
        let big = c.iter().map(|v| v.norm()).fold(0.0, f64::max);
        if big < 1e-13 {
            return None;
        }
        jensen(&c).filter(|v| v.is_finite())
    }

    fn at(&self, t: f64, s: f64, nudge: f64) -> f64 {
        let x = Complex64::from_polar(1.0, t);
        let partial = self.fiber.at_x(x);
        if let Some(v) = self.value_2d(&partial, Complex64::from_polar(1.0, s)) {
            return v;
        }
        let partial = self.fiber.at_x(Complex64::from_polar(1.0, t + nudge));
        self.value_2d(&partial, Complex64::from_polar(1.0, s + nudge)).unwrap_or(0.0)
    }

    fn at_1d(&self, t: f64, nudge: f64) -> f64 {
        let one = Complex64::new(1.0, 0.0);
        self.value_2d(&self.fiber.at_x(Complex64::from_polar(1.0, t)), one)
            .or_else(|| self.value_2d(&self.fiber.at_x(Complex64::from_polar(1.0, t + nudge)), one))
            .unwrap_or(0.0)
    }
}

fn panel_1d(f: &Integrand, t: (f64, f64)) -> Panel {
    let (c, h) = ((t.0 + t.1) / 2.0, (t.1 - t.0) / 2.0);
    let (mut k, mut g) = (0.0, 0.0);
    for (u, wk, wg) in rule() {
        let v = f.at_1d(c + h * u, h / 2.0);
        k += wk * v;
        g += wg * v;
    }
    Panel { t, s: (0.0, 0.0), value: k * h, error: ((k - g) * h).abs() }
}

fn panel_2d(f: &Integrand, t: (f64, f64), s: (f64, f64)) -> Panel {
    let (ct, ht) = ((t.0 + t.1) / 2.0, (t.1 - t.0) / 2.0);
    let (cs, hs) = ((s.0 + s.1) / 2.0, (s.1 - s.0) / 2.0);
    let r = rule();
    let (mut k, mut g) = (0.0, 0.0);
    for (u, wku, wgu) in r {
        let tt = ct + ht * u;
        let x = Complex64::from_polar(1.0, tt);
        let partial = f.fiber.at_x(x);
        for (v, wkv, wgv) in r {
            let ss = cs + hs * v;
            let val = match f.value_2d(&partial, Complex64::from_polar(1.0, ss)) {
                Some(val) => val,
                None => f.at(tt, ss, ht.min(hs) / 2.0),
            };
            k += wku * wkv * val;
            g += wgu * wgv * val;
        }
    }
    let area = ht * hs;
    Panel { t, s, value: k * area, error: ((k - g) * area).abs() }
}

/// Adaptive integration over `[−π, π]^dim`, returning the mean value.
fn integrate(f: &Integrand, dim: usize, opts: &QuadratureOptions) -> Result<MahlerEstimate> {
    let full = (-PI, PI);
    let volume = (2.0 * PI).powi(dim as i32);
    let target = opts.tol * volume;
    let mut heap = BinaryHeap::new();
    let first = if dim == 1 { panel_1d(f, full) } else { panel_2d(f, full, full) };
    let (mut total, mut err) = (first.value, first.error);
    heap.push(first);
    let mut panels = 1;
    while err > target {
        if panels >= opts.max_panels {
            return Err(Error::BudgetExceeded { best: total / volume, error: err / volume });
        }
        let worst = heap.pop().expect("nonempty heap");
        total -= worst.value;
        err -= worst.error;
        let tm = (worst.t.0 + worst.t.1) / 2.0;
        let children: Vec<Panel> = if dim == 1 {
            vec![panel_1d(f, (worst.t.0, tm)), panel_1d(f, (tm, worst.t.1))]
        } else {
            let sm = (worst.s.0 + worst.s.1) / 2.0;
            let mut v = Vec::with_capacity(4);
            for tp in [(worst.t.0, tm), (tm, worst.t.1)] {
                for sp in [(worst.s.0, sm), (sm, worst.s.1)] {
                    v.push(panel_2d(f, tp, sp));
                }
            }
            v
        };
        panels += children.len() - 1;
        for c in children {
            total += c.value;
            err += c.error;
            heap.push(c);
        }
        // resum to shed accumulated cancellation
        if panels % 4096 < 4 {
            total = heap.iter().map(|p| p.value).sum();
            err = heap.iter().map(|p| p.error).sum();
        }
    }
    total = heap.iter().map(|p| p.value).sum();
    err = heap.iter().map(|p| p.error).sum();
    Ok(MahlerEstimate { value: total / volume, error: err / volume, panels })
}

/// `m(P)` with an a-posteriori error estimate.
pub fn mahler_measure(p: &LaurentPoly, tol: f64) -> Result<MahlerEstimate> {
    mahler_measure_with(p, &QuadratureOptions { tol, ..Default::default() })
}

pub fn mahler_measure_with(p: &LaurentPoly, opts: &QuadratureOptions) -> Result<MahlerEstimate> {
    if p.is_zero() {
        return Err(Error::Degenerate("zero polynomial".into()));
    }
    let n = p.nvars();
    if n == 0 || p.terms().count() == 1 {
        // a monomial: log|c| on the torus
        let c = p.terms().next().expect("nonzero").1;
        let v = num_traits::ToPrimitive::to_f64(c).unwrap_or(f64::NAN).abs().ln();
        return Ok(MahlerEstimate { value: v, error: 0.0, panels: 0 });
    }
    let fiber = FiberPoly::new(p)?;
    if n == 1 {
        let c = fiber.coefficients(&[]);
        let v = jensen(&c).ok_or_else(|| Error::Degenerate("zero polynomial".into()))?;
        return Ok(MahlerEstimate { value: v, error: 0.0, panels: 0 });
    }
    integrate(&Integrand { fiber }, n - 1, opts)
}

/// `m(P̃)` for the leading coefficient `P̃` of `P` in its last variable.
pub fn leading_coeff_measure(p: &LaurentPoly, tol: f64) -> Result<MahlerEstimate> {
    if p.nvars() == 0 {
        return Err(Error::Degenerate("constant polynomial has no last variable".into()));
    }
    let lead = p.leading_coefficient().trim_variables();
    mahler_measure(&lead, tol)
}
