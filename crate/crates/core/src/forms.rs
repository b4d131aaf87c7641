//! The regulator forms `θ`, `ρ` and `η`, evaluated on tangent vectors, integrated over loops.
//!
//! For a real tangent vector represented by its holomorphic components `v`,
//! `d log|f|(v) = Re(df(v)/f)` and `d arg f(v) = Im(df(v)/f)`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::chains::{wrap_angle, BoundaryPath, TorusField};
use crate::error::{Error, Result};
use crate::expr::{Dual, Point3, RationalExpr};
use crate::mahler::leading_coeff_measure;
use crate::poly::LaurentPoly;
use crate::specialfn::{bloch_wigner, d, ComplexOrInfinity};
use crate::wedge::Decomposition;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// A point of `V_P` with one or two tangent directions.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentSample {
    pub point: Point3,
    pub tangents: Vec<Point3>,
}

/// Partial derivatives of `P` at a point.
fn gradient(p: &LaurentPoly, q: &Point3) -> [Complex64; 3] {
    [p.derivative(0).eval(q), p.derivative(1).eval(q), p.derivative(2).eval(q)]
}

/// Completes `(dx, dy)` to a tangent of `P = 0` via `dz = −(P_x dx + P_y dy)/P_z`.
pub fn complete_tangent(grad: &[Complex64; 3], dx: Complex64, dy: Complex64) -> Result<Point3> {
    if grad[2].norm() < 1e-300 {
        return Err(Error::Degenerate("P_z vanishes at the sample".into()));
    }
    Ok([dx, dy, -(grad[0] * dx + grad[1] * dy) / grad[2]])
}

impl TangentSample {
    pub fn new(point: Point3, tangents: Vec<Point3>) -> Self {
        Self { point, tangents }
    }

    /// Tangents of `V_P` with the given `(dx, dy)` parts.
    pub fn on_surface(p: &LaurentPoly, point: Point3, dirs: &[[Complex64; 2]]) -> Result<Self> {
        let p = p.to_xyz()?;
        let g = gradient(&p, &point);
        let tangents = dirs.iter().map(|[a, b]| complete_tangent(&g, *a, *b)).collect::<Result<_>>()?;
        Ok(Self { point, tangents })
    }

    /// `max |dP(v)|` over the tangents, relative to the coefficient size.
    pub fn surface_defect(&self, p: &LaurentPoly) -> Result<f64> {
        let p = p.to_xyz()?;
        let g = gradient(&p, &self.point);
        Ok(self
            .tangents
            .iter()
            .map(|v| (g[0] * v[0] + g[1] * v[1] + g[2] * v[2]).norm() / p.scale())
            .fold(0.0, f64::max))
    }

    fn dual(&self, f: &RationalExpr, k: usize) -> Dual {
        f.eval_dual(&self.point, &self.tangents[k])
    }
}

fn check_value(name: &str, v: Complex64, tol: f64) -> Result<()> {
    if !(v.norm() >= tol && v.norm() <= 1.0 / tol) {
        return Err(Error::PoleProximity(format!("|{name}| = {:e}", v.norm())));
    }
    Ok(())
}

/// `log|f| d log|g| − log|g| d log|f|` on the first tangent.
pub fn eval_theta(f: &RationalExpr, g: &RationalExpr, at: &TangentSample) -> Result<f64> {
    let (a, b) = (at.dual(f, 0), at.dual(g, 0));
    check_value("f", a.v, 1e-12)?;
    check_value("g", b.v, 1e-12)?;
    Ok(theta_from(a, b))
}

fn theta_from(a: Dual, b: Dual) -> f64 {
    a.v.norm().ln() * b.dlog().re - b.v.norm().ln() * a.dlog().re
}

/// `ρ(f, g) = −D(f) d arg g + ⅓ log|g| θ(1−f, f)` on the first tangent.
pub fn eval_rho(f: &RationalExpr, g: &RationalExpr, at: &TangentSample) -> Result<f64> {
    let a = at.dual(f, 0);
    let b = at.dual(g, 0);
    check_value("f", a.v, 1e-12)?;
    check_value("1-f", Complex64::new(1.0, 0.0) - a.v, 1e-12)?;
    check_value("g", b.v, 1e-12)?;
    Ok(rho_from(a, b))
}

fn rho_from(a: Dual, b: Dual) -> f64 {
    let one_minus = Dual { v: Complex64::new(1.0, 0.0) - a.v, d: -a.d };
    -d(a.v) * b.dlog().im + b.v.norm().ln() * theta_from(one_minus, a) / 3.0
}

/// The 2-form `η(f, g, h)` on the bivector of the two tangents.
pub fn eval_eta(f: &RationalExpr, g: &RationalExpr, h: &RationalExpr, at: &TangentSample) -> Result<f64> {
    if at.tangents.len() < 2 {
        return Err(Error::Degenerate("η needs two tangent directions".into()));
    }
    let duals: Vec<[Dual; 2]> = [f, g, h].iter().map(|e| [at.dual(e, 0), at.dual(e, 1)]).collect();
    for (name, dd) in ["f", "g", "h"].iter().zip(&duals) {
        check_value(name, dd[0].v, 1e-12)?;
    }
    Ok(eta_from(&duals[0], &duals[1], &duals[2]))
}

/// `η` from values and derivatives along `u` and `v`.
pub fn eta_from(f: &[Dual; 2], g: &[Dual; 2], h: &[Dual; 2]) -> f64 {
    let part = |a: &[Dual; 2], b: &[Dual; 2], c: &[Dual; 2]| {
        let (bu, bv, cu, cv) = (b[0].dlog(), b[1].dlog(), c[0].dlog(), c[1].dlog());
        let mods = bu.re * cv.re - bv.re * cu.re;
        let args = bu.im * cv.im - bv.im * cu.im;
        a[0].v.norm().ln() * (mods / 3.0 - args)
    };
    part(f, g, h) + part(g, h, f) + part(h, f, g)
}

/// `Σ c_j ρ(f_j, g_j)` on the first tangent.
pub fn rho_decomposition(dec: &Decomposition, at: &TangentSample) -> Result<f64> {
    let mut total = 0.0;
    for term in &dec.terms {
        total += term.coefficient() * eval_rho(&term.f, &term.g, at)?;
    }
    Ok(total)
}

/// Samples of a closed loop at `u_k = 2πk/M`, with `d/du` tangents.
#[derive(Debug, Clone, PartialEq)]
pub struct LoopSamples {
    pub points: Vec<Point3>,
    pub tangents: Vec<Point3>,
}

impl LoopSamples {
    /// Circle `centre + r e^{iu}` in one coordinate, the others fixed at `base`.
    pub fn circle(base: Point3, var: usize, centre: Complex64, radius: f64, n: usize) -> Self {
        let mut points = Vec::with_capacity(n);
        let mut tangents = Vec::with_capacity(n);
        for k in 0..n {
            let u = 2.0 * PI * k as f64 / n as f64;
            let e = Complex64::from_polar(radius, u);
            let mut p = base;
            p[var] = centre + e;
            let mut v = [ZERO; 3];
            v[var] = I * e;
            points.push(p);
            tangents.push(v);
        }
        Self { points, tangents }
    }

    /// Tangents of a traced loop: sixth-order periodic differences of `(t, s)`,
    /// projected onto the exact boundary direction and lifted to `V_P`.
    pub fn from_boundary(p: &LaurentPoly, path: &BoundaryPath) -> Result<Self> {
        if !path.closed {
            return Err(Error::Degenerate("loop integration needs a closed path".into()));
        }
        let m = path.len();
        if m < 8 {
            return Err(Error::Sampling("too few samples on the path".into()));
        }
        let p = p.to_xyz()?;
        let field = TorusField::new(&p)?;
        let unwrap = |v: &[f64]| {
            let mut out = vec![v[0]];
            for k in 1..m {
                let prev = out[k - 1];
                out.push(prev + wrap_angle(v[k] - v[k - 1]));
            }
            let period = out[m - 1] + wrap_angle(v[0] - v[m - 1]) - out[0];
            (out, period)
        };
        let (t, tp) = unwrap(&path.t);
        let (s, sp) = unwrap(&path.s);
        let h = 2.0 * PI / m as f64;
        let ext = |a: &[f64], per: f64, k: isize| {
            let mi = m as isize;
            let q = k.div_euclid(mi);
            a[k.rem_euclid(mi) as usize] + q as f64 * per
        };
        let deriv = |a: &[f64], per: f64, k: isize| {
            let e = |j: isize| ext(a, per, k + j);
            (-e(-3) + 9.0 * e(-2) - 45.0 * e(-1) + 45.0 * e(1) - 9.0 * e(2) + e(3)) / (60.0 * h)
        };
        let mut tangents = Vec::with_capacity(m);
        for k in 0..m {
            let (mut dt, mut ds) = (deriv(&t, tp, k as isize), deriv(&s, sp, k as isize));
            let (gt, gs) = field.grad(path.t[k], path.s[k]);
            let norm = gt.hypot(gs);
            if norm > 0.0 {
                let (et, es) = (-gs / norm, gt / norm);
                let along = dt * et + ds * es;
                dt = along * et;
                ds = along * es;
            }
            let q = path.samples[k];
            let g = gradient(&p, &q);
            tangents.push(complete_tangent(&g, I * q[0] * dt, I * q[1] * ds)?);
        }
        Ok(Self { points: path.samples.clone(), tangents })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathIntegral {
    pub value: f64,
    pub error: f64,
}

/// Trapezoid sum of `Σ c_j ρ(f_j, g_j)` over a closed loop, with the halved rule as error estimate.
pub fn integrate_rho_samples(samples: &LoopSamples, dec: &Decomposition) -> Result<PathIntegral> {
    let m = samples.len();
    let mut vals = Vec::with_capacity(m);
    for k in 0..m {
        let (q, v) = (&samples.points[k], &samples.tangents[k]);
        let mut total = 0.0;
        for term in &dec.terms {
            let a = term.f.eval_dual(q, v);
            let b = term.g.eval_dual(q, v);
            for (name, val) in [("f", a.v), ("1-f", Complex64::new(1.0, 0.0) - a.v), ("g", b.v)] {
                if !(val.norm() >= 1e-7 && val.norm() <= 1e7) {
                    return Err(Error::ExcludedPointOnPath(format!("|{name}| = {:e} at sample {k} for f = {}, g = {}", val.norm(), term.f, term.g)));
                }
            }
            total += term.coefficient() * rho_from(a, b);
        }
        vals.push(total);
    }
    let h = 2.0 * PI / m as f64;
    let full: f64 = vals.iter().sum::<f64>() * h;
    let error = if m % 2 == 0 {
        let half: f64 = vals.iter().step_by(2).sum::<f64>() * 2.0 * h;
        (full - half).abs()
    } else {
        f64::NAN
    };
    Ok(PathIntegral { value: full, error })
}

/// `∫ ρ` over a traced loop in sample order.
pub fn integrate_rho(p: &LaurentPoly, path: &BoundaryPath, dec: &Decomposition) -> Result<PathIntegral> {
    integrate_rho_samples(&LoopSamples::from_boundary(p, path)?, dec)
}

/// `−2π Σ c_j v_p(g_j) D(f_j(p))`.
pub fn residue_formula(dec: &Decomposition, p: &Point3, valuations: &[i64]) -> f64 {
    dec.terms
        .iter()
        .zip(valuations)
        .map(|(term, &v)| {
            if v == 0 {
                return 0.0;
            }
            let fv = term.f.eval(p);
            let arg = if fv.norm() > 1e12 || !fv.re.is_finite() { ComplexOrInfinity::Infinity } else { ComplexOrInfinity::Finite(fv) };
            term.coefficient() * v as f64 * bloch_wigner(arg)
        })
        .sum::<f64>()
        * (-2.0 * PI)
}

/// `m(P̃) − (1/8π²) Σ ∫ ρ(λ)`, each loop weighted by its orientation sign.
pub fn mahler_via_boundary(p: &LaurentPoly, lambda: &Decomposition, paths: &[BoundaryPath], tol: f64) -> Result<PathIntegral> {
    let base = leading_coeff_measure(p, tol)?;
    let mut value = base.value;
    let mut error = base.error;
    for path in paths {
        let r = integrate_rho(p, path, lambda)?;
        value -= f64::from(path.orientation_sign) * r.value / (8.0 * PI * PI);
        error += r.error / (8.0 * PI * PI);
    }
    Ok(PathIntegral { value, error })
}
