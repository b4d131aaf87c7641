//! Geometry of the Deninger chain on the torus `x = e^{it}, y = e^{is}`.
//!
//! The region is `Γ = {|z| ≥ 1}` over the 2-torus; its boundary `∂Γ` is the
//! zero set of `G(t,s) = |c_d|²·Π(|r_i|² − 1)`, where `r_i` are the z-roots and
//! `c_d` the leading z-coefficient. For z-linear `P` this is `|P0|² − |P1|²`.
//!
//! Orientation convention (the only place it is fixed): loops are oriented so
//! that `Γ` lies on their left in the `(t, s)` plane with the usual `dt∧ds`
//! orientation, i.e. along `(∂φ/∂s, −∂φ/∂t)` with `φ = log|z|`.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::io::Write;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::{Point3, RationalExpr};
use crate::mahler::{poly_roots, FiberPoly};
use crate::poly::LaurentPoly;

const TAU: f64 = 2.0 * PI;
/// Grid offset in units of the spacing, so nodes avoid rational multiples of π.
const GRID_OFFSET: f64 = 0.318_309_886;

fn unit(a: f64) -> Complex64 {
    Complex64::from_polar(1.0, a)
}

pub fn wrap_angle(a: f64) -> f64 {
    (a + PI).rem_euclid(TAU) - PI
}

/// Indicator data for `P` over the torus.
#[derive(Debug, Clone)]
pub struct TorusField {
    fiber: FiberPoly,
    degree: usize,
}

impl TorusField {
    pub fn new(p: &LaurentPoly) -> Result<Self> {
        let p = p.to_xyz()?;
        let (lo, hi) = p.degree_range(2);
        if hi == lo {
            return Err(Error::Degenerate("polynomial has no z-dependence".into()));
        }
        Ok(Self { fiber: FiberPoly::new(&p)?, degree: (hi - lo) as usize })
    }

    pub fn coefficients(&self, t: f64, s: f64) -> Vec<Complex64> {
        FiberPoly::at_y(&self.fiber.at_x(unit(t)), unit(s))
    }

    /// `|c_d|² Π(|r_i|² − 1)`; positive iff `|z| > 1` for z-linear `P`.
    pub fn g(&self, t: f64, s: f64) -> f64 {
        let c = self.coefficients(t, s);
        if self.degree == 1 {
            return c[0].norm_sqr() - c[1].norm_sqr();
        }
        let lead = c[self.degree];
        if lead.norm() == 0.0 {
            // one root at infinity: drop it and use the next coefficient
            let lower = &c[..self.degree];
            let roots = poly_roots(lower);
            return lower[self.degree - 1].norm_sqr() * roots.iter().map(|r| r.norm_sqr() - 1.0).product::<f64>();
        }
        lead.norm_sqr() * poly_roots(&c).iter().map(|r| r.norm_sqr() - 1.0).product::<f64>()
    }

    pub fn roots(&self, t: f64, s: f64) -> Vec<Complex64> {
        let c = self.coefficients(t, s);
        let hi = c.iter().rposition(|v| v.norm() > 0.0).unwrap_or(0);
        poly_roots(&c[..=hi])
    }

    /// Whether some fiber root has modulus ≥ 1 (a root at infinity counts).
    pub fn in_region(&self, t: f64, s: f64) -> bool {
        let c = self.coefficients(t, s);
        let scale = c.iter().map(|v| v.norm()).fold(0.0, f64::max);
        if c[self.degree].norm() <= 1e-14 * scale {
            return true;
        }
        poly_roots(&c).iter().any(|r| r.norm() >= 1.0)
    }

    /// The root closest to the unit circle.
    pub fn unit_root(&self, t: f64, s: f64) -> Option<Complex64> {
        self.roots(t, s)
            .into_iter()
            .filter(|r| r.re.is_finite() && r.im.is_finite())
            .min_by(|a, b| (a.norm() - 1.0).abs().total_cmp(&(b.norm() - 1.0).abs()))
    }

    /// `(∂φ/∂t, ∂φ/∂s)` for `φ = log|r|`, tracking the root near `r`.
    pub fn log_modulus_gradient(&self, t: f64, s: f64) -> Option<(f64, f64)> {
        let r0 = self.unit_root(t, s)?;
        let h = 1e-6;
        let near = |tt: f64, ss: f64| -> Option<f64> {
            self.roots(tt, ss)
                .into_iter()
                .min_by(|a, b| (a - r0).norm().total_cmp(&(b - r0).norm()))
                .map(|r| r.norm().ln())
        };
        let dt = (near(t + h, s)? - near(t - h, s)?) / (2.0 * h);
        let ds = (near(t, s + h)? - near(t, s - h)?) / (2.0 * h);
        Some((dt, ds))
    }

    pub fn grad(&self, t: f64, s: f64) -> (f64, f64) {
        let h = 1e-7;
        (
            (self.g(t + h, s) - self.g(t - h, s)) / (2.0 * h),
            (self.g(t, s + h) - self.g(t, s - h)) / (2.0 * h),
        )
    }
}

/// Membership of `(t_i, s_j)` grid nodes in the projection of `Γ`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegionMask {
    pub resolution: usize,
    /// Row-major in `t`: index `i * resolution + j`.
    pub cells: Vec<bool>,
}

impl RegionMask {
    pub fn node(resolution: usize, i: usize) -> f64 {
        -PI + (i as f64 + GRID_OFFSET) * TAU / resolution as f64
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        self.cells[i * self.resolution + j]
    }

    pub fn count(&self) -> usize {
        self.cells.iter().filter(|c| **c).count()
    }
}

pub fn deninger_region(p: &LaurentPoly, resolution: usize) -> Result<RegionMask> {
    let field = TorusField::new(p)?;
    let mut cells = Vec::with_capacity(resolution * resolution);
    for i in 0..resolution {
        let t = RegionMask::node(resolution, i);
        for j in 0..resolution {
            cells.push(field.in_region(t, RegionMask::node(resolution, j)));
        }
    }
    Ok(RegionMask { resolution, cells })
}

/// One loop of `∂Γ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryPath {
    /// Angles in `[−π, π)`.
    pub t: Vec<f64>,
    pub s: Vec<f64>,
    pub samples: Vec<Point3>,
    pub closed: bool,
    /// +1 when the sample order follows the induced orientation of `∂Γ`.
    pub orientation_sign: i8,
}

impl BoundaryPath {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn reversed(&self) -> Self {
        let rev = |v: &Vec<f64>| v.iter().rev().copied().collect();
        Self {
            t: rev(&self.t),
            s: rev(&self.s),
            samples: self.samples.iter().rev().copied().collect(),
            closed: self.closed,
            orientation_sign: -self.orientation_sign,
        }
    }

    /// Builds a path through the unit-circle roots over the given angles.
    pub fn from_angles(p: &LaurentPoly, t: Vec<f64>, s: Vec<f64>, orientation_sign: i8) -> Result<Self> {
        let field = TorusField::new(p)?;
        let mut samples = Vec::with_capacity(t.len());
        let mut prev: Option<Complex64> = None;
        for (&a, &b) in t.iter().zip(&s) {
            let roots = field.roots(a, b);
            let z = match prev {
                Some(z0) => roots.into_iter().min_by(|u, v| (u - z0).norm().total_cmp(&(v - z0).norm())),
                None => field.unit_root(a, b),
            }
            .ok_or_else(|| Error::Sampling(format!("no root at t={a}, s={b}")))?;
            prev = Some(z);
            samples.push([unit(a), unit(b), z]);
        }
        Ok(Self { t: t.iter().map(|a| wrap_angle(*a)).collect(), s: s.iter().map(|b| wrap_angle(*b)).collect(), samples, closed: true, orientation_sign })
    }

    /// Largest distance between consecutive samples in the `(t, s)` plane.
    pub fn max_step(&self) -> f64 {
        let n = self.len();
        let last = if self.closed { n } else { n.saturating_sub(1) };
        (0..last)
            .map(|k| {
                let l = (k + 1) % n;
                wrap_angle(self.t[l] - self.t[k]).hypot(wrap_angle(self.s[l] - self.s[k]))
            })
            .fold(0.0, f64::max)
    }

    /// Worst violation of `|x| = |y| = |z| = 1` and `P = 0`, scaled by the coefficient size.
    pub fn invariant_defect(&self, p: &LaurentPoly) -> Result<(f64, f64)> {
        let p = p.to_xyz()?;
        let terms = p.to_f64_terms();
        let scale = p.scale();
        let mut modulus: f64 = 0.0;
        let mut residual: f64 = 0.0;
        for q in &self.samples {
            for c in q {
                modulus = modulus.max((c.norm() - 1.0).abs());
            }
            residual = residual.max(crate::poly::eval_terms(&terms, q).norm() / scale);
        }
        Ok((modulus, residual))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceResult {
    pub paths: Vec<BoundaryPath>,
    pub warnings: Vec<String>,
}

#[derive(Clone, Copy)]
struct Crossing {
    t: f64,
    s: f64,
}

/// Marching squares on the periodic `(t, s)` grid, then orientation and resampling.
pub fn trace_boundary(p: &LaurentPoly, step: f64) -> Result<TraceResult> {
    if !(step > 0.0 && step < 1.0) {
        return Err(Error::Degenerate(format!("step {step} outside (0, 1)")));
    }
    let field = TorusField::new(p)?;
    let n = (TAU / step).ceil() as usize;
    let h = TAU / n as f64;
    let node = |i: usize| -PI + (i as f64 + GRID_OFFSET) * h;
    let mut g = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            g[i * n + j] = field.g(node(i), node(j));
        }
    }
    let sign = |i: usize, j: usize| g[(i % n) * n + (j % n)] >= 0.0;

    // edge 2*(i*n+j): (i,j)-(i+1,j); edge 2*(i*n+j)+1: (i,j)-(i,j+1)
    let mut crossings: HashMap<usize, Crossing> = HashMap::new();
    let mut crossing_at = |id: usize| -> Crossing {
        *crossings.entry(id).or_insert_with(|| {
            let base = id / 2;
            let (i, j) = (base / n, base % n);
            let (t0, s0) = (node(i), node(j));
            let (dt, ds) = if id % 2 == 0 { (h, 0.0) } else { (0.0, h) };
            let (mut a, mut b) = (0.0, 1.0);
            let ga = field.g(t0, s0);
            for _ in 0..60 {
                let m = 0.5 * (a + b);
                if (field.g(t0 + m * dt, s0 + m * ds) >= 0.0) == (ga >= 0.0) {
                    a = m;
                } else {
                    b = m;
                }
            }
            let m = 0.5 * (a + b);
            Crossing { t: t0 + m * dt, s: s0 + m * ds }
        })
    };

    let mut links: HashMap<usize, Vec<usize>> = HashMap::new();
    let mut link = |a: usize, b: usize| {
        links.entry(a).or_default().push(b);
        links.entry(b).or_default().push(a);
    };
    for i in 0..n {
        for j in 0..n {
            let (i1, j1) = ((i + 1) % n, (j + 1) % n);
            let c = [sign(i, j), sign(i1, j), sign(i1, j1), sign(i, j1)];
            // bottom, right, top, left
            let edges = [2 * (i * n + j), 2 * (i1 * n + j) + 1, 2 * (i * n + j1), 2 * (i * n + j) + 1];
            let cut = [c[0] != c[1], c[1] != c[2], c[3] != c[2], c[0] != c[3]];
            let active: Vec<usize> = (0..4).filter(|&k| cut[k]).collect();
            match active.len() {
                0 => {}
                2 => link(edges[active[0]], edges[active[1]]),
                4 => {
                    let centre = field.g(node(i) + h / 2.0, node(j) + h / 2.0) >= 0.0;
                    // isolate the corners whose sign differs from the centre
                    if c[1] != centre {
                        link(edges[0], edges[1]);
                        link(edges[2], edges[3]);
                    } else {
                        link(edges[0], edges[3]);
                        link(edges[1], edges[2]);
                    }
                }
                _ => unreachable!("odd number of sign changes in a cell"),
            }
        }
    }

    let mut warnings = Vec::new();
    let mut visited: HashMap<usize, bool> = HashMap::new();
    let mut keys: Vec<usize> = links.keys().copied().collect();
    keys.sort_unstable();
    let mut raw_loops: Vec<Vec<Crossing>> = Vec::new();
    for start in keys {
        if visited.contains_key(&start) {
            continue;
        }
        let mut order = vec![start];
        visited.insert(start, true);
        let mut prev = usize::MAX;
        let mut cur = start;
        let mut closed = false;
        loop {
            let next = links[&cur].iter().copied().find(|&e| e != prev && !(e == start && order.len() < 3) && (!visited.contains_key(&e) || e == start));
            match next {
                Some(e) if e == start => {
                    closed = true;
                    break;
                }
                Some(e) => {
                    visited.insert(e, true);
                    order.push(e);
                    prev = cur;
                    cur = e;
                }
                None => break,
            }
        }
        if !closed {
            warnings.push(format!("open chain of {} crossings", order.len()));
        }
        // unwrap so consecutive crossings are adjacent in the plane
        let mut pts: Vec<Crossing> = Vec::with_capacity(order.len());
        for e in order {
            let c = crossing_at(e);
            match pts.last() {
                None => pts.push(c),
                Some(l) => pts.push(Crossing {
                    t: l.t + wrap_angle(c.t - l.t),
                    s: l.s + wrap_angle(c.s - l.s),
                }),
            }
        }
        raw_loops.push(pts);
    }

    let mut paths = Vec::new();
    for pts in raw_loops {
        if pts.len() < 3 {
            warnings.push("degenerate loop dropped".into());
            continue;
        }
        let mut pts = pts;
        if orientation_vote(&field, &pts) < 0.0 {
            pts.reverse();
        }
        let path = resample_loop(p, &field, &pts, step)?;
        if path.max_step() > 10.0 * step {
            warnings.push(format!("gap of {:.3} exceeds 10 steps", path.max_step()));
        }
        paths.push(path);
    }
    Ok(TraceResult { paths, warnings })
}

/// Positive when the polyline runs with `Γ` on its left.
fn orientation_vote(field: &TorusField, pts: &[Crossing]) -> f64 {
    let n = pts.len();
    let stride = (n / 16).max(1);
    let mut vote = 0.0;
    for k in (0..n).step_by(stride) {
        let a = pts[k];
        let b = pts[(k + 1) % n];
        let (dt, ds) = (wrap_angle(b.t - a.t), wrap_angle(b.s - a.s));
        let (mt, ms) = (a.t + dt / 2.0, a.s + ds / 2.0);
        if let Some((pt, ps)) = field.log_modulus_gradient(mt, ms) {
            let d = dt * ps - ds * pt;
            vote += d.signum();
        }
    }
    vote
}

/// Pulls `(t, s)` back onto `G = 0` along the gradient.
fn project(field: &TorusField, mut t: f64, mut s: f64) -> (f64, f64) {
    for _ in 0..30 {
        let gv = field.g(t, s);
        let (gt, gs) = field.grad(t, s);
        let n2 = gt * gt + gs * gs;
        if n2 == 0.0 {
            break;
        }
        let (dt, ds) = (gv * gt / n2, gv * gs / n2);
        t -= dt;
        s -= ds;
        if dt.hypot(ds) < 1e-15 {
            break;
        }
    }
    (t, s)
}

fn resample_loop(p: &LaurentPoly, field: &TorusField, pts: &[Crossing], step: f64) -> Result<BoundaryPath> {
    let n = pts.len();
    let closing = Crossing {
        t: pts[n - 1].t + wrap_angle(pts[0].t - pts[n - 1].t),
        s: pts[n - 1].s + wrap_angle(pts[0].s - pts[n - 1].s),
    };
    let mut poly: Vec<Crossing> = pts.to_vec();
    poly.push(closing);
    let mut cum = vec![0.0];
    for w in poly.windows(2) {
        let d = (w[1].t - w[0].t).hypot(w[1].s - w[0].s);
        cum.push(cum.last().unwrap() + d);
    }
    let total = *cum.last().unwrap();
    // even sample counts keep the halved trapezoid rule aligned
    let mut m = ((total / (0.5 * step)).ceil() as usize).max(16);
    m += m % 2;
    let mut t = Vec::with_capacity(m);
    let mut s = Vec::with_capacity(m);
    let mut seg = 0;
    for k in 0..m {
        let target = total * k as f64 / m as f64;
        while cum[seg + 1] < target {
            seg += 1;
        }
        let frac = (target - cum[seg]) / (cum[seg + 1] - cum[seg]).max(1e-300);
        let a = poly[seg].t + frac * (poly[seg + 1].t - poly[seg].t);
        let b = poly[seg].s + frac * (poly[seg + 1].s - poly[seg].s);
        let (a, b) = project(field, a, b);
        t.push(a);
        s.push(b);
    }
    BoundaryPath::from_angles(p, t, s, 1)
}

/// `(1/2π)·∮ d arg f` along the path, rounded.
pub fn winding_number(path: &BoundaryPath, f: &RationalExpr) -> Result<i64> {
    let n = path.len();
    if n < 2 {
        return Err(Error::Sampling("path has fewer than 2 samples".into()));
    }
    let vals: Vec<Complex64> = path.samples.iter().map(|q| f.eval(q)).collect();
    for (k, v) in vals.iter().enumerate() {
        if !(v.norm() >= 1e-6 && v.norm() <= 1e6) {
            return Err(Error::PoleProximity(format!("|f| = {} at sample {k}", v.norm())));
        }
    }
    let last = if path.closed { n } else { n - 1 };
    let total: f64 = (0..last).map(|k| (vals[(k + 1) % n] / vals[k]).arg()).sum();
    let w = total / TAU;
    let r = w.round();
    if (w - r).abs() >= 0.05 {
        return Err(Error::UnwrapFailure((w - r).abs()));
    }
    Ok(r as i64)
}

/// Plane model `F(x, y)` of the Maillot curve for z-linear `P = P0 + P1·z`.
///
/// `F = x^a y^b (P0·P0∘τ − P1·P1∘τ)`, which equals `|P0|² − |P1|²` on the torus up to a unit.
pub fn maillot_plane_model(p: &LaurentPoly) -> Result<LaurentPoly> {
    let p = p.to_xyz()?;
    let (lo, hi) = p.degree_range(2);
    if hi - lo != 1 {
        return Err(Error::Degenerate("plane model needs P linear in z".into()));
    }
    let c = p.last_variable_coefficients();
    let (p0, p1) = (&c[0], &c[1]);
    let f = p0.mul(&p0.invert_variables()).sub(&p1.mul(&p1.invert_variables()));
    Ok(f.normalize_exponents())
}

/// A point where `∂Γ` meets a singular point of the Maillot curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingularFlag {
    pub path: usize,
    pub sample: usize,
    pub x: Complex64,
    pub y: Complex64,
}

/// Flags singular points of the plane model lying on the traced loops.
///
/// Candidates are local minima of `|∇F|` along each path, refined by Newton on `∇F = 0`.
pub fn detect_singular_boundary(p: &LaurentPoly, paths: &[BoundaryPath]) -> Result<Vec<SingularFlag>> {
    let f = maillot_plane_model(p)?;
    let fx = f.derivative(0);
    let fy = f.derivative(1);
    let (fxx, fxy, fyy) = (fx.derivative(0), fx.derivative(1), fy.derivative(1));
    let ev = |q: &LaurentPoly, x: Complex64, y: Complex64| q.eval(&[x, y]);
    let grad = |x, y| ev(&fx, x, y).norm() + ev(&fy, x, y).norm();
    let mut flags: Vec<SingularFlag> = Vec::new();
    for (pi, path) in paths.iter().enumerate() {
        let n = path.len();
        let gvals: Vec<f64> = path.samples.iter().map(|q| grad(q[0], q[1])).collect();
        let scale = gvals.iter().copied().fold(0.0, f64::max).max(1e-300);
        for k in 0..n {
            let (a, b) = (gvals[(k + n - 1) % n], gvals[(k + 1) % n]);
            if gvals[k] > a || gvals[k] > b || gvals[k] > 0.05 * scale {
                continue;
            }
            let (mut x, mut y) = (path.samples[k][0], path.samples[k][1]);
            // degenerate singular points give linear convergence and then round-off bouncing
            let resid = |x, y| ev(&f, x, y).norm() + grad(x, y);
            let mut best = (resid(x, y), x, y);
            for _ in 0..200 {
                let (gx, gy) = (ev(&fx, x, y), ev(&fy, x, y));
                let (a11, a12, a22) = (ev(&fxx, x, y), ev(&fxy, x, y), ev(&fyy, x, y));
                let det = a11 * a22 - a12 * a12;
                if det.norm() < 1e-300 {
                    break;
                }
                let dx = (a22 * gx - a12 * gy) / det;
                let dy = (a11 * gy - a12 * gx) / det;
                x -= dx;
                y -= dy;
                let r = resid(x, y);
                if r < best.0 {
                    best = (r, x, y);
                }
                if dx.norm() + dy.norm() < 1e-15 {
                    break;
                }
            }
            let (_, x, y) = best;
            let ok = ev(&f, x, y).norm() < 1e-6
                && ev(&fx, x, y).norm() < 1e-6
                && ev(&fy, x, y).norm() < 1e-6
                && (x.norm() - 1.0).abs() < 1e-4
                && (y.norm() - 1.0).abs() < 1e-4;
            if ok && !flags.iter().any(|g| (g.x - x).norm() + (g.y - y).norm() < 1e-3) {
                flags.push(SingularFlag { path: pi, sample: k, x, y });
            }
        }
    }
    Ok(flags)
}

/// Index of the factor that vanishes best along the path, with its worst residual.
pub fn path_component(path: &BoundaryPath, factors: &[LaurentPoly]) -> Option<(usize, f64)> {
    factors
        .iter()
        .enumerate()
        .map(|(i, fac)| {
            let worst = path
                .samples
                .iter()
                .map(|q| fac.eval(&q[..fac.nvars()]).norm() / fac.scale())
                .fold(0.0, f64::max);
            (i, worst)
        })
        .min_by(|a, b| a.1.total_cmp(&b.1))
}

/// CSV with one row per sample.
pub fn write_csv<W: Write>(paths: &[BoundaryPath], mut w: W) -> Result<()> {
    writeln!(w, "loop,t,s,x_re,x_im,y_re,y_im,z_re,z_im")?;
    for (id, p) in paths.iter().enumerate() {
        for k in 0..p.len() {
            let [x, y, z] = p.samples[k];
            writeln!(
                w,
                "{id},{:.15},{:.15},{:.15},{:.15},{:.15},{:.15},{:.15},{:.15}",
                p.t[k], p.s[k], x.re, x.im, y.re, y.im, z.re, z.im
            )?;
        }
    }
    Ok(())
}

/// SVG of the region mask (shaded runs) and loop polylines over `[−π, π]²`.
pub fn render_svg(mask: Option<&RegionMask>, paths: &[BoundaryPath], size: usize) -> String {
    let sz = size as f64;
    let px = |a: f64| (a + PI) / TAU * sz;
    let py = |b: f64| sz - (b + PI) / TAU * sz;
    let mut out = String::new();
    let _ = writeln!(out, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" viewBox="0 0 {size} {size}">"#);
    let _ = writeln!(out, r#"<rect width="{size}" height="{size}" fill="white" stroke="black"/>"#);
    if let Some(m) = mask {
        let r = m.resolution;
        let cell = sz / r as f64;
        let _ = writeln!(out, r##"<g fill="#9ab" stroke="none">"##);
        for i in 0..r {
            let mut j = 0;
            while j < r {
                if !m.get(i, j) {
                    j += 1;
                    continue;
                }
                let start = j;
                while j < r && m.get(i, j) {
                    j += 1;
                }
                let _ = writeln!(
                    out,
                    r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}"/>"#,
                    i as f64 * cell,
                    sz - j as f64 * cell,
                    cell + 0.05,
                    (j - start) as f64 * cell
                );
            }
        }
        let _ = writeln!(out, "</g>");
    }
    let colours = ["#c0392b", "#2c3e50", "#27ae60", "#8e44ad", "#d35400", "#16a085"];
    for (id, p) in paths.iter().enumerate() {
        let colour = colours[id % colours.len()];
        let mut run: Vec<String> = Vec::new();
        let flush = |run: &mut Vec<String>, out: &mut String| {
            if run.len() > 1 {
                let _ = writeln!(out, r#"<polyline fill="none" stroke="{colour}" stroke-width="2" points="{}"/>"#, run.join(" "));
            }
            run.clear();
        };
        let n = p.len();
        let last = if p.closed { n + 1 } else { n };
        for k in 0..last {
            let (a, b) = (p.t[k % n], p.s[k % n]);
            if k > 0 {
                let (a0, b0) = (p.t[(k - 1) % n], p.s[(k - 1) % n]);
                if (a - a0).abs() > PI || (b - b0).abs() > PI {
                    flush(&mut run, &mut out);
                }
            }
            run.push(format!("{:.2},{:.2}", px(a), py(b)));
        }
        flush(&mut run, &mut out);
    }
    out.push_str("</svg>\n");
    out
}

/// Richardson extrapolation to `ε → 0` from values at `ε, ε/2, ε/4`.
pub fn richardson_limit(values: [f64; 3]) -> f64 {
    // assumes an expansion in integer powers of ε
    let r1 = 2.0 * values[1] - values[0];
    let r2 = 2.0 * values[2] - values[1];
    (4.0 * r2 - r1) / 3.0
}

/// The circle `t = t0` with `s` running over `[−π, π)` (or backwards), through the root nearest the unit circle.
pub fn vertical_circle(p: &LaurentPoly, t0: f64, samples: usize, upward: bool) -> Result<BoundaryPath> {
    let s: Vec<f64> = (0..samples)
        .map(|k| {
            let u = -PI + TAU * k as f64 / samples as f64;
            if upward { u } else { -u }
        })
        .collect();
    BoundaryPath::from_angles(p, vec![t0; samples], s, 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn poly(s: &str) -> LaurentPoly {
        LaurentPoly::parse_xyz(s).unwrap()
    }

    #[test]
    fn trivial_masks() {
        let full = deninger_region(&poly("z - 2"), 32).unwrap();
        assert_eq!(full.count(), 32 * 32);
        let empty = deninger_region(&poly("2z - 1"), 32).unwrap();
        assert_eq!(empty.count(), 0);
        assert!(trace_boundary(&poly("z - 2"), 0.05).unwrap().paths.is_empty());
    }

    #[test]
    fn loops_satisfy_invariants() {
        let p = poly("(x+1)*(y+1) + z");
        let r = trace_boundary(&p, 0.02).unwrap();
        assert!(!r.paths.is_empty());
        for path in &r.paths {
            let (m, res) = path.invariant_defect(&p).unwrap();
            assert!(m < 1e-9 && res < 1e-9, "{m} {res}");
            assert!(path.max_step() <= 0.02);
        }
    }

    #[test]
    fn plane_model_of_21a1_curve() {
        let f = maillot_plane_model(&poly("1 + (x+1)*y + (x-1)*z")).unwrap();
        // x(x+1)y^2 + (2x^2+x+2)y + 1 + x
        let want = LaurentPoly::parse_xyz("x*(x+1)*y^2 + (2x^2+x+2)*y + 1 + x").unwrap();
        let pt = [Complex64::new(0.3, 0.7), Complex64::new(-1.1, 0.4)];
        let ratio = f.eval(&pt) / want.eval(&[pt[0], pt[1], Complex64::new(1.0, 0.0)]);
        let pt2 = [Complex64::new(-0.8, 0.2), Complex64::new(0.5, 2.0)];
        let ratio2 = f.eval(&pt2) / want.eval(&[pt2[0], pt2[1], Complex64::new(1.0, 0.0)]);
        assert!((ratio - ratio2).norm() < 1e-12);
    }

    #[test]
    fn winding_of_constant_and_inverse() {
        let p = poly("x^2+1 + (x+1)^2*y + (x-1)^2*z");
        let gamma = vertical_circle(&p, PI / 2.0, 256, true).unwrap();
        let y = RationalExpr::parse("y").unwrap();
        assert_eq!(winding_number(&gamma, &y).unwrap(), 1);
        assert_eq!(winding_number(&gamma, &RationalExpr::parse("1/y").unwrap()).unwrap(), -1);
        assert_eq!(winding_number(&gamma, &RationalExpr::parse("3").unwrap()).unwrap(), 0);
    }

    #[test]
    fn richardson_removes_linear_and_quadratic_terms() {
        let f = |e: f64| 2.0 + 3.0 * e - 5.0 * e * e;
        let v = richardson_limit([f(1e-2), f(5e-3), f(2.5e-3)]);
        assert!((v - 2.0).abs() < 1e-12);
    }
}
