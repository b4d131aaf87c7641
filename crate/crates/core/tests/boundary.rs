use std::f64::consts::PI;

use exact_mahler::chains::{detect_singular_boundary, maillot_plane_model, trace_boundary, vertical_circle, winding_number};
use exact_mahler::expr::RationalExpr;
use exact_mahler::forms::mahler_via_boundary;
use exact_mahler::mahler::mahler_measure;
use exact_mahler::poly::LaurentPoly;
use exact_mahler::wedge::{cyclotomic_decompose, cyclotomic_parts, lambda};

fn two_way(p: &str) -> (f64, f64, usize) {
    let p = LaurentPoly::parse_xyz(p).unwrap();
    let [a, b, c] = cyclotomic_parts(&p).unwrap();
    let lam = lambda(&cyclotomic_decompose(&a, &b, &c).unwrap());
    let traced = trace_boundary(&p, 0.01).unwrap();
    assert!(traced.warnings.is_empty(), "{:?}", traced.warnings);
    let via = mahler_via_boundary(&p, &lam, &traced.paths, 1e-9).unwrap();
    let direct = mahler_measure(&p, 1e-7).unwrap();
    (via.value, direct.value, traced.paths.len())
}

#[test]
fn boundary_formula_21a1() {
    let (via, direct, loops) = two_way("1 + (x+1)*y + (x-1)*z");
    eprintln!("{via} {direct} {loops}");
    assert_eq!(loops, 2);
    assert!((via - direct).abs() < 1e-3);
}

#[test]
fn boundary_formula_15a8() {
    let (via, direct, loops) = two_way("(x+1)*(y+1) + z");
    eprintln!("{via} {direct} {loops}");
    assert!((via - direct).abs() < 1e-3);
}

fn singular_flags(p: &str) -> Vec<(f64, f64)> {
    let p = LaurentPoly::parse_xyz(p).unwrap();
    let traced = trace_boundary(&p, 0.01).unwrap();
    detect_singular_boundary(&p, &traced.paths)
        .unwrap()
        .iter()
        .map(|f| (f.x.arg(), f.y.arg()))
        .collect()
}

fn near(a: (f64, f64), b: (f64, f64)) -> bool {
    let d = |u: f64, v: f64| (u - v).sin().abs() + (1.0 - (u - v).cos());
    d(a.0, b.0) + d(a.1, b.1) < 1e-4
}

#[test]
fn boundary_through_singular_point() {
    for p in ["(x+1)*(y+1) + (x-1)^2*z", "x^2+x+1 + (x^2+x+1)*y + (x-1)^2*z"] {
        let flags = singular_flags(p);
        assert!(flags.iter().any(|&f| near(f, (0.0, PI))), "{p}: {flags:?}");
    }
    assert!(singular_flags("(x+1)*(y+1) + z").is_empty());
    assert!(singular_flags("1 + (x+1)*y + (x-1)*z").is_empty());
}

#[test]
fn singular_flags_lie_on_the_plane_model() {
    let p = LaurentPoly::parse_xyz("(x+1)*(y+1) + (x-1)^2*z").unwrap();
    let f = maillot_plane_model(&p).unwrap();
    let traced = trace_boundary(&p, 0.01).unwrap();
    for fl in detect_singular_boundary(&p, &traced.paths).unwrap() {
        for q in [&f, &f.derivative(0), &f.derivative(1)] {
            assert!(q.eval(&[fl.x, fl.y]).norm() < 1e-6);
        }
    }
}

#[test]
fn gamma_winds_once_around_y() {
    let p = LaurentPoly::parse_xyz("(x+1)*(y+1) + z").unwrap();
    let gamma = vertical_circle(&p, PI / 2.0, 512, true).unwrap();
    assert_eq!(winding_number(&gamma, &RationalExpr::y()).unwrap(), 1);
    assert_eq!(winding_number(&gamma, &RationalExpr::parse("1/y").unwrap()).unwrap(), -1);
}
