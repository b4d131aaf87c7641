use exact_mahler::bloch::*;
use exact_mahler::expr::RationalExpr;
use exact_mahler::wedge::tau_pull;
use exact_mahler::Error;
use num_rational::BigRational;
use num_traits::One;

// Cl₂(π/3) = D(e^{iπ/3}), from tables of the Clausen function
const CL2_PI_3: f64 = 1.014_941_606_409_653_6;

fn dossiers() -> Vec<CurveDossier> {
    builtin_dossier_labels().into_iter().map(|l| CurveDossier::load(l, None).unwrap()).collect()
}

#[test]
fn divisors_have_degree_zero() {
    for d in dossiers() {
        for t in &d.divisors {
            let deg: i64 = t.entries.iter().map(|&(p, v)| v as i64 * d.degree(p) as i64).sum();
            assert_eq!(deg, 0, "{} div({})", d.label, t.function);
        }
    }
}

/// Orders of growth along the curve against the transcribed divisor tables.
#[test]
fn divisor_tables_match_numeric_valuations() {
    let mut worst: f64 = 0.0;
    for d in dossiers() {
        for t in &d.divisors {
            for (pi, p) in d.points.iter().enumerate() {
                for row in 0..p.rows.len() {
                    let nv = d.numeric_valuation(&t.expr, pi, row);
                    let dev = (nv - t.valuation(pi) as f64).abs();
                    assert!(dev < 0.05, "{}: div({}) at {} row {row}: {nv}", d.label, t.function, p.name);
                    worst = worst.max(dev);
                }
            }
        }
    }
    println!("worst valuation deviation {worst:.2e}");
}

/// The structural lookup used by the residues, checked against numeric orders.
#[test]
fn decomposition_valuations_match_numeric() {
    for d in dossiers() {
        let both = [d.decomposition.clone(), tau_pull(&d.decomposition)];
        for t in both.iter().flat_map(|x| x.terms.iter()) {
            for (pi, p) in d.points.iter().enumerate() {
                let v = d.valuation(&t.g, pi).unwrap();
                let nv = d.numeric_valuation(&t.g, pi, 0);
                assert!((nv - v as f64).abs() < 0.05, "{}: v_{}({}) = {v}, numeric {nv}", d.label, p.name, t.g);
            }
        }
    }
}

#[test]
fn missing_valuation_is_an_error() {
    let d = CurveDossier::load("21a1", None).unwrap();
    let g = RationalExpr::parse("x+y+3").unwrap();
    assert!(matches!(d.valuation(&g, 0), Err(Error::MissingValuation { .. })));
}

#[test]
fn u_b_on_21a1_is_two() {
    let d = CurveDossier::load("21a1", None).unwrap();
    let u = residue_element(&d, "B").unwrap();
    assert_eq!(u.len(), 1, "{u}");
    let (c, a) = &u.terms[0];
    assert!(c.is_one());
    match a {
        Argument::Algebraic { point, .. } => assert_eq!(point.as_rational(), Some(BigRational::from_integer(2.into()))),
        _ => panic!("{a}"),
    }
    let p = d_profile(&u).unwrap();
    assert_eq!(p.verdict, Verdict::Inconclusive);
    assert!(p.real_support);
}

#[test]
fn u_p3_on_48a1_vanishes() {
    let d = CurveDossier::load("48a1", None).unwrap();
    let u = residue_element(&d, "P3").unwrap();
    assert!(u.is_empty(), "{u}");
    assert_eq!(d_profile(&u).unwrap().verdict, Verdict::Trivial);
    for name in ["A", "B", "A+B"] {
        assert!(residue_element(&d, name).unwrap().is_empty());
    }
}

/// The divisor table gives v_A(g) = 2 for both terms through A, so u_A = 2{−1} + 2{1/α} = −2{α}.
#[test]
fn u_a_on_45a2_is_a_multiple_of_alpha() {
    let d = CurveDossier::load("45a2", None).unwrap();
    let u = residue_element(&d, "A").unwrap();
    assert_eq!(u.len(), 1, "{u}");
    let (c, a) = &u.terms[0];
    assert_eq!(*c, BigRational::from_integer((-2).into()));
    match a {
        Argument::Algebraic { point, .. } => assert_eq!(point.minpoly, vec![1, -1, 1]),
        _ => panic!("{a}"),
    }
    let p = d_profile(&u).unwrap();
    assert_eq!(p.verdict, Verdict::Nontrivial);
    assert!((p.values[0] + 2.0 * CL2_PI_3).abs() < 1e-12, "{:?}", p.values);
    assert!((p.values[1] - 2.0 * CL2_PI_3).abs() < 1e-12);
}

#[test]
fn residues_sum_to_zero() {
    for d in dossiers() {
        let b = d.residue_balance().unwrap();
        assert!(b.iter().all(|v| v.abs() <= 1e-8), "{}: {b:?}", d.label);
    }
}

#[test]
fn residues_are_normalized_and_conjugation_symmetric() {
    for d in dossiers() {
        for p in &d.points {
            let u = d.residue_element(&p.name).unwrap();
            assert_eq!(normalize(&u), u);
            let prof = d_profile(&u).unwrap();
            // rows are listed as conjugate pairs over a quadratic base
            if d.base.len() == 2 && p.rows.len() == 2 {
                assert!((prof.values[0] + prof.values[1]).abs() < 1e-12, "{}: {:?}", p.name, prof.values);
            }
        }
    }
}
