use exact_mahler::elliptic::{find_curve, lprime_minus1};

// PARI/GP lfun(E, -1, 1)
const REFERENCE: [(&str, f64); 12] = [
    ("14a4", -0.207784364443237833),
    ("15a8", -0.241998986739319268),
    ("20a1", -0.474889665718795722),
    ("21a1", -0.499399985855014055),
    ("21a4", -0.499399985855014055),
    ("24a4", -0.702565506265199055),
    ("36a1", -1.64634101457767030),
    ("90b1", -11.7901494682508843),
    ("450c1", 228.605140944166413),
    ("72a1", -6.73105673477165215),
    ("48a1", -3.01382421809360484),
    ("45a2", -2.85053193144101958),
];

#[test]
fn lprime_minus1_matches_reference_values() {
    for (label, expected) in REFERENCE {
        let c = find_curve(label, None).unwrap();
        let t = std::time::Instant::now();
        let v = lprime_minus1(&c).unwrap();
        let n = c.conductor as f64;
        // L(E,3) is known to 1e-8, scaled by N^2/(8 pi^4)
        let tol = 2e-8 * n * n / 779.27;
        eprintln!("{label}: {v} vs {expected} ({:?})", t.elapsed());
        assert!((v - expected).abs() <= tol, "{label}: {v} vs {expected}");
        if c.root_number == Some(1) {
            assert!(v < 0.0);
        }
    }
}
