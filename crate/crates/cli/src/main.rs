use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use exact_mahler::bloch::{builtin_dossier_labels, d_profile, CurveDossier, Verdict};
use exact_mahler::chains::{deninger_region, detect_singular_boundary, render_svg, trace_boundary, write_csv};
use exact_mahler::expr::parse_rational;
use exact_mahler::mahler::{leading_coeff_measure, mahler_measure};
use exact_mahler::poly::LaurentPoly;
use exact_mahler::registry::{
    character, curve_lprime, exit_code, load_identities, verify_all, IdentitySpec, Outcome, Status, VerifyOptions,
};
use exact_mahler::specialfn::dirichlet_lprime_minus1;
use exact_mahler::wedge::{
    cyclotomic_decompose, cyclotomic_parts, decomposition_defect, find_decomposition, DecompositionFile,
};

#[derive(Parser)]
#[command(name = "exact-mahler", version, about = "Mahler measures of exact polynomials and their L-value identities")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Common {
    /// Tolerance: quadrature accuracy, identity check or decomposition defect, per subcommand.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Seed for random sampling.
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,
    /// Output file; JSON for reports, CSV for loops, SVG for plots.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Directory with curves.json, identities.json, decompositions.json and dossiers/.
    #[arg(long, global = true)]
    registry: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Cmd {
    /// m(P) by adaptive quadrature, with m of the leading coefficient in z.
    Mahler { polynomial: String },
    /// L'(E,-1) for a registry curve, or L'(chi,-1) for chi-3 / chi-4.
    Lvalue { label: String },
    /// Boundary loops of the Deninger chain; CSV dump with --out.
    TraceBoundary {
        polynomial: String,
        #[arg(long, default_value_t = 0.01)]
        step: f64,
    },
    /// Decomposition of eta(x,y,z) on V_P, checked by its random-sample defect.
    Decompose {
        polynomial: Option<String>,
        /// Registry key (e.g. 21a1) or a decomposition JSON file, instead of the cyclotomic construction.
        #[arg(long)]
        from: Option<String>,
        #[arg(long, default_value_t = 100)]
        samples: usize,
    },
    /// Residue elements u_p of a curve dossier and the sum over all points.
    Residues {
        /// Dossier label or JSON file.
        dossier: String,
        #[arg(long)]
        point: Option<String>,
    },
    /// Check identities m(P) = a L'(E,-1) + sum b L'(chi,-1).
    VerifyIdentity {
        /// Registry ids (e.g. pure-3); all shipped identities when empty.
        ids: Vec<String>,
        /// Include rows gated as long-running.
        #[arg(long)]
        long_running: bool,
        /// Trace the boundary and report loops and singular points.
        #[arg(long)]
        boundary: bool,
        /// Ad hoc identity: polynomial.
        #[arg(long, requires = "rhs")]
        polynomial: Option<String>,
        /// Ad hoc identity: terms like "21a1:-5/4", "21a1:?" or "chi-3:3".
        #[arg(long = "rhs", num_args = 1..)]
        rhs: Vec<String>,
    },
    /// SVG of the Deninger region and its boundary loops.
    Plot {
        polynomial: String,
        #[arg(long, default_value_t = 256)]
        resolution: usize,
        #[arg(long, default_value_t = 600)]
        size: usize,
    },
}

fn poly(s: &str) -> Result<LaurentPoly> {
    LaurentPoly::parse_xyz(s).with_context(|| format!("parsing {s:?}"))
}

fn emit(out: &Option<PathBuf>, v: &Value) -> Result<()> {
    if let Some(path) = out {
        fs::write(path, serde_json::to_string_pretty(v)? + "\n").with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

fn mahler(c: &Common, p: &str) -> Result<Vec<Outcome>> {
    let q = poly(p)?;
    let tol = c.tol.unwrap_or(1e-7);
    let m = mahler_measure(&q, tol)?;
    println!("m({p}) = {:.12} ± {:.1e}  ({} panels)", m.value, m.error, m.panels);
    let lead = if q.nvars() > 0 { Some(leading_coeff_measure(&q, tol)?) } else { None };
    if let Some(l) = &lead {
        println!("m(leading coefficient) = {:.12} ± {:.1e}", l.value, l.error);
    }
    emit(&c.out, &json!({ "polynomial": p, "measure": m, "leading_measure": lead }))?;
    Ok(vec![Outcome::Pass])
}

fn lvalue(c: &Common, label: &str) -> Result<Vec<Outcome>> {
    let v = match label.strip_prefix("chi-") {
        Some(m) => dirichlet_lprime_minus1(&character(m.parse().context("character modulus")?)?),
        None => curve_lprime(label, c.registry.as_deref())?,
    };
    println!("L'({label}, -1) = {v:.15}");
    emit(&c.out, &json!({ "label": label, "lprime_minus1": v }))?;
    Ok(vec![Outcome::Pass])
}

fn trace(c: &Common, p: &str, step: f64) -> Result<Vec<Outcome>> {
    let q = poly(p)?;
    let traced = trace_boundary(&q, step)?;
    let flags = detect_singular_boundary(&q, &traced.paths)?;
    println!("{} loop(s)", traced.paths.len());
    for (k, path) in traced.paths.iter().enumerate() {
        println!("  loop {k}: {} samples, closed {}, orientation {:+}", path.len(), path.closed, path.orientation_sign);
    }
    for w in &traced.warnings {
        println!("  warning: {w}");
    }
    for f in &flags {
        println!("  singular point of W_P on the boundary: x = {:.8}, y = {:.8} (loop {})", f.x, f.y, f.path);
    }
    if let Some(path) = &c.out {
        write_csv(&traced.paths, fs::File::create(path)?)?;
    }
    let ok = traced.warnings.is_empty() && flags.is_empty();
    Ok(vec![if ok { Outcome::Pass } else { Outcome::Inconclusive }])
}

fn load_decomposition(from: &str, dir: Option<&Path>) -> Result<DecompositionFile> {
    if from.ends_with(".json") {
        Ok(DecompositionFile::from_json(&fs::read_to_string(from)?)?)
    } else {
        Ok(find_decomposition(from, dir)?)
    }
}

fn decompose(c: &Common, p: Option<&str>, from: Option<&str>, samples: usize) -> Result<Vec<Outcome>> {
    let file = match (p, from) {
        (_, Some(f)) => load_decomposition(f, c.registry.as_deref())?,
        (Some(p), None) => {
            let q = poly(p)?;
            let [a, b, cc] = cyclotomic_parts(&q)?;
            let d = cyclotomic_decompose(&a, &b, &cc)?;
            DecompositionFile { polynomial: p.to_string(), terms: d.to_records() }
        }
        (None, None) => bail!("give a polynomial or --from"),
    };
    let q = file.poly()?;
    let d = file.decomposition()?;
    let tol = c.tol.unwrap_or(1e-8);
    let defect = decomposition_defect(&q, &d, samples, c.seed)?;
    println!("P = {}", file.polynomial);
    println!("eta(x,y,z) = {d}");
    let ok = defect <= tol;
    println!("defect {defect:.2e} over {samples} samples (tol {tol:.0e}): {}", if ok { "PASS" } else { "FAIL" });
    emit(&c.out, &serde_json::to_value(&file)?)?;
    Ok(vec![if ok { Outcome::Pass } else { Outcome::Fail }])
}

fn residues(c: &Common, name: &str, point: Option<&str>) -> Result<Vec<Outcome>> {
    let dir = c.registry.as_deref();
    let d = if name.ends_with(".json") {
        CurveDossier::from_json(&fs::read_to_string(name)?, dir)?
    } else {
        if dir.is_none() && !builtin_dossier_labels().contains(&name) {
            bail!("no dossier {name}; shipped: {}", builtin_dossier_labels().join(", "));
        }
        CurveDossier::load(name, dir)?
    };
    let mut outcomes = Vec::new();
    let mut rows = Vec::new();
    println!("{} on {}", d.label, d.polynomial);
    for p in &d.points {
        if point.is_some_and(|q| q != p.name) {
            continue;
        }
        let u = d.residue_element(&p.name)?;
        let prof = d_profile(&u)?;
        let vals: Vec<String> = prof.values.iter().map(|&v| format!("{:+.12}", if v.abs() < 5e-13 { 0.0 } else { v })).collect();
        println!("  u_{} = {u}   D: [{}]  {}", p.name, vals.join(", "), prof.verdict);
        outcomes.push(if prof.verdict == Verdict::Inconclusive { Outcome::Inconclusive } else { Outcome::Pass });
        rows.push(json!({ "point": p.name, "u": u.to_string(), "profile": prof }));
    }
    if point.is_some() && rows.is_empty() {
        bail!("no point {} in {}", point.unwrap(), d.label);
    }
    let balance = d.residue_balance()?;
    let worst = balance.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let tol = c.tol.unwrap_or(1e-8);
    println!("  sum over points of D(u_q): {balance:?}  ({})", if worst <= tol { "PASS" } else { "FAIL" });
    outcomes.push(if worst <= tol { Outcome::Pass } else { Outcome::Fail });
    emit(&c.out, &json!({ "curve": d.label, "residues": rows, "balance": balance }))?;
    Ok(outcomes)
}

fn adhoc_spec(p: &str, rhs: &[String]) -> Result<IdentitySpec> {
    let mut curve = None;
    let mut a = None;
    let mut characters = Vec::new();
    for term in rhs {
        let (basis, coef) = term.split_once(':').with_context(|| format!("{term:?}: expected basis:coefficient"))?;
        let coef = if coef == "?" { None } else { Some(coef.to_string()) };
        match basis.strip_prefix("chi-") {
            Some(m) => characters.push(json!({ "modulus": m.parse::<u64>()?, "b": coef })),
            None => {
                if curve.is_some() {
                    bail!("at most one curve term");
                }
                curve = Some(basis.to_string());
                a = coef;
            }
        }
    }
    let rec = json!({
        "id": "adhoc", "group": "adhoc", "row": 0, "polynomial": p, "curve": curve, "a": a,
        "characters": characters, "status": "conjectural", "tol": 1e-3,
    });
    if let Some(q) = &a {
        parse_rational(q)?;
    }
    Ok(IdentitySpec::from_record(&serde_json::from_value(rec)?)?)
}

fn verify(c: &Common, ids: &[String], long: bool, boundary: bool, p: Option<&str>, rhs: &[String]) -> Result<Vec<Outcome>> {
    let mut specs = match p {
        Some(p) => vec![adhoc_spec(p, rhs)?],
        None => {
            let all = load_identities(c.registry.as_deref())?;
            if ids.is_empty() {
                all.into_iter().filter(|s| long || !s.long_running).collect()
            } else {
                ids.iter()
                    .map(|id| all.iter().find(|s| &s.id == id).cloned().with_context(|| format!("no identity {id}")))
                    .collect::<Result<Vec<_>>>()?
            }
        }
    };
    if let Some(t) = c.tol {
        for s in &mut specs {
            s.tol = t;
        }
    }
    let opts = VerifyOptions { registry: c.registry.clone(), boundary, ..Default::default() };
    let reports = verify_all(&specs, &opts).into_iter().collect::<exact_mahler::Result<Vec<_>>>()?;
    let mut stdout = std::io::stdout().lock();
    for (s, r) in specs.iter().zip(&reports) {
        writeln!(stdout, "{r}")?;
        if s.status != Status::Proven && !s.note.is_empty() {
            writeln!(stdout, "  note: {}", s.note)?;
        }
    }
    emit(&c.out, &serde_json::to_value(&reports)?)?;
    Ok(reports.iter().map(|r| r.verdict).collect())
}

fn plot(c: &Common, p: &str, resolution: usize, size: usize) -> Result<Vec<Outcome>> {
    let q = poly(p)?;
    let mask = deninger_region(&q, resolution)?;
    let traced = trace_boundary(&q, 0.01)?;
    let svg = render_svg(Some(&mask), &traced.paths, size);
    match &c.out {
        Some(path) => {
            fs::write(path, svg)?;
            println!("{} loop(s) written to {}", traced.paths.len(), path.display());
        }
        None => print!("{svg}"),
    }
    Ok(vec![Outcome::Pass])
}

fn run(cli: &Cli) -> Result<Vec<Outcome>> {
    let c = &cli.common;
    match &cli.cmd {
        Cmd::Mahler { polynomial } => mahler(c, polynomial),
        Cmd::Lvalue { label } => lvalue(c, label),
        Cmd::TraceBoundary { polynomial, step } => trace(c, polynomial, *step),
        Cmd::Decompose { polynomial, from, samples } => decompose(c, polynomial.as_deref(), from.as_deref(), *samples),
        Cmd::Residues { dossier, point } => residues(c, dossier, point.as_deref()),
        Cmd::VerifyIdentity { ids, long_running, boundary, polynomial, rhs } => {
            verify(c, ids, *long_running, *boundary, polynomial.as_deref(), rhs)
        }
        Cmd::Plot { polynomial, resolution, size } => plot(c, polynomial, *resolution, *size),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(outcomes) => ExitCode::from(exit_code(&outcomes) as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
