//! Browser bindings. Each export has a plain Rust counterpart returning
//! `Result<String, String>`, which is what the native tests exercise.

use exact_mahler::bloch::{builtin_dossier_labels, d_profile, CurveDossier};
use exact_mahler::chains::{deninger_region, detect_singular_boundary, render_svg, trace_boundary};
use exact_mahler::mahler::{leading_coeff_measure, mahler_measure};
use exact_mahler::poly::LaurentPoly;
use exact_mahler::specialfn::d;
use num_complex::Complex64;
use serde_json::json;
use wasm_bindgen::prelude::*;

/// Largest grid the page may request; the region mask is `resolution²` fiber solves.
pub const MAX_RESOLUTION: usize = 400;

fn parse(p: &str) -> Result<LaurentPoly, String> {
    LaurentPoly::parse_xyz(p).map_err(|e| e.to_string())
}

/// `{value, error, leading}` as JSON.
pub fn measure(polynomial: &str, tol: f64) -> Result<String, String> {
    let p = parse(polynomial)?;
    let tol = if tol > 0.0 { tol.max(1e-9) } else { 1e-6 };
    let m = mahler_measure(&p, tol).map_err(|e| e.to_string())?;
    let lead = leading_coeff_measure(&p, tol).map_err(|e| e.to_string())?;
    Ok(json!({ "value": m.value, "error": m.error, "panels": m.panels, "leading": lead.value }).to_string())
}

/// SVG of the region `|z| ≥ 1` with the traced boundary loops drawn on top.
pub fn region(polynomial: &str, resolution: usize, size: usize) -> Result<String, String> {
    let p = parse(polynomial)?;
    let mask = deninger_region(&p, resolution.clamp(8, MAX_RESOLUTION)).map_err(|e| e.to_string())?;
    let traced = trace_boundary(&p, 0.01).map_err(|e| e.to_string())?;
    let flags = detect_singular_boundary(&p, &traced.paths).map_err(|e| e.to_string())?;
    let svg = render_svg(Some(&mask), &traced.paths, size.clamp(100, 1200));
    let singular: Vec<[f64; 2]> = flags.iter().map(|f| [f.x.arg(), f.y.arg()]).collect();
    Ok(json!({ "svg": svg, "loops": traced.paths.len(), "warnings": traced.warnings, "singular": singular }).to_string())
}

/// Residue elements of a shipped dossier with their `D`-values per embedding.
pub fn dossier_residues(label: &str) -> Result<String, String> {
    let dz = CurveDossier::load(label, None).map_err(|e| e.to_string())?;
    let mut rows = Vec::new();
    for pt in &dz.points {
        let u = dz.residue_element(&pt.name).map_err(|e| e.to_string())?;
        let prof = d_profile(&u).map_err(|e| e.to_string())?;
        rows.push(json!({ "point": pt.name, "u": u.to_string(), "d": prof.values, "verdict": prof.verdict.to_string() }));
    }
    let balance = dz.residue_balance().map_err(|e| e.to_string())?;
    Ok(json!({ "curve": dz.label, "polynomial": dz.polynomial.to_string(), "points": rows, "balance": balance }).to_string())
}

#[wasm_bindgen(js_name = mahlerMeasure)]
pub fn mahler_measure_js(polynomial: &str, tol: f64) -> Result<String, JsValue> {
    measure(polynomial, tol).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = regionSvg)]
pub fn region_svg_js(polynomial: &str, resolution: usize, size: usize) -> Result<String, JsValue> {
    region(polynomial, resolution, size).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = residues)]
pub fn residues_js(label: &str) -> Result<String, JsValue> {
    dossier_residues(label).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = dossierLabels)]
pub fn dossier_labels() -> String {
    builtin_dossier_labels().join(",")
}

/// Bloch–Wigner `D(re + i·im)`.
#[wasm_bindgen(js_name = blochWigner)]
pub fn bloch_wigner(re: f64, im: f64) -> f64 {
    d(Complex64::new(re, im))
}
