//! WebAssembly bindings for the browser demo in `www/`.
//!
//! Each export returns a JSON string. The `*_json` functions carry the logic
//! and are plain Rust so they can be tested natively.

use altproj::error::Error;
use altproj::geometry::{EstimateOptions, GeometryReport};
use altproj::linalg;
use altproj::models;
use altproj::operator::{self, build_cyclic};
use altproj::spectral::{self, OmegaRegion};
use serde::Serialize;
use wasm_bindgen::prelude::*;

#[derive(Serialize)]
pub struct LinesView {
    pub c: f64,
    pub ell2: f64,
    pub iota2: f64,
    pub theta0: f64,
    pub rate_base: f64,
    /// `‖Tⁿ − P_M‖` for `n = 0..=n_max`, measured
    pub norms: Vec<f64>,
    /// `cos^{2n−1}θ`
    pub law: Vec<f64>,
    pub bound_c: Vec<f64>,
}

/// Two lines at angle `theta`: geometry and the exact error law.
pub fn two_lines_json(theta: f64, n_max: usize) -> Result<String, String> {
    let (a, b) = models::two_lines(theta).map_err(err)?;
    let fam = [a, b];
    let rep = GeometryReport::compute(&fam, EstimateOptions::default()).map_err(err)?;
    let cp = build_cyclic(&fam).map_err(err)?;
    let norms: Vec<f64> = (0..=n_max).map(|n| operator::operator_error_norm(&cp, n)).collect();
    let law = (0..=n_max)
        .map(|n| if n == 0 { 1.0 } else { theta.cos().powi(2 * n as i32 - 1) })
        .collect();
    let bound_c = (0..=n_max).map(|n| operator::rate_bound(rep.c, 2, n)).collect();
    to_json(&LinesView {
        c: rep.c,
        ell2: rep.ell2,
        iota2: rep.iota2,
        theta0: rep.theta0,
        rate_base: rep.rate_base,
        norms,
        law,
        bound_c,
    })
}

#[derive(Serialize)]
pub struct TraceView {
    pub n: usize,
    pub dims: Vec<usize>,
    pub c: f64,
    pub iota2: f64,
    pub errors: Vec<f64>,
    pub bound_c: Vec<f64>,
    pub bound_iota2: Vec<f64>,
}

fn parse_dims(dims: &str) -> Result<Vec<usize>, String> {
    dims.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<usize>().map_err(|_| format!("bad subspace dimension `{s}`")))
        .collect()
}

/// Random subspaces of `ℝ^d` with the given dimensions; error trace from a seeded start.
pub fn random_trace_json(d: usize, dims: &str, seed: u32, n_max: usize) -> Result<String, String> {
    let dims = parse_dims(dims)?;
    let fam = models::random_instance(d, &dims, u64::from(seed)).map_err(err)?;
    let cp = build_cyclic(&fam).map_err(err)?;
    let x = {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(u64::from(seed) ^ 0x5eed);
        linalg::unit_gaussian_vector(d, &mut rng)
    };
    let tr = operator::iterate(&cp, &x, n_max).map_err(err)?;
    to_json(&TraceView {
        n: cp.n(),
        dims,
        c: cp.friedrichs_number(),
        iota2: cp.iota2(),
        errors: tr.errors,
        bound_c: tr.bound_c,
        bound_iota2: tr.bound_iota2,
    })
}

#[derive(Serialize)]
pub struct RangeView {
    pub n: usize,
    pub c: f64,
    pub theta0: f64,
    pub theta_n: f64,
    /// support points of the numerical range, one per sampled direction
    pub boundary: Vec<[f64; 2]>,
    pub eigenvalues: Vec<[f64; 2]>,
    pub violations: usize,
    pub passed: bool,
}

/// Numerical range of `T` for a random instance, checked against `Ω_N ∩ S_θ₀`.
pub fn numerical_range_json(d: usize, dims: &str, seed: u32, angles: usize) -> Result<String, String> {
    let dims = parse_dims(dims)?;
    let fam = models::random_instance(d, &dims, u64::from(seed)).map_err(err)?;
    let cp = build_cyclic(&fam).map_err(err)?;
    let c = cp.friedrichs_number();
    let rep = spectral::containment_check(cp.t(), c, cp.n(), angles, 1e-7).map_err(err)?;
    let eigenvalues = cp
        .t()
        .clone()
        .schur()
        .eigenvalues()
        .map(|ev| ev.iter().map(|z| [z.re, z.im]).collect())
        .unwrap_or_default();
    to_json(&RangeView {
        n: cp.n(),
        c,
        theta0: spectral::theta0(c, cp.n()),
        theta_n: OmegaRegion::new(cp.n()).theta_n,
        boundary: rep.points.iter().map(|p| [p.z.re, p.z.im]).collect(),
        eigenvalues,
        violations: rep.violations().len(),
        passed: rep.passed(),
    })
}

fn err(e: Error) -> String {
    e.to_string()
}

fn to_json<T: Serialize>(v: &T) -> Result<String, String> {
    serde_json::to_string(v).map_err(|e| e.to_string())
}

/// `‖Tⁿ − P_M‖ = cos^{2n−1}θ` for two lines.
#[wasm_bindgen]
pub fn two_lines(theta: f64, n_max: usize) -> Result<String, JsError> {
    two_lines_json(theta, n_max).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn random_trace(d: usize, dims: &str, seed: u32, n_max: usize) -> Result<String, JsError> {
    random_trace_json(d, dims, seed, n_max).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn numerical_range(d: usize, dims: &str, seed: u32, angles: usize) -> Result<String, JsError> {
    numerical_range_json(d, dims, seed, angles).map_err(|e| JsError::new(&e))
}
