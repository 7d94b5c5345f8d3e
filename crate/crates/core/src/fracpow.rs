//! Fractional powers `(I−T)^α` and the decay of orbits started in their range.
//!
//! The binomial series `Σ cₙ Tⁿ` with `cₙ = (−1)ⁿ binom(α, n)` is the reference
//! path. For `K ≥ ⌊α⌋` the coefficients past `K` share one sign, and the
//! partial sums satisfy `Σ_{n≤K} cₙ = (−1)ᴷ binom(α−1, K)` while the full sum is
//! `(1−1)^α = 0`, so the tail `Σ_{n>K} |cₙ|` is exactly `|binom(α−1, K)|`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{input, Error, Result};
use crate::geometry::fmt17;
use crate::linalg::{self, c, CMat, CVec, Diagonalization, C64};
use crate::operator::{CyclicProduct, IterationTrace};

/// Hard cap on the number of series terms.
pub const SERIES_CAP: usize = 1_000_000;
/// Eigenvector condition number above which the eigen path is not used.
pub const MAX_EIGEN_CONDITION: f64 = 1e6;

#[derive(Clone, Debug, PartialEq)]
pub struct FracPowerPlan {
    pub alpha: f64,
    /// index of the last retained term
    pub trunc: usize,
    pub coefficients: Vec<f64>,
    /// `Σ_{n>K} |cₙ|`
    pub tail_bound: f64,
}

impl FracPowerPlan {
    /// Smallest truncation with `tail_bound · x_norm ≤ tol`.
    pub fn new(alpha: f64, tol: f64, x_norm: f64) -> Result<Self> {
        if !(alpha >= 0.0) || !alpha.is_finite() {
            return input("alpha must be a finite non-negative number");
        }
        if !(tol > 0.0) {
            return input("tol must be positive");
        }
        let mut coefficients = vec![1.0];
        // |binom(α−1, k)| tracked alongside cₖ
        let mut tail = 1.0f64;
        let start = alpha.floor() as usize;
        let mut k = 0usize;
        loop {
            if k >= start && tail * x_norm * (1.0 + 1e-12) <= tol {
                break;
            }
            if k >= SERIES_CAP {
                return Err(Error::SeriesCap { cap: SERIES_CAP });
            }
            let next = coefficients[k] * (k as f64 - alpha) / (k + 1) as f64;
            coefficients.push(next);
            tail *= (alpha - 1.0 - k as f64).abs() / (k + 1) as f64;
            k += 1;
        }
        Ok(Self {
            alpha,
            trunc: k,
            coefficients,
            tail_bound: tail * (1.0 + 1e-12),
        })
    }

    /// `Σ_{n≤K} cₙ Tⁿ x` with compensated accumulation.
    pub fn apply(&self, t: &CMat, x: &CVec) -> CVec {
        let mut sum = x * c(self.coefficients[0]);
        let mut comp = CVec::zeros(x.len());
        let mut v = x.clone();
        for &cn in &self.coefficients[1..] {
            v = t * &v;
            if cn == 0.0 {
                continue;
            }
            for i in 0..x.len() {
                let term = v[i] * cn - comp[i];
                let s = sum[i] + term;
                comp[i] = (s - sum[i]) - term;
                sum[i] = s;
            }
        }
        sum
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FracMethod {
    Series,
    Eigen,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FracPowerOutcome {
    pub value: CVec,
    pub method: FracMethod,
    pub series_terms: Option<usize>,
    /// `‖series − eigen‖` when both paths ran
    pub cross_check: Option<f64>,
}

/// `T` with a cached diagonalization, for repeated fractional powers.
pub struct FracPower {
    t: CMat,
    diag: Option<Diagonalization>,
}

impl FracPower {
    pub fn new(t: &CMat) -> Result<Self> {
        if t.nrows() != t.ncols() {
            return input("T must be square");
        }
        let norm = linalg::spectral_norm(t);
        if norm > 1.0 + 1e-10 {
            return input(format!("T must be a contraction, got norm {norm}"));
        }
        Ok(Self {
            t: t.clone(),
            diag: linalg::diagonalize(t, MAX_EIGEN_CONDITION),
        })
    }

    pub fn has_eigen_path(&self) -> bool {
        self.diag.is_some()
    }

    pub fn eigen_condition(&self) -> Option<f64> {
        self.diag.as_ref().map(|d| d.condition)
    }

    fn eigen_apply(&self, alpha: f64, x: &CVec) -> Option<CVec> {
        let d = self.diag.as_ref()?;
        Some(d.apply_fn(x, |lambda| {
            let w = c(1.0) - lambda;
            if w.norm() == 0.0 {
                c(if alpha == 0.0 { 1.0 } else { 0.0 })
            } else {
                w.powf(alpha)
            }
        }))
    }

    pub fn apply(&self, alpha: f64, x: &CVec, tol: f64) -> Result<CVec> {
        Ok(self.apply_detailed(alpha, x, tol)?.value)
    }

    /// Series when its truncation fits under the cap, eigen path otherwise;
    /// when both are available they must agree within `10·tol`.
    pub fn apply_detailed(&self, alpha: f64, x: &CVec, tol: f64) -> Result<FracPowerOutcome> {
        if x.len() != self.t.nrows() {
            return Err(Error::DimensionMismatch {
                expected: self.t.nrows(),
                actual: x.len(),
            });
        }
        let plan = FracPowerPlan::new(alpha, tol, x.norm());
        let eigen = self.eigen_apply(alpha, x);
        match (plan, eigen) {
            (Ok(plan), eigen) => {
                let value = plan.apply(&self.t, x);
                let cross_check = eigen.map(|e| (&e - &value).norm());
                if let Some(diff) = cross_check {
                    if diff > 10.0 * tol {
                        return Err(Error::Numerical(format!(
                            "series and eigen paths disagree by {diff:e} (tol {tol:e})"
                        )));
                    }
                }
                Ok(FracPowerOutcome {
                    value,
                    method: FracMethod::Series,
                    series_terms: Some(plan.trunc),
                    cross_check,
                })
            }
            (Err(Error::SeriesCap { .. }), Some(value)) => Ok(FracPowerOutcome {
                value,
                method: FracMethod::Eigen,
                series_terms: None,
                cross_check: None,
            }),
            (Err(e), _) => Err(e),
        }
    }
}

pub fn frac_power_apply(t: &CMat, alpha: f64, x: &CVec, tol: f64) -> Result<CVec> {
    FracPower::new(t)?.apply(alpha, x, tol)
}

/// `x = (I−T)^α y + P_M z`.
#[derive(Clone, Debug, PartialEq)]
pub struct AlphaVector {
    pub alpha: f64,
    pub x: CVec,
    pub y: CVec,
    pub z: CVec,
}

/// Tolerance used for the fractional power inside vector constructions.
pub const ALPHA_VECTOR_TOL: f64 = 1e-12;

/// Build from given `y` and `z`. `(I−T)^α` is applied to `(I−P_M)y`, which
/// it preserves, so `x − P_M z` lies in `M^⊥` up to rounding.
pub fn make_alpha_vector_with(
    cp: &CyclicProduct,
    engine: &FracPower,
    alpha: f64,
    y: CVec,
    z: CVec,
) -> Result<AlphaVector> {
    if !(alpha > 0.0) {
        return input("alpha must be positive");
    }
    let y_perp = &y - cp.pm().apply(&y);
    let x = engine.apply(alpha, &y_perp, ALPHA_VECTOR_TOL)? + cp.pm().apply(&z);
    Ok(AlphaVector { alpha, x, y, z })
}

fn unit_pair(d: usize, seed: u64) -> (CVec, CVec) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let y = linalg::unit_gaussian_vector(d, &mut rng);
    let z = linalg::unit_gaussian_vector(d, &mut rng);
    (y, z)
}

/// `y`, `z` uniform on the unit sphere from a seeded generator.
pub fn make_alpha_vector(cp: &CyclicProduct, alpha: f64, seed: u64) -> Result<AlphaVector> {
    let (y, z) = unit_pair(cp.dim(), seed);
    make_alpha_vector_with(cp, &FracPower::new(cp.t())?, alpha, y, z)
}

/// In finite dimension `Ran(I−T)^α` on `M^⊥` does not depend on `α`, so the
/// largest requested exponent is used.
pub fn super_poly_vector(cp: &CyclicProduct, alphas: &[f64], seed: u64) -> Result<AlphaVector> {
    let alpha = alphas.iter().copied().fold(f64::NAN, f64::max);
    if alphas.is_empty() || !(alpha > 0.0) {
        return input("alphas must be nonempty with a positive maximum");
    }
    make_alpha_vector(cp, alpha, seed)
}

/// Least-squares slope of `log eₙ` against `log n` for `n ∈ [lo, hi]`.
///
/// Returns `−∞` when some error on the window is zero (already converged).
pub fn decay_slope_of(errors: &[f64], window: (usize, usize)) -> Result<f64> {
    let (lo, hi) = window;
    if lo < 1 || hi <= lo {
        return input("window must satisfy 1 ≤ n_lo < n_hi");
    }
    let hi = hi.min(errors.len().saturating_sub(1));
    if hi < lo || hi - lo + 1 < 5 {
        return input("fewer than 5 usable points in the window");
    }
    let pts = &errors[lo..=hi];
    if pts.iter().any(|&e| !(e > 0.0)) {
        return Ok(f64::NEG_INFINITY);
    }
    let m = pts.len() as f64;
    let xs: Vec<f64> = (lo..=hi).map(|n| (n as f64).ln()).collect();
    let ys: Vec<f64> = pts.iter().map(|e| e.ln()).collect();
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    Ok(sxy / sxx)
}

pub fn decay_slope(trace: &IterationTrace, window: (usize, usize)) -> Result<f64> {
    decay_slope_of(&trace.errors, window)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SlopeReport {
    pub alpha: f64,
    pub window: (usize, usize),
    pub slope: f64,
    /// `max nᵅ eₙ` over the window
    pub sup_n_alpha_e_n: f64,
    /// `nᵅ eₙ` non-increasing over the last decade `[hi/10, hi]`
    pub last_decade_non_increasing: bool,
}

impl SlopeReport {
    pub fn new(errors: &[f64], alpha: f64, window: (usize, usize)) -> Result<Self> {
        let slope = decay_slope_of(errors, window)?;
        let hi = window.1.min(errors.len() - 1);
        let scaled = |n: usize| (n as f64).powf(alpha) * errors[n];
        let sup_n_alpha_e_n = (window.0..=hi).map(scaled).fold(0.0, f64::max);
        let start = (hi / 10).max(1);
        let last_decade_non_increasing = (start..hi).all(|n| scaled(n + 1) <= scaled(n) * (1.0 + 1e-12));
        Ok(Self {
            alpha,
            window,
            slope,
            sup_n_alpha_e_n,
            last_decade_non_increasing,
        })
    }

    pub fn passes(&self) -> bool {
        self.slope <= -self.alpha + 0.1 && self.last_decade_non_increasing
    }

    pub fn csv_header() -> &'static str {
        "alpha,window,slope,sup_n_alpha_e_n"
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{}:{},{},{}",
            fmt17(self.alpha),
            self.window.0,
            self.window.1,
            fmt17(self.slope),
            fmt17(self.sup_n_alpha_e_n)
        )
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PartialSumReport {
    pub sup: f64,
    /// increase of the running supremum over `(n_max/10, n_max]`
    pub last_decade_increase: f64,
    pub bounded: bool,
}

/// Threshold on the last-decade increase for the bounded flag.
pub const PARTIAL_SUM_STABLE: f64 = 1e-6;

/// `sup_{n≤n_max} ‖Σ_{k≤n} k^{−(1−α)} Tᵏ x‖`.
pub fn partial_sum_characterization(cp: &CyclicProduct, x: &CVec, alpha: f64, n_max: usize) -> Result<PartialSumReport> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return input("alpha must lie in (0, 1]");
    }
    if n_max < 10 {
        return input("n_max must be at least 10");
    }
    let t = cp.t();
    let mut v = x.clone();
    let mut s = CVec::zeros(x.len());
    let mut sup: f64 = 0.0;
    let mut sup_early = 0.0;
    let cut = n_max / 10;
    for k in 1..=n_max {
        v = t * &v;
        s.axpy(c((k as f64).powf(alpha - 1.0)), &v, C64::new(1.0, 0.0));
        sup = sup.max(s.norm());
        if k == cut {
            sup_early = sup;
        }
    }
    let last_decade_increase = sup - sup_early;
    Ok(PartialSumReport {
        sup,
        last_decade_increase,
        bounded: last_decade_increase < PARTIAL_SUM_STABLE,
    })
}
