//! The cyclic product `T = P_N ⋯ P₁`, the alternating-projection iteration,
//! and the convergence statements that can be checked along an orbit.

use std::sync::OnceLock;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{input, Error, Result};
use crate::geometry::{self, fmt17};
use crate::linalg::{self, c, CMat, CVec};
use crate::subspace::{self, Projector, Subspace, DEFAULT_EIG_TOL};

#[derive(Clone, Debug)]
pub struct CyclicProduct {
    subspaces: Vec<Subspace>,
    factors: Vec<Projector>,
    t: CMat,
    intersection: Subspace,
    pm: Projector,
    friedrichs: OnceLock<f64>,
    iota2: OnceLock<f64>,
}

/// Assemble `T = P_N ⋯ P₁` (P₁ applied first) together with `P_M`.
pub fn build_cyclic(subspaces: &[Subspace]) -> Result<CyclicProduct> {
    build_cyclic_with_tol(subspaces, DEFAULT_EIG_TOL)
}

pub fn build_cyclic_with_tol(subspaces: &[Subspace], eig_tol: f64) -> Result<CyclicProduct> {
    if subspaces.len() < 2 {
        return input("a cyclic product needs at least two subspaces");
    }
    let intersection = subspace::intersection(subspaces, eig_tol)?;
    let d = intersection.dim();
    let factors: Vec<Projector> = subspaces.iter().map(Subspace::projector).collect();
    let mut t = linalg::identity(d);
    for p in &factors {
        t = p.matrix() * t;
    }
    Ok(CyclicProduct {
        subspaces: subspaces.to_vec(),
        factors,
        t,
        pm: intersection.projector(),
        intersection,
        friedrichs: OnceLock::new(),
        iota2: OnceLock::new(),
    })
}

impl CyclicProduct {
    pub fn n(&self) -> usize {
        self.factors.len()
    }

    pub fn dim(&self) -> usize {
        self.t.nrows()
    }

    pub fn t(&self) -> &CMat {
        &self.t
    }

    pub fn factors(&self) -> &[Projector] {
        &self.factors
    }

    pub fn subspaces(&self) -> &[Subspace] {
        &self.subspaces
    }

    pub fn intersection(&self) -> &Subspace {
        &self.intersection
    }

    pub fn pm(&self) -> &Projector {
        &self.pm
    }

    /// One sweep `x ↦ P_N ⋯ P₁ x`, applying the factors in order.
    pub fn sweep(&self, x: &CVec) -> CVec {
        self.factors.iter().fold(x.clone(), |acc, p| p.apply(&acc))
    }

    pub fn friedrichs_number(&self) -> f64 {
        *self.friedrichs.get_or_init(|| {
            geometry::friedrichs_number(&self.subspaces, &self.intersection)
                .expect("intersection is contained in every factor")
        })
    }

    pub fn iota2(&self) -> f64 {
        *self.iota2.get_or_init(|| {
            geometry::iota2(&self.subspaces, &self.intersection)
                .expect("intersection is contained in every factor")
        })
    }

    /// `Tⁿ` by repeated multiplication.
    pub fn power(&self, n: usize) -> CMat {
        let mut p = linalg::identity(self.dim());
        for _ in 0..n {
            p = &self.t * p;
        }
        p
    }

    /// Check the structural invariants: `T P_M = P_M T = P_M`, `‖T‖ ≤ 1`, `Fix(T) ⊇ M`.
    pub fn validate(&self) -> Result<()> {
        let pm = self.pm.matrix();
        let left = linalg::max_abs_entry(&(&self.t * pm - pm));
        let right = linalg::max_abs_entry(&(pm * &self.t - pm));
        if left.max(right) > 1e-10 {
            return Err(Error::Numerical(format!(
                "T and P_M do not commute to P_M ({:.3e})",
                left.max(right)
            )));
        }
        let norm = linalg::spectral_norm(&self.t);
        if norm > 1.0 + 1e-10 {
            return Err(Error::Numerical(format!("‖T‖ = {norm} exceeds 1")));
        }
        for j in 0..self.intersection.rank() {
            let v: CVec = self.intersection.basis().column(j).into_owned();
            let r = (&self.t * &v - &v).norm();
            if r > 1e-9 {
                return Err(Error::Numerical(format!("intersection vector moved by T ({r:.3e})")));
            }
        }
        Ok(())
    }
}

/// `(1 − 3(N−1)(1−c)/N³)^{n/2}`.
pub fn rate_bound(c: f64, n_sub: usize, n: usize) -> f64 {
    geometry::rate_base(c, n_sub).powi(n as i32)
}

/// `(1 − 3ι₂²/N³)^{n/2}`, base clamped to `[0, 1]`.
pub fn iota2_rate_bound(iota2: f64, n_sub: usize, n: usize) -> f64 {
    let base = (1.0 - 3.0 * iota2 * iota2 / (n_sub as f64).powi(3)).clamp(0.0, 1.0);
    base.sqrt().powi(n as i32)
}

#[derive(Clone, Debug, PartialEq)]
pub struct IterationTrace {
    /// `e_n = ‖x_n − P_M x‖` for `n = 0..=n_max`
    pub errors: Vec<f64>,
    /// `rate_bound(c, N, n) · e₀`
    pub bound_c: Vec<f64>,
    /// `iota2_rate_bound(ι₂, N, n) · e₀`
    pub bound_iota2: Vec<f64>,
    pub x0_norm: f64,
}

impl IterationTrace {
    pub fn n_max(&self) -> usize {
        self.errors.len().saturating_sub(1)
    }

    /// Largest `e_{n+1} − e_n`; non-positive up to rounding for every trace.
    pub fn max_increase(&self) -> f64 {
        self.errors
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,error,bound_c,bound_iota2\n");
        for (n, e) in self.errors.iter().enumerate() {
            out.push_str(&format!(
                "{n},{},{},{}\n",
                fmt17(*e),
                fmt17(self.bound_c[n]),
                fmt17(self.bound_iota2[n])
            ));
        }
        out
    }
}

/// Errors of `x_{n+1} = P_N ⋯ P₁ x_n` only, without the geometric bounds.
pub fn iterate_errors(cp: &CyclicProduct, x: &CVec, n_max: usize) -> Vec<f64> {
    let target = cp.pm.apply(x);
    let mut xn = x.clone();
    let mut errors = Vec::with_capacity(n_max + 1);
    errors.push((&xn - &target).norm());
    for _ in 0..n_max {
        xn = cp.sweep(&xn);
        errors.push((&xn - &target).norm());
    }
    errors
}

/// Run the iteration and attach the Friedrichs-number and ι₂ bounds.
pub fn iterate(cp: &CyclicProduct, x: &CVec, n_max: usize) -> Result<IterationTrace> {
    if n_max < 1 {
        return input("n_max must be at least 1");
    }
    if x.len() != cp.dim() {
        return Err(Error::DimensionMismatch {
            expected: cp.dim(),
            actual: x.len(),
        });
    }
    let errors = iterate_errors(cp, x, n_max);
    let e0 = errors[0];
    let (c, iota2, n_sub) = (cp.friedrichs_number(), cp.iota2(), cp.n());
    Ok(IterationTrace {
        bound_c: (0..=n_max).map(|n| rate_bound(c, n_sub, n) * e0).collect(),
        bound_iota2: (0..=n_max).map(|n| iota2_rate_bound(iota2, n_sub, n) * e0).collect(),
        errors,
        x0_norm: e0,
    })
}

/// `‖Tⁿ − P_M‖` in the spectral norm.
pub fn operator_error_norm(cp: &CyclicProduct, n: usize) -> f64 {
    linalg::spectral_norm(&(cp.power(n) - cp.pm.matrix()))
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepDiagnostic {
    /// `‖u_{k−1} − u_k‖²` for `k = 1..=N`
    pub steps: Vec<f64>,
    /// `‖x − P_M x‖² − ‖Tx − P_M x‖²`
    pub budget: f64,
}

impl SweepDiagnostic {
    pub fn holds(&self, tol: f64) -> bool {
        self.steps.iter().all(|&s| s <= self.budget + tol)
    }
}

/// Per-factor step lengths of one sweep against the one-sweep error decrease.
pub fn sweep_diagnostic(cp: &CyclicProduct, x: &CVec) -> SweepDiagnostic {
    let target = cp.pm.apply(x);
    let mut partial = x.clone();
    let mut prev = x - &target;
    let first = prev.norm_squared();
    let mut steps = Vec::with_capacity(cp.n());
    for p in &cp.factors {
        partial = p.apply(&partial);
        let u = &partial - &target;
        steps.push((&prev - &u).norm_squared());
        prev = u;
    }
    SweepDiagnostic {
        steps,
        budget: first - prev.norm_squared(),
    }
}

const TAIL_SAFETY: f64 = 10.0;
const TAIL_CAP: usize = 100_000;
const TAIL_WINDOW: usize = 8;
const SIGN_FLIP_TRIALS: usize = 10;

#[derive(Clone, Debug, PartialEq)]
pub struct UnconditionalSumReport {
    /// number of retained terms `K`
    pub terms: usize,
    /// safety-factored estimate of `Σ_{n≥K} ‖y_n‖`
    pub tail_estimate: f64,
    /// `‖Σ_{n<K} y_n − (x − T^K x)‖` in natural order
    pub telescoping_error: f64,
    /// largest `‖Σ y_{π(k)} − (x − P_M x)‖` over the sampled permutations
    pub max_permutation_error: f64,
    /// largest `‖Σ a_k y_k‖ / ‖x‖` over the sampled ±1 sequences
    pub sign_flip_constant: f64,
    /// `Σ ‖y_k‖ / ‖x‖`, an upper bound for every sign pattern
    pub absolute_sum_ratio: f64,
    pub trunc_tol: f64,
}

impl UnconditionalSumReport {
    pub fn passed(&self) -> bool {
        self.max_permutation_error <= 2.0 * self.trunc_tol
            && self.sign_flip_constant <= self.absolute_sum_ratio + 1e-12
    }
}

/// Truncate `Σ Tⁿ(I−T)x`, then re-sum it under seeded permutations and sign flips.
pub fn unconditional_sum_test(
    cp: &CyclicProduct,
    x: &CVec,
    num_perms: usize,
    trunc_tol: f64,
    seed: u64,
) -> Result<UnconditionalSumReport> {
    if num_perms == 0 {
        return input("num_perms must be at least 1");
    }
    if !(trunc_tol > 0.0) {
        return input("trunc_tol must be positive");
    }
    let mut terms: Vec<CVec> = Vec::new();
    let mut norms: Vec<f64> = Vec::new();
    let mut xn = x.clone();
    let tail_estimate = loop {
        let next = cp.sweep(&xn);
        let y = &xn - &next;
        let ny = y.norm();
        terms.push(y);
        norms.push(ny);
        xn = next;
        // a term at roundoff level means x already sits in M (up to rounding)
        if ny <= 64.0 * f64::EPSILON * x.norm() {
            break 0.0;
        }
        let k = norms.len();
        if k >= TAIL_WINDOW {
            let ratio = norms[k - TAIL_WINDOW..]
                .windows(2)
                .map(|w| if w[0] > 0.0 { w[1] / w[0] } else { 0.0 })
                .fold(0.0, f64::max);
            if ratio < 1.0 {
                let tail = TAIL_SAFETY * ny * ratio / (1.0 - ratio);
                if tail < trunc_tol {
                    break tail;
                }
            }
        }
        if k >= TAIL_CAP {
            return Err(Error::TailNotConverged { tail: ny, terms: k });
        }
    };
    let k = terms.len();
    let d = x.len();
    let target = x - cp.pm.apply(x);

    let mut natural = CVec::zeros(d);
    for y in &terms {
        natural += y;
    }
    let telescoping_error = (&natural - (x - &xn)).norm();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..k).collect();
    let mut max_permutation_error: f64 = 0.0;
    for _ in 0..num_perms {
        order.shuffle(&mut rng);
        let mut s = CVec::zeros(d);
        for &i in &order {
            s += &terms[i];
        }
        max_permutation_error = max_permutation_error.max((s - &target).norm());
    }

    let xnorm = x.norm();
    let scale = if xnorm > 0.0 { 1.0 / xnorm } else { 0.0 };
    let mut sign_flip_constant: f64 = 0.0;
    for _ in 0..SIGN_FLIP_TRIALS {
        let mut s = CVec::zeros(d);
        for y in &terms {
            if rng.random::<bool>() {
                s += y;
            } else {
                s -= y;
            }
        }
        sign_flip_constant = sign_flip_constant.max(s.norm() * scale);
    }

    Ok(UnconditionalSumReport {
        terms: k,
        tail_estimate,
        telescoping_error,
        max_permutation_error,
        sign_flip_constant,
        absolute_sum_ratio: norms.iter().sum::<f64>() * scale,
        trunc_tol,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct WeakCauchyReport {
    pub sum: f64,
    /// partial sums moved by at most 1e-8 over the last tenth of the horizon
    pub converged: bool,
}

/// `Σ_{n ≤ n_max} |⟨Tⁿ(I−T)x, w⟩|`.
pub fn weak_cauchy_sum(cp: &CyclicProduct, x: &CVec, w: &CVec, n_max: usize) -> WeakCauchyReport {
    let mut xn = x.clone();
    let mut partial = Vec::with_capacity(n_max + 1);
    let mut sum = 0.0;
    for _ in 0..=n_max {
        let next = cp.sweep(&xn);
        sum += linalg::inner(w, &(&xn - &next)).norm();
        partial.push(sum);
        xn = next;
    }
    let window = (n_max / 10).max(1).min(n_max);
    let converged = sum - partial[n_max - window] <= 1e-8;
    WeakCauchyReport { sum, converged }
}

/// `(1/(n+1)) Σ_{k≤n} T^k x`.
pub fn cesaro_average(cp: &CyclicProduct, x: &CVec, n: usize) -> CVec {
    let mut acc = x.clone();
    let mut xk = x.clone();
    for _ in 0..n {
        xk = cp.sweep(&xk);
        acc += &xk;
    }
    acc / c((n + 1) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::cvec;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_3};

    fn lines(theta: f64) -> CyclicProduct {
        let a = Subspace::span_real(2, &[vec![1.0, 0.0]]).unwrap();
        let b = Subspace::span_real(2, &[vec![theta.cos(), theta.sin()]]).unwrap();
        build_cyclic(&[a, b]).unwrap()
    }

    #[test]
    fn identical_subspaces_give_projector() {
        let s = Subspace::span_real(3, &[vec![1.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]]).unwrap();
        let cp = build_cyclic(&[s.clone(), s.clone()]).unwrap();
        assert!(linalg::max_abs_entry(&(cp.t() - s.projector().matrix())) < 1e-14);
        assert!(linalg::max_abs_entry(&(cp.pm().matrix() - s.projector().matrix())) < 1e-10);
        let trace = iterate(&cp, &cvec(&[0.3, -1.0, 2.0]), 5).unwrap();
        assert!(trace.errors[1..].iter().all(|&e| e < 1e-10));
        cp.validate().unwrap();
    }

    #[test]
    fn orthogonal_lines_annihilate() {
        let cp = lines(FRAC_PI_2);
        assert!(linalg::max_abs_entry(cp.t()) < 1e-15);
        assert!(cp.intersection().is_zero());
        assert!(operator_error_norm(&cp, 1) < 1e-15);
        assert!((operator_error_norm(&cp, 0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn lines_at_sixty_degrees() {
        let cp = lines(FRAC_PI_3);
        // SVD of the 2×2 product: T = cos θ · u e₁ᵀ has norm cos θ
        assert!((linalg::spectral_norm(cp.t()) - 0.5).abs() < 1e-14);
        for n in 1..=20 {
            let expected = 0.5f64.powi(2 * n as i32 - 1);
            assert!((operator_error_norm(&cp, n) - expected).abs() < 1e-10);
        }
        let trace = iterate(&cp, &cvec(&[1.0, 0.0]), 20).unwrap();
        for (n, e) in trace.errors.iter().enumerate().skip(1) {
            assert!(*e <= 0.5f64.powi(2 * n as i32 - 1) + 1e-15);
            assert!(*e <= trace.bound_c[n] + 1e-9);
            assert!(*e <= trace.bound_iota2[n] + 1e-9);
        }
    }

    #[test]
    fn fixed_points_do_not_move() {
        let a = Subspace::span_real(3, &[vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]]).unwrap();
        let b = Subspace::span_real(3, &[vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 1.0]]).unwrap();
        let cp = build_cyclic(&[a, b]).unwrap();
        let x = cvec(&[2.0, 0.0, 0.0]);
        assert!(iterate(&cp, &x, 10).unwrap().errors.iter().all(|&e| e < 1e-12));
        assert!(sweep_diagnostic(&cp, &x).steps.iter().all(|&s| s < 1e-24));
        let avg = cesaro_average(&cp, &x, 7);
        assert!((avg - &x).norm() < 1e-12);
    }

    #[test]
    fn rate_bound_examples() {
        assert_eq!(rate_bound(1.0, 3, 17), 1.0);
        assert!((rate_bound(0.5, 2, 2) - 0.8125).abs() < 1e-15);
        assert!((rate_bound(0.0, 2, 2) - 0.625).abs() < 1e-15);
        assert_eq!(iota2_rate_bound(0.0, 2, 9), 1.0);
        assert!((iota2_rate_bound(0.75f64.sqrt(), 2, 2) - 0.71875).abs() < 1e-15);
        assert_eq!(iota2_rate_bound(f64::INFINITY, 2, 0), 1.0);
        assert_eq!(iota2_rate_bound(f64::INFINITY, 2, 3), 0.0);
    }

    #[test]
    fn sweep_in_first_subspace() {
        let cp = lines(1.1);
        let d = sweep_diagnostic(&cp, &cvec(&[3.0, 0.0]));
        assert!(d.steps[0] < 1e-28);
        assert!(d.holds(1e-10));
    }

    #[test]
    fn unconditional_sum_two_lines() {
        let cp = lines(FRAC_PI_3);
        let r = unconditional_sum_test(&cp, &cvec(&[0.7, -1.3]), 50, 1e-6, 5).unwrap();
        assert!(r.passed(), "{r:?}");
        assert!(r.telescoping_error < 1e-12);
    }

    #[test]
    fn unconditional_sum_fixed_vector() {
        let s = Subspace::span_real(2, &[vec![1.0, 1.0]]).unwrap();
        let cp = build_cyclic(&[s.clone(), s]).unwrap();
        let r = unconditional_sum_test(&cp, &cvec(&[1.0, 1.0]), 3, 1e-6, 0).unwrap();
        assert_eq!(r.terms, 1);
        assert!(r.max_permutation_error < 1e-14);
    }

    #[test]
    fn weak_cauchy_special_cases() {
        let cp = lines(FRAC_PI_2);
        let x = cvec(&[0.5, 2.0]);
        let w = cvec(&[1.0, 1.0]);
        let r = weak_cauchy_sum(&cp, &x, &w, 20);
        assert!((r.sum - linalg::inner(&x, &w).norm()).abs() < 1e-14);
        assert!(r.converged);
    }

    #[test]
    fn cesaro_with_zero_operator() {
        let cp = lines(FRAC_PI_2);
        let x = cvec(&[1.0, -2.0]);
        let avg = cesaro_average(&cp, &x, 4);
        assert!((avg - &x / c(5.0)).norm() < 1e-15);
    }

    #[test]
    fn cesaro_lines_decay_like_one_over_n() {
        let cp = lines(FRAC_PI_3);
        let x = cvec(&[1.0, 0.3]);
        let errs: Vec<f64> = [10usize, 20, 40, 80]
            .iter()
            .map(|&n| (cesaro_average(&cp, &x, n) - cp.pm().apply(&x)).norm())
            .collect();
        assert!(errs.windows(2).all(|w| w[1] < w[0]));
        // (n+1)·‖avg_n‖ = ‖(I−T)⁻¹(I−T^{n+1})x‖ → ‖(I−T)⁻¹x‖ since M = {0}
        let inv = (linalg::identity(2) - cp.t()).try_inverse().unwrap();
        let limit = (inv * &x).norm();
        assert!((errs[3] * 81.0 - limit).abs() < 1e-6);
    }

    #[test]
    fn trace_csv_has_header_and_rows() {
        let cp = lines(FRAC_PI_3);
        let t = iterate(&cp, &cvec(&[1.0, 0.0]), 3).unwrap();
        let csv = t.to_csv();
        assert!(csv.starts_with("n,error,bound_c,bound_iota2\n"));
        assert_eq!(csv.lines().count(), 5);
    }
}
