//! Geometric quantities of a family of subspaces `M₁, …, M_N` with
//! intersection `M`: the Friedrichs number, the ℓ²-inclination and its inner
//! variant, and seeded estimates of the ℓ^∞ inclinations.
//!
//! The Friedrichs supremum is an eigenvalue problem: with `B_k` an orthonormal
//! basis of `M_k ∩ M^⊥` and `m_k = B_k a_k`,
//! `Σ_{j≠k} ⟨m_j, m_k⟩ = ‖Σ m_k‖² − Σ ‖m_k‖²`, so under `Σ‖a_k‖² = 1` the
//! supremum is `λ_max(G) − 1` where `G` is the Gram block matrix `[B_jᴴ B_k]`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{input, Result};
use crate::linalg::{self, c, CMat, CVec};
use crate::spectral;
use crate::subspace::{self, Subspace, DEFAULT_EIG_TOL, DEFAULT_RANK_TOL};

/// Gram matrix of the orthonormal bases of `M_k ∩ M^⊥`.
#[derive(Clone, Debug)]
pub struct GramBlock {
    pub matrix: CMat,
    /// `dim(M_k ∩ M^⊥)` for each k, in order.
    pub block_dims: Vec<usize>,
}

impl GramBlock {
    pub fn new(complements: &[Subspace]) -> Self {
        let block_dims: Vec<usize> = complements.iter().map(Subspace::rank).collect();
        let nonzero: Vec<&Subspace> = complements.iter().filter(|s| !s.is_zero()).collect();
        let total: usize = block_dims.iter().sum();
        if nonzero.is_empty() {
            return Self {
                matrix: CMat::zeros(0, 0),
                block_dims,
            };
        }
        let d = nonzero[0].dim();
        let mut stacked = CMat::zeros(d, total);
        let mut col = 0;
        for s in &nonzero {
            stacked.columns_mut(col, s.rank()).copy_from(s.basis());
            col += s.rank();
        }
        Self {
            matrix: linalg::symmetrize(&(stacked.adjoint() * stacked)),
            block_dims,
        }
    }

    pub fn total_dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn lambda_max(&self) -> Option<f64> {
        linalg::eigvalsh(&self.matrix).last().copied()
    }
}

/// `M_k ∩ M^⊥` for every k.
pub fn complements(subspaces: &[Subspace], m: &Subspace) -> Result<Vec<Subspace>> {
    subspaces
        .iter()
        .map(|mk| subspace::complement_within(mk, m, DEFAULT_RANK_TOL))
        .collect()
}

fn check_family(subspaces: &[Subspace]) -> Result<()> {
    if subspaces.len() < 2 {
        return input("need at least two subspaces");
    }
    Ok(())
}

/// Friedrichs number `c(M₁, …, M_N)` via the Gram block reduction.
///
/// When every `M_k ∩ M^⊥` is zero the constraint set is empty and the result
/// is 0 by convention.
pub fn friedrichs_number(subspaces: &[Subspace], m: &Subspace) -> Result<f64> {
    check_family(subspaces)?;
    let gram = GramBlock::new(&complements(subspaces, m)?);
    Ok(friedrichs_from_gram(&gram, subspaces.len()))
}

pub(crate) fn friedrichs_from_gram(gram: &GramBlock, n: usize) -> f64 {
    match gram.lambda_max() {
        None => 0.0,
        Some(lmax) => ((lmax - 1.0) / (n as f64 - 1.0)).clamp(0.0, 1.0),
    }
}

/// `ℓ₂ = √((N−1)(1−c))`.
pub fn ell2(c: f64, n: usize) -> f64 {
    ((n as f64 - 1.0) * (1.0 - c)).max(0.0).sqrt()
}

/// `Σ_k (I − P_k)`.
fn defect_operator(subspaces: &[Subspace]) -> CMat {
    let d = subspaces[0].dim();
    let mut s = CMat::zeros(d, d);
    for mk in subspaces {
        s += linalg::identity(d) - mk.projector().matrix();
    }
    s
}

fn min_quadratic_form(form: &CMat, basis: &CMat) -> f64 {
    let restricted = basis.adjoint() * form * basis;
    linalg::eigvalsh(&restricted)
        .first()
        .copied()
        .unwrap_or(f64::INFINITY)
        .max(0.0)
}

/// ℓ₂ computed directly as `√λ_min(Qᴴ Σ_k(I−P_k) Q)` with `Q` a basis of `M^⊥`.
pub fn ell2_direct(subspaces: &[Subspace], m: &Subspace) -> Result<f64> {
    check_family(subspaces)?;
    let perp = m.orthogonal_complement();
    if perp.is_zero() {
        return input("M equals the whole space; the infimum is over an empty set");
    }
    Ok(min_quadratic_form(&defect_operator(subspaces), perp.basis()).sqrt())
}

/// Inner ℓ²-inclination: minimum over n of `√λ_min(B_nᴴ Σ_k(I−P_k) B_n)`.
///
/// Subspaces with `M_n = M` contribute nothing; if that holds for all of them
/// the result is `+∞`.
pub fn iota2(subspaces: &[Subspace], m: &Subspace) -> Result<f64> {
    check_family(subspaces)?;
    let form = defect_operator(subspaces);
    Ok(complements(subspaces, m)?
        .iter()
        .filter(|b| !b.is_zero())
        .map(|b| min_quadratic_form(&form, b.basis()).sqrt())
        .fold(f64::INFINITY, f64::min))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InclinationKind {
    /// infimum over `x ∉ M` (the inclination ℓ)
    Global,
    /// infimum over `x ∈ M_n \ M`, minimized over n (the inner inclination ι)
    Inner,
}

/// `max_k dist(x, M_k)` for unit `x ⟂ M`.
fn max_distance(subspaces: &[Subspace], x: &CVec) -> f64 {
    subspaces.iter().map(|s| s.distance(x)).fold(0.0, f64::max)
}

const SEARCH_MAX_ITERS: usize = 20_000;
const SEARCH_MIN_STEP: f64 = 1e-10;

/// Multi-start random local search for `min_{a ∈ S(ℂ^r)} max_k dist(Q a, M_k)`.
fn search_sphere(subspaces: &[Subspace], q: &CMat, restarts: usize, seed: u64) -> f64 {
    let r = q.ncols();
    let mut best = f64::INFINITY;
    for restart in 0..restarts {
        let sub_seed = seed ^ (restart as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
        let mut rng = ChaCha8Rng::seed_from_u64(sub_seed);
        let mut a = linalg::unit_gaussian_vector(r, &mut rng);
        let mut value = max_distance(subspaces, &(q * &a));
        let mut step = 0.5;
        let mut failures = 0;
        for _ in 0..SEARCH_MAX_ITERS {
            if step < SEARCH_MIN_STEP || r == 1 {
                break;
            }
            let mut trial = &a + linalg::gaussian_vector(r, &mut rng) * c(step);
            let norm = trial.norm();
            trial /= c(norm);
            let v = max_distance(subspaces, &(q * &trial));
            if v < value {
                a = trial;
                value = v;
                failures = 0;
                step *= 1.5;
            } else {
                failures += 1;
                if failures >= 4 * r + 4 {
                    step *= 0.5;
                    failures = 0;
                }
            }
        }
        best = best.min(value);
    }
    best
}

/// Seeded upper estimate of the inclination ℓ (`Global`) or inner inclination ι (`Inner`).
///
/// Returns `+∞` when the feasible set is empty. Restarts use sub-seeds derived
/// from `seed` and the result is the best value found, so it is deterministic.
pub fn minimax_inclination_estimate(
    subspaces: &[Subspace],
    m: &Subspace,
    kind: InclinationKind,
    restarts: usize,
    seed: u64,
) -> Result<f64> {
    check_family(subspaces)?;
    if restarts == 0 {
        return input("restarts must be at least 1");
    }
    match kind {
        InclinationKind::Global => {
            let perp = m.orthogonal_complement();
            if perp.is_zero() {
                return Ok(f64::INFINITY);
            }
            Ok(search_sphere(subspaces, perp.basis(), restarts, seed))
        }
        InclinationKind::Inner => {
            let mut best = f64::INFINITY;
            for (n, b) in complements(subspaces, m)?.iter().enumerate() {
                if b.is_zero() {
                    continue;
                }
                let v = search_sphere(subspaces, b.basis(), restarts, seed.wrapping_add(n as u64 + 1));
                best = best.min(v);
            }
            Ok(best)
        }
    }
}

/// `√(1 − 3(N−1)(1−c)/N³)`, clamped to `[0, 1]`.
pub fn rate_base(c: f64, n: usize) -> f64 {
    let nf = n as f64;
    (1.0 - 3.0 * (nf - 1.0) * (1.0 - c) / nf.powi(3)).clamp(0.0, 1.0).sqrt()
}

#[derive(Clone, Debug, PartialEq)]
pub struct GeometryReport {
    pub n: usize,
    pub c: f64,
    pub ell2: f64,
    pub iota2: f64,
    pub ell_est: f64,
    pub iota_est: f64,
    pub theta0: f64,
    pub rate_base: f64,
}

#[derive(Clone, Copy, Debug)]
pub struct EstimateOptions {
    pub restarts: usize,
    pub seed: u64,
}

impl Default for EstimateOptions {
    fn default() -> Self {
        Self { restarts: 8, seed: 0 }
    }
}

impl GeometryReport {
    pub fn compute(subspaces: &[Subspace], opts: EstimateOptions) -> Result<Self> {
        check_family(subspaces)?;
        let m = subspace::intersection(subspaces, DEFAULT_EIG_TOL)?;
        let n = subspaces.len();
        let c = friedrichs_number(subspaces, &m)?;
        let ell_est =
            minimax_inclination_estimate(subspaces, &m, InclinationKind::Global, opts.restarts, opts.seed)?;
        let iota_est =
            minimax_inclination_estimate(subspaces, &m, InclinationKind::Inner, opts.restarts, opts.seed)?;
        Ok(Self {
            n,
            c,
            ell2: ell2(c, n),
            iota2: iota2(subspaces, &m)?,
            ell_est,
            iota_est,
            theta0: spectral::theta0(c, n),
            rate_base: rate_base(c, n),
        })
    }

    /// Flat `(key, value)` record; floats use 17 significant digits.
    pub fn record(&self) -> Vec<(&'static str, String)> {
        vec![
            ("N", self.n.to_string()),
            ("c", fmt17(self.c)),
            ("ell2", fmt17(self.ell2)),
            ("iota2", fmt17(self.iota2)),
            ("ell_est", fmt17(self.ell_est)),
            ("iota_est", fmt17(self.iota_est)),
            ("theta0", fmt17(self.theta0)),
            ("rate_base", fmt17(self.rate_base)),
        ]
    }
}

/// Shortest fixed-width form that round-trips every `f64` (17 significant digits).
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Clone, Debug, PartialEq)]
pub struct InequalityCheck {
    pub name: &'static str,
    pub satisfied: bool,
    /// right-hand side minus left-hand side in the direction of the inequality
    pub slack: f64,
    /// false for diagnostics that compare two heuristic estimates
    pub rigorous: bool,
}

const SANDWICH_TOL: f64 = 1e-6;

/// Evaluate the inequalities linking c, ℓ, ι, ℓ₂ and ι₂ on a report.
pub fn sandwich_check(report: &GeometryReport) -> Vec<InequalityCheck> {
    let nf = report.n as f64;
    let lower = (nf - 1.0) / (2.0 * nf) * (1.0 - report.c);
    let upper = ell2(report.c, report.n);
    let check = |name, slack: f64, tol: f64, rigorous| InequalityCheck {
        name,
        satisfied: slack >= -tol,
        slack,
        rigorous,
    };
    vec![
        check("ell_est >= (N-1)(1-c)/(2N)", report.ell_est - lower, SANDWICH_TOL, true),
        check("iota2 >= ell2", report.iota2 - report.ell2, 1e-9, true),
        check("ell_est <= sqrt((N-1)(1-c))", upper - report.ell_est, SANDWICH_TOL, false),
        check("iota_est >= ell_est", report.iota_est - report.ell_est, SANDWICH_TOL, false),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, PI};

    fn line(theta: f64) -> Subspace {
        Subspace::span_real(2, &[vec![theta.cos(), theta.sin()]]).unwrap()
    }

    fn lines(theta: f64) -> (Vec<Subspace>, Subspace) {
        let s = vec![line(0.0), line(theta)];
        let m = subspace::intersection(&s, DEFAULT_EIG_TOL).unwrap();
        (s, m)
    }

    /// Dense sweep of `max_k dist(x, M_k)` over unit `x = (cos φ, sin φ)`.
    fn sweep_circle(s: &[Subspace]) -> f64 {
        (0..200_000)
            .map(|i| {
                let phi = PI * i as f64 / 200_000.0;
                max_distance(s, &linalg::cvec(&[phi.cos(), phi.sin()]))
            })
            .fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn friedrichs_two_lines() {
        let (s, m) = lines(FRAC_PI_3);
        assert!((friedrichs_number(&s, &m).unwrap() - 0.5).abs() < 1e-12);
        let g = GramBlock::new(&complements(&s, &m).unwrap());
        assert!((g.lambda_max().unwrap() - 1.5).abs() < 1e-12);
    }

    #[test]
    fn friedrichs_orthogonal_is_zero() {
        let e = |i: usize| {
            let mut v = vec![0.0; 3];
            v[i] = 1.0;
            Subspace::span_real(3, &[v]).unwrap()
        };
        let s = vec![e(0), e(1), e(2)];
        let m = subspace::intersection(&s, DEFAULT_EIG_TOL).unwrap();
        assert!(friedrichs_number(&s, &m).unwrap().abs() < 1e-14);
    }

    #[test]
    fn friedrichs_convention_for_identical_subspaces() {
        let s0 = line(0.4);
        let s = vec![s0.clone(), s0];
        let m = subspace::intersection(&s, DEFAULT_EIG_TOL).unwrap();
        assert_eq!(friedrichs_number(&s, &m).unwrap(), 0.0);
        // with every complement zero the direct ℓ₂ is √N (each dist² equals dist(x, M)²)
        assert!((ell2_direct(&s, &m).unwrap() - 2f64.sqrt()).abs() < 1e-12);
        assert_eq!(iota2(&s, &m).unwrap(), f64::INFINITY);
    }

    #[test]
    fn friedrichs_needs_two_subspaces() {
        let s = vec![line(0.0)];
        assert!(friedrichs_number(&s, &Subspace::zero(2)).is_err());
    }

    #[test]
    fn ell2_formula_examples() {
        assert_eq!(ell2(1.0, 3), 0.0);
        assert_eq!(ell2(0.0, 2), 1.0);
        assert!((ell2(0.5, 2) - 0.5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn ell2_direct_two_lines() {
        let (s, m) = lines(FRAC_PI_3);
        // 2I − P₁ − P₂ has eigenvalues {0.5, 1.5}
        assert!((ell2_direct(&s, &m).unwrap() - 0.5f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn ell2_direct_orthogonal_lines() {
        for n in 2..=4 {
            let s: Vec<Subspace> = (0..n)
                .map(|i| {
                    let mut v = vec![0.0; n];
                    v[i] = 1.0;
                    Subspace::span_real(n, &[v]).unwrap()
                })
                .collect();
            let m = subspace::intersection(&s, DEFAULT_EIG_TOL).unwrap();
            let expected = ((n - 1) as f64).sqrt();
            assert!((ell2_direct(&s, &m).unwrap() - expected).abs() < 1e-12);
            assert!((iota2(&s, &m).unwrap() - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn ell2_direct_rejects_full_intersection() {
        let s = vec![Subspace::full(2), Subspace::full(2)];
        assert!(ell2_direct(&s, &Subspace::full(2)).is_err());
    }

    #[test]
    fn iota2_two_lines() {
        let (s, m) = lines(FRAC_PI_3);
        assert!((iota2(&s, &m).unwrap() - 0.75f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn minimax_two_lines_against_sweep() {
        let (s, m) = lines(FRAC_PI_3);
        let oracle = sweep_circle(&s);
        // grid spacing π/200000 limits the oracle to about 1e-5
        assert!((oracle - 0.5).abs() < 1e-5);
        let est = minimax_inclination_estimate(&s, &m, InclinationKind::Global, 8, 11).unwrap();
        assert!(est >= 0.5 - 1e-9);
        assert!(est <= oracle + 1e-6);
        assert!(est <= ell2(0.5, 2) + 1e-3);
        let inner = minimax_inclination_estimate(&s, &m, InclinationKind::Inner, 8, 11).unwrap();
        assert!(inner >= est - 1e-9);
    }

    #[test]
    fn minimax_orthogonal_lines() {
        let (s, m) = lines(FRAC_PI_2);
        let inner = minimax_inclination_estimate(&s, &m, InclinationKind::Inner, 4, 3).unwrap();
        assert!((inner - 1.0).abs() < 1e-6);
        let global = minimax_inclination_estimate(&s, &m, InclinationKind::Global, 4, 3).unwrap();
        let oracle = sweep_circle(&s);
        assert!((oracle - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-6);
        assert!((global - oracle).abs() < 1e-6);
    }

    #[test]
    fn minimax_is_deterministic() {
        let (s, m) = lines(1.0);
        let a = minimax_inclination_estimate(&s, &m, InclinationKind::Global, 3, 99).unwrap();
        let b = minimax_inclination_estimate(&s, &m, InclinationKind::Global, 3, 99).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn report_and_sandwich() {
        for theta in [FRAC_PI_3, FRAC_PI_2] {
            let (s, _) = lines(theta);
            let r = GeometryReport::compute(&s, EstimateOptions::default()).unwrap();
            assert!((r.ell2 - ell2(r.c, r.n)).abs() < 1e-9);
            assert!(r.iota2 >= r.ell2 - 1e-9);
            assert!((0.0..=1.0).contains(&r.rate_base));
            for chk in sandwich_check(&r) {
                assert!(chk.satisfied, "{} slack {}", chk.name, chk.slack);
            }
        }
    }

    #[test]
    fn sandwich_aligned_limit_is_trivial() {
        let r = GeometryReport {
            n: 2,
            c: 1.0,
            ell2: 0.0,
            iota2: 0.0,
            ell_est: 0.0,
            iota_est: 0.0,
            theta0: FRAC_PI_2,
            rate_base: 1.0,
        };
        let checks = sandwich_check(&r);
        assert!(checks[0].satisfied && checks[0].slack == 0.0);
    }
}
