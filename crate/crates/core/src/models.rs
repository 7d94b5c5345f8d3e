//! Problem instances: random families, two lines, the block-diagonal
//! quasi-aligned model, slow vectors and convex combinations of products.

use std::f64::consts::FRAC_PI_2;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{input, Error, Result};
use crate::linalg::{c, CMat, CVec, C64};
use crate::operator::{build_cyclic, CyclicProduct};
use crate::subspace::{orthonormalize, Subspace, DEFAULT_RANK_TOL};

/// Subspaces spanned by seeded real Gaussian vectors.
///
/// Rejects the family where every rank equals `d`, since then every subspace
/// is the whole space.
pub fn random_instance(d: usize, dims: &[usize], seed: u64) -> Result<Vec<Subspace>> {
    if d == 0 {
        return input("ambient dimension must be positive");
    }
    if dims.len() < 2 {
        return input("need at least two subspaces");
    }
    if let Some(&r) = dims.iter().find(|&&r| r == 0 || r > d) {
        return input(format!("rank {r} outside 1..={d}"));
    }
    if dims.iter().all(|&r| r == d) {
        return input("every subspace equals the whole space; nothing to iterate");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    dims.iter()
        .map(|&r| {
            let vecs: Vec<CVec> = (0..r)
                .map(|_| CVec::from_fn(d, |_, _| c(rng.sample::<f64, _>(StandardNormal))))
                .collect();
            let s = orthonormalize(d, &vecs, DEFAULT_RANK_TOL)?;
            if s.rank() != r {
                return Err(Error::Numerical(format!("Gaussian draw lost rank ({} < {r})", s.rank())));
            }
            Ok(s)
        })
        .collect()
}

/// Lines through `(1, 0)` and `(cos θ, sin θ)` in `ℂ²`.
pub fn two_lines(theta: f64) -> Result<(Subspace, Subspace)> {
    if !(theta > 0.0 && theta <= FRAC_PI_2) {
        return input("theta must lie in (0, π/2]");
    }
    Ok((
        Subspace::span_real(2, &[vec![1.0, 0.0]])?,
        Subspace::span_real(2, &[vec![theta.cos(), theta.sin()]])?,
    ))
}

#[derive(Clone, Debug, PartialEq)]
pub enum AngleRule {
    /// `θ_k = 1/k`
    InverseK,
    /// `θ_k = 1/√k`
    InverseSqrtK,
    Custom(Vec<f64>),
}

impl AngleRule {
    /// Angle of block `k` (1-based), `None` for custom lists past their end.
    pub fn angle(&self, k: usize) -> Option<f64> {
        match self {
            AngleRule::InverseK => Some(1.0 / k as f64),
            AngleRule::InverseSqrtK => Some(1.0 / (k as f64).sqrt()),
            AngleRule::Custom(v) => v.get(k - 1).copied(),
        }
    }
}

/// `ℂ^{2K}` split into planes; in plane `k`, `M₁` is spanned by `(1, 0)` and
/// `M₂` by `(cos θ_k, sin θ_k)`.
///
/// On plane `k`, `T = cos θ_k · u_k e₁ᵀ` with `u_k = (cos θ_k, sin θ_k)`, so
/// `Tⁿ x = cos^{2n−1}θ_k · x₁ · u_k` for `n ≥ 1`: only the `M₁` coordinate
/// of each plane matters, with geometry factor 1.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockAlignedModel {
    pub rule: AngleRule,
    pub angles: Vec<f64>,
}

pub fn block_aligned(k: usize, rule: AngleRule) -> Result<BlockAlignedModel> {
    if k == 0 {
        return input("need at least one block");
    }
    if let AngleRule::Custom(v) = &rule {
        if v.len() != k {
            return input(format!("custom angle list has {} entries, expected {k}", v.len()));
        }
    }
    let angles: Vec<f64> = (1..=k).map(|i| rule.angle(i).expect("length checked")).collect();
    if let Some(a) = angles.iter().find(|&&a| !(a > 0.0 && a <= FRAC_PI_2)) {
        return input(format!("angle {a} outside (0, π/2]"));
    }
    if angles.windows(2).any(|w| w[1] > w[0]) {
        return input("angles must be non-increasing");
    }
    Ok(BlockAlignedModel { rule, angles })
}

impl BlockAlignedModel {
    pub fn blocks(&self) -> usize {
        self.angles.len()
    }

    pub fn dim(&self) -> usize {
        2 * self.angles.len()
    }

    pub fn subspaces(&self) -> (Subspace, Subspace) {
        let k = self.blocks();
        let d = self.dim();
        let mut b1 = CMat::zeros(d, k);
        let mut b2 = CMat::zeros(d, k);
        for (i, &th) in self.angles.iter().enumerate() {
            b1[(2 * i, i)] = c(1.0);
            b2[(2 * i, i)] = c(th.cos());
            b2[(2 * i + 1, i)] = c(th.sin());
        }
        (
            Subspace::from_orthonormal(b1).expect("unit coordinate vectors"),
            Subspace::from_orthonormal(b2).expect("unit vectors in disjoint planes"),
        )
    }

    pub fn cyclic(&self) -> Result<CyclicProduct> {
        let (a, b) = self.subspaces();
        build_cyclic(&[a, b])
    }

    /// `max_k cos θ_k`.
    pub fn friedrichs_number(&self) -> f64 {
        self.angles.iter().map(|t| t.cos()).fold(0.0, f64::max)
    }

    /// Unit vector along `M₁` in block `k` (0-based).
    pub fn m1_direction(&self, k: usize) -> CVec {
        let mut v = CVec::zeros(self.dim());
        v[2 * k] = c(1.0);
        v
    }

    /// `‖Tⁿ x‖` for `n = 0..=n_max` from the per-block closed form.
    pub fn predicted_errors(&self, x: &CVec, n_max: usize) -> Vec<f64> {
        let mass: Vec<f64> = (0..self.blocks()).map(|k| x[2 * k].norm_sqr()).collect();
        let mut out = Vec::with_capacity(n_max + 1);
        out.push(x.norm());
        for n in 1..=n_max {
            let e2: f64 = self
                .angles
                .iter()
                .zip(&mass)
                .map(|(th, m)| m * th.cos().powi(2 * (2 * n as i32 - 1)))
                .sum();
            out.push(e2.sqrt());
        }
        out
    }

    /// Unit vector whose block-`k` coordinates have modulus proportional to
    /// `k^{−p}` and seeded uniform phases.
    ///
    /// As `K` grows these converge to a fixed square-summable sequence (for
    /// `p > 1/2`), unlike a uniform draw on the sphere of `ℂ^{2K}`.
    pub fn envelope_vector(&self, p: f64, seed: u64) -> CVec {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut v = CVec::from_fn(self.dim(), |i, _| {
            let k = (i / 2 + 1) as f64;
            C64::from_polar(k.powf(-p), rng.random_range(0.0..std::f64::consts::TAU))
        });
        let n = v.norm();
        v.unscale_mut(n);
        v
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SlowVector {
    pub x: CVec,
    /// `(block, coefficient, first n served, last n served)`
    pub assignments: Vec<(usize, f64, usize, usize)>,
}

/// Greedy witness for slow convergence up to a finite horizon.
///
/// Ranges of `n` are served by blocks taken slowest first. A block entering
/// at `n_s` gets coefficient `a = (1+ε/2)·r_{n_s} / cos^{2n_s−1}θ` (just
/// enough to dominate `r` at `n_s`, with margin) and serves every following
/// `n` with `a·cos^{2n−1}θ ≥ r_n`. Since `eₙ ≥ a_k cos^{2n−1}θ_k` for each
/// block, covering every `n ≤ n_max` gives `eₙ ≥ rₙ`.
pub fn slow_vector(model: &BlockAlignedModel, r: &[f64], eps: f64) -> Result<SlowVector> {
    if r.is_empty() {
        return input("need at least r_0");
    }
    if !(eps > 0.0) {
        return input("eps must be positive");
    }
    if r.iter().any(|&v| !(v > 0.0)) || r.windows(2).any(|w| w[1] > w[0]) {
        return input("r must be positive and non-increasing");
    }
    match greedy_assign(&model.angles, r, eps) {
        Some(assignments) => {
            let mut x = CVec::zeros(model.dim());
            for &(k, a, _, _) in &assignments {
                x[2 * k] = c(a);
            }
            Ok(SlowVector { x, assignments })
        }
        None => Err(Error::ModelTooSmall {
            smallest_k: smallest_sufficient_k(&model.rule, r, eps),
        }),
    }
}

fn greedy_assign(angles: &[f64], r: &[f64], eps: f64) -> Option<Vec<(usize, f64, usize, usize)>> {
    let n_max = r.len() - 1;
    let budget = (1.0 + eps) * r[0];
    let mut order: Vec<usize> = (0..angles.len()).collect();
    order.sort_by(|&i, &j| angles[i].total_cmp(&angles[j]));
    let decay = |th: f64, n: usize| if n == 0 { 1.0 } else { th.cos().powi(2 * n as i32 - 1) };

    let mut out = Vec::new();
    let mut norm2 = 0.0;
    let mut start = 0usize;
    for k in order {
        let th = angles[k];
        let a = (1.0 + 0.5 * eps) * r[start] / decay(th, start);
        let mut end = start;
        while end < n_max && a * decay(th, end + 1) >= r[end + 1] {
            end += 1;
        }
        norm2 += a * a;
        out.push((k, a, start, end));
        if norm2.sqrt() > budget {
            return None;
        }
        if end == n_max {
            return Some(out);
        }
        start = end + 1;
    }
    None
}

/// Smallest block count for which the rule admits a witness, if the rule can be extended.
fn smallest_sufficient_k(rule: &AngleRule, r: &[f64], eps: f64) -> Option<usize> {
    const LIMIT: usize = 1 << 20;
    if matches!(rule, AngleRule::Custom(_)) {
        return None;
    }
    let works = |k: usize| {
        let angles: Vec<f64> = (1..=k).filter_map(|i| rule.angle(i)).collect();
        greedy_assign(&angles, r, eps).is_some()
    };
    let mut hi = 1;
    while !works(hi) {
        hi *= 2;
        if hi > LIMIT {
            return None;
        }
    }
    let mut lo = hi / 2;
    // invariant: works(hi), and lo == 0 or !works(lo)
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if works(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Some(hi)
}

/// `Σ wᵢ Tᵢ`.
pub fn convex_combination(products: &[&CMat], weights: &[f64]) -> Result<CMat> {
    if products.is_empty() || products.len() != weights.len() {
        return input("need one positive weight per product");
    }
    if weights.iter().any(|&w| !(w > 0.0)) {
        return input("weights must be positive");
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > 1e-12 {
        return input(format!("weights sum to {total}, not 1"));
    }
    let d = products[0].nrows();
    if products.iter().any(|t| t.nrows() != d || t.ncols() != d) {
        return input("products must share one ambient space");
    }
    let mut out = CMat::zeros(d, d);
    for (t, &w) in products.iter().zip(weights) {
        out += *t * c(w);
    }
    Ok(out)
}

/// `rₙ = 1/log(n+2)` for `n = 0..=n_max`.
pub fn inverse_log_profile(n_max: usize) -> Vec<f64> {
    (0..=n_max).map(|n| 1.0 / ((n + 2) as f64).ln()).collect()
}
