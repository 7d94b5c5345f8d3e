//! Dense complex linear-algebra helpers shared by the other modules.
//!
//! Everything is built on `nalgebra` dynamic matrices over `Complex<f64>`;
//! singular value decompositions are delegated to `faer`.
//! Hermitian eigenproblems always run on the explicitly symmetrized input
//! `(A + Aᴴ)/2` and return eigenvalues in ascending order.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

pub const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub const ONE: C64 = C64 { re: 1.0, im: 0.0 };

pub fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

pub fn identity(d: usize) -> CMat {
    CMat::identity(d, d)
}

/// Promote a real vector to the complex ambient space.
pub fn cvec(values: &[f64]) -> CVec {
    CVec::from_iterator(values.len(), values.iter().map(|&v| c(v)))
}

/// Column matrix from real column vectors.
pub fn cmat_from_columns(cols: &[Vec<f64>]) -> CMat {
    let d = cols.first().map_or(0, Vec::len);
    CMat::from_fn(d, cols.len(), |i, j| c(cols[j][i]))
}

pub fn symmetrize(a: &CMat) -> CMat {
    (a + a.adjoint()) * c(0.5)
}

/// Hermitian eigendecomposition of the symmetrized input.
///
/// Returns `(eigenvalues ascending, eigenvectors as columns in the same order)`.
pub fn eigh(a: &CMat) -> (Vec<f64>, CMat) {
    let n = a.nrows();
    if n == 0 {
        return (Vec::new(), CMat::zeros(0, 0));
    }
    let eig = symmetrize(a).symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMat::from_fn(n, n, |r, k| eig.eigenvectors[(r, order[k])]);
    (values, vectors)
}

pub fn eigvalsh(a: &CMat) -> Vec<f64> {
    if a.nrows() == 0 {
        return Vec::new();
    }
    let mut v: Vec<f64> = symmetrize(a).symmetric_eigenvalues().iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}

/// Thin SVD with singular values sorted in descending order.
pub struct SortedSvd {
    pub u: CMat,
    pub singular_values: Vec<f64>,
    pub v: CMat,
}

pub fn svd(a: &CMat) -> SortedSvd {
    let (m, n) = a.shape();
    let k = m.min(n);
    if k == 0 {
        return SortedSvd {
            u: CMat::zeros(m, 0),
            singular_values: Vec::new(),
            v: CMat::zeros(n, 0),
        };
    }
    match to_faer(a).thin_svd() {
        Ok(s) => {
            let (u, v, d) = (s.U(), s.V(), s.S().column_vector());
            SortedSvd {
                u: CMat::from_fn(m, k, |r, j| u[(r, j)]),
                singular_values: (0..k).map(|j| d[j].re).collect(),
                v: CMat::from_fn(n, k, |r, j| v[(r, j)]),
            }
        }
        Err(_) => jacobi_svd(a),
    }
}

/// Singular values in descending order.
pub fn singular_values(a: &CMat) -> Vec<f64> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return Vec::new();
    }
    to_faer(a)
        .singular_values()
        .unwrap_or_else(|_| jacobi_svd(a).singular_values)
}

// nalgebra's complex SVD can return a wrong factorization on rank-deficient
// input, and faer's occasionally reports non-convergence on benign matrices;
// the one-sided Jacobi fallback is slow but always converges.
fn to_faer(a: &CMat) -> faer::Mat<C64> {
    faer::Mat::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)])
}

/// One-sided (Hestenes) Jacobi SVD.
fn jacobi_svd(a: &CMat) -> SortedSvd {
    let (m, n) = a.shape();
    if m < n {
        let t = jacobi_svd(&a.adjoint());
        return SortedSvd {
            u: t.v,
            singular_values: t.singular_values,
            v: t.u,
        };
    }
    let mut w = a.clone();
    let mut v = identity(n);
    for _sweep in 0..60 {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let alpha = w.column(p).norm_squared();
                let beta = w.column(q).norm_squared();
                let gamma = w.column(p).dotc(&w.column(q));
                let g = gamma.norm();
                if g <= f64::EPSILON * (alpha * beta).sqrt() || g == 0.0 {
                    continue;
                }
                rotated = true;
                // rotate so that the (p, q) columns become orthogonal
                let phase = gamma / g;
                let zeta = (beta - alpha) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let t = if zeta == 0.0 { 1.0 } else { t };
                let cs = 1.0 / (1.0 + t * t).sqrt();
                let sn = cs * t;
                for mat in [&mut w, &mut v] {
                    for r in 0..mat.nrows() {
                        let xp = mat[(r, p)];
                        let xq = mat[(r, q)];
                        mat[(r, p)] = xp * cs - xq * phase.conj() * sn;
                        mat[(r, q)] = xp * phase * sn + xq * cs;
                    }
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let norms: Vec<f64> = (0..n).map(|j| w.column(j).norm()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]));
    let smax = norms[order[0]];
    let mut cols: Vec<CVec> = Vec::with_capacity(n);
    for &j in &order {
        let mut col: CVec = if norms[j] > f64::EPSILON * smax * n as f64 && norms[j] > 0.0 {
            w.column(j) / c(norms[j])
        } else {
            CVec::zeros(m)
        };
        // re-orthogonalize, completing null directions with coordinate vectors
        let mut e = 0;
        loop {
            for prev in &cols {
                let proj = prev.dotc(&col);
                col -= prev * proj;
            }
            let nrm = col.norm();
            if nrm > 0.5 {
                col /= c(nrm);
                break;
            }
            col = CVec::zeros(m);
            col[e] = ONE;
            e += 1;
        }
        cols.push(col);
    }
    SortedSvd {
        u: CMat::from_columns(&cols),
        singular_values: order.iter().map(|&j| norms[j]).collect(),
        v: CMat::from_fn(n, n, |r, k| v[(r, order[k])]),
    }
}

/// Spectral norm (largest singular value); zero for empty matrices.
pub fn spectral_norm(a: &CMat) -> f64 {
    singular_values(a).first().copied().unwrap_or(0.0)
}

pub fn smallest_singular_value(a: &CMat) -> f64 {
    singular_values(a).last().copied().unwrap_or(0.0)
}

/// `⟨a, b⟩ = aᴴ b`, linear in the second slot.
pub fn inner(a: &CVec, b: &CVec) -> C64 {
    a.dotc(b)
}

pub fn max_abs_entry(a: &CMat) -> f64 {
    a.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Standard complex Gaussian vector (independent N(0,1/2) real and imaginary parts).
pub fn gaussian_vector<R: Rng + ?Sized>(d: usize, rng: &mut R) -> CVec {
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    CVec::from_fn(d, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        C64::new(re * scale, im * scale)
    })
}

/// Gaussian vector normalized to unit length (retries on the measure-zero event of a zero draw).
pub fn unit_gaussian_vector<R: Rng + ?Sized>(d: usize, rng: &mut R) -> CVec {
    loop {
        let v = gaussian_vector(d, rng);
        let n = v.norm();
        if n > 0.0 {
            return v / c(n);
        }
    }
}

/// Diagonalization `A = V Λ V⁻¹` of a general complex matrix.
pub struct Diagonalization {
    pub eigenvalues: Vec<C64>,
    pub vectors: CMat,
    pub inverse: CMat,
    pub condition: f64,
}

impl Diagonalization {
    /// Apply `f(A)` to `x` as `V f(Λ) V⁻¹ x`.
    pub fn apply_fn(&self, x: &CVec, f: impl Fn(C64) -> C64) -> CVec {
        let mut coords = &self.inverse * x;
        for (z, &lambda) in coords.iter_mut().zip(&self.eigenvalues) {
            *z *= f(lambda);
        }
        &self.vectors * coords
    }
}

/// Diagonalize through the complex Schur form, recovering eigenvectors of the
/// triangular factor by back substitution.
///
/// Returns `None` when the eigenvector matrix has 2-norm condition number above
/// `max_condition` or the residual `‖AV − VΛ‖` exceeds `1e-8·max(1, ‖A‖)`,
/// which is how defective inputs are detected.
pub fn diagonalize(a: &CMat, max_condition: f64) -> Option<Diagonalization> {
    let n = a.nrows();
    if n == 0 {
        return None;
    }
    let (q, t) = a.clone().schur().unpack();
    // absolute floor: entries below machine epsilon are rounding noise for contractions
    let scale = max_abs_entry(&t).max(1.0);
    let small = f64::EPSILON * scale;
    let mut y = CMat::zeros(n, n);
    for k in 0..n {
        let lambda = t[(k, k)];
        y[(k, k)] = ONE;
        for i in (0..k).rev() {
            let mut acc = ZERO;
            for j in (i + 1)..=k {
                acc += t[(i, j)] * y[(j, k)];
            }
            let mut denom = t[(i, i)] - lambda;
            if denom.norm() < small {
                if acc.norm() < small {
                    continue;
                }
                denom = c(small);
            }
            y[(i, k)] = -acc / denom;
        }
        let norm = y.column(k).norm();
        y.column_mut(k).unscale_mut(norm);
    }
    let vectors = q * y;
    let sv = singular_values(&vectors);
    let smin = *sv.last()?;
    if smin <= 0.0 {
        return None;
    }
    let condition = sv[0] / smin;
    if !(condition <= max_condition) {
        return None;
    }
    let inverse = vectors.clone().try_inverse()?;
    let eigenvalues: Vec<C64> = (0..n).map(|k| t[(k, k)]).collect();
    let lambda = CMat::from_diagonal(&CVec::from_vec(eigenvalues.clone()));
    let residual = max_abs_entry(&(a * &vectors - &vectors * lambda));
    if residual > 1e-8 * max_abs_entry(a).max(1.0) {
        return None;
    }
    Some(Diagonalization {
        eigenvalues,
        vectors,
        inverse,
        condition,
    })
}
