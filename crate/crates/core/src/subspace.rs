//! Subspaces of a finite-dimensional complex Hilbert space.
//!
//! A [`Subspace`] is stored as a `d × r` matrix with orthonormal columns; the
//! zero subspace is the `d × 0` matrix. Rank decisions use a relative
//! singular-value threshold everywhere (see [`DEFAULT_RANK_TOL`]).

use crate::error::{input, Error, Result};
use crate::linalg::{self, c, CMat, CVec};

/// Relative singular-value threshold for numerical rank.
pub const DEFAULT_RANK_TOL: f64 = 1e-10;
/// Eigenvalue gap below 1 accepted by [`intersection`].
pub const DEFAULT_EIG_TOL: f64 = 1e-10;

const ORTHONORMAL_TOL: f64 = 1e-12;
const CONTAINMENT_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AmbientSpace {
    pub dim: usize,
}

impl AmbientSpace {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 {
            return input("ambient dimension must be at least 1");
        }
        Ok(Self { dim })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Subspace {
    basis: CMat,
}

impl Subspace {
    pub fn zero(d: usize) -> Self {
        Self {
            basis: CMat::zeros(d, 0),
        }
    }

    pub fn full(d: usize) -> Self {
        Self {
            basis: linalg::identity(d),
        }
    }

    /// Wrap a basis that is already orthonormal (checked entrywise to 1e-12).
    pub fn from_orthonormal(basis: CMat) -> Result<Self> {
        if basis.nrows() == 0 {
            return input("ambient dimension must be at least 1");
        }
        if basis.ncols() > basis.nrows() {
            return input(format!(
                "rank {} exceeds ambient dimension {}",
                basis.ncols(),
                basis.nrows()
            ));
        }
        let gram = basis.adjoint() * &basis;
        let err = linalg::max_abs_entry(&(gram - linalg::identity(basis.ncols())));
        if err > ORTHONORMAL_TOL {
            return input(format!("basis columns are not orthonormal (error {err:.3e})"));
        }
        Ok(Self { basis })
    }

    /// Span of the given real column vectors.
    pub fn span_real(d: usize, vectors: &[Vec<f64>]) -> Result<Self> {
        let cv: Vec<CVec> = vectors.iter().map(|v| linalg::cvec(v)).collect();
        orthonormalize(d, &cv, DEFAULT_RANK_TOL)
    }

    pub fn ambient(&self) -> AmbientSpace {
        AmbientSpace {
            dim: self.basis.nrows(),
        }
    }

    pub fn dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn rank(&self) -> usize {
        self.basis.ncols()
    }

    pub fn is_zero(&self) -> bool {
        self.rank() == 0
    }

    pub fn basis(&self) -> &CMat {
        &self.basis
    }

    /// Orthogonal projection of `x`, evaluated as `B(Bᴴx)`.
    pub fn project(&self, x: &CVec) -> CVec {
        if self.is_zero() {
            return CVec::zeros(self.dim());
        }
        &self.basis * (self.basis.adjoint() * x)
    }

    pub fn distance(&self, x: &CVec) -> f64 {
        (x - self.project(x)).norm()
    }

    /// Orthonormal basis of the orthogonal complement in the ambient space.
    pub fn orthogonal_complement(&self) -> Subspace {
        let d = self.dim();
        if self.is_zero() {
            return Subspace::full(d);
        }
        let residual = linalg::identity(d) - self.projector().matrix;
        top_left_singular(&residual, d - self.rank())
    }

    pub fn projector(&self) -> Projector {
        projector(self)
    }
}

/// Hermitian idempotent matrix of an orthogonal projection.
#[derive(Clone, Debug, PartialEq)]
pub struct Projector {
    matrix: CMat,
    range: Subspace,
}

impl Projector {
    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    pub fn range(&self) -> &Subspace {
        &self.range
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// `P x`, applied through the stored basis.
    pub fn apply(&self, x: &CVec) -> CVec {
        self.range.project(x)
    }

    /// Check the Hermitian / idempotent / spectral invariants.
    pub fn validate(&self) -> Result<()> {
        let p = &self.matrix;
        let herm = linalg::max_abs_entry(&(p - p.adjoint()));
        if herm > 1e-12 {
            return Err(Error::Numerical(format!("projector not Hermitian ({herm:.3e})")));
        }
        let idem = linalg::max_abs_entry(&(p * p - p));
        if idem > 1e-10 {
            return Err(Error::Numerical(format!("projector not idempotent ({idem:.3e})")));
        }
        for ev in linalg::eigvalsh(p) {
            if ev.abs().min((ev - 1.0).abs()) > 1e-8 {
                return Err(Error::Numerical(format!("projector eigenvalue {ev} not in {{0,1}}")));
            }
        }
        Ok(())
    }
}

/// Orthonormal basis for the span of `vectors` in `ℂ^d`.
///
/// Numerical rank counts singular values above `rank_tol · σ_max` of the
/// stacked `d × m` matrix; the basis is the matching leading left singular
/// vectors.
pub fn orthonormalize(d: usize, vectors: &[CVec], rank_tol: f64) -> Result<Subspace> {
    if d == 0 {
        return input("ambient dimension must be at least 1");
    }
    if !(rank_tol > 0.0) {
        return input("rank_tol must be positive");
    }
    for v in vectors {
        if v.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                actual: v.len(),
            });
        }
    }
    if vectors.is_empty() {
        return Ok(Subspace::zero(d));
    }
    let stacked = CMat::from_columns(vectors);
    Ok(range_space(&stacked, rank_tol, usize::MAX))
}

/// Leading left singular vectors of `a` above the relative threshold, at most `max_rank` of them.
fn range_space(a: &CMat, rank_tol: f64, max_rank: usize) -> Subspace {
    let d = a.nrows();
    let s = linalg::svd(a);
    let smax = s.singular_values.first().copied().unwrap_or(0.0);
    if smax == 0.0 {
        return Subspace::zero(d);
    }
    let rank = s
        .singular_values
        .iter()
        .take_while(|&&sv| sv > rank_tol * smax)
        .count()
        .min(max_rank);
    Subspace {
        basis: s.u.columns(0, rank).into_owned(),
    }
}

fn top_left_singular(a: &CMat, rank: usize) -> Subspace {
    let s = linalg::svd(a);
    let rank = rank.min(s.u.ncols());
    Subspace {
        basis: s.u.columns(0, rank).into_owned(),
    }
}

pub fn projector(s: &Subspace) -> Projector {
    let matrix = if s.is_zero() {
        CMat::zeros(s.dim(), s.dim())
    } else {
        s.basis() * s.basis().adjoint()
    };
    Projector {
        matrix,
        range: s.clone(),
    }
}

fn check_common_ambient(subspaces: &[Subspace]) -> Result<usize> {
    let d = subspaces[0].dim();
    for s in subspaces {
        if s.dim() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                actual: s.dim(),
            });
        }
    }
    Ok(d)
}

/// `M₁ ∩ … ∩ M_N` as the eigenvalue-1 eigenspace of the averaged projector.
///
/// Eigenvectors with eigenvalue above `1 − eig_tol` are kept; each must satisfy
/// `‖P_k v − v‖ ≤ √eig_tol` for every `k`.
pub fn intersection(subspaces: &[Subspace], eig_tol: f64) -> Result<Subspace> {
    if subspaces.len() < 2 {
        return input("intersection needs at least two subspaces");
    }
    if !(eig_tol > 0.0) {
        return input("eig_tol must be positive");
    }
    let d = check_common_ambient(subspaces)?;
    if subspaces.iter().any(Subspace::is_zero) {
        return Ok(Subspace::zero(d));
    }
    let n = subspaces.len() as f64;
    let mut avg = CMat::zeros(d, d);
    for s in subspaces {
        avg += s.projector().matrix;
    }
    avg /= c(n);
    let (vals, vecs) = linalg::eigh(&avg);
    let keep: Vec<usize> = (0..d).filter(|&i| vals[i] > 1.0 - eig_tol).collect();
    if keep.is_empty() {
        return Ok(Subspace::zero(d));
    }
    let basis = CMat::from_fn(d, keep.len(), |r, j| vecs[(r, keep[j])]);
    let bound = eig_tol.sqrt();
    for j in 0..basis.ncols() {
        let v: CVec = basis.column(j).into_owned();
        for s in subspaces {
            let residual = s.distance(&v);
            if residual > bound {
                return Err(Error::IllConditionedIntersection { residual, bound });
            }
        }
    }
    Ok(Subspace { basis })
}

/// Orthonormal basis of `M_k ∩ M^⊥`, given `M ⊆ M_k`.
pub fn complement_within(mk: &Subspace, m: &Subspace, rank_tol: f64) -> Result<Subspace> {
    if mk.dim() != m.dim() {
        return Err(Error::DimensionMismatch {
            expected: mk.dim(),
            actual: m.dim(),
        });
    }
    for j in 0..m.rank() {
        let v: CVec = m.basis().column(j).into_owned();
        let residual = mk.distance(&v);
        if residual > CONTAINMENT_TOL {
            return input(format!(
                "M is not contained in M_k (basis vector {j} off by {residual:.3e})"
            ));
        }
    }
    let target = mk.rank().saturating_sub(m.rank());
    if target == 0 {
        return Ok(Subspace::zero(mk.dim()));
    }
    let residual = if m.is_zero() {
        mk.basis().clone()
    } else {
        mk.basis() - m.basis() * (m.basis().adjoint() * mk.basis())
    };
    Ok(range_space(&residual, rank_tol, target))
}
