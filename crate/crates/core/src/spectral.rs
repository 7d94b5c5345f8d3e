//! Numerical range of `T`, the regions it must live in, and Ritt-type
//! diagnostics.
//!
//! The numerical range is traced with support functions: for a direction `φ`
//! the support value is `h(φ) = λ_max((e^{−iφ}T + e^{iφ}Tᴴ)/2)` and the top
//! eigenvector `x` gives the boundary point `⟨Tx, x⟩`.

use std::f64::consts::{FRAC_PI_2, TAU};

use crate::error::{input, Result};
use crate::geometry::{self, fmt17};
use crate::linalg::{self, c, CMat, C64};

/// Convex hull of the disc of radius `sin θ` and the point 1.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StolzDomain {
    pub theta: f64,
}

impl StolzDomain {
    pub fn new(theta: f64) -> Self {
        Self { theta }
    }

    pub fn radius(&self) -> f64 {
        self.theta.sin().min(1.0)
    }

    /// `h(φ) = max(sin θ, cos φ)`.
    pub fn support(&self, phi: f64) -> f64 {
        self.radius().max(phi.cos())
    }

    /// Euclidean distance from `z` to the domain (zero inside).
    pub fn distance(&self, z: C64) -> f64 {
        let s = self.radius();
        let r = z.norm();
        if r <= s {
            return 0.0;
        }
        if s >= 1.0 {
            return r - 1.0;
        }
        // tangent points from 1 to the circle |λ| = s sit at angle ±(π/2 − θ)
        let psi = s.acos();
        let tp = C64::from_polar(s, psi);
        let tm = tp.conj();
        let one = c(1.0);
        if in_triangle(z, one, tp, tm) {
            return 0.0;
        }
        let tri = segment_distance(z, one, tp)
            .min(segment_distance(z, one, tm))
            .min(segment_distance(z, tp, tm));
        tri.min(r - s)
    }

    pub fn contains(&self, z: C64, slack: f64) -> bool {
        stolz_contains(z, self.theta, slack)
    }
}

fn cross(a: C64, b: C64) -> f64 {
    a.re * b.im - a.im * b.re
}

fn in_triangle(z: C64, a: C64, b: C64, c3: C64) -> bool {
    let d1 = cross(b - a, z - a);
    let d2 = cross(c3 - b, z - b);
    let d3 = cross(a - c3, z - c3);
    let neg = d1 < 0.0 || d2 < 0.0 || d3 < 0.0;
    let pos = d1 > 0.0 || d2 > 0.0 || d3 > 0.0;
    !(neg && pos)
}

fn segment_distance(z: C64, a: C64, b: C64) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_sqr();
    if len2 == 0.0 {
        return (z - a).norm();
    }
    let t = (((z - a) * ab.conj()).re / len2).clamp(0.0, 1.0);
    (z - (a + ab * t)).norm()
}

const STOLZ_GRID: usize = 720;

/// Membership in `S_θ` up to `slack`.
///
/// Decided by the exact distance to the hull; the 720-direction support test
/// is evaluated alongside and must agree.
pub fn stolz_contains(z: C64, theta: f64, slack: f64) -> bool {
    let dom = StolzDomain::new(theta);
    let grid_ok = (0..STOLZ_GRID).all(|j| {
        let phi = TAU * j as f64 / STOLZ_GRID as f64;
        (z * C64::from_polar(1.0, -phi)).re <= dom.support(phi) + slack
    });
    grid_ok && dom.distance(z) <= slack
}

/// Signed distance to the boundary of `S_θ` (positive inside), from a dense direction grid.
pub fn stolz_margin(z: C64, theta: f64) -> f64 {
    let dom = StolzDomain::new(theta);
    let outside = dom.distance(z);
    if outside > 0.0 {
        return -outside;
    }
    const GRID: usize = 4096;
    (0..GRID)
        .map(|j| {
            let phi = TAU * j as f64 / GRID as f64;
            dom.support(phi) - (z * C64::from_polar(1.0, -phi)).re
        })
        .fold(f64::INFINITY, f64::min)
}

/// `θ_N` from `θ₁ = 0`, `θ_{n+1} = atan(2 tan θ_n/(1+2⁻ⁿ) + √((1−2⁻ⁿ)/(1+2⁻ⁿ)))`.
pub fn theta_recursion(n: usize) -> f64 {
    let mut theta: f64 = 0.0;
    for k in 1..n.max(1) {
        let q = 0.5f64.powi(k as i32);
        theta = (2.0 * theta.tan() / (1.0 + q) + ((1.0 - q) / (1.0 + q)).sqrt()).atan();
    }
    theta
}

/// Half-angle with `sin θ₀ = √(1 − 3(N−1)(1−c)/N³)`; `c = 1` maps to `π/2`.
pub fn theta0(c: f64, n: usize) -> f64 {
    if c >= 1.0 {
        return FRAC_PI_2;
    }
    geometry::rate_base(c, n).asin()
}

/// Disc `|λ − 2⁻ᴺ| ≤ 1 − 2⁻ᴺ` intersected with the sector `|arg(1−λ)| ≤ θ_N`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OmegaRegion {
    pub n: usize,
    pub theta_n: f64,
}

impl OmegaRegion {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            theta_n: theta_recursion(n),
        }
    }

    fn center(&self) -> f64 {
        0.5f64.powi(self.n as i32)
    }

    /// Distance from `λ` to the sector; `arg 0 = 0`, so the vertex 1 is inside.
    fn sector_distance(&self, z: C64) -> f64 {
        let w = c(1.0) - z;
        let r = w.norm();
        if r == 0.0 {
            return 0.0;
        }
        let excess = w.arg().abs() - self.theta_n;
        if excess <= 0.0 {
            0.0
        } else if excess >= FRAC_PI_2 {
            r
        } else {
            r * excess.sin()
        }
    }

    pub fn contains(&self, z: C64, slack: f64) -> bool {
        omega_contains(z, self, slack)
    }

    /// Signed margin (positive inside): the smaller of the disc and sector margins.
    pub fn margin(&self, z: C64) -> f64 {
        let a = self.center();
        let disc = (1.0 - a) - (z - c(a)).norm();
        let w = c(1.0) - z;
        let r = w.norm();
        let sector = if r == 0.0 {
            0.0
        } else {
            let gap = self.theta_n - w.arg().abs();
            if gap >= 0.0 {
                r * gap.min(FRAC_PI_2).sin()
            } else {
                -self.sector_distance(z)
            }
        };
        disc.min(sector)
    }
}

pub fn omega_contains(z: C64, region: &OmegaRegion, slack: f64) -> bool {
    let a = region.center();
    (z - c(a)).norm() <= 1.0 - a + slack && region.sector_distance(z) <= slack
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundarySample {
    pub phi: f64,
    pub h: f64,
    pub z: C64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct NumericalRangeBoundary {
    pub samples: Vec<BoundarySample>,
}

impl NumericalRangeBoundary {
    /// Largest violation of `Re(e^{−iψ} z(φ)) ≤ h(ψ)` over all sample pairs.
    pub fn max_support_violation(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for s in &self.samples {
            for t in &self.samples {
                let v = (s.z * C64::from_polar(1.0, -t.phi)).re - t.h;
                worst = worst.max(v);
            }
        }
        worst
    }
}

/// Support-function trace of `W(T)` at `m` equally spaced directions in `[0, 2π)`.
pub fn numrange_boundary(t: &CMat, m: usize) -> Result<NumericalRangeBoundary> {
    if m < 8 {
        return input("need at least 8 boundary angles");
    }
    let th = t.adjoint();
    let samples = (0..m)
        .map(|j| {
            let phi = TAU * j as f64 / m as f64;
            let rot = C64::from_polar(1.0, -phi);
            let h_mat = (t * rot + &th * rot.conj()) * c(0.5);
            let (vals, vecs) = linalg::eigh(&h_mat);
            let top = vecs.column(vals.len() - 1).into_owned();
            let z = linalg::inner(&top, &(t * &top));
            BoundarySample {
                phi,
                h: vals[vals.len() - 1],
                z,
            }
        })
        .collect();
    Ok(NumericalRangeBoundary { samples })
}

#[derive(Clone, Debug, PartialEq)]
pub struct PointCheck {
    pub phi: f64,
    pub h: f64,
    pub z: C64,
    pub in_omega: Option<bool>,
    pub in_stolz: bool,
    pub margin: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ContainmentReport {
    pub stolz: StolzDomain,
    pub omega: Option<OmegaRegion>,
    pub slack: f64,
    pub points: Vec<PointCheck>,
}

impl ContainmentReport {
    pub fn passed(&self) -> bool {
        self.points
            .iter()
            .all(|p| p.in_stolz && p.in_omega.unwrap_or(true))
    }

    pub fn violations(&self) -> Vec<&PointCheck> {
        self.points
            .iter()
            .filter(|p| !(p.in_stolz && p.in_omega.unwrap_or(true)))
            .collect()
    }

    pub fn min_margin(&self) -> f64 {
        self.points.iter().map(|p| p.margin).fold(f64::INFINITY, f64::min)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("phi,h,re_z,im_z,in_omega,in_stolz,margin\n");
        for p in &self.points {
            let omega = match p.in_omega {
                Some(true) => "1",
                Some(false) => "0",
                None => "",
            };
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                fmt17(p.phi),
                fmt17(p.h),
                fmt17(p.z.re),
                fmt17(p.z.im),
                omega,
                u8::from(p.in_stolz),
                fmt17(p.margin)
            ));
        }
        out
    }
}

fn check_points(
    boundary: &NumericalRangeBoundary,
    stolz: StolzDomain,
    omega: Option<OmegaRegion>,
    slack: f64,
) -> ContainmentReport {
    let points = boundary
        .samples
        .iter()
        .map(|s| {
            let stolz_margin = stolz_margin(s.z, stolz.theta);
            let omega_margin = omega.map_or(f64::INFINITY, |o| o.margin(s.z));
            PointCheck {
                phi: s.phi,
                h: s.h,
                z: s.z,
                in_omega: omega.map(|o| o.contains(s.z, slack)),
                in_stolz: stolz.contains(s.z, slack),
                margin: stolz_margin.min(omega_margin),
            }
        })
        .collect();
    ContainmentReport {
        stolz,
        omega,
        slack,
        points,
    }
}

/// Check `W(T) ⊂ Ω_N ∩ S_{θ₀}` on `m` boundary samples.
pub fn containment_check(t: &CMat, c: f64, n: usize, m: usize, slack: f64) -> Result<ContainmentReport> {
    let boundary = numrange_boundary(t, m)?;
    Ok(check_points(
        &boundary,
        StolzDomain::new(theta0(c, n)),
        Some(OmegaRegion::new(n)),
        slack,
    ))
}

/// Check `W(T) ⊂ S_θ` alone, as used for convex combinations of products.
pub fn stolz_containment_check(t: &CMat, theta: f64, m: usize, slack: f64) -> Result<ContainmentReport> {
    let boundary = numrange_boundary(t, m)?;
    Ok(check_points(&boundary, StolzDomain::new(theta), None, slack))
}

#[derive(Clone, Debug, PartialEq)]
pub struct RittProfile {
    /// `n ‖Tⁿ(I−T)‖` for `n = 1..=n_max`
    pub profile: Vec<f64>,
    pub sup: f64,
    /// 1-based index of the supremum
    pub argmax: usize,
}

impl RittProfile {
    /// Largest increase of the profile after its peak.
    pub fn max_increase_after_peak(&self) -> f64 {
        self.profile[self.argmax - 1..]
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(0.0, f64::max)
    }
}

pub fn ritt_power_diagnostic(t: &CMat, n_max: usize) -> Result<RittProfile> {
    if n_max < 1 {
        return input("n_max must be at least 1");
    }
    let mut a = linalg::identity(t.nrows()) - t;
    let mut profile = Vec::with_capacity(n_max);
    for n in 1..=n_max {
        a = t * a;
        profile.push(n as f64 * linalg::spectral_norm(&a));
    }
    let (idx, sup) = profile
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (i, v)| if v > best.1 { (i, v) } else { best });
    Ok(RittProfile {
        profile,
        sup,
        argmax: idx + 1,
    })
}

/// `1 + 2⁻ᵏ` for `k = 1..=10`.
pub fn default_radii() -> Vec<f64> {
    (1..=10).map(|k| 1.0 + 0.5f64.powi(k)).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct ResolventReport {
    /// max over all sampled λ of `|λ−1| ‖(λI − T)⁻¹‖`
    pub constant: f64,
    /// `(radius, max over that circle)`
    pub per_radius: Vec<(f64, f64)>,
    pub angles_per_radius: usize,
}

/// Sampled lower estimate of the Ritt resolvent constant.
pub fn resolvent_diagnostic(t: &CMat, radii: &[f64], angles_per_radius: usize) -> Result<ResolventReport> {
    if radii.iter().any(|&r| !(r > 1.0)) {
        return input("all radii must exceed 1");
    }
    if angles_per_radius == 0 {
        return input("angles_per_radius must be positive");
    }
    let d = t.nrows();
    let eye = linalg::identity(d);
    let per_radius: Vec<(f64, f64)> = radii
        .iter()
        .map(|&r| {
            let best = (0..angles_per_radius)
                .map(|j| {
                    let lambda = C64::from_polar(r, TAU * j as f64 / angles_per_radius as f64);
                    let smin = linalg::smallest_singular_value(&(&eye * lambda - t));
                    (lambda - c(1.0)).norm() / smin
                })
                .fold(0.0, f64::max);
            (r, best)
        })
        .collect();
    Ok(ResolventReport {
        constant: per_radius.iter().map(|p| p.1).fold(0.0, f64::max),
        per_radius,
        angles_per_radius,
    })
}

/// `|λ − 1| / |λ|`, the resolvent constant integrand for `T = 0`; its supremum over `|λ| > 1` is 2.
pub fn zero_operator_resolvent(lambda: C64) -> f64 {
    (lambda - c(1.0)).norm() / lambda.norm()
}
