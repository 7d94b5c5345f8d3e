use altproj::fracpow::FracPower;
use altproj::geometry;
use altproj::instance::{parse_instance_str, InstanceKind, InstanceSpec};
use altproj::linalg::{self, CMat, CVec, C64};
use altproj::models::{self, AngleRule};
use altproj::operator::{self, build_cyclic};
use altproj::spectral::{self, StolzDomain};
use altproj::subspace::{intersection, Subspace, DEFAULT_EIG_TOL};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn family() -> impl Strategy<Value = Vec<Subspace>> {
    (2usize..=7, 2usize..=4, any::<u64>())
        .prop_flat_map(|(d, n, seed)| (Just(d), prop::collection::vec(1..=d, n), Just(seed)))
        .prop_filter("not all full", |(d, dims, _)| dims.iter().any(|r| r < d))
        .prop_map(|(d, dims, seed)| models::random_instance(d, &dims, seed).unwrap())
}

fn unit(d: usize, seed: u64) -> CVec {
    linalg::unit_gaussian_vector(d, &mut ChaCha8Rng::seed_from_u64(seed))
}

fn random_unitary(d: usize, seed: u64) -> CMat {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cols: Vec<CVec> = (0..d).map(|_| linalg::gaussian_vector(d, &mut rng)).collect();
    linalg::svd(&CMat::from_columns(&cols)).u
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn projectors_are_hermitian_idempotents(fam in family()) {
        for s in &fam {
            let p = s.projector();
            let m = p.matrix();
            prop_assert!((m * m - m).norm() < 1e-12);
            prop_assert!((m.adjoint() - m).norm() < 1e-12);
            prop_assert!((m.trace().re - s.rank() as f64).abs() < 1e-10);
        }
    }

    #[test]
    fn intersection_lies_in_every_subspace(fam in family()) {
        let m = intersection(&fam, DEFAULT_EIG_TOL).unwrap();
        for j in 0..m.rank() {
            let v: CVec = m.basis().column(j).into_owned();
            for s in &fam {
                prop_assert!(s.distance(&v) < 1e-8);
            }
        }
    }

    #[test]
    fn friedrichs_in_unit_interval_and_unitarily_invariant(fam in family(), useed in any::<u64>()) {
        let m = intersection(&fam, DEFAULT_EIG_TOL).unwrap();
        let cv = geometry::friedrichs_number(&fam, &m).unwrap();
        prop_assert!((0.0..=1.0).contains(&cv));
        let u = random_unitary(fam[0].dim(), useed);
        let rotated: Vec<Subspace> = fam
            .iter()
            .map(|s| Subspace::from_orthonormal(&u * s.basis()).unwrap())
            .collect();
        let mr = intersection(&rotated, DEFAULT_EIG_TOL).unwrap();
        prop_assert!((geometry::friedrichs_number(&rotated, &mr).unwrap() - cv).abs() < 1e-9);
    }

    #[test]
    fn ell2_identity_and_inner_inequality(fam in family()) {
        let m = intersection(&fam, DEFAULT_EIG_TOL).unwrap();
        prop_assume!(!m.orthogonal_complement().is_zero());
        let cv = geometry::friedrichs_number(&fam, &m).unwrap();
        let l2 = geometry::ell2(cv, fam.len());
        prop_assert!((geometry::ell2_direct(&fam, &m).unwrap() - l2).abs() < 1e-8);
        prop_assert!(geometry::iota2(&fam, &m).unwrap() >= l2 - 1e-9);
    }

    #[test]
    fn errors_decrease_and_respect_both_bounds(fam in family(), xseed in any::<u64>()) {
        let cp = build_cyclic(&fam).unwrap();
        let tr = operator::iterate(&cp, &unit(cp.dim(), xseed), 60).unwrap();
        for n in 0..=60 {
            prop_assert!(tr.errors[n] <= tr.bound_c[n] + 1e-9);
            prop_assert!(tr.errors[n] <= tr.bound_iota2[n] + 1e-9);
            if n > 0 {
                prop_assert!(tr.errors[n] <= tr.errors[n - 1] + 1e-12);
            }
        }
    }

    #[test]
    fn sweep_steps_within_budget(fam in family(), xseed in any::<u64>()) {
        let cp = build_cyclic(&fam).unwrap();
        prop_assert!(operator::sweep_diagnostic(&cp, &unit(cp.dim(), xseed)).holds(1e-10));
    }

    #[test]
    fn numerical_range_inside_stolz_and_omega(fam in family()) {
        let cp = build_cyclic(&fam).unwrap();
        let r = spectral::containment_check(cp.t(), cp.friedrichs_number(), cp.n(), 64, 1e-7).unwrap();
        prop_assert!(r.passed(), "{:?}", r.violations());
    }

    #[test]
    fn two_lines_follow_the_exact_law(theta in 0.05f64..1.5, n in 1usize..30) {
        let (a, b) = models::two_lines(theta).unwrap();
        let cp = build_cyclic(&[a, b]).unwrap();
        let exact = theta.cos().powi(2 * n as i32 - 1);
        prop_assert!((operator::operator_error_norm(&cp, n) - exact).abs() < 1e-10);
        prop_assert!((cp.friedrichs_number() - theta.cos()).abs() < 1e-12);
    }

    #[test]
    fn stolz_distance_vanishes_exactly_inside(theta in 0.05f64..1.5, re in -1.5f64..1.5, im in -1.5f64..1.5) {
        let dom = StolzDomain::new(theta);
        let z = C64::new(re, im);
        let dist = dom.distance(z);
        prop_assert!(dist >= 0.0);
        if dist > 1e-9 {
            prop_assert!(!dom.contains(z, 0.0));
        }
        if dist == 0.0 {
            prop_assert!(dom.contains(z, 1e-12));
        }
        // the support function bounds every point of the domain
        if dist == 0.0 {
            for k in 0..64 {
                let phi = std::f64::consts::TAU * k as f64 / 64.0;
                prop_assert!((C64::from_polar(1.0, -phi) * z).re <= dom.support(phi) + 1e-12);
            }
        }
    }

    #[test]
    fn fractional_powers_compose(theta in 0.3f64..1.3, a in 0.1f64..1.5, b in 0.1f64..1.5, xseed in any::<u64>()) {
        let (l1, l2) = models::two_lines(theta).unwrap();
        let cp = build_cyclic(&[l1, l2]).unwrap();
        let fp = FracPower::new(cp.t()).unwrap();
        let x = unit(2, xseed);
        let tol = 1e-10;
        let ab = fp.apply(a + b, &x, tol).unwrap();
        let chained = fp.apply(a, &fp.apply(b, &x, tol).unwrap(), tol).unwrap();
        prop_assert!((ab - chained).norm() < 1e-8);
        let one = fp.apply(1.0, &x, tol).unwrap();
        prop_assert!((one - (&x - cp.t() * &x)).norm() < 1e-9);
    }

    #[test]
    fn theta_recursion_is_increasing_and_below_right_angle(n in 1usize..40) {
        let a = spectral::theta_recursion(n);
        let b = spectral::theta_recursion(n + 1);
        prop_assert!(a < b && b < std::f64::consts::FRAC_PI_2);
    }

    #[test]
    fn instance_text_roundtrips(d in 2usize..=9, n in 2usize..=4, seed in any::<u64>(), theta in 0.01f64..1.57) {
        let dims: Vec<usize> = (0..n).map(|i| 1 + (i * 7 + seed as usize) % (d - 1)).collect();
        let specs = [
            InstanceSpec::new(InstanceKind::Random { d, dims, seed }),
            InstanceSpec::new(InstanceKind::TwoLines { theta }),
            InstanceSpec::new(InstanceKind::BlockAligned { blocks: d, rule: AngleRule::InverseSqrtK }),
        ];
        for spec in specs {
            prop_assert_eq!(&parse_instance_str(&spec.to_text()).unwrap(), &spec);
            let full = spec.materialize().unwrap();
            prop_assert_eq!(&parse_instance_str(&full.to_text()).unwrap(), &full);
        }
    }
}

#[test]
fn convex_combination_of_products_stays_in_widest_stolz_domain() {
    let mut products = Vec::new();
    let mut theta: f64 = 0.0;
    for seed in 0..3 {
        let cp = build_cyclic(&models::random_instance(6, &[4, 3, 5], seed).unwrap()).unwrap();
        theta = theta.max(spectral::theta0(cp.friedrichs_number(), cp.n()));
        products.push(cp.t().clone());
    }
    let refs: Vec<&CMat> = products.iter().collect();
    let t = models::convex_combination(&refs, &[0.2, 0.3, 0.5]).unwrap();
    assert!(spectral::stolz_containment_check(&t, theta, 128, 1e-7).unwrap().passed());
    assert!(models::convex_combination(&refs, &[1.0, 0.0, 0.0]).is_err());
}
