mod common;

use common::*;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn energies_scale_by_exp_ca_under_translation(
        psi in heights(9), bits in set_bits(), c in 0.2..2.0f64, a in -0.8..0.8f64, g in -0.2..0.3f64,
    ) {
        let r = translation_covariance(psi, bits, c, a, g);
        prop_assert!(r.is_ok(), "{:?}", r);
    }

    #[test]
    fn weighted_isoperimetric_inequality(bits in set_bits(), c in 0.1..3.0f64, cut in 0usize..23) {
        let r = isoperimetric(bits, c, cut);
        prop_assert!(r.is_ok(), "{:?}", r);
    }

    #[test]
    fn gc_is_positively_one_homogeneous(
        zeta in prop::collection::vec(0.0..3.0f64, 3..30), lambda in 0.01..10.0f64, c in 0.2..2.0f64, g in -0.2..0.3f64,
    ) {
        let r = gc_homogeneity(zeta, lambda, c, g);
        prop_assert!(r.is_ok(), "{:?}", r);
    }

    #[test]
    fn fc_equals_gc_after_change_of_variables(
        psi in prop::collection::vec(-2.0..1.0f64, 3..30), c in 0.2..2.0f64, g in -0.2..0.3f64,
    ) {
        let r = fc_gc_identity(psi, c, g);
        prop_assert!(r.is_ok(), "{:?}", r);
    }

    #[test]
    fn rearrangement_does_not_increase_energy(bits in set_bits(), c in 0.2..2.0f64, g in -0.2..0.3f64) {
        let r = rearrangement(bits, c, g);
        prop_assert!(r.is_ok(), "{:?}", r);
    }

    #[test]
    fn curvature_flow_step_preserves_order(
        base in prop::collection::vec(-0.3..0.3f64, 4), bump in prop::collection::vec(-1.0..1.0f64, 4),
        n in 11usize..60, g in -0.2..0.3f64,
    ) {
        let mut b = base.clone();
        b.resize(n, 0.0);
        let mut u = bump.clone();
        u.resize(n, 0.0);
        let r = fmc_comparison(b, u, g);
        prop_assert!(r.is_ok(), "{:?}", r);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn diffuse_wave_is_monotone_with_bounded_range(g in 0.05..0.2f64, eps in prop::sample::select(vec![0.1, 0.2])) {
        let r = wave_profile(g, eps);
        prop_assert!(r.is_ok(), "{:?}", r);
    }
}

#[test]
fn euler_lagrange_residual_is_second_order() {
    let (pts, slope) = euler_lagrange_refinement();
    assert!(slope >= 1.8, "slope {slope}, points {pts:?}");
}
