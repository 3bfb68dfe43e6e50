use hbapprox::approx::{
    build_approximant, grid, growth_constant, node_residual, sign_check, Target, TargetKind,
};
use hbapprox::hb::HbFunction;
use hbapprox::polyfact::{factorize, validate_measure, UFactor};
use num_complex::Complex64;
use proptest::prelude::*;

fn cauchy_u() -> UFactor {
    factorize(&validate_measure(&[1.0, 0.0, 1.0]).unwrap()).unwrap()
}

fn quartic_u() -> UFactor {
    factorize(&validate_measure(&[2.0, 0.0, 3.0, 0.0, 1.0]).unwrap()).unwrap()
}

fn kind() -> impl Strategy<Value = TargetKind> {
    prop::sample::select(TargetKind::ALL.to_vec())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn hb_inequality_upper_half_plane(
        tau in 0.1f64..4.0,
        re in -20.0f64..20.0,
        im in 1e-3f64..5.0,
    ) {
        let hb = HbFunction::build(quartic_u(), tau, 0.3).unwrap();
        let z = Complex64::new(re, im);
        prop_assert!(hb.e(z).norm() > hb.e_star(z).norm());
    }

    #[test]
    fn signature_matches_phase(tau in 0.1f64..4.0, alpha in 0.0f64..3.0, x in -30.0f64..30.0) {
        let hb = HbFunction::build(cauchy_u(), tau, alpha).unwrap();
        let s = (2.0 * hb.phase(x)).sin();
        prop_assume!(s.abs() > 1e-9);
        prop_assert_eq!(i32::from(hb.signature(x)), if s > 0.0 { 1 } else { -1 });
    }

    #[test]
    fn zeros_of_a_and_b_interlace(tau in 0.2f64..4.0, alpha in 0.0f64..3.0) {
        let hb = HbFunction::build(quartic_u(), tau, alpha).unwrap();
        let zs = hb.sign_changes_tagged(-15.0, 15.0).unwrap();
        for w in zs.windows(2) {
            prop_assert!(w[0].x < w[1].x);
            prop_assert_ne!(w[0].is_b_zero(), w[1].is_b_zero());
        }
    }

    #[test]
    fn approximant_interpolates_and_has_extremal_sign(
        k in kind(),
        tau in 0.5f64..3.0,
        lambda in 0.5f64..3.0,
    ) {
        let target = Target::new(k, lambda).unwrap();
        let (approx, psi) = build_approximant(&cauchy_u(), tau, &target).unwrap();
        prop_assert!(node_residual(&approx, &target, &psi, 6).unwrap() < 1e-8);
        let check = sign_check(&approx, &target, &psi, &grid(-12.0, 12.0, 601)).unwrap();
        prop_assert_eq!(check.violations, 0, "first violation {:?}", check.first_violation);
    }

    #[test]
    fn approximant_type_at_most_twice_tau(k in kind(), tau in 0.5f64..3.0, lambda in 0.5f64..2.0) {
        let target = Target::new(k, lambda).unwrap();
        let (approx, _) = build_approximant(&cauchy_u(), tau, &target).unwrap();
        prop_assert!(approx.type_estimate(60.0) <= 2.0 * tau + 0.1);
    }

    #[test]
    fn growth_constant_stable_under_grid_growth(k in kind(), tau in 0.5f64..2.0) {
        let target = Target::new(k, 1.0).unwrap();
        let (approx, psi) = build_approximant(&cauchy_u(), tau, &target).unwrap();
        let narrow = growth_constant(&approx, &target, &psi, &grid(-20.0, 20.0, 2001));
        let wide = growth_constant(&approx, &target, &psi, &grid(-80.0, 80.0, 8001));
        prop_assert!(narrow.is_finite() && wide.is_finite());
        prop_assert!(wide <= 2.0 * narrow + 1e-12, "narrow {narrow}, wide {wide}");
    }
}
