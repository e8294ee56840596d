mod common;

use common::checks::{self, field, quartic_direct, quartic_dual};
use nehari_core::fiber::{fiber_profile, FiberTolerances};
use nehari_core::symfun::TrajectoryCoeffs;
use nehari_core::SymmetryClass;
use proptest::prelude::*;
use proptest::test_runner::TestCaseError;

fn classes() -> impl Strategy<Value = SymmetryClass> {
    prop_oneof![
        Just(SymmetryClass::E1),
        Just(SymmetryClass::E2),
        Just(SymmetryClass::E3),
        Just(SymmetryClass::FullMeanZero)
    ]
}

fn coeffs() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, 1..24).prop_filter("nonzero", |v| v.iter().any(|c| c.abs() > 1e-3))
}

fn fill(raw: &[f64], n: usize) -> Vec<f64> {
    raw.iter().cycle().take(n).copied().collect()
}

fn check(r: checks::Check) -> Result<(), TestCaseError> {
    r.map_err(TestCaseError::fail)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn parseval_matches_quadrature(t in 0.3f64..5.0, dim in 1usize..3, class in classes(), n in 1usize..6, raw in coeffs()) {
        check(checks::parseval(&field(t, dim, class, n, &raw)))?;
    }

    #[test]
    fn pi_is_the_exact_mean_zero_antiderivative(t in 0.3f64..5.0, n in 1usize..6, raw in coeffs()) {
        check(checks::pi_exact(&field(t, 2, SymmetryClass::FullMeanZero, n, &raw)))?;
    }

    #[test]
    fn wirtinger_and_sobolev_bounds(t in 0.3f64..5.0, dim in 1usize..3, n in 1usize..6, raw in coeffs()) {
        check(checks::wirtinger_sobolev(&field(t, dim, SymmetryClass::FullMeanZero, n, &raw)))?;
    }

    #[test]
    fn wirtinger_equality_at_frequency_one(t in 0.3f64..5.0, a in -2.0f64..2.0, b in -2.0f64..2.0) {
        prop_assume!(a.abs() + b.abs() > 1e-3);
        check(checks::wirtinger_equality(t, a, b))?;
    }

    #[test]
    fn a_is_symmetric_and_matches_quadrature(t in 0.3f64..5.0, n in 1usize..6, ru in coeffs(), rv in coeffs()) {
        let u = field(t, 2, SymmetryClass::FullMeanZero, n, &ru);
        let v = field(t, 2, SymmetryClass::FullMeanZero, n, &rv);
        check(checks::a_symmetric_and_quadrature(&u, &v))?;
    }

    #[test]
    fn compression_divides_a_by_k(t in 0.3f64..5.0, n in 1usize..5, k in 2usize..6, ru in coeffs(), rv in coeffs()) {
        let u = field(t, 2, SymmetryClass::FullMeanZero, n, &ru);
        let v = field(t, 2, SymmetryClass::FullMeanZero, n, &rv);
        check(checks::compression_scales_a(&u, &v, k))?;
    }

    #[test]
    fn direct_gradient_matches_differences(t in 0.5f64..3.0, n in 1usize..5, raw in coeffs()) {
        let ctx = quartic_direct(t, n);
        check(checks::direct_gradient(&ctx, &fill(&raw, ctx.space().coeff_len())))?;
    }

    #[test]
    fn dual_gradient_matches_differences(n in 1usize..4, raw in coeffs()) {
        let ctx = quartic_dual(std::f64::consts::TAU, n);
        check(checks::dual_gradient(&ctx, &fill(&raw, ctx.space().coeff_len())))?;
    }

    #[test]
    fn quartic_fibers_have_monotone_ratio(t in 0.5f64..3.0, n in 1usize..5, raw in coeffs()) {
        let ctx = quartic_direct(t, n);
        check(checks::monotone_ratio(&ctx, &fill(&raw, ctx.space().coeff_len())))?;
    }

    #[test]
    fn rescaling_identity_holds(t in 0.5f64..3.0, n in 1usize..4, k in 1usize..5, lambda in 0.2f64..3.0, raw in coeffs()) {
        let ctx = quartic_direct(t, n);
        check(checks::rescaling(&ctx, &fill(&raw, ctx.space().coeff_len()), k, lambda))?;
    }
}

#[test]
fn flat_ratio_fiber_is_a_plateau() {
    checks::flat_ratio_plateau().unwrap();
}

#[test]
fn circle_field_has_nonzero_a_matching_quadrature() {
    checks::circle_anchor().unwrap();
}

#[test]
fn single_mode_fiber_has_closed_form_maximum() {
    let ctx = quartic_direct(1.0, 4);
    let e = TrajectoryCoeffs::unit(ctx.space(), 0, 0);
    let prof = fiber_profile(&ctx.fiber(e.data()).unwrap(), &FiberTolerances::default()).unwrap();
    let exact = 8.0 * std::f64::consts::PI.powi(4) / 3.0;
    assert!((prof.value - exact).abs() <= 1e-12 * exact);
}
