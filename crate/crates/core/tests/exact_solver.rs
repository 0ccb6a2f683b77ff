//! Generating-function solver: catalog exactness, semigroup law, conserved
//! quantities and singularity transfer.

use anyhow::Result;
use cascade_core::asymptotics::{
    classify_from_descriptor, evolve_singularity, fit_tail_exponent, transfer_coefficients, SignPattern,
    SingularityDescriptor,
};
use cascade_core::exact_gf::{
    abel_decay_prefactor, apply_semigroup, fixed_point_coeffs, semigroup_compose_check, taylor_coeffs,
    taylor_coeffs_with_error, AbelLimit, CatalogExample, GeneratingFunction,
};
use cascade_core::model_core::{classify_regime, flux_trace, radius_of_convergence, ClassifierTolerances};
use cascade_core::numerics::fit_line;
use cascade_core::{CouplingFamily, RegimeLabel, ShellSequence};
use proptest::prelude::*;

fn evolve(g0: &GeneratingFunction, n_max: usize, t: f64) -> ShellSequence {
    taylor_coeffs(&apply_semigroup(g0, t).unwrap(), n_max, None).unwrap()
}

#[test]
fn catalog_exactness_on_a_time_grid() -> Result<()> {
    for id in 1..=5u8 {
        let ex = CatalogExample::new(id, None)?;
        let g0 = GeneratingFunction::example(id, None)?;
        for k in 0..=8 {
            let t = 0.25 * k as f64;
            let a = evolve(&g0, 64, t);
            let printed = ex.closed_form(64, t)?;
            for n in 1..=64 {
                let scale = printed[n - 1].abs().max(1.0);
                assert!((a.at(n) - printed[n - 1]).abs() < 1e-9 * scale, "3.{id} t={t} n={n}");
            }
        }
    }
    Ok(())
}

#[test]
fn energy_is_conserved_up_to_t_three() -> Result<()> {
    let g0 = GeneratingFunction::example(1, None)?;
    for t in [0.5, 1.0, 2.0, 3.0] {
        // tanh(3)^{2n} < 1e-12 needs n ≈ 5500.
        let a = evolve(&g0, 6000, t);
        assert!((a.energy() - 1.0).abs() < 1e-9, "t = {t}: {}", a.energy());
    }
    Ok(())
}

#[test]
fn extraction_reports_error_and_radius() -> Result<()> {
    let g = apply_semigroup(&GeneratingFunction::example(2, None)?, 0.5)?;
    let ex = taylor_coeffs_with_error(&g, 64, None)?;
    assert!(ex.radius < 1.0 && ex.radius > 0.5);
    assert!(ex.error.iter().all(|e| *e < 1e-9));
    assert!(ex.samples.is_power_of_two());
    Ok(())
}

#[test]
fn analytic_data_decay_exponentially() -> Result<()> {
    // Singularity at 1.5 stays outside the unit disk under the flow.
    let d = SingularityDescriptor::real(1.5, 0.5, 1.0)?;
    let g0 = GeneratingFunction::singular(vec![d], None);
    for t in [0.0, 0.5, 1.0] {
        let a = evolve(&g0, 64, t);
        let xs: Vec<f64> = (32..=64).map(|n| n as f64).collect();
        let ys: Vec<f64> = (32..=64).map(|n| a.at(n).abs().ln()).collect();
        let slope = fit_line(&xs, &ys).unwrap().slope;
        assert!(slope < -0.05, "t = {t}: slope {slope}");
        assert!(radius_of_convergence(&a)? > 1.0);
    }
    Ok(())
}

#[test]
fn abel_prefactor_predicts_long_time_decay() -> Result<()> {
    let g0 = GeneratingFunction::example(1, None)?;
    let AbelLimit::Finite { prefactor, .. } = abel_decay_prefactor(&g0)? else {
        panic!("expected a finite limit");
    };
    let t = 12.0;
    let a = evolve(&g0, 4, t);
    for n in 1..=4 {
        assert!((a.at(n) * t.exp() / prefactor - 1.0).abs() < 1e-3);
    }
    assert!(matches!(
        abel_decay_prefactor(&GeneratingFunction::example(5, None)?)?,
        AbelLimit::Divergent { .. }
    ));
    Ok(())
}

#[test]
fn descriptor_labels_match_flux_traces() -> Result<()> {
    let tol = ClassifierTolerances::default();
    for (zeta, alpha) in [(1.0, 0.5), (1.0, 1.0), (-1.0, 1.0), (-1.0, 0.5)] {
        let d = SingularityDescriptor::real(zeta, alpha, 1.0)?;
        let a = evolve(&GeneratingFunction::singular(vec![d], None), 129, 0.3);
        let trace: Vec<(usize, f64)> = flux_trace(&a, CouplingFamily::ModelA).into_iter().take(128).collect();
        assert_eq!(classify_regime(&trace, &tol)?, classify_from_descriptor(&d), "zeta {zeta} alpha {alpha}");
    }
    Ok(())
}

#[test]
fn tail_fit_recovers_the_evolved_exponent() -> Result<()> {
    let d = SingularityDescriptor::real(1.0, 0.75, 1.0)?;
    let a = evolve(&GeneratingFunction::singular(vec![d], None), 256, 0.5);
    let est = fit_tail_exponent(&a, SignPattern::Constant)?;
    assert!((est.alpha_hat - 0.75).abs() < 0.02, "{}", est.alpha_hat);
    let amp = evolve_singularity(&d, 0.5)?.amplitude.re;
    assert!((amp - (-0.25f64).exp()).abs() < 1e-14);
    Ok(())
}

#[test]
fn fixed_point_is_invariant() -> Result<()> {
    let amp = std::f64::consts::FRAC_1_SQRT_2;
    let fp = fixed_point_coeffs(amp, 64)?;
    for t in [0.5, 1.0, 2.0] {
        let a = evolve(&GeneratingFunction::fixed_point(amp), 64, t);
        for n in 1..=64 {
            assert!((a.at(n) - fp.at(n)).abs() < 1e-9);
        }
    }
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn semigroup_law(id in 1u8..=5, s in 0.0f64..1.0, t in 0.0f64..1.0) {
        let g0 = GeneratingFunction::example(id, None).unwrap();
        prop_assert!(semigroup_compose_check(&g0, s, t, 32).unwrap() < 1e-9);
    }

    #[test]
    fn transfer_matches_extraction_for_static_data(alpha in 0.2f64..1.5, neg in any::<bool>()) {
        prop_assume!((alpha - 1.0).abs() > 1e-3);
        let zeta = if neg { -1.0 } else { 1.0 };
        let d = SingularityDescriptor::real(zeta, alpha, 1.0).unwrap();
        let a = taylor_coeffs(&GeneratingFunction::singular(vec![d], None), 257, None).unwrap();
        let pred = transfer_coefficients(&d, 256).unwrap();
        // First correction is O(1/n) with coefficient α(α−1)/2.
        let tol = alpha * (alpha - 1.0).abs() / 256.0 + 1e-3;
        prop_assert!((pred / a.at(257) - 1.0).abs() < tol);
    }

    #[test]
    fn evolution_composes(alpha in 0.1f64..1.5, neg in any::<bool>(), s in 0.0f64..1.0, t in 0.0f64..1.0) {
        let zeta = if neg { -1.0 } else { 1.0 };
        let d = SingularityDescriptor::real(zeta, alpha, 1.0).unwrap();
        let two = evolve_singularity(&evolve_singularity(&d, s).unwrap(), t).unwrap();
        let one = evolve_singularity(&d, s + t).unwrap();
        prop_assert!((two.amplitude - one.amplitude).norm() < 1e-12 * one.amplitude.norm());
    }

    #[test]
    fn unit_circle_labels_are_never_fixed_points(alpha in 0.05f64..2.0, neg in any::<bool>()) {
        let d = SingularityDescriptor::real(if neg { -1.0 } else { 1.0 }, alpha, 1.0).unwrap();
        prop_assert_ne!(classify_from_descriptor(&d), RegimeLabel::FixedPoint);
    }
}
