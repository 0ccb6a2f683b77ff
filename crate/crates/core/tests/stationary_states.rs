//! Steady states of model A: forced fixed point, white-noise stationary
//! measure, viscous variances and the inviscid limit.

use anyhow::Result;
use cascade_core::stationary::{
    constant_forced_fixed_point, covariance_quadrature, default_lookback, fixed_point_entry, inviscid_gap,
    sample_covariance, sample_stationary_state, stationary_covariance, tilde_variant_variance, viscous_variance,
    StationarySampler,
};
use proptest::prelude::*;

#[test]
fn fixed_point_is_positive_with_sqrt_tail() -> Result<()> {
    let state = constant_forced_fixed_point(4000)?;
    assert!((1..=4000).all(|n| state.a(n) > 0.0));
    let tail = state.a(4000) * 4000f64.sqrt();
    assert!((tail - std::f64::consts::FRAC_PI_2.sqrt()).abs() < 1e-3, "{tail}");
    assert!((fixed_point_entry(2) - 1.0).abs() < 1e-14);
    Ok(())
}

#[test]
fn sampler_moments_and_gaussianity() -> Result<()> {
    let n_max = 8;
    let sampler = StationarySampler::new(n_max, default_lookback(n_max), 1e-2)?;
    let samples = sampler.ensemble(99, 10_000);
    let (cov, se) = sample_covariance(&samples, n_max)?;
    for n in 1..=n_max {
        let want = 1.0 / (2 * n - 1) as f64;
        assert!((cov[n - 1][n - 1] - want).abs() < 3.0 * se[n - 1][n - 1], "var {n}");
        if n > 1 {
            assert!(cov[n - 1][n - 1] < cov[n - 2][n - 2]);
        }
    }
    let count = samples.len() as f64;
    let (se_skew, se_kurt) = ((6.0 / count).sqrt(), (24.0 / count).sqrt());
    for n in 1..=n_max {
        let xs: Vec<f64> = samples.iter().map(|s| s.at(n)).collect();
        let mean = xs.iter().sum::<f64>() / count;
        let m2 = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / count;
        let m3 = xs.iter().map(|x| (x - mean).powi(3)).sum::<f64>() / count;
        let m4 = xs.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / count;
        let skew = m3 / m2.powf(1.5);
        let kurt = m4 / (m2 * m2) - 3.0;
        assert!(skew.abs() < 4.0 * se_skew, "mode {n} skew {skew}");
        assert!(kurt.abs() < 4.0 * se_kurt, "mode {n} kurtosis {kurt}");
    }
    Ok(())
}

#[test]
fn seeded_samples_are_bit_identical() -> Result<()> {
    let a = sample_stationary_state(6, 3, 10.0, 1e-3)?;
    let b = sample_stationary_state(6, 3, 10.0, 1e-3)?;
    assert_eq!(a.values(), b.values());
    Ok(())
}

#[test]
fn viscous_variance_at_zero_viscosity() -> Result<()> {
    for n in 1..=64 {
        let v = viscous_variance(n, 0.0, 0)?.quadrature;
        assert!((v - 1.0 / (2 * n - 1) as f64).abs() < 1e-10, "n = {n}");
    }
    Ok(())
}

#[test]
fn linear_damping_decays_geometrically() -> Result<()> {
    let nu: f64 = 0.1;
    let kappa = (1.0 + nu * nu).sqrt();
    for n in 2..=12 {
        let v = viscous_variance(n, nu, 1)?;
        let (lo, hi) = v.derived_bounds.expect("p = 1 reports bounds");
        assert!(lo <= v.quadrature && v.quadrature <= hi, "n = {n}");
        // Relative to the inviscid 1/(2n−1), the excess factor shrinks by a
        // ratio pinned between (κ+ν)^{−2} and κ^{−2}.
        let next = viscous_variance(n + 1, nu, 1)?.quadrature;
        let ratio = (next * (2 * n + 1) as f64) / (v.quadrature * (2 * n - 1) as f64);
        assert!(ratio <= kappa.powi(-2) * 1.05 && ratio >= (kappa + nu).powi(-2) * 0.95, "n = {n}: {ratio}");
    }
    Ok(())
}

#[test]
fn gap_orders_and_vanishes() -> Result<()> {
    for n in 1..=8 {
        assert!(inviscid_gap(n, 0.1, 0)? < inviscid_gap(n, 0.2, 0)?, "n = {n}");
        assert_eq!(inviscid_gap(n, 0.0, 0)?, 0.0);
    }
    Ok(())
}

#[test]
fn tilde_variance_examples() -> Result<()> {
    let tv = tilde_variant_variance(4, 0.2)?;
    assert!(tv.printed_bounds.0 <= tv.quadrature && tv.quadrature <= tv.printed_bounds.1);
    assert!(tv.derived_bounds.0 <= tv.quadrature && tv.quadrature <= tv.derived_bounds.1);
    let mut last = f64::INFINITY;
    for nu in [0.0, 0.05, 0.1, 0.2, 0.4] {
        let v = tilde_variant_variance(4, nu)?.quadrature;
        assert!(v < last);
        last = v;
    }
    assert!((tilde_variant_variance(3, 0.0)?.quadrature - 0.2).abs() < 1e-12);
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn covariance_is_symmetric_and_psd(n in 1usize..40, m in 1usize..40) {
        let c = stationary_covariance(n, m).unwrap();
        prop_assert_eq!(c, stationary_covariance(m, n).unwrap());
        let minor = stationary_covariance(n, n).unwrap() * stationary_covariance(m, m).unwrap() - c * c;
        prop_assert!(minor >= -1e-15);
        prop_assert!((covariance_quadrature(n, m).unwrap() - c).abs() < 1e-12);
    }

    #[test]
    fn gap_is_monotone_in_viscosity(n in 1usize..12, a in 0.01f64..0.4, b in 0.01f64..0.4) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assume!(hi - lo > 1e-3);
        prop_assert!(inviscid_gap(n, lo, 0).unwrap() <= inviscid_gap(n, hi, 0).unwrap());
    }
}
