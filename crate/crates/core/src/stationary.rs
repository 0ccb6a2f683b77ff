//! Steady states of forced model A: the constant-forcing fixed point, the
//! white-noise stationary Gaussian measure and its viscous perturbations.
//!
//! Every stochastic-integral variance is computed by adaptive quadrature of
//! the squared kernel (Itô isometry). Where a closed form is also known it is
//! returned alongside, but the quadrature value is the one to trust.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{CascadeError, Result};
use crate::model_core::{Provenance, ShellSequence};
use crate::numerics::{integrate, ln_gamma};

const QUAD_ABS_TOL: f64 = 1e-15;
const QUAD_REL_TOL: f64 = 1e-13;

/// Fixed point of model A forced by a unit constant on mode 1.
#[derive(Debug, Clone, PartialEq)]
pub struct StationaryStateA {
    pub values: ShellSequence,
}

impl StationaryStateA {
    pub fn a(&self, n: usize) -> f64 {
        self.values.at(n)
    }
}

/// `a_n* = √π/(n−1) · Γ(n/2)/Γ((n−1)/2)` for `n ≥ 2`.
pub fn fixed_point_entry(n: usize) -> f64 {
    if n == 1 {
        return fixed_point_a1();
    }
    let nf = n as f64;
    std::f64::consts::PI.sqrt() / (nf - 1.0) * (ln_gamma(nf / 2.0) - ln_gamma((nf - 1.0) / 2.0)).exp()
}

/// The `n → 1` limit of the Gamma expression, `Γ(½)·√π/2 = π/2`.
///
/// This is also what the first two fixed-point equations force:
/// `a_2* = 1` from mode 1 and `a_1* = 2 a_3* = π/2` from mode 2.
pub fn fixed_point_a1() -> f64 {
    std::f64::consts::FRAC_PI_2
}

pub fn constant_forced_fixed_point(n_max: usize) -> Result<StationaryStateA> {
    if n_max == 0 {
        return Err(CascadeError::invalid("n_max", "must be ≥ 1"));
    }
    Ok(StationaryStateA {
        values: ShellSequence::from_fn(n_max, Provenance::ClosedFormSampled, fixed_point_entry)?,
    })
}

/// `a_1* − N a_N* a_{N+1}*`: injection minus outgoing flux.
pub fn fixed_point_flux_audit(state: &StationaryStateA, n: usize) -> Result<f64> {
    let n_max = state.values.n_max();
    if n == 0 || n + 1 > n_max {
        return Err(CascadeError::IndexOutOfRange { index: n + 1, n_max });
    }
    Ok(state.a(1) - n as f64 * state.a(n) * state.a(n + 1))
}

/// Stationary covariance `E a_n** a_m** = 1/(n+m−1)`.
pub fn stationary_covariance(n: usize, m: usize) -> Result<f64> {
    if n == 0 || m == 0 {
        return Err(CascadeError::invalid("n", "shell indices start at 1"));
    }
    Ok(1.0 / (n + m - 1) as f64)
}

/// Inviscid response kernel `tanh^{n−1}(u)/cosh(u)`.
pub fn inviscid_kernel(n: usize, u: f64) -> f64 {
    u.tanh().powi(n as i32 - 1) / u.cosh()
}

fn upper_limit(n: usize, rate: f64) -> f64 {
    (22.0 + 0.5 * (n as f64).ln()) / rate.min(1.0)
}

fn quad0<F: Fn(f64) -> f64>(f: F, upper: f64) -> f64 {
    integrate(f, 0.0, upper, QUAD_ABS_TOL, QUAD_REL_TOL).value
}

/// Quadrature of `∫_0^∞ K_n(u) K_m(u) du`.
pub fn covariance_quadrature(n: usize, m: usize) -> Result<f64> {
    if n == 0 || m == 0 {
        return Err(CascadeError::invalid("n", "shell indices start at 1"));
    }
    Ok(quad0(|u| inviscid_kernel(n, u) * inviscid_kernel(m, u), upper_limit(n + m, 1.0)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Damping {
    /// Uniform damping `2ν`.
    Uniform,
    /// Damping `2ν(n−1)`.
    Linear,
}

impl Damping {
    pub fn from_p(p: u8) -> Result<Self> {
        match p {
            0 => Ok(Damping::Uniform),
            1 => Ok(Damping::Linear),
            _ => Err(CascadeError::invalid("p", format!("must be 0 or 1, got {p}"))),
        }
    }
}

fn kappa(nu: f64) -> f64 {
    (1.0 + nu * nu).sqrt()
}

/// `κ/(κ + ν tanh κu)^n · K_n(κu)`: impulse response of mode `n` under
/// damping `ν(2n−1)`.
pub fn displayed_linear_kernel(n: usize, nu: f64, u: f64) -> f64 {
    let k = kappa(nu);
    let s = k * u;
    k / (k + nu * s.tanh()).powi(n as i32) * inviscid_kernel(n, s)
}

/// Kernel of the stationary viscous solution on mode `n`. Damping `2ν(n−1)`
/// is `ν(2n−1)` minus a uniform `ν`, hence the `e^{νu}` factor.
pub fn viscous_kernel(n: usize, nu: f64, damping: Damping, u: f64) -> f64 {
    match damping {
        Damping::Uniform => (-2.0 * nu * u).exp() * inviscid_kernel(n, u),
        Damping::Linear => (nu * u).exp() * displayed_linear_kernel(n, nu, u),
    }
}

fn decay_rate(nu: f64, damping: Damping) -> f64 {
    match damping {
        Damping::Uniform => 1.0,
        Damping::Linear => kappa(nu) - nu,
    }
}

fn check_nu(nu: f64) -> Result<()> {
    if nu >= 0.0 && nu.is_finite() {
        Ok(())
    } else {
        Err(CascadeError::invalid("nu", format!("must be ≥ 0, got {nu}")))
    }
}

fn check_n(n: usize) -> Result<()> {
    if n == 0 {
        Err(CascadeError::invalid("n", "shell indices start at 1"))
    } else {
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PrintedVariance {
    /// `2^{1−2ν} Γ(1+2ν) Γ(2n+1−2ν)/Γ(2n+2)`.
    ClosedForm(f64),
    /// `κ²/(κ+ν)^{2n+2}/(2n+1) ≤ V ≤ κ^{−2n}/(2n+1)`.
    Bounds { lower: f64, upper: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ViscousVariance {
    pub quadrature: f64,
    pub printed: PrintedVariance,
    /// For `p = 1`, the variance of [`displayed_linear_kernel`], which is the
    /// kernel the printed bounds were stated for.
    pub displayed_kernel_quadrature: Option<f64>,
    /// For `p = 1`, from `1/(κ+ν) ≤ 1/(κ + ν tanh) ≤ 1/κ` after `v = κu`:
    /// `κ(κ+ν)^{−2n}·W ≤ V ≤ κ^{1−2n}·W`, `W = ∫ e^{2νv/κ} tanh^{2n−2}v / cosh²v dv`.
    pub derived_bounds: Option<(f64, f64)>,
}

pub fn viscous_variance_quadrature(n: usize, nu: f64, damping: Damping) -> Result<f64> {
    check_n(n)?;
    check_nu(nu)?;
    Ok(quad0(
        |u| viscous_kernel(n, nu, damping, u).powi(2),
        upper_limit(n, decay_rate(nu, damping)),
    ))
}

pub fn viscous_variance(n: usize, nu: f64, p: u8) -> Result<ViscousVariance> {
    let damping = Damping::from_p(p)?;
    let quadrature = viscous_variance_quadrature(n, nu, damping)?;
    let nf = n as f64;
    let k = kappa(nu);
    Ok(match damping {
        Damping::Uniform => {
            let ln = (1.0 - 2.0 * nu) * 2f64.ln() + ln_gamma(1.0 + 2.0 * nu) + ln_gamma(2.0 * nf + 1.0 - 2.0 * nu)
                - ln_gamma(2.0 * nf + 2.0);
            ViscousVariance {
                quadrature,
                printed: PrintedVariance::ClosedForm(ln.exp()),
                displayed_kernel_quadrature: None,
                derived_bounds: None,
            }
        }
        Damping::Linear => {
            let displayed = quad0(|u| displayed_linear_kernel(n, nu, u).powi(2), upper_limit(n, k));
            let w = quad0(
                |v| (2.0 * nu * v / k).exp() * inviscid_kernel(n, v).powi(2),
                upper_limit(n, 1.0 - nu / k),
            );
            ViscousVariance {
                quadrature,
                printed: PrintedVariance::Bounds {
                    lower: k * k / (k + nu).powf(2.0 * nf + 2.0) / (2.0 * nf + 1.0),
                    upper: k.powf(-2.0 * nf) / (2.0 * nf + 1.0),
                },
                displayed_kernel_quadrature: Some(displayed),
                derived_bounds: Some((k / (k + nu).powf(2.0 * nf) * w, k.powf(1.0 - 2.0 * nf) * w)),
            }
        }
    })
}

/// `E[α_{n,ν}** − a_n**]²` by quadrature of the squared kernel difference.
pub fn inviscid_gap(n: usize, nu: f64, p: u8) -> Result<f64> {
    let damping = Damping::from_p(p)?;
    check_n(n)?;
    check_nu(nu)?;
    if nu == 0.0 {
        return Ok(0.0);
    }
    Ok(quad0(
        |u| (viscous_kernel(n, nu, damping, u) - inviscid_kernel(n, u)).powi(2),
        upper_limit(n, decay_rate(nu, damping)),
    ))
}

/// Upper bound `4ν²/((1+ν)(1+2ν))` on the uniform-damping gap.
pub fn inviscid_gap_bound(nu: f64) -> f64 {
    4.0 * nu * nu / ((1.0 + nu) * (1.0 + 2.0 * nu))
}

/// Kernel for damping `2ν n`.
pub fn tilde_kernel(n: usize, nu: f64, u: f64) -> f64 {
    (-nu * u).exp() * displayed_linear_kernel(n, nu, u)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TildeVariance {
    pub quadrature: f64,
    /// `κ²/(κ+ν)^{2n+2}·V₀(νκ/2) ≤ V ≤ κ^{−2n}·V₀(νκ/2)` with `V₀` the
    /// uniform-damping variance.
    pub printed_bounds: (f64, f64),
    /// Substituting `v = κu` rescales the exponential to `e^{−νv/κ}`,
    /// i.e. uniform damping with `ν/(2κ)`:
    /// `κ(κ+ν)^{−2n}·V₀(ν/2κ) ≤ V ≤ κ^{1−2n}·V₀(ν/2κ)`.
    pub derived_bounds: (f64, f64),
}

pub fn tilde_variant_variance(n: usize, nu: f64) -> Result<TildeVariance> {
    check_n(n)?;
    check_nu(nu)?;
    let quadrature = quad0(|u| tilde_kernel(n, nu, u).powi(2), upper_limit(n, 1.0));
    let nf = n as f64;
    let k = kappa(nu);
    let v_printed = viscous_variance_quadrature(n, nu * k / 2.0, Damping::Uniform)?;
    let v_derived = viscous_variance_quadrature(n, nu / (2.0 * k), Damping::Uniform)?;
    Ok(TildeVariance {
        quadrature,
        printed_bounds: (
            k * k / (k + nu).powf(2.0 * nf + 2.0) * v_printed,
            k.powf(-2.0 * nf) * v_printed,
        ),
        derived_bounds: (
            k / (k + nu).powf(2.0 * nf) * v_derived,
            k.powf(1.0 - 2.0 * nf) * v_derived,
        ),
    })
}

/// Default lookback `max(10, 5 + ln n_max)`.
pub fn default_lookback(n_max: usize) -> f64 {
    (5.0 + (n_max as f64).ln()).max(10.0)
}

/// Discretised `a_n** = ∫_{−T}^0 K_n(−s) dW(s)` with the kernel tabulated
/// once and the same increments driving every mode.
#[derive(Debug, Clone)]
pub struct StationarySampler {
    n_max: usize,
    dt: f64,
    /// `kernel[j * n_max + (n−1)] = K_n(T − j·dt)`.
    kernel: Vec<f64>,
    steps: usize,
}

impl StationarySampler {
    pub fn new(n_max: usize, lookback: f64, dt: f64) -> Result<Self> {
        if n_max == 0 {
            return Err(CascadeError::invalid("n_max", "must be ≥ 1"));
        }
        if !(dt > 0.0 && dt < lookback) {
            return Err(CascadeError::invalid("dt", format!("need 0 < dt < lookback, got {dt}")));
        }
        let missing = 1.0 - lookback.tanh().powi(2 * n_max as i32 - 1);
        if missing > 1e-4 {
            return Err(CascadeError::LookbackTooShort {
                lookback,
                truncation: missing,
            });
        }
        let steps = (lookback / dt).round() as usize;
        let mut kernel = Vec::with_capacity(steps * n_max);
        for j in 0..steps {
            let u = lookback - j as f64 * dt;
            let (th, sech) = (u.tanh(), 1.0 / u.cosh());
            let mut k = sech;
            for _ in 0..n_max {
                kernel.push(k);
                k *= th;
            }
        }
        Ok(Self {
            n_max,
            dt,
            kernel,
            steps,
        })
    }

    pub fn sample<R: rand::Rng>(&self, rng: &mut R) -> ShellSequence {
        let sd = self.dt.sqrt();
        let mut acc = vec![0.0; self.n_max];
        for j in 0..self.steps {
            let xi: f64 = StandardNormal.sample(rng);
            let dw = sd * xi;
            let row = &self.kernel[j * self.n_max..(j + 1) * self.n_max];
            for (a, k) in acc.iter_mut().zip(row) {
                *a += k * dw;
            }
        }
        ShellSequence::new(acc, Provenance::Integrated).expect("finite sample")
    }

    /// `count` samples; sample `i` uses ChaCha stream `i` of `seed`.
    pub fn ensemble(&self, seed: u64, count: usize) -> Vec<ShellSequence> {
        (0..count)
            .into_par_iter()
            .map(|i| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(i as u64);
                self.sample(&mut rng)
            })
            .collect()
    }
}

pub fn sample_stationary_state(n_max: usize, seed: u64, lookback: f64, dt: f64) -> Result<ShellSequence> {
    let sampler = StationarySampler::new(n_max, lookback, dt)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(sampler.sample(&mut rng))
}

/// Sample covariance of modes `1..=k` with the standard error of each entry
/// (assuming Gaussian data: `Var(x y) = C_nn C_mm + C_nm²`).
pub fn sample_covariance(samples: &[ShellSequence], k: usize) -> Result<(Vec<Vec<f64>>, Vec<Vec<f64>>)> {
    let count = samples.len();
    if count < 2 {
        return Err(CascadeError::InsufficientData { needed: 2, got: count });
    }
    let mut cov = vec![vec![0.0; k]; k];
    for s in samples {
        for i in 0..k {
            for j in 0..k {
                cov[i][j] += s.at(i + 1) * s.at(j + 1);
            }
        }
    }
    for row in cov.iter_mut() {
        for c in row.iter_mut() {
            *c /= count as f64;
        }
    }
    let se = (0..k)
        .map(|i| {
            (0..k)
                .map(|j| ((cov[i][i] * cov[j][j] + cov[i][j] * cov[i][j]) / count as f64).sqrt())
                .collect()
        })
        .collect();
    Ok((cov, se))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixed_point_values() {
        let s = constant_forced_fixed_point(8).unwrap();
        assert!((s.a(2) - 1.0).abs() < 1e-14);
        assert!((s.a(3) - std::f64::consts::PI / 4.0).abs() < 1e-14);
        assert!((s.a(1) - 2.0 * s.a(3)).abs() < 1e-14);
        assert!(s.values.values().iter().all(|v| *v > 0.0));
        // n → 1 limit of the Gamma expression
        let eps = 1e-7f64;
        let near = std::f64::consts::PI.sqrt() / eps * (ln_gamma(0.5 + eps / 2.0) - ln_gamma(eps / 2.0)).exp();
        assert!((near - s.a(1)).abs() < 1e-6);
    }

    #[test]
    fn flux_audit_vanishes() {
        let s = constant_forced_fixed_point(1001).unwrap();
        for n in [1, 2, 10, 100, 1000] {
            assert!(fixed_point_flux_audit(&s, n).unwrap().abs() < 1e-10, "N = {n}");
        }
        assert!(fixed_point_flux_audit(&s, 1001).is_err());
    }

    #[test]
    fn covariance_examples() {
        assert_eq!(stationary_covariance(1, 1).unwrap(), 1.0);
        assert!((stationary_covariance(3, 4).unwrap() - 1.0 / 6.0).abs() < 1e-16);
        assert!((covariance_quadrature(3, 4).unwrap() - 1.0 / 6.0).abs() < 1e-12);
    }

    #[test]
    fn viscous_variance_reduces_to_inviscid() {
        for n in [1, 2, 7, 40] {
            let v = viscous_variance(n, 0.0, 0).unwrap();
            assert!((v.quadrature - 1.0 / (2 * n - 1) as f64).abs() < 1e-10);
        }
        assert_eq!(inviscid_gap(3, 0.0, 0).unwrap(), 0.0);
    }

    #[test]
    fn printed_closed_form_differs_at_zero_viscosity() {
        let v = viscous_variance(3, 0.0, 0).unwrap();
        match v.printed {
            PrintedVariance::ClosedForm(c) => assert!((c - 2.0 / 7.0).abs() < 1e-14),
            _ => panic!("expected closed form"),
        }
        assert!((v.quadrature - 0.2).abs() < 1e-10);
    }

    #[test]
    fn gap_bound_at_mode_one() {
        let g = inviscid_gap(1, 0.2, 0).unwrap();
        assert!(g <= inviscid_gap_bound(0.2));
        assert!((g - 0.07435).abs() < 5e-5);
    }

    #[test]
    fn linear_damping_bounds() {
        let v = viscous_variance(8, 0.1, 1).unwrap();
        let (lo, hi) = v.derived_bounds.unwrap();
        assert!(lo <= v.quadrature && v.quadrature <= hi);
        let d = v.displayed_kernel_quadrature.unwrap();
        match v.printed {
            PrintedVariance::Bounds { lower, upper } => assert!(lower <= d && d <= upper),
            _ => panic!("expected bounds"),
        }
        // undamped first mode: variance exceeds the inviscid value
        assert!(viscous_variance(1, 0.1, 1).unwrap().quadrature > 1.0);
    }

    #[test]
    fn tilde_variant_sandwich() {
        let t = tilde_variant_variance(4, 0.2).unwrap();
        assert!(t.printed_bounds.0 <= t.quadrature && t.quadrature <= t.printed_bounds.1);
        assert!(t.derived_bounds.0 <= t.quadrature && t.quadrature <= t.derived_bounds.1);
        let z = tilde_variant_variance(4, 0.0).unwrap();
        assert!((z.quadrature - 1.0 / 7.0).abs() < 1e-10);
    }

    #[test]
    fn sampler_is_deterministic_and_checks_lookback() {
        let a = sample_stationary_state(6, 11, 10.0, 1e-2).unwrap();
        let b = sample_stationary_state(6, 11, 10.0, 1e-2).unwrap();
        assert_eq!(a, b);
        assert!(matches!(
            sample_stationary_state(64, 1, 2.0, 1e-2),
            Err(CascadeError::LookbackTooShort { .. })
        ));
    }
}
