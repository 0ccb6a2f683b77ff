//! Singularity calculus for model A: descriptors `G ~ A (1 − z/ζ)^{−α}`,
//! their evolution under the semigroup, transfer-theorem coefficient
//! predictions, regime labels from `(ζ, α)`, and empirical tail fits.
//!
//! Amplitudes are normalised against `(1 − z/ζ)` so that the `z^n`
//! coefficient is `A n^{α−1} ζ^{−n} / Γ(α)` and `A` stays real at `ζ = ±1`.

use num_complex::Complex64;

use crate::error::{CascadeError, Result};
use crate::exact_gf::{mobius_phi_inverse, MoebiusParams};
use crate::model_core::{RegimeLabel, ShellSequence};
use crate::numerics::{fit_line, ln_gamma};

const ON_CIRCLE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Wedge {
    pub eta: f64,
    pub theta: f64,
}

impl Default for Wedge {
    fn default() -> Self {
        Self {
            eta: 0.5,
            theta: std::f64::consts::FRAC_PI_4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SingularityDescriptor {
    pub zeta: Complex64,
    pub alpha: f64,
    pub amplitude: Complex64,
    pub wedge: Wedge,
    /// Also carries the mirror singularity at `conj(ζ)` with amplitude `conj(A)`.
    pub with_conjugate: bool,
}

fn is_forbidden(alpha: f64) -> bool {
    alpha <= 0.0 && alpha.fract() == 0.0
}

impl SingularityDescriptor {
    pub fn new(zeta: Complex64, alpha: f64, amplitude: Complex64, with_conjugate: bool) -> Result<Self> {
        if zeta.norm() < 1.0 - ON_CIRCLE {
            return Err(CascadeError::invalid("zeta", format!("|zeta| = {} lies inside the unit disk", zeta.norm())));
        }
        if is_forbidden(alpha) {
            return Err(CascadeError::ForbiddenAlpha { alpha });
        }
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(CascadeError::invalid("alpha", format!("must be > 0, got {alpha}")));
        }
        if amplitude.norm() == 0.0 || !amplitude.is_finite() {
            return Err(CascadeError::invalid("amplitude", "must be finite and nonzero"));
        }
        Ok(Self {
            zeta,
            alpha,
            amplitude,
            wedge: Wedge::default(),
            with_conjugate,
        })
    }

    /// Real descriptor at `ζ = 1` or `ζ = −1`.
    pub fn real(zeta: f64, alpha: f64, amplitude: f64) -> Result<Self> {
        Self::new(Complex64::new(zeta, 0.0), alpha, Complex64::new(amplitude, 0.0), false)
    }

    /// Conjugate pair at `e^{±iθ}` with real amplitude.
    pub fn conjugate_pair(theta: f64, alpha: f64, amplitude: f64) -> Result<Self> {
        Self::new(Complex64::from_polar(1.0, theta), alpha, Complex64::new(amplitude, 0.0), true)
    }

    pub fn on_circle(&self) -> bool {
        (self.zeta.norm() - 1.0).abs() <= ON_CIRCLE
    }

    /// `A (1 − z/ζ)^{−α}` on the principal branch, plus the mirror term.
    pub fn local_form(&self, z: Complex64) -> Complex64 {
        let one = Complex64::new(1.0, 0.0);
        let main = self.amplitude * (one - z / self.zeta).powf(-self.alpha);
        if self.with_conjugate {
            let mirror = self.amplitude.conj() * (one - z / self.zeta.conj()).powf(-self.alpha);
            main + mirror
        } else {
            main
        }
    }
}

/// Transfer-theorem prediction for the coefficient of `z^n` (shell `n + 1`).
pub fn transfer_coefficients(d: &SingularityDescriptor, n: usize) -> Result<f64> {
    if is_forbidden(d.alpha) {
        return Err(CascadeError::ForbiddenAlpha { alpha: d.alpha });
    }
    if n == 0 {
        return Err(CascadeError::invalid("n", "the power-law form needs n ≥ 1"));
    }
    let nf = n as f64;
    let mag = (-ln_gamma(d.alpha) + (d.alpha - 1.0) * nf.ln() - nf * d.zeta.norm().ln()).exp();
    let term = d.amplitude * Complex64::from_polar(mag, -nf * d.zeta.arg());
    Ok(if d.with_conjugate { 2.0 * term.re } else { term.re })
}

/// Descriptor of `S_t G` given the descriptor of `G`.
///
/// The singular point moves to `ζ_t = φ_t^{-1}(ζ)` and the amplitude picks up
/// `ψ_t(ζ_t)/cosh t · [φ_t′(ζ_t) ζ_t/ζ]^{−α}`, which is `e^{(1−2α)t}` at
/// `ζ = 1` and `e^{(2α−1)t}` at `ζ = −1`.
pub fn evolve_singularity(d: &SingularityDescriptor, t: f64) -> Result<SingularityDescriptor> {
    let p = MoebiusParams::new(t)?;
    let mut out = *d;
    if (d.zeta - Complex64::new(1.0, 0.0)).norm() <= ON_CIRCLE {
        out.amplitude = d.amplitude * ((1.0 - 2.0 * d.alpha) * t).exp();
        return Ok(out);
    }
    if (d.zeta + Complex64::new(1.0, 0.0)).norm() <= ON_CIRCLE {
        out.amplitude = d.amplitude * ((2.0 * d.alpha - 1.0) * t).exp();
        return Ok(out);
    }
    let tau = p.tau();
    let zt = mobius_phi_inverse(&p, d.zeta)
        .ok_or_else(|| CascadeError::invalid("zeta", "singularity mapped to infinity"))?;
    let one = Complex64::new(1.0, 0.0);
    let denom = one - zt * tau;
    let psi = denom.inv();
    let dphi = (1.0 - tau * tau) / (denom * denom);
    let bracket = dphi * zt / d.zeta;
    out.zeta = zt;
    out.amplitude = d.amplitude * psi / t.cosh() * bracket.powf(-d.alpha);
    Ok(out)
}

/// Amplitude factor as displayed for a generic point on the circle:
/// `[(1+ζ)/2 e^t + (1−ζ)/2 e^{−t}]^{1−2α}`, for comparison with
/// [`evolve_singularity`]. It agrees in modulus and differs by a phase away
/// from `ζ = ±1`.
pub fn displayed_amplitude_factor(zeta: Complex64, alpha: f64, t: f64) -> Complex64 {
    let b = (Complex64::new(1.0, 0.0) + zeta) / 2.0 * t.exp() + (Complex64::new(1.0, 0.0) - zeta) / 2.0 * (-t).exp();
    b.powf(1.0 - 2.0 * alpha)
}

/// Regime implied by a dominant singularity.
pub fn classify_from_descriptor(d: &SingularityDescriptor) -> RegimeLabel {
    if !d.on_circle() {
        return RegimeLabel::Conservative;
    }
    let half = 0.5;
    let at = |x: f64| (d.zeta - Complex64::new(x, 0.0)).norm() <= 1e-9;
    let cmp = if (d.alpha - half).abs() <= 1e-12 {
        std::cmp::Ordering::Equal
    } else if d.alpha < half {
        std::cmp::Ordering::Less
    } else {
        std::cmp::Ordering::Greater
    };
    use std::cmp::Ordering::*;
    if at(1.0) {
        match cmp {
            Less => RegimeLabel::Conservative,
            Equal => RegimeLabel::DissipativeFiniteRate,
            Greater => RegimeLabel::DissipativeInfiniteRate,
        }
    } else if at(-1.0) {
        match cmp {
            Less => RegimeLabel::Conservative,
            Equal => RegimeLabel::ExplosiveFiniteRate,
            Greater => RegimeLabel::ExplosiveInfiniteRate,
        }
    } else {
        RegimeLabel::Conservative
    }
}

/// Taylor coefficients `C_0..C_{len-1}` of `(1/(1−z)) ((1−z)/(1+z))^α`.
pub fn profile_series(alpha: f64, len: usize) -> Vec<f64> {
    // (1−z)^{α−1} and (1+z)^{−α} by their binomial recurrences, then a Cauchy product.
    let mut u = vec![0.0; len];
    let mut v = vec![0.0; len];
    if len == 0 {
        return u;
    }
    u[0] = 1.0;
    v[0] = 1.0;
    for k in 1..len {
        let kf = k as f64;
        u[k] = u[k - 1] * (kf - 1.0 - (alpha - 1.0)) / kf;
        v[k] = -v[k - 1] * (alpha + kf - 1.0) / kf;
    }
    (0..len)
        .map(|n| (0..=n).map(|k| u[k] * v[n - k]).sum())
        .collect()
}

/// Long-time profile `2^{1−α} A C_{n−1}^α` of data with a singularity at `ζ = −1`;
/// the solution behaves like `e^{(2α−1)t}` times this value.
pub fn long_time_profile(d: &SingularityDescriptor, n: usize) -> Result<f64> {
    if (d.zeta + Complex64::new(1.0, 0.0)).norm() > 1e-9 {
        return Err(CascadeError::invalid("zeta", "profile is defined for zeta = -1"));
    }
    if n == 0 {
        return Err(CascadeError::invalid("n", "shell indices start at 1"));
    }
    let c = profile_series(d.alpha, n);
    Ok(2f64.powf(1.0 - d.alpha) * d.amplitude.re * c[n - 1])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SignPattern {
    Constant,
    Alternating,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailEstimate {
    pub alpha_hat: f64,
    pub amplitude: f64,
    pub rms_residual: f64,
    pub r_squared: f64,
    pub n_range: (usize, usize),
}

/// Log-log fit `|a_n| ≈ amplitude · n^{α̂−1}` over the last half of the data.
pub fn fit_tail_exponent(seq: &ShellSequence, pattern: SignPattern) -> Result<TailEstimate> {
    let n_max = seq.n_max();
    if n_max < 32 {
        return Err(CascadeError::InsufficientData { needed: 32, got: n_max });
    }
    let lo = n_max / 2 + 1;
    let window: Vec<(usize, f64)> = (lo..=n_max).map(|n| (n, seq.at(n))).collect();
    if window.iter().any(|(_, v)| *v == 0.0) {
        return Err(CascadeError::NonPositiveEntries);
    }
    let ok = match pattern {
        SignPattern::Constant => window.iter().all(|(_, v)| v.signum() == window[0].1.signum()),
        SignPattern::Alternating => window.windows(2).all(|w| w[0].1.signum() != w[1].1.signum()),
    };
    if !ok {
        return Err(CascadeError::NonPositiveEntries);
    }
    let xs: Vec<f64> = window.iter().map(|(n, _)| (*n as f64).ln()).collect();
    let ys: Vec<f64> = window.iter().map(|(_, v)| v.abs().ln()).collect();
    let fit = fit_line(&xs, &ys).ok_or(CascadeError::InsufficientData { needed: 2, got: xs.len() })?;
    Ok(TailEstimate {
        alpha_hat: 1.0 + fit.slope,
        amplitude: fit.intercept.exp(),
        rms_residual: fit.rms_residual,
        r_squared: fit.r_squared,
        n_range: (lo, n_max),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::central_binomial_ratios;

    #[test]
    fn transfer_examples() {
        let d = SingularityDescriptor::real(1.0, 1.0, 1.0).unwrap();
        for n in 1..50 {
            assert!((transfer_coefficients(&d, n).unwrap() - 1.0).abs() < 1e-12);
        }
        let d = SingularityDescriptor::real(1.0, 0.5, 1.0).unwrap();
        let pred = transfer_coefficients(&d, 25).unwrap();
        assert!((pred - 1.0 / (std::f64::consts::PI.sqrt() * 5.0)).abs() < 1e-14);
        let exact = central_binomial_ratios(26)[25];
        assert!((pred / exact - 1.0).abs() < 0.01);
        let d = SingularityDescriptor::real(-1.0, 0.5, 1.0).unwrap();
        let a = transfer_coefficients(&d, 10).unwrap();
        let b = transfer_coefficients(&d, 11).unwrap();
        assert!(a > 0.0 && b < 0.0);
    }

    #[test]
    fn forbidden_and_invalid_descriptors() {
        assert!(matches!(
            SingularityDescriptor::real(1.0, 0.0, 1.0),
            Err(CascadeError::ForbiddenAlpha { .. })
        ));
        assert!(SingularityDescriptor::real(0.5, 0.5, 1.0).is_err());
        assert!(SingularityDescriptor::real(1.0, 0.5, 0.0).is_err());
    }

    #[test]
    fn evolution_examples() {
        let d = SingularityDescriptor::real(1.0, 0.5, 1.0).unwrap();
        assert_eq!(evolve_singularity(&d, 2.0).unwrap().amplitude.re, 1.0);
        let d = SingularityDescriptor::real(-1.0, 0.5, 1.0).unwrap();
        assert_eq!(evolve_singularity(&d, 2.0).unwrap().amplitude.re, 1.0);
        let d = SingularityDescriptor::real(1.0, 1.0, 1.0).unwrap();
        let e = evolve_singularity(&d, 1.0).unwrap();
        assert!((e.amplitude.re - (-1f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn generic_rule_reduces_to_endpoint_rules() {
        // Approach ζ = 1 along the circle: the generic formula tends to e^{(1−2α)t}.
        for alpha in [0.25, 0.5, 1.0] {
            let t = 0.7;
            let mut d = SingularityDescriptor::conjugate_pair(1e-7, alpha, 1.0).unwrap();
            d.with_conjugate = false;
            let e = evolve_singularity(&d, t).unwrap();
            assert!((e.amplitude - Complex64::new(((1.0 - 2.0 * alpha) * t).exp(), 0.0)).norm() < 1e-6);
            let disp = displayed_amplitude_factor(Complex64::from_polar(1.0, 1.2), alpha, t);
            let mut g = SingularityDescriptor::conjugate_pair(1.2, alpha, 1.0).unwrap();
            g.with_conjugate = false;
            let ours = evolve_singularity(&g, t).unwrap().amplitude / Complex64::from_polar(1.0, 1.2).powf(alpha);
            assert!((ours.norm() - disp.norm()).abs() < 1e-12 * disp.norm());
        }
    }

    #[test]
    fn descriptor_labels() {
        let l = |z: f64, a: f64| classify_from_descriptor(&SingularityDescriptor::real(z, a, 1.0).unwrap());
        assert_eq!(l(1.0, 0.5), RegimeLabel::DissipativeFiniteRate);
        assert_eq!(l(-1.0, 0.7), RegimeLabel::ExplosiveInfiniteRate);
        assert_eq!(l(1.0, 0.3), RegimeLabel::Conservative);
        assert_eq!(l(1.0, 0.9), RegimeLabel::DissipativeInfiniteRate);
        assert_eq!(l(-1.0, 0.5), RegimeLabel::ExplosiveFiniteRate);
        assert_eq!(l(2.0, 3.0), RegimeLabel::Conservative);
        let pair = SingularityDescriptor::conjugate_pair(1.0, 0.9, 1.0).unwrap();
        assert_eq!(classify_from_descriptor(&pair), RegimeLabel::Conservative);
    }

    #[test]
    fn profile_examples() {
        let d = SingularityDescriptor::real(-1.0, 0.5, std::f64::consts::FRAC_1_SQRT_2).unwrap();
        let want = [1.0, 0.0, 0.5, 0.0, 0.375];
        for (n, w) in want.iter().enumerate() {
            assert!((long_time_profile(&d, n + 1).unwrap() - w).abs() < 1e-15);
        }
        let d = SingularityDescriptor::real(-1.0, 0.3, 2.0).unwrap();
        assert!((long_time_profile(&d, 1).unwrap() - 2f64.powf(0.7) * 2.0).abs() < 1e-15);
    }

    #[test]
    fn tail_fit_examples() {
        let c = central_binomial_ratios(256);
        let seq = ShellSequence::explicit(c).unwrap();
        let est = fit_tail_exponent(&seq, SignPattern::Constant).unwrap();
        assert!((est.alpha_hat - 0.5).abs() < 0.02);
        let harmonic = ShellSequence::from_fn(128, crate::Provenance::Explicit, |n| 1.0 / n as f64).unwrap();
        let est = fit_tail_exponent(&harmonic, SignPattern::Constant).unwrap();
        assert!(est.alpha_hat.abs() < 1e-12);
        let alt = ShellSequence::from_fn(64, crate::Provenance::Explicit, |n| if n % 2 == 0 { -1.0 } else { 1.0 }).unwrap();
        assert!(fit_tail_exponent(&alt, SignPattern::Constant).is_err());
        assert!((fit_tail_exponent(&alt, SignPattern::Alternating).unwrap().alpha_hat - 1.0).abs() < 1e-12);
    }
}
