//! Truncated time integration of both models: unforced, constant-forced,
//! white-noise-forced and viscous. These runs are the independent oracles
//! for the exact and spectral solvers.
//!
//! The truncated coupling matrix is antisymmetric, so zero padding conserves
//! energy exactly and reflects the cascade back once it reaches `n_max`. For
//! long runs the [`Closure::Sponge`] variant adds a damping ramp over the top
//! shells that absorbs the outgoing front.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{CascadeError, Result};
use crate::model_core::{energy_report, CouplingFamily, EnergyReport, Provenance, ShellSequence};
use crate::numerics::compensated_sum;

const BLOWUP: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Closure {
    /// `a_{n_max+1} ≡ 0`.
    ZeroPad,
    /// Zero padding plus damping `strength · c_n · x²` on shells above
    /// `start_fraction · n_max`, where `x` ramps from 0 to 1 across the layer.
    Sponge { start_fraction: f64, strength: f64 },
}

impl Closure {
    pub fn sponge() -> Self {
        Closure::Sponge {
            start_fraction: 0.75,
            strength: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepMethod {
    Rk4,
    /// Forward Euler drift. Only stable when `dt` resolves the fastest
    /// coupling frequency; white-noise runs default to RK4 drift instead.
    EulerMaruyama,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncationConfig {
    pub n_max: usize,
    pub closure: Closure,
    pub dt: f64,
    pub method: StepMethod,
    /// Magnitude beyond which the run is declared unstable.
    pub tolerance: f64,
}

impl TruncationConfig {
    pub fn new(n_max: usize, dt: f64) -> Self {
        Self {
            n_max,
            closure: Closure::ZeroPad,
            dt,
            method: StepMethod::Rk4,
            tolerance: BLOWUP,
        }
    }

    pub fn with_closure(mut self, closure: Closure) -> Self {
        self.closure = closure;
        self
    }

    pub fn with_method(mut self, method: StepMethod) -> Self {
        self.method = method;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.n_max < 4 {
            return Err(CascadeError::invalid("n_max", format!("must be ≥ 4, got {}", self.n_max)));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(CascadeError::invalid("dt", format!("must be > 0, got {}", self.dt)));
        }
        if let Closure::Sponge { start_fraction, strength } = self.closure {
            if !(0.0..1.0).contains(&start_fraction) || strength < 0.0 {
                return Err(CascadeError::invalid("closure", "sponge needs start_fraction in [0,1) and strength ≥ 0"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ForcingMode {
    None,
    Constant,
    WhiteNoise,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForcingSpec {
    pub mode: ForcingMode,
    pub target_mode: usize,
    pub amplitude: f64,
    pub seed: u64,
}

impl ForcingSpec {
    pub fn none() -> Self {
        Self {
            mode: ForcingMode::None,
            target_mode: 1,
            amplitude: 0.0,
            seed: 0,
        }
    }

    pub fn constant(target_mode: usize, amplitude: f64) -> Self {
        Self {
            mode: ForcingMode::Constant,
            target_mode,
            amplitude,
            seed: 0,
        }
    }

    pub fn white_noise(target_mode: usize, amplitude: f64, seed: u64) -> Self {
        Self {
            mode: ForcingMode::WhiteNoise,
            target_mode,
            amplitude,
            seed,
        }
    }

    fn validate(&self, n_max: usize) -> Result<()> {
        if self.target_mode == 0 || self.target_mode > n_max {
            return Err(CascadeError::invalid("m", format!("forcing mode must lie in 1..={n_max}, got {}", self.target_mode)));
        }
        if !self.amplitude.is_finite() {
            return Err(CascadeError::invalid("amplitude", "must be finite"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ViscosityVariant {
    /// `Λ_n = Π_{k<p} (n − 1 − k)`: 1 for `p = 0`, `n − 1` for `p = 1`.
    LambdaProduct,
    /// `Λ_n = n^p`.
    Power,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ViscositySpec {
    pub nu: f64,
    pub p: u8,
    pub variant: ViscosityVariant,
}

impl ViscositySpec {
    pub fn inviscid() -> Self {
        Self {
            nu: 0.0,
            p: 0,
            variant: ViscosityVariant::LambdaProduct,
        }
    }

    pub fn new(nu: f64, p: u8, variant: ViscosityVariant) -> Result<Self> {
        if !(nu >= 0.0 && nu.is_finite()) {
            return Err(CascadeError::invalid("nu", format!("must be ≥ 0, got {nu}")));
        }
        if p > 1 {
            return Err(CascadeError::invalid("p", format!("must be 0 or 1, got {p}")));
        }
        Ok(Self { nu, p, variant })
    }

    pub fn lambda(&self, n: usize) -> f64 {
        match (self.p, self.variant) {
            (0, _) => 1.0,
            (_, ViscosityVariant::LambdaProduct) => (n - 1) as f64,
            (_, ViscosityVariant::Power) => n as f64,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrajectoryRecord {
    pub family: CouplingFamily,
    pub times: Vec<f64>,
    pub states: Vec<ShellSequence>,
    pub diagnostics: Vec<EnergyReport>,
    pub forcing: ForcingSpec,
    pub viscosity: ViscositySpec,
    /// `(time, shell)` of the first entry exceeding the tolerance.
    pub instability: Option<(f64, usize)>,
    pub warnings: Vec<String>,
}

impl TrajectoryRecord {
    pub fn check_stable(&self) -> Result<()> {
        match self.instability {
            Some((time, index)) => Err(CascadeError::Instability { time, index }),
            None => Ok(()),
        }
    }

    pub fn final_state(&self) -> &ShellSequence {
        self.states.last().expect("record holds the initial state")
    }
}

/// Crest position `e^{2t}/4` of the model-A pulse.
pub fn crest_index(t: f64) -> f64 {
    (2.0 * t).exp() / 4.0
}

struct Drift {
    family: CouplingFamily,
    damping: Vec<f64>,
    force: Option<(usize, f64)>,
}

impl Drift {
    fn new(family: CouplingFamily, cfg: &TruncationConfig, forcing: &ForcingSpec, visc: &ViscositySpec) -> Self {
        let n_max = cfg.n_max;
        let damping = (1..=n_max)
            .map(|n| {
                let mut d = 2.0 * visc.nu * visc.lambda(n);
                if let Closure::Sponge { start_fraction, strength } = cfg.closure {
                    let s0 = start_fraction * n_max as f64;
                    let nf = n as f64;
                    if nf > s0 {
                        let x = (nf - s0) / (n_max as f64 - s0);
                        d += strength * family.c(n) * x * x;
                    }
                }
                d
            })
            .collect();
        let force = (forcing.mode == ForcingMode::Constant).then_some((forcing.target_mode, forcing.amplitude));
        Self { family, damping, force }
    }

    fn eval(&self, a: &[f64], out: &mut [f64]) {
        self.family.rhs(a, out);
        for ((o, d), x) in out.iter_mut().zip(&self.damping).zip(a) {
            *o -= d * x;
        }
        if let Some((m, f)) = self.force {
            out[m - 1] += f;
        }
    }
}

struct Stepper {
    k: [Vec<f64>; 4],
    tmp: Vec<f64>,
}

impl Stepper {
    fn new(n: usize) -> Self {
        Self {
            k: [vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]],
            tmp: vec![0.0; n],
        }
    }

    fn rk4(&mut self, drift: &Drift, a: &mut [f64], dt: f64) {
        let n = a.len();
        drift.eval(a, &mut self.k[0]);
        for i in 0..n {
            self.tmp[i] = a[i] + 0.5 * dt * self.k[0][i];
        }
        drift.eval(&self.tmp, &mut self.k[1]);
        for i in 0..n {
            self.tmp[i] = a[i] + 0.5 * dt * self.k[1][i];
        }
        drift.eval(&self.tmp, &mut self.k[2]);
        for i in 0..n {
            self.tmp[i] = a[i] + dt * self.k[2][i];
        }
        drift.eval(&self.tmp, &mut self.k[3]);
        for i in 0..n {
            a[i] += dt / 6.0 * (self.k[0][i] + 2.0 * self.k[1][i] + 2.0 * self.k[2][i] + self.k[3][i]);
        }
    }

    fn euler(&mut self, drift: &Drift, a: &mut [f64], dt: f64) {
        drift.eval(a, &mut self.k[0]);
        for (x, k) in a.iter_mut().zip(&self.k[0]) {
            *x += dt * k;
        }
    }
}

fn integrate(
    family: CouplingFamily,
    initial: &ShellSequence,
    cfg: &TruncationConfig,
    forcing: &ForcingSpec,
    visc: &ViscositySpec,
    t_span: (f64, f64),
    snapshot_times: &[f64],
) -> Result<TrajectoryRecord> {
    cfg.validate()?;
    forcing.validate(cfg.n_max)?;
    let (t0, t1) = t_span;
    if !(t0.is_finite() && t1.is_finite() && t1 >= t0) {
        return Err(CascadeError::invalid("t_span", format!("need finite t0 ≤ t1, got ({t0}, {t1})")));
    }
    let mut targets: Vec<f64> = snapshot_times.iter().copied().filter(|&s| s > t0 && s <= t1).collect();
    if snapshot_times.iter().any(|&s| s < t0 || s > t1 || !s.is_finite()) {
        return Err(CascadeError::invalid("snapshot_times", "all snapshot times must lie in t_span"));
    }
    if targets.windows(2).any(|w| w[1] <= w[0]) {
        return Err(CascadeError::invalid("snapshot_times", "must be strictly increasing"));
    }
    if targets.last().is_none_or(|&l| l < t1) {
        targets.push(t1);
    }

    let n_max = cfg.n_max;
    let mut a: Vec<f64> = (1..=n_max).map(|n| initial.at(n)).collect();
    let mut warnings = Vec::new();
    if initial.n_max() > n_max && initial.values()[n_max..].iter().any(|v| *v != 0.0) {
        warnings.push(format!("initial data truncated from {} to {n_max} shells", initial.n_max()));
    }
    if family == CouplingFamily::ModelB && cfg.dt * (n_max * n_max) as f64 > 0.5 {
        warnings.push(format!(
            "stiffness: dt·n_max² = {:.3} exceeds 0.5; use dt ≤ 0.25/n_max²",
            cfg.dt * (n_max * n_max) as f64
        ));
    }
    let drift = Drift::new(family, cfg, forcing, visc);
    let mut stepper = Stepper::new(n_max);
    let mut rng = ChaCha8Rng::seed_from_u64(forcing.seed);
    let noisy = forcing.mode == ForcingMode::WhiteNoise;
    let cut = (n_max / 2).max(1);

    let snapshot = |a: &[f64], t: f64| -> Result<(ShellSequence, EnergyReport)> {
        let s = ShellSequence::new(a.to_vec(), Provenance::Integrated)?;
        let d = energy_report(&s, 1, cut, family, t)?;
        Ok((s, d))
    };

    let (s0, d0) = snapshot(&a, t0)?;
    let mut rec = TrajectoryRecord {
        family,
        times: vec![t0],
        states: vec![s0],
        diagnostics: vec![d0],
        forcing: *forcing,
        viscosity: *visc,
        instability: None,
        warnings,
    };
    let mut t = t0;
    'segments: for &target in &targets {
        let span = target - t;
        let steps = ((span / cfg.dt) - 1e-9).ceil().max(1.0) as usize;
        let h = span / steps as f64;
        let sqrt_h = h.sqrt();
        for step in 0..steps {
            match cfg.method {
                StepMethod::Rk4 => stepper.rk4(&drift, &mut a, h),
                StepMethod::EulerMaruyama => stepper.euler(&drift, &mut a, h),
            }
            if noisy {
                let xi: f64 = StandardNormal.sample(&mut rng);
                a[forcing.target_mode - 1] += forcing.amplitude * sqrt_h * xi;
            }
            if let Some(i) = a.iter().position(|v| !(v.abs() <= cfg.tolerance)) {
                let when = t + (step + 1) as f64 * h;
                rec.instability = Some((when, i + 1));
                break 'segments;
            }
        }
        t = target;
        let (s, d) = snapshot(&a, t)?;
        rec.times.push(t);
        rec.states.push(s);
        rec.diagnostics.push(d);
    }
    Ok(rec)
}

/// Fixed-step run without snapshots: `observer(t, a)` sees the initial state
/// and the state after every step. Returns the instability point, if any.
#[allow(clippy::too_many_arguments)]
pub fn observe_trajectory<F: FnMut(f64, &[f64])>(
    family: CouplingFamily,
    initial: &ShellSequence,
    cfg: &TruncationConfig,
    forcing: &ForcingSpec,
    visc: &ViscositySpec,
    t_span: (f64, f64),
    mut observer: F,
) -> Result<Option<(f64, usize)>> {
    cfg.validate()?;
    forcing.validate(cfg.n_max)?;
    let (t0, t1) = t_span;
    if !(t0.is_finite() && t1.is_finite() && t1 > t0) {
        return Err(CascadeError::invalid("t_span", format!("need finite t0 < t1, got ({t0}, {t1})")));
    }
    let n_max = cfg.n_max;
    let mut a: Vec<f64> = (1..=n_max).map(|n| initial.at(n)).collect();
    let drift = Drift::new(family, cfg, forcing, visc);
    let mut stepper = Stepper::new(n_max);
    let mut rng = ChaCha8Rng::seed_from_u64(forcing.seed);
    let steps = (((t1 - t0) / cfg.dt) - 1e-9).ceil().max(1.0) as usize;
    let h = (t1 - t0) / steps as f64;
    observer(t0, &a);
    for step in 0..steps {
        match cfg.method {
            StepMethod::Rk4 => stepper.rk4(&drift, &mut a, h),
            StepMethod::EulerMaruyama => stepper.euler(&drift, &mut a, h),
        }
        if forcing.mode == ForcingMode::WhiteNoise {
            let xi: f64 = StandardNormal.sample(&mut rng);
            a[forcing.target_mode - 1] += forcing.amplitude * h.sqrt() * xi;
        }
        let t = t0 + (step + 1) as f64 * h;
        if let Some(i) = a.iter().position(|v| !(v.abs() <= cfg.tolerance)) {
            return Ok(Some((t, i + 1)));
        }
        observer(t, &a);
    }
    Ok(None)
}

/// Model A: `ȧ_n = (n−1) a_{n−1} − n a_{n+1} − 2ν Λ_n a_n + 𝟙_{n=m} f`.
pub fn integrate_model_a(
    initial: &ShellSequence,
    cfg: &TruncationConfig,
    forcing: &ForcingSpec,
    visc: &ViscositySpec,
    t_span: (f64, f64),
    snapshot_times: &[f64],
) -> Result<TrajectoryRecord> {
    integrate(CouplingFamily::ModelA, initial, cfg, forcing, visc, t_span, snapshot_times)
}

/// Model B: `ḃ_n = (n−1)(n−½) b_{n−1} − n(n+½) b_{n+1} + 𝟙_{n=m} f`.
pub fn integrate_model_b(
    initial: &ShellSequence,
    cfg: &TruncationConfig,
    forcing: &ForcingSpec,
    t_span: (f64, f64),
    snapshot_times: &[f64],
) -> Result<TrajectoryRecord> {
    integrate(
        CouplingFamily::ModelB,
        initial,
        cfg,
        forcing,
        &ViscositySpec::inviscid(),
        t_span,
        snapshot_times,
    )
}

/// `max_t |E(t) − E(0)| / E(0)` over the stored snapshots.
pub fn energy_drift(rec: &TrajectoryRecord) -> Result<f64> {
    let e0 = rec.states.first().map(|s| s.energy()).unwrap_or(0.0);
    if e0 == 0.0 {
        return Err(CascadeError::ZeroEnergy);
    }
    Ok(rec
        .states
        .iter()
        .map(|s| (s.energy() - e0).abs() / e0)
        .fold(0.0, f64::max))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BalanceReport {
    /// Time and ensemble average of `ν Σ Λ_n a_n²` over the last half.
    pub estimate: f64,
    pub first_quarter: f64,
    pub second_quarter: f64,
    /// Itô balance: noise of intensity `σ` injects `σ²/2` into `E‖a‖²/2`,
    /// which the damping `2νΛ_n` removes at rate `2ν Σ Λ_n a_n²`, so the
    /// estimate tends to `σ²/4`.
    pub predicted: f64,
}

/// Injection–dissipation audit for white-noise-forced viscous runs.
pub fn viscous_equilibrium_balance(records: &[TrajectoryRecord], visc: &ViscositySpec) -> Result<BalanceReport> {
    let first = records.first().ok_or(CascadeError::InsufficientData { needed: 1, got: 0 })?;
    if records.iter().any(|r| r.forcing.mode != ForcingMode::WhiteNoise || r.forcing.amplitude == 0.0) {
        return Err(CascadeError::NoInjection);
    }
    if visc.nu <= 0.0 {
        return Err(CascadeError::invalid("nu", "balance needs nu > 0"));
    }
    let mut q1 = Vec::new();
    let mut q2 = Vec::new();
    for r in records {
        let len = r.states.len();
        if len < 8 {
            return Err(CascadeError::InsufficientData { needed: 8, got: len });
        }
        let half = len / 2;
        let mid = half + (len - half) / 2;
        for (i, s) in r.states.iter().enumerate().skip(half) {
            let v = visc.nu
                * compensated_sum(s.values().iter().enumerate().map(|(k, a)| visc.lambda(k + 1) * a * a));
            if i < mid {
                q1.push(v);
            } else {
                q2.push(v);
            }
        }
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let (a, b) = (mean(&q1), mean(&q2));
    let estimate = (a * q1.len() as f64 + b * q2.len() as f64) / (q1.len() + q2.len()) as f64;
    if (a - b).abs() > 0.1 * estimate.abs() {
        return Err(CascadeError::NotEquilibrated { first: a, second: b });
    }
    Ok(BalanceReport {
        estimate,
        first_quarter: a,
        second_quarter: b,
        predicted: first.forcing.amplitude.powi(2) / 4.0,
    })
}

/// Runs one white-noise realisation per seed in parallel, returned in seed order.
#[allow(clippy::too_many_arguments)]
pub fn white_noise_ensemble(
    family: CouplingFamily,
    initial: &ShellSequence,
    cfg: &TruncationConfig,
    template: &ForcingSpec,
    visc: &ViscositySpec,
    t_span: (f64, f64),
    snapshot_times: &[f64],
    seeds: &[u64],
) -> Result<Vec<TrajectoryRecord>> {
    seeds
        .par_iter()
        .map(|&seed| {
            let forcing = ForcingSpec { seed, ..*template };
            integrate(family, initial, cfg, &forcing, visc, t_span, snapshot_times)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn delta(n_max: usize) -> ShellSequence {
        ShellSequence::from_fn(n_max, Provenance::Explicit, |n| if n == 1 { 1.0 } else { 0.0 }).unwrap()
    }

    #[test]
    fn zero_state_stays_zero() {
        let zero = ShellSequence::zeros(32).unwrap();
        let cfg = TruncationConfig::new(32, 1e-2);
        let rec = integrate_model_a(&zero, &cfg, &ForcingSpec::none(), &ViscositySpec::inviscid(), (0.0, 1.0), &[0.5]).unwrap();
        assert!(rec.final_state().values().iter().all(|v| *v == 0.0));
        let rec = integrate_model_b(&zero, &TruncationConfig::new(32, 1e-4), &ForcingSpec::none(), (0.0, 0.1), &[]).unwrap();
        assert!(rec.final_state().values().iter().all(|v| *v == 0.0));
        assert_eq!(energy_drift(&rec), Err(CascadeError::ZeroEnergy));
    }

    #[test]
    fn model_b_first_step() {
        let dt = 1e-4;
        let rec = integrate_model_b(&delta(16), &TruncationConfig::new(16, dt), &ForcingSpec::none(), (0.0, dt), &[]).unwrap();
        let s = rec.final_state();
        assert!((s.at(2) - 1.5 * dt).abs() < 1e-10);
        assert!((s.at(1) - 1.0).abs() < 1e-7);
    }

    #[test]
    fn snapshots_hit_requested_times() {
        let rec = integrate_model_a(&delta(32), &TruncationConfig::new(32, 0.03), &ForcingSpec::none(), &ViscositySpec::inviscid(), (0.0, 1.0), &[0.1, 0.35, 1.0]).unwrap();
        assert_eq!(rec.times, vec![0.0, 0.1, 0.35, 1.0]);
        assert_eq!(rec.states.len(), 4);
    }

    #[test]
    fn seeded_noise_is_reproducible() {
        let cfg = TruncationConfig::new(16, 1e-3);
        let f = ForcingSpec::white_noise(1, 1.0, 42);
        let visc = ViscositySpec::new(0.5, 0, ViscosityVariant::LambdaProduct).unwrap();
        let zero = ShellSequence::zeros(16).unwrap();
        let a = integrate_model_a(&zero, &cfg, &f, &visc, (0.0, 1.0), &[]).unwrap();
        let b = integrate_model_a(&zero, &cfg, &f, &visc, (0.0, 1.0), &[]).unwrap();
        assert_eq!(a.final_state(), b.final_state());
        let c = integrate_model_a(&zero, &cfg, &ForcingSpec { seed: 43, ..f }, &visc, (0.0, 1.0), &[]).unwrap();
        assert_ne!(a.final_state(), c.final_state());
    }

    #[test]
    fn instability_is_reported_not_fatal() {
        let data = ShellSequence::from_fn(64, Provenance::Explicit, |n| (-1f64).powi(n as i32 + 1) * 2f64.powi(n as i32)).unwrap();
        let rec = integrate_model_a(&data, &TruncationConfig::new(64, 1e-3), &ForcingSpec::none(), &ViscositySpec::inviscid(), (0.0, 2.0), &[]).unwrap();
        assert!(rec.instability.is_some());
        assert!(matches!(rec.check_stable(), Err(CascadeError::Instability { .. })));
    }

    #[test]
    fn stiffness_warning_for_model_b() {
        let rec = integrate_model_b(&delta(64), &TruncationConfig::new(64, 1e-3), &ForcingSpec::none(), (0.0, 1e-3), &[]).unwrap();
        assert!(rec.warnings.iter().any(|w| w.contains("stiffness")));
    }

    #[test]
    fn viscosity_validation() {
        assert!(ViscositySpec::new(-0.1, 0, ViscosityVariant::LambdaProduct).is_err());
        assert!(ViscositySpec::new(0.1, 2, ViscosityVariant::LambdaProduct).is_err());
        let v = ViscositySpec::new(0.1, 1, ViscosityVariant::LambdaProduct).unwrap();
        assert_eq!(v.lambda(1), 0.0);
        assert_eq!(v.lambda(5), 4.0);
        let w = ViscositySpec::new(0.1, 1, ViscosityVariant::Power).unwrap();
        assert_eq!(w.lambda(5), 5.0);
    }

    #[test]
    fn unforced_balance_is_rejected() {
        let rec = integrate_model_a(&delta(8), &TruncationConfig::new(8, 1e-2), &ForcingSpec::none(), &ViscositySpec::inviscid(), (0.0, 1.0), &[]).unwrap();
        let visc = ViscositySpec::new(0.5, 0, ViscosityVariant::LambdaProduct).unwrap();
        assert_eq!(viscous_equilibrium_balance(&[rec], &visc).unwrap_err(), CascadeError::NoInjection);
    }
}
