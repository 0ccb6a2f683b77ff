//! Exact model-A solver on generating functions.
//!
//! `G(z, t) = Σ a_{n+1}(t) z^n` evolves by the Möbius semigroup
//! `(S_t f)(z) = ψ_t(z) f(φ_t(z)) / cosh t` with `φ_t(z) = (z − τ)/(1 − zτ)`,
//! `ψ_t(z) = 1/(1 − zτ)` and `τ = tanh t`. Coefficients are read back with a
//! discrete Fourier transform on a circle inside the disk of analyticity.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::asymptotics::SingularityDescriptor;
use crate::error::{CascadeError, Result};
use crate::model_core::{blowup_horizon, radius_of_convergence, Provenance, ShellSequence};
use crate::numerics::{central_binomial_ratios, compensated_sum};

const MAX_SAMPLES: usize = 1 << 16;
const ALIAS_TOL: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MoebiusParams {
    t: f64,
    tau: f64,
}

impl MoebiusParams {
    pub fn new(t: f64) -> Result<Self> {
        if !(t.is_finite() && t >= 0.0) {
            return Err(CascadeError::invalid("t", format!("must be finite and ≥ 0, got {t}")));
        }
        Ok(Self { t, tau: t.tanh() })
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    fn check_pole(&self, z: Complex64) -> Result<Complex64> {
        let d = Complex64::new(1.0, 0.0) - z * self.tau;
        if d.norm() < 1e-12 {
            return Err(CascadeError::PoleProximity { re: z.re, im: z.im });
        }
        Ok(d)
    }
}

/// `φ_t(z) = (z − τ)/(1 − zτ)`.
pub fn mobius_phi(p: &MoebiusParams, z: Complex64) -> Result<Complex64> {
    let d = p.check_pole(z)?;
    Ok((z - p.tau) / d)
}

/// `ψ_t(z) = 1/(1 − zτ)`.
pub fn mobius_psi(p: &MoebiusParams, z: Complex64) -> Result<Complex64> {
    let d = p.check_pole(z)?;
    Ok(d.inv())
}

/// `φ_t^{-1}(w) = (w + τ)/(1 + wτ)`; `None` when the image is the point at infinity.
pub fn mobius_phi_inverse(p: &MoebiusParams, w: Complex64) -> Option<Complex64> {
    let d = Complex64::new(1.0, 0.0) + w * p.tau;
    if d.norm() == 0.0 {
        None
    } else {
        Some((w + p.tau) / d)
    }
}

/// The six worked examples of model A, described by their initial data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CatalogExample {
    id: u8,
    alpha: f64,
}

impl CatalogExample {
    /// `alpha` is required (and must exceed 1) for example 6 only.
    pub fn new(id: u8, alpha: Option<f64>) -> Result<Self> {
        match id {
            1..=5 => Ok(Self { id, alpha: f64::NAN }),
            6 => {
                let alpha = alpha.ok_or(CascadeError::MissingParameter("alpha"))?;
                if !(alpha > 1.0 && alpha.is_finite()) {
                    return Err(CascadeError::invalid("alpha", format!("example 6 needs alpha > 1, got {alpha}")));
                }
                Ok(Self { id, alpha })
            }
            _ => Err(CascadeError::invalid("example_id", format!("must be 1..=6, got {id}"))),
        }
    }

    pub fn id(&self) -> u8 {
        self.id
    }

    pub fn alpha(&self) -> Option<f64> {
        (self.id == 6).then_some(self.alpha)
    }

    pub fn horizon(&self) -> f64 {
        if self.id == 6 {
            (1.0 / self.alpha).atanh()
        } else {
            f64::INFINITY
        }
    }

    fn eval_initial(&self, z: Complex64) -> Complex64 {
        let one = Complex64::new(1.0, 0.0);
        match self.id {
            1 => one,
            2 => (one - z).sqrt().inv(),
            3 => (one - z).inv(),
            4 => (one - z * z).sqrt().inv(),
            5 => (one + z).inv(),
            _ => self.alpha / (one + z * self.alpha),
        }
    }

    fn singular_points(&self) -> Vec<Complex64> {
        let c = |x: f64| Complex64::new(x, 0.0);
        match self.id {
            1 => vec![],
            2 | 3 => vec![c(1.0)],
            4 => vec![c(1.0), c(-1.0)],
            5 => vec![c(-1.0)],
            _ => vec![c(-1.0 / self.alpha)],
        }
    }

    /// Initial shell data `a_n(0)` for `n = 1..=n_max`.
    pub fn initial_sequence(&self, n_max: usize) -> Result<ShellSequence> {
        self.closed_form(n_max, 0.0).map(|v| {
            ShellSequence::new(v, Provenance::ClosedFormSampled).expect("finite closed form")
        })
    }

    /// Printed closed form `a_n(t)` for `n = 1..=n_max`.
    pub fn closed_form(&self, n_max: usize, t: f64) -> Result<Vec<f64>> {
        (1..=n_max).map(|n| closed_form_example(*self, n, t)).collect()
    }
}

/// Printed closed-form solution of the catalog example at shell `n`, time `t`.
pub fn closed_form_example(ex: CatalogExample, n: usize, t: f64) -> Result<f64> {
    if n == 0 {
        return Err(CascadeError::invalid("n", "shell indices start at 1"));
    }
    if !(t.is_finite() && t >= 0.0) {
        return Err(CascadeError::invalid("t", format!("must be finite and ≥ 0, got {t}")));
    }
    let sign = if n % 2 == 1 { 1.0 } else { -1.0 };
    Ok(match ex.id {
        1 => t.tanh().powi(n as i32 - 1) / t.cosh(),
        2 => {
            let k = n - 1;
            let c = central_binomial_ratios(k + 1);
            let tau = t.tanh();
            // Accumulate τ^{k−m} by repeated multiplication from m = k downward.
            let mut terms = Vec::with_capacity(k + 1);
            let mut pow = 1.0;
            for m in (0..=k).rev() {
                terms.push(c[k - m] * c[m] * pow);
                pow *= tau;
            }
            (-t / 2.0).exp() / t.cosh().sqrt() * compensated_sum(terms)
        }
        3 => (-t).exp(),
        4 => {
            if n % 2 == 1 {
                central_binomial_ratios((n - 1) / 2 + 1)[(n - 1) / 2]
            } else {
                0.0
            }
        }
        5 => sign * t.exp(),
        _ => {
            let horizon = ex.horizon();
            if t >= horizon {
                return Err(CascadeError::HorizonExceeded { t, horizon });
            }
            sign * ex.alpha.powi(n as i32) / (t.cosh() - ex.alpha * t.sinh())
        }
    })
}

/// Solution of the evolution equation from `a_n(0) = (−1)^{n+1} α^n`:
/// `a_n(t) = (α/D) (−r)^{n−1}` with `D = cosh t − α sinh t` and
/// `r = (α cosh t − sinh t)/D`.
pub fn finite_time_explosion_solution(alpha: f64, n: usize, t: f64) -> Result<f64> {
    let horizon = (1.0 / alpha).atanh();
    if t >= horizon {
        return Err(CascadeError::HorizonExceeded { t, horizon });
    }
    let d = t.cosh() - alpha * t.sinh();
    let r = (alpha * t.cosh() - t.sinh()) / d;
    Ok(alpha / d * (-r).powi(n as i32 - 1))
}

#[derive(Debug, Clone, PartialEq)]
pub enum CatalogForm {
    Example(CatalogExample),
    /// `A √2 / √(1 − z²)`: the one-parameter family of fixed points.
    FixedPoint { amplitude: f64 },
    /// `z^p`: a unit of mass at shell `p + 1`.
    Monomial { power: u32 },
    Constant(f64),
}

#[derive(Debug, Clone)]
pub enum GeneratingFunction {
    Catalog(CatalogForm),
    Coefficients(ShellSequence),
    Singular {
        terms: Vec<SingularityDescriptor>,
        remainder: Option<Arc<GeneratingFunction>>,
    },
    Evolved {
        base: Arc<GeneratingFunction>,
        params: MoebiusParams,
    },
}

impl GeneratingFunction {
    pub fn example(id: u8, alpha: Option<f64>) -> Result<Self> {
        Ok(GeneratingFunction::Catalog(CatalogForm::Example(CatalogExample::new(id, alpha)?)))
    }

    pub fn fixed_point(amplitude: f64) -> Self {
        GeneratingFunction::Catalog(CatalogForm::FixedPoint { amplitude })
    }

    pub fn monomial(power: u32) -> Self {
        GeneratingFunction::Catalog(CatalogForm::Monomial { power })
    }

    pub fn constant(c: f64) -> Self {
        GeneratingFunction::Catalog(CatalogForm::Constant(c))
    }

    pub fn singular(terms: Vec<SingularityDescriptor>, remainder: Option<GeneratingFunction>) -> Self {
        GeneratingFunction::Singular {
            terms,
            remainder: remainder.map(Arc::new),
        }
    }

    pub fn eval(&self, z: Complex64) -> Result<Complex64> {
        Ok(match self {
            GeneratingFunction::Catalog(form) => match form {
                CatalogForm::Example(ex) => ex.eval_initial(z),
                CatalogForm::FixedPoint { amplitude } => {
                    amplitude * std::f64::consts::SQRT_2 / (Complex64::new(1.0, 0.0) - z * z).sqrt()
                }
                CatalogForm::Monomial { power } => z.powu(*power),
                CatalogForm::Constant(c) => Complex64::new(*c, 0.0),
            },
            GeneratingFunction::Coefficients(seq) => {
                let mut acc = Complex64::new(0.0, 0.0);
                for &a in seq.values().iter().rev() {
                    acc = acc * z + a;
                }
                acc
            }
            GeneratingFunction::Singular { terms, remainder } => {
                let mut acc: Complex64 = terms.iter().map(|d| d.local_form(z)).sum();
                if let Some(rem) = remainder {
                    acc += rem.eval(z)?;
                }
                acc
            }
            GeneratingFunction::Evolved { base, params } => {
                let w = mobius_phi(params, z)?;
                let psi = mobius_psi(params, z)?;
                psi * base.eval(w)? / params.t.cosh()
            }
        })
    }

    /// Known singular points of `G` (poles, branch points and, for raw
    /// coefficients, the two real points on the estimated circle of convergence).
    pub fn singular_points(&self) -> Vec<Complex64> {
        match self {
            GeneratingFunction::Catalog(form) => match form {
                CatalogForm::Example(ex) => ex.singular_points(),
                CatalogForm::FixedPoint { .. } => {
                    vec![Complex64::new(1.0, 0.0), Complex64::new(-1.0, 0.0)]
                }
                CatalogForm::Monomial { .. } | CatalogForm::Constant(_) => vec![],
            },
            GeneratingFunction::Coefficients(seq) => {
                let rho = if seq.n_max() >= 16 {
                    radius_of_convergence(seq).unwrap_or(f64::INFINITY)
                } else {
                    f64::INFINITY
                };
                // Beyond radius 2 the stored polynomial is treated as entire.
                if rho <= 2.0 {
                    vec![Complex64::new(rho, 0.0), Complex64::new(-rho, 0.0)]
                } else {
                    vec![]
                }
            }
            GeneratingFunction::Singular { terms, remainder } => {
                let mut pts: Vec<Complex64> = Vec::new();
                for d in terms {
                    pts.push(d.zeta);
                    if d.with_conjugate {
                        pts.push(d.zeta.conj());
                    }
                }
                if let Some(rem) = remainder {
                    pts.extend(rem.singular_points());
                }
                pts
            }
            GeneratingFunction::Evolved { base, params } => {
                let mut pts: Vec<Complex64> = base
                    .singular_points()
                    .into_iter()
                    .filter_map(|w| mobius_phi_inverse(params, w))
                    .collect();
                if params.tau > 0.0 {
                    pts.push(Complex64::new(1.0 / params.tau, 0.0));
                }
                pts
            }
        }
    }

    /// Distance from the origin to the nearest known singular point.
    pub fn radius(&self) -> f64 {
        self.singular_points()
            .iter()
            .map(|p| p.norm())
            .fold(f64::INFINITY, f64::min)
    }

    /// Remaining existence time: the first singular point on `(−1, 0]` reaches 0
    /// after `arctanh(|x|)`.
    pub fn horizon(&self) -> f64 {
        self.singular_points()
            .iter()
            .filter(|p| p.im.abs() <= 1e-14 * p.re.abs().max(1.0) && p.re <= 0.0 && p.re > -1.0)
            .map(|p| blowup_horizon(-p.re).unwrap_or(0.0))
            .fold(f64::INFINITY, f64::min)
    }

    fn has_recorded_singularities(&self) -> bool {
        match self {
            GeneratingFunction::Singular { .. } => true,
            GeneratingFunction::Evolved { base, .. } => base.has_recorded_singularities(),
            _ => false,
        }
    }
}

/// `S_t G0`, exact composition with the Möbius maps.
pub fn apply_semigroup(g0: &GeneratingFunction, t: f64) -> Result<GeneratingFunction> {
    let params = MoebiusParams::new(t)?;
    let horizon = g0.horizon();
    if t >= horizon {
        if g0.has_recorded_singularities() {
            let tau = params.tau;
            let loc = g0
                .singular_points()
                .into_iter()
                .filter(|p| p.im.abs() < 1e-14 && p.re <= 0.0 && p.re >= -tau)
                .map(|p| p.re)
                .next()
                .unwrap_or(-tau);
            return Err(CascadeError::AnalyticityViolation { location: loc });
        }
        return Err(CascadeError::HorizonExceeded { t, horizon });
    }
    if t == 0.0 {
        return Ok(g0.clone());
    }
    Ok(GeneratingFunction::Evolved {
        base: Arc::new(g0.clone()),
        params,
    })
}

/// Taylor coefficients together with their per-coefficient error estimate.
#[derive(Debug, Clone)]
pub struct Extraction {
    pub coeffs: ShellSequence,
    pub error: Vec<f64>,
    pub radius: f64,
    pub samples: usize,
}

fn samples_needed(r: f64, rho: f64, n_max: usize) -> usize {
    let base = (4 * n_max).max(64).next_power_of_two();
    if !rho.is_finite() {
        return base;
    }
    let q = r / rho;
    let extra = (ALIAS_TOL.ln() / q.ln()).ceil() as usize + n_max;
    base.max(extra.next_power_of_two())
}

fn dft_coefficients(g: &GeneratingFunction, r: f64, m: usize, n_max: usize) -> Result<(Vec<f64>, f64)> {
    let mut buf = Vec::with_capacity(m);
    let mut max_abs = 0.0_f64;
    for j in 0..m {
        let theta = 2.0 * std::f64::consts::PI * j as f64 / m as f64;
        let z = Complex64::from_polar(r, theta);
        let v = g.eval(z)?;
        if !v.is_finite() {
            return Err(CascadeError::RadiusSelectionFailure { max_samples: MAX_SAMPLES });
        }
        max_abs = max_abs.max(v.norm());
        buf.push(v);
    }
    let mut planner = FftPlanner::<f64>::new();
    planner.plan_fft_forward(m).process(&mut buf);
    let ln_r = r.ln();
    let coeffs = (0..n_max)
        .map(|n| buf[n].re / m as f64 * (-(n as f64) * ln_r).exp())
        .collect();
    Ok((coeffs, max_abs))
}

/// First `n_max` Taylor coefficients of `G` about 0, i.e. `a_1..a_{n_max}`.
pub fn taylor_coeffs(g: &GeneratingFunction, n_max: usize, radius_hint: Option<f64>) -> Result<ShellSequence> {
    taylor_coeffs_with_error(g, n_max, radius_hint).map(|e| e.coeffs)
}

/// Coefficient extraction with explicit error control.
///
/// The sampling radius sits just inside the nearest singularity,
/// `r = ρ·max(0.9, 1 − 1/n_max)`, which keeps the roundoff amplification
/// `r^{−n}` bounded for every requested coefficient. The sample count is set
/// from the aliasing bound `(r/ρ)^M` and verified by one doubling.
pub fn taylor_coeffs_with_error(
    g: &GeneratingFunction,
    n_max: usize,
    radius_hint: Option<f64>,
) -> Result<Extraction> {
    if n_max == 0 {
        return Err(CascadeError::invalid("n_max", "must be ≥ 1"));
    }
    let rho = g.radius();
    let candidates: Vec<f64> = match radius_hint {
        Some(r) => {
            if !(r > 0.0 && r < rho) {
                return Err(CascadeError::invalid(
                    "radius_hint",
                    format!("must lie in (0, {rho}), got {r}"),
                ));
            }
            vec![r]
        }
        None if rho.is_infinite() => vec![1.0],
        None => {
            let nf = n_max as f64;
            let mut v: Vec<f64> = [1.0, 2.0, 4.0, 8.0]
                .iter()
                .map(|k| rho * (1.0 - k / nf).max(0.9))
                .collect();
            v.dedup();
            v
        }
    };
    for r in candidates {
        let m = samples_needed(r, rho, n_max);
        if 2 * m > MAX_SAMPLES {
            continue;
        }
        let (coarse, _) = dft_coefficients(g, r, m, n_max)?;
        let (fine, max_abs) = dft_coefficients(g, r, 2 * m, n_max)?;
        let scale = fine.iter().fold(0.0_f64, |a, c| a.max(c.abs())).max(f64::MIN_POSITIVE);
        let alias = coarse
            .iter()
            .zip(&fine)
            .fold(0.0_f64, |a, (c, f)| a.max((c - f).abs()));
        let roundoff = 8.0 * f64::EPSILON * max_abs * ((2 * m) as f64).log2();
        if alias > 1e-10 * scale + roundoff * r.powi(-(n_max as i32)) {
            continue;
        }
        let ln_r = r.ln();
        let error = coarse
            .iter()
            .zip(&fine)
            .enumerate()
            .map(|(n, (c, f))| (c - f).abs() + roundoff * (-(n as f64) * ln_r).exp())
            .collect();
        return Ok(Extraction {
            coeffs: ShellSequence::new(fine, Provenance::ClosedFormSampled)?,
            error,
            radius: r,
            samples: 2 * m,
        });
    }
    Err(CascadeError::RadiusSelectionFailure { max_samples: MAX_SAMPLES })
}

/// `max_{n ≤ n_max} |coeff_n(S_t S_s G0) − coeff_n(S_{t+s} G0)|`.
pub fn semigroup_compose_check(g0: &GeneratingFunction, s: f64, t: f64, n_max: usize) -> Result<f64> {
    let stepwise = apply_semigroup(&apply_semigroup(g0, s)?, t)?;
    let direct = apply_semigroup(g0, s + t)?;
    let a = taylor_coeffs(&stepwise, n_max, None)?;
    let b = taylor_coeffs(&direct, n_max, None)?;
    Ok(a.values()
        .iter()
        .zip(b.values())
        .fold(0.0_f64, |m, (x, y)| m.max((x - y).abs())))
}

/// Fixed point `ā_{2k+1} = A √2 (2k)!/(4^k (k!)²)`, even entries zero.
pub fn fixed_point_coeffs(amplitude: f64, n_max: usize) -> Result<ShellSequence> {
    let c = central_binomial_ratios(n_max.div_ceil(2));
    ShellSequence::from_fn(n_max, Provenance::ClosedFormSampled, |n| {
        if n % 2 == 1 {
            amplitude * std::f64::consts::SQRT_2 * c[(n - 1) / 2]
        } else {
            0.0
        }
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AbelLimit {
    /// `G0⁺(−1)` and the long-time amplitude `2·G0⁺(−1)` of `a_n(t) e^t`.
    Finite {
        boundary_value: f64,
        prefactor: f64,
        correction: f64,
    },
    Divergent {
        last_value: f64,
    },
}

/// Abel limit of `G0` at `−1` by Richardson extrapolation along `x = −1 + 2^{−k}`.
pub fn abel_decay_prefactor(g0: &GeneratingFunction) -> Result<AbelLimit> {
    let limit_k = match g0 {
        GeneratingFunction::Coefficients(seq) => {
            // Stop once the stored polynomial no longer represents the series.
            let n = seq.n_max() as f64;
            (4..=20).take_while(|k| (1.0 - 2f64.powi(-k)).powf(n) < 1e-13).last().unwrap_or(4)
        }
        _ => 20,
    };
    let mut values = Vec::new();
    for k in 4..=limit_k {
        let x = -1.0 + 2f64.powi(-k);
        let v = g0.eval(Complex64::new(x, 0.0))?.re;
        if !v.is_finite() || v.abs() > 1e12 {
            return Ok(AbelLimit::Divergent { last_value: v });
        }
        values.push(v);
    }
    if values.len() < 4 {
        return Err(CascadeError::InsufficientData {
            needed: 4,
            got: values.len(),
        });
    }
    let diffs: Vec<f64> = values.windows(2).map(|w| w[1] - w[0]).collect();
    let growing = diffs
        .windows(2)
        .rev()
        .take(3)
        .all(|w| w[1].abs() >= 0.9 * w[0].abs() && w[1].abs() > 1e-9 * (1.0 + values[0].abs()));
    if growing {
        return Ok(AbelLimit::Divergent {
            last_value: *values.last().expect("nonempty"),
        });
    }
    let (lim, correction) = crate::numerics::richardson_halving(&values);
    Ok(AbelLimit::Finite {
        boundary_value: lim,
        prefactor: 2.0 * lim,
        correction,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShiftedMass {
    /// `a_n(t)` from coefficient extraction.
    pub value: f64,
    /// Remainder coefficient of the decomposition, from the extracted value.
    pub beta: f64,
    /// Bound on `|β|` that the decomposition respects.
    pub beta_bound: f64,
    /// Bound as printed for the power-law case; differs from `beta_bound`
    /// only when the shell sits above the initial mass.
    pub printed_bound: f64,
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Solution from `G0(z) = z^p` (unit mass at shell `p + 1`) at shell `n`.
///
/// With `j = n − 1` the power of `z`, the coefficient splits as
/// `[(−1)^p τ^{j+p} + β τ^{j − min(p, j)}] / cosh t`.
pub fn shifted_mass_solution(p: u32, n: usize, t: f64) -> Result<ShiftedMass> {
    if n == 0 {
        return Err(CascadeError::invalid("n", "shell indices start at 1"));
    }
    let params = MoebiusParams::new(t)?;
    let g = apply_semigroup(&GeneratingFunction::monomial(p), t)?;
    let value = taylor_coeffs(&g, n, None)?.at(n);
    let tau = params.tau;
    let j = n - 1;
    let pu = p as usize;
    let lo = pu.min(j);
    let sign_p = if p.is_multiple_of(2) { 1.0 } else { -1.0 };
    let leading = sign_p * tau.powi((j + pu) as i32);
    let exact_beta: f64 = (1..=lo)
        .map(|k| {
            binomial(pu, k)
                * binomial(j, k)
                * (1.0 - tau * tau).powi(k as i32)
                * tau.powi((lo - k) as i32)
                * (-tau).powi((pu - k) as i32)
        })
        .sum();
    let scale = tau.powi((j - lo) as i32);
    let beta = if scale > 1e-200 {
        (value * t.cosh() - leading) / scale
    } else {
        exact_beta
    };
    let jf = j as f64;
    let t2 = tau * tau;
    let printed_bound = if j >= pu {
        jf.powi(p as i32) * (1.0 - t2.powi(p as i32))
    } else {
        jf.powi(p as i32) * tau.powi((pu - j) as i32) * (1.0 - t2.powi(j as i32))
    };
    let beta_bound = if j >= pu {
        printed_bound
    } else {
        (1..=j)
            .map(|k| {
                binomial(pu, k) * binomial(j, k) * (1.0 - t2).powi(k as i32) * tau.powi((pu + j - 2 * k) as i32)
            })
            .sum()
    };
    if beta.abs() > beta_bound * (1.0 + 1e-9) + 1e-10 {
        return Err(CascadeError::BoundViolated {
            beta,
            bound: beta_bound,
        });
    }
    Ok(ShiftedMass {
        value,
        beta,
        beta_bound,
        printed_bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn moebius_examples() {
        for t in [0.0, 0.3, 1.7] {
            let p = MoebiusParams::new(t).unwrap();
            assert!((mobius_phi(&p, c(0.0)).unwrap() - c(-t.tanh())).norm() < 1e-16);
            assert!((mobius_phi(&p, c(1.0)).unwrap() - c(1.0)).norm() < 1e-15);
            assert!((mobius_phi(&p, c(-1.0)).unwrap() - c(-1.0)).norm() < 1e-15);
        }
        let p0 = MoebiusParams::new(0.0).unwrap();
        assert_eq!(mobius_psi(&p0, Complex64::new(0.3, -2.0)).unwrap(), c(1.0));
        let p = MoebiusParams::new(1.0).unwrap();
        assert!(matches!(
            mobius_psi(&p, c(1.0 / 1f64.tanh())),
            Err(CascadeError::PoleProximity { .. })
        ));
        let w = Complex64::new(0.2, 0.4);
        let back = mobius_phi(&p, mobius_phi_inverse(&p, w).unwrap()).unwrap();
        assert!((back - w).norm() < 1e-15);
    }

    #[test]
    fn semigroup_catalog_forms() {
        let t = 0.7;
        let z = Complex64::new(0.3, 0.2);
        let g = apply_semigroup(&GeneratingFunction::example(1, None).unwrap(), t).unwrap();
        let want = (c(t.cosh()) - z * t.sinh()).inv();
        assert!((g.eval(z).unwrap() - want).norm() < 1e-15);
        let g = apply_semigroup(&GeneratingFunction::example(3, None).unwrap(), t).unwrap();
        assert!((g.eval(z).unwrap() - (-t).exp() / (c(1.0) - z)).norm() < 1e-15);
        let g0 = GeneratingFunction::example(4, None).unwrap();
        let g = apply_semigroup(&g0, t).unwrap();
        assert!((g.eval(z).unwrap() - g0.eval(z).unwrap()).norm() < 1e-15);
    }

    #[test]
    fn taylor_examples() {
        let t = 1.0;
        let g = apply_semigroup(&GeneratingFunction::example(1, None).unwrap(), t).unwrap();
        let a = taylor_coeffs(&g, 5, None).unwrap();
        let want = [0.64805, 0.49355, 0.37588, 0.28627, 0.21802];
        for (n, (x, w)) in a.values().iter().zip(want).enumerate() {
            assert!((x - w).abs() < 1e-5);
            let exact = 1f64.tanh().powi(n as i32) / 1f64.cosh();
            assert!((x - exact).abs() < 1e-12);
        }
        let k = taylor_coeffs(&GeneratingFunction::constant(2.5), 6, None).unwrap();
        assert!((k.at(1) - 2.5).abs() < 1e-15);
        assert!(k.values()[1..].iter().all(|v| v.abs() < 1e-15));
        let g = apply_semigroup(&GeneratingFunction::example(3, None).unwrap(), 1.0).unwrap();
        let a = taylor_coeffs(&g, 40, None).unwrap();
        assert!(a.values().iter().all(|v| (v - (-1f64).exp()).abs() < 1e-12));
    }

    #[test]
    fn radius_hint_is_validated() {
        let g = GeneratingFunction::example(3, None).unwrap();
        assert!(taylor_coeffs(&g, 8, Some(1.5)).is_err());
        let a = taylor_coeffs(&g, 8, Some(0.5)).unwrap();
        assert!(a.values().iter().all(|v| (v - 1.0).abs() < 1e-12));
    }

    #[test]
    fn closed_form_examples() {
        let e3 = CatalogExample::new(3, None).unwrap();
        assert!((closed_form_example(e3, 17, 2.0).unwrap() - 0.135335).abs() < 1e-6);
        let e5 = CatalogExample::new(5, None).unwrap();
        assert!((closed_form_example(e5, 4, 1.0).unwrap() + 1f64.exp()).abs() < 1e-15);
        let e1 = CatalogExample::new(1, None).unwrap();
        assert_eq!(closed_form_example(e1, 1, 0.0).unwrap(), 1.0);
        let e6 = CatalogExample::new(6, Some(2.0)).unwrap();
        assert!(matches!(
            closed_form_example(e6, 1, 0.6),
            Err(CascadeError::HorizonExceeded { .. })
        ));
        assert_eq!(CatalogExample::new(6, None), Err(CascadeError::MissingParameter("alpha")));
    }

    #[test]
    fn printed_and_consistent_explosion_forms_agree_only_at_start() {
        for n in 1..10 {
            let printed = closed_form_example(CatalogExample::new(6, Some(1.5)).unwrap(), n, 0.0).unwrap();
            let exact = finite_time_explosion_solution(1.5, n, 0.0).unwrap();
            assert!((printed - exact).abs() < 1e-12 * exact.abs());
        }
        let printed = closed_form_example(CatalogExample::new(6, Some(1.5)).unwrap(), 5, 0.3).unwrap();
        let exact = finite_time_explosion_solution(1.5, 5, 0.3).unwrap();
        assert!((printed - exact).abs() > 1e-3);
    }

    #[test]
    fn explosion_solution_satisfies_the_equation() {
        let (alpha, t, h) = (1.4, 0.3, 1e-5);
        for n in 1..12 {
            let d = (finite_time_explosion_solution(alpha, n, t + h).unwrap()
                - finite_time_explosion_solution(alpha, n, t - h).unwrap())
                / (2.0 * h);
            let lower = if n > 1 {
                (n - 1) as f64 * finite_time_explosion_solution(alpha, n - 1, t).unwrap()
            } else {
                0.0
            };
            let upper = n as f64 * finite_time_explosion_solution(alpha, n + 1, t).unwrap();
            assert!((d - (lower - upper)).abs() < 1e-6 * (1.0 + d.abs()));
        }
    }

    #[test]
    fn fixed_point_family() {
        let a = fixed_point_coeffs(std::f64::consts::FRAC_1_SQRT_2, 7).unwrap();
        let want = [1.0, 0.0, 0.5, 0.0, 0.375, 0.0, 0.3125];
        for (x, w) in a.values().iter().zip(want) {
            assert!((x - w).abs() < 1e-15);
        }
        assert!(fixed_point_coeffs(0.0, 9).unwrap().values().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn abel_prefactors() {
        let lim = |g: GeneratingFunction| abel_decay_prefactor(&g).unwrap();
        match lim(GeneratingFunction::example(3, None).unwrap()) {
            AbelLimit::Finite { boundary_value, prefactor, .. } => {
                assert!((boundary_value - 0.5).abs() < 1e-12);
                assert!((prefactor - 1.0).abs() < 1e-12);
            }
            other => panic!("{other:?}"),
        }
        match lim(GeneratingFunction::example(1, None).unwrap()) {
            AbelLimit::Finite { prefactor, .. } => assert!((prefactor - 2.0).abs() < 1e-12),
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            lim(GeneratingFunction::example(5, None).unwrap()),
            AbelLimit::Divergent { .. }
        ));
    }

    #[test]
    fn shifted_mass_examples() {
        let s = shifted_mass_solution(1, 1, 0.0).unwrap();
        assert!(s.value.abs() < 1e-14);
        let s = shifted_mass_solution(1, 2, 0.0).unwrap();
        assert!((s.value - 1.0).abs() < 1e-14);
        for n in 1..20 {
            let s = shifted_mass_solution(0, n, 0.8).unwrap();
            let want = closed_form_example(CatalogExample::new(1, None).unwrap(), n, 0.8).unwrap();
            assert!((s.value - want).abs() < 1e-13);
        }
        let s = shifted_mass_solution(2, 4, 0.5).unwrap();
        assert!(s.beta.abs() <= 9.0 * (1.0 - 0.5f64.tanh().powi(4)));
        assert_eq!(s.beta_bound, s.printed_bound);
    }
}
