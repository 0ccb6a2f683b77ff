//! Shared state types, the two coupling families, block-energy and
//! boundary-flux diagnostics, and the flux-trace regime classifier.

use crate::error::{CascadeError, Result};
use crate::numerics::{compensated_sum, fit_line};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Explicit,
    ClosedFormSampled,
    Integrated,
}

/// Truncated real sequence `(a_1, …, a_{n_max})`; the virtual `a_0` is zero.
#[derive(Debug, Clone, PartialEq)]
pub struct ShellSequence {
    values: Vec<f64>,
    provenance: Provenance,
}

impl ShellSequence {
    pub fn new(values: Vec<f64>, provenance: Provenance) -> Result<Self> {
        if values.is_empty() {
            return Err(CascadeError::invalid("n_max", "sequence must hold at least one entry"));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(CascadeError::invalid(
                "values",
                format!("entry a_{} is not finite", i + 1),
            ));
        }
        Ok(Self { values, provenance })
    }

    pub fn explicit(values: Vec<f64>) -> Result<Self> {
        Self::new(values, Provenance::Explicit)
    }

    pub fn zeros(n_max: usize) -> Result<Self> {
        Self::new(vec![0.0; n_max], Provenance::Explicit)
    }

    /// Sequence with `a_n = f(n)` for `n = 1..=n_max`.
    pub fn from_fn(n_max: usize, provenance: Provenance, f: impl Fn(usize) -> f64) -> Result<Self> {
        Self::new((1..=n_max).map(f).collect(), provenance)
    }

    pub fn n_max(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    /// `a_n` with the closure convention: zero for `n = 0` and `n > n_max`.
    pub fn at(&self, n: usize) -> f64 {
        if n == 0 {
            0.0
        } else {
            self.values.get(n - 1).copied().unwrap_or(0.0)
        }
    }

    pub fn truncated(&self, n_max: usize) -> Result<Self> {
        if n_max == 0 || n_max > self.n_max() {
            return Err(CascadeError::IndexOutOfRange {
                index: n_max,
                n_max: self.n_max(),
            });
        }
        Self::new(self.values[..n_max].to_vec(), self.provenance)
    }

    /// ℓ² energy of all stored entries.
    pub fn energy(&self) -> f64 {
        compensated_sum(self.values.iter().map(|v| v * v))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CouplingFamily {
    ModelA,
    ModelB,
}

impl CouplingFamily {
    /// Coupling coefficient `c_n`.
    pub fn c(self, n: usize) -> f64 {
        let nf = n as f64;
        match self {
            CouplingFamily::ModelA => nf,
            CouplingFamily::ModelB => nf * (nf + 0.5),
        }
    }

    /// Right-hand side `c_{n-1} a_{n-1} − c_n a_{n+1}` with `a_0 = a_{N+1} = 0`.
    pub fn rhs(self, state: &[f64], out: &mut [f64]) {
        let len = state.len();
        for i in 0..len {
            let n = i + 1;
            let lower = if i > 0 { self.c(n - 1) * state[i - 1] } else { 0.0 };
            let upper = if i + 1 < len { self.c(n) * state[i + 1] } else { 0.0 };
            out[i] = lower - upper;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyReport {
    pub block_energy: f64,
    pub m: usize,
    pub n: usize,
    pub flux_at_n: f64,
    pub time: f64,
}

/// `Σ_{n=M}^{N} a_n²`, summed in increasing `n` with compensation.
pub fn block_energy(seq: &ShellSequence, m: usize, n: usize) -> Result<f64> {
    if n > seq.n_max() {
        return Err(CascadeError::IndexOutOfRange {
            index: n,
            n_max: seq.n_max(),
        });
    }
    if m == 0 || m > n {
        return Err(CascadeError::invalid("M", format!("need 1 ≤ M ≤ N, got M = {m}, N = {n}")));
    }
    Ok(compensated_sum(seq.values()[m - 1..n].iter().map(|v| v * v)))
}

/// `c_N a_N a_{N+1}`, the rate at which block `1..N` loses `E/2`.
pub fn boundary_flux(seq: &ShellSequence, n: usize, family: CouplingFamily) -> Result<f64> {
    if n == 0 || n + 1 > seq.n_max() {
        return Err(CascadeError::IndexOutOfRange {
            index: n + 1,
            n_max: seq.n_max(),
        });
    }
    Ok(family.c(n) * seq.at(n) * seq.at(n + 1))
}

pub fn energy_report(
    seq: &ShellSequence,
    m: usize,
    n: usize,
    family: CouplingFamily,
    time: f64,
) -> Result<EnergyReport> {
    Ok(EnergyReport {
        block_energy: block_energy(seq, m, n)?,
        m,
        n,
        flux_at_n: boundary_flux(seq, n, family)?,
        time,
    })
}

/// Flux trace `(N, c_N a_N a_{N+1})` for `N = 1..n_max-1`.
pub fn flux_trace(seq: &ShellSequence, family: CouplingFamily) -> Vec<(usize, f64)> {
    (1..seq.n_max())
        .map(|n| (n, family.c(n) * seq.at(n) * seq.at(n + 1)))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RegimeLabel {
    Conservative,
    DissipativeFiniteRate,
    DissipativeInfiniteRate,
    ExplosiveFiniteRate,
    ExplosiveInfiniteRate,
    /// Geometric growth of the flux in `N`: the data has radius of
    /// convergence below one and blows up at a finite time.
    ExplosiveFiniteTime,
    FixedPoint,
    Unclassified,
}

impl RegimeLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            RegimeLabel::Conservative => "conservative",
            RegimeLabel::DissipativeFiniteRate => "dissipative_finite_rate",
            RegimeLabel::DissipativeInfiniteRate => "dissipative_infinite_rate",
            RegimeLabel::ExplosiveFiniteRate => "explosive_finite_rate",
            RegimeLabel::ExplosiveInfiniteRate => "explosive_infinite_rate",
            RegimeLabel::ExplosiveFiniteTime => "explosive_finite_time",
            RegimeLabel::FixedPoint => "fixed_point",
            RegimeLabel::Unclassified => "unclassified",
        }
    }

    /// Energy is conserved: either a vanishing flux limit or no flux at all.
    pub fn is_conservative(self) -> bool {
        matches!(self, RegimeLabel::Conservative | RegimeLabel::FixedPoint)
    }
}

impl std::fmt::Display for RegimeLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassifierTolerances {
    /// Tail fluxes below `conservative_rel · (1 + max|flux|)` count as zero.
    pub conservative_rel: f64,
    /// Every flux below this magnitude: no transport at all.
    pub zero_flux: f64,
    /// Power-law growth exponent above which the rate is infinite.
    pub infinite_rate_gamma: f64,
    /// Exponents in `(finite_rate_gamma, infinite_rate_gamma]` are ambiguous.
    pub finite_rate_gamma: f64,
    /// Exponential growth rate per shell above which growth is geometric.
    pub geometric_rate: f64,
    /// Minimum coefficient of determination of the chosen fit.
    pub min_r_squared: f64,
}

impl Default for ClassifierTolerances {
    fn default() -> Self {
        Self {
            conservative_rel: 1e-6,
            zero_flux: 1e-12,
            infinite_rate_gamma: 0.5,
            finite_rate_gamma: 0.25,
            geometric_rate: 1e-2,
            min_r_squared: 0.9,
        }
    }
}

/// Classify a flux trace `(N, c_N a_N a_{N+1})` taken at one time.
///
/// Positive flux drains the block `1..N` (dissipative), negative flux feeds
/// it (explosive). The tail half of the trace decides the limit.
pub fn classify_regime(trace: &[(usize, f64)], tol: &ClassifierTolerances) -> Result<RegimeLabel> {
    if trace.len() < 8 {
        return Err(CascadeError::InsufficientData {
            needed: 8,
            got: trace.len(),
        });
    }
    if trace.windows(2).any(|w| w[1].0 <= w[0].0) {
        return Err(CascadeError::invalid("flux_trace", "N values must increase"));
    }
    if trace.iter().any(|(_, f)| !f.is_finite()) {
        return Ok(RegimeLabel::Unclassified);
    }
    let max_abs = trace.iter().fold(0.0_f64, |m, (_, f)| m.max(f.abs()));
    if max_abs <= tol.zero_flux {
        return Ok(RegimeLabel::FixedPoint);
    }
    let tail = &trace[trace.len() / 2..];
    let scale = 1.0 + max_abs;
    let tail_max = tail.iter().fold(0.0_f64, |m, (_, f)| m.max(f.abs()));
    if tail_max < tol.conservative_rel * scale {
        return Ok(RegimeLabel::Conservative);
    }
    let positive = tail.iter().all(|(_, f)| *f > 0.0);
    let negative = tail.iter().all(|(_, f)| *f < 0.0);
    if !positive && !negative {
        return Ok(RegimeLabel::Unclassified);
    }
    let ns: Vec<f64> = tail.iter().map(|(n, _)| *n as f64).collect();
    let log_n: Vec<f64> = ns.iter().map(|n| n.ln()).collect();
    let log_f: Vec<f64> = tail.iter().map(|(_, f)| f.abs().ln()).collect();
    let (Some(power), Some(expo)) = (fit_line(&log_n, &log_f), fit_line(&ns, &log_f)) else {
        return Ok(RegimeLabel::Unclassified);
    };
    let gamma = power.slope;

    if gamma > tol.infinite_rate_gamma {
        let geometric = expo.r_squared > power.r_squared && expo.slope > tol.geometric_rate;
        if power.r_squared.max(expo.r_squared) < tol.min_r_squared {
            return Ok(RegimeLabel::Unclassified);
        }
        return Ok(match (positive, geometric) {
            (true, _) => RegimeLabel::DissipativeInfiniteRate,
            (false, true) => RegimeLabel::ExplosiveFiniteTime,
            (false, false) => RegimeLabel::ExplosiveInfiniteRate,
        });
    }
    if gamma > tol.finite_rate_gamma {
        return Ok(RegimeLabel::Unclassified);
    }

    // Finite or vanishing limit: fit f ≈ L + c/N on the tail.
    let inv_n: Vec<f64> = ns.iter().map(|n| 1.0 / n).collect();
    let signed: Vec<f64> = tail.iter().map(|(_, f)| *f).collect();
    let Some(lim) = fit_line(&inv_n, &signed) else {
        return Ok(RegimeLabel::Unclassified);
    };
    let limit = lim.intercept;
    let decaying = gamma < -tol.finite_rate_gamma;
    if decaying || limit.abs() < tol.conservative_rel * scale || limit.signum() != signed[0].signum() {
        if decaying && power.r_squared < tol.min_r_squared && expo.r_squared < tol.min_r_squared {
            return Ok(RegimeLabel::Unclassified);
        }
        return Ok(RegimeLabel::Conservative);
    }
    if lim.r_squared < tol.min_r_squared && lim.rms_residual > 1e-3 * limit.abs() {
        return Ok(RegimeLabel::Unclassified);
    }
    Ok(if limit > 0.0 {
        RegimeLabel::DissipativeFiniteRate
    } else {
        RegimeLabel::ExplosiveFiniteRate
    })
}

/// Radius of convergence from a tail regression of `log|a_n|` on `n`.
pub fn radius_of_convergence(seq: &ShellSequence) -> Result<f64> {
    if seq.n_max() < 16 {
        return Err(CascadeError::InsufficientData {
            needed: 16,
            got: seq.n_max(),
        });
    }
    let start = seq.n_max() / 2;
    let (xs, ys): (Vec<f64>, Vec<f64>) = seq.values()[start..]
        .iter()
        .enumerate()
        .filter(|(_, v)| **v != 0.0)
        .map(|(i, v)| ((start + i + 1) as f64, v.abs().ln()))
        .unzip();
    if xs.len() < 2 {
        return Ok(f64::INFINITY);
    }
    let fit = fit_line(&xs, &ys).expect("distinct abscissae");
    let rho = (-fit.slope).exp();
    Ok(if rho.is_finite() { rho } else { f64::INFINITY })
}

/// Existence horizon `arctanh(min(ρ, 1))`, infinite for `ρ ≥ 1`.
pub fn blowup_horizon(rho: f64) -> Result<f64> {
    if rho.is_nan() || rho < 0.0 {
        return Err(CascadeError::invalid("rho", format!("must be nonnegative, got {rho}")));
    }
    Ok(if rho >= 1.0 { f64::INFINITY } else { rho.atanh() })
}

/// `√(Σ n^{2s} a_n²)` over the stored entries.
pub fn sobolev_norm(seq: &ShellSequence, s: f64) -> f64 {
    compensated_sum(
        seq.values()
            .iter()
            .enumerate()
            .map(|(i, v)| ((i + 1) as f64).powf(2.0 * s) * v * v),
    )
    .sqrt()
}
