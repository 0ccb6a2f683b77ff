//! Model B through its odd generating function
//! `H(x, t) = Σ (−1)^{n+1} b_n(t) x^{2n−1}` on `[−1, 1]`.
//!
//! `H` evolves by `∂_t H = L H` with `L f = ¼((1−x⁴) f′)′ − x² f / 2`. The
//! operator is diagonalised by a Galerkin method on odd orthonormal Legendre
//! polynomials; eigenfunction Taylor coefficients come from the three-term
//! recurrence seeded by `p_1 = φ′(0)`. The same `H` is also the Feynman–Kac
//! expectation over the diffusion `dX = −X³ dt + √((1−X⁴)/2) dW`, which gives
//! a Monte Carlo route that shares no code with the spectral one.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{CascadeError, Result};
use crate::integrate::{observe_trajectory, Closure, ForcingSpec, TruncationConfig, ViscositySpec};
use crate::model_core::{CouplingFamily, Provenance, ShellSequence};
use crate::numerics::{gauss_legendre, legendre_with_derivative};

/// `(coefficient of x^{2n+1}, coefficient of x^{2n−3})` in `L x^{2n−1}`.
pub fn generator_apply(n: usize) -> Result<(f64, f64)> {
    if n == 0 {
        return Err(CascadeError::invalid("n", "shell indices start at 1"));
    }
    let nf = n as f64;
    Ok((-nf * (nf + 0.5), (nf - 1.0) * (nf - 0.5)))
}

/// `H_0(x) = Σ (−1)^{n+1} b_n x^{2n−1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct OddSeriesFunction {
    b: ShellSequence,
}

impl OddSeriesFunction {
    pub fn new(b: ShellSequence) -> Self {
        Self { b }
    }

    pub fn coeffs(&self) -> &ShellSequence {
        &self.b
    }

    pub fn eval(&self, x: f64) -> f64 {
        let x2 = x * x;
        // Horner in x² from the top coefficient down.
        let mut acc = 0.0;
        for (i, b) in self.b.values().iter().enumerate().rev() {
            let signed = if i % 2 == 0 { *b } else { -*b };
            acc = acc * x2 + signed;
        }
        acc * x
    }

    /// Cauchy test on the partial sums of `Σ (−1)^n b_n`: their spread over
    /// the last quarter must be small relative to their size.
    pub fn check_summable(&self) -> Result<()> {
        let v = self.b.values();
        if v.len() < 8 {
            return Ok(());
        }
        let mut s = 0.0;
        let mut partial = Vec::with_capacity(v.len());
        for (i, b) in v.iter().enumerate() {
            s += if i % 2 == 0 { -b } else { *b };
            partial.push(s);
        }
        let tail = &partial[3 * v.len() / 4..];
        let (lo, hi) = tail.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), x| (l.min(*x), h.max(*x)));
        let scale = 1.0 + partial.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        if (hi - lo) > 1e-3 * scale {
            return Err(CascadeError::TailNotSummable);
        }
        Ok(())
    }
}

/// Odd orthonormal Legendre basis `q_j = √((4j−1)/2) P_{2j−1}`, `j = 1..=n`.
#[derive(Debug, Clone)]
struct OddBasis {
    n: usize,
    norms: Vec<f64>,
}

impl OddBasis {
    fn new(n: usize) -> Self {
        Self {
            n,
            norms: (1..=n).map(|j| ((4 * j - 1) as f64 / 2.0).sqrt()).collect(),
        }
    }

    /// `(q_j(x), q_j′(x), q_j″(x)·(1−x²))` for `j = 1..=n`.
    fn eval(&self, x: f64) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let deg = 2 * self.n - 1;
        let (p, dp) = legendre_with_derivative(deg, x);
        let mut q = Vec::with_capacity(self.n);
        let mut dq = Vec::with_capacity(self.n);
        let mut d2 = Vec::with_capacity(self.n);
        for j in 0..self.n {
            let l = 2 * j + 1;
            let c = self.norms[j];
            q.push(c * p[l]);
            dq.push(c * dp[l]);
            // Legendre equation: (1−x²)P″ = 2xP′ − l(l+1)P
            d2.push(c * (2.0 * x * dp[l] - (l * (l + 1)) as f64 * p[l]));
        }
        (q, dq, d2)
    }
}

#[derive(Debug, Clone)]
pub struct EigenPair {
    pub lambda: f64,
    /// Taylor data `p_1..` of `φ = Σ (−1)^{n+1} p_n x^{2n−1}`, from the recurrence.
    pub p_coeffs: Vec<f64>,
    /// Coordinates in the orthonormal odd Legendre basis (`p_1 > 0`).
    pub basis_coeffs: Vec<f64>,
    /// `|λ(n_basis) − λ(2 n_basis)|`.
    pub convergence: f64,
}

#[derive(Debug, Clone)]
pub struct EigenSystem {
    basis: OddBasis,
    pub pairs: Vec<EigenPair>,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

const P_LEN: usize = 64;

fn galerkin(n_basis: usize) -> (OddBasis, SymmetricEigen<f64, nalgebra::Dyn>) {
    let basis = OddBasis::new(n_basis);
    let (xs, ws) = gauss_legendre(2 * n_basis + 4);
    let mut a = DMatrix::<f64>::zeros(n_basis, n_basis);
    for (x, w) in xs.iter().zip(&ws) {
        let (q, dq, _) = basis.eval(*x);
        let stiff = 0.25 * (1.0 - x.powi(4)) * w;
        let pot = 0.5 * x * x * w;
        for i in 0..n_basis {
            for j in 0..=i {
                a[(i, j)] += stiff * dq[i] * dq[j] + pot * q[i] * q[j];
            }
        }
    }
    for i in 0..n_basis {
        for j in 0..i {
            a[(j, i)] = a[(i, j)];
        }
    }
    (basis, SymmetricEigen::new(a))
}

fn sorted_eigen(eig: &SymmetricEigen<f64, nalgebra::Dyn>) -> Vec<(f64, Vec<f64>)> {
    let mut out: Vec<(f64, Vec<f64>)> = (0..eig.eigenvalues.len())
        .map(|k| (eig.eigenvalues[k], eig.eigenvectors.column(k).iter().copied().collect()))
        .collect();
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    out
}

/// Galerkin eigenpairs of `−L` on odd polynomials of degree `< 2 n_basis`,
/// checked against a solve at `2 n_basis`.
pub fn eigen_solve(n_basis: usize) -> Result<EigenSystem> {
    if n_basis < 8 {
        return Err(CascadeError::invalid("n_basis", format!("must be ≥ 8, got {n_basis}")));
    }
    let (basis, eig) = galerkin(n_basis);
    let (_, fine) = galerkin(2 * n_basis);
    let coarse = sorted_eigen(&eig);
    let fine = sorted_eigen(&fine);
    let change = (coarse[0].0 - fine[0].0).abs();
    if change > 1e-6 {
        return Err(CascadeError::NonConvergence { a: coarse[0].0, b: fine[0].0 });
    }
    let (_, dp0) = legendre_with_derivative(2 * n_basis - 1, 0.0);
    let pairs = coarse
        .into_iter()
        .zip(&fine)
        .map(|((lambda, mut c), (lf, _))| {
            let slope: f64 = c.iter().enumerate().map(|(j, cj)| cj * basis.norms[j] * dp0[2 * j + 1]).sum();
            if slope < 0.0 {
                c.iter_mut().for_each(|v| *v = -*v);
            }
            EigenPair {
                lambda,
                p_coeffs: coefficient_recurrence(lambda, slope.abs(), P_LEN),
                basis_coeffs: c,
                convergence: (lambda - lf).abs(),
            }
        })
        .collect();
    let (nodes, weights) = gauss_legendre(2 * n_basis + 64);
    Ok(EigenSystem {
        basis,
        pairs,
        nodes,
        weights,
    })
}

impl EigenSystem {
    pub fn n_basis(&self) -> usize {
        self.basis.n
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    fn pair(&self, k: usize) -> Result<&EigenPair> {
        self.pairs
            .get(k)
            .ok_or(CascadeError::IndexOutOfRange { index: k + 1, n_max: self.pairs.len() })
    }

    /// `φ_k(x)` for the zero-based mode index `k`.
    pub fn eigenfunction(&self, k: usize, x: f64) -> Result<f64> {
        let c = &self.pair(k)?.basis_coeffs;
        let (q, _, _) = self.basis.eval(x);
        Ok(q.iter().zip(c).map(|(a, b)| a * b).sum())
    }

    pub fn eigenfunction_derivative(&self, k: usize, x: f64) -> Result<f64> {
        let c = &self.pair(k)?.basis_coeffs;
        let (_, dq, _) = self.basis.eval(x);
        Ok(dq.iter().zip(c).map(|(a, b)| a * b).sum())
    }

    /// `‖L φ_k + λ_k φ_k‖_{L²}` by Gauss quadrature.
    pub fn residual(&self, k: usize) -> Result<f64> {
        let pair = self.pair(k)?;
        let c = &pair.basis_coeffs;
        let mut acc = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            let (q, dq, d2) = self.basis.eval(*x);
            let dot = |v: &[f64]| -> f64 { v.iter().zip(c).map(|(a, b)| a * b).sum() };
            let (f, df, d2f) = (dot(&q), dot(&dq), dot(&d2));
            // ¼(1−x⁴) f″ = ¼(1+x²)·(1−x²) f″
            let lf = 0.25 * (1.0 + x * x) * d2f - x.powi(3) * df - 0.5 * x * x * f;
            acc += w * (lf + pair.lambda * f).powi(2);
        }
        Ok(acc.sqrt())
    }

    /// `∫_{−1}^{1} f φ_k dx` for every mode.
    pub fn project<F: Fn(f64) -> f64>(&self, f: F) -> Vec<f64> {
        let mut out = vec![0.0; self.pairs.len()];
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            let (q, _, _) = self.basis.eval(*x);
            let fx = f(*x) * w;
            for (o, pair) in out.iter_mut().zip(&self.pairs) {
                *o += fx * q.iter().zip(&pair.basis_coeffs).map(|(a, b)| a * b).sum::<f64>();
            }
        }
        out
    }

    /// `p_n^k` for `n = 1..=len`.
    pub fn p_sequence(&self, k: usize, len: usize) -> Result<Vec<f64>> {
        let pair = self.pair(k)?;
        if len <= pair.p_coeffs.len() {
            return Ok(pair.p_coeffs[..len].to_vec());
        }
        Ok(coefficient_recurrence(pair.lambda, pair.p_coeffs[0], len))
    }

    /// `∫ φ_k x^{power} dx` for every mode; vanishes for even powers.
    pub fn power_projection(&self, power: u32) -> Vec<f64> {
        self.project(|x| x.powi(power as i32))
    }
}

/// `p_{n+1} = (λ p_n + (n−1)(n−½) p_{n−1}) / (n(n+½))`, `p_0 = 0`, `p_1 = p1`.
pub fn coefficient_recurrence(lambda: f64, p1: f64, len: usize) -> Vec<f64> {
    let mut p = Vec::with_capacity(len);
    if len == 0 {
        return p;
    }
    p.push(p1);
    let mut prev = 0.0;
    for n in 1..len {
        let nf = n as f64;
        let next = (lambda * p[n - 1] + (nf - 1.0) * (nf - 0.5) * prev) / (nf * (nf + 0.5));
        prev = p[n - 1];
        p.push(next);
    }
    p
}

/// Polynomial extrapolation to `h = 0` through `(h_i, y_i)` (Neville).
fn neville_at_zero(hs: &[f64], ys: &[f64]) -> f64 {
    let mut t = ys.to_vec();
    let n = t.len();
    for level in 1..n {
        for i in 0..n - level {
            let (hi, hj) = (hs[i], hs[i + level]);
            t[i] = (hj * t[i] - hi * t[i + 1]) / (hj - hi);
        }
    }
    t[0]
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NpLimit {
    pub c_odd: f64,
    pub c_even: f64,
    /// Largest correction between the last two extrapolation levels.
    pub uncertainty: f64,
}

/// Extrapolated limits of `(2n+1) p_{2n+1}` and `(2n) p_{2n}` from a sequence
/// indexed from 1.
pub fn np_limit_estimate(p: &[f64]) -> Result<NpLimit> {
    if p.len() < 64 {
        return Err(CascadeError::InsufficientData { needed: 64, got: p.len() });
    }
    let len = p.len();
    let limit = |parity: usize| -> Result<(f64, f64)> {
        // Indices i ≡ parity (mod 2), roughly halving from the top.
        let mut idx = Vec::new();
        let mut top = len;
        while idx.len() < 5 && top >= 8 {
            let i = if top % 2 == parity { top } else { top - 1 };
            idx.push(i);
            top /= 2;
        }
        idx.reverse();
        let xs: Vec<f64> = idx.iter().map(|&i| i as f64 * p[i - 1]).collect();
        let diffs: Vec<f64> = xs.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
        let scale = xs.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let shrinking = diffs.windows(2).all(|d| d[1] <= d[0] || d[1] <= 1e-12 * scale);
        if !shrinking {
            return Err(CascadeError::NonCauchyTail);
        }
        let hs: Vec<f64> = idx.iter().map(|&i| 1.0 / i as f64).collect();
        let full = neville_at_zero(&hs, &xs);
        let partial = neville_at_zero(&hs[1..], &xs[1..]);
        Ok((full, (full - partial).abs()))
    };
    let (c_odd, e1) = limit(1)?;
    let (c_even, e2) = limit(0)?;
    Ok(NpLimit {
        c_odd,
        c_even,
        uncertainty: e1.max(e2),
    })
}

#[derive(Debug, Clone)]
pub struct SpectralEvolution {
    pub b: ShellSequence,
    pub projections: Vec<f64>,
    pub truncation_warning: bool,
}

impl SpectralEvolution {
    pub fn function(&self) -> OddSeriesFunction {
        OddSeriesFunction::new(self.b.clone())
    }
}

fn modes_in_range(sys: &EigenSystem, n_modes: usize) -> Result<usize> {
    if n_modes == 0 || n_modes > sys.len() {
        return Err(CascadeError::invalid("n_modes", format!("must lie in 1..={}", sys.len())));
    }
    Ok(n_modes)
}

/// `b_n(t) = Σ_k h_k e^{−λ_k t} p_n^k` with `h_k = ∫ H_0 φ_k`.
pub fn evolve_b(sys: &EigenSystem, initial: &OddSeriesFunction, t: f64, n_modes: usize, n_out: usize) -> Result<SpectralEvolution> {
    initial.check_summable()?;
    let n_modes = modes_in_range(sys, n_modes)?;
    if !(t >= 0.0 && t.is_finite()) {
        return Err(CascadeError::invalid("t", format!("must be ≥ 0, got {t}")));
    }
    let h = sys.project(|x| initial.eval(x));
    let hmax = h[..n_modes].iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let truncation_warning = h[n_modes - 1].abs() > 1e-8 * hmax;
    let mut b = vec![0.0; n_out];
    for (k, hk) in h.iter().enumerate().take(n_modes) {
        let amp = hk * (-sys.pairs[k].lambda * t).exp();
        if amp == 0.0 {
            continue;
        }
        let p = sys.p_sequence(k, n_out)?;
        for (bn, pn) in b.iter_mut().zip(&p) {
            *bn += amp * pn;
        }
    }
    Ok(SpectralEvolution {
        b: ShellSequence::new(b, Provenance::ClosedFormSampled)?,
        projections: h[..n_modes].to_vec(),
        truncation_warning,
    })
}

/// Spectral value of `H(x, t)` directly in function space.
pub fn evolve_h(sys: &EigenSystem, initial: &OddSeriesFunction, x: f64, t: f64, n_modes: usize) -> Result<f64> {
    let n_modes = modes_in_range(sys, n_modes)?;
    let h = sys.project(|y| initial.eval(y));
    let mut acc = 0.0;
    for (k, hk) in h.iter().enumerate().take(n_modes) {
        acc += hk * (-sys.pairs[k].lambda * t).exp() * sys.eigenfunction(k, x)?;
    }
    Ok(acc)
}

/// Source projections `d_k = (−1)^{m+1} ∫ φ_k x^{2m−1}` for forcing shell `m`.
pub fn forcing_projections(sys: &EigenSystem, m: usize) -> Result<Vec<f64>> {
    if m == 0 {
        return Err(CascadeError::invalid("m", "shell indices start at 1"));
    }
    let sign = if m % 2 == 1 { 1.0 } else { -1.0 };
    Ok(sys.power_projection(2 * m as u32 - 1).into_iter().map(|d| sign * d).collect())
}

/// Fixed-point recursion `b_{n+1} = (c_{n−1} b_{n−1} + δ_{nm}) / c_n`
/// seeded by `b_1`.
pub fn steady_chain(b1: f64, m: usize, n_max: usize) -> Vec<f64> {
    let c = |n: usize| CouplingFamily::ModelB.c(n);
    let mut b = Vec::with_capacity(n_max);
    b.push(b1);
    let mut prev = 0.0;
    for n in 1..n_max {
        let src = if n == m { 1.0 } else { 0.0 };
        let lower = if n >= 2 { c(n - 1) * prev } else { 0.0 };
        let next = (lower + src) / c(n);
        prev = b[n - 1];
        b.push(next);
    }
    b
}

/// `b_n* = Σ_k d_k p_n^k / λ_k`. Only `b_1*` is taken from the spectral sum;
/// the rest follows exactly from the fixed-point recursion.
pub fn forced_steady_state_b(sys: &EigenSystem, m: usize, n_max: usize) -> Result<ShellSequence> {
    if n_max == 0 {
        return Err(CascadeError::invalid("n_max", "must be ≥ 1"));
    }
    let d = forcing_projections(sys, m)?;
    if d.iter().all(|v| v.abs() < 1e-14) {
        return Err(CascadeError::ZeroProjection { m });
    }
    let b1: f64 = d.iter().zip(&sys.pairs).map(|(dk, pr)| dk * pr.p_coeffs[0] / pr.lambda).sum();
    ShellSequence::new(steady_chain(b1, m, n_max), Provenance::ClosedFormSampled)
}

/// `Σ_{k,k′} d_k d_{k′} p_n^k p_m^{k′} / (λ_k + λ_{k′})` for noise on shell 1.
pub fn stochastic_steady_covariance_b(sys: &EigenSystem, n: usize, m: usize, n_modes: usize) -> Result<f64> {
    let n_modes = modes_in_range(sys, n_modes)?;
    if n == 0 || m == 0 {
        return Err(CascadeError::invalid("n", "shell indices start at 1"));
    }
    let d = forcing_projections(sys, 1)?;
    let len = n.max(m);
    let ps: Vec<Vec<f64>> = (0..n_modes).map(|k| sys.p_sequence(k, len)).collect::<Result<_>>()?;
    // Pairs (k, k′) are summed once with the (n, m)-symmetric product, so the
    // result is bit-for-bit symmetric.
    let mut acc = 0.0;
    for k in 0..n_modes {
        for kp in k..n_modes {
            let sym = ps[k][n - 1] * ps[kp][m - 1] + ps[kp][n - 1] * ps[k][m - 1];
            let weight = if k == kp { 0.5 } else { 1.0 };
            acc += weight * d[k] * d[kp] * sym / (sys.pairs[k].lambda + sys.pairs[kp].lambda);
        }
    }
    Ok(acc)
}

/// Stationary covariance `C(n, m) = ∫_0^∞ g_n(u) g_m(u) du` for `n, m ≤ k`,
/// where `g` is the model-B response to a unit impulse on shell 1, integrated
/// with RK4 (`dt = 0.25/n_max²`, sponge closure) and the trapezoid rule up to
/// `horizon`.
pub fn impulse_response_covariance_b(k: usize, n_max: usize, horizon: f64) -> Result<Vec<Vec<f64>>> {
    if k == 0 || k > n_max / 2 {
        return Err(CascadeError::invalid("k", format!("must lie in 1..={}", n_max / 2)));
    }
    let dt = 0.25 / (n_max * n_max) as f64;
    let cfg = TruncationConfig::new(n_max, dt).with_closure(Closure::Sponge {
        start_fraction: 0.5,
        strength: 1.0,
    });
    let delta = ShellSequence::from_fn(n_max, Provenance::Explicit, |n| if n == 1 { 1.0 } else { 0.0 })?;
    let mut acc = vec![0.0; k * k];
    let mut last_t = 0.0;
    let mut prev: Vec<f64> = Vec::new();
    let add = |w: f64, g: &[f64], acc: &mut [f64]| {
        for i in 0..k {
            let gi = w * g[i];
            for j in 0..=i {
                acc[i * k + j] += gi * g[j];
            }
        }
    };
    let instability = observe_trajectory(
        CouplingFamily::ModelB,
        &delta,
        &cfg,
        &ForcingSpec::none(),
        &ViscositySpec::inviscid(),
        (0.0, horizon),
        |t, a| {
            let h = t - last_t;
            if !prev.is_empty() {
                add(0.5 * h, &prev, &mut acc);
                add(0.5 * h, a, &mut acc);
            }
            prev.clear();
            prev.extend_from_slice(&a[..k]);
            last_t = t;
        },
    )?;
    if let Some((time, index)) = instability {
        return Err(CascadeError::Instability { time, index });
    }
    Ok((0..k)
        .map(|i| (0..k).map(|j| if j <= i { acc[i * k + j] } else { acc[j * k + i] }).collect())
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SdePath {
    pub x_final: f64,
    pub weight: f64,
    pub max_abs: f64,
}

struct PathState {
    x: f64,
    integral: f64,
    max_abs: f64,
}

impl PathState {
    fn new(x0: f64) -> Self {
        Self {
            x: x0,
            integral: 0.0,
            max_abs: x0.abs(),
        }
    }

    fn step(&mut self, dt: f64, dw: f64) {
        let x = self.x;
        let diff = (0.5 * (1.0 - x.powi(4)).max(0.0)).sqrt();
        let next = (x - x.powi(3) * dt + diff * dw).clamp(-1.0, 1.0);
        let mid = 0.5 * (x + next);
        self.integral += mid * mid * dt;
        self.x = next;
        self.max_abs = self.max_abs.max(next.abs());
    }

    fn finish(&self) -> SdePath {
        SdePath {
            x_final: self.x,
            weight: (-0.5 * self.integral).exp(),
            max_abs: self.max_abs,
        }
    }
}

fn check_sde_args(x0: f64, t: f64, dt: f64) -> Result<usize> {
    if !(-1.0..=1.0).contains(&x0) {
        return Err(CascadeError::invalid("x", format!("must lie in [−1, 1], got {x0}")));
    }
    if !(t >= 0.0 && t.is_finite()) {
        return Err(CascadeError::invalid("t", format!("must be ≥ 0, got {t}")));
    }
    if !(dt > 0.0 && dt <= 1e-3) {
        return Err(CascadeError::invalid("dt", format!("must lie in (0, 1e-3], got {dt}")));
    }
    Ok((t / dt).round() as usize)
}

/// One Euler–Maruyama path with clamping to `[−1, 1]` and its weight
/// `exp(−½ ∫ X² ds)` (midpoint rule).
pub fn simulate_sde(x0: f64, t: f64, dt: f64, seed: u64) -> Result<SdePath> {
    let steps = check_sde_args(x0, t, dt)?;
    let h = if steps == 0 { 0.0 } else { t / steps as f64 };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut s = PathState::new(x0);
    for _ in 0..steps {
        let xi: f64 = StandardNormal.sample(&mut rng);
        s.step(h, h.sqrt() * xi);
    }
    Ok(s.finish())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SdePathEstimate {
    pub paths: usize,
    pub t: f64,
    pub mean: f64,
    pub stderr: f64,
}

/// Monte Carlo `H(x, t) = E_x H_0(X_t) exp(−½∫X²)` over antithetic pairs;
/// pair `i` draws from ChaCha stream `i` of `seed`.
pub fn feynman_kac_h(h0: &OddSeriesFunction, x: f64, t: f64, n_paths: usize, dt: f64, seed: u64) -> Result<SdePathEstimate> {
    h0.check_summable()?;
    let steps = check_sde_args(x, t, dt)?;
    if steps == 0 {
        return Ok(SdePathEstimate {
            paths: n_paths,
            t,
            mean: h0.eval(x),
            stderr: 0.0,
        });
    }
    let pairs = (n_paths / 2).max(2);
    let h = t / steps as f64;
    let sq = h.sqrt();
    let values: Vec<f64> = (0..pairs)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let mut a = PathState::new(x);
            let mut b = PathState::new(x);
            for _ in 0..steps {
                let xi: f64 = StandardNormal.sample(&mut rng);
                a.step(h, sq * xi);
                b.step(h, -sq * xi);
            }
            let (pa, pb) = (a.finish(), b.finish());
            0.5 * (h0.eval(pa.x_final) * pa.weight + h0.eval(pb.x_final) * pb.weight)
        })
        .collect();
    let nf = values.len() as f64;
    let mean = values.iter().sum::<f64>() / nf;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (nf - 1.0);
    Ok(SdePathEstimate {
        paths: 2 * pairs,
        t,
        mean,
        stderr: (var / nf).sqrt(),
    })
}
