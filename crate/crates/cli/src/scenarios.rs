//! Mode dispatch: turns a validated scenario into a result table and a
//! one-line summary.

use cascade_core::asymptotics::{classify_from_descriptor, evolve_singularity, transfer_coefficients, SingularityDescriptor};
use cascade_core::exact_gf::{apply_semigroup, taylor_coeffs, CatalogExample, GeneratingFunction};
use cascade_core::integrate::{
    energy_drift, integrate_model_a, integrate_model_b, Closure, ForcingSpec, StepMethod, TruncationConfig,
    ViscositySpec, ViscosityVariant,
};
use cascade_core::model_b_spectral::{
    eigen_solve, evolve_b, evolve_h, feynman_kac_h, forced_steady_state_b, np_limit_estimate,
    stochastic_steady_covariance_b, OddSeriesFunction,
};
use cascade_core::model_core::{classify_regime, flux_trace, ClassifierTolerances};
use cascade_core::stationary::{
    constant_forced_fixed_point, covariance_quadrature, default_lookback, inviscid_gap, sample_covariance,
    stationary_covariance, tilde_variant_variance, viscous_variance, PrintedVariance, StationarySampler,
};
use cascade_core::{CascadeError, CouplingFamily, Provenance, ShellSequence};

use crate::config::{Mode, Model, Parameters, ScenarioConfig};
use crate::output::Table;

pub type RunResult<T> = std::result::Result<T, CascadeError>;

pub struct Report {
    pub table: Table,
    pub summary: String,
}

pub fn run(cfg: &ScenarioConfig, default_seed: u64) -> RunResult<Report> {
    let p = &cfg.parameters;
    match (cfg.mode, cfg.model) {
        (Mode::Exact, Model::A) => exact_a(p),
        (Mode::Exact, Model::B) => exact_b(p),
        (Mode::Integrate, _) if p.method.as_deref() == Some("feynman_kac") => feynman_kac(p, default_seed),
        (Mode::Integrate, model) => integrate(p, model, default_seed),
        (Mode::Stationary, model) => stationary(p, model, default_seed),
        (Mode::Inviscid, _) => inviscid(p),
        (Mode::Spectrum, _) => spectrum(p),
        (Mode::Asymptotics, _) => asymptotics(p),
    }
}

fn t_grid(p: &Parameters, default: f64) -> Vec<f64> {
    let mut ts = p.t_grid.clone().unwrap_or_else(|| vec![default]);
    ts.sort_by(f64::total_cmp);
    ts.dedup();
    ts
}

fn catalog(p: &Parameters) -> RunResult<CatalogExample> {
    CatalogExample::new(p.example_id.unwrap_or(1) as u8, p.alpha)
}

fn regime_of(seq: &ShellSequence) -> String {
    let trace: Vec<(usize, f64)> = flux_trace(seq, CouplingFamily::ModelA);
    match classify_regime(&trace[..trace.len().saturating_sub(1)], &ClassifierTolerances::default()) {
        Ok(label) => label.as_str().to_string(),
        Err(_) => "unclassified".to_string(),
    }
}

fn exact_a(p: &Parameters) -> RunResult<Report> {
    let ex = catalog(p)?;
    let n_max = p.n_max.unwrap_or(64);
    let g0 = GeneratingFunction::example(ex.id(), ex.alpha())?;
    let mut table = Table::new(&["time", "n", "value"]);
    let mut last = None;
    for t in t_grid(p, 1.0) {
        if t >= ex.horizon() {
            return Err(CascadeError::HorizonExceeded { t, horizon: ex.horizon() });
        }
        let a = taylor_coeffs(&apply_semigroup(&g0, t)?, n_max + 1, None)?;
        for n in 1..=n_max {
            table.push(vec![t, n as f64, a.at(n)]);
        }
        last = Some((t, a));
    }
    let (t, a) = last.expect("non-empty time grid");
    Ok(Report {
        table,
        summary: format!("{} (example {}, t = {t}, n_max = {n_max})", regime_of(&a), ex.id()),
    })
}

fn initial_b(p: &Parameters, len: usize) -> RunResult<ShellSequence> {
    match p.initial.as_deref().unwrap_or("delta") {
        "inverse_square" => ShellSequence::from_fn(len, Provenance::Explicit, |n| 1.0 / (n * n) as f64),
        "example" => Err(CascadeError::InvalidParameter {
            name: "initial",
            reason: "catalog examples belong to model A".into(),
        }),
        _ => ShellSequence::from_fn(len, Provenance::Explicit, |n| if n == 1 { 1.0 } else { 0.0 }),
    }
}

fn exact_b(p: &Parameters) -> RunResult<Report> {
    let sys = eigen_solve(p.n_basis.unwrap_or(64))?;
    let modes = p.modes.unwrap_or(16);
    let h0 = OddSeriesFunction::new(initial_b(p, 4096)?);
    let ts = t_grid(p, 1.0);
    if let Some(xs) = &p.x_grid {
        let mut table = Table::new(&["time", "x", "value"]);
        for &t in &ts {
            for &x in xs {
                table.push(vec![t, x, evolve_h(&sys, &h0, x, t, modes)?]);
            }
        }
        return Ok(Report {
            table,
            summary: format!("spectral H(x, t) at {} points with {modes} modes", ts.len() * xs.len()),
        });
    }
    let n_max = p.n_max.unwrap_or(16);
    let mut table = Table::new(&["time", "n", "value"]);
    let mut energies = Vec::new();
    let mut warn = false;
    for &t in &ts {
        let ev = evolve_b(&sys, &h0, t, modes, 4096)?;
        warn |= ev.truncation_warning;
        energies.push(format!("{:.6e}", ev.b.energy()));
        for n in 1..=n_max {
            table.push(vec![t, n as f64, ev.b.at(n)]);
        }
    }
    Ok(Report {
        table,
        summary: format!(
            "spectral model B, energy [{}]{}",
            energies.join(", "),
            if warn { ", projection truncation warning" } else { "" }
        ),
    })
}

fn seed(p: &Parameters, default_seed: u64) -> u64 {
    p.seed.unwrap_or(default_seed)
}

fn integrate(p: &Parameters, model: Model, default_seed: u64) -> RunResult<Report> {
    let n_max = p.n_max.unwrap_or(if model == Model::A { 256 } else { 64 });
    let initial = match (model, p.initial.as_deref()) {
        (Model::A, None | Some("example")) => catalog(p)?.initial_sequence(n_max)?,
        (Model::A, Some("inverse_square")) => {
            ShellSequence::from_fn(n_max, Provenance::Explicit, |n| 1.0 / (n * n) as f64)?
        }
        (Model::A, Some(_)) => ShellSequence::from_fn(n_max, Provenance::Explicit, |n| if n == 1 { 1.0 } else { 0.0 })?,
        (Model::B, _) => initial_b(p, n_max)?,
    };
    let initial = if p.forcing.as_deref().is_some_and(|f| f != "none") && p.initial.is_none() {
        ShellSequence::zeros(n_max)?
    } else {
        initial
    };
    let dt = p.dt.unwrap_or(match model {
        Model::A => 1e-3,
        Model::B => 0.25 / (n_max * n_max) as f64,
    });
    let closure = match p.closure.as_deref() {
        Some("sponge") => Closure::sponge(),
        _ => Closure::ZeroPad,
    };
    let method = match p.method.as_deref() {
        Some("euler_maruyama") => StepMethod::EulerMaruyama,
        _ => StepMethod::Rk4,
    };
    let cfg = TruncationConfig::new(n_max, dt).with_closure(closure).with_method(method);
    let m = p.m.unwrap_or(1);
    let amplitude = p.amplitude.unwrap_or(1.0);
    let forcing = match p.forcing.as_deref() {
        Some("constant") => ForcingSpec::constant(m, amplitude),
        Some("white_noise") => ForcingSpec::white_noise(m, amplitude, seed(p, default_seed)),
        _ => ForcingSpec::none(),
    };
    let nu = p.nu.unwrap_or(0.0);
    let visc = if nu > 0.0 {
        let variant = match p.variant.as_deref() {
            Some("power") => ViscosityVariant::Power,
            _ => ViscosityVariant::LambdaProduct,
        };
        ViscositySpec::new(nu, p.p.unwrap_or(0) as u8, variant)?
    } else {
        ViscositySpec::inviscid()
    };
    let ts = t_grid(p, 1.0);
    let t_end = *ts.last().expect("non-empty time grid");
    if t_end <= 0.0 {
        return Err(CascadeError::InvalidParameter {
            name: "t_grid",
            reason: "integration needs a positive end time".into(),
        });
    }
    let rec = match model {
        Model::A => integrate_model_a(&initial, &cfg, &forcing, &visc, (0.0, t_end), &ts)?,
        Model::B => {
            if nu > 0.0 {
                return Err(CascadeError::InvalidParameter {
                    name: "nu",
                    reason: "viscous terms are defined for model A only".into(),
                });
            }
            integrate_model_b(&initial, &cfg, &forcing, (0.0, t_end), &ts)?
        }
    };
    rec.check_stable()?;
    let mut table = Table::new(&["time", "n", "value"]);
    for (t, s) in rec.times.iter().zip(&rec.states) {
        if ts.iter().any(|x| (x - t).abs() <= 1e-12 * t.max(1.0)) {
            for n in 1..=n_max {
                table.push(vec![*t, n as f64, s.at(n)]);
            }
        }
    }
    let mut summary = format!("integrated model {:?} to t = {t_end} with n_max = {n_max}", model);
    if p.forcing.as_deref().is_none_or(|f| f == "none") && nu == 0.0 {
        if let Ok(drift) = energy_drift(&rec) {
            summary.push_str(&format!(", energy drift {drift:.3e}"));
        }
    }
    for w in &rec.warnings {
        summary.push_str(&format!("; warning: {w}"));
    }
    Ok(Report { table, summary })
}

fn feynman_kac(p: &Parameters, default_seed: u64) -> RunResult<Report> {
    let h0 = OddSeriesFunction::new(initial_b(p, 4096)?);
    let xs = p.x_grid.clone().unwrap_or_else(|| vec![0.5]);
    let paths = p.paths.unwrap_or(10_000);
    let dt = p.dt.unwrap_or(1e-3);
    let seed = seed(p, default_seed);
    let mut table = Table::new(&["time", "x", "value", "stderr"]);
    for t in t_grid(p, 0.5) {
        for &x in &xs {
            let est = feynman_kac_h(&h0, x, t, paths, dt, seed)?;
            table.push(vec![t, x, est.mean, est.stderr]);
        }
    }
    Ok(Report {
        table,
        summary: format!("Feynman-Kac estimate with {paths} paths, dt = {dt}, seed {seed}"),
    })
}

fn stationary(p: &Parameters, model: Model, default_seed: u64) -> RunResult<Report> {
    let n_max = p.n_max.unwrap_or(8);
    let kind = p.kind.as_deref().unwrap_or("covariance");
    match (model, kind) {
        (Model::A, "covariance") => {
            let mut table = Table::new(&["n", "m", "value", "quadrature"]);
            for n in 1..=n_max {
                for m in 1..=n_max {
                    table.push(vec![n as f64, m as f64, stationary_covariance(n, m)?, covariance_quadrature(n, m)?]);
                }
            }
            Ok(Report {
                table,
                summary: format!("stationary covariance 1/(n+m-1) for n, m <= {n_max}"),
            })
        }
        (Model::A, "samples") => {
            let count = p.samples.unwrap_or(10_000);
            let seed = seed(p, default_seed);
            let lookback = p.lookback.unwrap_or_else(|| default_lookback(n_max));
            let sampler = StationarySampler::new(n_max, lookback, p.dt.unwrap_or(1e-3))?;
            let samples = sampler.ensemble(seed, count);
            let (cov, se) = sample_covariance(&samples, n_max)?;
            let mut table = Table::new(&["n", "m", "value", "stderr"]);
            let mut worst = 0.0f64;
            for n in 1..=n_max {
                for m in 1..=n_max {
                    let (c, s) = (cov[n - 1][m - 1], se[n - 1][m - 1]);
                    worst = worst.max(((c - 1.0 / (n + m - 1) as f64) / s).abs());
                    table.push(vec![n as f64, m as f64, c, s]);
                }
            }
            Ok(Report {
                table,
                summary: format!("{count} stationary samples (seed {seed}), worst |z| vs 1/(n+m-1) = {worst:.2}"),
            })
        }
        (Model::A, _) => {
            let state = constant_forced_fixed_point(n_max)?;
            let mut table = Table::new(&["n", "value"]);
            for n in 1..=n_max {
                table.push(vec![n as f64, state.a(n)]);
            }
            Ok(Report {
                table,
                summary: format!("constant-forced fixed point, a_1* = {:.15}", state.a(1)),
            })
        }
        (Model::B, "fixed_point") => {
            let sys = eigen_solve(p.n_basis.unwrap_or(64))?;
            let m = p.m.unwrap_or(1);
            let state = forced_steady_state_b(&sys, m, n_max)?;
            let mut table = Table::new(&["n", "value"]);
            for n in 1..=n_max {
                table.push(vec![n as f64, state.at(n)]);
            }
            Ok(Report {
                table,
                summary: format!("model B forced steady state (m = {m}), b_1* = {:.15}", state.at(1)),
            })
        }
        (Model::B, "covariance") => {
            let sys = eigen_solve(p.n_basis.unwrap_or(64))?;
            let modes = p.modes.unwrap_or(32).min(sys.len());
            let mut table = Table::new(&["n", "m", "value"]);
            for n in 1..=n_max {
                for m in 1..=n_max {
                    table.push(vec![n as f64, m as f64, stochastic_steady_covariance_b(&sys, n, m, modes)?]);
                }
            }
            let note = if n_max > 9 { "; entries beyond n = 9 lose precision in the spectral sum" } else { "" };
            Ok(Report {
                table,
                summary: format!("model B stationary covariance from {modes} modes{note}"),
            })
        }
        (Model::B, _) => Err(CascadeError::InvalidParameter {
            name: "kind",
            reason: "model B supports covariance and fixed_point".into(),
        }),
    }
}

fn inviscid(p: &Parameters) -> RunResult<Report> {
    let n_max = p.n_max.unwrap_or(8);
    let nus = match (&p.nu_grid, p.nu) {
        (Some(g), _) => g.clone(),
        (None, Some(nu)) => vec![nu],
        (None, None) => vec![0.05, 0.1, 0.2],
    };
    let power = p.variant.as_deref() == Some("power");
    let pp = p.p.unwrap_or(0) as u8;
    let mut table = Table::new(&[
        "n",
        "nu",
        "value",
        "printed_lower",
        "printed_upper",
        "derived_lower",
        "derived_upper",
        "gap",
    ]);
    for &nu in &nus {
        for n in 1..=n_max {
            let row = if power {
                let tv = tilde_variant_variance(n, nu)?;
                vec![
                    n as f64,
                    nu,
                    tv.quadrature,
                    tv.printed_bounds.0,
                    tv.printed_bounds.1,
                    tv.derived_bounds.0,
                    tv.derived_bounds.1,
                    f64::NAN,
                ]
            } else {
                let v = viscous_variance(n, nu, pp)?;
                let (pl, pu) = match v.printed {
                    PrintedVariance::ClosedForm(x) => (x, x),
                    PrintedVariance::Bounds { lower, upper } => (lower, upper),
                };
                let (dl, du) = v.derived_bounds.unwrap_or((f64::NAN, f64::NAN));
                vec![n as f64, nu, v.quadrature, pl, pu, dl, du, inviscid_gap(n, nu, pp)?]
            };
            table.push(row);
        }
    }
    let summary = if power {
        format!("damping 2 nu n variances for nu in {nus:?}")
    } else {
        let gaps: Vec<String> = nus
            .iter()
            .map(|&nu| inviscid_gap(1, nu, pp).map(|g| format!("{g:.5e}")))
            .collect::<RunResult<_>>()?;
        format!("p = {pp}, gap at n = 1 for nu {nus:?}: [{}]", gaps.join(", "))
    };
    Ok(Report { table, summary })
}

fn spectrum(p: &Parameters) -> RunResult<Report> {
    let sys = eigen_solve(p.n_basis.unwrap_or(64))?;
    let modes = p.modes.unwrap_or(8).min(sys.len());
    let mut table = Table::new(&["k", "lambda", "residual", "convergence", "c_odd", "c_even"]);
    let mut all_positive = true;
    for k in 0..modes {
        let pair = &sys.pairs[k];
        all_positive &= pair.lambda > 0.0;
        let lim = sys.p_sequence(k, 512).and_then(|s| np_limit_estimate(&s));
        let (co, ce) = lim.map(|l| (l.c_odd, l.c_even)).unwrap_or((f64::NAN, f64::NAN));
        table.push(vec![(k + 1) as f64, pair.lambda, sys.residual(k)?, pair.convergence, co, ce]);
    }
    Ok(Report {
        table,
        summary: format!(
            "lambda_1 = {:.14}, {modes} eigenvalues, all positive: {all_positive}",
            sys.pairs[0].lambda
        ),
    })
}

fn asymptotics(p: &Parameters) -> RunResult<Report> {
    let alpha = p.alpha.ok_or(CascadeError::MissingParameter("alpha"))?;
    let d = SingularityDescriptor::real(p.zeta.unwrap_or(1.0), alpha, p.amplitude.unwrap_or(1.0))?;
    let n_max = p.n_max.unwrap_or(64);
    let g0 = GeneratingFunction::singular(vec![d], None);
    let mut table = Table::new(&["time", "n", "predicted", "extracted"]);
    let mut worst = 0.0f64;
    let mut label = classify_from_descriptor(&d);
    for t in t_grid(p, 0.0) {
        let evolved = evolve_singularity(&d, t)?;
        label = classify_from_descriptor(&evolved);
        let a = taylor_coeffs(&apply_semigroup(&g0, t)?, n_max, None)?;
        for n in 2..=n_max {
            let pred = transfer_coefficients(&evolved, n - 1)?;
            table.push(vec![t, n as f64, pred, a.at(n)]);
            if n == n_max {
                worst = worst.max((pred / a.at(n) - 1.0).abs());
            }
        }
    }
    Ok(Report {
        table,
        summary: format!("{} (relative transfer gap at n = {n_max}: {:.3e})", label.as_str(), worst),
    })
}
