//! `cascade`: batch scenario runner for the shell-model laboratory.
//!
//! Exit codes: 0 success, 1 comparison outside tolerance, 2 invalid input,
//! 3 numerical failure.

mod config;
mod output;
mod scenarios;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use config::{check_ranges, parse_config, resolve, validate_config, ConfigError, Format, Mode, Model, Parameters, RawConfig};
use output::{compare_tables, read_csv, write_output};

#[derive(Parser)]
#[command(name = "cascade", version, about = "Exact, integrated and spectral runs of two linear shell models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Exact solution: model A by generating functions, model B spectrally.
    Exact(RunArgs),
    /// Truncated time integration (RK4, Euler–Maruyama) or Feynman–Kac paths.
    Integrate(RunArgs),
    /// Stationary covariance, Monte Carlo samples or forced fixed points.
    Stationary(StationaryArgs),
    /// Viscous variances and the inviscid gap.
    Inviscid(RunArgs),
    /// Model-B eigenvalues and coefficient limits.
    Spectrum(RunArgs),
    /// Transfer-theorem predictions against extracted coefficients.
    Asymptotics(RunArgs),
    /// Column-wise comparison of two CSV outputs.
    Compare(CompareArgs),
    /// Validate a JSON scenario file and print the resolved configuration.
    Validate {
        config: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelArg {
    A,
    B,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Args)]
struct RunArgs {
    /// JSON scenario file; flags override its parameters.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output file (stdout when absent).
    #[arg(long, short)]
    output: Option<String>,
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
    /// Validate and print the resolved parameters without computing.
    #[arg(long)]
    dry_run: bool,
    #[arg(long, value_enum, ignore_case = true)]
    model: Option<ModelArg>,
    #[arg(long)]
    n_max: Option<usize>,
    /// Output times; repeat or separate with commas.
    #[arg(long = "t", value_delimiter = ',', allow_negative_numbers = true)]
    t: Vec<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, allow_negative_numbers = true)]
    nu: Option<f64>,
    #[arg(long = "nu-grid", value_delimiter = ',', allow_negative_numbers = true)]
    nu_grid: Vec<f64>,
    #[arg(long)]
    p: Option<u64>,
    /// lambda_product or power.
    #[arg(long)]
    variant: Option<String>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long = "example")]
    example_id: Option<u64>,
    #[arg(long, allow_negative_numbers = true)]
    alpha: Option<f64>,
    #[arg(long)]
    dt: Option<f64>,
    /// rk4, euler_maruyama or feynman_kac.
    #[arg(long)]
    method: Option<String>,
    /// none, constant or white_noise.
    #[arg(long)]
    forcing: Option<String>,
    #[arg(long, allow_negative_numbers = true)]
    amplitude: Option<f64>,
    /// zero_pad or sponge.
    #[arg(long)]
    closure: Option<String>,
    /// example, delta or inverse_square.
    #[arg(long)]
    initial: Option<String>,
    #[arg(long)]
    n_basis: Option<usize>,
    #[arg(long)]
    modes: Option<usize>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    lookback: Option<f64>,
    /// Evaluation points in [-1, 1]; repeat or separate with commas.
    #[arg(long = "x", value_delimiter = ',', allow_negative_numbers = true)]
    x: Vec<f64>,
    #[arg(long)]
    paths: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    zeta: Option<f64>,
}

#[derive(Args)]
struct StationaryArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Closed-form and quadrature covariance table (default).
    #[arg(long, conflicts_with_all = ["fixed_point", "sample"])]
    covariance: bool,
    /// Forced fixed point (model A) or forced steady state (model B).
    #[arg(long)]
    fixed_point: bool,
    /// Monte Carlo sample covariance.
    #[arg(long)]
    sample: bool,
}

#[derive(Args)]
struct CompareArgs {
    file_a: PathBuf,
    file_b: PathBuf,
    /// Maximum absolute gap per value column.
    #[arg(long, default_value_t = 1e-6)]
    tolerance: f64,
    /// Compare the `value` column in standard errors instead.
    #[arg(long)]
    sigma: Option<f64>,
}

impl RunArgs {
    fn parameters(&self) -> Parameters {
        let list = |v: &Vec<f64>| (!v.is_empty()).then(|| v.clone());
        Parameters {
            n_max: self.n_max,
            t_grid: list(&self.t),
            seed: self.seed,
            nu: self.nu,
            nu_grid: list(&self.nu_grid),
            p: self.p,
            variant: self.variant.clone(),
            m: self.m,
            example_id: self.example_id,
            alpha: self.alpha,
            dt: self.dt,
            method: self.method.clone(),
            forcing: self.forcing.clone(),
            amplitude: self.amplitude,
            closure: self.closure.clone(),
            initial: self.initial.clone(),
            kind: None,
            n_basis: self.n_basis,
            modes: self.modes,
            samples: self.samples,
            lookback: self.lookback,
            x_grid: list(&self.x),
            paths: self.paths,
            zeta: self.zeta,
        }
    }
}

const EXIT_TOLERANCE: u8 = 1;
const EXIT_INVALID: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

fn report_errors(errors: &[ConfigError]) -> ExitCode {
    for e in errors {
        eprintln!("error: {e}");
    }
    ExitCode::from(EXIT_INVALID)
}

fn default_seed() -> Result<u64, ConfigError> {
    match std::env::var("CASCADE_SEED") {
        Ok(s) => s.trim().parse().map_err(|_| ConfigError {
            key: "CASCADE_SEED".into(),
            message: format!("expected an unsigned integer, got \"{s}\""),
        }),
        Err(_) => Ok(0),
    }
}

fn run_mode(mode: Mode, args: &RunArgs, kind: Option<&str>) -> ExitCode {
    let mut raw = match &args.config {
        Some(path) => match std::fs::read_to_string(path) {
            Ok(text) => match parse_config(&text) {
                Ok(raw) => raw,
                Err(errors) => return report_errors(&errors),
            },
            Err(e) => {
                eprintln!("error: cannot read {}: {e}", path.display());
                return ExitCode::from(EXIT_INVALID);
            }
        },
        None => RawConfig::default(),
    };
    let mut errors = Vec::new();
    if let Some(cfg_mode) = raw.mode {
        if cfg_mode != mode {
            errors.push(ConfigError {
                key: "mode".into(),
                message: format!("config declares {}, subcommand is {}", cfg_mode.name(), mode.name()),
            });
        }
    }
    let mut flags = args.parameters();
    flags.kind = kind.map(str::to_string);
    raw.parameters.overlay(&flags);
    if let Some(m) = args.model {
        raw.model = Some(match m {
            ModelArg::A => Model::A,
            ModelArg::B => Model::B,
        });
    }
    if let Some(f) = args.format {
        raw.format = Some(match f {
            FormatArg::Csv => Format::Csv,
            FormatArg::Json => Format::Json,
        });
    }
    if args.output.is_some() {
        raw.output_path = args.output.clone();
    }
    let cfg = resolve(raw, mode);
    errors.extend(check_ranges(&cfg));
    let seed = match default_seed() {
        Ok(s) => s,
        Err(e) => {
            errors.push(e);
            0
        }
    };
    if !errors.is_empty() {
        return report_errors(&errors);
    }
    if args.dry_run {
        let mut resolved = serde_json::to_value(&cfg).expect("config serialises");
        // Unset parameters take the mode defaults.
        if let Some(params) = resolved["parameters"].as_object_mut() {
            params.retain(|_, v| !v.is_null());
        }
        resolved["default_seed"] = seed.into();
        println!("{}", serde_json::to_string_pretty(&resolved).expect("json"));
        return ExitCode::SUCCESS;
    }
    match scenarios::run(&cfg, seed) {
        Ok(report) => {
            let text = report.table.render(cfg.output.format, &report.summary);
            if let Err(e) = write_output(cfg.output.path.as_deref(), &text) {
                eprintln!("error: {e}");
                return ExitCode::from(EXIT_INVALID);
            }
            eprintln!("summary: {}", report.summary);
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numerical() { EXIT_NUMERICAL } else { EXIT_INVALID })
        }
    }
}

fn compare(args: &CompareArgs) -> ExitCode {
    let tables = read_csv(&args.file_a).and_then(|a| read_csv(&args.file_b).map(|b| (a, b)));
    let gaps = tables.and_then(|(a, b)| compare_tables(&a, &b));
    let gaps = match gaps {
        Ok(g) => g,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_INVALID);
        }
    };
    let mut ok = true;
    println!("column,max_abs,max_rel,max_sigma");
    for g in &gaps {
        let sigma = g.max_sigma.map_or("".to_string(), |s| format!("{s:.6e}"));
        println!("{},{:.6e},{:.6e},{sigma}", g.column, g.max_abs, g.max_rel);
        ok &= match (args.sigma, g.max_sigma) {
            (Some(limit), Some(s)) if g.column == "value" => s <= limit,
            _ => g.max_abs <= args.tolerance,
        };
    }
    let worst = gaps.iter().map(|g| g.max_abs).fold(0.0, f64::max);
    eprintln!(
        "summary: {} (max absolute gap {worst:.3e})",
        if ok { "within tolerance" } else { "outside tolerance" }
    );
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_TOLERANCE)
    }
}

fn validate(path: &PathBuf) -> ExitCode {
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", path.display());
            return ExitCode::from(EXIT_INVALID);
        }
    };
    match validate_config(&text) {
        Ok(cfg) => {
            println!("{}", serde_json::to_string_pretty(&cfg).expect("json"));
            eprintln!("summary: valid {} scenario for model {:?}", cfg.mode.name(), cfg.model);
            ExitCode::SUCCESS
        }
        Err(errors) => report_errors(&errors),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INVALID } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match &cli.command {
        Command::Exact(a) => run_mode(Mode::Exact, a, None),
        Command::Integrate(a) => run_mode(Mode::Integrate, a, None),
        Command::Stationary(s) => {
            let kind = if s.fixed_point {
                Some("fixed_point")
            } else if s.sample {
                Some("samples")
            } else if s.covariance {
                Some("covariance")
            } else {
                None
            };
            run_mode(Mode::Stationary, &s.run, kind)
        }
        Command::Inviscid(a) => run_mode(Mode::Inviscid, a, None),
        Command::Spectrum(a) => run_mode(Mode::Spectrum, a, None),
        Command::Asymptotics(a) => run_mode(Mode::Asymptotics, a, None),
        Command::Compare(c) => compare(c),
        Command::Validate { config } => validate(config),
    }
}
