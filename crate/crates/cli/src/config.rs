//! Scenario configuration: JSON parsing with a full error list, flag
//! overlays and range checks.

use std::fmt;

use serde::Serialize;
use serde_json::{Map, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Model {
    A,
    B,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Exact,
    Integrate,
    Stationary,
    Spectrum,
    Asymptotics,
    Inviscid,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Exact => "exact",
            Mode::Integrate => "integrate",
            Mode::Stationary => "stationary",
            Mode::Spectrum => "spectrum",
            Mode::Asymptotics => "asymptotics",
            Mode::Inviscid => "inviscid",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        [
            Mode::Exact,
            Mode::Integrate,
            Mode::Stationary,
            Mode::Spectrum,
            Mode::Asymptotics,
            Mode::Inviscid,
        ]
        .into_iter()
        .find(|m| m.name() == s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

/// Every tunable of every mode; `None` means "use the mode default".
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Parameters {
    pub n_max: Option<usize>,
    pub t_grid: Option<Vec<f64>>,
    pub seed: Option<u64>,
    pub nu: Option<f64>,
    pub nu_grid: Option<Vec<f64>>,
    pub p: Option<u64>,
    pub variant: Option<String>,
    pub m: Option<usize>,
    pub example_id: Option<u64>,
    pub alpha: Option<f64>,
    pub dt: Option<f64>,
    pub method: Option<String>,
    pub forcing: Option<String>,
    pub amplitude: Option<f64>,
    pub closure: Option<String>,
    pub initial: Option<String>,
    pub kind: Option<String>,
    pub n_basis: Option<usize>,
    pub modes: Option<usize>,
    pub samples: Option<usize>,
    pub lookback: Option<f64>,
    pub x_grid: Option<Vec<f64>>,
    pub paths: Option<usize>,
    pub zeta: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutputSpec {
    pub path: Option<String>,
    pub format: Format,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioConfig {
    pub model: Model,
    pub mode: Mode,
    pub parameters: Parameters,
    pub output: OutputSpec,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub key: String,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.key, self.message)
    }
}

fn err(key: &str, message: impl Into<String>) -> ConfigError {
    ConfigError {
        key: key.to_string(),
        message: message.into(),
    }
}

#[derive(Clone, Copy)]
enum Kind {
    Uint,
    Float,
    FloatList,
    Str,
}

const PARAMETER_KEYS: &[(&str, Kind)] = &[
    ("n_max", Kind::Uint),
    ("t_grid", Kind::FloatList),
    ("seed", Kind::Uint),
    ("nu", Kind::Float),
    ("nu_grid", Kind::FloatList),
    ("p", Kind::Uint),
    ("variant", Kind::Str),
    ("m", Kind::Uint),
    ("example_id", Kind::Uint),
    ("alpha", Kind::Float),
    ("dt", Kind::Float),
    ("method", Kind::Str),
    ("forcing", Kind::Str),
    ("amplitude", Kind::Float),
    ("closure", Kind::Str),
    ("initial", Kind::Str),
    ("kind", Kind::Str),
    ("n_basis", Kind::Uint),
    ("modes", Kind::Uint),
    ("samples", Kind::Uint),
    ("lookback", Kind::Float),
    ("x_grid", Kind::FloatList),
    ("paths", Kind::Uint),
    ("zeta", Kind::Float),
];

enum Typed {
    Uint(u64),
    Float(f64),
    FloatList(Vec<f64>),
    Str(String),
}

fn typed(key: &str, kind: Kind, v: &Value) -> Result<Typed, ConfigError> {
    match kind {
        Kind::Uint => v
            .as_u64()
            .map(Typed::Uint)
            .ok_or_else(|| err(key, format!("expected a non-negative integer, got {v}"))),
        Kind::Float => v
            .as_f64()
            .map(Typed::Float)
            .ok_or_else(|| err(key, format!("expected a number, got {v}"))),
        Kind::FloatList => match v {
            Value::Number(n) => Ok(Typed::FloatList(vec![n.as_f64().unwrap_or(f64::NAN)])),
            Value::Array(items) => items
                .iter()
                .map(|x| x.as_f64())
                .collect::<Option<Vec<f64>>>()
                .map(Typed::FloatList)
                .ok_or_else(|| err(key, "expected a number or an array of numbers")),
            _ => Err(err(key, format!("expected a number or an array of numbers, got {v}"))),
        },
        Kind::Str => v
            .as_str()
            .map(|s| Typed::Str(s.to_string()))
            .ok_or_else(|| err(key, format!("expected a string, got {v}"))),
    }
}

fn assign(p: &mut Parameters, key: &str, v: Typed) {
    match (key, v) {
        ("n_max", Typed::Uint(x)) => p.n_max = Some(x as usize),
        ("t_grid", Typed::FloatList(x)) => p.t_grid = Some(x),
        ("seed", Typed::Uint(x)) => p.seed = Some(x),
        ("nu", Typed::Float(x)) => p.nu = Some(x),
        ("nu_grid", Typed::FloatList(x)) => p.nu_grid = Some(x),
        ("p", Typed::Uint(x)) => p.p = Some(x),
        ("variant", Typed::Str(x)) => p.variant = Some(x),
        ("m", Typed::Uint(x)) => p.m = Some(x as usize),
        ("example_id", Typed::Uint(x)) => p.example_id = Some(x),
        ("alpha", Typed::Float(x)) => p.alpha = Some(x),
        ("dt", Typed::Float(x)) => p.dt = Some(x),
        ("method", Typed::Str(x)) => p.method = Some(x),
        ("forcing", Typed::Str(x)) => p.forcing = Some(x),
        ("amplitude", Typed::Float(x)) => p.amplitude = Some(x),
        ("closure", Typed::Str(x)) => p.closure = Some(x),
        ("initial", Typed::Str(x)) => p.initial = Some(x),
        ("kind", Typed::Str(x)) => p.kind = Some(x),
        ("n_basis", Typed::Uint(x)) => p.n_basis = Some(x as usize),
        ("modes", Typed::Uint(x)) => p.modes = Some(x as usize),
        ("samples", Typed::Uint(x)) => p.samples = Some(x as usize),
        ("lookback", Typed::Float(x)) => p.lookback = Some(x),
        ("x_grid", Typed::FloatList(x)) => p.x_grid = Some(x),
        ("paths", Typed::Uint(x)) => p.paths = Some(x as usize),
        ("zeta", Typed::Float(x)) => p.zeta = Some(x),
        _ => unreachable!("key table and assign disagree"),
    }
}

/// Raw config as read from JSON, before mode-specific checks.
#[derive(Debug, Clone, Default)]
pub struct RawConfig {
    pub model: Option<Model>,
    pub mode: Option<Mode>,
    pub parameters: Parameters,
    pub output_path: Option<String>,
    pub format: Option<Format>,
}

fn parse_object(obj: &Map<String, Value>, errors: &mut Vec<ConfigError>) -> RawConfig {
    let mut raw = RawConfig::default();
    for (key, value) in obj {
        match key.as_str() {
            "model" => match value.as_str() {
                Some("A") | Some("a") => raw.model = Some(Model::A),
                Some("B") | Some("b") => raw.model = Some(Model::B),
                _ => errors.push(err("model", format!("expected \"A\" or \"B\", got {value}"))),
            },
            "mode" => match value.as_str().and_then(Mode::parse) {
                Some(m) => raw.mode = Some(m),
                None => errors.push(err("mode", format!("unknown mode {value}"))),
            },
            "parameters" => match value.as_object() {
                Some(params) => {
                    for (k, v) in params {
                        match PARAMETER_KEYS.iter().find(|(name, _)| name == k) {
                            Some((name, kind)) => match typed(name, *kind, v) {
                                Ok(t) => assign(&mut raw.parameters, name, t),
                                Err(e) => errors.push(e),
                            },
                            None => errors.push(err(&format!("parameters.{k}"), "unknown key")),
                        }
                    }
                }
                None => errors.push(err("parameters", "expected an object")),
            },
            "output" => match value.as_object() {
                Some(out) => {
                    for (k, v) in out {
                        match k.as_str() {
                            "path" => match v.as_str() {
                                Some(s) => raw.output_path = Some(s.to_string()),
                                None => errors.push(err("output.path", "expected a string")),
                            },
                            "format" => match v.as_str() {
                                Some("csv") => raw.format = Some(Format::Csv),
                                Some("json") => raw.format = Some(Format::Json),
                                _ => errors.push(err("output.format", format!("expected \"csv\" or \"json\", got {v}"))),
                            },
                            _ => errors.push(err(&format!("output.{k}"), "unknown key")),
                        }
                    }
                }
                None => errors.push(err("output", "expected an object")),
            },
            _ => errors.push(err(key, "unknown key")),
        }
    }
    raw
}

/// Parses JSON config text, collecting every schema violation.
pub fn parse_config(text: &str) -> Result<RawConfig, Vec<ConfigError>> {
    let value: Value = serde_json::from_str(text).map_err(|e| vec![err("<json>", format!("parse error: {e}"))])?;
    let Some(obj) = value.as_object() else {
        return Err(vec![err("<json>", "top level must be an object")]);
    };
    let mut errors = Vec::new();
    let raw = parse_object(obj, &mut errors);
    if errors.is_empty() {
        Ok(raw)
    } else {
        Err(errors)
    }
}

impl Parameters {
    /// Fields set in `other` replace those in `self`.
    pub fn overlay(&mut self, other: &Parameters) {
        macro_rules! take {
            ($($f:ident),*) => { $( if other.$f.is_some() { self.$f = other.$f.clone(); } )* };
        }
        take!(
            n_max, t_grid, seed, nu, nu_grid, p, variant, m, example_id, alpha, dt, method, forcing, amplitude, closure,
            initial, kind, n_basis, modes, samples, lookback, x_grid, paths, zeta
        );
    }
}

fn check_choice(errors: &mut Vec<ConfigError>, key: &str, value: &Option<String>, allowed: &[&str]) {
    if let Some(v) = value {
        if !allowed.contains(&v.as_str()) {
            errors.push(err(key, format!("must be one of {}, got \"{v}\"", allowed.join(", "))));
        }
    }
}

/// Range checks for every parameter that is set, plus mode-specific
/// requirements. Returns the full list of violations.
pub fn check_ranges(cfg: &ScenarioConfig) -> Vec<ConfigError> {
    let p = &cfg.parameters;
    let mut e = Vec::new();
    let finite = |x: f64| x.is_finite();
    if let Some(n) = p.n_max {
        let min = if cfg.mode == Mode::Integrate { 4 } else { 1 };
        if n < min || n > 1 << 20 {
            e.push(err("n_max", format!("must lie in {min}..=1048576, got {n}")));
        }
    }
    if let Some(ts) = &p.t_grid {
        if ts.is_empty() || ts.iter().any(|t| !(finite(*t) && *t >= 0.0)) {
            e.push(err("t_grid", "times must be finite and ≥ 0"));
        }
    }
    if let Some(nu) = p.nu {
        if !(finite(nu) && nu >= 0.0) {
            e.push(err("nu", format!("must be finite and ≥ 0, got {nu}")));
        }
    }
    if let Some(nus) = &p.nu_grid {
        if nus.is_empty() || nus.iter().any(|nu| !(finite(*nu) && *nu >= 0.0)) {
            e.push(err("nu_grid", "values must be finite and ≥ 0"));
        }
    }
    if let Some(pp) = p.p {
        if pp > 1 {
            e.push(err("p", format!("must be 0 or 1, got {pp}")));
        }
    }
    check_choice(&mut e, "variant", &p.variant, &["lambda_product", "power"]);
    check_choice(&mut e, "method", &p.method, &["rk4", "euler_maruyama", "feynman_kac"]);
    check_choice(&mut e, "forcing", &p.forcing, &["none", "constant", "white_noise"]);
    check_choice(&mut e, "closure", &p.closure, &["zero_pad", "sponge"]);
    check_choice(&mut e, "initial", &p.initial, &["example", "delta", "inverse_square"]);
    check_choice(&mut e, "kind", &p.kind, &["covariance", "samples", "fixed_point"]);
    if let Some(m) = p.m {
        if m == 0 {
            e.push(err("m", "must be ≥ 1"));
        } else if let Some(n) = p.n_max {
            if m > n {
                e.push(err("m", format!("must not exceed n_max = {n}, got {m}")));
            }
        }
    }
    let example_used = matches!(cfg.mode, Mode::Exact | Mode::Integrate) && cfg.model == Model::A;
    if let Some(id) = p.example_id {
        if !(1..=6).contains(&id) {
            e.push(err("example_id", format!("must lie in 1..=6, got {id}")));
        }
    }
    if let Some(a) = p.alpha {
        if !(finite(a) && a > 0.0) {
            e.push(err("alpha", format!("must be finite and > 0, got {a}")));
        }
    }
    if example_used && p.example_id == Some(6) && p.initial.as_deref().is_none_or(|s| s == "example") {
        match p.alpha {
            None => e.push(err("alpha", "missing parameter: example 6 requires alpha > 1")),
            Some(a) if a <= 1.0 => e.push(err("alpha", format!("example 6 requires alpha > 1, got {a}"))),
            _ => {}
        }
    }
    if cfg.mode == Mode::Asymptotics && p.alpha.is_none() {
        e.push(err("alpha", "missing parameter: asymptotics requires the singularity exponent alpha"));
    }
    if let Some(dt) = p.dt {
        if !(finite(dt) && dt > 0.0) {
            e.push(err("dt", format!("must be finite and > 0, got {dt}")));
        }
    }
    if let Some(a) = p.amplitude {
        if !finite(a) {
            e.push(err("amplitude", "must be finite"));
        }
    }
    if let Some(nb) = p.n_basis {
        if !(8..=512).contains(&nb) {
            e.push(err("n_basis", format!("must lie in 8..=512, got {nb}")));
        }
    }
    if let Some(k) = p.modes {
        let cap = p.n_basis.unwrap_or(512);
        if k == 0 || k > cap {
            e.push(err("modes", format!("must lie in 1..={cap}, got {k}")));
        }
    }
    if let Some(s) = p.samples {
        if s < 2 {
            e.push(err("samples", format!("must be ≥ 2, got {s}")));
        }
    }
    if let Some(l) = p.lookback {
        if !(finite(l) && l > 0.0) {
            e.push(err("lookback", format!("must be finite and > 0, got {l}")));
        }
    }
    if let Some(xs) = &p.x_grid {
        if xs.is_empty() || xs.iter().any(|x| !(x.abs() <= 1.0)) {
            e.push(err("x_grid", "points must lie in [-1, 1]"));
        }
    }
    if let Some(n) = p.paths {
        if n < 4 {
            e.push(err("paths", format!("must be ≥ 4, got {n}")));
        }
    }
    if let Some(z) = p.zeta {
        if !(finite(z) && z.abs() >= 1.0) {
            e.push(err("zeta", format!("must be real with |zeta| ≥ 1, got {z}")));
        }
    }
    if cfg.model == Model::B && matches!(cfg.mode, Mode::Asymptotics | Mode::Inviscid) {
        e.push(err("model", format!("mode {} is defined for model A only", cfg.mode.name())));
    }
    if cfg.model == Model::A && cfg.mode == Mode::Spectrum {
        e.push(err("model", "spectrum is defined for model B only"));
    }
    e
}

/// Full validation of JSON text: schema, required fields and ranges.
pub fn validate_config(text: &str) -> Result<ScenarioConfig, Vec<ConfigError>> {
    let raw = parse_config(text)?;
    let mut errors = Vec::new();
    if raw.mode.is_none() {
        errors.push(err("mode", "missing"));
    }
    let Some(mode) = raw.mode else {
        return Err(errors);
    };
    let cfg = resolve(raw, mode);
    errors.extend(check_ranges(&cfg));
    if errors.is_empty() {
        Ok(cfg)
    } else {
        Err(errors)
    }
}

/// Fills defaults that do not depend on the mode.
pub fn resolve(raw: RawConfig, mode: Mode) -> ScenarioConfig {
    let model = raw.model.unwrap_or(if mode == Mode::Spectrum { Model::B } else { Model::A });
    ScenarioConfig {
        model,
        mode,
        parameters: raw.parameters,
        output: OutputSpec {
            path: raw.output_path,
            format: raw.format.unwrap_or(Format::Csv),
        },
    }
}
