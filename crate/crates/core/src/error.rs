use thiserror::Error;

pub type Result<T> = std::result::Result<T, CascadeError>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CascadeError {
    #[error("index {index} out of range (n_max = {n_max})")]
    IndexOutOfRange { index: usize, n_max: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("insufficient data: need at least {needed} points, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("point {re}{im:+}i is within 1e-12 of the Moebius pole")]
    PoleProximity { re: f64, im: f64 },

    #[error("time {t} is at or beyond the blow-up horizon {horizon}")]
    HorizonExceeded { t: f64, horizon: f64 },

    #[error("recorded singularity at {location} lies on the segment [-tanh t, 0]")]
    AnalyticityViolation { location: f64 },

    #[error("no sampling radius reaches the aliasing tolerance with at most {max_samples} samples")]
    RadiusSelectionFailure { max_samples: usize },

    #[error("instability: |a_{index}| exceeded 1e12 at t = {time}")]
    Instability { time: f64, index: usize },

    #[error("record has zero initial energy")]
    ZeroEnergy,

    #[error("record carries no stochastic injection")]
    NoInjection,

    #[error("not equilibrated: half-record estimates {first} and {second} differ by more than 10%")]
    NotEquilibrated { first: f64, second: f64 },

    #[error("lookback {lookback} too short: kernel truncation {truncation:e} exceeds tolerance")]
    LookbackTooShort { lookback: f64, truncation: f64 },

    #[error("eigenvalue did not converge: {a} vs {b} between resolutions")]
    NonConvergence { a: f64, b: f64 },

    #[error("tail is not Cauchy over the supplied range")]
    NonCauchyTail,

    #[error("initial coefficients are not summable under the alternating Cauchy test")]
    TailNotSummable,

    #[error("forcing mode m = {m} has zero projection onto every odd eigenfunction")]
    ZeroProjection { m: usize },

    #[error("exponent alpha = {alpha} lies in the forbidden set {{0, -1, -2, ...}}")]
    ForbiddenAlpha { alpha: f64 },

    #[error("descriptor with |zeta| = {modulus} is off the unit circle")]
    OffCircle { modulus: f64 },

    #[error("tail fit needs positive entries under a constant sign pattern")]
    NonPositiveEntries,

    #[error("missing parameter `{0}`")]
    MissingParameter(&'static str),

    #[error("decomposition residual {beta} exceeds bound {bound}")]
    BoundViolated { beta: f64, bound: f64 },
}

impl CascadeError {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        CascadeError::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// True for failures that are numerical rather than caused by bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            CascadeError::PoleProximity { .. }
                | CascadeError::HorizonExceeded { .. }
                | CascadeError::AnalyticityViolation { .. }
                | CascadeError::RadiusSelectionFailure { .. }
                | CascadeError::Instability { .. }
                | CascadeError::NotEquilibrated { .. }
                | CascadeError::NonConvergence { .. }
                | CascadeError::NonCauchyTail
                | CascadeError::BoundViolated { .. }
        )
    }
}
