use thiserror::Error;

/// Errors raised by lattice construction, invariant evaluation and propagation.
#[derive(Debug, Error)]
pub enum Error {
    #[error("link {from} -> {to}: matrix deviates from unitary by {deviation:.3e}")]
    NonUnitaryLink { from: usize, to: usize, deviation: f64 },

    #[error("matrix is not Hermitian (max |M - M^dagger| = {0:.3e})")]
    NotHermitian(f64),

    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: String, reason: String },

    #[error("no link between sites {0} and {1}")]
    MissingLink(usize, usize),

    #[error("gap closes: {0}")]
    GapClosing(String),

    #[error("band {band} touches a neighbouring band (min gap {gap:.3e})")]
    BandTouching { band: usize, gap: f64 },

    #[error("p = {p} and q = {q} must be coprime with 0 < p < q")]
    NotCoprime { p: i64, q: i64 },

    #[error("winding of gap {gap} is ambiguous (w = +/-{w})")]
    AmbiguousWinding { gap: usize, w: i64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("step size underflow at t = {t}")]
    StepUnderflow { t: f64 },

    #[error("integration diverged at t = {t}")]
    Divergence { t: f64 },

    #[error("geometry: {0}")]
    Geometry(String),

    #[error("no resonant slice found in the frequency grid")]
    NoResonance,

    #[error("least-squares fit failed: {0}")]
    FitFailed(String),

    #[error("config: {0}")]
    Config(String),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn param(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            field: field.into(),
            reason: reason.into(),
        }
    }

    /// True for failures of the numerics (gap closing, divergence, fits)
    /// rather than of the input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::GapClosing(_)
                | Error::BandTouching { .. }
                | Error::StepUnderflow { .. }
                | Error::Divergence { .. }
                | Error::NoResonance
                | Error::FitFailed(_)
                | Error::AmbiguousWinding { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
