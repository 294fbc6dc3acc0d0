use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Every failure the library can report.
///
/// Variants map one-to-one onto the error names used by the command line
/// reports and the C ABI error codes, so keep them flat.
#[derive(Debug, Error)]
pub enum Error {
    #[error("connectivity is not a closed oriented manifold: {0}")]
    NonManifold(String),
    #[error("degenerate geometry: {0}")]
    Degenerate(String),
    #[error("field has {got} values but the surface has {expected} vertices")]
    FieldMismatch { expected: usize, got: usize },
    #[error("linear solve did not converge (relative residual {residual:e})")]
    SolveFailure { residual: f64 },
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("trajectory too short: covers {duration} but {required} is required")]
    TrajectoryTooShort { duration: f64, required: f64 },
    #[error("unsupported hypersurface dimension n = {0}")]
    UnsupportedDimension(usize),
    #[error("denominator vanishes identically")]
    ZeroDenominator,
    #[error("exponents must satisfy t < r < s (got t={t}, r={r}, s={s})")]
    ExponentOrder { t: f64, r: f64, s: f64 },
    #[error("integrability exponent q = {q} must exceed (n+2)/2 = {bound}")]
    SubcriticalExponent { q: f64, bound: f64 },
    #[error("spacetime region contains no vertex samples")]
    EmptyRegion,
    #[error("trajectory time range unsuitable: {0}")]
    TrajectoryRange(String),
    #[error("supercritical integral {integral} is below c0 = {c0}; no normalization needed")]
    BelowThreshold { integral: f64, c0: f64 },
    #[error("domain error: {0}")]
    DomainError(String),
    #[error("monitors missing or empty")]
    MissingMonitors,
    #[error("time {t} is outside [0, T) with T = {singular_time}")]
    OutOfRange { t: f64, singular_time: f64 },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("parse error in {path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn parse(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            message: message.into(),
        }
    }

    /// Short stable identifier, used in JSON reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::NonManifold(_) => "NonManifold",
            Error::Degenerate(_) => "Degenerate",
            Error::FieldMismatch { .. } => "FieldMismatch",
            Error::SolveFailure { .. } => "SolveFailure",
            Error::InsufficientData(_) => "InsufficientData",
            Error::TrajectoryTooShort { .. } => "TrajectoryTooShort",
            Error::UnsupportedDimension(_) => "UnsupportedDimension",
            Error::ZeroDenominator => "ZeroDenominator",
            Error::ExponentOrder { .. } => "ExponentOrder",
            Error::SubcriticalExponent { .. } => "SubcriticalExponent",
            Error::EmptyRegion => "EmptyRegion",
            Error::TrajectoryRange(_) => "TrajectoryRange",
            Error::BelowThreshold { .. } => "BelowThreshold",
            Error::DomainError(_) => "DomainError",
            Error::MissingMonitors => "MissingMonitors",
            Error::OutOfRange { .. } => "OutOfRange",
            Error::ShapeMismatch(_) => "ShapeMismatch",
            Error::InvalidInput(_) => "InvalidInput",
            Error::Parse { .. } => "Parse",
            Error::Io { .. } => "Io",
            Error::Json(_) => "Json",
        }
    }
}
