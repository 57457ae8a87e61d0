use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("argument out of domain: {0}")]
    Domain(String),

    #[error("tied x values at {value} (continuous data required)")]
    Tie { value: f64 },

    #[error("pair {index} violates x <= y (x = {x}, y = {y})")]
    TruncationOrder { index: usize, x: f64, y: f64 },

    #[error("line {line}: {message}")]
    Input { line: u64, message: String },

    /// The Lynden-Bell product vanishes at the threshold: some point at or
    /// above it is covered by itself only (`n C_n = 1`).
    #[error("degenerate Lynden-Bell mass: T = {t} lies above the threshold {threshold}")]
    DegenerateMass { t: f64, threshold: f64 },

    #[error("degenerate combination: Hill estimates of x* and y* coincide ({value})")]
    DegenerateCombination { value: f64 },

    #[error("extrapolation order: p_n = {p_n} is not below the estimated tail probability {tail}")]
    ExtrapolationOrder { p_n: f64, tail: f64 },

    #[error("quadrature did not converge: {0}")]
    Quadrature(String),

    #[error("truncated sampling stalled after {attempts} draws with {kept} pairs kept")]
    GenerationStall { attempts: u64, kept: usize },

    #[error("invalid model literal `{0}`")]
    ModelLiteral(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Stable machine-readable code, used as the prefix of CLI error lines.
    pub fn code(&self) -> &'static str {
        match self {
            Error::InvalidParameter(_) => "E_PARAM",
            Error::Domain(_) => "E_DOMAIN",
            Error::Tie { .. } => "E_TIE",
            Error::TruncationOrder { .. } => "E_ORDER",
            Error::Input { .. } => "E_INPUT",
            Error::DegenerateMass { .. } => "E_DEGENERATE",
            Error::DegenerateCombination { .. } => "E_COMBINATION",
            Error::ExtrapolationOrder { .. } => "E_EXTRAPOLATION",
            Error::Quadrature(_) => "E_QUADRATURE",
            Error::GenerationStall { .. } => "E_STALL",
            Error::ModelLiteral(_) => "E_MODEL",
            Error::Io(_) => "E_IO",
        }
    }
}
