use thiserror::Error;

/// Errors raised by the numerical engine.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("inverse temperature must be positive, got {0}")]
    NonPositiveBeta(f64),

    #[error("energy {energy} coincides with the stationary energy {stationary}")]
    AtStationaryEnergy { energy: f64, stationary: f64 },

    #[error(
        "energy {energy} lies inside the exclusion window of the singular point at {singular}"
    )]
    NearSingularPoint { energy: f64, singular: f64 },

    #[error("energy {energy} is outside the usable grid range [{lo}, {hi}]")]
    OutsideGrid { energy: f64, lo: f64, hi: f64 },

    #[error("grid spacings differ: {0} vs {1}")]
    GridMismatch(f64, f64),

    #[error("level density vanishes at E = {0}")]
    ZeroDensity(f64),

    #[error("quadrature failed to converge: estimate {value:e} with error {error:e}")]
    Quadrature { value: f64, error: f64 },

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    #[error("microcanonical temperature undefined: {0}")]
    MicrocanonicalUndefined(String),

    #[error("config error{}: {message}", line.map(|l| format!(" at line {l}")).unwrap_or_default())]
    Config {
        line: Option<usize>,
        message: String,
    },

    #[error("i/o error: {0}")]
    Io(String),

    #[error("caloric equation at beta = {beta} has {roots} roots; a unique root is required")]
    NotUnique { beta: f64, roots: usize },
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Self::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Self::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_beta(beta: f64) -> Result<()> {
    if beta > 0.0 && beta.is_finite() {
        Ok(())
    } else {
        Err(Error::NonPositiveBeta(beta))
    }
}
