use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A configuration value failed validation. `field` names the offending key.
    #[error("invalid config: field `{field}`: {reason}")]
    InvalidConfig { field: String, reason: String },

    /// A line of a config file could not be applied.
    #[error("config line {line}: field `{field}`: {reason}")]
    ConfigLine { line: usize, field: String, reason: String },

    #[error("contention group {group} has no links")]
    EmptyGroup { group: u8 },

    #[error("target success probability {target} exceeds the achievable maximum {max} for {links} links")]
    UnachievableTarget { target: f64, max: f64, links: usize },

    #[error("quadrature budget exceeded: tail mass {tail_mass:e} > budget {budget:e}")]
    QuadratureBudget { tail_mass: f64, budget: f64 },

    #[error("invalid rate distribution: {0}")]
    InvalidDistribution(String),

    /// `Φ(0) - 0 <= 0`: the scenario carries no reward, so there is no positive fixed point.
    #[error("no sign change for the fixed-point map: Φ(0) = {value_at_zero}")]
    NoSignChange { value_at_zero: f64 },

    #[error("verification failed: {0}")]
    VerifyFailed(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Process exit status for this error: 2 configuration, 3 solver or
    /// quadrature, 4 I/O, 5 failed verification.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidConfig { .. }
            | Error::ConfigLine { .. }
            | Error::EmptyGroup { .. }
            | Error::UnachievableTarget { .. } => 2,
            Error::QuadratureBudget { .. } | Error::InvalidDistribution(_) | Error::NoSignChange { .. } => 3,
            Error::Io { .. } => 4,
            Error::VerifyFailed(_) => 5,
        }
    }

    pub(crate) fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidConfig {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}
