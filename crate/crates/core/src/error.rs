use thiserror::Error;

/// Why a configuration cannot meet its SINR targets.
#[derive(Debug, Clone, PartialEq)]
pub enum Infeasibility {
    /// The normalized cross-gain matrix has spectral radius at or above one.
    SpectralRadius(f64),
    /// The equality solution exists but at least one power is outside `(0, p_tx_max]`.
    PowerCap { link: usize, required_mw: f64 },
    /// Every candidate beamsteering size needs more than `p_tx_max`.
    NoCandidate { link: Option<usize>, required_omni_mw: f64 },
    /// No beamsteering-size vector admits a feasible power allocation.
    NoSizeVector,
}

impl std::fmt::Display for Infeasibility {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Infeasibility::SpectralRadius(r) => write!(f, "spectral radius {r} >= 1"),
            Infeasibility::PowerCap { link, required_mw } => {
                write!(f, "link {link} needs {required_mw} mW, outside (0, p_tx_max]")
            }
            Infeasibility::NoCandidate { link, required_omni_mw } => {
                if let Some(link) = link {
                    write!(f, "link {link}: ")?;
                }
                write!(
                    f,
                    "no beamsteering size fits under the power cap (omni power {required_omni_mw} mW)"
                )
            }
            Infeasibility::NoSizeVector => write!(f, "no beamsteering-size vector is feasible"),
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("invalid geometry: {0}")]
    Geometry(String),

    #[error("infeasible: {0}")]
    Infeasible(Infeasibility),

    #[error("did not converge after {iterations} iterations (worst relative SINR gap {worst_gap})")]
    NonConverged { iterations: usize, worst_gap: f64 },

    #[error("scenario error at `{path}`{}: {message}", line.map(|l| format!(" (line {l})")).unwrap_or_default())]
    Scenario {
        path: String,
        line: Option<usize>,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub fn is_infeasible(&self) -> bool {
        matches!(self, Error::Infeasible(_) | Error::NonConverged { .. })
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
