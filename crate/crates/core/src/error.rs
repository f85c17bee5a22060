use thiserror::Error;

/// Errors shared by every module in this crate.
#[derive(Debug, Error)]
pub enum CoreError {
    /// A precondition on caller-supplied data was violated.
    #[error("contract violation: {0}")]
    Contract(String),

    /// Two objects that must share a grid do not.
    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    /// A grid or parameter set cannot support the requested computation.
    /// `suggested_points` carries a usable grid size when one can be estimated.
    #[error("setup error: {message}")]
    Setup {
        message: String,
        suggested_points: Option<usize>,
    },

    /// Non-finite numbers appeared during a computation.
    #[error("numeric fault at step {step}: {message}")]
    NumericFault { message: String, step: usize },

    /// Well geometry is degenerate (no barrier, overlapping minima, ...).
    #[error("geometry error: {0}")]
    Geometry(String),

    /// An iterative solve stopped without reaching its tolerance.
    /// The energy trace of the failed run is kept for diagnosis.
    #[error("convergence failure: {message} ({} steps)", trace.len())]
    Convergence { message: String, trace: Vec<f64> },

    /// The requested potential holds no bound states.
    #[error("no bound states: {0}")]
    NoBoundStates(String),
}

impl CoreError {
    pub fn contract(msg: impl Into<String>) -> Self {
        CoreError::Contract(msg.into())
    }

    pub fn setup(msg: impl Into<String>) -> Self {
        CoreError::Setup {
            message: msg.into(),
            suggested_points: None,
        }
    }
}

pub type Result<T> = std::result::Result<T, CoreError>;
