//! Error surface of the binary: every failure carries a process exit
//! code (2 config, 3 numeric fault, 4 geometry/convergence, 1 I/O) and
//! renders as one machine-readable JSON object.

use beamsplit_core::CoreError;

#[derive(Debug)]
pub enum CliError {
    /// Configuration rejected before any compute started.
    Config(String),
    /// Filesystem trouble reading inputs or writing artifacts.
    Io(String),
    /// Failure surfaced by the simulation library mid-run.
    Core(CoreError),
}

pub type Result<T> = std::result::Result<T, CliError>;

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }

    pub fn io(context: &str, err: std::io::Error) -> Self {
        CliError::Io(format!("{context}: {err}"))
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Io(_) => 1,
            CliError::Core(e) => match e {
                CoreError::Contract(_)
                | CoreError::GridMismatch(_)
                | CoreError::Setup { .. } => 2,
                CoreError::NumericFault { .. } => 3,
                CoreError::Geometry(_)
                | CoreError::Convergence { .. }
                | CoreError::NoBoundStates(_) => 4,
            },
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Io(_) => "io",
            CliError::Core(e) => match e {
                CoreError::Contract(_) => "contract",
                CoreError::GridMismatch(_) => "grid-mismatch",
                CoreError::Setup { .. } => "setup",
                CoreError::NumericFault { .. } => "numeric-fault",
                CoreError::Geometry(_) => "geometry",
                CoreError::Convergence { .. } => "convergence",
                CoreError::NoBoundStates(_) => "no-bound-states",
            },
        }
    }

    pub fn message(&self) -> String {
        match self {
            CliError::Config(m) | CliError::Io(m) => m.clone(),
            CliError::Core(e) => e.to_string(),
        }
    }

    /// stderr/error.json payload.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "error": self.kind(),
            "message": self.message(),
            "exit_code": self.exit_code(),
        })
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        CliError::Core(e)
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} error: {}", self.kind(), self.message())
    }
}
