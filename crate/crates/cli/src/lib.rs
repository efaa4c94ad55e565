//! Scenario configuration, batch execution, figure pipelines and file
//! output for the two-ensemble spin-squeezing simulator.

pub mod fit;
pub mod output;
pub mod pipeline;
pub mod scenario;

use thiserror::Error;

/// Process exit codes of the command-line tool.
pub mod exit_code {
    pub const SUCCESS: i32 = 0;
    pub const OTHER: i32 = 1;
    pub const CONFIG: i32 = 2;
    pub const NUMERICS: i32 = 3;
    pub const ORACLE: i32 = 4;
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}:{line}: {msg}")]
    Config { path: String, line: usize, msg: String },

    #[error("configuration: {0}")]
    Invalid(String),

    #[error(transparent)]
    Core(#[from] spinsqueeze_core::Error),

    #[error("i/o failure on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("oracle check failed: min fidelity {fidelity:.4}, max leakage {leakage:.4}")]
    OracleFailed { fidelity: f64, leakage: f64 },
}

impl CliError {
    /// Map errors onto the documented exit codes: 2 config, 3 numerical
    /// invariant violations, 4 oracle failure, 1 anything else.
    pub fn exit_code(&self) -> i32 {
        use spinsqueeze_core::Error as Core;
        match self {
            CliError::Config { .. } | CliError::Invalid(_) => exit_code::CONFIG,
            CliError::OracleFailed { .. } => exit_code::ORACLE,
            CliError::Core(e) => match e {
                Core::InvariantViolation { .. }
                | Core::StepUnderflow { .. }
                | Core::UndefinedDirection(_)
                | Core::ExcessiveLeakage { .. }
                | Core::Linalg(_) => exit_code::NUMERICS,
                _ => exit_code::CONFIG,
            },
            CliError::Io { .. } => exit_code::OTHER,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
