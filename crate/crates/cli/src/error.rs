use thiserror::Error;

/// Error carrying the process exit code.
#[derive(Debug, Error)]
#[error("{message}")]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_CONSTRUCTION: i32 = 3;
pub const EXIT_CONSTRAINT: i32 = 4;
pub const EXIT_CHECK_FAILED: i32 = 5;

impl CliError {
    pub fn new(code: i32, message: impl Into<String>) -> Self {
        CliError {
            code,
            message: message.into(),
        }
    }

    pub fn config(message: impl Into<String>) -> Self {
        Self::new(EXIT_CONFIG, message)
    }

    pub fn io(context: &str, e: std::io::Error) -> Self {
        Self::new(1, format!("{context}: {e}"))
    }
}

impl From<viana_lab::Error> for CliError {
    fn from(e: viana_lab::Error) -> Self {
        use viana_lab::Error as E;
        let code = if e.is_constraint() {
            EXIT_CONSTRAINT
        } else if e.is_invalid_input() || matches!(e, E::DegenerateWidth(_) | E::BudgetExceeded { .. }) {
            EXIT_CONFIG
        } else {
            EXIT_CONSTRUCTION
        };
        CliError::new(code, e.to_string())
    }
}
