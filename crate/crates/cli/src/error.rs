use std::fmt;

/// Failure of a CLI run, classified by exit code.
#[derive(Debug)]
pub enum CliError {
    /// Invalid configuration or input data (exit 2).
    Validation(String),
    /// The solver did not converge (exit 3).
    Convergence(String),
    /// Reading or writing files failed (exit 4).
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Convergence(_) => 3,
            CliError::Io(_) => 4,
        }
    }

    pub fn validation(msg: impl Into<String>) -> Self {
        CliError::Validation(msg.into())
    }

    pub fn io(context: &str, err: impl fmt::Display) -> Self {
        CliError::Io(format!("{context}: {err}"))
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Validation(m) => write!(f, "invalid input: {m}"),
            CliError::Convergence(m) => write!(f, "convergence failure: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl From<latentbell::Error> for CliError {
    fn from(e: latentbell::Error) -> Self {
        use latentbell::Error as E;
        match e {
            E::NonConvergence { .. } => CliError::Convergence(e.to_string()),
            E::Io(_) | E::Format(_) | E::Json(_) => CliError::Io(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
