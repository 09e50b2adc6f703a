use std::fmt;

/// Failure of a CLI run, carrying its exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad or inconsistent configuration (exit 1).
    Config(String),
    /// The formulas certify nothing for these inputs (exit 2).
    Infeasible(String),
    /// Reading the config or writing artifacts failed (exit 1).
    Io(String),
}

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(format!("cli: configuration: {}", msg.into()))
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 1,
            CliError::Infeasible(_) => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) | CliError::Infeasible(m) | CliError::Io(m) => f.write_str(m),
        }
    }
}

impl From<ulatv::Error> for CliError {
    fn from(e: ulatv::Error) -> Self {
        use ulatv::Error::*;
        let msg = e.to_string();
        match e {
            Infeasible { .. } | NumericRange { .. } | Divergence { .. } => CliError::Infeasible(msg),
            Domain { .. } | Config { .. } | Precondition { .. } | Evaluation { .. } | GridTooSmall { .. } | NoClosedForm(_) => {
                CliError::Config(msg)
            }
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(format!("cli: io: {e}"))
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(format!("cli: csv: {e}"))
    }
}
