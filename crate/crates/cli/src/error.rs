use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("i/o error: {0}")]
    Io(String),

    #[error("{0}")]
    ChecksFailed(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Domain(_) => 3,
            CliError::Numerical(_) => 4,
            CliError::Io(_) | CliError::ChecksFailed(_) => 1,
        }
    }
}

impl From<conflow::Error> for CliError {
    fn from(e: conflow::Error) -> Self {
        match e {
            conflow::Error::Domain(m) => CliError::Domain(m),
            e if e.is_numerical() => CliError::Numerical(e.to_string()),
            e => CliError::Domain(e.to_string()),
        }
    }
}

impl From<conflow::integrator::IntegrateError> for CliError {
    fn from(e: conflow::integrator::IntegrateError) -> Self {
        match e {
            conflow::integrator::IntegrateError::InvalidConfig(m) => CliError::Config(m),
            other => CliError::Numerical(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Io(e.to_string())
    }
}
