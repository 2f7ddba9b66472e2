use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Argument outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// A model or parameter set failed validation.
    #[error("invalid parameter: {0}")]
    Parameter(String),
    /// An iterative method failed to converge or detected a degenerate shape.
    #[error("numeric error: {0}")]
    Numeric(String),
    /// The request exceeds a hard size guard.
    #[error("capacity error: {0}")]
    Capacity(String),
    /// A boundary function violated its positivity/monotonicity contract.
    #[error("boundary error: {0}")]
    Boundary(String),
    /// A quantity depends on a Pickands constant that has not been supplied.
    #[error("pending: {0}")]
    Pending(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    /// Usage-class errors map to exit code 2 in the CLI; everything else to 1.
    /// Short machine-readable name of the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::Parameter(_) => "parameter",
            Error::Numeric(_) => "numeric",
            Error::Capacity(_) => "capacity",
            Error::Boundary(_) => "boundary",
            Error::Pending(_) => "pending",
            Error::Config(_) => "config",
            Error::Io(_) => "io",
        }
    }

    pub fn is_usage(&self) -> bool {
        matches!(self, Error::Parameter(_) | Error::Config(_) | Error::Domain(_))
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
