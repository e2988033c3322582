use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("input error: {0}")]
    Input(String),
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error("degenerate curve: {0}")]
    Degeneracy(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error("geometry error: {0}")]
    Geometry(String),
    #[error("configuration error: {0}")]
    Configuration(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("size guard exceeded: {0}")]
    Size(String),
    #[error("overflow at l = {reached}: {msg}")]
    Overflow { reached: usize, msg: String },
}

impl Error {
    /// Stable category name used in structured error output.
    pub fn category(&self) -> &'static str {
        match self {
            Error::Input(_) => "input",
            Error::Invariant(_) => "invariant",
            Error::Degeneracy(_) => "degeneracy",
            Error::Numeric(_) => "numeric",
            Error::Geometry(_) => "geometry",
            Error::Configuration(_) => "configuration",
            Error::Precondition(_) => "precondition",
            Error::Size(_) => "size",
            Error::Overflow { .. } => "overflow",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
