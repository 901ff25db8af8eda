use thiserror::Error;

/// Failure modes of a run, each with its own process exit code.
#[derive(Debug, Error)]
pub enum LabError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("numeric error: {0}")]
    Numeric(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub const EXIT_OK: u8 = 0;
pub const EXIT_ASSERTION: u8 = 1;
pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_NUMERIC: u8 = 3;

impl LabError {
    pub fn exit_code(&self) -> u8 {
        match self {
            LabError::Config(_) => EXIT_CONFIG,
            LabError::Numeric(_) | LabError::Io(_) => EXIT_NUMERIC,
        }
    }
}

impl From<mala_core::Error> for LabError {
    fn from(e: mala_core::Error) -> Self {
        use mala_core::Error as E;
        match e {
            E::NonFiniteGradient { .. } | E::ChainInvariant(_) => LabError::Numeric(e.to_string()),
            E::Io(msg) => LabError::Io(std::io::Error::other(msg)),
            other => LabError::Config(other.to_string()),
        }
    }
}
