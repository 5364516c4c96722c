use thiserror::Error;

/// Errors produced anywhere in the link-simulation stack.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("degenerate channel: {0}")]
    DegenerateChannel(String),
    #[error("unsupported dimension D={0}: generation matrices are provided for D in {{2, 4}}")]
    UnsupportedDimension(usize),
    #[error("unsupported modulation M={0}: square QAM with M in {{4, 16, 64, 256}} is required")]
    UnsupportedModulation(usize),
    #[error("usage error: {0}")]
    Usage(String),
    #[error("infeasible configuration: {0}")]
    Infeasible(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidInput(msg.into()))
}
