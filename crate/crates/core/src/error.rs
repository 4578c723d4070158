//! Error type shared by all receiver stages.

use thiserror::Error;

/// Errors raised by the numeric kernel and receiver stages.
#[derive(Debug, Error)]
pub enum Error {
    /// A vector or matrix dimension is zero, inconsistent, or out of range.
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    /// A Hermitian system stayed numerically singular after diagonal loading.
    /// The payload names the call site that attempted the solve.
    #[error("singular matrix in {0}")]
    SingularMatrix(&'static str),

    /// The training window is too short for the requested channel length.
    #[error("insufficient training: {0}")]
    InsufficientTraining(String),

    /// Stage-one filter design could not be carried out.
    #[error("filter design failed: {0}")]
    Design(String),

    /// Trellis/shortener memory is incompatible with the channel or block.
    #[error("invalid memory: {0}")]
    InvalidMemory(String),

    /// The shortener's banded subsystem degenerated; callers may retry with
    /// a smaller memory.
    #[error("channel shortening degenerate: {0}")]
    ShorteningDegenerate(String),

    /// A dense or exhaustive oracle was asked for more than it can enumerate.
    #[error("oracle scale exceeded: {0}")]
    OracleScale(String),

    /// Bit counts do not frame into whole symbols or blocks.
    #[error("framing error: {0}")]
    Framing(String),

    /// Invalid run configuration.
    #[error("config error: {0}")]
    Config(String),
}

impl Error {
    /// `true` for errors that stem from user configuration rather than from
    /// a numerical stage.
    pub fn is_config(&self) -> bool {
        matches!(self, Error::Config(_) | Error::Framing(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
