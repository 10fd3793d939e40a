use thiserror::Error;

/// Errors raised by the numeric core.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid dimensions: {0}")]
    InvalidDimensions(String),

    #[error("dimension mismatch: {what} is {found_h}x{found_w}, expected {expected_h}x{expected_w}")]
    DimensionMismatch {
        what: &'static str,
        expected_h: usize,
        expected_w: usize,
        found_h: usize,
        found_w: usize,
    },

    #[error("channel mismatch: {left} vs {right}")]
    ChannelMismatch { left: usize, right: usize },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("mask selects no pixels")]
    EmptyMask,

    #[error("all-pairs volume would hold {entries} entries, above the limit of {limit}")]
    VolumeTooLarge { entries: u128, limit: usize },

    #[error("non-finite flow after update at scale {scale}, iteration {iteration}")]
    NumericFailure { scale: usize, iteration: usize },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn check_dims(what: &'static str, expected: (usize, usize), found: (usize, usize)) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            what,
            expected_h: expected.0,
            expected_w: expected.1,
            found_h: found.0,
            found_w: found.1,
        })
    }
}
