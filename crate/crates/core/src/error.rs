use thiserror::Error;

use crate::ids::{ItemId, UserId};
use crate::ingest::IngestError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Ingest(#[from] IngestError),

    #[error("empty input")]
    EmptyInput,

    #[error("duplicate rating for user {user} and item {item}")]
    DuplicatePair { user: UserId, item: ItemId },

    #[error("rating {value} for user {user} and item {item} is outside [1, 5]")]
    RatingOutOfRange { user: UserId, item: ItemId, value: f64 },

    #[error("{what} index {index} out of range (len {len})")]
    IndexOutOfRange { what: &'static str, index: usize, len: usize },

    #[error("similarity model axis is {found:?}, expected {expected:?}")]
    AxisMismatch {
        expected: crate::similarity::Axis,
        found: crate::similarity::Axis,
    },

    #[error("unknown user {0}")]
    UnknownUser(UserId),

    #[error("user index {user} already rated item index {item}")]
    AlreadyRated { user: usize, item: usize },

    #[error("training diverged at epoch {epoch}: a parameter became non-finite")]
    DivergenceDetected { epoch: usize },

    #[error("holdout set is empty")]
    EmptyHoldout,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("malformed {what}: {detail}")]
    Format { what: &'static str, detail: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
