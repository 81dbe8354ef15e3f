use thiserror::Error;

use crate::physics::FieldState;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An input value is outside its admissible range.
    #[error("parameter error: {0}")]
    Parameter(String),

    /// The coefficient set does not belong to a regime the operation needs.
    #[error("regime error: {0}")]
    Regime(String),

    #[error("non-finite sample in {0}")]
    NonFinite(&'static str),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("time must increase strictly (last {last}, got {got})")]
    NonMonotoneTime { last: f64, got: f64 },

    /// The solution left the representable range. `last_state` is the last
    /// state whose samples were all finite.
    #[error("blow-up detected at step {step} (t = {time}): {reason}")]
    BlowupDetected {
        step: usize,
        time: f64,
        reason: String,
        last_state: Box<FieldState>,
    },

    #[error("snapshot format error: {0}")]
    Snapshot(String),

    #[error("configuration error: {0}")]
    Config(String),

    /// A failure inside one member of a sweep.
    #[error("{label}: {source}")]
    Member { label: String, source: Box<Error> },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// The innermost error, looking through sweep annotations.
    pub fn root(&self) -> &Error {
        match self {
            Error::Member { source, .. } => source.root(),
            other => other,
        }
    }
}
