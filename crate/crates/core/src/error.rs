use std::fmt;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("monitoring date {date} is not on the time grid with step {dt}")]
    MisalignedDate { date: f64, dt: f64 },

    #[error("{0} is empty")]
    Empty(&'static str),

    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    Dimension {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("values are not non-decreasing at index {0}")]
    NonMonotone(usize),

    #[error("interval [{a}, {b}] carries no standard normal mass")]
    NegligibleMass { a: f64, b: f64 },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("training diverged at epoch {epoch}: loss = {loss}")]
    Divergence { epoch: usize, loss: f64 },

    #[error("outside trained range: {0}")]
    OutOfRange(String),

    #[error("too few samples: {0}")]
    TooFewSamples(String),

    #[error("conditional grid is not monotone in the reference value: {0}")]
    GridNotMonotone(String),

    #[error("config: {0}")]
    Config(String),

    #[error("malformed file {path}: {reason}")]
    Format { path: String, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl fmt::Display) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.to_string(),
        }
    }

    /// Errors caused by user input (bad config, bad files) as opposed to a
    /// numerical failure during a run.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::InvalidParameter { .. }
                | Error::MisalignedDate { .. }
                | Error::Empty(_)
                | Error::Dimension { .. }
                | Error::Config(_)
                | Error::Format { .. }
                | Error::Io(_)
                | Error::Json(_)
                | Error::Csv(_)
                | Error::OutOfRange(_)
                | Error::TooFewSamples(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
