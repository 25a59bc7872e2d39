use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// The scenario could not be parsed or failed validation.
    #[error("config error: {0}")]
    Config(String),

    #[error("invalid geometry: {0}")]
    Geometry(String),

    /// Q > 0 with a zero running arrival average.
    #[error("delay undefined: queue {queue} bits with zero average arrival")]
    UndefinedDelay { queue: f64 },

    #[error("slot weight undefined: zero average arrival for device {device}")]
    UndefinedWeight { device: usize },

    /// |h| = 0: the power closed form has no stationary point.
    #[error("dead channel (|h|^2 = 0)")]
    DeadChannel,

    #[error("exhaustive search needs {candidates} candidates, budget is {budget}")]
    BudgetExceeded { candidates: f64, budget: u64 },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("channel trace: {0}")]
    Trace(String),

    /// A failure inside the slot loop, tagged with the 1-based slot index.
    #[error("slot {slot}: {source}")]
    Slot {
        slot: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    /// True for errors caused by the user's input (bad config, refused
    /// oracle budget) rather than a runtime failure.
    pub fn is_usage(&self) -> bool {
        match self {
            Error::Config(_) | Error::BudgetExceeded { .. } => true,
            Error::Slot { source, .. } => source.is_usage(),
            _ => false,
        }
    }
}
