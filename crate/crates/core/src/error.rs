use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter is outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A model or window was constructed from invalid parameters.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// The interaction is not inhibitory (some interaction value exceeds 1), so the
    /// intensity and summary-statistic bounds do not apply.
    #[error("inhibition hypothesis violated: {0}")]
    NotInhibitory(String),

    /// Input intervals contradict the local stability constant.
    #[error("consistency error: {0}")]
    Consistency(String),

    /// Perfect simulation did not coalesce within the event budget.
    #[error(
        "coupling from the past did not coalesce: {events} dominating events (cap {cap}), \
         horizon {horizon}, upper={upper} lower={lower}"
    )]
    NonConvergence {
        events: u64,
        cap: u64,
        horizon: f64,
        upper: usize,
        lower: usize,
    },

    /// A replicate failed; carries the replicate index.
    #[error("replicate {index}: {source}")]
    Replicate {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Strips any replicate wrapper.
    pub fn root(&self) -> &Error {
        match self {
            Error::Replicate { source, .. } => source.root(),
            other => other,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
