use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A computation was refused because its estimated size exceeds a budget.
    #[error("budget exceeded for {what}: estimated {estimate}, limit {limit}")]
    Budget {
        what: String,
        estimate: String,
        limit: String,
    },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The sampled points were not generic enough to realize the lattice.
    #[error("degenerate point sample: {0}")]
    Degenerate(String),

    /// Two independent computation paths disagreed.
    #[error("verification failed: {0}")]
    Verification(String),

    #[error("cache file: {0}")]
    Cache(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn budget(what: impl Into<String>, estimate: impl ToString, limit: impl ToString) -> Self {
        Error::Budget {
            what: what.into(),
            estimate: estimate.to_string(),
            limit: limit.to_string(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
