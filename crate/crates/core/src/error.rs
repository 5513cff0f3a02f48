use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// One message per violated constraint.
    #[error("invalid configuration: {}", .0.join("; "))]
    Config(Vec<String>),

    #[error("cannot parse configuration: {0}")]
    Parse(String),

    /// An assignment or route broke a structural rule (one route per UE, hop cap, caching source).
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("internal evaluation error: {0}")]
    Internal(String),

    #[error("brute-force search refused: {} route combinations exceed the budget of {budget}", count_text(*.combinations))]
    BudgetExceeded { combinations: u128, budget: u64 },

    #[error("empirical CDF needs at least one sample")]
    EmptySamples,

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// The combination count saturates at `u128::MAX`.
fn count_text(n: u128) -> String {
    if n == u128::MAX {
        format!("more than {n}")
    } else {
        n.to_string()
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
