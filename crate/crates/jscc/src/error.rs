//! Error taxonomy shared across the crate.
//!
//! Exit-code mapping used by the CLI:
//! 1 = usage, 2 = config/validation/domain, 3 = enumeration budget, 4 = internal.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Caller violated a precondition (mismatched lengths, bad arguments).
    #[error("usage error: {0}")]
    Usage(String),

    /// Configuration failed validation. Every violation is collected, not
    /// just the first one.
    #[error("invalid configuration:\n{}", .0.join("\n"))]
    Validation(Vec<String>),

    /// An exact enumeration would exceed the configured state budget.
    #[error("enumeration budget exceeded: {required} states required, budget is {budget}")]
    Budget { required: u128, budget: u64 },

    /// A quantity was queried outside its mathematical domain
    /// (zero-mass conditional, zero-probability channel output, ...).
    #[error("domain error: {0}")]
    Domain(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("internal error: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Usage(_) => 1,
            Error::Validation(_) | Error::Domain(_) | Error::Io(_) => 2,
            Error::Budget { .. } => 3,
            Error::Internal(_) => 4,
        }
    }
}

/// Checks that an exact enumeration of `required` states fits in `budget`.
pub fn check_budget(required: u128, budget: u64) -> Result<()> {
    if required > budget as u128 {
        Err(Error::Budget { required, budget })
    } else {
        Ok(())
    }
}

/// Default cap on exact-enumeration state counts (2^24).
pub const DEFAULT_BUDGET: u64 = 1 << 24;
