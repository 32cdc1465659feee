use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    /// The enclosure covers a partition boundary at orbit step `step`
    /// (step 0 means the input point itself).
    #[error("enclosure straddles a branch boundary at step {step}")]
    BranchStraddle { step: usize },

    #[error("enclosure straddles a piece boundary of the twist")]
    PieceStraddle,

    #[error("degenerate ball: radius must be positive, got {0}")]
    DegenerateBall(f64),

    #[error("operation not supported for {system}: {what}")]
    Unsupported { system: String, what: String },

    #[error("enumeration would produce {count} items, above the cap of {cap}")]
    ExplosionGuard { count: u128, cap: u128 },

    #[error("precision exhausted at {bits} bits while {what}")]
    PrecisionExhausted { bits: u32, what: String },

    #[error("{indeterminate} of {samples} samples stayed indeterminate, above the tolerated rate")]
    IndeterminateExcess { indeterminate: u64, samples: u64 },

    #[error("zero denominator")]
    ZeroDenominator,

    #[error("invalid {key}: {msg}")]
    Invalid { key: String, msg: String },
}

impl Error {
    pub fn invalid(key: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Invalid {
            key: key.into(),
            msg: msg.into(),
        }
    }
}
