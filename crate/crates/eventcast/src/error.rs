//! Error type shared across the pipeline.

/// Errors produced anywhere in the pipeline.
///
/// The variants map onto the CLI exit codes: configuration problems exit
/// with 2, data problems with 3, and internal invariant violations with 4.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Bad configuration: unknown schema name, invalid parameter, missing key.
    #[error("config error: {0}")]
    Config(String),

    /// Bad input data: missing file, malformed CSV, mismatched header,
    /// unlearnable labels.
    #[error("data error: {0}")]
    Data(String),

    /// A model bundle could not be read back: truncation, version mismatch,
    /// or malformed JSON.
    #[error("model bundle error: {0}")]
    Bundle(String),

    /// The event space is too large to enumerate; callers should sample.
    #[error("event space holds {size} events, above the enumeration limit {limit}; sample instead")]
    SpaceTooLarge { size: String, limit: u64 },

    /// A violated internal invariant. Always a bug.
    #[error("internal invariant violated: {0}")]
    Invariant(String),
}

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn data(msg: impl Into<String>) -> Self {
        Error::Data(msg.into())
    }

    pub fn bundle(msg: impl Into<String>) -> Self {
        Error::Bundle(msg.into())
    }

    pub fn invariant(msg: impl Into<String>) -> Self {
        Error::Invariant(msg.into())
    }

    /// Process exit code for this error kind (0 is success).
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            Error::Data(_) | Error::Bundle(_) | Error::SpaceTooLarge { .. } => 3,
            Error::Invariant(_) => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
