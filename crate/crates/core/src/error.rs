use thiserror::Error;

/// Crate-wide error type. Variants map one-to-one onto the CLI exit codes.
#[derive(Debug, Error)]
pub enum Error {
    /// An operation's precondition or a type invariant was violated.
    #[error("contract violation: {0}")]
    Contract(String),

    /// The requested instance exceeds the desk-scale capacity limits.
    #[error("capacity exceeded: {0}")]
    Capacity(String),

    /// A compression exponent lies outside its admissible interval.
    #[error("inadmissible configuration: {0}")]
    Admissibility(String),

    /// A Fock cutoff is too small for the requested accuracy.
    #[error("insufficient cutoff: {0}")]
    InsufficientCutoff(String),

    /// A unitary's eigenphase spread leaves the principal branch.
    #[error("not a small rotation: {0}")]
    NotSmallRotation(String),

    /// Input outside the supported model family.
    #[error("unsupported input: {0}")]
    UnsupportedInput(String),
}

impl Error {
    /// Stable process exit code for each error class.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Contract(_) => 2,
            Error::Capacity(_) => 3,
            Error::Admissibility(_) => 4,
            Error::InsufficientCutoff(_) => 5,
            Error::NotSmallRotation(_) => 6,
            Error::UnsupportedInput(_) => 7,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
