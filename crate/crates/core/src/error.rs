use crate::nonces::Secret;

/// Errors raised by the simulator and analysis routines.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },

    #[error("unsupported dimension {0} (only 2 and 4 are supported)")]
    UnsupportedDimension(usize),

    #[error("non-finite amplitude or matrix entry")]
    NonFinite,

    #[error("state is not normalized (squared norm {0})")]
    NotNormalized(f64),

    #[error("invalid density matrix: {0}")]
    InvalidDensity(String),

    #[error("matrix is not unitary (max deviation of U^dagger U from I is {0:e})")]
    NotUnitary(f64),

    #[error("invalid Bloch vector: norm {0} exceeds 1")]
    InvalidBloch(f64),

    #[error("fidelity between two mixed two-qubit states is not supported")]
    UnsupportedFidelity,

    #[error("unknown nonce set `{0}`")]
    UnknownNonceSet(String),

    #[error("invalid secret `{0}`: expected one of 00, 01, 10, 11")]
    InvalidSecret(String),

    #[error("nonce set must contain at least one state")]
    EmptyNonceSet,

    #[error("nonce {index}: {reason}")]
    InvalidNonce { index: usize, reason: String },

    #[error("{0}")]
    Parse(String),

    #[error("protocol violation: {0}")]
    Protocol(String),

    #[error("attack plan has no unitary for nonce {nonce}, secret {secret}")]
    PlanIncomplete { nonce: usize, secret: Secret },

    #[error("attack plan does not match nonce set: {0}")]
    PlanMismatch(String),

    #[error("nonce set `{name}` fails {condition}")]
    Uncertified { name: String, condition: String },

    #[error("precondition violated: {0}")]
    Precondition(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
