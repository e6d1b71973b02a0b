use num_bigint::BigUint;
use thiserror::Error;

use crate::projective::KeyViolation;

/// Errors raised by every scheme, protocol and attack in this crate.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("zero denominator")]
    ZeroDenominator,

    #[error("modulus {0} is not prime")]
    NotPrime(BigUint),

    #[error("operands belong to different prime fields")]
    FieldMismatch,

    #[error("{value} has no inverse modulo {modulus}")]
    NotInvertible { value: BigUint, modulus: BigUint },

    #[error("invalid key: {}", join_violations(.0))]
    InvalidKey(Vec<KeyViolation>),

    #[error("symbol {symbol} projects to infinity under this key")]
    SingularProjection { symbol: u64 },

    /// The key cannot encrypt or decrypt symbol `index` because a
    /// denominator vanishes mod p. Choosing a different key (or prime) fixes it.
    #[error("denominator for symbol {index} is not invertible mod p; re-key and retry")]
    NonInvertibleDenominator { index: usize },

    #[error("ciphertext symbol {index} decrypts to the point at infinity (y' = y0)")]
    PointAtInfinity { index: usize },

    #[error("corrupt ciphertext at symbol {index}: {detail}")]
    CorruptCiphertext { index: usize, detail: String },

    #[error("malformed ciphertext: {0}")]
    MalformedCiphertext(String),

    #[error("invalid {what}: {detail}")]
    InvalidParameter { what: &'static str, detail: String },

    #[error("plaintext value at index {index} is zero mod p and cannot be ElGamal-encrypted")]
    ZeroPlaintext { index: usize },

    #[error("inconsistent verification bundle: {0}")]
    InconsistentBundle(String),

    #[error("malformed bundle: {0}")]
    MalformedBundle(String),

    #[error("malformed key file: {0}")]
    MalformedKeyFile(String),

    #[error("scheme mismatch: expected {expected}, found {found}")]
    SchemeMismatch { expected: String, found: String },

    #[error("verifier session already consumed; a random array must not be reused")]
    SessionReplay,

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("needs more plaintext/ciphertext pairs: {0}")]
    NeedsMorePairs(String),

    #[error("enumeration of {entries} entries needs {bytes} bytes, over the {budget}-byte budget")]
    BudgetExceeded { entries: u128, bytes: u128, budget: u128 },
}

impl Error {
    /// True when the failure is tied to the chosen key or prime and a fresh key
    /// may succeed on the same input.
    pub fn is_retriable(&self) -> bool {
        matches!(
            self,
            Error::NonInvertibleDenominator { .. } | Error::SingularProjection { .. }
        )
    }

    pub(crate) fn param(what: &'static str, detail: impl Into<String>) -> Self {
        Error::InvalidParameter { what, detail: detail.into() }
    }
}

fn join_violations(v: &[KeyViolation]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}

pub type Result<T> = std::result::Result<T, Error>;
