use thiserror::Error;

/// Errors raised anywhere in the toolkit.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("field mismatch: {0} vs {1}")]
    SpecMismatch(String, String),
    #[error("division by zero")]
    DivisionByZero,
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("modulus {0} is not irreducible")]
    Reducible(String),
    #[error("singular matrix")]
    Singular,
    #[error("invalid code: {0}")]
    InvalidCode(String),
    #[error("generator polynomial does not divide x^{0} - 1")]
    InvalidPolynomial(usize),
    #[error("field of order {q} too small for blocklength {n}")]
    FieldTooSmall { q: u64, n: usize },
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("enumeration of {needed} items exceeds budget {budget}")]
    TooLarge { needed: u128, budget: u128 },
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("decode integrity failure: {0}")]
    DecodeIntegrity(String),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn param(msg: impl Into<String>) -> Error {
    Error::Parameter(msg.into())
}
