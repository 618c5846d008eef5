use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{0} is not a prime power")]
    NotPrimePower(u32),
    #[error("q={0} exceeds the supported range 2..=64")]
    CapExceeded(u32),
    #[error("division by zero")]
    DivisionByZero,
    #[error("element {0} does not lie in the F_q subfield")]
    NotInSubfield(u32),
    #[error("coefficient degree cap exceeded (degree {0})")]
    DegreeCap(usize),
    #[error("indeterminate evaluation: a denominator vanished")]
    Indeterminate,
    #[error("enumeration cap exceeded (size {0})")]
    EnumerationCap(u64),
    #[error("invalid place signature: {0}")]
    InvalidSignature(String),
    #[error("candidate map fails the tower relation: {0}")]
    RelationFailure(String),
    #[error("verification failure: {0}")]
    Verification(String),
    #[error("closure order cap exceeded")]
    OrderCap,
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid argument: {0}")]
    InvalidArg(String),
}

pub type Result<T> = std::result::Result<T, Error>;
