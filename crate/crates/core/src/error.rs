use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("d = {0} is not squarefree")]
    NotSquarefree(i64),
    #[error("d = {0} is out of range (need d > 1)")]
    OutOfRange(i64),
    #[error("elements belong to different fields (D = {left} vs D = {right})")]
    FieldMismatch { left: u64, right: u64 },
    #[error("doubled coordinates ({p}, {q}) do not describe an element of O for D = {d}")]
    ParityViolation { d: u64, p: String, q: String },
    #[error("table needs {requested} bytes, budget is {budget} bytes")]
    CapacityExceeded { requested: u64, budget: u64 },
    #[error("enumeration of about {estimated} quadruples exceeds the limit of {limit}")]
    ScaleGuard { estimated: u64, limit: u64 },
    #[error("D = {0} satisfies 8 | D - 5; the conjugation relation does not apply")]
    WrongCongruenceClass(u64),
    #[error("matrix is not in M: a half-entry of the Cayley map lies outside O")]
    NotInM,
    #[error("coset enumeration did not close within depth {0}")]
    DepthExceeded(usize),
    #[error("invalid box bound: {0}")]
    InvalidBound(String),
    #[error("coordinate {0} does not fit in 64 bits")]
    CoordinateOverflow(String),
}

pub type Result<T> = std::result::Result<T, Error>;
