use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TorusError {
    #[error("integer overflow in {what}")]
    Overflow { what: String },
    #[error("matrix is not unimodular (det = {det}); det ≠ ±1")]
    NotUnimodular { det: i128 },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },
    #[error("phase of index {index} needs exact coordinates, only residues are known")]
    InexactIndex { index: String },
    #[error("orbit growth exceeds cap for index {index} after {steps} iterations")]
    OrbitCap { index: String, steps: u64 },
    #[error("rational denominator {den} exceeds 2^62")]
    Denominator { den: u128 },
    #[error("cannot parse phase `{text}`: {reason}")]
    PhaseSyntax { text: String, reason: String },
    #[error("undeclared irrational symbol `{symbol}`")]
    UndeclaredSymbol { symbol: String },
}

pub(crate) fn overflow(what: impl Into<String>) -> TorusError {
    TorusError::Overflow { what: what.into() }
}
