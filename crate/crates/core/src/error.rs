use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("factor slot {slot} out of range for a space with {n_factors} factors")]
    SlotOutOfRange { slot: usize, n_factors: usize },

    #[error("factor slot {slot} is not a {expected} factor")]
    WrongFactor { slot: usize, expected: &'static str },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("coupling ratio {ratio} is at or beyond the critical point")]
    Singular { ratio: f64 },

    #[error("value {value} outside the domain of {what}")]
    Domain { what: &'static str, value: f64 },

    #[error("Fock cutoff is unresolved (Auto); resolve it before building")]
    UnresolvedCutoff,

    #[error("operator is not hermitian")]
    NonHermitian,

    #[error("expectation value has imaginary part {0:e}")]
    ImaginaryResidue(f64),

    #[error(
        "eigensolver did not converge after {iterations} iterations (best residual {residual:e})"
    )]
    NotConverged { iterations: usize, residual: f64 },

    #[error(
        "cutoff search did not converge up to {cutoff} (last estimates {previous} and {last})"
    )]
    CutoffNotConverged {
        cutoff: usize,
        previous: f64,
        last: f64,
    },

    #[error("gap {gap:e} is too small to resolve the lower polariton")]
    IllConditionedGap { gap: f64 },

    #[error("uncertainty relation violated: det = {det}")]
    UncertaintyViolation { det: f64 },

    #[error("Fock cutoff {cutoff} too small for half width {half_width} (coherent tail {tail:e})")]
    CutoffTooSmall {
        cutoff: usize,
        half_width: f64,
        tail: f64,
    },

    #[error("insufficient data: {0}")]
    InsufficientPoints(String),

    #[error("fit parameters are not identifiable from the data")]
    Unidentifiable,

    #[error("unknown observable `{0}`")]
    UnknownObservable(String),

    #[error("every sweep point failed; first error: {0}")]
    AllPointsFailed(String),
}
