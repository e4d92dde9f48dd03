use thiserror::Error;

/// Errors raised by field arithmetic, polynomial machinery, system
/// construction and the analysis sweeps.
///
/// Branch indices carried by the variants are 1-based, matching the
/// `f_1, ..., f_n` numbering used in diagnostics.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("MixedFields: operands belong to different fields")]
    MixedFields,
    #[error("DivisionByZero")]
    DivisionByZero,
    #[error("OddPrimeRequired: quadratic residuosity needs an odd prime field")]
    OddPrimeRequired,
    #[error("InvalidField: {0}")]
    InvalidField(String),
    #[error("OutOfRange: {value} is not an element of a field of size {q}")]
    OutOfRange { value: u64, q: u64 },
    #[error("ArityMismatch: expected {expected} components, found {found}")]
    ArityMismatch { expected: usize, found: usize },
    #[error("DomainTooLarge: {size} points exceeds the limit of {limit}")]
    DomainTooLarge { size: u128, limit: u64 },
    #[error("DuplicateAbscissa: interpolation points must have distinct x-coordinates")]
    DuplicateAbscissa,
    #[error("NotAPermutation({})", branch_label(.branch))]
    NotAPermutation { branch: Option<usize> },
    #[error("GiHasZero({0})")]
    GiHasZero(usize),
    #[error("VariableOutOfScope({0}): g_i and h_i may only use x_(i+1), ..., x_n")]
    VariableOutOfScope(usize),
    #[error("EmptyPipeline: a round core needs at least one stage")]
    EmptyPipeline,
    #[error("SingularMatrix: the mixing matrix is not invertible")]
    SingularMatrix,
    #[error("KeyShapeMismatch: expected {rows}x{cols} round-key matrix, found {found_rows}x{found_cols}")]
    KeyShapeMismatch {
        rows: usize,
        cols: usize,
        found_rows: usize,
        found_cols: usize,
    },
    #[error("WeightSumNonzero: the Lai-Massey weights must sum to zero")]
    WeightSumNonzero,
    #[error("BadM: the last nonzero weight index must be at least 2")]
    BadM,
    #[error("BadExponent: {0}")]
    BadExponent(String),
    #[error("DiscriminantResidue({0}): alpha^2 - 4 beta is a quadratic residue")]
    DiscriminantResidue(usize),
    #[error("DegreeTooLow: the criteria need deg f > 1")]
    DegreeTooLow,
    #[error("HypothesisUnverified({})", branch_label(.0))]
    HypothesisUnverified(Option<usize>),
    #[error("InvalidParameter: {0}")]
    InvalidParameter(String),
    #[error("ParseError: {0}")]
    Parse(String),
}

fn branch_label(branch: &Option<usize>) -> String {
    match branch {
        Some(i) => i.to_string(),
        None => "-".to_string(),
    }
}

pub type Result<T> = std::result::Result<T, Error>;

/// Fails with [`Error::DomainTooLarge`] when `size` exceeds `limit`.
pub(crate) fn check_domain(size: u128, limit: u64) -> Result<()> {
    if size > limit as u128 {
        Err(Error::DomainTooLarge { size, limit })
    } else {
        Ok(())
    }
}
