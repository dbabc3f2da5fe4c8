use thiserror::Error;

/// Errors raised by the library.
///
/// The variants map one-to-one onto the CLI exit codes: input problems are
/// distinguished from mathematically impossible requests and from
/// factorization budgets running out.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    /// With `a1 = 0` the only attainable residue counts are 1 and 2.
    #[error("no recurrence with characteristic polynomial X^2 - {a1}X - 1 attains {n} residues")]
    Unrepresentable { a1: i64, n: u64 },

    #[error("no recurrence for a1 = {a1} attains exactly {n} residues with all of them nonzero")]
    ImpossibleNonzero { a1: i64, n: u64 },

    /// Factorization effort ran out. `index` is the Lehmer index whose
    /// divisors were being searched, when there is one.
    #[error("factorization budget exhausted: {detail}")]
    BudgetExceeded { index: Option<u64>, detail: String },

    /// A constructed certificate did not survive re-simulation.
    #[error("verification mismatch: {0}")]
    VerificationMismatch(String),

    #[error("internal error: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;
