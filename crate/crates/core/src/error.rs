use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch in {op}: expected {expected}, got {found}")]
    DimensionMismatch {
        op: &'static str,
        expected: String,
        found: String,
    },

    #[error("transform matrix is numerically singular (condition estimate {condition:.3e} > {bound:.3e})")]
    SingularTransform { condition: f64, bound: f64 },

    #[error("transform inverse is inconsistent: |M M^-1 - I|_F = {residual:.3e}")]
    InconsistentInverse { residual: f64 },

    #[error("no well-conditioned random transform found after {attempts} attempts")]
    TransformResampleExhausted { attempts: usize },

    #[error("hat-domain slice {slice} is singular, the M-inverse does not exist")]
    SingularSlice { slice: usize },

    #[error("hat-domain slices have differing numerical ranks {ranks:?}")]
    NonUniformRank { ranks: Vec<usize> },

    #[error("tensor has numerical rank zero, no full-rank factorization exists")]
    EmptyRank,

    #[error("outer inverse with the prescribed range and null space does not exist: {reason}")]
    OuterInverseNotExist { reason: String },

    #[error("tensor index is {index}, expected 1 for the group inverse")]
    IndexNotOne { index: usize },

    #[error("operation is undefined for the zero tensor")]
    ZeroTensor,

    #[error("iteration diverged at step {iteration}")]
    Diverged { iteration: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("generator failed to meet its conditioning gate after {attempts} attempts")]
    GeneratorExhausted { attempts: usize },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn mismatch(op: &'static str, expected: impl ToString, found: impl ToString) -> Error {
    Error::DimensionMismatch {
        op,
        expected: expected.to_string(),
        found: found.to_string(),
    }
}
