use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// The global maximum of a stack (or embedding set) is zero.
    #[error("stack has no positive activation; nothing to normalize")]
    ZeroStack,

    #[error("empty input vector")]
    EmptyVector,

    #[error("non-finite intermediate in {0}")]
    NumericOverflow(&'static str),

    #[error("shape mismatch in {context}: expected {expected}, found {found}")]
    ShapeMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("empty batch")]
    EmptyBatch,

    #[error("degenerate target histogram: {0}")]
    DegenerateTarget(String),

    #[error("non-finite gradient at iteration {iteration}")]
    NonFiniteGradient { iteration: usize },

    #[error("loss diverged at epoch {epoch} (seed {seed})")]
    DivergedLoss { epoch: usize, seed: u64 },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_len(context: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::ShapeMismatch {
            context,
            expected,
            found,
        })
    }
}
