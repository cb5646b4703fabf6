use thiserror::Error;

/// Errors produced by configuration validation and training.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid signature ({p},{q},{r}): n = p+q+r must be in 1..={max}")]
    InvalidSignature { p: u32, q: u32, r: u32, max: u32 },

    #[error("unsupported Sobol dimension {dim}: supported range is 1..={max}")]
    UnsupportedSobolDimension { dim: usize, max: usize },

    #[error(
        "grid of {requested} points ({ng}^{dim}) exceeds the cap of {cap}; \
         grid size scales exponentially with the algebra dimension, use a Sobol \
         grid with fewer points per dimension or raise `max_points`"
    )]
    GridTooLarge {
        requested: u128,
        ng: usize,
        dim: usize,
        cap: usize,
    },

    #[error("invalid grid range [{lo}, {hi}]: lower bound must be below upper bound")]
    InvalidRange { lo: f64, hi: f64 },

    #[error("grid must have at least one point per dimension")]
    EmptyGrid,

    #[error("model needs at least two layers of widths >= 1, got {0:?}")]
    InvalidWidths(Vec<usize>),

    #[error("grade {grade} out of range for an algebra with n = {n}")]
    GradeOutOfRange { grade: usize, n: usize },

    #[error("input arity {got} does not match the model input width {expected}")]
    ArityMismatch { got: usize, expected: usize },

    #[error("empty batch")]
    EmptyBatch,

    #[error("batch normalization in training mode needs a batch of at least 2 samples")]
    BatchTooSmall,

    #[error("the `sin` task is only defined for the complex algebra Cl(0,1), got {0}")]
    SinNeedsComplex(String),

    #[error("unknown task `{0}`")]
    UnknownTask(String),

    #[error("cannot split {samples} samples into {folds} folds")]
    TooManyFolds { samples: usize, folds: usize },

    #[error("non-finite loss at epoch {epoch} (fold {fold}): {loss}; training aborted")]
    NonFiniteLoss { fold: usize, epoch: usize, loss: f64 },

    #[error("invalid training config: {0}")]
    InvalidTrainConfig(String),
}
