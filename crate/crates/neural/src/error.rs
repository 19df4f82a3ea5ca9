use crate::loss::LossBreakdown;

#[derive(Debug, thiserror::Error)]
pub enum NeuralError {
    #[error("no control token for YOD level {0}")]
    UnknownLevel(i64),

    #[error("every position is masked")]
    AllMasked,

    #[error("hidden states have {states} rows but the mask has {mask} entries")]
    MaskLength { states: usize, mask: usize },

    #[error("invalid model config: {0}")]
    InvalidConfig(String),

    #[error("invalid train config: {0}")]
    InvalidTrainConfig(String),

    #[error("non-finite loss at step {step}: {breakdown:?}")]
    NonFiniteLoss { step: usize, breakdown: LossBreakdown },

    #[error("empty batch or dataset")]
    EmptyBatch,

    #[error("sequence of length {len} exceeds max_len {max}")]
    SequenceTooLong { len: usize, max: usize },

    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Core(#[from] yod_core::Error),
}

pub type Result<T, E = NeuralError> = std::result::Result<T, E>;
