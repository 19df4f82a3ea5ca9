//! Desk-scale control-token summarizer: a small encoder-decoder whose input
//! starts with a `<yod_i>` token, with pooled YOD regression and
//! classification heads trained on a three-term loss.

pub mod autograd;
pub mod checkpoint;
pub mod error;
pub mod gradcheck;
pub mod heads;
pub mod loss;
pub mod model;
pub mod optim;
pub mod tensor;
pub mod toy;
pub mod train;
pub mod vocab;

pub use checkpoint::Checkpoint;
pub use error::{NeuralError, Result};
pub use gradcheck::{gradient_check, GradCheckConfig, GradCheckReport, GradFault};
pub use heads::{mean_pool, yod_classifier, yod_regressor, MlpHead};
pub use loss::{composite_loss, dynamic_weight, LossBreakdown, CLASS_WEIGHT};
pub use model::{Example, HeadOutputs, Mode, ModelConfig, Seq2Seq};
pub use optim::{lr_schedule, AdamW, TrainConfig};
pub use toy::ToyDataset;
pub use train::{Sampling, StepLog, Trainer};
pub use vocab::{prepend_control_token, ControlVocab};
