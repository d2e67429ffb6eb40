//! Classifier training: a small gradient-trained network and the adaptive
//! label-correction loop built on top of it.

mod adacorr;
mod mlp;

pub use adacorr::{train_adacorr, train_crossentropy, AdaCorrConfig, EpochRecord, TrainingTrace};
pub use mlp::{evaluate, loss_and_grad, EvalTarget, MlpModel, CHECKPOINT_MAGIC, LOG_FLOOR};
