//! Tensor engine, CNN layers, Adam trainer and the model file format.

mod gemm;
pub mod io;
pub mod layers;
pub mod network;
mod tensor;
pub mod train;

use thiserror::Error;

pub use io::{load_model, read_model, save_model, write_model};
pub use layers::{conv2d_forward, cross_entropy, dropout, relu, softmax, ConvLayer, DenseLayer, Mode, Padding};
pub use network::{argmax, predict, predict_batch, BatchResult, Gradients, Layer, Model, ModelConfig, ModelMeta};
pub use tensor::{Real, Tensor};
pub use train::{adam_step, train, train_model, AdamMoments, EpochRecord, FeatureSet, TrainConfig, TrainOutcome};

#[derive(Debug, Error)]
pub enum NnetError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("non-finite loss at epoch {epoch}, batch {batch}: {detail}")]
    NonFinite { epoch: usize, batch: usize, detail: String },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("not a model file (bad magic)")]
    BadMagic,
    #[error("unsupported model file version {0}")]
    Version(u32),
    #[error("malformed model file: {0}")]
    Format(String),
    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, NnetError>;
