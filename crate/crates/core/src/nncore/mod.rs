//! Per-feature static MLPs, the corridor-masked LSTM, the connection layer,
//! losses, Adam and the training loop.

mod adam;
mod loss;
mod masked;
mod model;
mod train;

pub use adam::Adam;
pub use loss::{loss_and_grad, Loss};
pub use masked::{masked_linear, masked_linear_backward};
pub use model::{
    Architecture, CellKind, Corridor, CorridorState, Decomposition, Head, ILstmState, PatWayNet, TensorSpec, Trace, GATES,
};
pub use train::{predict_dataset, train, EarlyStopping, EpochRecord, TrainConfig, TrainReport};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum NnError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("non-finite input value")]
    NonFinite,
    #[error("unknown feature '{0}'")]
    UnknownFeature(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("empty {0}")]
    Empty(&'static str),
    #[error(transparent)]
    Metric(#[from] crate::metrics::MetricError),
}
