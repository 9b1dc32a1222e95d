//! Interpretable outcome prediction for patient pathways.
//!
//! The crate is organised along the pipeline:
//!
//! * [`eventlog`] turns timestamped event logs into prefix datasets,
//! * [`nncore`] holds the additive network (per-feature MLPs, corridor-masked
//!   LSTM, connection layer) with hand-written backprop, Adam and the training loop,
//! * [`interpret`] derives shape, transition, development and importance artifacts,
//! * [`interactions`] searches pairwise sequential interactions with a boosted-tree proxy,
//! * [`baselines`] contains the shallow comparison models, [`metrics`] the scores,
//! * [`evalharness`] runs stratified cross-validation with grid search,
//! * [`simgen`] generates the synthetic log with known additive effects,
//! * [`checkpoint`] persists every model kind into one versioned container.

pub mod baselines;
pub mod checkpoint;
pub mod evalharness;
pub mod eventlog;
pub mod interactions;
pub mod interpret;
pub mod metrics;
pub mod nncore;
pub mod seed;
pub mod simgen;

pub use checkpoint::{AnyModel, Checkpoint, CheckpointError, ModelKind};
pub use eventlog::{EncodedDataset, EventLog, FeatureKind, FeatureSchema};
pub use nncore::{PatWayNet, TrainConfig};
