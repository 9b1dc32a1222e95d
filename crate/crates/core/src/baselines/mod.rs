//! Shallow comparison models and the unrestricted-LSTM baseline.
//!
//! Shallow models see a per-prefix snapshot: the static vector followed by
//! one value per sequential channel (see [`snapshot_row`]).

mod knn;
mod linear;
mod logreg;
mod nb;
mod tree;

pub use knn::Knn;
pub use linear::{Lasso, Ridge};
pub use logreg::LogisticRegression;
pub use nb::GaussianNb;
pub use tree::{Criterion, DecisionTree};

use thiserror::Error;

use crate::eventlog::{EncodedDataset, FeatureKind};
use crate::nncore::{Architecture, CellKind, Head};

#[derive(Debug, Error, PartialEq)]
pub enum BaselineError {
    #[error("training data is empty")]
    Empty,
    #[error("invalid hyperparameter: {0}")]
    Hyperparameter(String),
    #[error("input has {got} features, model expects {expected}")]
    Dimension { expected: usize, got: usize },
    #[error("labels must be 0 or 1")]
    NonBinaryLabels,
    #[error("linear system could not be solved")]
    Singular,
}

/// Dense row-major design matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    pub data: Vec<f64>,
    pub cols: usize,
}

impl Matrix {
    pub fn new(data: Vec<f64>, cols: usize) -> Self {
        assert!(cols > 0 && data.len().is_multiple_of(cols), "data does not tile into rows of {cols}");
        Self { data, cols }
    }

    pub fn rows(&self) -> usize {
        self.data.len() / self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }
}

pub(crate) fn check_fit(x: &Matrix, y: &[f64], binary: bool) -> Result<(), BaselineError> {
    if x.rows() == 0 {
        return Err(BaselineError::Empty);
    }
    if x.rows() != y.len() {
        return Err(BaselineError::Dimension {
            expected: x.rows(),
            got: y.len(),
        });
    }
    if binary && y.iter().any(|&v| v != 0.0 && v != 1.0) {
        return Err(BaselineError::NonBinaryLabels);
    }
    Ok(())
}

pub(crate) fn check_dim(expected: usize, x: &[f64]) -> Result<(), BaselineError> {
    if x.len() != expected {
        return Err(BaselineError::Dimension { expected, got: x.len() });
    }
    Ok(())
}

/// Snapshot of one prefix: static features, then per sequential channel the
/// most recent observed value (numeric channels: the value at the last step
/// whose activity is that channel, or the last step's value when the channel
/// never fired) or whether it occurred at all in the prefix (binary
/// channels).
pub fn snapshot_row(ds: &EncodedDataset, row: usize) -> Vec<f64> {
    let seq = ds.x_seq(row);
    let activities = &ds.pathways[ds.rows[row].pathway].activities;
    let mut out = ds.x_static(row).to_vec();
    for (j, f) in ds.seq_features.iter().enumerate() {
        let value = match f.kind {
            FeatureKind::Binary => f64::from((0..seq.len).any(|t| seq.step(t)[j] >= 0.5)),
            _ => {
                let t = (0..seq.len).rev().find(|&t| activities[t] == f.name).unwrap_or(seq.len - 1);
                seq.step(t)[j]
            }
        };
        out.push(value);
    }
    out
}

/// Snapshot matrix of every row plus the column names.
pub fn snapshot_matrix(ds: &EncodedDataset) -> (Matrix, Vec<String>) {
    let names: Vec<String> = ds
        .static_features
        .iter()
        .chain(&ds.seq_features)
        .map(|f| f.name.clone())
        .collect();
    let cols = names.len().max(1);
    let mut data = Vec::with_capacity(ds.n_rows() * cols);
    for r in 0..ds.n_rows() {
        data.extend(snapshot_row(ds, r));
    }
    (Matrix { data, cols }, names)
}

/// Architecture of the LSTM baseline: the same static module next to a
/// single unmasked recurrent cell of width `hidden` over all channels.
pub fn lstm_architecture(ds: &EncodedDataset, hidden: usize, hidden_static: usize, head: Head) -> Architecture {
    Architecture {
        static_features: ds.static_features.clone(),
        seq_features: ds.seq_features.clone(),
        hidden_static,
        corridor_width: hidden,
        interactions: Vec::new(),
        cell: CellKind::Unrestricted,
        head,
    }
}
