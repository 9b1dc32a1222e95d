//! Versioned, self-describing model container.
//!
//! Network tensors are stored as base64 of their little-endian `f64` bytes so
//! a save/load round trip is bit-exact; shallow models are stored as JSON
//! (floats are written in shortest round-trip form).

use base64::engine::general_purpose::STANDARD as B64;
use base64::Engine;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::Path;
use thiserror::Error;

use crate::baselines::{snapshot_row, BaselineError, DecisionTree, GaussianNb, Knn, LogisticRegression};
use crate::eventlog::{schema_hash, EncodedDataset, FeatureInfo, SeqView, Task};
use crate::nncore::{Architecture, Corridor, NnError, PatWayNet, TrainReport};

pub const CHECKPOINT_VERSION: u32 = 1;
const FORMAT: &str = "patway-checkpoint";

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("unsupported checkpoint: {0}")]
    Format(String),
    #[error("checkpoint is corrupt: {0}")]
    Corrupt(String),
    #[error("schema mismatch: checkpoint {expected}, dataset {found}")]
    SchemaMismatch { expected: String, found: String },
    #[error(transparent)]
    Model(#[from] NnError),
    #[error(transparent)]
    Baseline(#[from] BaselineError),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Patwaynet,
    Lstm,
    Logreg,
    Tree,
    Knn,
    Nb,
}

impl ModelKind {
    pub const ALL: [ModelKind; 6] = [
        ModelKind::Patwaynet,
        ModelKind::Lstm,
        ModelKind::Logreg,
        ModelKind::Tree,
        ModelKind::Knn,
        ModelKind::Nb,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Patwaynet => "patwaynet",
            ModelKind::Lstm => "lstm",
            ModelKind::Logreg => "logreg",
            ModelKind::Tree => "tree",
            ModelKind::Knn => "knn",
            ModelKind::Nb => "nb",
        }
    }

    pub fn is_network(self) -> bool {
        matches!(self, ModelKind::Patwaynet | ModelKind::Lstm)
    }
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for ModelKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        ModelKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| format!("unknown model kind '{s}'"))
    }
}

/// Any trained model the pipeline can persist and score with.
#[derive(Debug, Clone, PartialEq)]
pub enum AnyModel {
    Patwaynet(PatWayNet),
    Lstm(PatWayNet),
    Logreg(LogisticRegression),
    Tree(DecisionTree),
    Knn(Knn),
    Nb(GaussianNb),
}

impl AnyModel {
    pub fn kind(&self) -> ModelKind {
        match self {
            AnyModel::Patwaynet(_) => ModelKind::Patwaynet,
            AnyModel::Lstm(_) => ModelKind::Lstm,
            AnyModel::Logreg(_) => ModelKind::Logreg,
            AnyModel::Tree(_) => ModelKind::Tree,
            AnyModel::Knn(_) => ModelKind::Knn,
            AnyModel::Nb(_) => ModelKind::Nb,
        }
    }

    pub fn network(&self) -> Option<&PatWayNet> {
        match self {
            AnyModel::Patwaynet(n) | AnyModel::Lstm(n) => Some(n),
            _ => None,
        }
    }

    /// Score (probability, or value for regression) of one dataset row.
    pub fn predict_row(&self, ds: &EncodedDataset, row: usize) -> Result<f64, CheckpointError> {
        Ok(match self {
            AnyModel::Patwaynet(n) | AnyModel::Lstm(n) => n.predict(ds.x_static(row), ds.x_seq(row))?,
            AnyModel::Logreg(m) => m.predict_proba(&snapshot_row(ds, row))?,
            AnyModel::Tree(m) => m.predict(&snapshot_row(ds, row))?,
            AnyModel::Knn(m) => m.predict_proba(&snapshot_row(ds, row))?,
            AnyModel::Nb(m) => m.predict_proba(&snapshot_row(ds, row))?,
        })
    }

    pub fn predict_dataset(&self, ds: &EncodedDataset) -> Result<Vec<f64>, CheckpointError> {
        match self {
            AnyModel::Patwaynet(n) | AnyModel::Lstm(n) => Ok(crate::nncore::predict_dataset(n, ds)?),
            _ => (0..ds.n_rows()).map(|r| self.predict_row(ds, r)).collect(),
        }
    }

    /// Prediction for a pathway prefix given directly.
    pub fn predict_prefix(&self, x_static: &[f64], seq: SeqView<'_>) -> Result<f64, CheckpointError> {
        match self.network() {
            Some(n) => Ok(n.predict(x_static, seq)?),
            None => Err(CheckpointError::Format(format!(
                "{} scores dataset rows, not raw prefixes",
                self.kind()
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct StoredTensor {
    name: String,
    shape: Vec<usize>,
    data: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct StoredNetwork {
    architecture: Architecture,
    corridors: Vec<Corridor>,
    /// `U_m` and `V_m` as base64 of their 0/1 bytes.
    u_mask: String,
    v_mask: String,
    tensors: Vec<StoredTensor>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "model", rename_all = "snake_case")]
enum Body {
    Network(StoredNetwork),
    Logreg(LogisticRegression),
    Tree(DecisionTree),
    Knn(Knn),
    Nb(GaussianNb),
}

/// Model plus the metadata needed to check it against a dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    pub model_kind: ModelKind,
    pub task: Task,
    pub schema_hash: String,
    pub static_features: Vec<FeatureInfo>,
    pub seq_features: Vec<FeatureInfo>,
    /// Hyperparameters the model was trained with, as given.
    pub hyperparameters: serde_json::Value,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub training: Option<TrainReport>,
    body: Body,
}

fn encode_f64(values: &[f64]) -> String {
    let bytes: Vec<u8> = values.iter().flat_map(|v| v.to_le_bytes()).collect();
    B64.encode(bytes)
}

fn decode_f64(text: &str) -> Result<Vec<f64>, CheckpointError> {
    let bytes = B64
        .decode(text)
        .map_err(|e| CheckpointError::Corrupt(format!("tensor data: {e}")))?;
    if bytes.len() % 8 != 0 {
        return Err(CheckpointError::Corrupt("tensor byte length is not a multiple of 8".into()));
    }
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect())
}

impl Checkpoint {
    pub fn new(
        model: &AnyModel,
        ds: &EncodedDataset,
        hyperparameters: serde_json::Value,
        seed: u64,
        training: Option<TrainReport>,
    ) -> Self {
        let body = match model {
            AnyModel::Patwaynet(n) | AnyModel::Lstm(n) => {
                let (u, v) = n.masks();
                Body::Network(StoredNetwork {
                    architecture: n.architecture().clone(),
                    corridors: n.corridors().to_vec(),
                    u_mask: B64.encode(u),
                    v_mask: B64.encode(v),
                    tensors: n
                        .tensors()
                        .into_iter()
                        .map(|t| StoredTensor {
                            data: encode_f64(&n.params()[t.range.clone()]),
                            name: t.name,
                            shape: t.shape,
                        })
                        .collect(),
                })
            }
            AnyModel::Logreg(m) => Body::Logreg(m.clone()),
            AnyModel::Tree(m) => Body::Tree(m.clone()),
            AnyModel::Knn(m) => Body::Knn(m.clone()),
            AnyModel::Nb(m) => Body::Nb(m.clone()),
        };
        Self {
            format: FORMAT.into(),
            version: CHECKPOINT_VERSION,
            model_kind: model.kind(),
            task: ds.task,
            schema_hash: ds.schema_hash(),
            static_features: ds.static_features.clone(),
            seq_features: ds.seq_features.clone(),
            hyperparameters,
            seed,
            training,
            body,
        }
    }

    /// Reconstructs the model, verifying masks, corridor table and shapes.
    pub fn model(&self) -> Result<AnyModel, CheckpointError> {
        if self.format != FORMAT || self.version != CHECKPOINT_VERSION {
            return Err(CheckpointError::Format(format!("{} v{}", self.format, self.version)));
        }
        if schema_hash(&self.static_features, &self.seq_features) != self.schema_hash {
            return Err(CheckpointError::Corrupt("schema hash does not match feature lists".into()));
        }
        let model = match (&self.body, self.model_kind) {
            (Body::Network(stored), ModelKind::Patwaynet | ModelKind::Lstm) => {
                let arch = stored.architecture.clone();
                if arch.static_features != self.static_features || arch.seq_features != self.seq_features {
                    return Err(CheckpointError::Corrupt("architecture features differ from header".into()));
                }
                let mut net = PatWayNet::new(arch, 0)?;
                let specs = net.tensors();
                if specs.len() != stored.tensors.len() {
                    return Err(CheckpointError::Corrupt("tensor count mismatch".into()));
                }
                let mut params = vec![0.0; net.n_params()];
                for (spec, t) in specs.iter().zip(&stored.tensors) {
                    if spec.name != t.name || spec.shape != t.shape {
                        return Err(CheckpointError::Corrupt(format!("unexpected tensor '{}'", t.name)));
                    }
                    let data = decode_f64(&t.data)?;
                    if data.len() != spec.range.len() {
                        return Err(CheckpointError::Corrupt(format!("tensor '{}' has wrong length", t.name)));
                    }
                    params[spec.range.clone()].copy_from_slice(&data);
                }
                net = PatWayNet::from_params(net.architecture().clone(), params)?;
                let (u, v) = net.masks();
                if B64.encode(u) != stored.u_mask || B64.encode(v) != stored.v_mask {
                    return Err(CheckpointError::Corrupt("stored masks differ from the architecture".into()));
                }
                if net.corridors() != stored.corridors.as_slice() {
                    return Err(CheckpointError::Corrupt("corridor table differs from the architecture".into()));
                }
                if self.model_kind == ModelKind::Patwaynet {
                    AnyModel::Patwaynet(net)
                } else {
                    AnyModel::Lstm(net)
                }
            }
            (Body::Logreg(m), ModelKind::Logreg) => AnyModel::Logreg(m.clone()),
            (Body::Tree(m), ModelKind::Tree) => AnyModel::Tree(m.clone()),
            (Body::Knn(m), ModelKind::Knn) => AnyModel::Knn(m.clone()),
            (Body::Nb(m), ModelKind::Nb) => AnyModel::Nb(m.clone()),
            _ => return Err(CheckpointError::Corrupt("model kind does not match stored body".into())),
        };
        Ok(model)
    }

    pub fn check_dataset(&self, ds: &EncodedDataset) -> Result<(), CheckpointError> {
        let found = ds.schema_hash();
        if found != self.schema_hash {
            return Err(CheckpointError::SchemaMismatch {
                expected: self.schema_hash.clone(),
                found,
            });
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String, CheckpointError> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self, CheckpointError> {
        Ok(serde_json::from_str(text)?)
    }

    /// Exact bytes written by [`Checkpoint::save`].
    pub fn to_file_text(&self) -> Result<String, CheckpointError> {
        Ok(self.to_json()? + "\n")
    }

    pub fn save(&self, path: &Path) -> Result<(), CheckpointError> {
        std::fs::write(path, self.to_file_text()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, CheckpointError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// SHA-256 (hex) of the saved file's bytes.
    pub fn model_hash(&self) -> Result<String, CheckpointError> {
        let digest = Sha256::digest(self.to_file_text()?.as_bytes());
        Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
    }
}
