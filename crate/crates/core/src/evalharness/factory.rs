//! Builds and fits any model kind from a JSON hyperparameter object.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::EvalError;
use crate::baselines::{lstm_architecture, snapshot_matrix, Criterion, DecisionTree, GaussianNb, Knn, LogisticRegression};
use crate::checkpoint::{AnyModel, ModelKind};
use crate::eventlog::{EncodedDataset, Task};
use crate::nncore::{train, Architecture, Head, Loss, PatWayNet, TrainConfig, TrainReport};
use crate::seed;

fn default_max_epochs() -> usize {
    100
}

const DEFAULT_PATIENCE: usize = 10;

/// Hyperparameters shared by the interpretable network and the LSTM baseline.
///
/// For the LSTM baseline `hidden_seq` is the width of the single shared
/// recurrent state; for the interpretable network it is the corridor width.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkParams {
    pub hidden_seq: usize,
    pub hidden_static: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    #[serde(default = "default_max_epochs")]
    pub max_epochs: usize,
    /// Early-stopping patience; defaults to 10 epochs (at most `max_epochs`).
    #[serde(default)]
    pub patience: Option<usize>,
    /// Pairs of sequential feature names that get a joint corridor.
    #[serde(default)]
    pub interactions: Vec<(String, String)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LogregParams {
    /// Inverse regularisation strength.
    pub c: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TreeParams {
    pub max_depth: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KnnParams {
    pub k: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NbParams {
    pub var_smoothing: f64,
}

/// A fitted model plus its training history (networks only).
#[derive(Debug, Clone)]
pub struct FittedModel {
    pub model: AnyModel,
    pub training: Option<TrainReport>,
}

fn parse<T: serde::de::DeserializeOwned>(kind: ModelKind, hp: &Value) -> Result<T, EvalError> {
    serde_json::from_value(hp.clone()).map_err(|e| EvalError::Hyperparameters {
        kind,
        message: e.to_string(),
    })
}

/// Builds the (untrained) network for `kind` (`Patwaynet` or `Lstm`).
pub fn network_architecture(kind: ModelKind, p: &NetworkParams, ds: &EncodedDataset) -> Result<Architecture, EvalError> {
    let head = match ds.task {
        Task::Classification => Head::Sigmoid,
        Task::Regression => Head::Identity,
    };
    match kind {
        ModelKind::Patwaynet => Ok(Architecture::interpretable(
            ds.static_features.clone(),
            ds.seq_features.clone(),
            p.hidden_static,
            p.hidden_seq,
            head,
        )
        .with_interactions(&p.interactions)?),
        ModelKind::Lstm if p.interactions.is_empty() => Ok(lstm_architecture(ds, p.hidden_seq, p.hidden_static, head)),
        ModelKind::Lstm => Err(EvalError::Hyperparameters {
            kind,
            message: "the LSTM baseline has no interaction corridors".into(),
        }),
        _ => Err(EvalError::Hyperparameters {
            kind,
            message: "not a network model".into(),
        }),
    }
}

/// Fits `kind` on `train`; networks use `val` for early stopping.
///
/// `seed` fixes both the network initialisation and the mini-batch order.
pub fn fit_model(
    kind: ModelKind,
    hp: &Value,
    train_ds: &EncodedDataset,
    val_ds: &EncodedDataset,
    seed_value: u64,
) -> Result<FittedModel, EvalError> {
    if kind.is_network() {
        let p: NetworkParams = parse(kind, hp)?;
        let arch = network_architecture(kind, &p, train_ds)?;
        let mut net = PatWayNet::new(arch, seed::derive(seed_value, &[0x1417]))?;
        let cfg = TrainConfig {
            loss: match train_ds.task {
                Task::Classification => Loss::BinaryCrossEntropy,
                Task::Regression => Loss::MeanSquaredError,
            },
            learning_rate: p.learning_rate,
            batch_size: p.batch_size,
            max_epochs: p.max_epochs,
            patience: p.patience.unwrap_or(DEFAULT_PATIENCE.min(p.max_epochs)),
            seed: seed_value,
        };
        let report = train(&mut net, train_ds, val_ds, &cfg)?;
        let model = if kind == ModelKind::Patwaynet {
            AnyModel::Patwaynet(net)
        } else {
            AnyModel::Lstm(net)
        };
        return Ok(FittedModel {
            model,
            training: Some(report),
        });
    }
    let (x, _) = snapshot_matrix(train_ds);
    let y = train_ds.labels();
    let classification = train_ds.task == Task::Classification;
    if !classification && kind != ModelKind::Tree {
        return Err(EvalError::NotClassification);
    }
    let model = match kind {
        ModelKind::Logreg => AnyModel::Logreg(LogisticRegression::fit(&x, &y, parse::<LogregParams>(kind, hp)?.c)?),
        ModelKind::Tree => {
            let criterion = if classification {
                Criterion::Gini
            } else {
                Criterion::SquaredError
            };
            AnyModel::Tree(DecisionTree::fit(&x, &y, parse::<TreeParams>(kind, hp)?.max_depth, criterion)?)
        }
        ModelKind::Knn => AnyModel::Knn(Knn::fit(&x, &y, parse::<KnnParams>(kind, hp)?.k)?),
        ModelKind::Nb => AnyModel::Nb(GaussianNb::fit(&x, &y, parse::<NbParams>(kind, hp)?.var_smoothing)?),
        ModelKind::Patwaynet | ModelKind::Lstm => unreachable!("handled above"),
    };
    Ok(FittedModel { model, training: None })
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn unknown_keys_are_rejected() {
        let err = parse::<TreeParams>(ModelKind::Tree, &json!({"max_depth": 2, "depth": 3})).unwrap_err();
        assert!(matches!(err, EvalError::Hyperparameters { .. }));
    }

    #[test]
    fn network_defaults_fill_in() {
        let p: NetworkParams = parse(
            ModelKind::Patwaynet,
            &json!({"hidden_seq": 4, "hidden_static": 4, "learning_rate": 0.01, "batch_size": 32}),
        )
        .unwrap();
        assert_eq!((p.max_epochs, p.patience), (100, None));
        assert!(p.interactions.is_empty());
    }
}
