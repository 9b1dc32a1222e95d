use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::adam::Adam;
use super::loss::{accumulate, Loss};
use super::model::{PatWayNet, Scratch, Trace};
use super::NnError;
use crate::eventlog::{EncodedDataset, Task};
use crate::{metrics, seed};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub loss: Loss,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub patience: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            loss: Loss::BinaryCrossEntropy,
            learning_rate: 0.001,
            batch_size: 32,
            max_epochs: 100,
            patience: 10,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), NnError> {
        if self.batch_size == 0 {
            return Err(NnError::Config("batch size must be at least 1".into()));
        }
        if self.max_epochs == 0 {
            return Err(NnError::Config("max_epochs must be at least 1".into()));
        }
        if self.patience > self.max_epochs {
            return Err(NnError::Config("patience exceeds max_epochs".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(NnError::Config(format!("learning rate {} must be positive", self.learning_rate)));
        }
        Ok(())
    }
}

/// Patience-based stopping rule. Only a strictly better metric counts as an
/// improvement.
#[derive(Debug, Clone, PartialEq)]
pub struct EarlyStopping {
    patience: usize,
    higher_is_better: bool,
    best: Option<f64>,
    best_epoch: usize,
    since_best: usize,
}

impl EarlyStopping {
    pub fn new(patience: usize, higher_is_better: bool) -> Self {
        Self {
            patience,
            higher_is_better,
            best: None,
            best_epoch: 0,
            since_best: 0,
        }
    }

    /// Records the metric of `epoch`; returns whether it improved.
    pub fn observe(&mut self, epoch: usize, metric: f64) -> bool {
        let better = match self.best {
            None => true,
            Some(b) if self.higher_is_better => metric > b,
            Some(b) => metric < b,
        };
        if better {
            self.best = Some(metric);
            self.best_epoch = epoch;
            self.since_best = 0;
        } else {
            self.since_best += 1;
        }
        better
    }

    pub fn should_stop(&self) -> bool {
        self.since_best >= self.patience
    }

    pub fn best_epoch(&self) -> usize {
        self.best_epoch
    }

    pub fn best(&self) -> Option<f64> {
        self.best
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_metric: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    /// `"auc"` for classification, `"mse"` for regression.
    pub metric: String,
    pub history: Vec<EpochRecord>,
    pub best_epoch: usize,
    pub best_metric: f64,
    pub stopped_early: bool,
}

fn check_dataset(net: &PatWayNet, ds: &EncodedDataset, what: &'static str) -> Result<(), NnError> {
    if ds.is_empty() {
        return Err(NnError::Empty(what));
    }
    if ds.n_static() != net.q() || ds.n_seq() != net.p() {
        return Err(NnError::Shape(format!(
            "{what} has {} static and {} sequential features, model expects {} and {}",
            ds.n_static(),
            ds.n_seq(),
            net.q(),
            net.p()
        )));
    }
    Ok(())
}

/// Predictions for every row of `ds`.
pub fn predict_dataset(net: &PatWayNet, ds: &EncodedDataset) -> Result<Vec<f64>, NnError> {
    if ds.n_static() != net.q() || ds.n_seq() != net.p() {
        return Err(NnError::Shape("dataset features do not match the model".into()));
    }
    let mut tr = Trace::default();
    Ok((0..ds.n_rows())
        .map(|r| {
            net.run(ds.x_static(r), ds.x_seq(r), &mut tr);
            tr.prediction
        })
        .collect())
}

fn val_metric(net: &PatWayNet, val: &EncodedDataset) -> Result<f64, NnError> {
    let pred = predict_dataset(net, val)?;
    let y = val.labels();
    Ok(match val.task {
        Task::Classification => metrics::roc_auc(&y, &pred)?,
        Task::Regression => metrics::mse(&y, &pred)?,
    })
}

/// Mini-batch Adam over shuffled prefixes with early stopping on the
/// validation metric (AUC, or MSE for regression). On return `net` holds the
/// parameters of the best epoch.
pub fn train(net: &mut PatWayNet, train_set: &EncodedDataset, val: &EncodedDataset, cfg: &TrainConfig) -> Result<TrainReport, NnError> {
    cfg.validate()?;
    cfg.loss.check_head(net.head())?;
    check_dataset(net, train_set, "training set")?;
    check_dataset(net, val, "validation set")?;
    let higher_is_better = val.task == Task::Classification;
    // fail before spending any epochs when the metric is undefined
    val_metric(net, val)?;

    let mut opt = Adam::new(net.n_params());
    let mut stop = EarlyStopping::new(cfg.patience, higher_is_better);
    let mut best_params = net.params().to_vec();
    let mut history = Vec::new();
    let mut order: Vec<usize> = (0..train_set.n_rows()).collect();
    let mut grad = vec![0.0; net.n_params()];
    let mut tr = Trace::default();
    let mut scratch = Scratch::default();
    let mut stopped_early = false;

    for epoch in 1..=cfg.max_epochs {
        let mut rng = seed::rng(cfg.seed, &[0x7a41, epoch as u64]);
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            grad.iter_mut().for_each(|g| *g = 0.0);
            total += accumulate(net, train_set, batch, cfg.loss, &mut grad, &mut tr, &mut scratch);
            let n = batch.len() as f64;
            grad.iter_mut().for_each(|g| *g /= n);
            opt.step(net.params_mut(), &grad, cfg.learning_rate);
        }
        let train_loss = total / order.len() as f64;
        let metric = val_metric(net, val)?;
        if !train_loss.is_finite() || !metric.is_finite() {
            return Err(NnError::NonFinite);
        }
        log::debug!("epoch {epoch}: train loss {train_loss:.6}, val metric {metric:.6}");
        history.push(EpochRecord {
            epoch,
            train_loss,
            val_metric: metric,
        });
        if stop.observe(epoch, metric) {
            best_params.copy_from_slice(net.params());
        }
        if stop.should_stop() {
            stopped_early = epoch < cfg.max_epochs;
            break;
        }
    }
    net.params_mut().copy_from_slice(&best_params);
    Ok(TrainReport {
        metric: if higher_is_better { "auc" } else { "mse" }.into(),
        history,
        best_epoch: stop.best_epoch(),
        best_metric: stop.best().unwrap_or(f64::NAN),
        stopped_early,
    })
}
