//! Repeated, pathway-stratified k-fold cross-validation with an inner
//! grid search selected on validation AUC.
//!
//! For every seed the pathways are shuffled into `k` stratified folds. Each
//! training fold is split 80/20 (pathway-atomic, stratified) into train* and
//! validation; every grid configuration is fitted on train* and scored on
//! validation, and the winner is scored on the held-out fold.

mod factory;
mod report;

pub use factory::{fit_model, network_architecture, FittedModel, KnnParams, LogregParams, NbParams, NetworkParams, TreeParams};
pub use report::{CvCell, CvReport, ModelReport, Summary, REPORT_VERSION};

use indexmap::IndexMap;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::baselines::BaselineError;
use crate::checkpoint::{CheckpointError, ModelKind};
use crate::eventlog::{split_by_pathway, stratum_of, EncodedDataset, EventLogError, Task};
use crate::metrics::{classification_scores, MetricError};
use crate::nncore::NnError;
use crate::seed;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("cannot build folds: {0}")]
    Folds(String),
    #[error("invalid grid: {0}")]
    Grid(String),
    #[error("invalid {kind} hyperparameters: {message}")]
    Hyperparameters { kind: ModelKind, message: String },
    #[error("every {kind} configuration failed to fit")]
    AllConfigurationsFailed { kind: ModelKind },
    #[error("evaluation requires a classification dataset")]
    NotClassification,
    #[error("train fraction {0} outside (0, 1]")]
    TrainFraction(f64),
    #[error("leakage audit failed: {0}")]
    Leakage(String),
    #[error(transparent)]
    Data(#[from] EventLogError),
    #[error(transparent)]
    Model(#[from] NnError),
    #[error(transparent)]
    Baseline(#[from] BaselineError),
    #[error(transparent)]
    Checkpoint(#[from] CheckpointError),
    #[error(transparent)]
    Metric(#[from] MetricError),
}

/// Pathway indices of one fold.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fold {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Stratified `k`-fold partition of the pathways (not the prefixes).
///
/// Each class is shuffled and dealt round-robin; the dealing position carries
/// over from one class to the next so fold sizes differ by at most one.
pub fn stratified_kfold(ds: &EncodedDataset, k: usize, seed_value: u64) -> Result<Vec<Fold>, EvalError> {
    if k < 2 {
        return Err(EvalError::Folds(format!("need at least 2 folds, got {k}")));
    }
    let mut strata: [Vec<usize>; 2] = [Vec::new(), Vec::new()];
    for (i, p) in ds.pathways.iter().enumerate() {
        strata[stratum_of(p.label)].push(i);
    }
    for (class, members) in strata.iter().enumerate() {
        if members.len() < k {
            return Err(EvalError::Folds(format!(
                "class {class} has {} pathway(s), fewer than {k} folds",
                members.len()
            )));
        }
    }
    let mut rng = seed::rng(seed_value, &[0xf01d]);
    let mut tests: Vec<Vec<usize>> = vec![Vec::new(); k];
    let mut slot = 0;
    for members in strata.iter_mut() {
        members.shuffle(&mut rng);
        for &m in members.iter() {
            tests[slot % k].push(m);
            slot += 1;
        }
    }
    Ok(tests
        .into_iter()
        .map(|mut test| {
            test.sort_unstable();
            let train = (0..ds.pathways.len()).filter(|i| test.binary_search(i).is_err()).collect();
            Fold { train, test }
        })
        .collect())
}

/// Named hyperparameter lists for one model kind; configurations are the
/// cartesian product in declaration order, the last list varying fastest.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GridSpec(pub IndexMap<String, Vec<Value>>);

impl GridSpec {
    pub fn new<K: Into<String>>(params: impl IntoIterator<Item = (K, Vec<Value>)>) -> Self {
        Self(params.into_iter().map(|(k, v)| (k.into(), v)).collect())
    }

    /// Hyperparameter ranges searched for each model kind by default.
    pub fn default_for(kind: ModelKind) -> Self {
        use serde_json::json;
        let net = |hidden: Vec<Value>| {
            GridSpec::new([
                ("hidden_seq", hidden),
                ("hidden_static", vec![json!(4), json!(8)]),
                ("learning_rate", vec![json!(0.001), json!(0.01)]),
                ("batch_size", vec![json!(32), json!(128)]),
            ])
        };
        match kind {
            ModelKind::Patwaynet => net(vec![json!(4), json!(8)]),
            ModelKind::Lstm => net(vec![json!(4), json!(32), json!(128)]),
            ModelKind::Tree => GridSpec::new([("max_depth", vec![json!(2), json!(3), json!(4)])]),
            ModelKind::Logreg => GridSpec::new([("c", (-3..=3).map(|e| json!(10f64.powi(e))).collect())]),
            ModelKind::Knn => GridSpec::new([("k", vec![json!(3), json!(5), json!(10)])]),
            ModelKind::Nb => GridSpec::new([("var_smoothing", (-9..=0).map(|e| json!(10f64.powi(e))).collect())]),
        }
    }

    pub fn len(&self) -> usize {
        self.0.values().map(Vec::len).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Every configuration as a JSON object, in grid order.
    pub fn configurations(&self) -> Result<Vec<Value>, EvalError> {
        if self.0.is_empty() || self.is_empty() {
            return Err(EvalError::Grid("empty hyperparameter product".into()));
        }
        let mut out = vec![serde_json::Map::new()];
        for (name, values) in &self.0 {
            out = out
                .into_iter()
                .flat_map(|base| {
                    values.iter().map(move |v| {
                        let mut m = base.clone();
                        m.insert(name.clone(), v.clone());
                        m
                    })
                })
                .collect();
        }
        Ok(out.into_iter().map(Value::Object).collect())
    }
}

/// Single configuration used when no grid search is run: the best values of
/// the default grids on the sepsis benchmark.
pub fn default_hyperparameters(kind: ModelKind) -> Value {
    use serde_json::json;
    match kind {
        ModelKind::Patwaynet => json!({"hidden_seq": 8, "hidden_static": 8, "learning_rate": 0.01, "batch_size": 32}),
        ModelKind::Lstm => json!({"hidden_seq": 128, "hidden_static": 4, "learning_rate": 0.001, "batch_size": 32}),
        ModelKind::Tree => json!({"max_depth": 4}),
        ModelKind::Logreg => json!({"c": 1.0}),
        ModelKind::Knn => json!({"k": 10}),
        ModelKind::Nb => json!({"var_smoothing": 1e-4}),
    }
}

/// Grids for several model kinds, evaluated in file order.
pub type GridFile = IndexMap<ModelKind, GridSpec>;

/// Result of one grid search.
#[derive(Debug, Clone)]
pub struct GridOutcome {
    pub best: FittedModel,
    pub best_index: usize,
    pub best_hyperparameters: Value,
    /// Validation AUC of every configuration (`None` if it failed).
    pub config_val_auc: Vec<Option<f64>>,
}

/// Index of the highest score; the first one wins ties, failures never win.
pub fn select_best(scores: &[Option<f64>]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, s) in scores.iter().enumerate() {
        if let Some(s) = *s {
            if best.is_none_or(|(_, b)| s > b) {
                best = Some((i, s));
            }
        }
    }
    best.map(|(i, _)| i)
}

fn validation_auc(m: &FittedModel, val: &EncodedDataset) -> Result<f64, EvalError> {
    let pred = m.model.predict_dataset(val)?;
    Ok(classification_scores(&val.labels(), &pred)?.auc)
}

/// Fits every configuration on `train` and keeps the one with the highest
/// validation AUC. Configuration `c` is seeded with `derive(run_seed, [fold, c])`.
pub fn grid_search(
    kind: ModelKind,
    grid: &GridSpec,
    train_ds: &EncodedDataset,
    val_ds: &EncodedDataset,
    run_seed: u64,
    fold: usize,
) -> Result<GridOutcome, EvalError> {
    let configs = grid.configurations()?;
    let mut scores = Vec::with_capacity(configs.len());
    let mut best: Option<(usize, FittedModel)> = None;
    for (c, hp) in configs.iter().enumerate() {
        let seed_value = seed::derive(run_seed, &[fold as u64, c as u64]);
        let outcome = fit_model(kind, hp, train_ds, val_ds, seed_value)
            .and_then(|m| validation_auc(&m, val_ds).map(|auc| (m, auc)));
        match outcome {
            Ok((m, auc)) => {
                if scores.iter().flatten().all(|&s: &f64| auc > s) {
                    best = Some((c, m));
                }
                scores.push(Some(auc));
            }
            Err(e) => {
                log::warn!("{kind} configuration {c} ({hp}) skipped: {e}");
                scores.push(None);
            }
        }
    }
    let (best_index, best) = best.ok_or(EvalError::AllConfigurationsFailed { kind })?;
    debug_assert_eq!(select_best(&scores), Some(best_index));
    Ok(GridOutcome {
        best,
        best_index,
        best_hyperparameters: configs[best_index].clone(),
        config_val_auc: scores,
    })
}

/// Cross-validation settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    pub folds: usize,
    pub seeds: usize,
    pub base_seed: u64,
    /// Fraction of each training fold moved to the validation side.
    pub val_fraction: f64,
    /// Fraction of each training fold's pathways kept (learning curves).
    pub train_fraction: f64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            folds: 5,
            seeds: 5,
            base_seed: 0,
            val_fraction: 0.2,
            train_fraction: 1.0,
        }
    }
}

/// Seed of run `s`; drives fold assignment, inner split and initialisation.
pub fn run_seed(base: u64, s: usize) -> u64 {
    seed::derive(base, &[s as u64])
}

fn subsample(ds: &EncodedDataset, fraction: f64, seed_value: u64) -> Result<EncodedDataset, EvalError> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(EvalError::TrainFraction(fraction));
    }
    if fraction == 1.0 {
        return Ok(ds.clone());
    }
    let (_, kept) = split_by_pathway(ds, fraction, seed::derive(seed_value, &[0x5ab5]))?;
    Ok(kept)
}

fn ids(ds: &EncodedDataset) -> Vec<String> {
    ds.pathways.iter().map(|p| p.id.clone()).collect()
}

/// Cross-validates one model kind.
pub fn evaluate(kind: ModelKind, ds: &EncodedDataset, grid: &GridSpec, cfg: &EvalConfig) -> Result<ModelReport, EvalError> {
    if ds.task != Task::Classification {
        return Err(EvalError::NotClassification);
    }
    grid.configurations()?;
    let mut cells = Vec::with_capacity(cfg.seeds * cfg.folds);
    for s in 0..cfg.seeds {
        let rs = run_seed(cfg.base_seed, s);
        for (f, fold) in stratified_kfold(ds, cfg.folds, rs)?.iter().enumerate() {
            let outer = ds.subset_pathways(&fold.train);
            let test = ds.subset_pathways(&fold.test);
            let outer = subsample(&outer, cfg.train_fraction, seed::derive(rs, &[f as u64]))?;
            let (train_star, val) = split_by_pathway(&outer, cfg.val_fraction, seed::derive(rs, &[f as u64, 0x7a1]))?;
            let outcome = grid_search(kind, grid, &train_star, &val, rs, f)?;
            let val_pred = outcome.best.model.predict_dataset(&val)?;
            let test_pred = outcome.best.model.predict_dataset(&test)?;
            let vs = classification_scores(&val.labels(), &val_pred)?;
            let ts = classification_scores(&test.labels(), &test_pred)?;
            log::info!("{kind} seed {s} fold {f}: val AUC {:.4}, test AUC {:.4}", vs.auc, ts.auc);
            cells.push(CvCell {
                seed_index: s,
                seed: rs,
                fold: f,
                config_index: outcome.best_index,
                hyperparameters: outcome.best_hyperparameters,
                config_val_auc: outcome.config_val_auc,
                val_auc: vs.auc,
                val_f1: vs.f1,
                test_auc: ts.auc,
                test_f1: ts.f1,
                train_pathways: ids(&train_star),
                val_pathways: ids(&val),
                test_pathways: ids(&test),
            });
        }
    }
    let report = ModelReport::new(kind, cells);
    report.audit()?;
    Ok(report)
}

/// Cross-validates every model kind of `grids`, in order.
pub fn evaluate_all(ds: &EncodedDataset, grids: &GridFile, cfg: &EvalConfig) -> Result<CvReport, EvalError> {
    let models = grids
        .iter()
        .map(|(&kind, grid)| evaluate(kind, ds, grid, cfg))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(CvReport::new(cfg.clone(), ds.schema_hash(), models))
}
