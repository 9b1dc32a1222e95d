//! Cross-validation report: raw per-seed × per-fold cells, aggregates, a
//! leakage audit and a markdown rendering.

use serde::{Deserialize, Serialize};
use serde_json::Value;
use std::collections::HashSet;

use super::{select_best, EvalConfig, EvalError};
use crate::checkpoint::ModelKind;

pub const REPORT_VERSION: u32 = 1;

/// Outcome of one fold of one seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvCell {
    pub seed_index: usize,
    pub seed: u64,
    pub fold: usize,
    pub config_index: usize,
    pub hyperparameters: Value,
    /// Validation AUC of every grid configuration (`null` = failed fit).
    pub config_val_auc: Vec<Option<f64>>,
    pub val_auc: f64,
    pub val_f1: f64,
    pub test_auc: f64,
    pub test_f1: f64,
    pub train_pathways: Vec<String>,
    pub val_pathways: Vec<String>,
    pub test_pathways: Vec<String>,
}

/// Mean and population standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub sd: f64,
}

impl Summary {
    pub fn of(values: &[f64]) -> Self {
        if values.is_empty() {
            return Self { mean: f64::NAN, sd: f64::NAN };
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        Self { mean, sd: var.sqrt() }
    }

    /// `0.724 (±.049)`.
    pub fn display(&self) -> String {
        let sd = format!("{:.3}", self.sd);
        let sd = sd.strip_prefix('0').unwrap_or(&sd);
        format!("{:.3} (±{sd})", self.mean)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelReport {
    pub model_kind: ModelKind,
    pub cells: Vec<CvCell>,
    pub val_auc: Summary,
    pub val_f1: Summary,
    pub test_auc: Summary,
    pub test_f1: Summary,
}

impl ModelReport {
    pub fn new(model_kind: ModelKind, cells: Vec<CvCell>) -> Self {
        let [val_auc, val_f1, test_auc, test_f1] = Self::aggregates(&cells);
        Self {
            model_kind,
            cells,
            val_auc,
            val_f1,
            test_auc,
            test_f1,
        }
    }

    fn aggregates(cells: &[CvCell]) -> [Summary; 4] {
        let col = |f: fn(&CvCell) -> f64| Summary::of(&cells.iter().map(f).collect::<Vec<_>>());
        [col(|c| c.val_auc), col(|c| c.val_f1), col(|c| c.test_auc), col(|c| c.test_f1)]
    }

    /// Checks that no pathway crosses the train*/val/test boundary of any
    /// cell, that the test folds of each seed are disjoint, that each stored
    /// choice is the argmax of its stored validation scores, and that the
    /// stored aggregates match the raw cells.
    pub fn audit(&self) -> Result<(), EvalError> {
        let leak = |m: String| Err(EvalError::Leakage(format!("{}: {m}", self.model_kind)));
        let mut seen_test: Vec<HashSet<&str>> = Vec::new();
        for c in &self.cells {
            let train: HashSet<&str> = c.train_pathways.iter().map(String::as_str).collect();
            let val: HashSet<&str> = c.val_pathways.iter().map(String::as_str).collect();
            if let Some(id) = c.test_pathways.iter().find(|id| train.contains(id.as_str()) || val.contains(id.as_str())) {
                return leak(format!("seed {} fold {}: test pathway '{id}' also used for fitting", c.seed_index, c.fold));
            }
            if let Some(id) = c.val_pathways.iter().find(|id| train.contains(id.as_str())) {
                return leak(format!("seed {} fold {}: validation pathway '{id}' also in train*", c.seed_index, c.fold));
            }
            if seen_test.len() <= c.seed_index {
                seen_test.resize_with(c.seed_index + 1, HashSet::new);
            }
            for id in &c.test_pathways {
                if !seen_test[c.seed_index].insert(id) {
                    return leak(format!("seed {}: pathway '{id}' in two test folds", c.seed_index));
                }
            }
            if select_best(&c.config_val_auc) != Some(c.config_index) {
                return leak(format!("seed {} fold {}: stored choice is not the validation argmax", c.seed_index, c.fold));
            }
        }
        let stored = [self.val_auc, self.val_f1, self.test_auc, self.test_f1];
        for (a, b) in stored.iter().zip(Self::aggregates(&self.cells)) {
            let close = |x: f64, y: f64| (x - y).abs() <= 1e-12 || (x.is_nan() && y.is_nan());
            if !close(a.mean, b.mean) || !close(a.sd, b.sd) {
                return leak("stored aggregates differ from the raw cells".into());
            }
        }
        Ok(())
    }
}

/// Cross-validation results for one or more model kinds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub version: u32,
    pub config: EvalConfig,
    pub schema_hash: String,
    pub models: Vec<ModelReport>,
}

impl CvReport {
    pub fn new(config: EvalConfig, schema_hash: String, models: Vec<ModelReport>) -> Self {
        Self {
            version: REPORT_VERSION,
            config,
            schema_hash,
            models,
        }
    }

    pub fn audit(&self) -> Result<(), EvalError> {
        self.models.iter().try_for_each(ModelReport::audit)
    }

    pub fn model(&self, kind: ModelKind) -> Option<&ModelReport> {
        self.models.iter().find(|m| m.model_kind == kind)
    }

    /// One row per model: weighted F1 (val, test) and AUC (val, test), each
    /// as mean (±SD) over all seeds and folds.
    pub fn to_markdown(&self) -> String {
        let mut out = String::from(
            "| Model | F1 weighted (val) | F1 weighted (test) | AUC_ROC (val) | AUC_ROC (test) |\n|---|---|---|---|---|\n",
        );
        for m in &self.models {
            out.push_str(&format!(
                "| {} | {} | {} | {} | {} |\n",
                m.model_kind,
                m.val_f1.display(),
                m.test_f1.display(),
                m.val_auc.display(),
                m.test_auc.display()
            ));
        }
        out
    }
}
