//! Classification and regression metrics.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum MetricError {
    #[error("metric needs at least one sample")]
    Empty,
    #[error("labels and scores differ in length ({0} vs {1})")]
    Length(usize, usize),
    #[error("AUC is undefined when only one class is present")]
    SingleClass,
    #[error("non-finite score")]
    NonFinite,
}

fn check(y: &[f64], s: &[f64]) -> Result<(), MetricError> {
    if y.len() != s.len() {
        return Err(MetricError::Length(y.len(), s.len()));
    }
    if y.is_empty() {
        return Err(MetricError::Empty);
    }
    if s.iter().any(|v| !v.is_finite()) {
        return Err(MetricError::NonFinite);
    }
    Ok(())
}

/// Area under the ROC curve via the Mann–Whitney statistic (ties count ½).
pub fn roc_auc(y: &[f64], score: &[f64]) -> Result<f64, MetricError> {
    check(y, score)?;
    let mut idx: Vec<usize> = (0..y.len()).collect();
    idx.sort_by(|&a, &b| score[a].total_cmp(&score[b]));
    let mut ranks = vec![0.0; y.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && score[idx[j + 1]] == score[idx[i]] {
            j += 1;
        }
        let mid = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            ranks[k] = mid;
        }
        i = j + 1;
    }
    let n_pos = y.iter().filter(|&&v| v >= 0.5).count();
    let n_neg = y.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(MetricError::SingleClass);
    }
    let rank_sum: f64 = y.iter().zip(&ranks).filter(|(&v, _)| v >= 0.5).map(|(_, r)| r).sum();
    let (np, nn) = (n_pos as f64, n_neg as f64);
    Ok((rank_sum - np * (np + 1.0) / 2.0) / (np * nn))
}

/// Support-weighted mean of the per-class F1 scores; a class whose F1 is
/// undefined (no predicted and no true members) scores 0.
pub fn weighted_f1(y: &[f64], score: &[f64], threshold: f64) -> Result<f64, MetricError> {
    check(y, score)?;
    let mut tp = [0usize; 2];
    let mut fp = [0usize; 2];
    let mut fn_ = [0usize; 2];
    for (&t, &s) in y.iter().zip(score) {
        let truth = usize::from(t >= 0.5);
        let pred = usize::from(s >= threshold);
        if truth == pred {
            tp[truth] += 1;
        } else {
            fp[pred] += 1;
            fn_[truth] += 1;
        }
    }
    let n = y.len() as f64;
    let mut total = 0.0;
    for c in 0..2 {
        let support = tp[c] + fn_[c];
        let denom = 2 * tp[c] + fp[c] + fn_[c];
        let f1 = if denom == 0 { 0.0 } else { 2.0 * tp[c] as f64 / denom as f64 };
        total += f1 * support as f64 / n;
    }
    Ok(total)
}

pub fn accuracy(y: &[f64], score: &[f64], threshold: f64) -> Result<f64, MetricError> {
    check(y, score)?;
    let hits = y.iter().zip(score).filter(|(&t, &s)| (t >= 0.5) == (s >= threshold)).count();
    Ok(hits as f64 / y.len() as f64)
}

pub fn mse(y: &[f64], pred: &[f64]) -> Result<f64, MetricError> {
    check(y, pred)?;
    Ok(y.iter().zip(pred).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / y.len() as f64)
}

pub fn mae(y: &[f64], pred: &[f64]) -> Result<f64, MetricError> {
    check(y, pred)?;
    Ok(y.iter().zip(pred).map(|(a, b)| (a - b).abs()).sum::<f64>() / y.len() as f64)
}

/// Coefficient of determination; `0` when the target is constant and
/// perfectly predicted, `-inf` when constant and missed.
pub fn r2(y: &[f64], pred: &[f64]) -> Result<f64, MetricError> {
    check(y, pred)?;
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let ss_tot: f64 = y.iter().map(|v| (v - mean) * (v - mean)).sum();
    let ss_res: f64 = y.iter().zip(pred).map(|(a, b)| (a - b) * (a - b)).sum();
    if ss_tot == 0.0 {
        return Ok(if ss_res == 0.0 { 0.0 } else { f64::NEG_INFINITY });
    }
    Ok(1.0 - ss_res / ss_tot)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassificationScores {
    pub auc: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegressionScores {
    pub mse: f64,
    pub mae: f64,
    pub r2: f64,
}

pub fn classification_scores(y: &[f64], score: &[f64]) -> Result<ClassificationScores, MetricError> {
    Ok(ClassificationScores {
        auc: roc_auc(y, score)?,
        f1: weighted_f1(y, score, 0.5)?,
    })
}

pub fn regression_scores(y: &[f64], pred: &[f64]) -> Result<RegressionScores, MetricError> {
    Ok(RegressionScores {
        mse: mse(y, pred)?,
        mae: mae(y, pred)?,
        r2: r2(y, pred)?,
    })
}
