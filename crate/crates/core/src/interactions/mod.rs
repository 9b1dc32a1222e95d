//! Randomized search over pairs of sequential features, each pair scored by
//! the held-out AUC of a boosted-tree proxy fitted on that pair alone.

mod gbdt;

pub use gbdt::{GbdtConfig, GbdtProxy};

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::baselines::Matrix;
use crate::eventlog::{split_by_pathway, EncodedDataset, EventLogError, Task};
use crate::metrics::{roc_auc, MetricError};
use crate::seed;

#[derive(Debug, Error)]
pub enum InteractionError {
    #[error("training data is empty")]
    Empty,
    #[error("labels must be 0 or 1")]
    NonBinaryLabels,
    #[error("non-finite input value")]
    NonFinite,
    #[error("need at least two sequential features to form a pair")]
    NoCandidates,
    #[error("interaction search needs a classification dataset")]
    NotClassification,
    #[error(transparent)]
    Split(#[from] EventLogError),
    #[error(transparent)]
    Metric(#[from] MetricError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    /// Number of winning pairs to return.
    pub k: usize,
    /// Maximum number of pairs evaluated.
    pub budget: usize,
    pub test_fraction: f64,
    pub seed: u64,
    pub gbdt: GbdtConfig,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            k: 1,
            budget: 100,
            test_fraction: 0.2,
            seed: 0,
            gbdt: GbdtConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairScore {
    pub features: [String; 2],
    pub indices: [usize; 2],
    pub auc: f64,
    /// Position in the random draw order (0-based).
    pub draw: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InteractionSearch {
    pub seed: u64,
    pub budget: usize,
    pub k: usize,
    /// Every evaluated pair, in draw order.
    pub evaluated: Vec<PairScore>,
    /// The `k` best pairs by AUC (earlier draws win ties).
    pub winners: Vec<PairScore>,
}

/// Rows of `ds` as zero-padded `[x_a,t, x_b,t]` sequences flattened to
/// length `2 · T`, with `T` the longest prefix.
pub fn pair_matrix(ds: &EncodedDataset, a: usize, b: usize, horizon: usize) -> Matrix {
    let mut data = vec![0.0; ds.n_rows() * 2 * horizon];
    for r in 0..ds.n_rows() {
        let seq = ds.x_seq(r);
        let out = &mut data[r * 2 * horizon..(r + 1) * 2 * horizon];
        for t in 0..seq.len.min(horizon) {
            out[2 * t] = seq.step(t)[a];
            out[2 * t + 1] = seq.step(t)[b];
        }
    }
    Matrix::new(data, 2 * horizon.max(1))
}

/// Draws up to `budget` distinct unordered pairs, fits the proxy on a
/// pathway-atomic stratified split shared by all pairs, and ranks the pairs
/// by test AUC.
pub fn detect_interactions(ds: &EncodedDataset, cfg: &SearchConfig) -> Result<InteractionSearch, InteractionError> {
    if ds.task != Task::Classification {
        return Err(InteractionError::NotClassification);
    }
    let p = ds.n_seq();
    let mut pairs: Vec<(usize, usize)> = (0..p).flat_map(|a| (a + 1..p).map(move |b| (a, b))).collect();
    if pairs.is_empty() {
        return Err(InteractionError::NoCandidates);
    }
    let mut rng = seed::rng(cfg.seed, &[0x1a7e]);
    pairs.shuffle(&mut rng);
    pairs.truncate(cfg.budget);

    let (train, test) = split_by_pathway(ds, cfg.test_fraction, seed::derive(cfg.seed, &[0x5711]))?;
    let horizon = ds.seq_len_max();
    let (y_train, y_test) = (train.labels(), test.labels());
    let mut evaluated = Vec::with_capacity(pairs.len());
    for (draw, &(a, b)) in pairs.iter().enumerate() {
        let model = GbdtProxy::fit(&pair_matrix(&train, a, b, horizon), &y_train, &cfg.gbdt)?;
        let xt = pair_matrix(&test, a, b, horizon);
        let scores: Vec<f64> = (0..xt.rows()).map(|i| model.predict_proba(xt.row(i))).collect();
        let auc = roc_auc(&y_test, &scores)?;
        log::debug!("pair {draw}: ({}, {}) auc {auc:.4}", ds.seq_features[a].name, ds.seq_features[b].name);
        evaluated.push(PairScore {
            features: [ds.seq_features[a].name.clone(), ds.seq_features[b].name.clone()],
            indices: [a, b],
            auc,
            draw,
        });
    }
    let mut ranked = evaluated.clone();
    ranked.sort_by(|x, y| y.auc.total_cmp(&x.auc).then(x.draw.cmp(&y.draw)));
    ranked.truncate(cfg.k);
    Ok(InteractionSearch {
        seed: cfg.seed,
        budget: cfg.budget,
        k: cfg.k,
        evaluated,
        winners: ranked,
    })
}
