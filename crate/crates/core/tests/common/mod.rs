#![allow(dead_code)]

pub mod oracles;

use patway_core::eventlog::{EncodedDataset, FeatureInfo, FeatureKind, PathwayData, Row, Task};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn features(prefix: &str, n: usize) -> Vec<FeatureInfo> {
    (0..n)
        .map(|i| FeatureInfo {
            name: format!("{prefix}{i}"),
            kind: FeatureKind::Numeric,
            group: None,
        })
        .collect()
}

/// Random dataset with every prefix of every pathway as a row.
pub fn random_dataset(q: usize, p: usize, n_pathways: usize, max_len: usize, task: Task, seed: u64) -> EncodedDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pathways = Vec::new();
    let mut rows = Vec::new();
    for i in 0..n_pathways {
        let len = rng.gen_range(1..=max_len);
        let label = match task {
            Task::Classification => f64::from(i % 2 == 0),
            Task::Regression => rng.gen_range(-1.0..1.0),
        };
        pathways.push(PathwayData {
            id: format!("p{i:03}"),
            x_static: (0..q).map(|_| rng.gen()).collect(),
            x_seq: (0..len * p).map(|_| rng.gen()).collect(),
            len,
            label,
            activities: vec!["A".into(); len],
            timestamps: vec![String::new(); len],
        });
        for t in 1..=len {
            rows.push(Row { pathway: i, prefix_len: t });
        }
    }
    EncodedDataset {
        static_features: features("a", q),
        seq_features: features("s", p),
        task,
        pathways,
        rows,
    }
}

/// Binary sequential channels where the label is 1 iff channels `a` and `b`
/// fire at the same step somewhere in the pathway; every other channel is
/// noise. One row (the full pathway) per pathway.
pub fn planted_and_dataset(n_pathways: usize, p: usize, len: usize, planted: (usize, usize), seed: u64) -> EncodedDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (a, b) = planted;
    let pathways: Vec<PathwayData> = (0..n_pathways)
        .map(|i| {
            let x_seq: Vec<f64> = (0..len * p).map(|_| f64::from(rng.gen_bool(0.35))).collect();
            let label = (0..len).any(|t| x_seq[t * p + a] == 1.0 && x_seq[t * p + b] == 1.0);
            PathwayData {
                id: format!("p{i:04}"),
                x_static: vec![],
                x_seq,
                len,
                label: f64::from(label),
                activities: vec!["A".into(); len],
                timestamps: vec![String::new(); len],
            }
        })
        .collect();
    let rows = (0..n_pathways).map(|pathway| Row { pathway, prefix_len: len }).collect();
    EncodedDataset {
        static_features: vec![],
        seq_features: (0..p)
            .map(|i| FeatureInfo {
                name: format!("s{i}"),
                kind: FeatureKind::Binary,
                group: None,
            })
            .collect(),
        task: Task::Classification,
        pathways,
        rows,
    }
}
