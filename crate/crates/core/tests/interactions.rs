mod common;

use common::planted_and_dataset;
use patway_core::baselines::Matrix;
use patway_core::interactions::{detect_interactions, GbdtConfig, GbdtProxy, SearchConfig};
use patway_core::metrics::roc_auc;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random binary XOR design. No additive function of the two inputs can
/// separate the classes, so stumps stay far from perfect ranking.
fn xor_data(n: usize) -> (Matrix, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut data = Vec::new();
    let mut y = Vec::new();
    for _ in 0..n {
        let (a, b) = (rng.gen_bool(0.5), rng.gen_bool(0.5));
        data.extend([f64::from(a), f64::from(b)]);
        y.push(f64::from(a ^ b));
    }
    (Matrix::new(data, 2), y)
}

fn proba(m: &GbdtProxy, x: &Matrix) -> Vec<f64> {
    (0..x.rows()).map(|i| m.predict_proba(x.row(i))).collect()
}

#[test]
fn boosted_trees_learn_xor_but_stumps_cannot() {
    let (x, y) = xor_data(400);
    let deep = GbdtProxy::fit(&x, &y, &GbdtConfig::default()).unwrap();
    assert_eq!(roc_auc(&y, &proba(&deep, &x)).unwrap(), 1.0);
    let stumps = GbdtProxy::fit(
        &x,
        &y,
        &GbdtConfig {
            max_depth: 1,
            ..GbdtConfig::default()
        },
    )
    .unwrap();
    let auc = roc_auc(&y, &proba(&stumps, &x)).unwrap();
    assert!(auc < 0.75, "stump AUC {auc}");
}

#[test]
fn planted_and_pair_ranks_first() {
    let mut hits = 0;
    for seed in 0..5 {
        let ds = planted_and_dataset(600, 6, 3, (1, 4), 100 + seed);
        let res = detect_interactions(&ds, &SearchConfig { seed, ..SearchConfig::default() }).unwrap();
        assert_eq!(res.evaluated.len(), 15);
        hits += usize::from(res.winners[0].indices == [1, 4]);
    }
    assert!(hits >= 4, "planted pair first in {hits} of 5 seeds");
}

#[test]
fn search_is_deterministic() {
    let ds = planted_and_dataset(200, 4, 3, (0, 2), 7);
    let cfg = SearchConfig { seed: 3, ..SearchConfig::default() };
    assert_eq!(detect_interactions(&ds, &cfg).unwrap(), detect_interactions(&ds, &cfg).unwrap());
}
