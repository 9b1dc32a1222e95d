mod common;

use common::oracles::{confusion_weighted_f1, pairwise_auc};
use patway_core::metrics::{roc_auc, weighted_f1};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn auc_matches_pairwise_oracle_on_random_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for instance in 0..100 {
        let n = rng.gen_range(2..200);
        let mut y: Vec<f64> = (0..n).map(|_| f64::from(rng.gen_bool(0.3))).collect();
        y[0] = 1.0;
        y[1] = 0.0;
        // Every third instance uses coarse scores to exercise ties.
        let s: Vec<f64> = if instance % 3 == 0 {
            (0..n).map(|_| f64::from(rng.gen_range(0..5))).collect()
        } else {
            (0..n).map(|_| rng.gen()).collect()
        };
        let auc = roc_auc(&y, &s).unwrap();
        let oracle = pairwise_auc(&y, &s);
        assert!((auc - oracle).abs() < 1e-12, "instance {instance}: {auc} vs {oracle}");
    }
}

#[test]
fn auc_is_invariant_under_monotone_transforms() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let y: Vec<f64> = (0..80).map(|i| f64::from(i % 3 == 0)).collect();
    let s: Vec<f64> = (0..80).map(|_| rng.gen_range(-2.0..2.0)).collect();
    let t: Vec<f64> = s.iter().map(|v: &f64| v.exp() * 3.0 + 1.0).collect();
    assert_eq!(roc_auc(&y, &s).unwrap(), roc_auc(&y, &t).unwrap());
}

#[test]
fn weighted_f1_matches_confusion_oracle_on_all_four_row_cases() {
    for labels in 0u8..16 {
        for preds in 0u8..16 {
            let y: Vec<u8> = (0..4).map(|i| (labels >> i) & 1).collect();
            let p: Vec<u8> = (0..4).map(|i| (preds >> i) & 1).collect();
            let yf: Vec<f64> = y.iter().map(|&v| f64::from(v)).collect();
            let pf: Vec<f64> = p.iter().map(|&v| f64::from(v)).collect();
            let got = weighted_f1(&yf, &pf, 0.5).unwrap();
            let want = confusion_weighted_f1(&y, &p);
            assert!((got - want).abs() < 1e-12, "y={y:?} p={p:?}: {got} vs {want}");
        }
    }
}

#[test]
fn weighted_f1_hand_cases() {
    // One positive, predicted all negative: F1_neg = 6/7 on support 3, F1_pos = 0.
    let f = weighted_f1(&[1., 0., 0., 0.], &[0.; 4], 0.5).unwrap();
    assert!((f - 0.75 * 6.0 / 7.0).abs() < 1e-15);
    assert_eq!(weighted_f1(&[1., 0., 1., 0.], &[1., 0., 1., 0.], 0.5).unwrap(), 1.0);
}

#[test]
fn weighted_f1_equals_macro_f1_on_balanced_classes() {
    let y = [1., 1., 0., 0., 1., 0.];
    let p = [1., 0., 0., 1., 1., 0.];
    let yb: Vec<u8> = y.iter().map(|&v| v as u8).collect();
    let pos = confusion_weighted_f1(&yb.iter().map(|&v| 1 - v).collect::<Vec<_>>(), &p.iter().map(|&v| 1 - v as u8).collect::<Vec<_>>());
    assert!((weighted_f1(&y, &p, 0.5).unwrap() - pos).abs() < 1e-12);
}
