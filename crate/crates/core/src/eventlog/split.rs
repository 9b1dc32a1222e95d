use rand::seq::SliceRandom;

use super::{EncodedDataset, EventLogError};
use crate::seed;

/// Pathway-level stratification key (binary label; regression labels are
/// thresholded at 0.5).
pub fn stratum_of(label: f64) -> usize {
    usize::from(label >= 0.5)
}

/// Splits the pathways into `(train, test)` with about `test_fraction` of each
/// class on the test side. All prefixes of a pathway stay together.
pub fn split_by_pathway(
    ds: &EncodedDataset,
    test_fraction: f64,
    seed_value: u64,
) -> Result<(EncodedDataset, EncodedDataset), EventLogError> {
    if !(0.0..1.0).contains(&test_fraction) || test_fraction == 0.0 {
        return Err(EventLogError::Split(format!("test fraction {test_fraction} outside (0, 1)")));
    }
    let mut strata: [Vec<usize>; 2] = [Vec::new(), Vec::new()];
    for (i, p) in ds.pathways.iter().enumerate() {
        strata[stratum_of(p.label)].push(i);
    }
    let mut rng = seed::rng(seed_value, &[0x5911]);
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for (class, members) in strata.iter_mut().enumerate() {
        if members.is_empty() {
            continue;
        }
        if members.len() < 2 {
            return Err(EventLogError::Split(format!(
                "class {class} has {} pathway(s); need at least 2 for a two-way split",
                members.len()
            )));
        }
        members.shuffle(&mut rng);
        let n_test = ((members.len() as f64 * test_fraction).round() as usize).clamp(1, members.len() - 1);
        test.extend_from_slice(&members[..n_test]);
        train.extend_from_slice(&members[n_test..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((ds.subset_pathways(&train), ds.subset_pathways(&test)))
}
