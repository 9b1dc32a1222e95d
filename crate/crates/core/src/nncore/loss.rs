use serde::{Deserialize, Serialize};

use super::model::{Head, PatWayNet, Scratch, Trace};
use super::NnError;
use crate::eventlog::EncodedDataset;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Loss {
    BinaryCrossEntropy,
    MeanSquaredError,
}

impl Loss {
    pub(crate) fn check_head(self, head: Head) -> Result<(), NnError> {
        if self == Loss::BinaryCrossEntropy && head == Head::Identity {
            return Err(NnError::Config("binary cross-entropy needs the sigmoid head".into()));
        }
        Ok(())
    }

    /// Loss of one row and its derivative with respect to the logit.
    pub(crate) fn value_and_dlogit(self, head: Head, logit: f64, prediction: f64, y: f64) -> (f64, f64) {
        match self {
            // softplus form: -y·z + ln(1 + e^z), stable for any z
            Loss::BinaryCrossEntropy => {
                let softplus = logit.max(0.0) + (-logit.abs()).exp().ln_1p();
                (softplus - y * logit, prediction - y)
            }
            Loss::MeanSquaredError => {
                let r = prediction - y;
                let dpred = 2.0 * r;
                let dlogit = match head {
                    Head::Identity => dpred,
                    Head::Sigmoid => dpred * prediction * (1.0 - prediction),
                };
                (r * r, dlogit)
            }
        }
    }
}

/// Mean loss over `rows` of `ds` and its exact gradient (same layout as the
/// parameter vector).
pub fn loss_and_grad(net: &PatWayNet, ds: &EncodedDataset, rows: &[usize], loss: Loss) -> Result<(f64, Vec<f64>), NnError> {
    loss.check_head(net.head())?;
    if rows.is_empty() {
        return Err(NnError::Empty("batch"));
    }
    let mut grad = vec![0.0; net.n_params()];
    let mut tr = Trace::default();
    let mut scratch = Scratch::default();
    let total = accumulate(net, ds, rows, loss, &mut grad, &mut tr, &mut scratch);
    let n = rows.len() as f64;
    grad.iter_mut().for_each(|g| *g /= n);
    Ok((total / n, grad))
}

/// Adds the per-row gradients (unscaled) into `grad`; returns the summed loss.
pub(crate) fn accumulate(
    net: &PatWayNet,
    ds: &EncodedDataset,
    rows: &[usize],
    loss: Loss,
    grad: &mut [f64],
    tr: &mut Trace,
    scratch: &mut Scratch,
) -> f64 {
    let mut total = 0.0;
    for &r in rows {
        let (xs, seq) = (ds.x_static(r), ds.x_seq(r));
        net.run(xs, seq, tr);
        let (l, d) = loss.value_and_dlogit(net.head(), tr.logit, tr.prediction, ds.label(r));
        total += l;
        net.backprop(xs, seq, tr, d, grad, scratch);
    }
    total
}
