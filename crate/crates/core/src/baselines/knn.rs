use serde::{Deserialize, Serialize};

use super::{check_dim, check_fit, BaselineError, Matrix};

/// k-nearest neighbours by Euclidean distance; the score is the fraction of
/// positive neighbours. Distance ties go to the earlier training row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Knn {
    pub k: usize,
    pub cols: usize,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl Knn {
    pub fn fit(x: &Matrix, y: &[f64], k: usize) -> Result<Self, BaselineError> {
        check_fit(x, y, true)?;
        if k == 0 || k > x.rows() {
            return Err(BaselineError::Hyperparameter(format!("k = {k} with {} training rows", x.rows())));
        }
        Ok(Self {
            k,
            cols: x.cols,
            x: x.data.clone(),
            y: y.to_vec(),
        })
    }

    pub fn predict_proba(&self, q: &[f64]) -> Result<f64, BaselineError> {
        check_dim(self.cols, q)?;
        let mut dist: Vec<(f64, usize)> = self
            .x
            .chunks(self.cols)
            .enumerate()
            .map(|(i, r)| (r.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum::<f64>(), i))
            .collect();
        let k = self.k;
        dist.select_nth_unstable_by(k - 1, |a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let pos: f64 = dist[..k].iter().map(|&(_, i)| self.y[i]).sum();
        Ok(pos / k as f64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nearest_neighbours_vote() {
        let x = Matrix::new(vec![0.0, 0.1, 0.2, 0.8, 0.9, 1.0], 1);
        let y = [0., 0., 0., 1., 1., 1.];
        let m = Knn::fit(&x, &y, 3).unwrap();
        assert_eq!(m.predict_proba(&[0.05]).unwrap(), 0.0);
        assert_eq!(m.predict_proba(&[0.95]).unwrap(), 1.0);
        assert_eq!(m.predict_proba(&[0.75]).unwrap(), 1.0);
    }

    #[test]
    fn k_larger_than_n_is_rejected() {
        let x = Matrix::new(vec![0.0, 1.0], 1);
        assert!(Knn::fit(&x, &[0., 1.], 3).is_err());
    }
}
