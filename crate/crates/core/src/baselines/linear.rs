use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{check_dim, check_fit, BaselineError, Matrix};

fn column_means(x: &Matrix) -> Vec<f64> {
    let n = x.rows() as f64;
    (0..x.cols).map(|j| (0..x.rows()).map(|i| x.data[i * x.cols + j]).sum::<f64>() / n).collect()
}

/// Least squares with penalty `alpha·‖w‖²`; the intercept is not penalized.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ridge {
    pub alpha: f64,
    pub weights: Vec<f64>,
    pub intercept: f64,
}

impl Ridge {
    pub fn fit(x: &Matrix, y: &[f64], alpha: f64) -> Result<Self, BaselineError> {
        check_fit(x, y, false)?;
        if !(alpha >= 0.0 && alpha.is_finite()) {
            return Err(BaselineError::Hyperparameter(format!("alpha = {alpha}")));
        }
        let (n, d) = (x.rows(), x.cols);
        let mx = column_means(x);
        let my = y.iter().sum::<f64>() / n as f64;
        let xc = DMatrix::from_fn(n, d, |i, j| x.data[i * d + j] - mx[j]);
        let yc = DVector::from_iterator(n, y.iter().map(|v| v - my));
        let mut a = xc.transpose() * &xc;
        for j in 0..d {
            a[(j, j)] += alpha;
        }
        let b = xc.transpose() * yc;
        let w = match a.clone().cholesky() {
            Some(ch) => ch.solve(&b),
            None => a.lu().solve(&b).ok_or(BaselineError::Singular)?,
        };
        let weights = w.as_slice().to_vec();
        let intercept = my - weights.iter().zip(&mx).map(|(w, m)| w * m).sum::<f64>();
        Ok(Self {
            alpha,
            weights,
            intercept,
        })
    }

    pub fn predict(&self, x: &[f64]) -> Result<f64, BaselineError> {
        check_dim(self.weights.len(), x)?;
        Ok(self.weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + self.intercept)
    }
}

/// L1-penalized least squares, `(1/2n)‖y − Xw − b‖² + alpha·‖w‖₁`, by cyclic
/// coordinate descent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lasso {
    pub alpha: f64,
    pub weights: Vec<f64>,
    pub intercept: f64,
}

impl Lasso {
    pub fn fit(x: &Matrix, y: &[f64], alpha: f64) -> Result<Self, BaselineError> {
        check_fit(x, y, false)?;
        if !(alpha >= 0.0 && alpha.is_finite()) {
            return Err(BaselineError::Hyperparameter(format!("alpha = {alpha}")));
        }
        let (n, d) = (x.rows(), x.cols);
        let nf = n as f64;
        let mx = column_means(x);
        let my = y.iter().sum::<f64>() / nf;
        let xc: Vec<f64> = (0..n * d).map(|k| x.data[k] - mx[k % d]).collect();
        let col_sq: Vec<f64> = (0..d).map(|j| (0..n).map(|i| xc[i * d + j].powi(2)).sum::<f64>() / nf).collect();
        let mut resid: Vec<f64> = y.iter().map(|v| v - my).collect();
        let mut w = vec![0.0; d];
        for _ in 0..10_000 {
            let mut max_change: f64 = 0.0;
            for j in 0..d {
                if col_sq[j] == 0.0 {
                    continue;
                }
                let rho = (0..n).map(|i| xc[i * d + j] * resid[i]).sum::<f64>() / nf + col_sq[j] * w[j];
                let new = rho.signum() * (rho.abs() - alpha).max(0.0) / col_sq[j];
                let delta = new - w[j];
                if delta != 0.0 {
                    for i in 0..n {
                        resid[i] -= xc[i * d + j] * delta;
                    }
                    w[j] = new;
                }
                max_change = max_change.max(delta.abs());
            }
            if max_change < 1e-10 {
                break;
            }
        }
        let intercept = my - w.iter().zip(&mx).map(|(w, m)| w * m).sum::<f64>();
        Ok(Self {
            alpha,
            weights: w,
            intercept,
        })
    }

    pub fn predict(&self, x: &[f64]) -> Result<f64, BaselineError> {
        check_dim(self.weights.len(), x)?;
        Ok(self.weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + self.intercept)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ridge_without_penalty_is_least_squares() {
        let x = Matrix::new(vec![0.0, 1.0, 2.0, 3.0], 1);
        let m = Ridge::fit(&x, &[1.0, 3.0, 5.0, 7.0], 0.0).unwrap();
        assert!((m.weights[0] - 2.0).abs() < 1e-12);
        assert!((m.intercept - 1.0).abs() < 1e-12);
    }

    #[test]
    fn lasso_zeroes_irrelevant_columns() {
        let x = Matrix::new(vec![0.0, 0.3, 1.0, 0.1, 2.0, 0.2, 3.0, 0.0, 4.0, 0.3], 2);
        let y = [0.0, 1.0, 2.0, 3.0, 4.0];
        let m = Lasso::fit(&x, &y, 0.01).unwrap();
        assert_eq!(m.weights[1], 0.0);
        // soft-thresholded slope: 1 − alpha / var(x) = 1 − 0.01/2
        assert!((m.weights[0] - 0.995).abs() < 1e-8);
    }
}
