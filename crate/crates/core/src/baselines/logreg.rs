use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{check_dim, check_fit, BaselineError, Matrix};

/// L2-penalized logistic regression. `c` is the inverse regularization
/// strength: the objective is `C·Σ logloss + ½‖w‖²` with an unpenalized
/// intercept.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticRegression {
    pub c: f64,
    pub weights: Vec<f64>,
    pub intercept: f64,
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

impl LogisticRegression {
    /// Newton–Raphson (IRLS) to convergence.
    pub fn fit(x: &Matrix, y: &[f64], c: f64) -> Result<Self, BaselineError> {
        check_fit(x, y, true)?;
        if !(c > 0.0 && c.is_finite()) {
            return Err(BaselineError::Hyperparameter(format!("C = {c} must be positive")));
        }
        let (n, d) = (x.rows(), x.cols);
        // augmented design with a trailing intercept column
        let xa = DMatrix::from_fn(n, d + 1, |i, j| if j < d { x.data[i * d + j] } else { 1.0 });
        let yv = DVector::from_column_slice(y);
        let mut beta = DVector::<f64>::zeros(d + 1);
        for _ in 0..100 {
            let z = &xa * &beta;
            let p = z.map(sigmoid);
            let w = p.map(|v| (v * (1.0 - v)).max(1e-12));
            let mut grad = xa.transpose() * (&p - &yv) * c;
            let mut hess = xa.transpose() * DMatrix::from_diagonal(&w) * &xa * c;
            for j in 0..d {
                grad[j] += beta[j];
                hess[(j, j)] += 1.0;
            }
            hess[(d, d)] += 1e-10;
            let step = match hess.clone().cholesky() {
                Some(ch) => ch.solve(&grad),
                None => hess.lu().solve(&grad).ok_or(BaselineError::Singular)?,
            };
            beta -= &step;
            if step.amax() < 1e-10 {
                break;
            }
        }
        Ok(Self {
            c,
            weights: beta.as_slice()[..d].to_vec(),
            intercept: beta[d],
        })
    }

    pub fn predict_proba(&self, x: &[f64]) -> Result<f64, BaselineError> {
        check_dim(self.weights.len(), x)?;
        let z: f64 = self.weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + self.intercept;
        Ok(sigmoid(z))
    }
}
