use serde::{Deserialize, Serialize};

use super::{check_dim, check_fit, BaselineError, Matrix};

/// Gaussian naive Bayes. Every per-class variance is inflated by
/// `var_smoothing · (largest feature variance)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianNb {
    pub var_smoothing: f64,
    /// Per class (0, 1): log prior, means and variances.
    pub log_prior: [f64; 2],
    pub mean: [Vec<f64>; 2],
    pub var: [Vec<f64>; 2],
}

impl GaussianNb {
    pub fn fit(x: &Matrix, y: &[f64], var_smoothing: f64) -> Result<Self, BaselineError> {
        check_fit(x, y, true)?;
        if !(var_smoothing >= 0.0 && var_smoothing.is_finite()) {
            return Err(BaselineError::Hyperparameter(format!("var_smoothing = {var_smoothing}")));
        }
        let (n, d) = (x.rows(), x.cols);
        let moments = |rows: &[usize]| {
            let m = rows.len() as f64;
            let mean: Vec<f64> = (0..d).map(|j| rows.iter().map(|&i| x.data[i * d + j]).sum::<f64>() / m).collect();
            let var: Vec<f64> = (0..d)
                .map(|j| rows.iter().map(|&i| (x.data[i * d + j] - mean[j]).powi(2)).sum::<f64>() / m)
                .collect();
            (mean, var)
        };
        let all: Vec<usize> = (0..n).collect();
        let (_, total_var) = moments(&all);
        let eps = var_smoothing * total_var.iter().copied().fold(0.0, f64::max);
        let mut out = Self {
            var_smoothing,
            log_prior: [f64::NEG_INFINITY; 2],
            mean: [vec![0.0; d], vec![0.0; d]],
            var: [vec![1.0; d], vec![1.0; d]],
        };
        for class in 0..2 {
            let rows: Vec<usize> = (0..n).filter(|&i| y[i] == class as f64).collect();
            if rows.is_empty() {
                continue;
            }
            let (mean, var) = moments(&rows);
            out.log_prior[class] = (rows.len() as f64 / n as f64).ln();
            out.mean[class] = mean;
            out.var[class] = var.into_iter().map(|v| v + eps).collect();
        }
        if out.var.iter().flatten().any(|&v| v <= 0.0) {
            return Err(BaselineError::Hyperparameter(
                "zero variance; increase var_smoothing".into(),
            ));
        }
        Ok(out)
    }

    fn joint_log_likelihood(&self, class: usize, x: &[f64]) -> f64 {
        let mut ll = self.log_prior[class];
        for ((v, m), s) in x.iter().zip(&self.mean[class]).zip(&self.var[class]) {
            ll -= 0.5 * ((2.0 * std::f64::consts::PI * s).ln() + (v - m) * (v - m) / s);
        }
        ll
    }

    pub fn predict_proba(&self, x: &[f64]) -> Result<f64, BaselineError> {
        check_dim(self.mean[0].len(), x)?;
        let (l0, l1) = (self.joint_log_likelihood(0, x), self.joint_log_likelihood(1, x));
        if l1 == f64::NEG_INFINITY {
            return Ok(0.0);
        }
        if l0 == f64::NEG_INFINITY {
            return Ok(1.0);
        }
        Ok(1.0 / (1.0 + (l0 - l1).exp()))
    }
}
