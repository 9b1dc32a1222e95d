use super::NnError;

/// Row-vector times element-wise masked matrix: `out[c] = Σ_r x[r]·W[r,c]·M[r,c]`.
///
/// `w` and `mask` are row-major `rows × cols`; mask entries must be 0 or 1.
pub fn masked_linear(x: &[f64], w: &[f64], mask: &[u8], cols: usize) -> Result<Vec<f64>, NnError> {
    check_shapes(x.len(), w.len(), mask, cols)?;
    let mut out = vec![0.0; cols];
    for (r, &xr) in x.iter().enumerate() {
        for c in 0..cols {
            if mask[r * cols + c] == 1 {
                out[c] += xr * w[r * cols + c];
            }
        }
    }
    Ok(out)
}

/// Gradients of [`masked_linear`] w.r.t. `x` and `W` given the upstream
/// gradient `d_out`. Masked entries of `dW` are exactly zero.
pub fn masked_linear_backward(
    x: &[f64],
    w: &[f64],
    mask: &[u8],
    cols: usize,
    d_out: &[f64],
) -> Result<(Vec<f64>, Vec<f64>), NnError> {
    check_shapes(x.len(), w.len(), mask, cols)?;
    if d_out.len() != cols {
        return Err(NnError::Shape(format!("upstream gradient has {} entries, expected {cols}", d_out.len())));
    }
    let mut dx = vec![0.0; x.len()];
    let mut dw = vec![0.0; w.len()];
    for r in 0..x.len() {
        for c in 0..cols {
            if mask[r * cols + c] == 1 {
                dx[r] += w[r * cols + c] * d_out[c];
                dw[r * cols + c] = x[r] * d_out[c];
            }
        }
    }
    Ok((dx, dw))
}

fn check_shapes(rows: usize, w_len: usize, mask: &[u8], cols: usize) -> Result<(), NnError> {
    if w_len != rows * cols || mask.len() != rows * cols {
        return Err(NnError::Shape(format!(
            "x has {rows} entries but W has {w_len} and M has {} (cols {cols})",
            mask.len()
        )));
    }
    if mask.iter().any(|&m| m > 1) {
        return Err(NnError::Shape("mask entries must be 0 or 1".into()));
    }
    Ok(())
}

/// Active rows per column of a 0/1 mask; the evaluation order every
/// masked product in the cell follows.
pub(crate) fn column_support(mask: &[u8], rows: usize, cols: usize) -> Vec<Vec<u32>> {
    (0..cols)
        .map(|c| (0..rows).filter(|&r| mask[r * cols + c] == 1).map(|r| r as u32).collect())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_mask_suppresses_off_diagonal() {
        let out = masked_linear(&[1.0, 1.0], &[1.0; 4], &[1, 0, 0, 1], 2).unwrap();
        assert_eq!(out, vec![1.0, 1.0]);
    }

    #[test]
    fn zero_mask_annihilates() {
        let out = masked_linear(&[3.0, -2.0], &[5.0, 1.0, 2.0, 7.0], &[0; 4], 2).unwrap();
        assert_eq!(out, vec![0.0, 0.0]);
    }

    #[test]
    fn ones_mask_is_plain_product() {
        let x = [0.5, -1.5];
        let w = [1.0, 2.0, 3.0, 4.0];
        let out = masked_linear(&x, &w, &[1; 4], 2).unwrap();
        assert_eq!(out, vec![0.5 * 1.0 - 1.5 * 3.0, 0.5 * 2.0 - 1.5 * 4.0]);
    }

    #[test]
    fn masked_entries_get_no_gradient() {
        let (_, dw) = masked_linear_backward(&[1.0, 2.0], &[1.0; 4], &[1, 0, 0, 1], 2, &[1.0, 1.0]).unwrap();
        assert_eq!(dw, vec![1.0, 0.0, 0.0, 2.0]);
    }

    #[test]
    fn shape_mismatch() {
        assert!(masked_linear(&[1.0], &[1.0; 4], &[1; 4], 2).is_err());
        assert!(masked_linear(&[1.0, 1.0], &[1.0; 4], &[2, 0, 0, 1], 2).is_err());
    }
}
