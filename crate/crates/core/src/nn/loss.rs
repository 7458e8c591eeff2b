use ndarray::{Array1, Array2, Axis};

use crate::{Error, Result};

/// Mean squared error and its gradient `2 (pred − target) / n`.
pub fn mse_loss(pred: &Array1<f64>, target: &Array1<f64>) -> Result<(f64, Array1<f64>)> {
    if pred.is_empty() {
        return Err(Error::InvalidInput("mse over empty vectors".into()));
    }
    if pred.len() != target.len() {
        return Err(Error::InvalidInput(format!(
            "mse length mismatch: {} vs {}",
            pred.len(),
            target.len()
        )));
    }
    let n = pred.len() as f64;
    let diff = pred - target;
    let loss = diff.mapv(|d| d * d).sum() / n;
    Ok((loss, diff * (2.0 / n)))
}

/// Row-wise numerically stable softmax.
pub fn softmax(logits: &Array2<f64>) -> Array2<f64> {
    let mut out = logits.clone();
    for mut row in out.rows_mut() {
        let max = row.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        row.mapv_inplace(|v| (v - max).exp());
        let sum = row.sum();
        row /= sum;
    }
    out
}

/// Softmax cross-entropy averaged over rows. Returns the loss and the
/// gradient w.r.t. the logits, `(softmax − onehot) / batch`.
pub fn crossentropy_loss(logits: &Array2<f64>, onehot: &Array2<f64>) -> Result<(f64, Array2<f64>)> {
    if logits.dim() != onehot.dim() {
        return Err(Error::InvalidShape(format!(
            "logits {:?} vs labels {:?}",
            logits.dim(),
            onehot.dim()
        )));
    }
    if logits.nrows() == 0 {
        return Err(Error::InvalidInput("cross-entropy over an empty batch".into()));
    }
    for (i, row) in onehot.axis_iter(Axis(0)).enumerate() {
        let ones = row.iter().filter(|v| **v == 1.0).count();
        let zeros = row.iter().filter(|v| **v == 0.0).count();
        if ones != 1 || ones + zeros != row.len() {
            return Err(Error::InvalidLabel(format!("row {i} is not one-hot")));
        }
    }
    let n = logits.nrows() as f64;
    let mut loss = 0.0;
    for (row, labels) in logits.rows().into_iter().zip(onehot.rows()) {
        let max = row.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        let log_sum = row.iter().map(|v| (v - max).exp()).sum::<f64>().ln() + max;
        let target: f64 = row.iter().zip(labels).map(|(l, y)| l * y).sum();
        loss += log_sum - target;
    }
    let grad = (softmax(logits) - onehot) / n;
    Ok((loss / n, grad))
}
