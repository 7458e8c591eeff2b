//! Regression metrics (RMSE, Pearson, concordance correlation), domain
//! accuracy and the one-tailed Welch t-test used for significance flags.
//!
//! Moments are population (divide-by-n) moments throughout.

mod ttest;

pub use ttest::{ln_gamma, one_tailed_ttest, regularized_incomplete_beta, student_t_sf};

use ndarray::{Array2, ArrayView1};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricTriple {
    pub rmse: f64,
    pub pr: f64,
    pub ccc: f64,
}

impl MetricTriple {
    pub fn evaluate<'a>(pred: impl Into<ArrayView1<'a, f64>>, truth: impl Into<ArrayView1<'a, f64>>) -> Result<Self> {
        let (p, t) = (pred.into(), truth.into());
        Ok(MetricTriple {
            rmse: rmse(p, t)?,
            pr: pearson(p, t)?,
            ccc: ccc(p, t)?,
        })
    }
}

fn check(pred: &ArrayView1<f64>, truth: &ArrayView1<f64>, min_len: usize) -> Result<()> {
    if pred.len() != truth.len() {
        return Err(Error::InvalidInput(format!(
            "length mismatch: {} vs {}",
            pred.len(),
            truth.len()
        )));
    }
    if pred.len() < min_len {
        return Err(Error::InvalidInput(format!(
            "need at least {min_len} values, got {}",
            pred.len()
        )));
    }
    Ok(())
}

pub fn rmse<'a>(pred: impl Into<ArrayView1<'a, f64>>, truth: impl Into<ArrayView1<'a, f64>>) -> Result<f64> {
    let (p, t) = (pred.into(), truth.into());
    check(&p, &t, 1)?;
    let sse: f64 = p.iter().zip(t.iter()).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok((sse / p.len() as f64).sqrt())
}

struct Moments {
    mean_x: f64,
    mean_y: f64,
    var_x: f64,
    var_y: f64,
    cov: f64,
}

fn moments(x: &ArrayView1<f64>, y: &ArrayView1<f64>) -> Moments {
    let n = x.len() as f64;
    let mean_x = x.sum() / n;
    let mean_y = y.sum() / n;
    let (mut var_x, mut var_y, mut cov) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y.iter()) {
        let (dx, dy) = (a - mean_x, b - mean_y);
        var_x += dx * dx;
        var_y += dy * dy;
        cov += dx * dy;
    }
    Moments {
        mean_x,
        mean_y,
        var_x: var_x / n,
        var_y: var_y / n,
        cov: cov / n,
    }
}

fn pearson_from(m: &Moments) -> f64 {
    if m.var_x == 0.0 || m.var_y == 0.0 {
        return 0.0;
    }
    (m.cov / (m.var_x * m.var_y).sqrt()).clamp(-1.0, 1.0)
}

/// Pearson correlation; 0 when either input is constant.
pub fn pearson<'a>(pred: impl Into<ArrayView1<'a, f64>>, truth: impl Into<ArrayView1<'a, f64>>) -> Result<f64> {
    let (p, t) = (pred.into(), truth.into());
    check(&p, &t, 2)?;
    Ok(pearson_from(&moments(&p, &t)))
}

/// Concordance correlation coefficient
/// `2ρσxσy / (σx² + σy² + (μx − μy)²)`.
///
/// Two constant, equal sequences score 1; any other constant input scores 0.
pub fn ccc<'a>(pred: impl Into<ArrayView1<'a, f64>>, truth: impl Into<ArrayView1<'a, f64>>) -> Result<f64> {
    let (p, t) = (pred.into(), truth.into());
    check(&p, &t, 2)?;
    let m = moments(&p, &t);
    if m.var_x == 0.0 || m.var_y == 0.0 {
        let equal = m.var_x == 0.0 && m.var_y == 0.0 && m.mean_x == m.mean_y;
        return Ok(if equal { 1.0 } else { 0.0 });
    }
    let rho = pearson_from(&m);
    let diff = m.mean_x - m.mean_y;
    let denom = m.var_x + m.var_y + diff * diff;
    // 2σxσy ≤ σx² + σy² keeps |ccc| ≤ |ρ|; the min guards the last ulp
    let factor = (2.0 * (m.var_x * m.var_y).sqrt() / denom).min(1.0);
    Ok(rho * factor)
}

/// Fraction of rows whose arg-max class equals the label. Ties resolve to
/// the lowest class index.
pub fn domain_accuracy(probs: &Array2<f64>, labels: &[usize]) -> Result<f64> {
    if probs.nrows() == 0 {
        return Err(Error::InvalidInput("domain accuracy over no rows".into()));
    }
    if probs.nrows() != labels.len() {
        return Err(Error::InvalidInput("probabilities and labels differ in length".into()));
    }
    let correct = probs
        .rows()
        .into_iter()
        .zip(labels)
        .filter(|(row, &label)| {
            let mut best = 0;
            for (j, &p) in row.iter().enumerate() {
                if p > row[best] {
                    best = j;
                }
            }
            best == label
        })
        .count();
    Ok(correct as f64 / labels.len() as f64)
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Sample standard deviation (n − 1); zero for fewer than two values.
pub fn sample_std(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let m = mean(values);
    let ss: f64 = values.iter().map(|v| (v - m) * (v - m)).sum();
    (ss / (values.len() - 1) as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn rmse_examples() {
        let a = array![1.0, -2.0, 0.5];
        assert_eq!(rmse(&a, &a).unwrap(), 0.0);
        assert!((rmse(&array![0.0, 0.0], &array![3.0, 4.0]).unwrap() - 12.5f64.sqrt()).abs() < 1e-15);
        let b = array![0.3, 0.1, -4.0];
        assert_eq!(rmse(&a, &b).unwrap(), rmse(&b, &a).unwrap());
        assert!(rmse(&array![], &array![]).is_err());
    }

    #[test]
    fn pearson_examples() {
        let t = array![1.0, 3.0, 2.0, 4.0];
        assert!((pearson(&t.mapv(|v| 2.0 * v + 1.0), &t).unwrap() - 1.0).abs() < 1e-15);
        assert!((pearson(&t.mapv(|v| -v), &t).unwrap() + 1.0).abs() < 1e-15);
        assert!((pearson(&array![1.0, 2.0, 3.0, 4.0], &t).unwrap() - 0.8).abs() < 1e-15);
        assert_eq!(pearson(&array![1.0, 1.0], &array![0.0, 2.0]).unwrap(), 0.0);
        assert!(pearson(&array![1.0], &array![1.0]).is_err());
    }

    #[test]
    fn ccc_examples() {
        let x = array![0.5, -1.0, 2.0, 0.0, 1.5];
        assert_eq!(ccc(&x, &x).unwrap(), 1.0);
        // σ = 1, c = 1 → 2/3
        let unit = array![-1.0, 1.0];
        assert!((ccc(&unit.mapv(|v| v + 1.0), &unit).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(ccc(&array![2.0, 2.0], &array![2.0, 2.0]).unwrap(), 1.0);
        assert_eq!(ccc(&array![2.0, 2.0], &array![3.0, 3.0]).unwrap(), 0.0);
        assert_eq!(ccc(&array![2.0, 2.0], &array![1.0, 3.0]).unwrap(), 0.0);
    }

    #[test]
    fn accuracy_tie_rule() {
        let probs = array![[0.5, 0.5], [0.5, 0.5], [0.5, 0.5], [0.5, 0.5]];
        assert_eq!(domain_accuracy(&probs, &[0, 1, 0, 1]).unwrap(), 0.5);
        let perfect = array![[1.0, 0.0], [0.0, 1.0]];
        assert_eq!(domain_accuracy(&perfect, &[0, 1]).unwrap(), 1.0);
        assert_eq!(domain_accuracy(&perfect, &[1, 0]).unwrap(), 0.0);
        assert!(domain_accuracy(&Array2::zeros((0, 2)), &[]).is_err());
    }
}
