use ndarray::{Array1, Array2};

use super::FeatureMatrix;
use crate::{Error, Result};

/// Lower bound on a fitted standard deviation.
pub const STD_FLOOR: f64 = 1e-8;
const LOWER_Q: f64 = 0.05;
const UPPER_Q: f64 = 0.95;
/// Normalized values with magnitude above this are zeroed.
const CLIP: f64 = 10.0;

#[derive(Debug, Clone, PartialEq)]
pub struct NormalizationStats {
    pub mean: Array1<f64>,
    pub std: Array1<f64>,
}

/// Quantile by linear interpolation between order statistics of `sorted`
/// (position `(n − 1)·q`).
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = (sorted.len() - 1) as f64 * q;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

/// Per-column mean and standard deviation over the values lying between the
/// column's 5% and 95% quantiles (inclusive).
pub fn fit_normalization(features: &FeatureMatrix) -> Result<NormalizationStats> {
    if features.len() < 2 {
        return Err(Error::InvalidInput("normalization needs at least 2 rows".into()));
    }
    let d = features.dim();
    let mut mean = Array1::zeros(d);
    let mut std = Array1::zeros(d);
    for (j, col) in features.values.columns().into_iter().enumerate() {
        let mut sorted = col.to_vec();
        sorted.sort_by(f64::total_cmp);
        let (lo, hi) = (quantile(&sorted, LOWER_Q), quantile(&sorted, UPPER_Q));
        let kept: Vec<f64> = col.iter().copied().filter(|v| *v >= lo && *v <= hi).collect();
        let n = kept.len() as f64;
        let m = kept.iter().sum::<f64>() / n;
        let var = kept.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n;
        mean[j] = m;
        std[j] = var.sqrt().max(STD_FLOOR);
    }
    Ok(NormalizationStats { mean, std })
}

/// z-scores every value with `stats`, then zeroes any |z| > 10.
pub fn apply_normalization(features: &FeatureMatrix, stats: &NormalizationStats) -> Result<FeatureMatrix> {
    if stats.mean.len() != features.dim() || stats.std.len() != features.dim() {
        return Err(Error::InvalidShape(format!(
            "stats cover {} features, matrix has {}",
            stats.mean.len(),
            features.dim()
        )));
    }
    let mut values: Array2<f64> = features.values.clone();
    for mut row in values.rows_mut() {
        for j in 0..row.len() {
            let z = (row[j] - stats.mean[j]) / stats.std[j];
            row[j] = if z.abs() > CLIP { 0.0 } else { z };
        }
    }
    Ok(FeatureMatrix {
        ids: features.ids.clone(),
        values,
        domain: features.domain,
    })
}
