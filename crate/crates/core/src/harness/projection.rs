//! 2-D PCA views of shared-layer activations and a nearest-centroid
//! separability score for the two domains.

use std::fmt::Write as _;

use nalgebra::{DMatrix, SymmetricEigen};
use ndarray::{concatenate, Array1, Array2, Axis};

use crate::model::{DannModel, SOURCE_CLASS, TARGET_CLASS};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    /// `n × 2` coordinates.
    pub points: Array2<f64>,
    pub domains: Vec<usize>,
}

impl Projection {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,y,domain\n");
        for (p, d) in self.points.rows().into_iter().zip(&self.domains) {
            let name = if *d == SOURCE_CLASS { "source" } else { "target" };
            let _ = writeln!(out, "{},{},{name}", p[0], p[1]);
        }
        out
    }
}

/// Projects rows onto the top two principal components of `data`.
///
/// Components are ordered by decreasing variance and signed so that their
/// largest-magnitude loading is positive.
pub fn pca_2d(data: &Array2<f64>) -> Result<Array2<f64>> {
    let (n, d) = data.dim();
    if n < 2 {
        return Err(Error::InvalidInput("PCA needs at least two rows".into()));
    }
    let mean = data.mean_axis(Axis(0)).expect("non-empty");
    let centered = data - &mean;
    let cov = centered.t().dot(&centered) / (n as f64 - 1.0);
    let eigen = SymmetricEigen::new(DMatrix::from_fn(d, d, |i, j| cov[[i, j]]));
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eigen.eigenvalues[b].total_cmp(&eigen.eigenvalues[a]).then(a.cmp(&b)));
    let mut basis = Array2::<f64>::zeros((d, 2));
    for (k, &idx) in order.iter().take(2).enumerate() {
        let v = eigen.eigenvectors.column(idx);
        let pivot = (0..d).fold(0, |best, i| if v[i].abs() > v[best].abs() { i } else { best });
        let sign = if v[pivot] < 0.0 { -1.0 } else { 1.0 };
        for i in 0..d {
            basis[[i, k]] = sign * v[i];
        }
    }
    if d < 2 {
        // a single feature: second coordinate is constant zero
        basis.column_mut(1).fill(0.0);
    }
    Ok(centered.dot(&basis))
}

/// Projections of the shared activations at every shared layer (index 0 is
/// the first shared layer). Source rows come first.
pub fn dump_representations(
    model: &DannModel,
    source: &Array2<f64>,
    target: &Array2<f64>,
) -> Result<Vec<Projection>> {
    let pooled = concatenate(Axis(0), &[source.view(), target.view()])
        .map_err(|e| Error::InvalidShape(e.to_string()))?;
    let mut domains = vec![SOURCE_CLASS; source.nrows()];
    domains.extend(std::iter::repeat_n(TARGET_CLASS, target.nrows()));
    model
        .shared_activations(&pooled)?
        .iter()
        .map(|a| {
            Ok(Projection {
                points: pca_2d(a)?,
                domains: domains.clone(),
            })
        })
        .collect()
}

/// Projection of a single shared layer (1-based `layer`).
pub fn dump_layer(model: &DannModel, source: &Array2<f64>, target: &Array2<f64>, layer: usize) -> Result<Projection> {
    let layers = model.spec().shared_layers;
    if layer == 0 || layer > layers {
        return Err(Error::InvalidArgument(format!("layer {layer} outside 1..={layers}")));
    }
    Ok(dump_representations(model, source, target)?.swap_remove(layer - 1))
}

/// Resubstitution accuracy of a two-centroid classifier on the projected
/// points. Ties go to the source class.
pub fn nearest_centroid_accuracy(projection: &Projection) -> Result<f64> {
    let mut centroids = [Array1::<f64>::zeros(2), Array1::<f64>::zeros(2)];
    let mut counts = [0usize; 2];
    for (p, &d) in projection.points.rows().into_iter().zip(&projection.domains) {
        centroids[d] += &p;
        counts[d] += 1;
    }
    if counts.contains(&0) {
        return Err(Error::InvalidInput("both domains need points".into()));
    }
    for (c, n) in centroids.iter_mut().zip(counts) {
        *c /= n as f64;
    }
    let correct = projection
        .points
        .rows()
        .into_iter()
        .zip(&projection.domains)
        .filter(|(p, &d)| {
            let dist = |c: &Array1<f64>| (p - c).mapv(|v| v * v).sum();
            let predicted = if dist(&centroids[TARGET_CLASS]) < dist(&centroids[SOURCE_CLASS]) {
                TARGET_CLASS
            } else {
                SOURCE_CLASS
            };
            predicted == d
        })
        .count();
    Ok(correct as f64 / projection.domains.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::NetworkSpec;

    #[test]
    fn pca_recovers_dominant_axis() {
        let data = Array2::from_shape_fn((50, 3), |(i, j)| match j {
            0 => i as f64,
            1 => (i % 3) as f64 * 0.01,
            _ => 0.5,
        });
        let p = pca_2d(&data).unwrap();
        let var0 = p.column(0).var(1.0);
        let var1 = p.column(1).var(1.0);
        assert!(var0 > 100.0 * var1);
    }

    #[test]
    fn identical_domains_identical_clouds() {
        let model = DannModel::build(NetworkSpec::deep(4, 2).with_width(6), 3).unwrap();
        let x = Array2::from_shape_fn((10, 4), |(i, j)| ((i * 7 + j) as f64).cos());
        let views = dump_representations(&model, &x, &x).unwrap();
        assert_eq!(views.len(), 2);
        for v in &views {
            assert_eq!(v.points.nrows(), 20);
            assert_eq!(v.points.slice(ndarray::s![..10, ..]), v.points.slice(ndarray::s![10.., ..]));
        }
        assert!(dump_layer(&model, &x, &x, 3).is_err());
        assert!(dump_layer(&model, &x, &x, 0).is_err());
    }

    #[test]
    fn centroid_accuracy_separated_and_mixed() {
        let points = ndarray::array![[0.0, 0.0], [0.1, 0.0], [5.0, 5.0], [5.1, 5.0]];
        let sep = Projection {
            points: points.clone(),
            domains: vec![0, 0, 1, 1],
        };
        assert_eq!(nearest_centroid_accuracy(&sep).unwrap(), 1.0);
        let mixed = Projection {
            points,
            domains: vec![0, 1, 0, 1],
        };
        assert_eq!(nearest_centroid_accuracy(&mixed).unwrap(), 0.5);
    }
}
