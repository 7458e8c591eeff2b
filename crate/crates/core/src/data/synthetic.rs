//! Synthetic covariate-shift task.
//!
//! A latent `z ~ U[−1, 1]^k` determines the score through a fixed nonlinear
//! function shared by both domains. Source features are `A·z + ε`; target
//! features are `R·A·z + t + ε`, where `R` rotates every consecutive pair of
//! feature coordinates by the same angle.

use ndarray::{Array1, Array2, ArrayView1};
use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};

use super::{Attribute, DomainTag, FeatureMatrix, LabeledDataset};
use crate::{seeded_rng, Error, Result, Rng};

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticShiftSpec {
    pub n_source: usize,
    pub n_target: usize,
    pub latent_dim: usize,
    pub feature_dim: usize,
    /// Degrees.
    pub rotation_angle: f64,
    pub translation: Vec<f64>,
    pub noise_std: f64,
    pub seed: u64,
    pub attribute: Attribute,
}

impl Default for SyntheticShiftSpec {
    fn default() -> Self {
        SyntheticShiftSpec {
            n_source: 4000,
            n_target: 4000,
            latent_dim: 8,
            feature_dim: 64,
            rotation_angle: 30.0,
            translation: vec![0.25; 64],
            noise_std: 0.05,
            seed: 17,
            attribute: Attribute::Arousal,
        }
    }
}

impl SyntheticShiftSpec {
    /// No rotation and no translation: both domains share one distribution.
    pub fn no_shift(mut self) -> Self {
        self.rotation_angle = 0.0;
        self.translation = vec![0.0; self.feature_dim];
        self
    }

    /// Translation along the all-ones direction with the given Euclidean norm.
    pub fn with_translation_norm(mut self, norm: f64) -> Self {
        let c = norm / (self.feature_dim as f64).sqrt();
        self.translation = vec![c; self.feature_dim];
        self
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::InvalidSpec(m.to_string()));
        if self.latent_dim == 0 {
            return fail("latent_dim must be positive");
        }
        if self.feature_dim < self.latent_dim {
            return fail("feature_dim must be at least latent_dim");
        }
        if self.translation.len() != self.feature_dim {
            return fail("translation length must equal feature_dim");
        }
        if self.n_source == 0 || self.n_target == 0 {
            return fail("both domains need samples");
        }
        if !(self.noise_std >= 0.0) || !self.rotation_angle.is_finite() {
            return fail("noise_std must be non-negative and the angle finite");
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct ShiftTask {
    pub source: LabeledDataset,
    /// Held for evaluation and the within-target baseline only.
    pub target_labeled: LabeledDataset,
    /// Unlabeled target rows for adversarial training.
    pub target_pool: FeatureMatrix,
    pub source_latents: Array2<f64>,
    pub target_latents: Array2<f64>,
    pub label_weights: Array1<f64>,
}

/// `clamp(3·tanh(w·z + sin(π z₁)), −3, 3)`.
pub fn label_function(weights: &Array1<f64>, z: ArrayView1<f64>) -> f64 {
    let u = weights.dot(&z) + (std::f64::consts::PI * z[0]).sin();
    (3.0 * u.tanh()).clamp(-3.0, 3.0)
}

struct Draw {
    features: Array2<f64>,
    latents: Array2<f64>,
}

fn draw(n: usize, spec: &SyntheticShiftSpec, mixing: &Array2<f64>, offset: Option<&Array1<f64>>, rng: &mut Rng) -> Draw {
    let latents = Array2::from_shape_simple_fn((n, spec.latent_dim), || rng.random_range(-1.0..=1.0));
    let mut features = latents.dot(&mixing.t());
    for v in features.iter_mut() {
        let e: f64 = StandardNormal.sample(rng);
        *v += spec.noise_std * e;
    }
    if let Some(t) = offset {
        features += t;
    }
    Draw { features, latents }
}

fn pair_rotation(dim: usize, degrees: f64) -> Array2<f64> {
    let (s, c) = degrees.to_radians().sin_cos();
    let mut r = Array2::eye(dim);
    for k in 0..dim / 2 {
        let (i, j) = (2 * k, 2 * k + 1);
        r[[i, i]] = c;
        r[[i, j]] = -s;
        r[[j, i]] = s;
        r[[j, j]] = c;
    }
    r
}

pub fn generate_shift_task(spec: &SyntheticShiftSpec) -> Result<ShiftTask> {
    spec.validate()?;
    let mut structure = seeded_rng(spec.seed, 1);
    let scale = 1.0 / (spec.latent_dim as f64).sqrt();
    let mixing = Array2::from_shape_simple_fn((spec.feature_dim, spec.latent_dim), || {
        let g: f64 = StandardNormal.sample(&mut structure);
        g * scale
    });
    let mut w: Array1<f64> = Array1::from_shape_simple_fn(spec.latent_dim, || StandardNormal.sample(&mut structure));
    let norm = w.dot(&w).sqrt();
    w *= 3f64.sqrt() / norm;

    let target_mixing = pair_rotation(spec.feature_dim, spec.rotation_angle).dot(&mixing);
    let translation = Array1::from(spec.translation.clone());

    let src = draw(spec.n_source, spec, &mixing, None, &mut seeded_rng(spec.seed, 2));
    let tgt = draw(spec.n_target, spec, &target_mixing, Some(&translation), &mut seeded_rng(spec.seed, 3));
    let pool = draw(spec.n_target, spec, &target_mixing, Some(&translation), &mut seeded_rng(spec.seed, 4));

    let labels = |d: &Draw| Array1::from_iter(d.latents.rows().into_iter().map(|z| label_function(&w, z)));
    let ids = |prefix: &str, n: usize| (0..n).map(|i| format!("{prefix}-{i}")).collect::<Vec<_>>();

    let source = LabeledDataset::new(
        FeatureMatrix::new(ids("src", spec.n_source), src.features.clone(), DomainTag::Source)?,
        spec.attribute,
        labels(&src),
    )?;
    let target_labeled = LabeledDataset::new(
        FeatureMatrix::new(ids("tgt", spec.n_target), tgt.features.clone(), DomainTag::Target)?,
        spec.attribute,
        labels(&tgt),
    )?;
    let target_pool = FeatureMatrix::new(ids("pool", spec.n_target), pool.features, DomainTag::Target)?;
    Ok(ShiftTask {
        source,
        target_labeled,
        target_pool,
        source_latents: src.latents,
        target_latents: tgt.latents,
        label_weights: w,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> SyntheticShiftSpec {
        SyntheticShiftSpec {
            n_source: 50,
            n_target: 40,
            ..SyntheticShiftSpec::default()
        }
    }

    #[test]
    fn deterministic() {
        let a = generate_shift_task(&small()).unwrap();
        let b = generate_shift_task(&small()).unwrap();
        assert_eq!(a.source, b.source);
        assert_eq!(a.target_labeled, b.target_labeled);
        assert_eq!(a.target_pool, b.target_pool);
        assert_eq!(a.target_pool.len(), 40);
    }

    #[test]
    fn rotation_is_orthogonal() {
        let r = pair_rotation(5, 30.0);
        let prod = r.t().dot(&r);
        for ((i, j), v) in prod.indexed_iter() {
            let e = if i == j { 1.0 } else { 0.0 };
            assert!((v - e).abs() < 1e-15);
        }
    }

    #[test]
    fn scores_in_range() {
        let t = generate_shift_task(&small()).unwrap();
        assert!(t.source.scores.iter().chain(t.target_labeled.scores.iter()).all(|s| s.abs() <= 3.0));
    }

    #[test]
    fn invalid_specs() {
        let mut s = small();
        s.feature_dim = 4;
        assert!(matches!(generate_shift_task(&s), Err(Error::InvalidSpec(_))));
        let mut s = small();
        s.translation = vec![0.0; 3];
        assert!(generate_shift_task(&s).is_err());
    }
}
