#![allow(dead_code)]

use dannlab::model::DannModel;
use dannlab::nn::{ForwardCtx, Mode, Stack};
use dannlab::{seeded_rng, Rng};
use ndarray::{Array1, Array2};
use rand::Rng as _;

pub const FD_EPS: f64 = 1e-3;
pub const FD_REL_TOL: f64 = 1e-4;
const FD_FLOOR: f64 = 1e-6;

pub fn random_matrix(rows: usize, cols: usize, rng: &mut Rng) -> Array2<f64> {
    Array2::from_shape_simple_fn((rows, cols), || rng.random_range(-1.5..1.5))
}

pub fn random_vector(n: usize, rng: &mut Rng) -> Array1<f64> {
    Array1::from_shape_simple_fn(n, || rng.random_range(-1.5..1.5))
}

pub fn rel_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(FD_FLOOR)
}

/// Relative error `‖a − n‖ / max(‖a‖, ‖n‖)` over one tensor's compared
/// components.
pub fn tensor_rel_error(analytic: &[f64], numeric: &[f64]) -> f64 {
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let diff: Vec<f64> = analytic.iter().zip(numeric).map(|(a, n)| a - n).collect();
    norm(&diff) / norm(analytic).max(norm(numeric)).max(FD_FLOOR)
}

#[derive(Debug, Default, Clone, Copy)]
pub struct FdOutcome {
    /// Worst per-tensor relative error.
    pub max_rel: f64,
    pub compared: usize,
    /// Components whose perturbation flipped a ReLU (non-differentiable point).
    pub skipped: usize,
}

impl FdOutcome {
    pub fn merge(&mut self, other: FdOutcome) {
        self.max_rel = self.max_rel.max(other.max_rel);
        self.compared += other.compared;
        self.skipped += other.skipped;
    }
}

#[derive(Default)]
struct TensorCheck {
    analytic: Vec<f64>,
    numeric: Vec<f64>,
    skipped: usize,
}

impl TensorCheck {
    fn record(&mut self, analytic: f64, numeric: f64, kink: bool) {
        if kink {
            self.skipped += 1;
        } else {
            self.analytic.push(analytic);
            self.numeric.push(numeric);
        }
    }

    fn finish(self, outcome: &mut FdOutcome) {
        outcome.skipped += self.skipped;
        if !self.analytic.is_empty() {
            outcome.compared += self.analytic.len();
            outcome.max_rel = outcome.max_rel.max(tensor_rel_error(&self.analytic, &self.numeric));
        }
    }
}

fn signs(inputs: &[&Array2<f64>]) -> Vec<bool> {
    inputs.iter().flat_map(|a| a.iter().map(|v| *v > 0.0)).collect()
}

/// `Σ upstream ⊙ stack(x)` in training mode, with dropout masks from `seed`
/// and batch statistics over the first `stat_rows` rows.
fn stack_loss(stack: &mut Stack, x: &Array2<f64>, upstream: &Array2<f64>, stat_rows: usize, seed: u64) -> f64 {
    let mut rng = seeded_rng(seed, 0);
    let mut ctx = ForwardCtx {
        segments: vec![(x.nrows(), &mut rng)],
        stat_rows,
    };
    let out = stack.forward(x, Mode::Train, &mut ctx).unwrap();
    (&out * upstream).sum()
}

/// Central-difference check of every parameter and the input gradient.
pub fn check_stack(stack: &Stack, x: &Array2<f64>, upstream: &Array2<f64>, stat_rows: usize, seed: u64) -> FdOutcome {
    let mut base = stack.clone();
    stack_loss(&mut base, x, upstream, stat_rows, seed);
    let base_signs = signs(&base.relu_inputs());
    base.zero_grad();
    let dx = base.backward(upstream).unwrap();
    let grads: Vec<Array2<f64>> = base.params().iter().map(|p| p.grad.clone()).collect();

    let mut outcome = FdOutcome::default();
    let eval = |s: &mut Stack, xx: &Array2<f64>| {
        let l = stack_loss(s, xx, upstream, stat_rows, seed);
        (l, signs(&s.relu_inputs()) != base_signs)
    };
    for (k, grad) in grads.iter().enumerate() {
        let mut check = TensorCheck::default();
        for (idx, &g) in grad.indexed_iter() {
            let mut plus = stack.clone();
            plus.params_mut()[k].value[idx] += FD_EPS;
            let mut minus = stack.clone();
            minus.params_mut()[k].value[idx] -= FD_EPS;
            let (lp, kp) = eval(&mut plus, x);
            let (lm, km) = eval(&mut minus, x);
            check.record(g, (lp - lm) / (2.0 * FD_EPS), kp || km);
        }
        check.finish(&mut outcome);
    }
    let mut check = TensorCheck::default();
    for (idx, &g) in dx.indexed_iter() {
        let mut xp = x.clone();
        xp[idx] += FD_EPS;
        let mut xm = x.clone();
        xm[idx] -= FD_EPS;
        let (lp, kp) = eval(&mut stack.clone(), &xp);
        let (lm, km) = eval(&mut stack.clone(), &xm);
        check.record(g, (lp - lm) / (2.0 * FD_EPS), kp || km);
    }
    check.finish(&mut outcome);
    outcome
}

pub struct DannBatch {
    pub source: Array2<f64>,
    pub labels: Array1<f64>,
    pub target: Array2<f64>,
    pub seed: u64,
}

fn all_relu_signs(model: &DannModel) -> Vec<bool> {
    let mut inputs = model.shared.relu_inputs();
    inputs.extend(model.task_head.relu_inputs());
    if let Some(d) = &model.domain_head {
        inputs.extend(d.relu_inputs());
    }
    signs(&inputs)
}

/// Runs one training step's forward/backward on a copy of `model`.
pub fn dann_step(model: &DannModel, batch: &DannBatch) -> (DannModel, f64, f64) {
    let mut m = model.clone();
    let mut task_rng = seeded_rng(batch.seed, 1);
    let mut domain_rng = seeded_rng(batch.seed, 2);
    let losses = m
        .forward_backward(
            &batch.source,
            &batch.labels,
            Some(&batch.target),
            Default::default(),
            &mut task_rng,
            &mut domain_rng,
        )
        .unwrap();
    (m, losses.task, losses.domain.unwrap())
}

/// Checks shared and task parameters against `task − λ·domain` and the
/// domain head against `domain`.
pub fn check_dann(model: &DannModel, batch: &DannBatch) -> FdOutcome {
    let lambda = model.gate.lambda();
    let (mut base, _, _) = dann_step(model, batch);
    let base_signs = all_relu_signs(&base);
    let grads: Vec<Vec<Array2<f64>>> = base
        .param_groups_mut()
        .iter()
        .map(|g| g.iter().map(|p| p.grad.clone()).collect())
        .collect();
    let mut outcome = FdOutcome::default();
    for (gi, group) in grads.iter().enumerate() {
        for (k, grad) in group.iter().enumerate() {
            let mut check = TensorCheck::default();
            for (idx, &g) in grad.indexed_iter() {
                let eval = |delta: f64| {
                    let mut m = model.clone();
                    m.param_groups_mut()[gi][k].value[idx] += delta;
                    let (after, task, domain) = dann_step(&m, batch);
                    let objective = if gi == 0 { task - lambda * domain } else { domain };
                    (objective, all_relu_signs(&after) != base_signs)
                };
                let (lp, kp) = eval(FD_EPS);
                let (lm, km) = eval(-FD_EPS);
                check.record(g, (lp - lm) / (2.0 * FD_EPS), kp || km);
            }
            check.finish(&mut outcome);
        }
    }
    outcome
}

// Direct-formula metric oracles, written independently of the library.

pub fn oracle_rmse(p: &[f64], t: &[f64]) -> f64 {
    let n = p.len() as f64;
    (p.iter().zip(t).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / n).sqrt()
}

fn moments(p: &[f64], t: &[f64]) -> (f64, f64, f64, f64, f64) {
    let n = p.len() as f64;
    let mp = p.iter().sum::<f64>() / n;
    let mt = t.iter().sum::<f64>() / n;
    let vp = p.iter().map(|a| (a - mp) * (a - mp)).sum::<f64>() / n;
    let vt = t.iter().map(|b| (b - mt) * (b - mt)).sum::<f64>() / n;
    let cov = p.iter().zip(t).map(|(a, b)| (a - mp) * (b - mt)).sum::<f64>() / n;
    (mp, mt, vp, vt, cov)
}

pub fn oracle_pearson(p: &[f64], t: &[f64]) -> f64 {
    let (_, _, vp, vt, cov) = moments(p, t);
    cov / (vp * vt).sqrt()
}

/// Lin's concordance: `2·cov / (σp² + σt² + (μp − μt)²)`.
pub fn oracle_ccc(p: &[f64], t: &[f64]) -> f64 {
    let (mp, mt, vp, vt, cov) = moments(p, t);
    2.0 * cov / (vp + vt + (mp - mt) * (mp - mt))
}

/// Linear-interpolation quantile by brute force over the sorted copy.
pub fn oracle_quantile(values: &[f64], q: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let pos = q * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    v[lo] + (pos - lo as f64) * (v[hi] - v[lo])
}

/// Mean and population std over values inside the 5%–95% quantile band.
pub fn oracle_trimmed(values: &[f64]) -> (f64, f64) {
    let lo = oracle_quantile(values, 0.05);
    let hi = oracle_quantile(values, 0.95);
    let kept: Vec<f64> = values.iter().copied().filter(|v| *v >= lo && *v <= hi).collect();
    let n = kept.len() as f64;
    let m = kept.iter().sum::<f64>() / n;
    let var = kept.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n;
    (m, var.sqrt().max(1e-8))
}
