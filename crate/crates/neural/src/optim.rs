//! AdamW with decoupled weight decay, global-norm clipping and a
//! warmup-then-cosine learning-rate schedule.

use serde::{Deserialize, Serialize};

use crate::error::{NeuralError, Result};
use crate::tensor::Matrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub warmup_steps: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub weight_decay: f64,
    pub max_grad_norm: f64,
    pub seed: u64,
    /// Stop once this many optimizer steps have run, whatever the epoch count.
    pub max_steps: Option<usize>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 1e-5,
            warmup_steps: 500,
            epochs: 11,
            batch_size: 64,
            weight_decay: 0.01,
            max_grad_norm: 1.0,
            seed: 42,
            max_steps: None,
        }
    }
}

impl TrainConfig {
    /// Settings for the 16-example overfitting runs: a far larger step size,
    /// a short warmup and 200 steps, since the toy model starts from scratch.
    pub fn desk(seed: u64) -> Self {
        TrainConfig {
            learning_rate: 2e-3,
            warmup_steps: 20,
            epochs: 500,
            batch_size: 16,
            weight_decay: 0.0,
            seed,
            max_steps: Some(200),
            ..TrainConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(NeuralError::InvalidTrainConfig(m.to_string()));
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return bad("learning_rate must be positive");
        }
        if self.batch_size == 0 || self.epochs == 0 {
            return bad("batch_size and epochs must be positive");
        }
        if !(self.weight_decay >= 0.0 && self.max_grad_norm > 0.0) {
            return bad("weight_decay must be non-negative and max_grad_norm positive");
        }
        Ok(())
    }
}

/// Linear ramp from 0 to the peak rate over the warmup steps, then cosine
/// decay reaching exactly 0 at `total_steps`.
pub fn lr_schedule(step: usize, total_steps: usize, cfg: &TrainConfig) -> f64 {
    let peak = cfg.learning_rate;
    let warmup = cfg.warmup_steps.min(total_steps);
    if step < warmup {
        return peak * step as f64 / warmup as f64;
    }
    if step >= total_steps {
        return 0.0;
    }
    let progress = (step - warmup) as f64 / (total_steps - warmup) as f64;
    peak * 0.5 * (1.0 + (std::f64::consts::PI * progress).cos())
}

pub fn global_norm(grads: &[Matrix]) -> f64 {
    grads.iter().map(Matrix::sum_sq).sum::<f64>().sqrt()
}

/// Rescales `grads` in place so their global L2 norm is at most `max_norm`.
/// Returns the norm before clipping.
pub fn clip_grad_norm(grads: &mut [Matrix], max_norm: f64) -> f64 {
    let norm = global_norm(grads);
    if norm > max_norm {
        let s = max_norm / norm;
        for g in grads.iter_mut() {
            g.scale(s);
        }
    }
    norm
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdamW {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
    step: u64,
    m: Vec<Matrix>,
    v: Vec<Matrix>,
}

impl AdamW {
    pub fn new(params: &[Matrix], weight_decay: f64) -> Self {
        let zeros = || params.iter().map(|p| Matrix::zeros(p.rows, p.cols)).collect();
        AdamW { beta1: 0.9, beta2: 0.999, eps: 1e-8, weight_decay, step: 0, m: zeros(), v: zeros() }
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    pub fn step(&mut self, params: &mut [Matrix], grads: &[Matrix], lr: f64) {
        assert_eq!(params.len(), grads.len(), "one gradient per parameter");
        self.step += 1;
        let bc1 = 1.0 - self.beta1.powi(self.step as i32);
        let bc2 = 1.0 - self.beta2.powi(self.step as i32);
        for ((p, g), (m, v)) in params.iter_mut().zip(grads).zip(self.m.iter_mut().zip(self.v.iter_mut())) {
            for i in 0..p.data.len() {
                let gi = g.data[i];
                m.data[i] = self.beta1 * m.data[i] + (1.0 - self.beta1) * gi;
                v.data[i] = self.beta2 * v.data[i] + (1.0 - self.beta2) * gi * gi;
                let mhat = m.data[i] / bc1;
                let vhat = v.data[i] / bc2;
                p.data[i] -= lr * (mhat / (vhat.sqrt() + self.eps) + self.weight_decay * p.data[i]);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schedule_shape() {
        let cfg = TrainConfig { learning_rate: 1.0, warmup_steps: 10, ..TrainConfig::default() };
        assert_eq!(lr_schedule(0, 110, &cfg), 0.0);
        assert!((lr_schedule(5, 110, &cfg) - 0.5).abs() < 1e-12);
        assert_eq!(lr_schedule(10, 110, &cfg), 1.0);
        assert!((lr_schedule(60, 110, &cfg) - 0.5).abs() < 1e-12);
        assert_eq!(lr_schedule(110, 110, &cfg), 0.0);
        for s in 10..110 {
            assert!(lr_schedule(s + 1, 110, &cfg) <= lr_schedule(s, 110, &cfg));
        }
        let flat = TrainConfig { learning_rate: 2.0, warmup_steps: 0, ..TrainConfig::default() };
        assert_eq!(lr_schedule(0, 10, &flat), 2.0);
    }

    #[test]
    fn clipping() {
        let mut g = vec![Matrix::from_vec(1, 2, vec![3.0, 0.0]), Matrix::from_vec(1, 1, vec![4.0])];
        let n = clip_grad_norm(&mut g, 1.0);
        assert_eq!(n, 5.0);
        assert!((global_norm(&g) - 1.0).abs() < 1e-12);
        assert!((g[0].data[0] - 0.6).abs() < 1e-12);
        let mut small = vec![Matrix::from_vec(1, 1, vec![0.5])];
        assert_eq!(clip_grad_norm(&mut small, 1.0), 0.5);
        assert_eq!(small[0].data[0], 0.5);
    }

    #[test]
    fn adam_first_step_moves_by_lr() {
        let mut p = vec![Matrix::from_vec(1, 2, vec![1.0, -1.0])];
        let g = vec![Matrix::from_vec(1, 2, vec![0.3, -7.0])];
        let mut opt = AdamW::new(&p, 0.0);
        opt.step(&mut p, &g, 0.1);
        assert!((p[0].data[0] - 0.9).abs() < 1e-6);
        assert!((p[0].data[1] + 0.9).abs() < 1e-6);
        assert_eq!(opt.steps(), 1);
    }

    #[test]
    fn decoupled_decay_with_zero_gradient() {
        let mut p = vec![Matrix::from_vec(1, 1, vec![2.0])];
        let g = vec![Matrix::zeros(1, 1)];
        let mut opt = AdamW::new(&p, 0.5);
        opt.step(&mut p, &g, 0.1);
        assert!((p[0].data[0] - 1.9).abs() < 1e-12);
    }

    #[test]
    fn minimises_quadratic() {
        let mut p = vec![Matrix::from_vec(1, 1, vec![5.0])];
        let mut opt = AdamW::new(&p, 0.0);
        for _ in 0..2000 {
            let g = vec![Matrix::from_vec(1, 1, vec![2.0 * (p[0].data[0] - 1.0)])];
            opt.step(&mut p, &g, 0.01);
        }
        assert!((p[0].data[0] - 1.0).abs() < 1e-2);
    }

    #[test]
    fn config_checks() {
        assert!(TrainConfig::default().validate().is_ok());
        assert!(TrainConfig::desk(1).validate().is_ok());
        let c = TrainConfig { batch_size: 0, ..TrainConfig::default() };
        assert!(matches!(c.validate(), Err(NeuralError::InvalidTrainConfig(_))));
        let c = TrainConfig { learning_rate: f64::NAN, ..TrainConfig::default() };
        assert!(c.validate().is_err());
    }
}
