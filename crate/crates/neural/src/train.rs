//! Training loop: clipped AdamW steps on the composite loss with per-step
//! JSON logging.

use std::io::Write;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use yod_core::corpus::{sampling_weights, WeightedSampler, YodHistogram};
use yod_core::exec::Execution;

use crate::error::{NeuralError, Result};
use crate::loss::LossBreakdown;
use crate::model::{Example, Mode, Seq2Seq};
use crate::optim::{clip_grad_norm, lr_schedule, AdamW, TrainConfig};

/// One line of the training log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepLog {
    pub step: usize,
    pub epoch: usize,
    pub ce: f64,
    pub mse: f64,
    pub class: f64,
    pub w_yod: f64,
    pub total: f64,
    pub lr: f64,
    pub grad_norm: f64,
}

impl StepLog {
    fn new(step: usize, epoch: usize, b: &LossBreakdown, lr: f64, grad_norm: f64) -> Self {
        StepLog {
            step,
            epoch,
            ce: b.ce_loss,
            mse: b.mse_loss,
            class: b.class_loss,
            w_yod: b.w_yod,
            total: b.total,
            lr,
            grad_norm,
        }
    }
}

pub fn write_log<W: Write>(mut out: W, logs: &[StepLog]) -> Result<()> {
    for l in logs {
        serde_json::to_writer(&mut out, l).map_err(|e| NeuralError::Checkpoint(e.to_string()))?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

/// How each epoch's batches are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Sampling {
    /// A seeded shuffle of the whole dataset, cut into batches.
    #[default]
    Shuffled,
    /// Seeded with-replacement draws weighted by inverse level frequency.
    Weighted,
}

#[derive(Debug, Clone)]
pub struct Trainer {
    model: Seq2Seq,
    optimizer: AdamW,
    config: TrainConfig,
    exec: Execution,
    step: usize,
}

impl Trainer {
    pub fn new(model: Seq2Seq, config: TrainConfig) -> Result<Self> {
        config.validate()?;
        let optimizer = AdamW::new(model.params().tensors(), config.weight_decay);
        Ok(Trainer { model, optimizer, config, exec: Execution::default(), step: 0 })
    }

    pub fn with_execution(mut self, exec: Execution) -> Self {
        self.exec = exec;
        self
    }

    pub fn model(&self) -> &Seq2Seq {
        &self.model
    }

    pub fn into_model(self) -> Seq2Seq {
        self.model
    }

    pub fn config(&self) -> &TrainConfig {
        &self.config
    }

    pub fn steps_taken(&self) -> usize {
        self.step
    }

    fn batches_per_epoch(&self, n: usize) -> usize {
        n.div_ceil(self.config.batch_size)
    }

    /// Optimizer steps a full `fit` over `n` examples will take.
    pub fn total_steps(&self, n: usize) -> usize {
        let planned = self.config.epochs * self.batches_per_epoch(n);
        self.config.max_steps.map_or(planned, |m| m.min(planned))
    }

    /// One update on `batch`. The returned log carries the loss measured
    /// before the update.
    pub fn train_step(&mut self, batch: &[Example], epoch: usize, total_steps: usize) -> Result<StepLog> {
        let seed = self.config.seed.wrapping_add((self.step as u64).wrapping_mul(0x2545_F491_4F6C_DD1D));
        let (breakdown, mut grads) = self.model.loss_and_grads(batch, epoch, Mode::Train { seed }, self.exec)?;
        if !breakdown.is_finite() {
            return Err(NeuralError::NonFiniteLoss { step: self.step, breakdown });
        }
        let grad_norm = clip_grad_norm(&mut grads, self.config.max_grad_norm);
        let lr = lr_schedule(self.step, total_steps, &self.config);
        self.optimizer.step(self.model.params_mut().tensors_mut(), &grads, lr);
        let log = StepLog::new(self.step, epoch, &breakdown, lr, grad_norm);
        self.step += 1;
        Ok(log)
    }

    /// Runs the configured number of epochs (or `max_steps`), calling
    /// `on_step` after every update.
    pub fn fit(
        &mut self,
        data: &[Example],
        sampling: Sampling,
        mut on_step: impl FnMut(&StepLog),
    ) -> Result<Vec<StepLog>> {
        if data.is_empty() {
            return Err(NeuralError::EmptyBatch);
        }
        let total = self.total_steps(data.len());
        let per_epoch = self.batches_per_epoch(data.len());
        let bs = self.config.batch_size;
        let mut rng = ChaCha8Rng::seed_from_u64(self.config.seed);
        let sampler = match sampling {
            Sampling::Shuffled => None,
            Sampling::Weighted => {
                let mut hist = YodHistogram::default();
                for e in data {
                    hist.counts[e.level.index()] += 1;
                }
                let levels: Vec<_> = data.iter().map(|e| e.level).collect();
                Some(WeightedSampler::new(&levels, &sampling_weights(&hist)?)?)
            }
        };

        let mut logs = Vec::with_capacity(total);
        let mut order: Vec<usize> = (0..data.len()).collect();
        'epochs: for epoch in 0..self.config.epochs {
            match &sampler {
                None => order.shuffle(&mut rng),
                Some(s) => {
                    order.clear();
                    order.extend((0..data.len()).map(|_| s.sample(&mut rng)));
                }
            }
            for b in 0..per_epoch {
                if logs.len() >= total {
                    break 'epochs;
                }
                let batch: Vec<Example> =
                    order[b * bs..((b + 1) * bs).min(order.len())].iter().map(|&i| data[i].clone()).collect();
                let log = self.train_step(&batch, epoch, total)?;
                on_step(&log);
                logs.push(log);
            }
        }
        Ok(logs)
    }

    /// Eval-mode loss on `data` as one batch.
    pub fn evaluate(&self, data: &[Example], epoch: usize) -> Result<LossBreakdown> {
        self.model.loss(data, epoch, Mode::Eval, self.exec)
    }
}
