//! Central-difference verification of the analytic gradient.

use std::collections::BTreeSet;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use yod_core::exec::Execution;

use crate::error::Result;
use crate::model::{Example, Mode, Seq2Seq};

/// Below this magnitude both gradients count as zero and the absolute
/// difference is reported instead of a ratio.
pub const ABS_FALLBACK: f64 = 1e-8;

/// Deliberate corruption of the analytic gradient, for mutation testing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GradFault {
    #[default]
    None,
    FlipRegressorGradient,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckConfig {
    pub epsilon: f64,
    /// Entries sampled from each of the four parameter groups.
    pub per_group: usize,
    pub seed: u64,
    pub epoch: usize,
}

impl Default for GradCheckConfig {
    fn default() -> Self {
        GradCheckConfig { epsilon: 1e-5, per_group: 16, seed: 0, epoch: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Probe {
    pub group: &'static str,
    pub param: String,
    pub offset: usize,
    pub analytic: f64,
    pub numeric: f64,
    pub error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    pub probes: Vec<Probe>,
}

impl GradCheckReport {
    pub fn groups(&self) -> BTreeSet<&'static str> {
        self.probes.iter().map(|p| p.group).collect()
    }
}

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    let scale = analytic.abs().max(numeric.abs());
    let diff = (analytic - numeric).abs();
    if scale < ABS_FALLBACK {
        diff
    } else {
        diff / scale
    }
}

fn pick<R: Rng>(rng: &mut R, len: usize, n: usize) -> Vec<usize> {
    sample(rng, len, n.min(len)).into_vec()
}

/// Compares the analytic gradient of the eval-mode total loss with central
/// differences on a sample of entries from the token embedding (rows the
/// batch actually uses), one attention block and both heads. The last bias
/// of each head is always included.
pub fn gradient_check(
    model: &Seq2Seq,
    batch: &[Example],
    cfg: &GradCheckConfig,
    fault: GradFault,
    exec: Execution,
) -> Result<GradCheckReport> {
    let (_, mut grads) = model.loss_and_grads(batch, cfg.epoch, Mode::Eval, exec)?;
    let groups = model.param_groups();
    if fault == GradFault::FlipRegressorGradient {
        for &p in &groups.regressor {
            grads[p].scale(-1.0);
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut targets: Vec<(&'static str, usize, usize)> = Vec::new();

    let emb = model.params().get(groups.token_embedding);
    let mut rows: BTreeSet<usize> = BTreeSet::new();
    for ex in batch {
        rows.extend(ex.input_ids.iter().chain(&ex.target_ids).map(|&i| i as usize));
        rows.insert(crate::vocab::BOS as usize);
    }
    let rows: Vec<usize> = rows.into_iter().collect();
    for _ in 0..cfg.per_group {
        let r = rows[rng.random_range(0..rows.len())];
        targets.push(("embedding", groups.token_embedding, r * emb.cols + rng.random_range(0..emb.cols)));
    }

    for (name, ids) in [("attention", &groups.attention), ("regressor", &groups.regressor), ("classifier", &groups.classifier)] {
        let sizes: Vec<usize> = ids.iter().map(|&p| model.params().get(p).len()).collect();
        let total: usize = sizes.iter().sum();
        for flat in pick(&mut rng, total, cfg.per_group) {
            let mut rest = flat;
            for (&p, &n) in ids.iter().zip(&sizes) {
                if rest < n {
                    targets.push((name, p, rest));
                    break;
                }
                rest -= n;
            }
        }
        if name != "attention" {
            let last_bias = *ids.last().expect("head has parameters");
            targets.push((name, last_bias, 0));
        }
    }

    let eps = cfg.epsilon;
    let probes = exec.map(&targets, |&(group, p, offset)| -> Result<Probe> {
        let mut m = model.clone();
        let x0 = m.params().get(p).data[offset];
        m.params_mut().get_mut(p).data[offset] = x0 + eps;
        let plus = m.loss(batch, cfg.epoch, Mode::Eval, Execution::Sequential)?.total;
        m.params_mut().get_mut(p).data[offset] = x0 - eps;
        let minus = m.loss(batch, cfg.epoch, Mode::Eval, Execution::Sequential)?.total;
        let numeric = (plus - minus) / (2.0 * eps);
        let analytic = grads[p].data[offset];
        Ok(Probe {
            group,
            param: model.params().name(p).to_string(),
            offset,
            analytic,
            numeric,
            error: relative_error(analytic, numeric),
        })
    });
    let probes = probes.into_iter().collect::<Result<Vec<_>>>()?;
    let max_rel_error = probes.iter().map(|p| p.error).fold(0.0, f64::max);
    Ok(GradCheckReport { max_rel_error, probes })
}
