//! Encoder-decoder transformer with a pooled regression head and a pooled
//! 16-way classification head.
//!
//! Every example is run unpadded through its own tape, so batches need no
//! attention masks and per-example work can be spread across threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use yod_core::exec::Execution;
use yod_core::YodLevel;

use crate::autograd::{Graph, NodeId};
use crate::error::{NeuralError, Result};
use crate::heads::{Dense, MlpHead};
use crate::loss::{composite_loss, dynamic_weight, LossBreakdown, CLASS_WEIGHT};
use crate::tensor::Matrix;
use crate::vocab::{BOS, EOS};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub vocab_size: usize,
    pub d_model: usize,
    pub encoder_layers: usize,
    pub decoder_layers: usize,
    pub heads: usize,
    pub ffn_dim: usize,
    pub head_dims: [usize; 3],
    pub dropout: f64,
    pub max_len: usize,
    pub seed: u64,
}

impl ModelConfig {
    pub fn new(vocab_size: usize) -> Self {
        ModelConfig {
            vocab_size,
            d_model: 64,
            encoder_layers: 2,
            decoder_layers: 2,
            heads: 2,
            ffn_dim: 128,
            head_dims: [512, 256, 128],
            dropout: 0.1,
            max_len: 64,
            seed: 0,
        }
    }

    /// A narrow, dropout-free model that keeps finite-difference checks cheap.
    pub fn gradcheck(vocab_size: usize) -> Self {
        ModelConfig {
            d_model: 16,
            encoder_layers: 1,
            decoder_layers: 1,
            heads: 2,
            ffn_dim: 32,
            head_dims: [32, 16, 8],
            dropout: 0.0,
            max_len: 32,
            ..ModelConfig::new(vocab_size)
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(NeuralError::InvalidConfig(m));
        if self.vocab_size <= (EOS as usize) || self.d_model == 0 || self.max_len == 0 || self.ffn_dim == 0 {
            return bad("vocab_size, d_model, ffn_dim and max_len must be positive".into());
        }
        if self.heads == 0 || !self.d_model.is_multiple_of(self.heads) {
            return bad(format!("d_model {} is not divisible by {} heads", self.d_model, self.heads));
        }
        let [a, b, c] = self.head_dims;
        if !(a > b && b > c && c > 0) {
            return bad(format!("head dims {:?} must be strictly decreasing and positive", self.head_dims));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return bad(format!("dropout {} outside [0, 1)", self.dropout));
        }
        Ok(())
    }
}

/// Named parameter tensors in a fixed creation order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamStore {
    names: Vec<String>,
    tensors: Vec<Matrix>,
}

impl ParamStore {
    fn push(&mut self, name: String, m: Matrix) -> usize {
        self.names.push(name);
        self.tensors.push(m);
        self.tensors.len() - 1
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    pub fn name(&self, i: usize) -> &str {
        &self.names[i]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn get(&self, i: usize) -> &Matrix {
        &self.tensors[i]
    }

    pub fn get_mut(&mut self, i: usize) -> &mut Matrix {
        &mut self.tensors[i]
    }

    pub fn tensors(&self) -> &[Matrix] {
        &self.tensors
    }

    pub fn tensors_mut(&mut self) -> &mut [Matrix] {
        &mut self.tensors
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn scalar_count(&self) -> usize {
        self.tensors.iter().map(Matrix::len).sum()
    }
}

#[derive(Debug, Clone, Copy)]
struct Linear {
    w: usize,
    b: usize,
}

#[derive(Debug, Clone, Copy)]
struct Norm {
    g: usize,
    b: usize,
}

#[derive(Debug, Clone, Copy)]
struct Attention {
    q: Linear,
    k: Linear,
    v: Linear,
    o: Linear,
}

#[derive(Debug, Clone)]
struct EncoderLayer {
    ln_attn: Norm,
    attn: Attention,
    ln_ffn: Norm,
    ff_in: Linear,
    ff_out: Linear,
}

#[derive(Debug, Clone)]
struct DecoderLayer {
    ln_self: Norm,
    self_attn: Attention,
    ln_cross: Norm,
    cross_attn: Attention,
    ln_ffn: Norm,
    ff_in: Linear,
    ff_out: Linear,
}

#[derive(Debug, Clone)]
struct Layout {
    tok_emb: usize,
    pos_emb: usize,
    encoder: Vec<EncoderLayer>,
    enc_norm: Norm,
    decoder: Vec<DecoderLayer>,
    dec_norm: Norm,
    lm_head: Linear,
    regressor: Vec<Linear>,
    classifier: Vec<Linear>,
}

struct Builder<'a> {
    store: ParamStore,
    rng: &'a mut ChaCha8Rng,
}

impl Builder<'_> {
    fn linear(&mut self, name: &str, fan_in: usize, fan_out: usize) -> Linear {
        let w = crate::heads::xavier(fan_in, fan_out, self.rng);
        Linear {
            w: self.store.push(format!("{name}.weight"), w),
            b: self.store.push(format!("{name}.bias"), Matrix::zeros(1, fan_out)),
        }
    }

    fn norm(&mut self, name: &str, d: usize) -> Norm {
        Norm {
            g: self.store.push(format!("{name}.gamma"), Matrix::from_vec(1, d, vec![1.0; d])),
            b: self.store.push(format!("{name}.beta"), Matrix::zeros(1, d)),
        }
    }

    fn embedding(&mut self, name: &str, rows: usize, d: usize) -> usize {
        let scale = (3.0 / d as f64).sqrt();
        let data = (0..rows * d).map(|_| self.rng.random_range(-scale..scale)).collect();
        self.store.push(name.to_string(), Matrix::from_vec(rows, d, data))
    }

    fn attention(&mut self, name: &str, d: usize) -> Attention {
        Attention {
            q: self.linear(&format!("{name}.q"), d, d),
            k: self.linear(&format!("{name}.k"), d, d),
            v: self.linear(&format!("{name}.v"), d, d),
            o: self.linear(&format!("{name}.o"), d, d),
        }
    }

    fn head(&mut self, name: &str, d: usize, hidden: [usize; 3], out: usize) -> Vec<Linear> {
        let dims = [d, hidden[0], hidden[1], hidden[2], out];
        (0..4).map(|i| self.linear(&format!("{name}.{i}"), dims[i], dims[i + 1])).collect()
    }
}

fn build(config: &ModelConfig) -> (ParamStore, Layout) {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut b = Builder { store: ParamStore { names: Vec::new(), tensors: Vec::new() }, rng: &mut rng };
    let d = config.d_model;
    let tok_emb = b.embedding("embed.tokens", config.vocab_size, d);
    let pos_emb = b.embedding("embed.positions", config.max_len, d);
    let encoder = (0..config.encoder_layers)
        .map(|l| EncoderLayer {
            ln_attn: b.norm(&format!("encoder.{l}.ln_attn"), d),
            attn: b.attention(&format!("encoder.{l}.attn"), d),
            ln_ffn: b.norm(&format!("encoder.{l}.ln_ffn"), d),
            ff_in: b.linear(&format!("encoder.{l}.ff_in"), d, config.ffn_dim),
            ff_out: b.linear(&format!("encoder.{l}.ff_out"), config.ffn_dim, d),
        })
        .collect();
    let enc_norm = b.norm("encoder.ln_final", d);
    let decoder = (0..config.decoder_layers)
        .map(|l| DecoderLayer {
            ln_self: b.norm(&format!("decoder.{l}.ln_self"), d),
            self_attn: b.attention(&format!("decoder.{l}.self_attn"), d),
            ln_cross: b.norm(&format!("decoder.{l}.ln_cross"), d),
            cross_attn: b.attention(&format!("decoder.{l}.cross_attn"), d),
            ln_ffn: b.norm(&format!("decoder.{l}.ln_ffn"), d),
            ff_in: b.linear(&format!("decoder.{l}.ff_in"), d, config.ffn_dim),
            ff_out: b.linear(&format!("decoder.{l}.ff_out"), config.ffn_dim, d),
        })
        .collect();
    let dec_norm = b.norm("decoder.ln_final", d);
    let lm_head = b.linear("lm_head", d, config.vocab_size);
    let regressor = b.head("regressor", d, config.head_dims, 1);
    let classifier = b.head("classifier", d, config.head_dims, 16);
    let layout = Layout { tok_emb, pos_emb, encoder, enc_norm, decoder, dec_norm, lm_head, regressor, classifier };
    (b.store, layout)
}

/// One training pair: `input_ids` already carry the control token.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Example {
    pub input_ids: Vec<u32>,
    pub target_ids: Vec<u32>,
    pub level: YodLevel,
}

/// Whether the heads apply dropout. `Train` carries the seed the per-example
/// masks are derived from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Eval,
    Train { seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeadOutputs {
    pub yod_score: f64,
    pub yod_logits: [f64; 16],
}

impl HeadOutputs {
    pub fn predicted_level(&self) -> YodLevel {
        YodLevel::new(crate::heads::predicted_level(&self.yod_logits) as i64).expect("argmax is in 1..=16")
    }
}

/// Per-example scalar pieces of the batch objective.
struct ExampleLoss {
    ce_sum: f64,
    se: f64,
    class_ce: f64,
    grads: Option<Vec<Option<Matrix>>>,
}

struct Scales {
    ce: f64,
    mse: f64,
    class: f64,
}

/// Graph plus the node ids of every parameter.
struct Tape<'m> {
    g: Graph,
    p: Vec<NodeId>,
    model: &'m Seq2Seq,
}

impl<'m> Tape<'m> {
    fn new(model: &'m Seq2Seq) -> Self {
        let mut g = Graph::new();
        let p = model.params.tensors().iter().enumerate().map(|(i, m)| g.param(i, m)).collect();
        Tape { g, p, model }
    }

    fn linear(&mut self, x: NodeId, l: Linear) -> NodeId {
        let y = self.g.matmul(x, self.p[l.w]);
        self.g.add_row(y, self.p[l.b])
    }

    fn norm(&mut self, x: NodeId, n: Norm) -> NodeId {
        self.g.layer_norm(x, self.p[n.g], self.p[n.b])
    }

    fn embed(&mut self, ids: &[u32]) -> Result<NodeId> {
        let max = self.model.config.max_len;
        if ids.len() > max {
            return Err(NeuralError::SequenceTooLong { len: ids.len(), max });
        }
        let layout = &self.model.layout;
        let tok = self.g.gather(self.p[layout.tok_emb], ids.iter().map(|&i| i as usize).collect());
        let pos = self.g.gather(self.p[layout.pos_emb], (0..ids.len()).collect());
        Ok(self.g.add(tok, pos))
    }

    fn attention(&mut self, xq: NodeId, xkv: NodeId, a: Attention, causal: bool) -> NodeId {
        let heads = self.model.config.heads;
        let dh = self.model.config.d_model / heads;
        let q = self.linear(xq, a.q);
        let k = self.linear(xkv, a.k);
        let v = self.linear(xkv, a.v);
        let scale = 1.0 / (dh as f64).sqrt();
        let mut outs = Vec::with_capacity(heads);
        for h in 0..heads {
            let qh = self.g.slice_cols(q, h * dh, dh);
            let kh = self.g.slice_cols(k, h * dh, dh);
            let vh = self.g.slice_cols(v, h * dh, dh);
            let s = self.g.matmul_t(qh, kh);
            let s = self.g.scale(s, scale);
            let w = self.g.softmax(s, causal);
            outs.push(self.g.matmul(w, vh));
        }
        let cat = if heads == 1 { outs[0] } else { self.g.concat_cols(outs) };
        self.linear(cat, a.o)
    }

    fn ffn(&mut self, x: NodeId, ff_in: Linear, ff_out: Linear) -> NodeId {
        let h = self.linear(x, ff_in);
        let h = self.g.gelu(h);
        self.linear(h, ff_out)
    }

    fn encode(&mut self, input_ids: &[u32]) -> Result<NodeId> {
        let mut x = self.embed(input_ids)?;
        let layout = &self.model.layout;
        for layer in &layout.encoder {
            let h = self.norm(x, layer.ln_attn);
            let a = self.attention(h, h, layer.attn, false);
            x = self.g.add(x, a);
            let h = self.norm(x, layer.ln_ffn);
            let f = self.ffn(h, layer.ff_in, layer.ff_out);
            x = self.g.add(x, f);
        }
        Ok(self.norm(x, layout.enc_norm))
    }

    /// Next-token logits for every position of `decoder_ids`.
    fn decode(&mut self, decoder_ids: &[u32], memory: NodeId) -> Result<NodeId> {
        let mut x = self.embed(decoder_ids)?;
        let layout = &self.model.layout;
        for layer in &layout.decoder {
            let h = self.norm(x, layer.ln_self);
            let a = self.attention(h, h, layer.self_attn, true);
            x = self.g.add(x, a);
            let h = self.norm(x, layer.ln_cross);
            let a = self.attention(h, memory, layer.cross_attn, false);
            x = self.g.add(x, a);
            let h = self.norm(x, layer.ln_ffn);
            let f = self.ffn(h, layer.ff_in, layer.ff_out);
            x = self.g.add(x, f);
        }
        let x = self.norm(x, layout.dec_norm);
        Ok(self.linear(x, layout.lm_head))
    }

    fn head(&mut self, pooled: NodeId, layers: &[Linear], dropout: &mut Option<(f64, ChaCha8Rng)>) -> NodeId {
        let mut h = pooled;
        let last = layers.len() - 1;
        for (i, &l) in layers.iter().enumerate() {
            h = self.linear(h, l);
            if i < last {
                h = self.g.relu(h);
                if let Some((rate, rng)) = dropout.as_mut() {
                    if *rate > 0.0 {
                        let keep = 1.0 - *rate;
                        let n = self.g.value(h).len();
                        let mask = (0..n).map(|_| if rng.random::<f64>() < *rate { 0.0 } else { 1.0 / keep }).collect();
                        h = self.g.mul_const(h, mask);
                    }
                }
            }
        }
        h
    }
}

#[derive(Debug, Clone)]
pub struct Seq2Seq {
    config: ModelConfig,
    params: ParamStore,
    layout: Layout,
}

impl Seq2Seq {
    pub fn new(config: ModelConfig) -> Result<Self> {
        config.validate()?;
        let (params, layout) = build(&config);
        Ok(Seq2Seq { config, params, layout })
    }

    /// Rebuilds the layout for `config` and installs `tensors` by name.
    pub fn from_named(config: ModelConfig, tensors: Vec<(String, Matrix)>) -> Result<Self> {
        let mut model = Seq2Seq::new(config)?;
        if tensors.len() != model.params.len() {
            return Err(NeuralError::Checkpoint(format!(
                "expected {} tensors, found {}",
                model.params.len(),
                tensors.len()
            )));
        }
        for (name, m) in tensors {
            let i = model
                .params
                .index_of(&name)
                .ok_or_else(|| NeuralError::Checkpoint(format!("unknown tensor {name}")))?;
            if model.params.get(i).shape() != m.shape() {
                return Err(NeuralError::Checkpoint(format!(
                    "tensor {name} has shape {:?}, expected {:?}",
                    m.shape(),
                    model.params.get(i).shape()
                )));
            }
            *model.params.get_mut(i) = m;
        }
        Ok(model)
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn params(&self) -> &ParamStore {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamStore {
        &mut self.params
    }

    /// Parameter indices of the token embedding, the first encoder
    /// self-attention block, and the two heads, in that order.
    pub fn param_groups(&self) -> ParamGroups {
        let l = &self.layout;
        let attn = l.encoder.first().map(|e| e.attn).or_else(|| l.decoder.first().map(|d| d.self_attn));
        let attention = attn
            .map(|a| [a.q, a.k, a.v, a.o].iter().flat_map(|x| [x.w, x.b]).collect())
            .unwrap_or_default();
        let flatten = |ls: &[Linear]| ls.iter().flat_map(|x| [x.w, x.b]).collect();
        ParamGroups {
            token_embedding: l.tok_emb,
            attention,
            regressor: flatten(&l.regressor),
            classifier: flatten(&l.classifier),
        }
    }

    fn head_weights(&self, layers: &[Linear]) -> MlpHead {
        MlpHead {
            layers: layers
                .iter()
                .map(|l| Dense { weight: self.params.get(l.w).clone(), bias: self.params.get(l.b).data.clone() })
                .collect(),
        }
    }

    /// Standalone copy of the regression head.
    pub fn regressor(&self) -> MlpHead {
        self.head_weights(&self.layout.regressor)
    }

    /// Standalone copy of the classification head.
    pub fn classifier(&self) -> MlpHead {
        self.head_weights(&self.layout.classifier)
    }

    /// Final encoder states, one row per input position.
    pub fn encode(&self, input_ids: &[u32]) -> Result<Matrix> {
        let mut t = Tape::new(self);
        let h = t.encode(input_ids)?;
        Ok(t.g.value(h).clone())
    }

    /// Both heads on the mean-pooled encoder states (eval mode).
    pub fn head_outputs(&self, input_ids: &[u32]) -> Result<HeadOutputs> {
        if input_ids.is_empty() {
            return Err(NeuralError::AllMasked);
        }
        let mut t = Tape::new(self);
        let h = t.encode(input_ids)?;
        let pooled = t.g.masked_mean(h, vec![true; input_ids.len()]);
        let reg = t.head(pooled, &self.layout.regressor, &mut None);
        let cls = t.head(pooled, &self.layout.classifier, &mut None);
        let mut yod_logits = [0.0; 16];
        yod_logits.copy_from_slice(&t.g.value(cls).data);
        Ok(HeadOutputs { yod_score: t.g.scalar(reg), yod_logits })
    }

    /// Greedy decoding until EOS or `max_new` tokens; the result excludes
    /// BOS and EOS.
    pub fn generate(&self, input_ids: &[u32], max_new: usize) -> Result<Vec<u32>> {
        let mut t = Tape::new(self);
        let memory = t.encode(input_ids)?;
        let mut out = vec![BOS];
        let limit = max_new.min(self.config.max_len.saturating_sub(1));
        for _ in 0..limit {
            let logits = t.decode(&out, memory)?;
            let v = t.g.value(logits);
            let last = v.row(v.rows - 1);
            let mut best = 0;
            for (i, &x) in last.iter().enumerate() {
                if x > last[best] {
                    best = i;
                }
            }
            if best as u32 == EOS {
                break;
            }
            out.push(best as u32);
        }
        out.remove(0);
        Ok(out)
    }

    fn example_loss(
        &self,
        ex: &Example,
        scales: &Scales,
        dropout: Option<(f64, ChaCha8Rng)>,
        want_grads: bool,
    ) -> Result<ExampleLoss> {
        if ex.input_ids.is_empty() {
            return Err(NeuralError::AllMasked);
        }
        let mut t = Tape::new(self);
        let memory = t.encode(&ex.input_ids)?;

        let mut dec_in = Vec::with_capacity(ex.target_ids.len() + 1);
        dec_in.push(BOS);
        dec_in.extend_from_slice(&ex.target_ids);
        let mut labels: Vec<usize> = ex.target_ids.iter().map(|&i| i as usize).collect();
        labels.push(EOS as usize);
        let logits = t.decode(&dec_in, memory)?;
        let ce = t.g.cross_entropy_sum(logits, labels);

        let pooled = t.g.masked_mean(memory, vec![true; ex.input_ids.len()]);
        let mut dropout = dropout;
        let reg = t.head(pooled, &self.layout.regressor, &mut dropout);
        let cls = t.head(pooled, &self.layout.classifier, &mut dropout);
        let se = t.g.squared_error_sum(reg, vec![ex.level.get() as f64]);
        let class_ce = t.g.cross_entropy_sum(cls, vec![ex.level.index()]);

        let grads = if want_grads {
            let a = t.g.scale(ce, scales.ce);
            let b = t.g.scale(se, scales.mse);
            let c = t.g.scale(class_ce, scales.class);
            let ab = t.g.add(a, b);
            let root = t.g.add(ab, c);
            Some(t.g.backward(root, self.params.len()))
        } else {
            None
        };
        Ok(ExampleLoss { ce_sum: t.g.scalar(ce), se: t.g.scalar(se), class_ce: t.g.scalar(class_ce), grads })
    }

    fn batch(
        &self,
        batch: &[Example],
        epoch: usize,
        mode: Mode,
        exec: Execution,
        want_grads: bool,
    ) -> Result<(LossBreakdown, Option<Vec<Matrix>>)> {
        if batch.is_empty() {
            return Err(NeuralError::EmptyBatch);
        }
        let tokens: usize = batch.iter().map(|e| e.target_ids.len() + 1).sum();
        let n = batch.len() as f64;
        let scales = Scales { ce: 1.0 / tokens as f64, mse: dynamic_weight(epoch) / n, class: CLASS_WEIGHT / n };
        let rate = self.config.dropout;
        let per: Vec<Result<ExampleLoss>> = exec.map_range(batch.len(), |i| {
            let dropout = match mode {
                Mode::Eval => None,
                Mode::Train { seed } => {
                    Some((rate, ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(i as u64))))
                }
            };
            self.example_loss(&batch[i], &scales, dropout, want_grads)
        });

        let mut ce_sum = 0.0;
        let mut se = 0.0;
        let mut class_sum = 0.0;
        let mut grads: Option<Vec<Matrix>> = want_grads
            .then(|| self.params.tensors().iter().map(|m| Matrix::zeros(m.rows, m.cols)).collect());
        for r in per {
            let ex = r?;
            ce_sum += ex.ce_sum;
            se += ex.se;
            class_sum += ex.class_ce;
            if let (Some(total), Some(g)) = (grads.as_mut(), ex.grads) {
                for (acc, gi) in total.iter_mut().zip(g) {
                    if let Some(gi) = gi {
                        acc.add_assign(&gi);
                    }
                }
            }
        }
        let breakdown = composite_loss(ce_sum / tokens as f64, se / n, class_sum / n, epoch);
        Ok((breakdown, grads))
    }

    /// Batch objective without gradients.
    pub fn loss(&self, batch: &[Example], epoch: usize, mode: Mode, exec: Execution) -> Result<LossBreakdown> {
        Ok(self.batch(batch, epoch, mode, exec, false)?.0)
    }

    /// Batch objective and its gradient with respect to every parameter.
    pub fn loss_and_grads(
        &self,
        batch: &[Example],
        epoch: usize,
        mode: Mode,
        exec: Execution,
    ) -> Result<(LossBreakdown, Vec<Matrix>)> {
        let (b, g) = self.batch(batch, epoch, mode, exec, true)?;
        Ok((b, g.expect("gradients requested")))
    }
}

/// Parameter indices used to pick gradient-check coordinates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParamGroups {
    pub token_embedding: usize,
    pub attention: Vec<usize>,
    pub regressor: Vec<usize>,
    pub classifier: Vec<usize>,
}
