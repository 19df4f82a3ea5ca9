//! Pooling and the two YOD prediction heads, as plain (non-taped) code.
//!
//! The model builds the same computation on the autograd tape; these
//! versions serve inference on extracted weights and pin the head contract.

use rand::Rng;

use crate::error::{NeuralError, Result};
use crate::tensor::Matrix;

/// Mean of the hidden states at unmasked positions.
pub fn mean_pool(hidden_states: &Matrix, attention_mask: &[bool]) -> Result<Vec<f64>> {
    if hidden_states.rows != attention_mask.len() {
        return Err(NeuralError::MaskLength { states: hidden_states.rows, mask: attention_mask.len() });
    }
    let count = attention_mask.iter().filter(|&&m| m).count();
    if count == 0 {
        return Err(NeuralError::AllMasked);
    }
    let mut out = vec![0.0; hidden_states.cols];
    for (i, _) in attention_mask.iter().enumerate().filter(|(_, &m)| m) {
        for (o, x) in out.iter_mut().zip(hidden_states.row(i)) {
            *o += x;
        }
    }
    for o in &mut out {
        *o /= count as f64;
    }
    Ok(out)
}

/// `y = x·W + b`, with `W` stored `in × out`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub weight: Matrix,
    pub bias: Vec<f64>,
}

impl Dense {
    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.weight.rows, "dense input width");
        let mut y = self.bias.clone();
        for (i, &xi) in x.iter().enumerate() {
            for (o, w) in y.iter_mut().zip(self.weight.row(i)) {
                *o += xi * w;
            }
        }
        y
    }
}

/// Xavier-uniform `fan_in × fan_out` weights.
pub fn xavier<R: Rng + ?Sized>(fan_in: usize, fan_out: usize, rng: &mut R) -> Matrix {
    let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
    Matrix::from_vec(fan_in, fan_out, (0..fan_in * fan_out).map(|_| rng.random_range(-limit..limit)).collect())
}

/// Four affine layers with ReLU (and, in training, inverted dropout) after
/// each of the three hidden ones.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpHead {
    pub layers: Vec<Dense>,
}

impl MlpHead {
    /// Xavier weights and zero biases for `input → hidden[0] → hidden[1] → hidden[2] → output`.
    pub fn xavier<R: Rng + ?Sized>(input: usize, hidden: [usize; 3], output: usize, rng: &mut R) -> Self {
        let dims = [input, hidden[0], hidden[1], hidden[2], output];
        let layers = dims
            .windows(2)
            .map(|w| Dense { weight: xavier(w[0], w[1], rng), bias: vec![0.0; w[1]] })
            .collect();
        MlpHead { layers }
    }

    /// `dropout`: rate and generator for training mode; `None` in eval mode.
    pub fn forward<R: Rng + ?Sized>(&self, x: &[f64], mut dropout: Option<(f64, &mut R)>) -> Vec<f64> {
        let mut h = x.to_vec();
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            h = layer.forward(&h);
            if i < last {
                for v in &mut h {
                    *v = v.max(0.0);
                }
                if let Some((rate, rng)) = dropout.as_mut() {
                    if *rate > 0.0 {
                        let keep = 1.0 - *rate;
                        for v in &mut h {
                            *v = if rng.random::<f64>() < *rate { 0.0 } else { *v / keep };
                        }
                    }
                }
            }
        }
        h
    }

    pub fn output_width(&self) -> usize {
        self.layers.last().map_or(0, |l| l.bias.len())
    }
}

/// Continuous YOD prediction (eval mode).
pub fn yod_regressor(pooled: &[f64], head: &MlpHead) -> f64 {
    head.forward::<rand_chacha::ChaCha8Rng>(pooled, None)[0]
}

/// Sixteen class logits, index `i` standing for level `i + 1` (eval mode).
pub fn yod_classifier(pooled: &[f64], head: &MlpHead) -> [f64; 16] {
    let out = head.forward::<rand_chacha::ChaCha8Rng>(pooled, None);
    let mut logits = [0.0; 16];
    logits.copy_from_slice(&out[..16]);
    logits
}

/// Level predicted by a logit vector: argmax + 1.
pub fn predicted_level(logits: &[f64; 16]) -> u8 {
    let mut best = 0;
    for (i, &v) in logits.iter().enumerate() {
        if v > logits[best] {
            best = i;
        }
    }
    best as u8 + 1
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn scalar_layer(w: f64) -> Dense {
        Dense { weight: Matrix::scalar(w), bias: vec![0.0] }
    }

    #[test]
    fn pooling_examples() {
        let v = Matrix::from_rows(&[vec![1.0, -2.0], vec![1.0, -2.0], vec![1.0, -2.0]]);
        assert_eq!(mean_pool(&v, &[true; 3]).unwrap(), vec![1.0, -2.0]);
        let s = Matrix::from_rows(&[vec![2.0], vec![4.0]]);
        assert_eq!(mean_pool(&s, &[true, false]).unwrap(), vec![2.0]);
        let s = Matrix::from_rows(&[vec![1.0], vec![3.0]]);
        assert_eq!(mean_pool(&s, &[true, true]).unwrap(), vec![2.0]);
        assert!(matches!(mean_pool(&s, &[false, false]), Err(NeuralError::AllMasked)));
        assert!(matches!(mean_pool(&s, &[true]), Err(NeuralError::MaskLength { .. })));
    }

    #[test]
    fn regressor_hand_forward() {
        let head = MlpHead { layers: vec![scalar_layer(2.0); 4] };
        assert_eq!(yod_regressor(&[1.0], &head), 16.0);
    }

    #[test]
    fn zero_input_zero_bias() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let reg = MlpHead::xavier(8, [16, 8, 4], 1, &mut rng);
        assert_eq!(yod_regressor(&[0.0; 8], &reg), 0.0);
        let cls = MlpHead::xavier(8, [16, 8, 4], 16, &mut rng);
        let logits = yod_classifier(&[0.0; 8], &cls);
        assert_eq!(logits, [0.0; 16]);
        assert_eq!(predicted_level(&logits), 1);
    }

    #[test]
    fn classifier_hand_forward() {
        // 1 → 1 → 1 → 1 → 16 with weights 1, 2, 3 then k for output k
        let mut last = Dense { weight: Matrix::zeros(1, 16), bias: vec![0.0; 16] };
        for k in 0..16 {
            last.weight.data[k] = k as f64 - 8.0;
        }
        let head = MlpHead { layers: vec![scalar_layer(1.0), scalar_layer(2.0), scalar_layer(3.0), last] };
        let logits = yod_classifier(&[0.5], &head);
        for k in 0..16 {
            assert_eq!(logits[k], 3.0 * (k as f64 - 8.0));
        }
        assert_eq!(predicted_level(&logits), 16);
        // negative input dies at the first ReLU
        assert_eq!(yod_classifier(&[-0.5], &head), [0.0; 16]);
    }

    #[test]
    fn zero_rate_dropout_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let head = MlpHead::xavier(4, [8, 6, 5], 1, &mut rng);
        let x = [0.3, -0.1, 0.8, 0.2];
        let eval = head.forward::<ChaCha8Rng>(&x, None);
        let train = head.forward(&x, Some((0.0, &mut rng)));
        assert_eq!(eval, train);
    }
}
