//! Versioned JSON checkpoints holding config, vocabulary and named tensors.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{NeuralError, Result};
use crate::model::{ModelConfig, Seq2Seq};
use crate::tensor::Matrix;
use crate::vocab::ControlVocab;

pub const FORMAT: &str = "yodkit-checkpoint";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedTensor {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    pub config: ModelConfig,
    pub vocab: ControlVocab,
    pub tensors: Vec<NamedTensor>,
}

impl Checkpoint {
    pub fn capture(model: &Seq2Seq, vocab: &ControlVocab) -> Self {
        let p = model.params();
        let tensors = p
            .names()
            .iter()
            .zip(p.tensors())
            .map(|(name, m)| NamedTensor { name: name.clone(), rows: m.rows, cols: m.cols, data: m.data.clone() })
            .collect();
        Checkpoint {
            format: FORMAT.to_string(),
            version: VERSION,
            config: model.config().clone(),
            vocab: vocab.clone(),
            tensors,
        }
    }

    pub fn restore(self) -> Result<(Seq2Seq, ControlVocab)> {
        if self.format != FORMAT || self.version != VERSION {
            return Err(NeuralError::Checkpoint(format!(
                "unsupported checkpoint {} v{}",
                self.format, self.version
            )));
        }
        let mut named = Vec::with_capacity(self.tensors.len());
        for t in self.tensors {
            if t.data.len() != t.rows * t.cols {
                return Err(NeuralError::Checkpoint(format!("tensor {} data does not match its shape", t.name)));
            }
            named.push((t.name, Matrix::from_vec(t.rows, t.cols, t.data)));
        }
        Ok((Seq2Seq::from_named(self.config, named)?, self.vocab))
    }

    pub fn write<W: Write>(&self, out: W) -> Result<()> {
        serde_json::to_writer(out, self).map_err(|e| NeuralError::Checkpoint(e.to_string()))
    }

    pub fn read<R: Read>(input: R) -> Result<Self> {
        serde_json::from_reader(input).map_err(|e| NeuralError::Checkpoint(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_preserves_outputs() {
        let vocab = ControlVocab::with_words(["kedi", "köpek"]);
        let model = Seq2Seq::new(ModelConfig::gradcheck(vocab.len()).with_seed(8)).unwrap();
        let mut buf = Vec::new();
        Checkpoint::capture(&model, &vocab).write(&mut buf).unwrap();
        let (back, v2) = Checkpoint::read(buf.as_slice()).unwrap().restore().unwrap();
        assert_eq!(v2, vocab);
        assert_eq!(back.params(), model.params());
        let ids = [4, 20, 21];
        assert_eq!(back.head_outputs(&ids).unwrap(), model.head_outputs(&ids).unwrap());
    }

    #[test]
    fn rejects_bad_version_and_shapes() {
        let vocab = ControlVocab::with_words(["a"]);
        let model = Seq2Seq::new(ModelConfig::gradcheck(vocab.len())).unwrap();
        let mut c = Checkpoint::capture(&model, &vocab);
        c.version = 99;
        assert!(matches!(c.clone().restore(), Err(NeuralError::Checkpoint(_))));
        c.version = VERSION;
        c.tensors[0].rows += 1;
        assert!(c.restore().is_err());
        assert!(Checkpoint::read(&b"{"[..]).is_err());
    }
}
