//! Fixed sixteen-example dataset for overfitting and conditioning checks,
//! plus conversion of corpus records into training examples.

use yod_core::corpus::CorpusRecord;
use yod_core::exec::Execution;
use yod_core::YodLevel;

use crate::error::Result;
use crate::model::{Example, ModelConfig, Seq2Seq};
use crate::optim::TrainConfig;
use crate::train::{Sampling, StepLog, Trainer};
use crate::vocab::{prepend_control_token, ControlVocab};

pub const TOY_SOURCE: &str = "küçük kedi sabah bahçede renkli topla oynadı sonra yorgun olarak eve döndü";

const LEAD_WORDS: [&str; 16] = [
    "bir", "iki", "üç", "dört", "beş", "altı", "yedi", "sekiz", "dokuz", "on", "yüz", "bin", "ilk", "son", "tek",
    "çift",
];

const BODY_WORDS: [&str; 8] = ["kedi", "bahçede", "oynadı", "sonra", "eve", "döndü", "ve", "uyudu"];

/// Target summary for `level`: a level-specific lead word followed by a
/// body that grows by one word every two levels.
pub fn toy_summary(level: YodLevel) -> String {
    let i = level.index();
    let mut words = vec![LEAD_WORDS[i]];
    words.extend(&BODY_WORDS[..i / 2 + 1]);
    words.join(" ")
}

#[derive(Debug, Clone)]
pub struct ToyDataset {
    pub vocab: ControlVocab,
    pub examples: Vec<Example>,
}

impl ToyDataset {
    /// One example per level, sharing [`TOY_SOURCE`] as input.
    pub fn new() -> Self {
        let summaries: Vec<String> = YodLevel::all().map(toy_summary).collect();
        let vocab =
            ControlVocab::build(std::iter::once(TOY_SOURCE).chain(summaries.iter().map(String::as_str)), 512);
        let source = vocab.encode(TOY_SOURCE);
        let examples = YodLevel::all()
            .zip(&summaries)
            .map(|(level, s)| Example {
                input_ids: prepend_control_token(&source, level.get() as i64, &vocab).expect("level in range"),
                target_ids: vocab.encode(s),
                level,
            })
            .collect();
        ToyDataset { vocab, examples }
    }

    pub fn max_target_len(&self) -> usize {
        self.examples.iter().map(|e| e.target_ids.len()).max().unwrap_or(0)
    }
}

impl Default for ToyDataset {
    fn default() -> Self {
        Self::new()
    }
}

/// Levels whose decode differs from the decode of every other level.
pub fn unique_decodes(decodes: &[Vec<u32>]) -> usize {
    decodes.iter().enumerate().filter(|(i, d)| decodes.iter().enumerate().all(|(j, o)| j == *i || o != *d)).count()
}

/// Training accuracy of the classification head.
pub fn classifier_accuracy(model: &Seq2Seq, examples: &[Example]) -> Result<usize> {
    let mut correct = 0;
    for e in examples {
        if model.head_outputs(&e.input_ids)?.predicted_level() == e.level {
            correct += 1;
        }
    }
    Ok(correct)
}

/// Outcome of overfitting the toy dataset.
#[derive(Debug, Clone)]
pub struct ToyRun {
    pub model: Seq2Seq,
    pub logs: Vec<StepLog>,
    /// Eval-mode loss before the first update.
    pub initial_total: f64,
    /// Eval-mode loss after the last update, at the last epoch's weight.
    pub final_total: f64,
    pub accuracy: usize,
    /// Greedy decodes, one per level in order.
    pub decodes: Vec<Vec<u32>>,
    pub unique_levels: usize,
}

impl ToyRun {
    pub fn loss_reduction(&self) -> f64 {
        1.0 - self.final_total / self.initial_total
    }
}

/// Trains a default-shaped model on [`ToyDataset`] and measures it.
pub fn run_toy(data: &ToyDataset, seed: u64, config: TrainConfig, exec: Execution) -> Result<ToyRun> {
    let model = Seq2Seq::new(ModelConfig::new(data.vocab.len()).with_seed(seed))?;
    let mut trainer = Trainer::new(model, config)?.with_execution(exec);
    let initial_total = trainer.evaluate(&data.examples, 0)?.total;
    let logs = trainer.fit(&data.examples, Sampling::Shuffled, |_| {})?;
    let last_epoch = logs.last().map_or(0, |l| l.epoch);
    let final_total = trainer.evaluate(&data.examples, last_epoch)?.total;
    let model = trainer.into_model();
    let accuracy = classifier_accuracy(&model, &data.examples)?;
    let max_new = data.max_target_len() + 2;
    let decodes = data.examples.iter().map(|e| model.generate(&e.input_ids, max_new)).collect::<Result<Vec<_>>>()?;
    let unique_levels = unique_decodes(&decodes);
    Ok(ToyRun { model, logs, initial_total, final_total, accuracy, decodes, unique_levels })
}

/// Builds a vocabulary over sources and summaries and encodes each record
/// as control token + source, truncated so both sides fit `max_len`.
pub fn examples_from_records(
    records: &[CorpusRecord],
    max_vocab: usize,
    max_len: usize,
) -> Result<(ControlVocab, Vec<Example>)> {
    let texts = records.iter().flat_map(|r| [r.source_text.as_str(), r.summary.as_str()]);
    let vocab = ControlVocab::build(texts, max_vocab);
    let keep = max_len.saturating_sub(1);
    let mut examples = Vec::with_capacity(records.len());
    for r in records {
        let mut source = vocab.encode(&r.source_text);
        source.truncate(keep);
        let mut target = vocab.encode(&r.summary);
        target.truncate(keep);
        examples.push(Example {
            input_ids: prepend_control_token(&source, r.yod_level.get() as i64, &vocab)?,
            target_ids: target,
            level: r.yod_level,
        });
    }
    Ok((vocab, examples))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn toy_dataset_shape() {
        let d = ToyDataset::new();
        assert_eq!(d.examples.len(), 16);
        let targets: HashSet<_> = d.examples.iter().map(|e| e.target_ids.clone()).collect();
        assert_eq!(targets.len(), 16);
        for (i, e) in d.examples.iter().enumerate() {
            assert_eq!(e.level.index(), i);
            assert_eq!(e.input_ids[0], d.vocab.control_id(e.level));
            assert_eq!(e.input_ids[1..], d.examples[0].input_ids[1..]);
            assert!(!e.target_ids.contains(&crate::vocab::UNK));
        }
        for w in d.examples.windows(2) {
            assert!(w[1].target_ids.len() >= w[0].target_ids.len());
        }
        assert!(d.vocab.len() <= 512);
    }

    #[test]
    fn unique_decode_counting() {
        assert_eq!(unique_decodes(&[vec![1], vec![2], vec![3]]), 3);
        assert_eq!(unique_decodes(&[vec![1], vec![1], vec![3]]), 1);
        assert_eq!(unique_decodes(&[vec![], vec![]]), 0);
    }

    #[test]
    fn records_are_truncated() {
        let rec = CorpusRecord {
            id: "a".into(),
            source_text: "bir iki üç dört beş altı".into(),
            summary: "bir iki üç dört".into(),
            yod_level: YodLevel::new(4).unwrap(),
            origin: None,
        };
        let (vocab, ex) = examples_from_records(&[rec], 100, 4).unwrap();
        assert_eq!(ex[0].input_ids.len(), 4);
        assert_eq!(ex[0].input_ids[0], vocab.control_id(YodLevel::new(4).unwrap()));
        assert_eq!(ex[0].target_ids.len(), 3);
    }
}
