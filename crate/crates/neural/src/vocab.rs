//! Word vocabulary with reserved special and `<yod_i>` control tokens.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};
use yod_core::eval::metric_tokens;
use yod_core::YodLevel;

use crate::error::{NeuralError, Result};

pub const PAD: u32 = 0;
pub const BOS: u32 = 1;
pub const EOS: u32 = 2;
pub const UNK: u32 = 3;
const FIRST_CONTROL: u32 = 4;
const FIRST_BASE: u32 = FIRST_CONTROL + 16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "Vec<String>", into = "Vec<String>")]
pub struct ControlVocab {
    tokens: Vec<String>,
    index: HashMap<String, u32>,
}

impl From<Vec<String>> for ControlVocab {
    fn from(tokens: Vec<String>) -> Self {
        let index = tokens.iter().enumerate().map(|(i, t)| (t.clone(), i as u32)).collect();
        ControlVocab { tokens, index }
    }
}

impl From<ControlVocab> for Vec<String> {
    fn from(v: ControlVocab) -> Self {
        v.tokens
    }
}

pub fn control_token(level: YodLevel) -> String {
    format!("<yod_{}>", level.get())
}

impl ControlVocab {
    /// Special and control tokens followed by `words` in the given order
    /// (duplicates and reserved strings skipped).
    pub fn with_words<I, S>(words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut tokens: Vec<String> = ["<pad>", "<s>", "</s>", "<unk>"].iter().map(|s| s.to_string()).collect();
        tokens.extend(YodLevel::all().map(control_token));
        let mut v = ControlVocab::from(tokens);
        for w in words {
            let w = w.into();
            if !v.index.contains_key(&w) {
                v.index.insert(w.clone(), v.tokens.len() as u32);
                v.tokens.push(w);
            }
        }
        v
    }

    /// Most frequent metric tokens of `texts`, ties broken alphabetically,
    /// capped so the whole vocabulary has at most `max_size` entries.
    pub fn build<'a>(texts: impl IntoIterator<Item = &'a str>, max_size: usize) -> Self {
        let mut freq: BTreeMap<String, usize> = BTreeMap::new();
        for t in texts {
            for w in metric_tokens(t) {
                *freq.entry(w).or_default() += 1;
            }
        }
        let mut words: Vec<(String, usize)> = freq.into_iter().collect();
        words.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        let room = max_size.saturating_sub(FIRST_BASE as usize);
        Self::with_words(words.into_iter().take(room).map(|(w, _)| w))
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn control_id(&self, level: YodLevel) -> u32 {
        FIRST_CONTROL + level.index() as u32
    }

    pub fn control_id_checked(&self, level: i64) -> Result<u32> {
        YodLevel::new(level).map(|l| self.control_id(l)).map_err(|_| NeuralError::UnknownLevel(level))
    }

    pub fn is_control(&self, id: u32) -> bool {
        (FIRST_CONTROL..FIRST_BASE).contains(&id)
    }

    pub fn id(&self, token: &str) -> u32 {
        self.index.get(token).copied().unwrap_or(UNK)
    }

    pub fn token(&self, id: u32) -> &str {
        self.tokens.get(id as usize).map_or("<unk>", String::as_str)
    }

    pub fn encode(&self, text: &str) -> Vec<u32> {
        metric_tokens(text).iter().map(|w| self.id(w)).collect()
    }

    /// Space-joined tokens, stopping at the first end-of-sequence.
    pub fn decode(&self, ids: &[u32]) -> String {
        ids.iter()
            .take_while(|&&i| i != EOS)
            .filter(|&&i| i != BOS && i != PAD)
            .map(|&i| self.token(i))
            .collect::<Vec<_>>()
            .join(" ")
    }
}

/// `[<yod_level>] ++ input_ids`.
pub fn prepend_control_token(input_ids: &[u32], level: i64, vocab: &ControlVocab) -> Result<Vec<u32>> {
    let mut out = Vec::with_capacity(input_ids.len() + 1);
    out.push(vocab.control_id_checked(level)?);
    out.extend_from_slice(input_ids);
    Ok(out)
}
