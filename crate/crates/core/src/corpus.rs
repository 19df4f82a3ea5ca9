//! Corpus ingestion, YOD distributions and readability-balanced splits.

use std::collections::BTreeMap;
use std::path::Path;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, LevelDeficit, Result};
use crate::exec::Execution;
use crate::readability::{yod_value, YodLevel};
use crate::text::{compute_stats_with, HardWordRule, Language, SentenceSplitter};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusRecord {
    pub id: String,
    #[serde(rename = "source", default)]
    pub source_text: String,
    pub summary: String,
    #[serde(rename = "yod")]
    pub yod_level: YodLevel,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub origin: Option<String>,
}

/// A line that could not be turned into a record (1-based line number).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MalformedRecord {
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Clone, Default)]
pub struct Ingested {
    pub records: Vec<CorpusRecord>,
    pub errors: Vec<MalformedRecord>,
}

#[derive(Deserialize)]
struct RawRecord {
    id: Option<serde_json::Value>,
    #[serde(default)]
    source: String,
    summary: Option<String>,
    yod: Option<f64>,
    origin: Option<String>,
}

/// YOD level of a Turkish summary. Text without words scores 0 and lands on level 1.
pub fn summary_level(splitter: &SentenceSplitter, summary: &str) -> YodLevel {
    let value = compute_stats_with(splitter, summary, Language::Turkish, HardWordRule::Polysyllabic)
        .map(|s| yod_value(&s))
        .unwrap_or(0.0);
    YodLevel::from_value(value)
}

fn parse_line(splitter: &SentenceSplitter, line_no: usize, line: &str) -> std::result::Result<CorpusRecord, String> {
    let raw: RawRecord = serde_json::from_str(line).map_err(|e| format!("invalid JSON: {e}"))?;
    let summary = raw.summary.ok_or("missing field `summary`")?;
    if summary.trim().is_empty() {
        return Err("empty summary".into());
    }
    let yod_level = match raw.yod {
        Some(v) if !v.is_finite() || v < 0.0 => return Err(format!("invalid yod value {v}")),
        Some(v) => YodLevel::from_value(v),
        None => summary_level(splitter, &summary),
    };
    let id = match raw.id {
        None | Some(serde_json::Value::Null) => format!("line-{line_no}"),
        Some(serde_json::Value::String(s)) => s,
        Some(other) => other.to_string(),
    };
    Ok(CorpusRecord { id, source_text: raw.source, summary, yod_level, origin: raw.origin })
}

/// Parses JSONL content. Blank lines are skipped; malformed lines are
/// reported with their line number and do not stop the remaining lines.
pub fn parse_jsonl(contents: &str, splitter: &SentenceSplitter, exec: Execution) -> Ingested {
    let lines: Vec<(usize, &str)> = contents
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| (i + 1, l))
        .collect();
    let parsed = exec.map(&lines, |&(no, line)| (no, parse_line(splitter, no, line)));
    let mut out = Ingested::default();
    for (line, result) in parsed {
        match result {
            Ok(record) => out.records.push(record),
            Err(message) => out.errors.push(MalformedRecord { line, message }),
        }
    }
    out
}

pub fn ingest(path: &Path) -> Result<Ingested> {
    ingest_with(path, &SentenceSplitter::default(), Execution::default())
}

pub fn ingest_with(path: &Path, splitter: &SentenceSplitter, exec: Execution) -> Result<Ingested> {
    let contents = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(parse_jsonl(&contents, splitter, exec))
}

pub fn to_jsonl(records: &[CorpusRecord]) -> Result<String> {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).map_err(|e| Error::Serialize(e.to_string()))?);
        out.push('\n');
    }
    Ok(out)
}

/// Keeps records whose source has at most `max_words` whitespace tokens.
pub fn filter_max_words(records: &[CorpusRecord], max_words: usize) -> Vec<CorpusRecord> {
    records
        .iter()
        .filter(|r| r.source_text.split_whitespace().count() <= max_words)
        .cloned()
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct YodHistogram {
    /// `counts[i]` holds level `i + 1`.
    pub counts: [usize; 16],
}

impl YodHistogram {
    pub fn get(&self, level: YodLevel) -> usize {
        self.counts[level.index()]
    }

    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }
}

pub fn histogram(records: &[CorpusRecord]) -> YodHistogram {
    let mut h = YodHistogram::default();
    for r in records {
        h.counts[r.yod_level.index()] += 1;
    }
    h
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSpec {
    /// Records per level in each of test and validation.
    pub per_level_eval_quota: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Splits {
    pub train: Vec<CorpusRecord>,
    pub test: Vec<CorpusRecord>,
    pub validation: Vec<CorpusRecord>,
}

/// Draws `quota` records per level for test and for validation without
/// replacement; everything else is train. Each output keeps input order.
/// Levels absent from the input are skipped; a present level with fewer
/// than `2 * quota` records fails the whole split.
pub fn build_splits(records: &[CorpusRecord], spec: &SplitSpec) -> Result<Splits> {
    let quota = spec.per_level_eval_quota;
    let mut by_level: Vec<Vec<usize>> = vec![Vec::new(); YodLevel::COUNT];
    for (i, r) in records.iter().enumerate() {
        by_level[r.yod_level.index()].push(i);
    }
    let deficits: Vec<LevelDeficit> = by_level
        .iter()
        .enumerate()
        .filter(|(_, idx)| !idx.is_empty() && idx.len() < 2 * quota)
        .map(|(l, idx)| LevelDeficit { level: l as u8 + 1, available: idx.len(), required: 2 * quota })
        .collect();
    if !deficits.is_empty() {
        return Err(Error::InsufficientLevels(deficits));
    }

    #[derive(Clone, Copy, PartialEq)]
    enum Dest {
        Train,
        Test,
        Validation,
    }
    let mut dest = vec![Dest::Train; records.len()];
    if quota > 0 {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        for idx in by_level.iter_mut().filter(|idx| !idx.is_empty()) {
            idx.shuffle(&mut rng);
            for &i in &idx[..quota] {
                dest[i] = Dest::Test;
            }
            for &i in &idx[quota..2 * quota] {
                dest[i] = Dest::Validation;
            }
        }
    }
    let mut splits = Splits::default();
    for (r, d) in records.iter().zip(dest) {
        match d {
            Dest::Train => splits.train.push(r.clone()),
            Dest::Test => splits.test.push(r.clone()),
            Dest::Validation => splits.validation.push(r.clone()),
        }
    }
    Ok(splits)
}

/// Inverse-frequency weights, scaled so the nonzero weights average 1.
pub fn sampling_weights(hist: &YodHistogram) -> Result<[f64; 16]> {
    let total = hist.total() as f64;
    let nonzero = hist.counts.iter().filter(|&&c| c > 0).count();
    if nonzero == 0 {
        return Err(Error::EmptyHistogram);
    }
    let mut weights = [0.0; 16];
    for (w, &c) in weights.iter_mut().zip(&hist.counts) {
        if c > 0 {
            *w = total / c as f64;
        }
    }
    let mean = weights.iter().sum::<f64>() / nonzero as f64;
    for w in &mut weights {
        *w /= mean;
    }
    Ok(weights)
}

/// With-replacement record sampler where a record's probability is
/// proportional to its level's weight.
#[derive(Debug, Clone)]
pub struct WeightedSampler {
    dist: WeightedIndex<f64>,
}

impl WeightedSampler {
    pub fn new(levels: &[YodLevel], weights: &[f64; 16]) -> Result<Self> {
        let per_record: Vec<f64> = levels.iter().map(|l| weights[l.index()]).collect();
        let dist = WeightedIndex::new(per_record).map_err(|_| Error::EmptyHistogram)?;
        Ok(WeightedSampler { dist })
    }

    /// Sampler balanced over the levels present in `records`.
    pub fn balanced(records: &[CorpusRecord]) -> Result<Self> {
        let weights = sampling_weights(&histogram(records))?;
        let levels: Vec<YodLevel> = records.iter().map(|r| r.yod_level).collect();
        Self::new(&levels, &weights)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        self.dist.sample(rng)
    }

    pub fn draw(&self, n: usize, seed: u64) -> Vec<usize> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| self.sample(&mut rng)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LengthStat {
    pub records: usize,
    pub mean_tokens: f64,
}

/// Mean whitespace-token count of summaries, per level present.
pub fn token_length_stats(records: &[CorpusRecord]) -> BTreeMap<u8, LengthStat> {
    let mut sums: BTreeMap<u8, (usize, usize)> = BTreeMap::new();
    for r in records {
        let e = sums.entry(r.yod_level.get()).or_default();
        e.0 += 1;
        e.1 += r.summary.split_whitespace().count();
    }
    sums.into_iter()
        .map(|(l, (n, tokens))| (l, LengthStat { records: n, mean_tokens: tokens as f64 / n as f64 }))
        .collect()
}

/// One row per level: count, sampling weight and mean summary length.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelRow {
    pub level: u8,
    pub count: usize,
    pub weight: f64,
    pub mean_tokens: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorpusReport {
    pub total: usize,
    pub histogram: YodHistogram,
    pub weights: [f64; 16],
    pub levels: Vec<LevelRow>,
}

pub fn analyze(records: &[CorpusRecord]) -> Result<CorpusReport> {
    let hist = histogram(records);
    let weights = sampling_weights(&hist)?;
    let lengths = token_length_stats(records);
    let levels = YodLevel::all()
        .map(|l| LevelRow {
            level: l.get(),
            count: hist.get(l),
            weight: weights[l.index()],
            mean_tokens: lengths.get(&l.get()).map(|s| s.mean_tokens),
        })
        .collect();
    Ok(CorpusReport { total: hist.total(), histogram: hist, weights, levels })
}

impl CorpusReport {
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let ser = |e: csv::Error| Error::Serialize(e.to_string());
        w.write_record(["level", "count", "weight", "mean_tokens"]).map_err(ser)?;
        for row in &self.levels {
            w.write_record([
                row.level.to_string(),
                row.count.to_string(),
                format!("{:.4}", row.weight),
                row.mean_tokens.map(|m| format!("{m:.4}")).unwrap_or_default(),
            ])
            .map_err(ser)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Serialize(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Serialize(e.to_string()))
    }

    pub fn to_table(&self) -> String {
        let mut out = format!("{:>5} {:>8} {:>8} {:>12}\n", "YOD", "Count", "Weight", "Avg tokens");
        for row in &self.levels {
            let mean = row.mean_tokens.map(|m| format!("{m:.4}")).unwrap_or_else(|| "-".into());
            out.push_str(&format!("{:>5} {:>8} {:>8.4} {:>12}\n", row.level, row.count, row.weight, mean));
        }
        out.push_str(&format!("{:>5} {:>8}\n", "Total", self.total));
        out
    }
}
