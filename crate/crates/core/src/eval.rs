//! Summary evaluation: ROUGE-1/2/L, METEOR (exact match), BLEU and YOD
//! success rates, aggregated per level and per education group.

use std::collections::HashMap;
use std::hash::Hash;

use serde::{Deserialize, Serialize};

use crate::corpus::MalformedRecord;
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::readability::{yod_success, yod_value, YodGroup, YodLevel};
use crate::text::{compute_stats_with, tokenize_words, turkish_lowercase, HardWordRule, Language, SentenceSplitter};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Rouge1,
    Rouge2,
    #[serde(rename = "rougeL")]
    RougeL,
    Meteor,
    Bleu,
}

/// For ROUGE, `f1_or_score` is the F1. For METEOR it is the penalised
/// F-mean. For BLEU, `precision` is the geometric mean of the n-gram
/// precisions, `recall` is the brevity penalty and `f1_or_score` is their
/// product.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MetricScore {
    pub metric: Metric,
    pub precision: f64,
    pub recall: f64,
    pub f1_or_score: f64,
}

fn f1(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Word tokens used by every metric: text tokens, Turkish-lowercased.
pub fn metric_tokens(text: &str) -> Vec<String> {
    tokenize_words(text, Language::Turkish)
        .into_iter()
        .map(|t| turkish_lowercase(&t.surface))
        .collect()
}

fn ngram_counts<T: Eq + Hash>(tokens: &[T], n: usize) -> HashMap<&[T], usize> {
    let mut counts = HashMap::new();
    if n > 0 && tokens.len() >= n {
        for w in tokens.windows(n) {
            *counts.entry(w).or_insert(0) += 1;
        }
    }
    counts
}

/// Clipped n-gram matches and the candidate/reference n-gram totals.
fn clipped_matches<T: Eq + Hash>(candidate: &[T], reference: &[T], n: usize) -> (usize, usize, usize) {
    let cand = ngram_counts(candidate, n);
    let refs = ngram_counts(reference, n);
    let matches = cand
        .iter()
        .map(|(g, &c)| c.min(refs.get(g).copied().unwrap_or(0)))
        .sum();
    (matches, cand.values().sum(), refs.values().sum())
}

pub fn rouge_n<T: Eq + Hash>(candidate: &[T], reference: &[T], n: usize) -> MetricScore {
    let (m, c, r) = clipped_matches(candidate, reference, n);
    let (p, rec) = (ratio(m, c), ratio(m, r));
    let metric = if n == 2 { Metric::Rouge2 } else { Metric::Rouge1 };
    MetricScore { metric, precision: p, recall: rec, f1_or_score: f1(p, rec) }
}

/// Longest common subsequence length, O(|a|·|b|) time, O(|b|) memory.
pub fn lcs_len<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    for x in a {
        for (j, y) in b.iter().enumerate() {
            cur[j + 1] = if x == y { prev[j] + 1 } else { prev[j + 1].max(cur[j]) };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

pub fn rouge_l<T: PartialEq>(candidate: &[T], reference: &[T]) -> MetricScore {
    let l = lcs_len(candidate, reference);
    let (p, r) = (ratio(l, candidate.len()), ratio(l, reference.len()));
    MetricScore { metric: Metric::RougeL, precision: p, recall: r, f1_or_score: f1(p, r) }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeteorParams {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl Default for MeteorParams {
    fn default() -> Self {
        MeteorParams { alpha: 0.9, beta: 3.0, gamma: 0.5 }
    }
}

/// Greedy left-to-right exact-match alignment. Each candidate token takes
/// the reference position right after its predecessor's when that extends
/// a chunk, otherwise the first unused match. Returns (matches, chunks).
pub fn meteor_alignment<T: PartialEq>(candidate: &[T], reference: &[T]) -> (usize, usize) {
    let mut used = vec![false; reference.len()];
    let mut align: Vec<Option<usize>> = Vec::with_capacity(candidate.len());
    for tok in candidate {
        let continued = align
            .last()
            .copied()
            .flatten()
            .map(|p| p + 1)
            .filter(|&j| j < reference.len() && !used[j] && reference[j] == *tok);
        let pick = continued.or_else(|| (0..reference.len()).find(|&j| !used[j] && reference[j] == *tok));
        if let Some(j) = pick {
            used[j] = true;
        }
        align.push(pick);
    }
    let matches = align.iter().flatten().count();
    let chunks = align
        .iter()
        .enumerate()
        .filter(|(i, a)| match (a, i.checked_sub(1).and_then(|p| align[p])) {
            (Some(j), Some(prev)) => *j != prev + 1,
            (Some(_), None) => true,
            (None, _) => false,
        })
        .count();
    (matches, chunks)
}

pub fn meteor<T: PartialEq>(candidate: &[T], reference: &[T]) -> MetricScore {
    meteor_with(candidate, reference, &MeteorParams::default())
}

pub fn meteor_with<T: PartialEq>(candidate: &[T], reference: &[T], params: &MeteorParams) -> MetricScore {
    let (m, chunks) = meteor_alignment(candidate, reference);
    if m == 0 {
        return MetricScore { metric: Metric::Meteor, precision: 0.0, recall: 0.0, f1_or_score: 0.0 };
    }
    let p = m as f64 / candidate.len() as f64;
    let r = m as f64 / reference.len() as f64;
    let f_mean = p * r / (params.alpha * p + (1.0 - params.alpha) * r);
    let penalty = params.gamma * (chunks as f64 / m as f64).powf(params.beta);
    MetricScore { metric: Metric::Meteor, precision: p, recall: r, f1_or_score: f_mean * (1.0 - penalty) }
}

/// Precision floor for n-gram orders without matches.
pub const BLEU_EPSILON: f64 = 1e-9;

pub fn bleu<T: Eq + Hash>(candidate: &[T], reference: &[T], max_n: usize) -> MetricScore {
    if candidate.is_empty() || max_n == 0 {
        return MetricScore { metric: Metric::Bleu, precision: 0.0, recall: 0.0, f1_or_score: 0.0 };
    }
    let log_sum: f64 = (1..=max_n)
        .map(|n| {
            let (m, c, _) = clipped_matches(candidate, reference, n);
            if m == 0 {
                BLEU_EPSILON.ln()
            } else {
                (m as f64 / c as f64).ln()
            }
        })
        .sum();
    let precision = (log_sum / max_n as f64).exp();
    let (c, r) = (candidate.len() as f64, reference.len() as f64);
    let bp = if c < r { (1.0 - r / c).exp() } else { 1.0 };
    MetricScore { metric: Metric::Bleu, precision, recall: bp, f1_or_score: precision * bp }
}

/// One line of a prediction run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalPair {
    #[serde(default)]
    pub id: String,
    pub candidate: String,
    pub reference: String,
    pub target_yod: YodLevel,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub achieved_yod: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PairScores {
    pub level: YodLevel,
    pub rouge1: f64,
    pub rouge2: f64,
    pub rouge_l: f64,
    pub meteor: f64,
    pub bleu: f64,
    pub achieved_yod: f64,
    pub success: bool,
}

/// Scores one pair. A missing achieved YOD is measured on the candidate;
/// a candidate without words measures 0.
pub fn score_pair(pair: &EvalPair, tolerance: f64, splitter: &SentenceSplitter) -> PairScores {
    let cand = metric_tokens(&pair.candidate);
    let reference = metric_tokens(&pair.reference);
    let achieved = pair.achieved_yod.unwrap_or_else(|| {
        compute_stats_with(splitter, &pair.candidate, Language::Turkish, HardWordRule::Polysyllabic)
            .map(|s| yod_value(&s))
            .unwrap_or(0.0)
    });
    PairScores {
        level: pair.target_yod,
        rouge1: rouge_n(&cand, &reference, 1).f1_or_score,
        rouge2: rouge_n(&cand, &reference, 2).f1_or_score,
        rouge_l: rouge_l(&cand, &reference).f1_or_score,
        meteor: meteor(&cand, &reference).f1_or_score,
        bleu: bleu(&cand, &reference, 4).f1_or_score,
        achieved_yod: achieved,
        success: yod_success(achieved, pair.target_yod, tolerance),
    }
}

/// Arithmetic means over a set of pairs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MetricMeans {
    pub rouge1: f64,
    pub rouge2: f64,
    #[serde(rename = "rougeL")]
    pub rouge_l: f64,
    pub meteor: f64,
    pub bleu: f64,
    pub success_rate: f64,
}

impl MetricMeans {
    /// Means in input order; `None` for an empty set.
    pub fn of<'a>(scores: impl IntoIterator<Item = &'a PairScores>) -> (usize, Option<MetricMeans>) {
        let mut n = 0usize;
        let mut acc = [0.0f64; 6];
        for s in scores {
            n += 1;
            acc[0] += s.rouge1;
            acc[1] += s.rouge2;
            acc[2] += s.rouge_l;
            acc[3] += s.meteor;
            acc[4] += s.bleu;
            acc[5] += f64::from(u8::from(s.success));
        }
        if n == 0 {
            return (0, None);
        }
        let k = n as f64;
        let means = MetricMeans {
            rouge1: acc[0] / k,
            rouge2: acc[1] / k,
            rouge_l: acc[2] / k,
            meteor: acc[3] / k,
            bleu: acc[4] / k,
            success_rate: acc[5] / k,
        };
        (n, Some(means))
    }

    pub fn as_array(&self) -> [f64; 6] {
        [self.rouge1, self.rouge2, self.rouge_l, self.meteor, self.bleu, self.success_rate]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelRow {
    pub level: u8,
    pub count: usize,
    pub metrics: Option<MetricMeans>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupRow {
    pub group: YodGroup,
    pub label: &'static str,
    pub count: usize,
    pub metrics: Option<MetricMeans>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub tolerance: f64,
    pub pairs: usize,
    pub per_level: Vec<LevelRow>,
    pub per_group: Vec<GroupRow>,
    pub overall: MetricMeans,
}

pub fn evaluate_run(pairs: &[EvalPair], tolerance: f64) -> Result<EvalReport> {
    evaluate_run_with(pairs, tolerance, &SentenceSplitter::default(), Execution::default())
}

/// Pairs are scored independently (in parallel when requested); the
/// reduction runs in input order so both execution paths agree bit for bit.
pub fn evaluate_run_with(
    pairs: &[EvalPair],
    tolerance: f64,
    splitter: &SentenceSplitter,
    exec: Execution,
) -> Result<EvalReport> {
    let scores = exec.map(pairs, |p| score_pair(p, tolerance, splitter));
    aggregate(&scores, tolerance)
}

pub fn aggregate(scores: &[PairScores], tolerance: f64) -> Result<EvalReport> {
    let (pairs, overall) = MetricMeans::of(scores);
    let overall = overall.ok_or(Error::EmptyRun)?;
    let per_level = YodLevel::all()
        .map(|l| {
            let (count, metrics) = MetricMeans::of(scores.iter().filter(|s| s.level == l));
            LevelRow { level: l.get(), count, metrics }
        })
        .collect();
    let per_group = YodGroup::ALL
        .iter()
        .map(|&g| {
            let (count, metrics) = MetricMeans::of(scores.iter().filter(|s| s.level.group() == g));
            GroupRow { group: g, label: g.label(), count, metrics }
        })
        .collect();
    Ok(EvalReport { tolerance, pairs, per_level, per_group, overall })
}

/// Parses a prediction-run JSONL file body.
pub fn parse_pairs(contents: &str) -> (Vec<EvalPair>, Vec<MalformedRecord>) {
    let mut pairs = Vec::new();
    let mut errors = Vec::new();
    for (i, line) in contents.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<EvalPair>(line) {
            Ok(mut p) => {
                if p.id.is_empty() {
                    p.id = format!("line-{}", i + 1);
                }
                pairs.push(p);
            }
            Err(e) => errors.push(MalformedRecord { line: i + 1, message: e.to_string() }),
        }
    }
    (pairs, errors)
}

const COLUMNS: [&str; 6] = ["rouge1", "rouge2", "rougeL", "meteor", "bleu", "success_rate"];

fn fmt4(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.4}")).unwrap_or_default()
}

impl EvalReport {
    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Serialize(e.to_string()))
    }

    fn csv_rows(header0: &str, rows: Vec<(String, usize, Option<MetricMeans>)>) -> Result<String> {
        let ser = |e: csv::Error| Error::Serialize(e.to_string());
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec![header0, "count"];
        header.extend(COLUMNS);
        w.write_record(&header).map_err(ser)?;
        for (key, count, metrics) in rows {
            let mut rec = vec![key, count.to_string()];
            for i in 0..COLUMNS.len() {
                rec.push(fmt4(metrics.map(|m| m.as_array()[i])));
            }
            w.write_record(&rec).map_err(ser)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Serialize(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Serialize(e.to_string()))
    }

    pub fn per_level_csv(&self) -> Result<String> {
        let rows = self.per_level.iter().map(|r| (r.level.to_string(), r.count, r.metrics)).collect();
        Self::csv_rows("yod", rows)
    }

    pub fn per_group_csv(&self) -> Result<String> {
        let rows = self.per_group.iter().map(|r| (r.label.to_string(), r.count, r.metrics)).collect();
        Self::csv_rows("group", rows)
    }

    /// Aligned text tables: per level, then per group, then overall.
    pub fn to_table(&self) -> String {
        fn line(out: &mut String, key: &str, count: usize, m: Option<MetricMeans>) {
            out.push_str(&format!("{key:<28} {count:>6}"));
            for i in 0..COLUMNS.len() {
                let cell = m.map(|m| format!("{:.4}", m.as_array()[i])).unwrap_or_else(|| "-".into());
                out.push_str(&format!(" {cell:>12}"));
            }
            out.push('\n');
        }
        let mut header = format!("{:<28} {:>6}", "", "n");
        for c in COLUMNS {
            header.push_str(&format!(" {c:>12}"));
        }
        header.push('\n');

        let mut out = format!("Per YOD level (tolerance ±{})\n", self.tolerance);
        out.push_str(&header.replacen(&format!("{:<28}", ""), &format!("{:<28}", "YOD"), 1));
        for r in &self.per_level {
            line(&mut out, &r.level.to_string(), r.count, r.metrics);
        }
        out.push_str("\nPer YOD group\n");
        out.push_str(&header.replacen(&format!("{:<28}", ""), &format!("{:<28}", "Group"), 1));
        for r in &self.per_group {
            line(&mut out, r.label, r.count, r.metrics);
        }
        out.push('\n');
        line(&mut out, "Overall", self.pairs, Some(self.overall));
        out
    }
}
