use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use yod_core::corpus::{self, build_splits, histogram, Ingested, MalformedRecord, SplitSpec};
use yod_core::eval::{evaluate_run, parse_pairs, EvalReport};
use yod_core::readability::score;
use yod_core::text::{compute_stats_with, SentenceSplitter};
use yod_core::{Execution, Formula, Language, YodLevel};
use yod_neural::gradcheck::{gradient_check, GradCheckConfig, GradCheckReport, GradFault};
use yod_neural::toy::{classifier_accuracy, examples_from_records, unique_decodes, ToyDataset};
use yod_neural::train::write_log;
use yod_neural::{Checkpoint, Example, ModelConfig, Sampling, Seq2Seq, TrainConfig, Trainer};

use crate::args::{Fault, Format, SamplingArg};
use crate::error::CliError;
use crate::output::Staged;

const MAX_VOCAB: usize = 512;

fn ser_err(e: impl std::fmt::Display) -> CliError {
    CliError::Invalid(format!("serialization failed: {e}"))
}

fn out_err(e: std::io::Error) -> CliError {
    CliError::Io(format!("writing output: {e}"))
}

fn read_path(path: &Path) -> Result<String, CliError> {
    if path.as_os_str() == "-" {
        let mut s = String::new();
        std::io::stdin().read_to_string(&mut s).map_err(|e| CliError::Io(format!("<stdin>: {e}")))?;
        return Ok(s);
    }
    std::fs::read_to_string(path).map_err(|e| yod_core::Error::io(path, e).into())
}

fn json<T: Serialize + ?Sized>(value: &T) -> Result<String, CliError> {
    serde_json::to_string_pretty(value).map(|s| s + "\n").map_err(ser_err)
}

fn csv_line(fields: &[String]) -> String {
    let quoted: Vec<String> = fields
        .iter()
        .map(|f| {
            if f.contains([',', '"', '\n']) {
                format!("\"{}\"", f.replace('"', "\"\""))
            } else {
                f.clone()
            }
        })
        .collect();
    quoted.join(",") + "\n"
}

fn warn_malformed(err: &mut dyn Write, source: &Path, errors: &[MalformedRecord]) -> Result<(), CliError> {
    for e in errors {
        writeln!(err, "warning: {}:{}: skipped: {}", source.display(), e.line, e.message).map_err(out_err)?;
    }
    Ok(())
}

// ---------------------------------------------------------------- score

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScoreRow {
    pub document: String,
    pub formula: Formula,
    pub value: f64,
    pub level: &'static str,
    pub level_index: Option<usize>,
}

/// One row per formula for a single document.
pub fn score_text(
    document: &str,
    text: &str,
    language: Language,
    formulas: &[Formula],
    splitter: &SentenceSplitter,
) -> Result<Vec<ScoreRow>, CliError> {
    formulas
        .iter()
        .map(|&f| {
            let stats = compute_stats_with(splitter, text, language, f.hard_word_rule())
                .map_err(|e| CliError::Invalid(format!("{document}: {e}")))?;
            let s = score(f, &stats);
            Ok(ScoreRow {
                document: document.to_string(),
                formula: f,
                value: s.value,
                level: s.level_label,
                level_index: s.level_index,
            })
        })
        .collect()
}

pub fn render_scores(rows: &[ScoreRow], format: Format) -> Result<String, CliError> {
    Ok(match format {
        Format::Json => json(rows)?,
        Format::Csv => {
            let mut out = csv_line(&["document".into(), "formula".into(), "value".into(), "level".into()]);
            for r in rows {
                out += &csv_line(&[r.document.clone(), r.formula.to_string(), format!("{:.4}", r.value), r.level.into()]);
            }
            out
        }
        Format::Table => {
            let width = rows.iter().map(|r| r.document.chars().count()).max().unwrap_or(0).max(8);
            let mut out = format!("{:<width$}  {:<15} {:>10}  {}\n", "document", "formula", "value", "level");
            for r in rows {
                out += &format!("{:<width$}  {:<15} {:>10.4}  {}\n", r.document, r.formula.name(), r.value, r.level);
            }
            out
        }
    })
}

pub struct ScoreArgs<'a> {
    pub paths: &'a [PathBuf],
    pub lang: Language,
    pub formulas: &'a [Formula],
    pub abbreviations: Option<&'a Path>,
    pub format: Format,
    pub out_dir: Option<&'a Path>,
}

pub fn cmd_score(a: &ScoreArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    let mut splitter = SentenceSplitter::default();
    if let Some(p) = a.abbreviations {
        splitter.extend(SentenceSplitter::parse_abbreviations(&read_path(p)?));
    }
    let formulas: Vec<Formula> = if a.formulas.is_empty() {
        Formula::ALL.into_iter().filter(|f| f.native_language() == a.lang).collect()
    } else {
        a.formulas.to_vec()
    };
    for f in &formulas {
        if f.native_language() != a.lang {
            writeln!(err, "warning: {f} is calibrated for {} text; scoring {} input anyway", f.native_language(), a.lang)
                .map_err(out_err)?;
        }
    }
    let stdin = [PathBuf::from("-")];
    let paths = if a.paths.is_empty() { &stdin[..] } else { a.paths };
    let mut rows = Vec::new();
    for p in paths {
        let name = if p.as_os_str() == "-" { "<stdin>".to_string() } else { p.display().to_string() };
        rows.extend(score_text(&name, &read_path(p)?, a.lang, &formulas, &splitter)?);
    }
    let rendered = render_scores(&rows, a.format)?;
    if let Some(dir) = a.out_dir {
        let ext = extension(a.format);
        let mut staged = Staged::new();
        staged.add(dir.join(format!("scores.{ext}")), rendered.as_bytes())?;
        staged.commit()?;
    }
    out.write_all(rendered.as_bytes()).map_err(out_err)
}

fn extension(f: Format) -> &'static str {
    match f {
        Format::Json => "json",
        Format::Csv => "csv",
        Format::Table => "txt",
    }
}

// ---------------------------------------------------------------- analyze

fn load_corpus(path: &Path, err: &mut dyn Write) -> Result<Ingested, CliError> {
    let ingested = corpus::ingest_with(path, &SentenceSplitter::default(), Execution::default())?;
    warn_malformed(err, path, &ingested.errors)?;
    if ingested.records.is_empty() {
        return Err(CliError::Invalid(format!("{}: no usable records", path.display())));
    }
    Ok(ingested)
}

pub fn cmd_analyze(
    corpus_path: &Path,
    format: Format,
    out_dir: Option<&Path>,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<(), CliError> {
    let ingested = load_corpus(corpus_path, err)?;
    let report = corpus::analyze(&ingested.records)?;
    let rendered = match format {
        Format::Json => json(&report)?,
        Format::Csv => report.to_csv()?,
        Format::Table => report.to_table(),
    };
    if let Some(dir) = out_dir {
        let mut staged = Staged::new();
        staged.add(dir.join("analysis.json"), json(&report)?.as_bytes())?;
        staged.add(dir.join("analysis.csv"), report.to_csv()?.as_bytes())?;
        staged.add(dir.join("analysis.txt"), report.to_table().as_bytes())?;
        staged.commit()?;
    }
    out.write_all(rendered.as_bytes()).map_err(out_err)
}

// ---------------------------------------------------------------- build-splits

#[derive(Debug, Clone, PartialEq, Serialize, serde::Deserialize)]
pub struct ManifestLevel {
    pub level: u8,
    pub train: usize,
    pub test: usize,
    pub validation: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, serde::Deserialize)]
pub struct Manifest {
    pub input: String,
    pub seed: u64,
    pub quota: usize,
    pub records: usize,
    pub malformed_lines: usize,
    pub train: usize,
    pub test: usize,
    pub validation: usize,
    pub levels: Vec<ManifestLevel>,
    pub files: Vec<String>,
}

pub const SPLIT_FILES: [&str; 3] = ["train.jsonl", "test.jsonl", "validation.jsonl"];
pub const MANIFEST_FILE: &str = "manifest.json";

pub fn cmd_build_splits(
    corpus_path: &Path,
    quota: usize,
    seed: u64,
    out_dir: &Path,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<(), CliError> {
    let ingested = load_corpus(corpus_path, err)?;
    let splits = build_splits(&ingested.records, &SplitSpec { per_level_eval_quota: quota, seed })?;
    let (tr, te, va) = (histogram(&splits.train), histogram(&splits.test), histogram(&splits.validation));
    let manifest = Manifest {
        input: corpus_path.display().to_string(),
        seed,
        quota,
        records: ingested.records.len(),
        malformed_lines: ingested.errors.len(),
        train: splits.train.len(),
        test: splits.test.len(),
        validation: splits.validation.len(),
        levels: YodLevel::all()
            .map(|l| ManifestLevel { level: l.get(), train: tr.get(l), test: te.get(l), validation: va.get(l) })
            .collect(),
        files: SPLIT_FILES.iter().map(|s| s.to_string()).collect(),
    };
    let mut staged = Staged::new();
    for (name, records) in SPLIT_FILES.iter().zip([&splits.train, &splits.test, &splits.validation]) {
        staged.add(out_dir.join(name), corpus::to_jsonl(records)?.as_bytes())?;
    }
    staged.add(out_dir.join(MANIFEST_FILE), json(&manifest)?.as_bytes())?;
    staged.commit()?;
    writeln!(
        out,
        "train {} / test {} / validation {} records written to {}",
        manifest.train,
        manifest.test,
        manifest.validation,
        out_dir.display()
    )
    .map_err(out_err)
}

// ---------------------------------------------------------------- evaluate

pub fn render_report(report: &EvalReport, format: Format) -> Result<String, CliError> {
    Ok(match format {
        Format::Json => report.to_json()? + "\n",
        Format::Csv => format!("{}\n{}", report.per_level_csv()?, report.per_group_csv()?),
        Format::Table => report.to_table(),
    })
}

pub fn cmd_evaluate(
    predictions: &Path,
    tolerance: f64,
    format: Format,
    out_dir: Option<&Path>,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<(), CliError> {
    if !(tolerance.is_finite() && tolerance >= 0.0) {
        return Err(CliError::Invalid(format!("tolerance {tolerance} must be a non-negative number")));
    }
    let (pairs, errors) = parse_pairs(&read_path(predictions)?);
    warn_malformed(err, predictions, &errors)?;
    let report = evaluate_run(&pairs, tolerance)?;
    if let Some(dir) = out_dir {
        let mut staged = Staged::new();
        staged.add(dir.join("report.json"), (report.to_json()? + "\n").as_bytes())?;
        staged.add(dir.join("per_level.csv"), report.per_level_csv()?.as_bytes())?;
        staged.add(dir.join("per_group.csv"), report.per_group_csv()?.as_bytes())?;
        staged.add(dir.join("report.txt"), report.to_table().as_bytes())?;
        staged.commit()?;
    }
    out.write_all(render_report(&report, format)?.as_bytes()).map_err(out_err)
}

// ---------------------------------------------------------------- train-toy

pub struct TrainArgs<'a> {
    pub corpus: Option<&'a Path>,
    pub seed: u64,
    pub steps: Option<usize>,
    pub lr: Option<f64>,
    pub warmup: Option<usize>,
    pub batch_size: Option<usize>,
    pub sampling: SamplingArg,
    pub out_dir: &'a Path,
    pub format: Format,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrainSummary {
    pub examples: usize,
    pub steps: usize,
    pub initial_total: f64,
    pub final_total: f64,
    pub loss_reduction: f64,
    pub classifier_accuracy: f64,
    /// Levels whose greedy decode differs from every other level's
    /// (built-in dataset only).
    pub unique_decodes: Option<usize>,
    pub checkpoint: String,
    pub log: String,
}

pub const CHECKPOINT_FILE: &str = "checkpoint.json";
pub const LOG_FILE: &str = "train_log.jsonl";

pub fn cmd_train_toy(a: &TrainArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    let (vocab, examples, toy): (_, Vec<Example>, Option<ToyDataset>) = match a.corpus {
        None => {
            let d = ToyDataset::new();
            (d.vocab.clone(), d.examples.clone(), Some(d))
        }
        Some(path) => {
            let ingested = load_corpus(path, err)?;
            let max_len = ModelConfig::new(0).max_len;
            let (vocab, examples) = examples_from_records(&ingested.records, MAX_VOCAB, max_len)?;
            (vocab, examples, None)
        }
    };
    let mut cfg = TrainConfig::desk(a.seed);
    if let Some(s) = a.steps {
        cfg.max_steps = Some(s);
        cfg.epochs = cfg.epochs.max(s);
    }
    if let Some(lr) = a.lr {
        cfg.learning_rate = lr;
    }
    if let Some(w) = a.warmup {
        cfg.warmup_steps = w;
    }
    if let Some(b) = a.batch_size {
        cfg.batch_size = b;
    }
    let sampling = match a.sampling {
        SamplingArg::Shuffled => Sampling::Shuffled,
        SamplingArg::Weighted => Sampling::Weighted,
    };

    let model = Seq2Seq::new(ModelConfig::new(vocab.len()).with_seed(a.seed))?;
    let mut trainer = Trainer::new(model, cfg)?;
    let probe = &examples[..examples.len().min(64)];
    let initial_total = trainer.evaluate(probe, 0)?.total;
    let logs = trainer.fit(&examples, sampling, |_| {})?;
    let last_epoch = logs.last().map_or(0, |l| l.epoch);
    let final_total = trainer.evaluate(probe, last_epoch)?.total;
    if !final_total.is_finite() {
        return Err(CliError::Numeric(format!("final loss is {final_total}")));
    }
    let model = trainer.into_model();
    let accuracy = classifier_accuracy(&model, probe)? as f64 / probe.len() as f64;
    let unique = match &toy {
        Some(d) => {
            let decodes = d
                .examples
                .iter()
                .map(|e| model.generate(&e.input_ids, d.max_target_len() + 2))
                .collect::<Result<Vec<_>, _>>()?;
            Some(unique_decodes(&decodes))
        }
        None => None,
    };

    let mut ckpt = Vec::new();
    Checkpoint::capture(&model, &vocab).write(&mut ckpt)?;
    let mut log = Vec::new();
    write_log(&mut log, &logs)?;
    let ckpt_path = a.out_dir.join(CHECKPOINT_FILE);
    let log_path = a.out_dir.join(LOG_FILE);
    let mut staged = Staged::new();
    staged.add(ckpt_path.clone(), &ckpt)?;
    staged.add(log_path.clone(), &log)?;
    staged.commit()?;

    let summary = TrainSummary {
        examples: examples.len(),
        steps: logs.len(),
        initial_total,
        final_total,
        loss_reduction: 1.0 - final_total / initial_total,
        classifier_accuracy: accuracy,
        unique_decodes: unique,
        checkpoint: ckpt_path.display().to_string(),
        log: log_path.display().to_string(),
    };
    let rendered = match a.format {
        Format::Json => json(&summary)?,
        Format::Csv => {
            let keys = ["examples", "steps", "initial_total", "final_total", "loss_reduction", "classifier_accuracy"];
            csv_line(&keys.map(String::from))
                + &csv_line(&[
                    summary.examples.to_string(),
                    summary.steps.to_string(),
                    format!("{:.4}", summary.initial_total),
                    format!("{:.4}", summary.final_total),
                    format!("{:.4}", summary.loss_reduction),
                    format!("{:.4}", summary.classifier_accuracy),
                ])
        }
        Format::Table => {
            let mut s = format!(
                "examples {}\nsteps {}\ninitial loss {:.4}\nfinal loss {:.4}\nreduction {:.4}\nclassifier accuracy {:.4}\n",
                summary.examples,
                summary.steps,
                summary.initial_total,
                summary.final_total,
                summary.loss_reduction,
                summary.classifier_accuracy
            );
            if let Some(u) = summary.unique_decodes {
                s += &format!("distinct level decodes {u}/16\n");
            }
            s + &format!("checkpoint {}\nlog {}\n", summary.checkpoint, summary.log)
        }
    };
    out.write_all(rendered.as_bytes()).map_err(out_err)
}

// ---------------------------------------------------------------- gradcheck

pub struct GradcheckArgs {
    pub seed: u64,
    pub per_group: usize,
    pub epsilon: f64,
    pub threshold: f64,
    pub fault: Fault,
    pub format: Format,
}

#[derive(Serialize)]
struct GradcheckOutput<'a> {
    threshold: f64,
    passed: bool,
    #[serde(flatten)]
    report: &'a GradCheckReport,
}

/// Runs the check on a narrow model over four toy examples.
pub fn run_gradcheck(a: &GradcheckArgs) -> Result<GradCheckReport, CliError> {
    let data = ToyDataset::new();
    let model = Seq2Seq::new(ModelConfig::gradcheck(data.vocab.len()).with_seed(a.seed))?;
    let cfg = GradCheckConfig { epsilon: a.epsilon, per_group: a.per_group, seed: a.seed, epoch: 0 };
    let fault = match a.fault {
        Fault::None => GradFault::None,
        Fault::FlipRegressor => GradFault::FlipRegressorGradient,
    };
    Ok(gradient_check(&model, &data.examples[..4], &cfg, fault, Execution::default())?)
}

pub fn cmd_gradcheck(a: &GradcheckArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let report = run_gradcheck(a)?;
    let passed = report.max_rel_error <= a.threshold;
    let rendered = match a.format {
        Format::Json => json(&GradcheckOutput { threshold: a.threshold, passed, report: &report })?,
        Format::Csv => {
            let mut s = csv_line(&["group", "param", "offset", "analytic", "numeric", "error"].map(String::from));
            for p in &report.probes {
                s += &csv_line(&[
                    p.group.to_string(),
                    p.param.clone(),
                    p.offset.to_string(),
                    format!("{:e}", p.analytic),
                    format!("{:e}", p.numeric),
                    format!("{:e}", p.error),
                ]);
            }
            s
        }
        Format::Table => format!(
            "probes {} ({})\nmax relative error {:e}\nthreshold {:e}\n{}\n",
            report.probes.len(),
            report.groups().into_iter().collect::<Vec<_>>().join(", "),
            report.max_rel_error,
            a.threshold,
            if passed { "PASS" } else { "FAIL" }
        ),
    };
    out.write_all(rendered.as_bytes()).map_err(out_err)?;
    if passed {
        Ok(())
    } else {
        Err(CliError::Numeric(format!(
            "gradient check failed: max relative error {:e} exceeds {:e}",
            report.max_rel_error, a.threshold
        )))
    }
}
