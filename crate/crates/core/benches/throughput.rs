use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use yod_core::corpus::{parse_jsonl, CorpusRecord};
use yod_core::eval::{evaluate_run_with, EvalPair};
use yod_core::text::SentenceSplitter;
use yod_core::{Execution, YodLevel};

const WORDS: &[&str] = &[
    "okul", "kitap", "öğretmen", "cumhuriyet", "bilgisayar", "ve", "bu", "araştırma", "sonuç",
    "değerlendirme", "ilkokul", "geldi", "gitti", "anlattı", "yapılandırılmış",
];

fn sentence(seed: usize, len: usize) -> String {
    let words: Vec<&str> = (0..len).map(|i| WORDS[(seed * 7 + i * 13) % WORDS.len()]).collect();
    format!("{}.", words.join(" "))
}

fn document(seed: usize) -> String {
    (0..6).map(|s| sentence(seed + s, 6 + (seed + s) % 9)).collect::<Vec<_>>().join(" ")
}

fn pairs(n: usize) -> Vec<EvalPair> {
    (0..n)
        .map(|i| EvalPair {
            id: i.to_string(),
            candidate: document(i),
            reference: document(i + 1),
            target_yod: YodLevel::from_value((i % 16) as f64 + 1.0),
            achieved_yod: None,
        })
        .collect()
}

fn corpus_jsonl(n: usize) -> String {
    (0..n)
        .map(|i| {
            let r = CorpusRecord {
                id: i.to_string(),
                source_text: document(i + 3),
                summary: document(i),
                yod_level: YodLevel::from_value(1.0),
                origin: None,
            };
            // drop the level so ingestion has to score the summary
            let mut v = serde_json::to_value(&r).unwrap();
            v.as_object_mut().unwrap().remove("yod");
            v.to_string()
        })
        .collect::<Vec<_>>()
        .join("\n")
}

fn bench_evaluate(c: &mut Criterion) {
    let splitter = SentenceSplitter::default();
    let mut group = c.benchmark_group("evaluate_run");
    for n in [256usize, 2048] {
        let data = pairs(n);
        for exec in [Execution::Sequential, Execution::Parallel] {
            group.bench_with_input(BenchmarkId::new(format!("{exec:?}"), n), &data, |b, d| {
                b.iter(|| evaluate_run_with(d, 1.5, &splitter, exec).unwrap())
            });
        }
    }
    group.finish();
}

fn bench_ingest(c: &mut Criterion) {
    let splitter = SentenceSplitter::default();
    let mut group = c.benchmark_group("ingest_scoring");
    for n in [1000usize, 8000] {
        let body = corpus_jsonl(n);
        for exec in [Execution::Sequential, Execution::Parallel] {
            group.bench_with_input(BenchmarkId::new(format!("{exec:?}"), n), &body, |b, body| {
                b.iter(|| parse_jsonl(body, &splitter, exec))
            });
        }
    }
    group.finish();
}

criterion_group!(benches, bench_evaluate, bench_ingest);
criterion_main!(benches);
