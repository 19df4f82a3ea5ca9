use std::io::Write;

use yod_core::corpus::{analyze, build_splits, histogram, ingest, ingest_with, to_jsonl, SplitSpec, WeightedSampler};
use yod_core::eval::{evaluate_run_with, EvalPair};
use yod_core::text::SentenceSplitter;
use yod_core::{Error, Execution, YodLevel};

fn jsonl_file(body: &str) -> tempfile::NamedTempFile {
    let mut f = tempfile::NamedTempFile::new().unwrap();
    f.write_all(body.as_bytes()).unwrap();
    f
}

#[test]
fn ingest_reports_bad_lines_and_fills_missing_levels() {
    let f = jsonl_file(concat!(
        "{\"id\":\"a\",\"source\":\"uzun metin\",\"summary\":\"Kısa özet.\",\"yod\":4}\n",
        "\n",
        "{\"id\":\"b\",\"summary\":\"Ev okul kütüphanelerde.\"}\n",
        "not json\n",
        "{\"id\":\"c\",\"summary\":\"   \",\"yod\":2}\n",
        "{\"id\":\"d\",\"summary\":\"Olur.\",\"yod\":-1}\n",
        "{\"id\":7,\"summary\":\"Tamam.\",\"yod\":21.2}\n",
    ));
    let got = ingest(f.path()).unwrap();
    let ids: Vec<&str> = got.records.iter().map(|r| r.id.as_str()).collect();
    assert_eq!(ids, ["a", "b", "7"]);
    assert_eq!(got.records[0].yod_level.get(), 4);
    // one sentence of three words, one of them six syllables:
    // sqrt(3 * 26.25) = 8.87, rounded to 9
    assert_eq!(got.records[1].yod_level.get(), 9);
    assert_eq!(got.records[2].yod_level.get(), 16);
    let bad: Vec<usize> = got.errors.iter().map(|e| e.line).collect();
    assert_eq!(bad, [4, 5, 6]);
}

#[test]
fn missing_corpus_is_file_not_found() {
    let err = ingest(std::path::Path::new("/no/such/corpus.jsonl")).unwrap_err();
    assert!(matches!(err, Error::FileNotFound(_)));
}

#[test]
fn split_files_round_trip_through_ingest() {
    let mut body = String::new();
    for level in [3, 8, 15] {
        for j in 0..10 {
            body += &format!("{{\"id\":\"{level}-{j}\",\"summary\":\"özet {j}.\",\"yod\":{level}}}\n");
        }
    }
    let f = jsonl_file(&body);
    let records = ingest(f.path()).unwrap().records;
    let splits = build_splits(&records, &SplitSpec { per_level_eval_quota: 4, seed: 1 }).unwrap();
    assert_eq!((splits.train.len(), splits.test.len(), splits.validation.len()), (6, 12, 12));

    let again = jsonl_file(&to_jsonl(&splits.test).unwrap());
    let reread = ingest(again.path()).unwrap();
    assert!(reread.errors.is_empty());
    assert_eq!(reread.records, splits.test);
    assert_eq!(histogram(&reread.records).counts.iter().filter(|&&c| c == 4).count(), 3);
}

#[test]
fn sequential_and_parallel_ingest_agree() {
    let body: String = (0..300)
        .map(|i| format!("{{\"id\":\"r{i}\",\"summary\":\"Öğrenciler {i} kitap okudu. Sonra eve döndüler.\"}}\n"))
        .collect();
    let f = jsonl_file(&body);
    let splitter = SentenceSplitter::default();
    let seq = ingest_with(f.path(), &splitter, Execution::Sequential).unwrap();
    let par = ingest_with(f.path(), &splitter, Execution::Parallel).unwrap();
    assert_eq!(seq.records, par.records);
}

#[test]
fn balanced_sampler_levels_out_a_skewed_corpus() {
    let mut body = String::new();
    for (level, n) in [(1, 200), (2, 20)] {
        for j in 0..n {
            body += &format!("{{\"id\":\"{level}-{j}\",\"summary\":\"x.\",\"yod\":{level}}}\n");
        }
    }
    let records = ingest(jsonl_file(&body).path()).unwrap().records;
    let report = analyze(&records).unwrap();
    assert_eq!(report.total, 220);
    assert!((report.weights[1] / report.weights[0] - 10.0).abs() < 1e-12);

    let draws = WeightedSampler::balanced(&records).unwrap().draw(4000, 5);
    let level_two = draws.iter().filter(|&&i| records[i].yod_level == YodLevel::new(2).unwrap()).count();
    let share = level_two as f64 / draws.len() as f64;
    assert!((share - 0.5).abs() < 0.05, "share {share}");
}

#[test]
fn evaluation_is_identical_across_execution_paths() {
    let pairs: Vec<EvalPair> = (0..64)
        .map(|i| EvalPair {
            id: format!("p{i}"),
            candidate: format!("kedi bahçede {} top oynadı", ["kırmızı", "mavi", "sarı"][i % 3]),
            reference: "kedi bahçede kırmızı top ile oynadı".into(),
            target_yod: YodLevel::new(1 + (i % 16) as i64).unwrap(),
            achieved_yod: if i % 2 == 0 { Some((i % 16) as f64 + 0.75) } else { None },
        })
        .collect();
    let splitter = SentenceSplitter::default();
    let seq = evaluate_run_with(&pairs, 1.5, &splitter, Execution::Sequential).unwrap();
    let par = evaluate_run_with(&pairs, 1.5, &splitter, Execution::Parallel).unwrap();
    assert_eq!(seq, par);
    assert_eq!(seq.to_json().unwrap(), par.to_json().unwrap());
    assert_eq!(seq.per_level.iter().map(|r| r.count).sum::<usize>(), 64);
}
