use yod_core::exec::Execution;
use yod_neural::toy::run_toy;
use yod_neural::{gradient_check, GradCheckConfig, GradFault, ModelConfig, Seq2Seq, ToyDataset, TrainConfig};

#[test]
fn gradient_check_passes_and_detects_sign_flip() {
    let data = ToyDataset::new();
    let model = Seq2Seq::new(ModelConfig::gradcheck(data.vocab.len()).with_seed(11)).unwrap();
    let batch = &data.examples[..4];
    let cfg = GradCheckConfig::default();
    let ok = gradient_check(&model, batch, &cfg, GradFault::None, Execution::Parallel).unwrap();
    assert!(ok.probes.len() >= 50);
    assert_eq!(ok.groups().len(), 4);
    assert!(ok.max_rel_error <= 1e-4, "{:#?}", ok.probes.iter().filter(|p| p.error > 1e-4).collect::<Vec<_>>());

    let bad = gradient_check(&model, batch, &cfg, GradFault::FlipRegressorGradient, Execution::Parallel).unwrap();
    assert!(bad.max_rel_error >= 0.5);
    assert!(bad.probes.iter().filter(|p| p.group != "regressor").all(|p| p.error <= 1e-4));
}

#[test]
fn gradient_check_on_a_default_shaped_model() {
    let data = ToyDataset::new();
    let model = Seq2Seq::new(ModelConfig { dropout: 0.0, ..ModelConfig::new(data.vocab.len()) }).unwrap();
    let cfg = GradCheckConfig { per_group: 6, seed: 3, epoch: 9, ..GradCheckConfig::default() };
    let r = gradient_check(&model, &data.examples[14..], &cfg, GradFault::None, Execution::Sequential).unwrap();
    assert!(r.max_rel_error <= 1e-4, "{}", r.max_rel_error);
}

#[test]
fn gradient_check_paths_agree() {
    let data = ToyDataset::new();
    let model = Seq2Seq::new(ModelConfig::gradcheck(data.vocab.len()).with_seed(2)).unwrap();
    let cfg = GradCheckConfig { per_group: 4, ..GradCheckConfig::default() };
    let a = gradient_check(&model, &data.examples[..2], &cfg, GradFault::None, Execution::Sequential).unwrap();
    let b = gradient_check(&model, &data.examples[..2], &cfg, GradFault::None, Execution::Parallel).unwrap();
    assert_eq!(a, b);
}

#[test]
fn toy_overfit_and_conditioning() {
    let data = ToyDataset::new();
    let run = run_toy(&data, 7, TrainConfig::desk(7), Execution::Parallel).unwrap();
    assert!(run.logs.len() <= 500);
    assert!(run.loss_reduction() >= 0.9, "reduction {}", run.loss_reduction());
    assert_eq!(run.accuracy, 16);
    assert!(run.unique_levels >= 14, "{:?}", run.decodes);
    // trained decodes reproduce the level-specific lead word
    for (d, e) in run.decodes.iter().zip(&data.examples) {
        assert_eq!(d.first(), e.target_ids.first());
    }
}
