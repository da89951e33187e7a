use qim_core::datagen::{read_csv_from, write_csv_to};
use qim_core::experiment::{evaluate, ExperimentConfig, ExperimentId};
use qim_core::{
    build_balanced_dataset, run_al, train_gbt, AlConfig, GbtModel, GbtParams, LabelMode, NamedSet, Task,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn small(task: Task, per_class: usize, seed: u64) -> qim_core::Dataset {
    let spec = ExperimentConfig::preset(ExperimentId::Fig6).test_spec(task);
    let n = spec.set.label_mode().n_classes();
    build_balanced_dataset(&qim_core::GenSpec {
        counts: vec![per_class; n],
        seed,
        ..spec
    })
    .unwrap()
}

#[test]
fn csv_model_and_evaluation_round_trip() {
    let train = small(Task::Set(NamedSet::T3), 150, 1);
    let test = small(Task::Set(NamedSet::T3), 200, 2);

    let mut buf = Vec::new();
    write_csv_to(&mut buf, &train).unwrap();
    let back = read_csv_from(&buf[..], LabelMode::Binary).unwrap();
    assert_eq!(back.samples(), train.samples());

    let params = GbtParams { n_rounds: 40, ..GbtParams::fixed() };
    let model = train_gbt(&back, &params, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
    let reloaded = GbtModel::from_text(&model.to_text()).unwrap();
    let fs = test.features();
    assert_eq!(model.predict_proba_batch(&fs), reloaded.predict_proba_batch(&fs));

    let (acc, auc, roc) = evaluate(&model.predict_proba_batch(&fs), &test.labels()).unwrap();
    assert!(acc > 0.85 && auc > 0.9, "acc {acc} auc {auc}");
    assert_eq!(roc.unwrap().auc, auc);
}

#[test]
fn four_class_active_learning() {
    let pool = small(Task::FourClass, 40, 4);
    let test = small(Task::FourClass, 50, 5);
    let params = GbtParams { n_rounds: 15, ..GbtParams::fixed() }
        .with_objective(qim_core::Objective::Softmax { n_classes: 4 });
    let run = run_al(&pool, &test, &AlConfig::new(60, 6), &params).unwrap();
    assert_eq!(run.learning_curve.len(), 9);
    let mut labeled = run.labeled();
    assert_eq!(labeled.len(), 60);
    labeled.sort_unstable();
    labeled.dedup();
    assert_eq!(labeled.len(), 60, "a pool point was queried twice");
    let probs = run.model.predict_proba_batch(&test.features());
    assert!(probs.iter().all(|p| p.len() == 4 && (p.iter().sum::<f64>() - 1.0).abs() < 1e-12));
    let (acc, _, roc) = evaluate(&probs, &test.labels()).unwrap();
    assert!(roc.is_none());
    assert!(acc > 0.4, "{acc}");
}
