use super::*;
use crate::model::{init_params, NetworkConfig};
use crate::oracle::{data_expectations, exact_loglik, model_expectations};
use crate::scene::{split_dataset, synth_generate, SplitRatios, SynthSpec};
use rand::Rng as _;

fn small_split(per_category: usize) -> crate::scene::DatasetSplit {
    let spec = SynthSpec { scenes_per_category: per_category, ..SynthSpec::desk_fixture() };
    let out = synth_generate(&spec).unwrap();
    split_dataset(&out.scenes, &spec.vocabulary().unwrap(), SplitRatios::default(), 1).unwrap()
}

fn small_params(seed: u64) -> ModelParams<f64> {
    init_params(NetworkConfig::triway(30, 4, 8, 4), &mut rng::seeded(seed)).unwrap()
}

#[test]
fn reconstruction_error_examples() {
    let sv = SceneVector::new(2, 1, vec![0], vec![]).unwrap();
    let c = NetworkConfig::rbm(2, 1, 1);
    let perfect = NodeProbs::<f64>::from_state(&NetworkState::from_scene(&c, &sv).unwrap());
    assert_eq!(reconstruction_error(&[sv.clone()], &[perfect]).unwrap(), (0.0, 0.0));

    let mut half = NodeProbs::<f64>::zeros(&c);
    half.v = vec![0.5, 0.5];
    assert_eq!(reconstruction_error(&[sv], &[half]).unwrap().0, 0.5);

    let sv = SceneVector::new(5, 1, vec![0, 2, 3], vec![]).unwrap();
    let zero = NodeProbs::<f64>::zeros(&NetworkConfig::rbm(5, 1, 1));
    assert_eq!(reconstruction_error(&[sv], &[zero]).unwrap(), (3.0, 0.0));
}

#[test]
fn reconstruction_error_is_a_sample_mean() {
    let c = NetworkConfig::rbm(2, 1, 1);
    let a = SceneVector::new(2, 1, vec![0, 1], vec![1]).unwrap();
    let b = SceneVector::new(2, 1, vec![], vec![]).unwrap();
    let z = NodeProbs::<f64>::zeros(&c);
    assert_eq!(reconstruction_error(&[a, b], &[z.clone(), z]).unwrap(), (1.0, 0.5));
}

#[test]
fn zero_learning_rate_leaves_params_and_validation_flat() {
    let split = small_split(6);
    let p = small_params(1);
    let hyper = HyperParams { learning_rate: 0.0, max_epochs: 6, seed: 3, ..Default::default() };
    let (out, hist) = train(&p, &split.train, &split.validation, &hyper).unwrap();
    assert_eq!(out, p);
    let val = hist.validation_errors();
    assert!(val.windows(2).all(|w| w[0] == w[1]));
    // never improves after the first epoch, so stops after 1 + patience
    assert_eq!(hist.len(), 4);
    assert!(hist.stopped_early);
    assert_eq!(hist.best_epoch, Some(0));
}

#[test]
fn batch_order_does_not_change_the_update() {
    let split = small_split(6);
    let p = small_params(2);
    let hyper = HyperParams { seed: 5, ..Default::default() };
    let batch: Vec<&EncodedScene> = split.train.iter().take(8).collect();
    let mut shuffled = batch.clone();
    shuffled.shuffle(&mut rng::seeded(9));
    shuffled.reverse();
    let a = batch_statistics(&p, &batch, &hyper, 4).unwrap();
    let b = batch_statistics(&p, &shuffled, &hyper, 4).unwrap();
    assert_eq!(a.0, b.0);
    assert_eq!(a.1, b.1);
    assert_eq!(a.2.to_bits(), b.2.to_bits());
}

#[test]
fn training_is_deterministic_across_thread_counts() {
    let split = small_split(6);
    let p = small_params(3);
    let hyper = HyperParams { max_epochs: 2, seed: 11, ..Default::default() };
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| train(&p, &split.train, &split.validation, &hyper).unwrap())
    };
    assert_eq!(run(1), run(4));
}

#[test]
fn returns_best_validation_epoch() {
    let split = small_split(6);
    let p = small_params(4);
    let hyper = HyperParams { max_epochs: 8, seed: 2, ..Default::default() };
    let (out, hist) = train(&p, &split.train, &split.validation, &hyper).unwrap();
    let best = hist.best_epoch.unwrap();
    let min = hist.validation_errors().into_iter().fold(f64::INFINITY, f64::min);
    assert_eq!(hist.epochs[best].val_err, min);
    let (o, r) = validation_error(&out, &split.validation, &hyper).unwrap();
    assert_eq!(o + r, hist.epochs[best].val_err);
}

#[test]
fn history_records_per_epoch_lines() {
    let split = small_split(6);
    let hyper = HyperParams { max_epochs: 2, patience: 5, ..Default::default() };
    let mut seen = Vec::new();
    let (_, hist) =
        resume(&small_params(5), &split.train, &split.validation, &hyper, TrainHistory::default(), |r| seen.push(r.epoch))
            .unwrap();
    assert_eq!(seen, vec![0, 1]);
    let lines = hist.to_json_lines();
    assert_eq!(lines.lines().count(), 2);
    let first: serde_json::Value = serde_json::from_str(lines.lines().next().unwrap()).unwrap();
    for key in ["epoch", "obj_err", "rel_err", "val_err"] {
        assert!(first.get(key).is_some(), "missing {key}");
    }
}

#[test]
fn resume_appends_history() {
    let split = small_split(6);
    let p = small_params(6);
    let hyper = HyperParams { learning_rate: 0.0, max_epochs: 1, ..Default::default() };
    let (p1, h1) = train(&p, &split.train, &split.validation, &hyper).unwrap();
    let (p2, h2) = resume(&p1, &split.train, &split.validation, &hyper, h1.clone(), |_| {}).unwrap();
    assert_eq!(h2.len(), 2);
    assert_eq!(h2.epochs[0], h1.epochs[0]);
    assert_eq!(h2.epochs[1].epoch, 1);
    assert_eq!(p2, p);
}

#[test]
fn divergence_is_reported() {
    let split = small_split(6);
    let hyper = HyperParams { learning_rate: 1e308, max_epochs: 3, ..Default::default() };
    let err = train(&small_params(7), &split.train, &split.validation, &hyper).unwrap_err();
    assert!(matches!(err, Error::Diverged { epoch: 0, last_good: None }), "{err}");
}

#[test]
fn empty_sets_rejected() {
    let split = small_split(6);
    let hyper = HyperParams::default();
    assert!(matches!(train(&small_params(8), &[], &split.validation, &hyper), Err(Error::EmptyDataset(_))));
    assert!(matches!(train(&small_params(8), &split.train, &[], &hyper), Err(Error::EmptyDataset(_))));
}

#[test]
fn mismatched_vocabulary_rejected() {
    let split = small_split(6);
    let p = init_params::<f64, _>(NetworkConfig::triway(12, 4, 4, 2), &mut rng::seeded(0)).unwrap();
    let err = train(&p, &split.train, &split.validation, &HyperParams::default()).unwrap_err();
    assert!(matches!(err, Error::ShapeMismatch(_)));
}

#[test]
fn exact_statistics_step_raises_loglik() {
    let c = NetworkConfig::triway(3, 1, 2, 2);
    let mut r = rng::seeded(21);
    for _ in 0..5 {
        let mut p = ModelParams::<f64>::zeros(c).unwrap();
        let flat: Vec<f64> = (0..p.num_weights()).map(|_| r.random_range(-1.0..1.0)).collect();
        p.set_flat(&flat).unwrap();
        let data: Vec<NetworkState> = (0..6)
            .map(|_| {
                let mut s = NetworkState::zeros(&c);
                s.v.iter_mut().chain(s.r.iter_mut()).for_each(|b| *b = r.random_bool(0.3));
                s
            })
            .collect();
        let pos = data_expectations(&p, &data).unwrap();
        let neg = model_expectations(&p).unwrap();
        let next = apply_update(&p, &pos, &neg, 0.01).unwrap();
        assert!(exact_loglik(&next, &data).unwrap() > exact_loglik(&p, &data).unwrap());
    }
}

#[test]
fn hyper_validation() {
    assert!(HyperParams::default().validate().is_ok());
    assert!(HyperParams { batch_size: 0, ..Default::default() }.validate().is_err());
    assert!(HyperParams { temperature: 0.0, ..Default::default() }.validate().is_err());
    let h: HyperParams = serde_json::from_str(r#"{"alpha": 0.25}"#).unwrap();
    assert_eq!(h.learning_rate, 0.25);
    assert_eq!(h.batch_size, 32);
}
