//! Contrastive training.
//!
//! Each sample runs a positive phase (visibles clamped, `k_pos` hidden
//! sweeps) and a negative phase continuing the same chain with everything
//! free for `k_cd` object-then-relation steps. Per-sample chains run in
//! parallel; their statistics are reduced in sample-index order so the update
//! does not depend on scheduling or on the order samples were listed.

mod stats;

pub use stats::{apply_update, phase_statistics, EdgeStats};

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ModelParams, NetworkState, NodeProbs};
use crate::rng::{self, phase};
use crate::sampler::{negative_phase_step, sweep_hidden, Chain, ClampMask, UpdateOrder};
use crate::scalar::Scalar;
use crate::scene::{EncodedScene, SceneVector};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HyperParams {
    #[serde(alias = "alpha")]
    pub learning_rate: f64,
    pub temperature: f64,
    pub batch_size: usize,
    pub k_pos: usize,
    pub k_cd: usize,
    pub max_epochs: usize,
    pub patience: usize,
    pub seed: u64,
    /// Statistics from activation probabilities (true) or sampled bits.
    pub use_probabilities: bool,
    pub order: UpdateOrder,
}

impl Default for HyperParams {
    fn default() -> Self {
        Self {
            learning_rate: 0.5,
            temperature: 1.0,
            batch_size: 32,
            k_pos: 5,
            k_cd: 1,
            max_epochs: 30,
            patience: 3,
            seed: 0,
            use_probabilities: true,
            order: UpdateOrder::SequentialRandom,
        }
    }
}

impl HyperParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate.is_finite() && self.learning_rate >= 0.0) {
            return Err(Error::Config(format!("learning rate must be >= 0, got {}", self.learning_rate)));
        }
        if !(self.temperature.is_finite() && self.temperature > 0.0) {
            return Err(Error::Temperature(self.temperature));
        }
        if self.batch_size == 0 || self.patience == 0 || self.k_pos == 0 || self.k_cd == 0 {
            return Err(Error::Config("batch_size, patience, k_pos and k_cd must be >= 1".into()));
        }
        Ok(())
    }
}

/// One line of the training log.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub obj_err: f64,
    pub rel_err: f64,
    pub val_err: f64,
    pub val_obj_err: f64,
    pub val_rel_err: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    pub epochs: Vec<EpochRecord>,
    pub best_epoch: Option<usize>,
    pub stop_epoch: Option<usize>,
    pub stopped_early: bool,
}

impl TrainHistory {
    pub fn len(&self) -> usize {
        self.epochs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.epochs.is_empty()
    }

    pub fn object_errors(&self) -> Vec<f64> {
        self.epochs.iter().map(|e| e.obj_err).collect()
    }

    pub fn relation_errors(&self) -> Vec<f64> {
        self.epochs.iter().map(|e| e.rel_err).collect()
    }

    pub fn validation_errors(&self) -> Vec<f64> {
        self.epochs.iter().map(|e| e.val_err).collect()
    }

    /// JSON-lines rendering, one record per epoch.
    pub fn to_json_lines(&self) -> String {
        self.epochs.iter().map(|e| serde_json::to_string(e).expect("plain record") + "\n").collect()
    }
}

/// Summed squared difference between clamped data and reconstruction
/// probabilities, averaged over samples; objects and relations separately.
pub fn reconstruction_error<S: Scalar>(clamped: &[SceneVector], reconstructed: &[NodeProbs<S>]) -> Result<(f64, f64)> {
    if clamped.len() != reconstructed.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} scenes but {} reconstructions",
            clamped.len(),
            reconstructed.len()
        )));
    }
    if clamped.is_empty() {
        return Ok((0.0, 0.0));
    }
    let mut obj = 0.0;
    let mut rel = 0.0;
    for (sv, p) in clamped.iter().zip(reconstructed) {
        if p.v.len() != sv.num_objects() || p.r.len() != sv.num_relation_nodes() {
            return Err(Error::ShapeMismatch("reconstruction does not match scene dimension".into()));
        }
        obj += sample_error(sv.objects(), &p.v);
        rel += sample_error(sv.relations(), &p.r);
    }
    let n = clamped.len() as f64;
    Ok((obj / n, rel / n))
}

// Σ_j (x_j − p_j)² with x sparse: Σ p² over all, corrected on the active set.
fn sample_error<S: Scalar>(active: &[usize], probs: &[S]) -> f64 {
    let mut total: f64 = probs.iter().map(|p| p.as_f64() * p.as_f64()).sum();
    for &i in active {
        let p = probs[i].as_f64();
        total += (1.0 - p) * (1.0 - p) - p * p;
    }
    total
}

/// Small, so units never seen in training start well below their neighbours.
const BIAS_PSEUDO_COUNT: f64 = 0.02;

/// Sets visible biases to the smoothed log-odds of each unit's frequency in
/// `data`, so a fresh model starts out reproducing the marginals. Hidden
/// biases are left alone. No-op when the model has no biases.
pub fn init_visible_biases<S: Scalar>(params: &mut ModelParams<S>, data: &[EncodedScene]) -> Result<()> {
    check_dataset(params, data, data)?;
    let Some(biases) = params.biases.as_mut() else {
        return Ok(());
    };
    let mut objects = vec![0usize; biases.v.len()];
    let mut relations = vec![0usize; biases.r.len()];
    for scene in data {
        scene.vector.objects().iter().for_each(|&j| objects[j] += 1);
        scene.vector.relations().iter().for_each(|&i| relations[i] += 1);
    }
    let n = data.len() as f64;
    let log_odds = |count: usize| {
        let q = (count as f64 + BIAS_PSEUDO_COUNT) / (n + 2.0 * BIAS_PSEUDO_COUNT);
        S::of((q / (1.0 - q)).ln())
    };
    biases.v.iter_mut().zip(&objects).for_each(|(b, &c)| *b = log_odds(c));
    biases.r.iter_mut().zip(&relations).for_each(|(b, &c)| *b = log_odds(c));
    Ok(())
}

/// Result of both phases for one sample.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseResult<S> {
    pub positive: NodeProbs<S>,
    pub negative: NodeProbs<S>,
}

/// Runs the positive and negative phase for one scene.
pub fn run_phases<S: Scalar, R: rand::Rng + ?Sized>(
    params: &ModelParams<S>,
    scene: &SceneVector,
    hyper: &HyperParams,
    rng: &mut R,
) -> Result<PhaseResult<S>> {
    let c = &params.config;
    let t = S::of(hyper.temperature);
    let snapshot = |chain: &Chain<S>| {
        if hyper.use_probabilities {
            chain.probs.clone()
        } else {
            NodeProbs::from_state(&chain.state)
        }
    };
    let mut chain = Chain::new(NetworkState::from_scene(c, scene)?);
    let clamped = ClampMask::visible(c);
    for _ in 0..hyper.k_pos {
        sweep_hidden(params, &mut chain, &clamped, t, rng)?;
    }
    let positive = snapshot(&chain);

    let free = ClampMask::free(c);
    for _ in 0..hyper.k_cd {
        negative_phase_step(params, &mut chain, &free, t, hyper.order, rng)?;
    }
    // hidden statistics given the reconstructed visibles
    sweep_hidden(params, &mut chain, &free, t, rng)?;
    let negative = snapshot(&chain);
    Ok(PhaseResult { positive, negative })
}

fn sample_stream(hyper: &HyperParams, epoch: usize, sample: usize, tag: u64) -> rng::Rng {
    if tag == phase::VALIDATION {
        rng::stream(hyper.seed, &[tag, sample as u64])
    } else {
        rng::stream(hyper.seed, &[tag, epoch as u64, sample as u64])
    }
}

fn phases_for<S: Scalar>(
    params: &ModelParams<S>,
    samples: &[&EncodedScene],
    hyper: &HyperParams,
    epoch: usize,
    tag: u64,
) -> Result<Vec<PhaseResult<S>>> {
    samples
        .par_iter()
        .map(|s| run_phases(params, &s.vector, hyper, &mut sample_stream(hyper, epoch, s.source_index, tag)))
        .collect()
}

/// Batch-mean positive and negative statistics, reduced in sample-index
/// order, plus the reconstruction errors summed over the batch.
pub fn batch_statistics<S: Scalar>(
    params: &ModelParams<S>,
    batch: &[&EncodedScene],
    hyper: &HyperParams,
    epoch: usize,
) -> Result<(EdgeStats<S>, EdgeStats<S>, f64, f64)> {
    let mut sorted = batch.to_vec();
    sorted.sort_by_key(|s| s.source_index);
    let results = phases_for(params, &sorted, hyper, epoch, phase::TRAIN)?;
    let c = &params.config;
    let w = S::one() / S::of(sorted.len() as f64);
    let mut pos = EdgeStats::zeros(c);
    let mut neg = EdgeStats::zeros(c);
    let (mut obj, mut rel) = (0.0, 0.0);
    for (s, r) in sorted.iter().zip(&results) {
        pos.accumulate(c, &r.positive, w);
        neg.accumulate(c, &r.negative, w);
        obj += sample_error(s.vector.objects(), &r.negative.v);
        rel += sample_error(s.vector.relations(), &r.negative.r);
    }
    Ok((pos, neg, obj, rel))
}

/// Mean reconstruction error of `scenes` with epoch-independent streams.
pub fn validation_error<S: Scalar>(
    params: &ModelParams<S>,
    scenes: &[EncodedScene],
    hyper: &HyperParams,
) -> Result<(f64, f64)> {
    let refs: Vec<&EncodedScene> = scenes.iter().collect();
    let results = phases_for(params, &refs, hyper, 0, phase::VALIDATION)?;
    let vectors: Vec<SceneVector> = scenes.iter().map(|s| s.vector.clone()).collect();
    let negatives: Vec<NodeProbs<S>> = results.into_iter().map(|r| r.negative).collect();
    reconstruction_error(&vectors, &negatives)
}

fn check_dataset<S: Scalar>(params: &ModelParams<S>, train: &[EncodedScene], validation: &[EncodedScene]) -> Result<()> {
    if train.is_empty() {
        return Err(Error::EmptyDataset("training set is empty".into()));
    }
    if validation.is_empty() {
        return Err(Error::EmptyDataset("validation set is empty".into()));
    }
    let c = &params.config;
    for s in train.iter().chain(validation) {
        if s.vector.num_objects() != c.num_objects || s.vector.num_types() != c.num_types {
            return Err(Error::ShapeMismatch(format!(
                "scene `{}` has V={}, Tc={}; network has V={}, Tc={}",
                s.scene_id,
                s.vector.num_objects(),
                s.vector.num_types(),
                c.num_objects,
                c.num_types
            )));
        }
    }
    Ok(())
}

/// Trains with early stopping on validation reconstruction error and returns
/// the parameters of the best validation epoch.
pub fn train<S: Scalar>(
    params: &ModelParams<S>,
    train: &[EncodedScene],
    validation: &[EncodedScene],
    hyper: &HyperParams,
) -> Result<(ModelParams<S>, TrainHistory)> {
    resume(params, train, validation, hyper, TrainHistory::default(), |_| {})
}

/// Continues training after `history.len()` completed epochs, calling
/// `on_epoch` after each one. The best-epoch search only covers new epochs.
pub fn resume<S: Scalar>(
    params: &ModelParams<S>,
    train: &[EncodedScene],
    validation: &[EncodedScene],
    hyper: &HyperParams,
    mut history: TrainHistory,
    mut on_epoch: impl FnMut(&EpochRecord),
) -> Result<(ModelParams<S>, TrainHistory)> {
    hyper.validate()?;
    params.check_shapes()?;
    check_dataset(params, train, validation)?;
    let lr = S::of(hyper.learning_rate);
    let first = history.len();
    let mut current = params.clone();
    let mut best: Option<(f64, usize, ModelParams<S>)> = None;
    let mut stale = 0;
    history.stopped_early = false;

    for epoch in first..first + hyper.max_epochs {
        let mut order: Vec<&EncodedScene> = train.iter().collect();
        order.sort_by_key(|s| s.source_index);
        order.shuffle(&mut rng::stream(hyper.seed, &[phase::SHUFFLE, epoch as u64]));
        let (mut obj, mut rel) = (0.0, 0.0);
        for batch in order.chunks(hyper.batch_size) {
            let (pos, neg, o, r) = batch_statistics(&current, batch, hyper, epoch)?;
            obj += o;
            rel += r;
            current = apply_update(&current, &pos, &neg, lr).map_err(|e| match e {
                Error::NonFinite { .. } => Error::Diverged { epoch, last_good: best.as_ref().map(|b| b.1) },
                other => other,
            })?;
        }
        let n = train.len() as f64;
        let (val_obj, val_rel) = validation_error(&current, validation, hyper)?;
        let record = EpochRecord {
            epoch,
            obj_err: obj / n,
            rel_err: rel / n,
            val_err: val_obj + val_rel,
            val_obj_err: val_obj,
            val_rel_err: val_rel,
        };
        history.epochs.push(record);
        history.stop_epoch = Some(epoch);
        on_epoch(&record);

        if best.as_ref().is_none_or(|b| record.val_err < b.0) {
            best = Some((record.val_err, epoch, current.clone()));
            stale = 0;
        } else {
            stale += 1;
            if stale >= hyper.patience {
                history.stopped_early = true;
                break;
            }
        }
    }
    match best {
        Some((_, epoch, p)) => {
            history.best_epoch = Some(epoch);
            Ok((p, history))
        }
        None => Ok((current, history)),
    }
}

#[cfg(test)]
mod tests;
