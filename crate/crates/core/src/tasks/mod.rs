//! The four scene-reasoning evaluations.
//!
//! 1. Relation estimation: objects clamped, relations inferred.
//! 2. Missing object: one object and its relations removed, top-1 recovery.
//! 3. Out of context: one object swapped for an absent one, objects
//!    re-settled; error is the fraction of wrong object bits.
//! 4. Generation from clamped hidden units or a partial scene.
//!
//! Every scene gets its own random stream keyed by (seed, task, scene index),
//! so reports do not depend on scene order or thread count.

mod compare;

pub use compare::{compare_models, Comparison, ComparisonRow};

use rand::seq::IndexedRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ModelParams, NetworkConfig, NetworkState, Node};
use crate::rng::{self, phase};
use crate::sampler::{conditional_complete, generate_from_hidden, sweep_hidden, Chain, ClampMask, SamplerSettings};
use crate::scalar::Scalar;
use crate::scene::{decode_scene, EncodedScene, MotifTable, SceneInstance, SceneVector, Vocabulary};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(into = "u8", try_from = "u8")]
pub enum Task {
    Relations = 1,
    MissingObject = 2,
    OutOfContext = 3,
    Generate = 4,
}

impl From<Task> for u8 {
    fn from(t: Task) -> u8 {
        t as u8
    }
}

impl TryFrom<u8> for Task {
    type Error = Error;
    fn try_from(n: u8) -> Result<Self> {
        match n {
            1 => Ok(Task::Relations),
            2 => Ok(Task::MissingObject),
            3 => Ok(Task::OutOfContext),
            4 => Ok(Task::Generate),
            _ => Err(Error::Config(format!("no task {n}; expected 1-4"))),
        }
    }
}

impl Task {
    pub fn name(self) -> &'static str {
        match self {
            Task::Relations => "relation estimation",
            Task::MissingObject => "missing object",
            Task::OutOfContext => "out of context",
            Task::Generate => "generation",
        }
    }

    /// Lower metric is better for this task.
    pub fn lower_is_better(self) -> bool {
        self == Task::OutOfContext
    }
}

/// One scene's contribution: the aggregate is `Σ hits / Σ count`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneRecord {
    pub scene_id: String,
    pub category: String,
    pub hits: f64,
    pub count: f64,
    /// Task 2/3: the removed object.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub removed: Option<usize>,
    /// Task 3: the inserted object.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub added: Option<usize>,
    /// Task 2: the top-1 prediction.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub predicted: Option<usize>,
    /// Task 2: whether the removed object is on in the final sample.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub in_sample: Option<bool>,
}

impl SceneRecord {
    fn new(scene: &EncodedScene, hits: f64, count: f64) -> Self {
        Self {
            scene_id: scene.scene_id.clone(),
            category: scene.category.clone(),
            hits,
            count,
            removed: None,
            added: None,
            predicted: None,
            in_sample: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskReport {
    pub task: Task,
    pub model: String,
    pub seed: u64,
    pub metric: f64,
    pub chance: f64,
    /// Scenes that did not meet the task's preconditions.
    pub skipped: Vec<String>,
    pub records: Vec<SceneRecord>,
}

impl TaskReport {
    fn build(task: Task, config: &NetworkConfig, seed: u64, records: Vec<SceneRecord>, skipped: Vec<String>) -> Self {
        let chance = ChanceLevels::of(config).for_task(task);
        let mut r = Self { task, model: config.kind().label().into(), seed, metric: 0.0, chance, skipped, records };
        r.metric = r.recompute();
        r
    }

    /// Aggregate metric from the per-scene records.
    pub fn recompute(&self) -> f64 {
        let (h, c) = self.records.iter().fold((0.0, 0.0), |(h, c), r| (h + r.hits, c + r.count));
        if c == 0.0 {
            0.0
        } else {
            h / c
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Per-scene CSV.
    pub fn to_csv(&self) -> String {
        let opt = |x: Option<usize>| x.map(|v| v.to_string()).unwrap_or_default();
        let mut out = String::from("scene_id,category,hits,count,removed,added,predicted,in_sample\n");
        for r in &self.records {
            out += &format!(
                "{},{},{},{},{},{},{},{}\n",
                r.scene_id,
                r.category,
                r.hits,
                r.count,
                opt(r.removed),
                opt(r.added),
                opt(r.predicted),
                r.in_sample.map(|b| b.to_string()).unwrap_or_default()
            );
        }
        out
    }

    /// Plain-text summary: model metric and chance.
    pub fn to_text(&self) -> String {
        let w = self.model.len().max(6);
        let mut out = format!(
            "Task {} ({}), seed {}\n{:<w$}  {:>12}\n{:<w$}  {:>12.6}\n",
            self.task as u8,
            self.task.name(),
            self.seed,
            "model",
            "metric",
            self.model,
            self.metric,
        );
        match self.task {
            Task::Generate => {}
            Task::MissingObject => {
                // the uniform top-1 guess is 1/V; 1/V² is the other figure in circulation
                out += &format!("{:<w$}  {:>12.6e}\n", "chance", self.chance);
                out += &format!("{:<w$}  {:>12.6e}\n", "1/V^2", self.chance * self.chance);
            }
            _ => out += &format!("{:<w$}  {:>12.6e}\n", "chance", self.chance),
        }
        out
    }
}

/// Chance levels per task.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChanceLevels {
    /// One relation node: `1 / (Tc·V²)`.
    pub task1: f64,
    /// Uniform top-1 guess over objects: `1 / V`.
    pub task2: f64,
    /// `1 / V²`, the figure usually quoted for this task.
    pub task2_quoted: f64,
    pub task3: f64,
}

impl ChanceLevels {
    pub fn of(config: &NetworkConfig) -> Self {
        let v = config.num_objects as f64;
        Self {
            task1: 1.0 / (config.num_types as f64 * v * v),
            task2: 1.0 / v,
            task2_quoted: 1.0 / (v * v),
            task3: 0.5,
        }
    }

    pub fn for_task(&self, task: Task) -> f64 {
        match task {
            Task::Relations => self.task1,
            Task::MissingObject => self.task2,
            Task::OutOfContext => self.task3,
            // no meaningful uniform baseline for generation
            Task::Generate => 0.0,
        }
    }
}

pub fn chance_levels(config: &NetworkConfig) -> ChanceLevels {
    ChanceLevels::of(config)
}

fn check_scenes<S: Scalar>(params: &ModelParams<S>, scenes: &[EncodedScene]) -> Result<()> {
    let c = &params.config;
    for s in scenes {
        if s.vector.num_objects() != c.num_objects || s.vector.num_types() != c.num_types {
            return Err(Error::ShapeMismatch(format!(
                "scene `{}` has V={}, Tc={}; model has V={}, Tc={}",
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

/// Runs `f` on every scene in parallel, each with its own stream, keeping
/// input order. `None` marks a skipped scene.
fn per_scene<F>(scenes: &[EncodedScene], seed: u64, tag: u64, f: F) -> Result<(Vec<SceneRecord>, Vec<String>)>
where
    F: Fn(&EncodedScene, &mut rng::Rng) -> Result<Option<SceneRecord>> + Sync,
{
    let out: Vec<Option<SceneRecord>> = scenes
        .par_iter()
        .map(|s| f(s, &mut rng::stream(seed, &[tag, s.source_index as u64])))
        .collect::<Result<_>>()?;
    let mut records = Vec::new();
    let mut skipped = Vec::new();
    for (s, r) in scenes.iter().zip(out) {
        match r {
            Some(r) => records.push(r),
            None => skipped.push(s.scene_id.clone()),
        }
    }
    Ok((records, skipped))
}

/// Task 1: clamp every object node to the scene, leave relations free, and
/// count a ground-truth relation as recovered when its averaged activation
/// probability is at least 0.5. Scenes without relations are skipped.
pub fn task1_relation_estimation<S: Scalar>(
    params: &ModelParams<S>,
    scenes: &[EncodedScene],
    settings: &SamplerSettings,
    seed: u64,
) -> Result<TaskReport> {
    check_scenes(params, scenes)?;
    let c = &params.config;
    let mask = ClampMask::objects(c);
    let half = S::of(0.5);
    let (records, skipped) = per_scene(scenes, seed, phase::TASK1, |s, rng| {
        let truth = s.vector.relations();
        if truth.is_empty() {
            return Ok(None);
        }
        let (_, probs) = conditional_complete(params, &s.vector.objects_only(), &mask, settings, rng)?;
        let correct = truth.iter().filter(|&&f| probs.r[f] >= half).count();
        Ok(Some(SceneRecord::new(s, correct as f64, truth.len() as f64)))
    })?;
    Ok(TaskReport::build(Task::Relations, c, seed, records, skipped))
}

/// Task 2: remove one random object with its relations, clamp the rest of
/// the scene (objects and surviving relations), and predict the free object
/// with the highest averaged activation probability (ties to the lowest
/// index). Scenes with fewer than two objects are skipped.
pub fn task2_missing_object<S: Scalar>(
    params: &ModelParams<S>,
    scenes: &[EncodedScene],
    settings: &SamplerSettings,
    seed: u64,
) -> Result<TaskReport> {
    check_scenes(params, scenes)?;
    let c = &params.config;
    let (records, skipped) = per_scene(scenes, seed, phase::TASK2, |s, rng| {
        let objects = s.vector.objects();
        if objects.len() < 2 {
            return Ok(None);
        }
        let removed = *objects.choose(rng).expect("non-empty");
        let partial = s.vector.without_object(removed);
        let mut mask = ClampMask::free(c);
        for &j in partial.objects() {
            mask.objects[j] = true;
        }
        for &f in partial.relations() {
            mask.relations[f] = true;
        }
        let (state, probs) = conditional_complete(params, &partial, &mask, settings, rng)?;
        let mut predicted = None;
        for j in (0..c.num_objects).filter(|&j| !mask.objects[j]) {
            if predicted.is_none_or(|p: usize| probs.v[j] > probs.v[p]) {
                predicted = Some(j);
            }
        }
        let hit = predicted == Some(removed);
        let mut r = SceneRecord::new(s, f64::from(u8::from(hit)), 1.0);
        r.removed = Some(removed);
        r.predicted = predicted;
        r.in_sample = Some(state.v[removed]);
        Ok(Some(r))
    })?;
    Ok(TaskReport::build(Task::MissingObject, c, seed, records, skipped))
}

/// Corrupts a scene for task 3: drops one random active object (with its
/// relations) and inserts one random absent object. Deterministic in `rng`.
pub fn corrupt_scene<R: rand::Rng + ?Sized>(scene: &SceneVector, rng: &mut R) -> Option<(SceneVector, usize, usize)> {
    let v = scene.num_objects();
    let absent: Vec<usize> = (0..v).filter(|&j| !scene.has_object(j)).collect();
    let removed = *scene.objects().choose(rng)?;
    let added = *absent.choose(rng)?;
    let corrupted = scene.without_object(removed).with_object(added).ok()?;
    Some((corrupted, removed, added))
}

/// Task 3: start from the corrupted scene with relation nodes clamped to it,
/// let the hidden units settle, then release the object nodes. The error is
/// the number of object bits in the final sample that differ from the
/// original scene, over `V` per scene.
pub fn task3_out_of_context<S: Scalar>(
    params: &ModelParams<S>,
    scenes: &[EncodedScene],
    settings: &SamplerSettings,
    seed: u64,
) -> Result<TaskReport> {
    check_scenes(params, scenes)?;
    let c = &params.config;
    let mask = ClampMask::relations(c);
    let (records, skipped) = per_scene(scenes, seed, phase::TASK3, |s, rng| {
        let Some((corrupted, removed, added)) = corrupt_scene(&s.vector, rng) else {
            return Ok(None);
        };
        let (state, _) = conditional_complete(params, &corrupted, &mask, settings, rng)?;
        let wrong = (0..c.num_objects).filter(|&j| state.v[j] != s.vector.has_object(j)).count();
        let mut r = SceneRecord::new(s, wrong as f64, c.num_objects as f64);
        r.removed = Some(removed);
        r.added = Some(added);
        Ok(Some(r))
    })?;
    Ok(TaskReport::build(Task::OutOfContext, c, seed, records, skipped))
}

/// What task 4 clamps.
#[derive(Debug, Clone, PartialEq)]
pub enum GenerationSeed {
    /// These hidden units on, all others start off and stay free.
    Hidden(Vec<Node>),
    /// These objects (and relations) clamped, everything else free.
    Partial(SceneVector),
}

/// Generated scenes plus a report whose metric is the fraction of
/// generations containing at least one motif relation (of `category` when
/// given, of any category otherwise).
#[derive(Debug, Clone, PartialEq)]
pub struct Generation {
    pub scenes: Vec<SceneVector>,
    pub decoded: Vec<SceneInstance>,
    pub report: TaskReport,
}

#[allow(clippy::too_many_arguments)]
pub fn task4_generate<S: Scalar>(
    params: &ModelParams<S>,
    seed_units: &GenerationSeed,
    count: usize,
    settings: &SamplerSettings,
    vocab: &Vocabulary,
    motifs: Option<(&MotifTable, Option<&str>)>,
    seed: u64,
) -> Result<Generation> {
    let c = &params.config;
    if vocab.num_objects() != c.num_objects {
        return Err(Error::ShapeMismatch(format!(
            "vocabulary has {} objects, model {}",
            vocab.num_objects(),
            c.num_objects
        )));
    }
    let scenes: Vec<SceneVector> = (0..count)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng::stream(seed, &[phase::TASK4, i as u64]);
            let (state, _) = match seed_units {
                GenerationSeed::Hidden(nodes) => generate_from_hidden(params, nodes, settings, &mut rng)?,
                GenerationSeed::Partial(partial) => {
                    let mut mask = ClampMask::free(c);
                    for &j in partial.objects() {
                        mask.objects[j] = true;
                    }
                    for &f in partial.relations() {
                        mask.relations[f] = true;
                    }
                    conditional_complete(params, partial, &mask, settings, &mut rng)?
                }
            };
            Ok(state.visible_scene(c))
        })
        .collect::<Result<_>>()?;
    let category = motifs.and_then(|(_, cat)| cat).unwrap_or("generated");
    let mut decoded = Vec::with_capacity(count);
    let mut records = Vec::with_capacity(count);
    for (i, sv) in scenes.iter().enumerate() {
        let id = format!("gen-{i:04}");
        decoded.push(decode_scene(sv, vocab, id.clone(), category)?);
        let hits = match motifs {
            Some((table, Some(cat))) => table.hits(cat, sv),
            Some((table, None)) => table.hits_any(sv),
            None => 0,
        };
        records.push(SceneRecord {
            scene_id: id,
            category: category.into(),
            hits: f64::from(u8::from(hits > 0)),
            count: 1.0,
            removed: None,
            added: None,
            predicted: None,
            in_sample: None,
        });
    }
    let report = TaskReport::build(Task::Generate, c, seed, records, Vec::new());
    Ok(Generation { scenes, decoded, report })
}

/// Mean bottom-layer hidden probabilities with `scene` clamped.
pub fn hidden_profile<S: Scalar>(
    params: &ModelParams<S>,
    scene: &SceneVector,
    settings: &SamplerSettings,
    rng: &mut rng::Rng,
) -> Result<Vec<f64>> {
    let c = &params.config;
    let mut chain = Chain::new(NetworkState::from_scene(c, scene)?);
    let mask = ClampMask::visible(c);
    let t = S::of(settings.temperature);
    let mut mean = vec![0.0; c.hidden1];
    for _ in 0..settings.k_pos {
        sweep_hidden(params, &mut chain, &mask, t, rng)?;
        for (m, p) in mean.iter_mut().zip(&chain.probs.h1) {
            *m += p.as_f64() / settings.k_pos as f64;
        }
    }
    Ok(mean)
}

/// The bottom-layer hidden unit whose mean activation on `category` scenes
/// exceeds its mean over all `scenes` by the largest margin. When every scene
/// is of that category, simply the most active unit.
pub fn category_hidden_unit<S: Scalar>(
    params: &ModelParams<S>,
    scenes: &[EncodedScene],
    category: &str,
    settings: &SamplerSettings,
    seed: u64,
) -> Result<Node> {
    check_scenes(params, scenes)?;
    let profiles: Vec<Vec<f64>> = scenes
        .par_iter()
        .map(|s| hidden_profile(params, &s.vector, settings, &mut rng::stream(seed, &[phase::TASK4, s.source_index as u64])))
        .collect::<Result<_>>()?;
    let h = params.config.hidden1;
    let mut all = vec![0.0; h];
    let mut cat = vec![0.0; h];
    let mut n_cat = 0usize;
    for (s, p) in scenes.iter().zip(&profiles) {
        for m in 0..h {
            all[m] += p[m];
            if s.category == category {
                cat[m] += p[m];
            }
        }
        n_cat += usize::from(s.category == category);
    }
    if n_cat == 0 {
        return Err(Error::EmptyDataset(format!("no scenes of category `{category}`")));
    }
    // contrast against the other categories; with none, plain activity
    let baseline = if n_cat == scenes.len() { 0.0 } else { 1.0 };
    let score = |m: usize| cat[m] / n_cat as f64 - baseline * all[m] / scenes.len() as f64;
    let best = (0..h).fold(0, |b, m| if score(m) > score(b) { m } else { b });
    Ok(Node::Hidden1(best))
}

/// Runs tasks 1–3 on `scenes`.
pub fn run_tasks<S: Scalar>(
    params: &ModelParams<S>,
    scenes: &[EncodedScene],
    settings: &SamplerSettings,
    seed: u64,
) -> Result<[TaskReport; 3]> {
    Ok([
        task1_relation_estimation(params, scenes, settings, seed)?,
        task2_missing_object(params, scenes, settings, seed)?,
        task3_out_of_context(params, scenes, settings, seed)?,
    ])
}
