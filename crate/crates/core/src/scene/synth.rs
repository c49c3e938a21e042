//! Seeded synthetic scenes with known relation motifs.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::instance::SceneInstance;
use super::relation::{CanonicalRelation, RelationId};
use super::vector::SceneVector;
use super::vocab::Vocabulary;
use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnchorSpec {
    pub label: usize,
    pub probability: f64,
}

/// Canonical relation that holds whenever both endpoints are present.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MotifSpec {
    pub relation: CanonicalRelation,
    pub subject: usize,
    pub object: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategorySpec {
    pub name: String,
    pub anchors: Vec<AnchorSpec>,
    #[serde(default)]
    pub motifs: Vec<MotifSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub n_categories: usize,
    pub num_objects: usize,
    /// Object labels; `obj0 ..` when omitted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
    pub categories: Vec<CategorySpec>,
    /// Probability of dropping each motif relation, and of adding one random
    /// extra object per scene.
    pub noise_rate: f64,
    pub scenes_per_category: usize,
    pub seed: u64,
}

/// Ground-truth motif relations per category.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MotifTable(pub BTreeMap<String, Vec<RelationId>>);

impl MotifTable {
    pub fn motifs(&self, category: &str) -> &[RelationId] {
        self.0.get(category).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn categories(&self) -> impl Iterator<Item = &str> {
        self.0.keys().map(String::as_str)
    }

    /// Number of `category` motif relations active in `sv`.
    pub fn hits(&self, category: &str, sv: &SceneVector) -> usize {
        let v = sv.num_objects();
        self.motifs(category).iter().filter(|m| sv.has_relation(m.flat(v))).count()
    }

    /// Number of motif relations of any category active in `sv`.
    pub fn hits_any(&self, sv: &SceneVector) -> usize {
        let v = sv.num_objects();
        let all: BTreeSet<usize> = self.0.values().flatten().map(|m| m.flat(v)).collect();
        all.into_iter().filter(|&f| sv.has_relation(f)).count()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthOutput {
    pub vocabulary: Vocabulary,
    pub scenes: Vec<SceneInstance>,
    pub motifs: MotifTable,
}

impl SynthSpec {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let spec: SynthSpec = serde_json::from_str(&text)?;
        spec.validate()?;
        Ok(spec)
    }

    /// Thirty labels, five categories of one hundred scenes each.
    pub fn desk_fixture() -> Self {
        serde_json::from_str(include_str!("../../fixtures/synth_fixture.json")).expect("bundled fixture parses")
    }

    pub fn vocabulary(&self) -> Result<Vocabulary> {
        match &self.labels {
            Some(labels) => Vocabulary::new(labels.iter().cloned()),
            None => Ok(Vocabulary::numbered(self.num_objects)),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidSynthSpec(m));
        if self.categories.len() != self.n_categories {
            return bad(format!("n_categories = {} but {} categories given", self.n_categories, self.categories.len()));
        }
        if !(0.0..=1.0).contains(&self.noise_rate) {
            return bad(format!("noise_rate {} outside [0, 1]", self.noise_rate));
        }
        if let Some(labels) = &self.labels {
            if labels.len() != self.num_objects {
                return bad(format!("{} labels for num_objects = {}", labels.len(), self.num_objects));
            }
        }
        let mut names = BTreeSet::new();
        for c in &self.categories {
            if !names.insert(&c.name) {
                return bad(format!("duplicate category `{}`", c.name));
            }
            if c.anchors.is_empty() {
                return bad(format!("category `{}` has no anchors", c.name));
            }
            for a in &c.anchors {
                if a.label >= self.num_objects {
                    return bad(format!("anchor label {} >= {}", a.label, self.num_objects));
                }
                if !(0.0..=1.0).contains(&a.probability) {
                    return bad(format!("anchor probability {} outside [0, 1]", a.probability));
                }
            }
            for m in &c.motifs {
                if m.subject >= self.num_objects || m.object >= self.num_objects {
                    return bad(format!("motif {:?} references a label >= {}", m, self.num_objects));
                }
            }
        }
        Ok(())
    }

    pub fn motif_table(&self) -> MotifTable {
        MotifTable(
            self.categories
                .iter()
                .map(|c| {
                    let mut ids: Vec<RelationId> = c
                        .motifs
                        .iter()
                        .map(|m| RelationId::new(m.relation.index(), m.subject, m.object))
                        .collect();
                    ids.sort();
                    ids.dedup();
                    (c.name.clone(), ids)
                })
                .collect(),
        )
    }
}

fn generate_scene(spec: &SynthSpec, vocab: &Vocabulary, ci: usize, si: usize) -> SceneInstance {
    let category = &spec.categories[ci];
    let mut rng = rng::stream(spec.seed, &[ci as u64, si as u64]);

    let mut present = BTreeSet::new();
    for a in &category.anchors {
        if rng.random::<f64>() < a.probability {
            present.insert(a.label);
        }
    }
    if rng.random::<f64>() < spec.noise_rate {
        let absent: Vec<usize> = (0..spec.num_objects).filter(|j| !present.contains(j)).collect();
        if !absent.is_empty() {
            present.insert(absent[rng.random_range(0..absent.len())]);
        }
    }
    if present.is_empty() {
        let best = category
            .anchors
            .iter()
            .max_by(|a, b| a.probability.total_cmp(&b.probability))
            .expect("validated non-empty");
        present.insert(best.label);
    }

    let mut scene = SceneInstance::new(format!("{}-{si:04}", category.name), category.name.clone());
    for (instance, &label) in present.iter().enumerate() {
        scene = scene.with_object(instance as u64, vocab.labels()[label].clone(), None);
    }
    let instance_of = |label: usize| present.iter().position(|&l| l == label).unwrap() as u64;
    for m in &category.motifs {
        if m.subject == m.object || !present.contains(&m.subject) || !present.contains(&m.object) {
            continue;
        }
        if rng.random::<f64>() < spec.noise_rate {
            continue;
        }
        let raw = m.relation.as_raw();
        let (s, o) = (instance_of(m.subject), instance_of(m.object));
        scene = if rng.random::<bool>() {
            scene.with_relation(raw, s, o)
        } else {
            scene.with_relation(raw.opposite(), o, s)
        };
    }
    scene
}

/// Draws `scenes_per_category` scenes for each category, in category order.
///
/// Each scene uses its own stream keyed by (category, index), so the output is
/// a pure function of the spec.
pub fn synth_generate(spec: &SynthSpec) -> Result<SynthOutput> {
    spec.validate()?;
    let vocabulary = spec.vocabulary()?;
    let scenes = (0..spec.categories.len())
        .flat_map(|ci| (0..spec.scenes_per_category).map(move |si| (ci, si)))
        .map(|(ci, si)| generate_scene(spec, &vocabulary, ci, si))
        .collect();
    Ok(SynthOutput { vocabulary, scenes, motifs: spec.motif_table() })
}
