use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::instance::SceneInstance;
use super::vector::{encode_scene, SceneVector};
use super::vocab::Vocabulary;
use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitRatios {
    pub train: f64,
    pub test: f64,
    pub validation: f64,
}

impl Default for SplitRatios {
    fn default() -> Self {
        Self { train: 0.6, test: 0.3, validation: 0.1 }
    }
}

impl SplitRatios {
    pub fn new(train: f64, test: f64, validation: f64) -> Result<Self> {
        let r = Self { train, test, validation };
        let parts = [train, test, validation];
        if parts.iter().any(|p| !(p.is_finite() && *p > 0.0)) || (parts.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::Split(format!("ratios must be positive and sum to 1, got {parts:?}")));
        }
        Ok(r)
    }

    /// Per-split counts for a group of `n`: largest-remainder rounding, then
    /// every split is topped up to at least one scene.
    fn counts(&self, n: usize) -> [usize; 3] {
        let ratios = [self.train, self.test, self.validation];
        let exact: Vec<f64> = ratios.iter().map(|r| r * n as f64).collect();
        let mut counts: [usize; 3] = [0; 3];
        for i in 0..3 {
            counts[i] = (exact[i] + 1e-9).floor() as usize;
        }
        let mut order: Vec<usize> = (0..3).collect();
        order.sort_by(|&a, &b| (exact[b] - exact[b].floor()).total_cmp(&(exact[a] - exact[a].floor())));
        let mut remaining = n - counts.iter().sum::<usize>();
        for &i in order.iter().cycle() {
            if remaining == 0 {
                break;
            }
            counts[i] += 1;
            remaining -= 1;
        }
        while let Some(empty) = counts.iter().position(|&c| c == 0) {
            let largest = (0..3).max_by_key(|&i| (counts[i], 3 - i)).unwrap();
            counts[largest] -= 1;
            counts[empty] += 1;
        }
        counts
    }
}

/// A scene in a split: its encoded vector plus a reference to the source.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncodedScene {
    pub source_index: usize,
    pub scene_id: String,
    pub category: String,
    pub vector: SceneVector,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSplit {
    pub train: Vec<EncodedScene>,
    pub test: Vec<EncodedScene>,
    pub validation: Vec<EncodedScene>,
}

impl DatasetSplit {
    pub fn all(&self) -> impl Iterator<Item = &EncodedScene> {
        self.train.iter().chain(&self.test).chain(&self.validation)
    }

    pub fn num_objects(&self) -> Option<usize> {
        self.all().next().map(|s| s.vector.num_objects())
    }
}

/// Stratified, seeded 3-way split. Every category appears in every split.
pub fn split_dataset(
    scenes: &[SceneInstance],
    vocab: &Vocabulary,
    ratios: SplitRatios,
    seed: u64,
) -> Result<DatasetSplit> {
    let ratios = SplitRatios::new(ratios.train, ratios.test, ratios.validation)?;
    if scenes.is_empty() {
        return Err(Error::Split("no scenes".into()));
    }
    let mut by_category: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, s) in scenes.iter().enumerate() {
        by_category.entry(&s.category).or_default().push(i);
    }
    let mut parts: [Vec<usize>; 3] = Default::default();
    for (ordinal, (category, mut indices)) in by_category.into_iter().enumerate() {
        if indices.len() < 3 {
            return Err(Error::Split(format!(
                "category `{category}` has {} scenes, need at least 3",
                indices.len()
            )));
        }
        let counts = ratios.counts(indices.len());
        indices.shuffle(&mut rng::stream(seed, &[rng::phase::SHUFFLE, ordinal as u64]));
        let mut start = 0;
        for (part, count) in parts.iter_mut().zip(counts) {
            part.extend_from_slice(&indices[start..start + count]);
            start += count;
        }
    }
    let encode = |mut idx: Vec<usize>| -> Result<Vec<EncodedScene>> {
        idx.sort_unstable();
        idx.into_iter()
            .map(|i| {
                let s = &scenes[i];
                Ok(EncodedScene {
                    source_index: i,
                    scene_id: s.scene_id.clone(),
                    category: s.category.clone(),
                    vector: encode_scene(s, vocab)?,
                })
            })
            .collect()
    };
    let [train, test, validation] = parts;
    Ok(DatasetSplit { train: encode(train)?, test: encode(test)?, validation: encode(validation)? })
}
