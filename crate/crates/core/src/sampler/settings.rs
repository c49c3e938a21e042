use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Geometric temperature schedule over the settle sweeps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Anneal {
    pub start: f64,
    pub end: f64,
}

impl Default for Anneal {
    fn default() -> Self {
        Self { start: 2.0, end: 0.5 }
    }
}

/// Object update order within a negative-phase step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UpdateOrder {
    /// One object at a time in a fresh random permutation. Exact Gibbs.
    #[default]
    SequentialRandom,
    /// All free objects from the same snapshot. Approximate when tri-way
    /// edges couple objects.
    ParallelBlock,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SamplerSettings {
    /// Hidden sweeps with visibles clamped (positive phase and warm-up).
    pub k_pos: usize,
    /// Negative-phase steps per training sample.
    pub k_cd: usize,
    /// Negative-phase steps during inference.
    pub settle_sweeps: usize,
    pub temperature: f64,
    /// Inference-only annealing; overrides `temperature` while settling.
    pub anneal: Option<Anneal>,
    pub order: UpdateOrder,
}

impl Default for SamplerSettings {
    fn default() -> Self {
        Self { k_pos: 5, k_cd: 1, settle_sweeps: 50, temperature: 1.0, anneal: None, order: UpdateOrder::default() }
    }
}

impl SamplerSettings {
    pub fn validate(&self) -> Result<()> {
        if self.k_pos == 0 || self.k_cd == 0 || self.settle_sweeps == 0 {
            return Err(Error::Config("sampler sweep counts must be >= 1".into()));
        }
        if !(self.temperature.is_finite() && self.temperature > 0.0) {
            return Err(Error::Temperature(self.temperature));
        }
        if let Some(a) = self.anneal {
            if !(a.start > 0.0 && a.end > 0.0 && a.end <= a.start && a.start.is_finite()) {
                return Err(Error::Config(format!("bad anneal schedule {} -> {}", a.start, a.end)));
            }
        }
        Ok(())
    }

    /// Temperature of settle sweep `i`.
    pub fn temperature_at(&self, i: usize) -> f64 {
        match self.anneal {
            None => self.temperature,
            Some(a) if self.settle_sweeps <= 1 => a.end,
            Some(a) => {
                let frac = i.min(self.settle_sweeps - 1) as f64 / (self.settle_sweeps - 1) as f64;
                a.start * (a.end / a.start).powf(frac)
            }
        }
    }
}
