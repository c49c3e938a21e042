use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How relation→hidden weights are stored.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RhSharing {
    /// One weight column per relation node (`H1 × Tc·V²`).
    #[default]
    PerNode,
    /// One weight column per relation type (`H1 × Tc`).
    PerType,
}

/// Which relation nodes the sampler may switch on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RelationSupport {
    #[default]
    All,
    /// Only relations whose two endpoint objects are both on; the rest are
    /// held at zero.
    ActivePairs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ModelKind {
    #[serde(rename = "RBM")]
    Rbm,
    #[serde(rename = "GBM")]
    Gbm,
    #[serde(rename = "Triway")]
    Triway,
}

impl ModelKind {
    pub fn label(self) -> &'static str {
        match self {
            ModelKind::Rbm => "RBM",
            ModelKind::Gbm => "GBM",
            ModelKind::Triway => "Triway",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

fn default_temperature() -> f64 {
    1.0
}

/// Architecture of one network. The three compared models are points in this
/// space: RBM = one hidden layer without tri-way edges, GBM = two hidden
/// layers without tri-way edges, Triway = two hidden layers with them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NetworkConfig {
    pub num_objects: usize,
    #[serde(default = "NetworkConfig::default_types")]
    pub num_types: usize,
    pub hidden1: usize,
    #[serde(default)]
    pub hidden2: usize,
    #[serde(default)]
    pub use_triway: bool,
    #[serde(default)]
    pub rh_sharing: RhSharing,
    #[serde(default)]
    pub use_biases: bool,
    #[serde(default = "default_temperature")]
    pub temperature: f64,
    #[serde(default)]
    pub relation_support: RelationSupport,
    #[serde(default)]
    pub seed: u64,
}

impl NetworkConfig {
    fn default_types() -> usize {
        4
    }

    fn base(num_objects: usize, num_types: usize, hidden1: usize, hidden2: usize, use_triway: bool) -> Self {
        Self {
            num_objects,
            num_types,
            hidden1,
            hidden2,
            use_triway,
            rh_sharing: RhSharing::PerNode,
            use_biases: false,
            temperature: 1.0,
            relation_support: RelationSupport::All,
            seed: 0,
        }
    }

    pub fn rbm(num_objects: usize, num_types: usize, hidden1: usize) -> Self {
        Self::base(num_objects, num_types, hidden1, 0, false)
    }

    pub fn gbm(num_objects: usize, num_types: usize, hidden1: usize, hidden2: usize) -> Self {
        Self::base(num_objects, num_types, hidden1, hidden2, false)
    }

    pub fn triway(num_objects: usize, num_types: usize, hidden1: usize, hidden2: usize) -> Self {
        Self::base(num_objects, num_types, hidden1, hidden2, true)
    }

    /// The three compared architectures sharing everything else with `self`.
    pub fn family(&self) -> [NetworkConfig; 3] {
        let mut rbm = *self;
        rbm.hidden2 = 0;
        rbm.use_triway = false;
        let mut gbm = *self;
        gbm.use_triway = false;
        let mut tri = *self;
        tri.use_triway = true;
        [rbm, gbm, tri]
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn kind(&self) -> ModelKind {
        match (self.use_triway, self.hidden2) {
            (true, _) => ModelKind::Triway,
            (false, 0) => ModelKind::Rbm,
            (false, _) => ModelKind::Gbm,
        }
    }

    pub fn num_relations(&self) -> usize {
        self.num_types * self.num_objects * self.num_objects
    }

    pub fn num_visible(&self) -> usize {
        self.num_objects + self.num_relations()
    }

    pub fn num_nodes(&self) -> usize {
        self.num_visible() + self.hidden1 + self.hidden2
    }

    /// Columns of the relation→hidden weight matrix.
    pub fn rh_columns(&self) -> usize {
        match self.rh_sharing {
            RhSharing::PerNode => self.num_relations(),
            RhSharing::PerType => self.num_types,
        }
    }

    /// Weight column used by relation node `flat`.
    #[inline]
    pub fn rh_column(&self, flat: usize) -> usize {
        match self.rh_sharing {
            RhSharing::PerNode => flat,
            RhSharing::PerType => flat / (self.num_objects * self.num_objects),
        }
    }

    pub fn num_triway_weights(&self) -> usize {
        if self.use_triway {
            self.num_types
        } else {
            0
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_objects == 0 || self.num_types == 0 || self.hidden1 == 0 {
            return Err(Error::Config(format!(
                "need V >= 1, Tc >= 1, H1 >= 1 (got V={}, Tc={}, H1={})",
                self.num_objects, self.num_types, self.hidden1
            )));
        }
        if !(self.temperature.is_finite() && self.temperature > 0.0) {
            return Err(Error::Temperature(self.temperature));
        }
        Ok(())
    }
}
