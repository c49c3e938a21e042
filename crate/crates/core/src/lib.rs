//! Hybrid tri-way Boltzmann machine for scene modeling.
//!
//! A scene is a sparse binary vector over object labels and canonical spatial
//! relations between label pairs. The model couples those visible units to one
//! or two layers of hidden "context" units, and optionally links every relation
//! node to its two endpoint objects through a tri-way edge whose weight is tied
//! across all object pairs of the same relation type.
//!
//! The crate is organized bottom-up:
//!
//! - [`scene`]: vocabulary, relation folding, encoding, rule-based relation
//!   derivation, synthetic scenes and stratified splits.
//! - [`model`]: configuration, parameters, energy and per-node inputs.
//! - [`checkpoint`]: bit-exact JSON checkpoints.
//! - [`sampler`]: Gibbs sweeps, the object-then-relation negative phase and
//!   conditional completion.
//! - [`trainer`]: contrastive updates with pair-aggregated tri-way statistics.
//! - [`oracle`]: brute-force enumeration for tiny networks.
//! - [`tasks`]: the four scene-reasoning evaluations and model comparison.
//! - [`selfcheck`]: the oracle-backed release checks run by `oracle-check`.
//!
//! All numerics are generic over [`Scalar`] (`f32` or `f64`); the aliases at the
//! crate root pin the common `f64` instantiation.

pub mod checkpoint;
pub mod error;
pub mod model;
pub mod oracle;
pub mod rng;
pub mod sampler;
pub mod scalar;
pub mod scene;
pub mod selfcheck;
pub mod tasks;
pub mod trainer;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub use model::{
    activation_prob, energy, init_params, node_input, ModelKind, ModelParams, NetworkConfig,
    NetworkState, Node, NodeProbs, RelationSupport, RhSharing,
};
pub use sampler::{ClampMask, SamplerSettings};
pub use scene::{
    RawRelation, CanonicalRelation, RelationId, SceneInstance, SceneVector, Vocabulary,
};
pub use tasks::{ChanceLevels, Task, TaskReport};
pub use trainer::{EdgeStats, HyperParams, TrainHistory};

/// Double-precision parameters, the default instantiation.
pub type Params = ModelParams<f64>;
/// Single-precision parameters.
pub type Params32 = ModelParams<f32>;
/// Double-precision node probabilities.
pub type Probs = NodeProbs<f64>;
/// Double-precision edge statistics.
pub type Stats = EdgeStats<f64>;
