//! Network configuration, parameters, energy and per-node inputs.

mod config;
mod energy;
mod params;
mod state;

pub use config::{ModelKind, NetworkConfig, RelationSupport, RhSharing};
pub use energy::{
    activation_prob, energy, energy_terms, hidden1_inputs, hidden2_inputs, node_input, object_hidden_drive,
    object_triway_input, relation_hidden_drive, relation_input, EnergyTerms,
};
pub(crate) use energy::sigmoid;
pub use params::{init_params, Biases, Family, ModelParams};
pub use state::{NetworkState, Node, NodeProbs};
