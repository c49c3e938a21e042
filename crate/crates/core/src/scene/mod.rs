//! Scene representation and dataset tooling.

mod derive;
mod instance;
mod relation;
mod split;
mod synth;
mod vector;
mod vocab;

pub use derive::{derive_relations, Thresholds};
pub use instance::{load_scenes, OrientedBox, SceneInstance, SceneObject, SceneRelation};
pub use relation::{CanonicalRelation, RawRelation, RelationId};
pub use split::{split_dataset, DatasetSplit, EncodedScene, SplitRatios};
pub use synth::{synth_generate, AnchorSpec, CategorySpec, MotifSpec, MotifTable, SynthOutput, SynthSpec};
pub use vector::{decode_scene, encode_scene, implied_dimension, SceneVector};
pub use vocab::Vocabulary;
