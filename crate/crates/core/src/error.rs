use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown relation name `{0}`")]
    UnknownRelation(String),

    #[error("label `{0}` is not in the vocabulary")]
    UnknownLabel(String),

    #[error("invalid vocabulary: {0}")]
    InvalidVocabulary(String),

    #[error("invalid scene `{scene}`: {reason}")]
    InvalidScene { scene: String, reason: String },

    #[error("scene `{scene}`: instances without a box: {instances:?}")]
    MissingBox { scene: String, instances: Vec<u64> },

    #[error("invalid synthetic spec: {0}")]
    InvalidSynthSpec(String),

    #[error("cannot split dataset: {0}")]
    Split(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("index out of range: {0}")]
    IndexOutOfRange(String),

    #[error("temperature must be positive, got {0}")]
    Temperature(f64),

    #[error("non-finite value in weight family `{family}`")]
    NonFinite { family: &'static str },

    #[error("training diverged at epoch {epoch} (last good epoch: {last_good:?})")]
    Diverged { epoch: usize, last_good: Option<usize> },

    #[error("empty dataset: {0}")]
    EmptyDataset(String),

    #[error("network has {nodes} nodes, enumeration limit is {limit}")]
    TooLarge { nodes: usize, limit: usize },

    #[error("checkpoint format version {found}, expected {expected}")]
    VersionMismatch { found: u32, expected: u32 },

    #[error("malformed checkpoint: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
