use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use scenebm::{HyperParams, ModelKind, NetworkConfig, RelationSupport, RhSharing, SamplerSettings, Task};

/// Architecture as written in a run config. Object and relation counts come
/// from the data unless pinned here.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelSection {
    pub kind: ModelKind,
    pub num_objects: Option<usize>,
    pub num_types: usize,
    pub hidden1: usize,
    pub hidden2: usize,
    pub rh_sharing: RhSharing,
    pub use_biases: bool,
    pub temperature: f64,
    pub relation_support: RelationSupport,
}

impl Default for ModelSection {
    fn default() -> Self {
        Self {
            kind: ModelKind::Triway,
            num_objects: None,
            num_types: 4,
            hidden1: 200,
            hidden2: 100,
            rh_sharing: RhSharing::PerNode,
            use_biases: false,
            temperature: 1.0,
            relation_support: RelationSupport::All,
        }
    }
}

impl ModelSection {
    pub fn network(&self, num_objects: usize, seed: u64) -> Result<NetworkConfig> {
        if let Some(v) = self.num_objects {
            if v != num_objects {
                bail!("config pins {v} object labels but the data has {num_objects}");
            }
        }
        let hidden2 = if self.kind == ModelKind::Rbm { 0 } else { self.hidden2 };
        if self.kind != ModelKind::Rbm && hidden2 == 0 {
            bail!("{} needs hidden2 > 0", self.kind);
        }
        let mut c = NetworkConfig::gbm(num_objects, self.num_types, self.hidden1, hidden2);
        c.use_triway = self.kind == ModelKind::Triway;
        c.rh_sharing = self.rh_sharing;
        c.use_biases = self.use_biases;
        c.temperature = self.temperature;
        c.relation_support = self.relation_support;
        c.seed = seed;
        c.validate()?;
        Ok(c)
    }
}

/// Everything one experiment needs. Relative paths resolve against the
/// config file's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    /// Directory holding `train.json`, `validation.json`, `test.json` and
    /// `vocabulary.json` as written by `split`.
    pub data_dir: PathBuf,
    pub checkpoint: PathBuf,
    pub report_dir: PathBuf,
    pub model: ModelSection,
    pub hyper: HyperParams,
    pub sampler: SamplerSettings,
    pub tasks: Vec<Task>,
    pub seeds: Vec<u64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            data_dir: "data".into(),
            checkpoint: "run/checkpoint.json".into(),
            report_dir: "run".into(),
            model: ModelSection::default(),
            hyper: HyperParams::default(),
            sampler: SamplerSettings::default(),
            tasks: vec![Task::Relations, Task::MissingObject, Task::OutOfContext],
            seeds: vec![0],
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let mut cfg: RunConfig =
            serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [&mut cfg.data_dir, &mut cfg.checkpoint, &mut cfg.report_dir] {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }

    pub fn load_or_default(path: Option<&Path>) -> Result<Self> {
        match path {
            Some(p) => Self::load(p),
            None => Ok(Self::default()),
        }
    }

    /// Flags win over the file.
    pub fn override_with(&mut self, seed: Option<u64>, out: Option<&Path>, data: Option<&Path>) {
        if let Some(s) = seed {
            self.seeds = vec![s];
            self.hyper.seed = s;
        }
        if let Some(o) = out {
            self.report_dir = o.to_path_buf();
            self.checkpoint = o.join("checkpoint.json");
        }
        if let Some(d) = data {
            self.data_dir = d.to_path_buf();
        }
    }

    pub fn seed(&self) -> u64 {
        self.seeds.first().copied().unwrap_or(self.hyper.seed)
    }

    pub fn validate(&self) -> Result<()> {
        self.hyper.validate()?;
        self.sampler.validate()?;
        if self.seeds.is_empty() {
            bail!("config lists no seeds");
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_follow_the_training_recipe() {
        let c = RunConfig::default();
        assert_eq!(c.hyper.learning_rate, 0.5);
        assert_eq!(c.hyper.batch_size, 32);
        assert_eq!(c.hyper.temperature, 1.0);
        assert_eq!((c.model.hidden1, c.model.hidden2), (200, 100));
        assert!(!c.model.use_biases);
    }

    #[test]
    fn partial_file_fills_defaults() {
        let c: RunConfig = serde_json::from_str(r#"{"model": {"kind": "RBM", "hidden1": 8}, "hyper": {"alpha": 0.1}}"#).unwrap();
        assert_eq!(c.hyper.learning_rate, 0.1);
        let net = c.model.network(5, 0).unwrap();
        assert_eq!((net.hidden1, net.hidden2, net.use_triway), (8, 0, false));
    }

    #[test]
    fn pinned_object_count_must_match() {
        let m = ModelSection { num_objects: Some(4), ..Default::default() };
        assert!(m.network(5, 0).is_err());
    }

    #[test]
    fn flags_override_file() {
        let mut c = RunConfig::default();
        c.override_with(Some(9), Some(Path::new("/tmp/x")), None);
        assert_eq!(c.seeds, vec![9]);
        assert_eq!(c.hyper.seed, 9);
        assert_eq!(c.checkpoint, Path::new("/tmp/x/checkpoint.json"));
    }
}
