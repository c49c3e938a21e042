use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::relation::{CanonicalRelation, RawRelation, RelationId};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
struct VocabularyFile {
    objects: Vec<String>,
    canonical_relations: Vec<String>,
}

/// Ordered object labels (index = object node id) plus the fixed relation set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "VocabularyFile", into = "VocabularyFile")]
pub struct Vocabulary {
    objects: Vec<String>,
    #[serde(skip)]
    index: HashMap<String, usize>,
}

impl TryFrom<VocabularyFile> for Vocabulary {
    type Error = Error;

    fn try_from(file: VocabularyFile) -> Result<Self> {
        let expected: Vec<&str> = CanonicalRelation::ALL.iter().map(|c| c.name()).collect();
        if file.canonical_relations != expected {
            return Err(Error::InvalidVocabulary(format!(
                "canonical_relations must be {expected:?}, got {:?}",
                file.canonical_relations
            )));
        }
        Vocabulary::new(file.objects)
    }
}

impl From<Vocabulary> for VocabularyFile {
    fn from(v: Vocabulary) -> Self {
        VocabularyFile {
            objects: v.objects,
            canonical_relations: CanonicalRelation::ALL.iter().map(|c| c.name().to_string()).collect(),
        }
    }
}

impl Vocabulary {
    pub fn new<S: Into<String>>(labels: impl IntoIterator<Item = S>) -> Result<Self> {
        let objects: Vec<String> = labels.into_iter().map(Into::into).collect();
        let mut index = HashMap::with_capacity(objects.len());
        for (i, label) in objects.iter().enumerate() {
            if index.insert(label.clone(), i).is_some() {
                return Err(Error::InvalidVocabulary(format!("duplicate label `{label}`")));
            }
        }
        Ok(Self { objects, index })
    }

    /// `n` generated labels `obj0 .. obj{n-1}`.
    pub fn numbered(n: usize) -> Self {
        Self::new((0..n).map(|i| format!("obj{i}"))).expect("generated labels are unique")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn num_objects(&self) -> usize {
        self.objects.len()
    }

    pub fn num_types(&self) -> usize {
        CanonicalRelation::ALL.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.objects
    }

    pub fn label(&self, id: usize) -> Option<&str> {
        self.objects.get(id).map(String::as_str)
    }

    pub fn id(&self, label: &str) -> Result<usize> {
        self.index
            .get(label)
            .copied()
            .ok_or_else(|| Error::UnknownLabel(label.to_string()))
    }

    /// Maps a raw relation between two labels onto its canonical relation node.
    pub fn fold_relation(&self, raw: RawRelation, subject: usize, object: usize) -> Result<RelationId> {
        let v = self.num_objects();
        for id in [subject, object] {
            if id >= v {
                return Err(Error::IndexOutOfRange(format!("label id {id} >= {v}")));
            }
        }
        let (canonical, swap) = raw.fold();
        let (j, k) = if swap { (object, subject) } else { (subject, object) };
        Ok(RelationId::new(canonical.index(), j, k))
    }

    pub fn fold_named(&self, raw: &str, subject: &str, object: &str) -> Result<RelationId> {
        self.fold_relation(raw.parse()?, self.id(subject)?, self.id(object)?)
    }
}
