use crate::error::{Error, Result};
use crate::model::{NetworkConfig, NetworkState, Node};

/// Which units a sweep must leave alone.
///
/// Clamped visible units keep whatever value the chain starts with; clamped
/// hidden units are forced to the stored value.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClampMask {
    pub objects: Vec<bool>,
    pub relations: Vec<bool>,
    pub hidden1: Vec<Option<bool>>,
    pub hidden2: Vec<Option<bool>>,
}

impl ClampMask {
    pub fn free(config: &NetworkConfig) -> Self {
        Self {
            objects: vec![false; config.num_objects],
            relations: vec![false; config.num_relations()],
            hidden1: vec![None; config.hidden1],
            hidden2: vec![None; config.hidden2],
        }
    }

    /// Every object and relation clamped.
    pub fn visible(config: &NetworkConfig) -> Self {
        let mut m = Self::free(config);
        m.objects.fill(true);
        m.relations.fill(true);
        m
    }

    /// Every object clamped, relations free.
    pub fn objects(config: &NetworkConfig) -> Self {
        let mut m = Self::free(config);
        m.objects.fill(true);
        m
    }

    /// Every relation clamped, objects free.
    pub fn relations(config: &NetworkConfig) -> Self {
        let mut m = Self::free(config);
        m.relations.fill(true);
        m
    }

    /// Every unit clamped, hidden units to their value in `state`.
    pub fn everything(config: &NetworkConfig, state: &NetworkState) -> Self {
        let mut m = Self::visible(config);
        m.hidden1 = state.h1.iter().map(|&b| Some(b)).collect();
        m.hidden2 = state.h2.iter().map(|&b| Some(b)).collect();
        m
    }

    fn out_of_range(node: Node) -> Error {
        Error::IndexOutOfRange(format!("{node:?}"))
    }

    /// Clamps a visible unit to its chain value.
    pub fn clamp(&mut self, node: Node) -> Result<()> {
        let slot = match node {
            Node::Object(i) => self.objects.get_mut(i),
            Node::Relation(i) => self.relations.get_mut(i),
            Node::Hidden1(_) | Node::Hidden2(_) => {
                return Err(Error::Config(format!("hidden unit {node:?} needs a forced value")))
            }
        };
        *slot.ok_or_else(|| Self::out_of_range(node))? = true;
        Ok(())
    }

    pub fn clamp_hidden(&mut self, node: Node, value: bool) -> Result<()> {
        let slot = match node {
            Node::Hidden1(i) => self.hidden1.get_mut(i),
            Node::Hidden2(i) => self.hidden2.get_mut(i),
            _ => return Err(Error::Config(format!("{node:?} is not a hidden unit"))),
        };
        *slot.ok_or_else(|| Self::out_of_range(node))? = Some(value);
        Ok(())
    }

    pub fn is_clamped(&self, node: Node) -> bool {
        match node {
            Node::Object(i) => self.objects.get(i).copied().unwrap_or(false),
            Node::Relation(i) => self.relations.get(i).copied().unwrap_or(false),
            Node::Hidden1(i) => self.hidden1.get(i).is_some_and(Option::is_some),
            Node::Hidden2(i) => self.hidden2.get(i).is_some_and(Option::is_some),
        }
    }

    pub fn check_shape(&self, config: &NetworkConfig) -> Result<()> {
        let got = (self.objects.len(), self.relations.len(), self.hidden1.len(), self.hidden2.len());
        let want = (config.num_objects, config.num_relations(), config.hidden1, config.hidden2);
        if got != want {
            return Err(Error::ShapeMismatch(format!("mask layout {got:?}, network expects {want:?}")));
        }
        Ok(())
    }

    pub fn apply_hidden(&self, state: &mut NetworkState) {
        for (b, forced) in state.h1.iter_mut().zip(&self.hidden1) {
            if let Some(f) = forced {
                *b = *f;
            }
        }
        for (b, forced) in state.h2.iter_mut().zip(&self.hidden2) {
            if let Some(f) = forced {
                *b = *f;
            }
        }
    }
}
