use super::config::NetworkConfig;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::scene::{RelationId, SceneVector};

/// Address of a single unit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Node {
    Object(usize),
    /// Flat relation index `t·V² + j·V + k`.
    Relation(usize),
    Hidden1(usize),
    Hidden2(usize),
}

/// Joint binary assignment of every unit. Relations are stored densely.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct NetworkState {
    pub v: Vec<bool>,
    pub r: Vec<bool>,
    pub h1: Vec<bool>,
    pub h2: Vec<bool>,
}

impl NetworkState {
    pub fn zeros(config: &NetworkConfig) -> Self {
        Self {
            v: vec![false; config.num_objects],
            r: vec![false; config.num_relations()],
            h1: vec![false; config.hidden1],
            h2: vec![false; config.hidden2],
        }
    }

    /// Visibles from `scene`, hidden units off.
    pub fn from_scene(config: &NetworkConfig, scene: &SceneVector) -> Result<Self> {
        if scene.num_objects() != config.num_objects || scene.num_types() != config.num_types {
            return Err(Error::ShapeMismatch(format!(
                "scene has V={}, Tc={}; network has V={}, Tc={}",
                scene.num_objects(),
                scene.num_types(),
                config.num_objects,
                config.num_types
            )));
        }
        let mut s = Self::zeros(config);
        s.set_visible(scene);
        Ok(s)
    }

    /// Overwrites the visible units with `scene`.
    pub fn set_visible(&mut self, scene: &SceneVector) {
        self.v.iter_mut().for_each(|b| *b = false);
        self.r.iter_mut().for_each(|b| *b = false);
        for &j in scene.objects() {
            self.v[j] = true;
        }
        for &f in scene.relations() {
            self.r[f] = true;
        }
    }

    pub fn check_shape(&self, config: &NetworkConfig) -> Result<()> {
        let got = (self.v.len(), self.r.len(), self.h1.len(), self.h2.len());
        let want = (config.num_objects, config.num_relations(), config.hidden1, config.hidden2);
        if got != want {
            return Err(Error::ShapeMismatch(format!("state layout {got:?}, network expects {want:?}")));
        }
        Ok(())
    }

    pub fn get(&self, node: Node) -> Option<bool> {
        match node {
            Node::Object(i) => self.v.get(i),
            Node::Relation(i) => self.r.get(i),
            Node::Hidden1(i) => self.h1.get(i),
            Node::Hidden2(i) => self.h2.get(i),
        }
        .copied()
    }

    pub fn set(&mut self, node: Node, value: bool) -> Result<()> {
        let slot = match node {
            Node::Object(i) => self.v.get_mut(i),
            Node::Relation(i) => self.r.get_mut(i),
            Node::Hidden1(i) => self.h1.get_mut(i),
            Node::Hidden2(i) => self.h2.get_mut(i),
        };
        *slot.ok_or_else(|| Error::IndexOutOfRange(format!("{node:?}")))? = value;
        Ok(())
    }

    pub fn active_objects(&self) -> Vec<usize> {
        self.v.iter().enumerate().filter_map(|(i, &b)| b.then_some(i)).collect()
    }

    pub fn active_relations(&self) -> Vec<usize> {
        self.r.iter().enumerate().filter_map(|(i, &b)| b.then_some(i)).collect()
    }

    /// Decodes the visibles, dropping any relation with an inactive endpoint.
    pub fn visible_scene(&self, config: &NetworkConfig) -> SceneVector {
        let v = config.num_objects;
        let relations = self.active_relations().into_iter().filter(|&f| {
            let id = RelationId::from_flat(f, v);
            self.v[id.j] && self.v[id.k]
        });
        SceneVector::new(v, config.num_types, self.active_objects(), relations).expect("consistent by construction")
    }

    /// All units in layout order `v, r, h1, h2`.
    pub fn bits(&self) -> impl Iterator<Item = bool> + '_ {
        self.v.iter().chain(&self.r).chain(&self.h1).chain(&self.h2).copied()
    }
}

/// Per-unit activation probabilities, same layout as [`NetworkState`].
#[derive(Debug, Clone, PartialEq)]
pub struct NodeProbs<S> {
    pub v: Vec<S>,
    pub r: Vec<S>,
    pub h1: Vec<S>,
    pub h2: Vec<S>,
}

impl<S: Scalar> NodeProbs<S> {
    pub fn zeros(config: &NetworkConfig) -> Self {
        Self {
            v: vec![S::zero(); config.num_objects],
            r: vec![S::zero(); config.num_relations()],
            h1: vec![S::zero(); config.hidden1],
            h2: vec![S::zero(); config.hidden2],
        }
    }

    /// Bits as 0/1 probabilities.
    pub fn from_state(state: &NetworkState) -> Self {
        let f = |b: &Vec<bool>| b.iter().map(|&x| if x { S::one() } else { S::zero() }).collect();
        Self { v: f(&state.v), r: f(&state.r), h1: f(&state.h1), h2: f(&state.h2) }
    }

    pub fn get(&self, node: Node) -> Option<S> {
        match node {
            Node::Object(i) => self.v.get(i),
            Node::Relation(i) => self.r.get(i),
            Node::Hidden1(i) => self.h1.get(i),
            Node::Hidden2(i) => self.h2.get(i),
        }
        .copied()
    }

    pub fn values(&self) -> impl Iterator<Item = S> + '_ {
        self.v.iter().chain(&self.r).chain(&self.h1).chain(&self.h2).copied()
    }

    pub(crate) fn add_scaled(&mut self, other: &Self, scale: S) {
        for (dst, src) in [
            (&mut self.v, &other.v),
            (&mut self.r, &other.r),
            (&mut self.h1, &other.h1),
            (&mut self.h2, &other.h2),
        ] {
            for (d, &s) in dst.iter_mut().zip(src) {
                *d += s * scale;
            }
        }
    }
}
