use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use super::instance::SceneInstance;
use super::relation::{CanonicalRelation, RelationId};
use super::vocab::Vocabulary;
use crate::error::{Error, Result};

/// Length of the dense binary vector: `V + Tc·V²`.
pub fn implied_dimension(num_objects: usize, num_types: usize) -> usize {
    num_objects + num_types * num_objects * num_objects
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct RawSceneVector {
    num_objects: usize,
    num_types: usize,
    objects: Vec<usize>,
    relations: Vec<usize>,
}

/// Sparse label-level scene state: active object labels and active relation
/// nodes (flat [`RelationId`] indices), both sorted.
///
/// Every active relation has both endpoints among the active objects.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawSceneVector", into = "RawSceneVector")]
pub struct SceneVector {
    num_objects: usize,
    num_types: usize,
    objects: Vec<usize>,
    relations: Vec<usize>,
}

impl TryFrom<RawSceneVector> for SceneVector {
    type Error = Error;

    fn try_from(raw: RawSceneVector) -> Result<Self> {
        SceneVector::new(raw.num_objects, raw.num_types, raw.objects, raw.relations)
    }
}

impl From<SceneVector> for RawSceneVector {
    fn from(s: SceneVector) -> Self {
        RawSceneVector { num_objects: s.num_objects, num_types: s.num_types, objects: s.objects, relations: s.relations }
    }
}

impl SceneVector {
    pub fn new(
        num_objects: usize,
        num_types: usize,
        objects: impl IntoIterator<Item = usize>,
        relations: impl IntoIterator<Item = usize>,
    ) -> Result<Self> {
        let objects: BTreeSet<usize> = objects.into_iter().collect();
        let relations: BTreeSet<usize> = relations.into_iter().collect();
        if let Some(&j) = objects.iter().next_back() {
            if j >= num_objects {
                return Err(Error::IndexOutOfRange(format!("object {j} >= {num_objects}")));
            }
        }
        let num_relations = num_types * num_objects * num_objects;
        for &flat in &relations {
            if flat >= num_relations {
                return Err(Error::IndexOutOfRange(format!("relation {flat} >= {num_relations}")));
            }
            let id = RelationId::from_flat(flat, num_objects);
            if !objects.contains(&id.j) || !objects.contains(&id.k) {
                return Err(Error::ShapeMismatch(format!(
                    "relation ({}, {}, {}) has an inactive endpoint",
                    id.t, id.j, id.k
                )));
            }
        }
        Ok(Self {
            num_objects,
            num_types,
            objects: objects.into_iter().collect(),
            relations: relations.into_iter().collect(),
        })
    }

    pub fn empty(num_objects: usize, num_types: usize) -> Self {
        Self { num_objects, num_types, objects: Vec::new(), relations: Vec::new() }
    }

    pub fn num_objects(&self) -> usize {
        self.num_objects
    }

    pub fn num_types(&self) -> usize {
        self.num_types
    }

    pub fn num_relation_nodes(&self) -> usize {
        self.num_types * self.num_objects * self.num_objects
    }

    pub fn dimension(&self) -> usize {
        implied_dimension(self.num_objects, self.num_types)
    }

    pub fn objects(&self) -> &[usize] {
        &self.objects
    }

    pub fn relations(&self) -> &[usize] {
        &self.relations
    }

    pub fn relation_ids(&self) -> impl Iterator<Item = RelationId> + '_ {
        self.relations.iter().map(|&f| RelationId::from_flat(f, self.num_objects))
    }

    pub fn has_object(&self, j: usize) -> bool {
        self.objects.binary_search(&j).is_ok()
    }

    pub fn has_relation(&self, flat: usize) -> bool {
        self.relations.binary_search(&flat).is_ok()
    }

    /// Drops object `j` together with every relation touching it.
    pub fn without_object(&self, j: usize) -> Self {
        let v = self.num_objects;
        Self {
            num_objects: v,
            num_types: self.num_types,
            objects: self.objects.iter().copied().filter(|&o| o != j).collect(),
            relations: self
                .relations
                .iter()
                .copied()
                .filter(|&f| {
                    let id = RelationId::from_flat(f, v);
                    id.j != j && id.k != j
                })
                .collect(),
        }
    }

    pub fn with_object(&self, j: usize) -> Result<Self> {
        Self::new(
            self.num_objects,
            self.num_types,
            self.objects.iter().copied().chain([j]),
            self.relations.iter().copied(),
        )
    }

    /// Same objects, no relations.
    pub fn objects_only(&self) -> Self {
        Self { relations: Vec::new(), ..self.clone() }
    }

    pub fn to_dense(&self) -> Vec<bool> {
        let mut dense = vec![false; self.dimension()];
        for &j in &self.objects {
            dense[j] = true;
        }
        for &r in &self.relations {
            dense[self.num_objects + r] = true;
        }
        dense
    }
}

/// Label-level encoding of an instance-level scene.
///
/// Instances sharing a label collapse to one object bit; a relation bit is set
/// when any instance pair carries the (folded) relation.
pub fn encode_scene(scene: &SceneInstance, vocab: &Vocabulary) -> Result<SceneVector> {
    scene.validate()?;
    let mut label_of = HashMap::with_capacity(scene.objects.len());
    for o in &scene.objects {
        label_of.insert(o.id, vocab.id(&o.label)?);
    }
    let v = vocab.num_objects();
    let mut relations = Vec::with_capacity(scene.relations.len());
    for r in &scene.relations {
        let id = vocab.fold_relation(r.kind, label_of[&r.subject], label_of[&r.object])?;
        relations.push(id.flat(v));
    }
    SceneVector::new(v, vocab.num_types(), label_of.values().copied(), relations)
}

/// One instance per active label (id = label index) plus the canonical
/// relations; a same-label relation gets a second instance with id `V + j`.
pub fn decode_scene(
    sv: &SceneVector,
    vocab: &Vocabulary,
    scene_id: impl Into<String>,
    category: impl Into<String>,
) -> Result<SceneInstance> {
    let v = sv.num_objects();
    if v != vocab.num_objects() {
        return Err(Error::ShapeMismatch(format!("vector has {v} objects, vocabulary {}", vocab.num_objects())));
    }
    let mut scene = SceneInstance::new(scene_id, category);
    for &j in sv.objects() {
        scene = scene.with_object(j as u64, vocab.labels()[j].clone(), None);
    }
    let mut twins = BTreeSet::new();
    for id in sv.relation_ids() {
        let canonical = CanonicalRelation::from_index(id.t)
            .ok_or_else(|| Error::IndexOutOfRange(format!("relation type {}", id.t)))?;
        let object = if id.j == id.k {
            let twin = (v + id.k) as u64;
            if twins.insert(twin) {
                scene = scene.with_object(twin, vocab.labels()[id.k].clone(), None);
            }
            twin
        } else {
            id.k as u64
        };
        scene = scene.with_relation(canonical.as_raw(), id.j as u64, object);
    }
    Ok(scene)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::RawRelation;
    use proptest::prelude::*;

    #[test]
    fn full_vocabulary_dimension() {
        assert_eq!(implied_dimension(417, 4), 695_973);
        assert_eq!(SceneVector::empty(417, 4).dimension(), 695_973);
    }

    #[test]
    fn empty_scene_encodes_to_empty_sets() {
        let vocab = Vocabulary::numbered(5);
        let sv = encode_scene(&SceneInstance::new("e", "c"), &vocab).unwrap();
        assert!(sv.objects().is_empty() && sv.relations().is_empty());
    }

    #[test]
    fn same_label_pair_sets_diagonal_bit() {
        let vocab = Vocabulary::new(["chair", "table"]).unwrap();
        let scene = SceneInstance::new("s", "c")
            .with_object(1, "chair", None)
            .with_object(2, "chair", None)
            .with_relation(RawRelation::Left, 1, 2);
        let sv = encode_scene(&scene, &vocab).unwrap();
        assert_eq!(sv.objects(), &[0]);
        assert_eq!(sv.relation_ids().collect::<Vec<_>>(), vec![RelationId::new(0, 0, 0)]);
        let back = encode_scene(&decode_scene(&sv, &vocab, "s", "c").unwrap(), &vocab).unwrap();
        assert_eq!(back, sv);
    }

    #[test]
    fn unknown_label_is_named() {
        let vocab = Vocabulary::numbered(2);
        let scene = SceneInstance::new("s", "c").with_object(1, "lamp", None);
        match encode_scene(&scene, &vocab) {
            Err(Error::UnknownLabel(l)) => assert_eq!(l, "lamp"),
            other => panic!("expected UnknownLabel, got {other:?}"),
        }
    }

    #[test]
    fn dangling_relation_rejected() {
        let err = SceneVector::new(3, 1, [0], [RelationId::new(0, 0, 1).flat(3)]);
        assert!(err.is_err());
    }

    #[test]
    fn without_object_drops_touching_relations() {
        let r01 = RelationId::new(1, 0, 1).flat(3);
        let r12 = RelationId::new(2, 1, 2).flat(3);
        let r02 = RelationId::new(0, 2, 0).flat(3);
        let sv = SceneVector::new(3, 4, [0, 1, 2], [r01, r12, r02]).unwrap();
        let cut = sv.without_object(1);
        assert_eq!(cut.objects(), &[0, 2]);
        assert_eq!(cut.relations(), &[r02]);
    }

    fn arb_scene_vector() -> impl Strategy<Value = SceneVector> {
        (1usize..6, 1usize..5).prop_flat_map(|(v, tc)| {
            (proptest::collection::btree_set(0..v, 0..=v), Just(v), Just(tc)).prop_flat_map(|(objs, v, tc)| {
                let objs: Vec<usize> = objs.into_iter().collect();
                let mut candidates = Vec::new();
                for t in 0..tc {
                    for &j in &objs {
                        for &k in &objs {
                            candidates.push(RelationId::new(t, j, k).flat(v));
                        }
                    }
                }
                let n = candidates.len();
                (Just(objs), proptest::sample::subsequence(candidates, 0..=n), Just(v), Just(tc))
            })
        })
        .prop_map(|(objs, rels, v, tc)| SceneVector::new(v, tc, objs, rels).unwrap())
    }

    proptest! {
        #[test]
        fn encode_inverts_decode(sv in arb_scene_vector()) {
            let vocab = Vocabulary::numbered(sv.num_objects());
            let scene = decode_scene(&sv, &vocab, "p", "c").unwrap();
            scene.validate().unwrap();
            let back = encode_scene(&scene, &vocab).unwrap();
            prop_assert_eq!(back.objects(), sv.objects());
            prop_assert_eq!(back.relations(), sv.relations());
        }
    }
}
