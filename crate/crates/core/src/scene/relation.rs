use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One of the eight annotated spatial relations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RawRelation {
    Left,
    Right,
    Front,
    Behind,
    OnTop,
    Under,
    Above,
    Below,
}

/// The four relation types kept after folding opposites together.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CanonicalRelation {
    Left,
    Front,
    OnTop,
    Above,
}

impl RawRelation {
    pub const ALL: [RawRelation; 8] = [
        RawRelation::Left,
        RawRelation::Right,
        RawRelation::Front,
        RawRelation::Behind,
        RawRelation::OnTop,
        RawRelation::Under,
        RawRelation::Above,
        RawRelation::Below,
    ];

    pub fn name(self) -> &'static str {
        match self {
            RawRelation::Left => "left",
            RawRelation::Right => "right",
            RawRelation::Front => "front",
            RawRelation::Behind => "behind",
            RawRelation::OnTop => "on_top",
            RawRelation::Under => "under",
            RawRelation::Above => "above",
            RawRelation::Below => "below",
        }
    }

    pub fn opposite(self) -> RawRelation {
        match self {
            RawRelation::Left => RawRelation::Right,
            RawRelation::Right => RawRelation::Left,
            RawRelation::Front => RawRelation::Behind,
            RawRelation::Behind => RawRelation::Front,
            RawRelation::OnTop => RawRelation::Under,
            RawRelation::Under => RawRelation::OnTop,
            RawRelation::Above => RawRelation::Below,
            RawRelation::Below => RawRelation::Above,
        }
    }

    /// Canonical type and whether subject and object swap places.
    pub fn fold(self) -> (CanonicalRelation, bool) {
        match self {
            RawRelation::Left => (CanonicalRelation::Left, false),
            RawRelation::Right => (CanonicalRelation::Left, true),
            RawRelation::Front => (CanonicalRelation::Front, false),
            RawRelation::Behind => (CanonicalRelation::Front, true),
            RawRelation::OnTop => (CanonicalRelation::OnTop, false),
            RawRelation::Under => (CanonicalRelation::OnTop, true),
            RawRelation::Above => (CanonicalRelation::Above, false),
            RawRelation::Below => (CanonicalRelation::Above, true),
        }
    }
}

impl CanonicalRelation {
    pub const ALL: [CanonicalRelation; 4] = [
        CanonicalRelation::Left,
        CanonicalRelation::Front,
        CanonicalRelation::OnTop,
        CanonicalRelation::Above,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(t: usize) -> Option<Self> {
        Self::ALL.get(t).copied()
    }

    pub fn name(self) -> &'static str {
        self.as_raw().name()
    }

    /// The raw relation that folds onto this type without a swap.
    pub fn as_raw(self) -> RawRelation {
        match self {
            CanonicalRelation::Left => RawRelation::Left,
            CanonicalRelation::Front => RawRelation::Front,
            CanonicalRelation::OnTop => RawRelation::OnTop,
            CanonicalRelation::Above => RawRelation::Above,
        }
    }
}

impl FromStr for RawRelation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        RawRelation::ALL
            .into_iter()
            .find(|r| r.name() == s)
            .ok_or_else(|| Error::UnknownRelation(s.to_string()))
    }
}

impl FromStr for CanonicalRelation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        CanonicalRelation::ALL
            .into_iter()
            .find(|r| r.name() == s)
            .ok_or_else(|| Error::UnknownRelation(s.to_string()))
    }
}

impl fmt::Display for RawRelation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl fmt::Display for CanonicalRelation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Address of one relation node: type `t`, subject label `j`, object label `k`.
///
/// The flat index is `t·V² + j·V + k`. `j == k` is legal: two instances with
/// the same label may relate to each other.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RelationId {
    pub t: usize,
    pub j: usize,
    pub k: usize,
}

impl RelationId {
    pub fn new(t: usize, j: usize, k: usize) -> Self {
        Self { t, j, k }
    }

    pub fn flat(self, num_objects: usize) -> usize {
        (self.t * num_objects + self.j) * num_objects + self.k
    }

    pub fn from_flat(index: usize, num_objects: usize) -> Self {
        let per_type = num_objects * num_objects;
        let t = index / per_type;
        let rest = index % per_type;
        Self { t, j: rest / num_objects, k: rest % num_objects }
    }

    pub fn in_range(self, num_types: usize, num_objects: usize) -> bool {
        self.t < num_types && self.j < num_objects && self.k < num_objects
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn names_parse_back() {
        for r in RawRelation::ALL {
            assert_eq!(r.name().parse::<RawRelation>().unwrap(), r);
            assert_eq!(r.opposite().opposite(), r);
        }
        assert!(matches!("beside".parse::<RawRelation>(), Err(Error::UnknownRelation(_))));
    }

    #[test]
    fn every_raw_relation_folds_to_one_pair() {
        for r in RawRelation::ALL {
            let (c, swap) = r.fold();
            let (c2, swap2) = r.opposite().fold();
            assert_eq!(c, c2);
            assert_ne!(swap, swap2);
        }
    }

    proptest! {
        #[test]
        fn flat_index_is_bijective(t in 0usize..4, j in 0usize..17, k in 0usize..17) {
            let id = RelationId::new(t, j, k);
            let flat = id.flat(17);
            prop_assert!(flat < 4 * 17 * 17);
            prop_assert_eq!(RelationId::from_flat(flat, 17), id);
        }
    }
}
