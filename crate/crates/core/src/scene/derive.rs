//! Rule-based spatial relations from oriented 3D boxes.
//!
//! Conventions: +x points right, +y points away from the viewer, +z up.
//! `left(A, B)` means A is left of B; `front(A, B)` means A is closer to the
//! viewer than B. `on_top` is a special case of `above` (contact plus support).

use serde::{Deserialize, Serialize};

use super::instance::{OrientedBox, SceneInstance, SceneRelation};
use super::relation::RawRelation;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Thresholds {
    /// Minimum center separation along x or y, meters.
    pub axis_margin: f64,
    /// Maximum vertical gap for contact, meters.
    pub contact_gap: f64,
    /// Minimum fraction of the upper object's footprint that must overlap.
    pub overlap_ratio: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self { axis_margin: 0.05, contact_gap: 0.05, overlap_ratio: 0.5 }
    }
}

impl Thresholds {
    pub fn validate(&self) -> Result<()> {
        let ok = self.axis_margin >= 0.0
            && self.contact_gap >= 0.0
            && self.overlap_ratio > 0.0
            && self.overlap_ratio <= 1.0;
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid relation thresholds {self:?}")))
        }
    }
}

fn ranges_overlap(a: (f64, f64), b: (f64, f64)) -> bool {
    a.0 < b.1 && b.0 < a.1
}

/// Fraction of `upper`'s footprint covered by `lower`'s footprint.
fn footprint_overlap(upper: &OrientedBox, lower: &OrientedBox) -> f64 {
    let (ax0, ax1, ay0, ay1) = upper.footprint();
    let (bx0, bx1, by0, by1) = lower.footprint();
    let w = (ax1.min(bx1) - ax0.max(bx0)).max(0.0);
    let h = (ay1.min(by1) - ay0.max(by0)).max(0.0);
    let area = (ax1 - ax0) * (ay1 - ay0);
    if area > 0.0 {
        w * h / area
    } else {
        0.0
    }
}

/// Relations holding from `a` to `b`, each reported once in its "forward" form.
fn forward_relations(a: &OrientedBox, b: &OrientedBox, th: &Thresholds) -> Vec<RawRelation> {
    let mut out = Vec::new();
    let (az, bz) = (a.z_range(), b.z_range());
    if ranges_overlap(az, bz) {
        if b.center[0] - a.center[0] > th.axis_margin {
            out.push(RawRelation::Left);
        }
        if b.center[1] - a.center[1] > th.axis_margin {
            out.push(RawRelation::Front);
        }
    }
    let gap = az.0 - bz.1;
    if gap >= -th.contact_gap {
        out.push(RawRelation::Above);
        if gap < th.contact_gap && footprint_overlap(a, b) >= th.overlap_ratio {
            out.push(RawRelation::OnTop);
        }
    }
    out
}

/// Replaces the scene's relations with ones derived from its boxes.
///
/// Every derived relation is emitted together with its opposite on the swapped
/// pair, so the output is closed under antisymmetry.
pub fn derive_relations(scene: &SceneInstance, thresholds: &Thresholds) -> Result<SceneInstance> {
    thresholds.validate()?;
    scene.validate()?;
    let missing: Vec<u64> = scene.objects.iter().filter(|o| o.bbox.is_none()).map(|o| o.id).collect();
    if !missing.is_empty() {
        return Err(Error::MissingBox { scene: scene.scene_id.clone(), instances: missing });
    }
    let mut relations = Vec::new();
    for a in &scene.objects {
        for b in &scene.objects {
            if a.id == b.id {
                continue;
            }
            let (ba, bb) = (a.bbox.as_ref().unwrap(), b.bbox.as_ref().unwrap());
            for kind in forward_relations(ba, bb, thresholds) {
                relations.push(SceneRelation { kind, subject: a.id, object: b.id });
                relations.push(SceneRelation { kind: kind.opposite(), subject: b.id, object: a.id });
            }
        }
    }
    relations.sort_by_key(|r| (r.subject, r.object, r.kind));
    relations.dedup();
    Ok(SceneInstance { relations, ..scene.clone() })
}
