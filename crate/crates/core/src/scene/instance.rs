use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::relation::RawRelation;
use crate::error::{Error, Result};

/// Oriented 3D box; `center` and `size` in meters, `yaw` in radians about +z.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrientedBox {
    pub center: [f64; 3],
    pub size: [f64; 3],
    pub yaw: f64,
}

impl OrientedBox {
    pub fn new(center: [f64; 3], size: [f64; 3], yaw: f64) -> Self {
        Self { center, size, yaw }
    }

    pub fn is_valid(&self) -> bool {
        self.size.iter().all(|&s| s > 0.0 && s.is_finite())
            && self.center.iter().all(|c| c.is_finite())
            && self.yaw.is_finite()
    }

    pub fn z_range(&self) -> (f64, f64) {
        let h = self.size[2] / 2.0;
        (self.center[2] - h, self.center[2] + h)
    }

    /// Axis-aligned bounds of the rotated footprint: `(x_min, x_max, y_min, y_max)`.
    pub fn footprint(&self) -> (f64, f64, f64, f64) {
        let (s, c) = self.yaw.sin_cos();
        let (hx, hy) = (self.size[0] / 2.0, self.size[1] / 2.0);
        let ex = c.abs() * hx + s.abs() * hy;
        let ey = s.abs() * hx + c.abs() * hy;
        (self.center[0] - ex, self.center[0] + ex, self.center[1] - ey, self.center[1] + ey)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneObject {
    pub id: u64,
    pub label: String,
    #[serde(rename = "box", default)]
    pub bbox: Option<OrientedBox>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SceneRelation {
    #[serde(rename = "type")]
    pub kind: RawRelation,
    pub subject: u64,
    pub object: u64,
}

/// One annotated scene at instance level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneInstance {
    pub scene_id: String,
    pub category: String,
    pub objects: Vec<SceneObject>,
    #[serde(default)]
    pub relations: Vec<SceneRelation>,
}

impl SceneInstance {
    pub fn new(scene_id: impl Into<String>, category: impl Into<String>) -> Self {
        Self { scene_id: scene_id.into(), category: category.into(), objects: Vec::new(), relations: Vec::new() }
    }

    pub fn with_object(mut self, id: u64, label: impl Into<String>, bbox: Option<OrientedBox>) -> Self {
        self.objects.push(SceneObject { id, label: label.into(), bbox });
        self
    }

    pub fn with_relation(mut self, kind: RawRelation, subject: u64, object: u64) -> Self {
        self.relations.push(SceneRelation { kind, subject, object });
        self
    }

    pub fn object(&self, id: u64) -> Option<&SceneObject> {
        self.objects.iter().find(|o| o.id == id)
    }

    fn invalid(&self, reason: impl Into<String>) -> Error {
        Error::InvalidScene { scene: self.scene_id.clone(), reason: reason.into() }
    }

    /// Checks instance ids are unique and every relation joins two distinct
    /// existing instances.
    pub fn validate(&self) -> Result<()> {
        let mut seen = HashSet::with_capacity(self.objects.len());
        for o in &self.objects {
            if !seen.insert(o.id) {
                return Err(self.invalid(format!("duplicate instance id {}", o.id)));
            }
            if let Some(b) = &o.bbox {
                if !b.is_valid() {
                    return Err(self.invalid(format!("instance {} has a degenerate box", o.id)));
                }
            }
        }
        for r in &self.relations {
            for end in [r.subject, r.object] {
                if !seen.contains(&end) {
                    return Err(self.invalid(format!("relation {} references missing instance {end}", r.kind)));
                }
            }
            if r.subject == r.object {
                return Err(self.invalid(format!("relation {} relates instance {} to itself", r.kind, r.subject)));
            }
        }
        Ok(())
    }
}

pub fn load_scenes(path: impl AsRef<Path>) -> Result<Vec<SceneInstance>> {
    let text = std::fs::read_to_string(path)?;
    let scenes: Vec<SceneInstance> = serde_json::from_str(&text)?;
    for s in &scenes {
        s.validate()?;
    }
    Ok(scenes)
}
