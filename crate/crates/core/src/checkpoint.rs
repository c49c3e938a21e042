//! Bit-exact JSON checkpoints: every weight is stored as the 16 lowercase hex
//! digits of its IEEE-754 `f64` bit pattern, matrices row-major.

use std::fs;
use std::path::Path;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Biases, ModelParams, NetworkConfig};
use crate::scalar::Scalar;
use crate::trainer::TrainHistory;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct HexBiases {
    b_v: Vec<String>,
    b_r: Vec<String>,
    b_h1: Vec<String>,
    b_h2: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct HexWeights {
    #[serde(rename = "W_hv")]
    w_hv: Vec<Vec<String>>,
    #[serde(rename = "W_rh")]
    w_rh: Vec<Vec<String>>,
    #[serde(rename = "W_12")]
    w_12: Vec<Vec<String>>,
    w_tri: Vec<String>,
    biases: Option<HexBiases>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct CheckpointFile {
    format_version: u32,
    config: NetworkConfig,
    weights: HexWeights,
    #[serde(default)]
    history: TrainHistory,
}

/// Parameters plus the training history that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint<S> {
    pub params: ModelParams<S>,
    pub history: TrainHistory,
}

fn hex<S: Scalar>(x: &S) -> String {
    format!("{:016x}", x.as_f64().to_bits())
}

fn unhex<S: Scalar>(s: &str) -> Result<S> {
    if s.len() != 16 || !s.bytes().all(|b| b.is_ascii_digit() || (b'a'..=b'f').contains(&b)) {
        return Err(Error::Checkpoint(format!("`{s}` is not 16 lowercase hex digits")));
    }
    let bits = u64::from_str_radix(s, 16).map_err(|e| Error::Checkpoint(e.to_string()))?;
    Ok(S::of(f64::from_bits(bits)))
}

fn hex_vec<S: Scalar>(a: &Array1<S>) -> Vec<String> {
    a.iter().map(hex).collect()
}

fn hex_mat<S: Scalar>(a: &Array2<S>) -> Vec<Vec<String>> {
    a.rows().into_iter().map(|r| r.iter().map(hex).collect()).collect()
}

fn read_vec<S: Scalar>(name: &str, v: &[String], len: usize) -> Result<Array1<S>> {
    if v.len() != len {
        return Err(Error::Checkpoint(format!("{name}: expected {len} values, found {}", v.len())));
    }
    v.iter().map(|s| unhex(s)).collect::<Result<Vec<S>>>().map(Array1::from_vec)
}

fn read_mat<S: Scalar>(name: &str, m: &[Vec<String>], rows: usize, cols: usize) -> Result<Array2<S>> {
    // a matrix with zero columns serializes as `rows` empty rows
    if m.len() != rows || m.iter().any(|r| r.len() != cols) {
        return Err(Error::Checkpoint(format!("{name}: expected {rows}x{cols}")));
    }
    let flat = m.iter().flatten().map(|s| unhex(s)).collect::<Result<Vec<S>>>()?;
    Array2::from_shape_vec((rows, cols), flat).map_err(|e| Error::Checkpoint(e.to_string()))
}

impl<S: Scalar> Checkpoint<S> {
    pub fn new(params: ModelParams<S>, history: TrainHistory) -> Self {
        Self { params, history }
    }

    pub fn to_json(&self) -> Result<String> {
        let p = &self.params;
        let file = CheckpointFile {
            format_version: FORMAT_VERSION,
            config: p.config,
            weights: HexWeights {
                w_hv: hex_mat(&p.w_hv),
                w_rh: hex_mat(&p.w_rh),
                w_12: hex_mat(&p.w_12),
                w_tri: hex_vec(&p.w_tri),
                biases: p.biases.as_ref().map(|b| HexBiases {
                    b_v: hex_vec(&b.v),
                    b_r: hex_vec(&b.r),
                    b_h1: hex_vec(&b.h1),
                    b_h2: hex_vec(&b.h2),
                }),
            },
            history: self.history.clone(),
        };
        Ok(serde_json::to_string(&file)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: serde_json::Value = serde_json::from_str(text)?;
        let version = raw
            .get("format_version")
            .and_then(serde_json::Value::as_u64)
            .ok_or_else(|| Error::Checkpoint("missing format_version".into()))?;
        if version != u64::from(FORMAT_VERSION) {
            return Err(Error::VersionMismatch { found: version as u32, expected: FORMAT_VERSION });
        }
        let file: CheckpointFile = serde_json::from_value(raw)?;
        let c = file.config;
        c.validate()?;
        let w = &file.weights;
        let biases = match (&w.biases, c.use_biases) {
            (Some(b), true) => Some(Biases {
                v: read_vec("b_v", &b.b_v, c.num_objects)?,
                r: read_vec("b_r", &b.b_r, c.num_relations())?,
                h1: read_vec("b_h1", &b.b_h1, c.hidden1)?,
                h2: read_vec("b_h2", &b.b_h2, c.hidden2)?,
            }),
            (None, false) => None,
            _ => return Err(Error::Checkpoint("biases present iff use_biases".into())),
        };
        let params = ModelParams {
            config: c,
            w_hv: read_mat("W_hv", &w.w_hv, c.hidden1, c.num_objects)?,
            w_rh: read_mat("W_rh", &w.w_rh, c.hidden1, c.rh_columns())?,
            w_12: read_mat("W_12", &w.w_12, c.hidden1, c.hidden2)?,
            w_tri: read_vec("w_tri", &w.w_tri, c.num_triway_weights())?,
            biases,
        };
        if let Some(f) = params.non_finite_family() {
            return Err(Error::NonFinite { family: f.name() });
        }
        Ok(Self { params, history: file.history })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }
}

pub fn save_checkpoint<S: Scalar>(params: &ModelParams<S>, history: &TrainHistory, path: impl AsRef<Path>) -> Result<()> {
    Checkpoint::new(params.clone(), history.clone()).save(path)
}

pub fn load_checkpoint<S: Scalar>(path: impl AsRef<Path>) -> Result<(ModelParams<S>, TrainHistory)> {
    let ck = Checkpoint::load(path)?;
    Ok((ck.params, ck.history))
}
