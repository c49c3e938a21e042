use ndarray::{Array1, Array2};
use rand_distr::{Distribution, Normal};

use super::config::NetworkConfig;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Optional per-node biases; off unless the config asks for them.
#[derive(Debug, Clone, PartialEq)]
pub struct Biases<S> {
    pub v: Array1<S>,
    pub r: Array1<S>,
    pub h1: Array1<S>,
    pub h2: Array1<S>,
}

impl<S: Scalar> Biases<S> {
    pub fn zeros(config: &NetworkConfig) -> Self {
        Self {
            v: Array1::zeros(config.num_objects),
            r: Array1::zeros(config.num_relations()),
            h1: Array1::zeros(config.hidden1),
            h2: Array1::zeros(config.hidden2),
        }
    }
}

/// Weight families, in flattening order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    HiddenObject,
    RelationHidden,
    InterLayer,
    Triway,
    BiasObject,
    BiasRelation,
    BiasHidden1,
    BiasHidden2,
}

impl Family {
    pub const ALL: [Family; 8] = [
        Family::HiddenObject,
        Family::RelationHidden,
        Family::InterLayer,
        Family::Triway,
        Family::BiasObject,
        Family::BiasRelation,
        Family::BiasHidden1,
        Family::BiasHidden2,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::HiddenObject => "W_hv",
            Family::RelationHidden => "W_rh",
            Family::InterLayer => "W_12",
            Family::Triway => "w_tri",
            Family::BiasObject => "b_v",
            Family::BiasRelation => "b_r",
            Family::BiasHidden1 => "b_h1",
            Family::BiasHidden2 => "b_h2",
        }
    }
}

/// All weights of one network.
///
/// * `w_hv`: `H1 × V`, hidden–object.
/// * `w_rh`: `H1 × C`, relation–hidden, `C = Tc·V²` or `Tc` per [`RhSharing`](super::RhSharing).
/// * `w_12`: `H1 × H2`, between the two hidden layers.
/// * `w_tri`: `Tc` scalars, one tri-way weight per relation type shared by
///   every object pair; empty when tri-way edges are off.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams<S> {
    pub config: NetworkConfig,
    pub w_hv: Array2<S>,
    pub w_rh: Array2<S>,
    pub w_12: Array2<S>,
    pub w_tri: Array1<S>,
    pub biases: Option<Biases<S>>,
}

impl<S: Scalar> ModelParams<S> {
    pub fn zeros(config: NetworkConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            w_hv: Array2::zeros((config.hidden1, config.num_objects)),
            w_rh: Array2::zeros((config.hidden1, config.rh_columns())),
            w_12: Array2::zeros((config.hidden1, config.hidden2)),
            w_tri: Array1::zeros(config.num_triway_weights()),
            biases: config.use_biases.then(|| Biases::zeros(&config)),
            config,
        })
    }

    pub fn check_shapes(&self) -> Result<()> {
        let c = &self.config;
        let mut expected = vec![
            ("W_hv", self.w_hv.dim(), (c.hidden1, c.num_objects)),
            ("W_rh", self.w_rh.dim(), (c.hidden1, c.rh_columns())),
            ("W_12", self.w_12.dim(), (c.hidden1, c.hidden2)),
            ("w_tri", (self.w_tri.len(), 1), (c.num_triway_weights(), 1)),
        ];
        match (&self.biases, c.use_biases) {
            (Some(b), true) => expected.extend([
                ("b_v", (b.v.len(), 1), (c.num_objects, 1)),
                ("b_r", (b.r.len(), 1), (c.num_relations(), 1)),
                ("b_h1", (b.h1.len(), 1), (c.hidden1, 1)),
                ("b_h2", (b.h2.len(), 1), (c.hidden2, 1)),
            ]),
            (None, false) => {}
            _ => return Err(Error::ShapeMismatch("bias presence disagrees with config".into())),
        }
        for (name, got, want) in expected {
            if got != want {
                return Err(Error::ShapeMismatch(format!("{name} is {got:?}, expected {want:?}")));
            }
        }
        Ok(())
    }

    pub fn family(&self, family: Family) -> Option<&[S]> {
        let b = self.biases.as_ref();
        match family {
            Family::HiddenObject => self.w_hv.as_slice(),
            Family::RelationHidden => self.w_rh.as_slice(),
            Family::InterLayer => self.w_12.as_slice(),
            Family::Triway => self.w_tri.as_slice(),
            Family::BiasObject => b.and_then(|b| b.v.as_slice()),
            Family::BiasRelation => b.and_then(|b| b.r.as_slice()),
            Family::BiasHidden1 => b.and_then(|b| b.h1.as_slice()),
            Family::BiasHidden2 => b.and_then(|b| b.h2.as_slice()),
        }
    }

    pub fn family_mut(&mut self, family: Family) -> Option<&mut [S]> {
        let b = self.biases.as_mut();
        match family {
            Family::HiddenObject => self.w_hv.as_slice_mut(),
            Family::RelationHidden => self.w_rh.as_slice_mut(),
            Family::InterLayer => self.w_12.as_slice_mut(),
            Family::Triway => self.w_tri.as_slice_mut(),
            Family::BiasObject => b.and_then(|b| b.v.as_slice_mut()),
            Family::BiasRelation => b.and_then(|b| b.r.as_slice_mut()),
            Family::BiasHidden1 => b.and_then(|b| b.h1.as_slice_mut()),
            Family::BiasHidden2 => b.and_then(|b| b.h2.as_slice_mut()),
        }
    }

    /// Every weight in family order, each family row-major.
    pub fn to_flat(&self) -> Vec<S> {
        Family::ALL.iter().filter_map(|&f| self.family(f)).flatten().copied().collect()
    }

    pub fn set_flat(&mut self, flat: &[S]) -> Result<()> {
        let mut rest = flat;
        for f in Family::ALL {
            if let Some(dst) = self.family_mut(f) {
                if rest.len() < dst.len() {
                    return Err(Error::ShapeMismatch("flat parameter vector too short".into()));
                }
                let (head, tail) = rest.split_at(dst.len());
                dst.copy_from_slice(head);
                rest = tail;
            }
        }
        if !rest.is_empty() {
            return Err(Error::ShapeMismatch("flat parameter vector too long".into()));
        }
        Ok(())
    }

    pub fn num_weights(&self) -> usize {
        Family::ALL.iter().filter_map(|&f| self.family(f)).map(<[S]>::len).sum()
    }

    /// First family holding a NaN or infinity.
    pub fn non_finite_family(&self) -> Option<Family> {
        Family::ALL
            .into_iter()
            .find(|&f| self.family(f).is_some_and(|w| w.iter().any(|x| !x.is_finite())))
    }

    pub fn cast<T: Scalar>(&self) -> ModelParams<T> {
        let conv = |x: &S| T::of(x.as_f64());
        ModelParams {
            config: self.config,
            w_hv: self.w_hv.map(conv),
            w_rh: self.w_rh.map(conv),
            w_12: self.w_12.map(conv),
            w_tri: self.w_tri.map(conv),
            biases: self.biases.as_ref().map(|b| Biases {
                v: b.v.map(conv),
                r: b.r.map(conv),
                h1: b.h1.map(conv),
                h2: b.h2.map(conv),
            }),
        }
    }
}

/// Weights drawn from N(0, 0.01²) in family order; biases start at zero.
pub fn init_params<S: Scalar, R: rand::Rng + ?Sized>(config: NetworkConfig, rng: &mut R) -> Result<ModelParams<S>> {
    let mut params = ModelParams::zeros(config)?;
    let normal = Normal::new(0.0, 0.01).expect("valid normal");
    for f in [Family::HiddenObject, Family::RelationHidden, Family::InterLayer, Family::Triway] {
        if let Some(w) = params.family_mut(f) {
            for x in w.iter_mut() {
                *x = S::of(normal.sample(rng));
            }
        }
    }
    Ok(params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    #[test]
    fn init_is_deterministic() {
        let c = NetworkConfig::triway(5, 4, 3, 2);
        let a: ModelParams<f64> = init_params(c, &mut rng::seeded(9)).unwrap();
        let b: ModelParams<f64> = init_params(c, &mut rng::seeded(9)).unwrap();
        assert_eq!(a, b);
        let d: ModelParams<f64> = init_params(c, &mut rng::seeded(10)).unwrap();
        assert_ne!(a, d);
    }

    #[test]
    fn rbm_shapes() {
        let p: ModelParams<f64> = init_params(NetworkConfig::rbm(5, 4, 3), &mut rng::seeded(1)).unwrap();
        assert_eq!(p.w_12.len(), 0);
        assert_eq!(p.w_tri.len(), 0);
        assert!(p.biases.is_none());
        p.check_shapes().unwrap();
    }

    #[test]
    fn per_node_rh_shape() {
        let p: ModelParams<f64> = init_params(NetworkConfig::triway(3, 1, 2, 2), &mut rng::seeded(1)).unwrap();
        assert_eq!(p.w_rh.dim(), (2, 9));
        assert_eq!(p.w_tri.len(), 1);
    }

    #[test]
    fn flat_roundtrip_with_biases() {
        let mut c = NetworkConfig::triway(2, 1, 2, 1);
        c.use_biases = true;
        let p: ModelParams<f64> = init_params(c, &mut rng::seeded(4)).unwrap();
        let flat = p.to_flat();
        assert_eq!(flat.len(), p.num_weights());
        assert_eq!(flat.len(), 4 + 8 + 2 + 1 + 2 + 4 + 2 + 1);
        let mut q = ModelParams::<f64>::zeros(c).unwrap();
        q.set_flat(&flat).unwrap();
        assert_eq!(p, q);
        assert!(q.set_flat(&flat[1..]).is_err());
    }

    #[test]
    fn init_weights_are_small() {
        let p: ModelParams<f64> = init_params(NetworkConfig::triway(10, 4, 20, 10), &mut rng::seeded(2)).unwrap();
        let flat = p.to_flat();
        let mean = flat.iter().sum::<f64>() / flat.len() as f64;
        let var = flat.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / flat.len() as f64;
        assert!(mean.abs() < 1e-3);
        assert!((var.sqrt() - 0.01).abs() < 1e-3);
    }
}
