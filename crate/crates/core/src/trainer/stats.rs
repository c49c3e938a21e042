use ndarray::{Array1, Array2, Zip};

use crate::error::{Error, Result};
use crate::model::{Biases, Family, ModelParams, NetworkConfig, NodeProbs};
use crate::scalar::Scalar;
use crate::scene::RelationId;

/// Expected joint activations per edge, laid out like [`ModelParams`].
///
/// `s_tri[t]` is summed over every object pair of type `t`, so it can exceed 1.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeStats<S> {
    pub s_hv: Array2<S>,
    pub s_rh: Array2<S>,
    pub s_12: Array2<S>,
    pub s_tri: Array1<S>,
    pub biases: Option<Biases<S>>,
}

impl<S: Scalar> EdgeStats<S> {
    pub fn zeros(config: &NetworkConfig) -> Self {
        Self {
            s_hv: Array2::zeros((config.hidden1, config.num_objects)),
            s_rh: Array2::zeros((config.hidden1, config.rh_columns())),
            s_12: Array2::zeros((config.hidden1, config.hidden2)),
            s_tri: Array1::zeros(config.num_triway_weights()),
            biases: config.use_biases.then(|| Biases::zeros(config)),
        }
    }

    pub fn family(&self, family: Family) -> Option<&[S]> {
        let b = self.biases.as_ref();
        match family {
            Family::HiddenObject => self.s_hv.as_slice(),
            Family::RelationHidden => self.s_rh.as_slice(),
            Family::InterLayer => self.s_12.as_slice(),
            Family::Triway => self.s_tri.as_slice(),
            Family::BiasObject => b.and_then(|b| b.v.as_slice()),
            Family::BiasRelation => b.and_then(|b| b.r.as_slice()),
            Family::BiasHidden1 => b.and_then(|b| b.h1.as_slice()),
            Family::BiasHidden2 => b.and_then(|b| b.h2.as_slice()),
        }
    }

    fn family_mut(&mut self, family: Family) -> Option<&mut [S]> {
        let b = self.biases.as_mut();
        match family {
            Family::HiddenObject => self.s_hv.as_slice_mut(),
            Family::RelationHidden => self.s_rh.as_slice_mut(),
            Family::InterLayer => self.s_12.as_slice_mut(),
            Family::Triway => self.s_tri.as_slice_mut(),
            Family::BiasObject => b.and_then(|b| b.v.as_slice_mut()),
            Family::BiasRelation => b.and_then(|b| b.r.as_slice_mut()),
            Family::BiasHidden1 => b.and_then(|b| b.h1.as_slice_mut()),
            Family::BiasHidden2 => b.and_then(|b| b.h2.as_slice_mut()),
        }
    }

    /// Same order as [`ModelParams::to_flat`].
    pub fn to_flat(&self) -> Vec<S> {
        Family::ALL.iter().filter_map(|&f| self.family(f)).flatten().copied().collect()
    }

    pub fn from_flat(config: &NetworkConfig, flat: &[S]) -> Result<Self> {
        let mut s = Self::zeros(config);
        let mut rest = flat;
        for f in Family::ALL {
            if let Some(dst) = s.family_mut(f) {
                if rest.len() < dst.len() {
                    return Err(Error::ShapeMismatch("flat statistics too short".into()));
                }
                let (head, tail) = rest.split_at(dst.len());
                dst.copy_from_slice(head);
                rest = tail;
            }
        }
        if !rest.is_empty() {
            return Err(Error::ShapeMismatch("flat statistics too long".into()));
        }
        Ok(s)
    }

    fn zip_families(&mut self, other: &Self, mut f: impl FnMut(&mut S, S)) -> Result<()> {
        for fam in Family::ALL {
            match (self.family_mut(fam), other.family(fam)) {
                (Some(a), Some(b)) if a.len() == b.len() => a.iter_mut().zip(b).for_each(|(x, &y)| f(x, y)),
                (None, None) => {}
                _ => return Err(Error::ShapeMismatch(format!("statistics family {} differs", fam.name()))),
            }
        }
        Ok(())
    }

    pub fn add_assign(&mut self, other: &Self) -> Result<()> {
        self.zip_families(other, |a, b| *a += b)
    }

    pub fn scale(&mut self, factor: S) {
        for fam in Family::ALL {
            if let Some(a) = self.family_mut(fam) {
                a.iter_mut().for_each(|x| *x = *x * factor);
            }
        }
    }

    /// `self - other`.
    pub fn difference(&self, other: &Self) -> Result<Self> {
        let mut d = self.clone();
        d.zip_families(other, |a, b| *a -= b)?;
        Ok(d)
    }

    pub fn max_abs(&self) -> S {
        self.to_flat().into_iter().fold(S::zero(), |m, x| m.max(x.abs()))
    }

    /// Adds `weight ×` one sample's statistics: products of unit probabilities
    /// for every edge, with tri-way products summed over all object pairs.
    pub fn accumulate(&mut self, config: &NetworkConfig, probs: &NodeProbs<S>, weight: S) {
        let v = config.num_objects;
        let pv = Array1::from_vec(probs.v.clone());
        let nonzero_r: Vec<(usize, S)> =
            probs.r.iter().enumerate().filter(|(_, &p)| p != S::zero()).map(|(f, &p)| (f, p)).collect();
        // relation mass per weight column
        let rh_mass: Vec<(usize, S)> = match config.rh_sharing {
            crate::model::RhSharing::PerNode => nonzero_r.clone(),
            crate::model::RhSharing::PerType => {
                let mut per_type = vec![S::zero(); config.num_types];
                for &(f, p) in &nonzero_r {
                    per_type[config.rh_column(f)] += p;
                }
                per_type.into_iter().enumerate().filter(|(_, p)| *p != S::zero()).collect()
            }
        };
        let dense_rh = rh_mass.len() * 4 > config.rh_columns();
        let rh_row = dense_rh.then(|| {
            let mut row = Array1::<S>::zeros(config.rh_columns());
            for &(col, p) in &rh_mass {
                row[col] = p;
            }
            row
        });
        let ph2 = Array1::from_vec(probs.h2.clone());
        for (m, &ph) in probs.h1.iter().enumerate() {
            let w = ph * weight;
            if w == S::zero() {
                continue;
            }
            self.s_hv.row_mut(m).scaled_add(w, &pv);
            self.s_12.row_mut(m).scaled_add(w, &ph2);
            let mut row = self.s_rh.row_mut(m);
            match &rh_row {
                Some(dense) => row.scaled_add(w, dense),
                None => {
                    for &(col, p) in &rh_mass {
                        row[col] += w * p;
                    }
                }
            }
        }
        if config.use_triway {
            for &(f, p) in &nonzero_r {
                let id = RelationId::from_flat(f, v);
                self.s_tri[id.t] += weight * p * probs.v[id.j] * probs.v[id.k];
            }
        }
        if let Some(b) = &mut self.biases {
            for (dst, src) in [(&mut b.v, &probs.v), (&mut b.r, &probs.r), (&mut b.h1, &probs.h1), (&mut b.h2, &probs.h2)]
            {
                Zip::from(dst).and(src).for_each(|d, &s| *d += weight * s);
            }
        }
    }
}

/// Edge statistics of one phase from its unit probabilities (clamped units
/// contribute their 0/1 value).
pub fn phase_statistics<S: Scalar>(params: &ModelParams<S>, probs: &NodeProbs<S>) -> Result<EdgeStats<S>> {
    let c = &params.config;
    let got = (probs.v.len(), probs.r.len(), probs.h1.len(), probs.h2.len());
    let want = (c.num_objects, c.num_relations(), c.hidden1, c.hidden2);
    if got != want {
        return Err(Error::ShapeMismatch(format!("probabilities {got:?}, network expects {want:?}")));
    }
    let mut stats = EdgeStats::zeros(c);
    stats.accumulate(c, probs, S::one());
    Ok(stats)
}

/// `w ← w + α (p⁺ − p⁻)` for every family; tri-way updates touch `Tc` scalars.
pub fn apply_update<S: Scalar>(
    params: &ModelParams<S>,
    positive: &EdgeStats<S>,
    negative: &EdgeStats<S>,
    learning_rate: S,
) -> Result<ModelParams<S>> {
    let mut next = params.clone();
    for fam in Family::ALL {
        match (next.family_mut(fam), positive.family(fam), negative.family(fam)) {
            (Some(w), Some(p), Some(n)) if w.len() == p.len() && w.len() == n.len() => {
                for ((w, &p), &n) in w.iter_mut().zip(p).zip(n) {
                    *w += learning_rate * (p - n);
                }
                if w.iter().any(|x| !x.is_finite()) {
                    return Err(Error::NonFinite { family: fam.name() });
                }
            }
            (None, None, None) => {}
            _ => return Err(Error::ShapeMismatch(format!("family {} differs between weights and statistics", fam.name()))),
        }
    }
    Ok(next)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{init_params, NetworkState, RhSharing};
    use crate::rng;
    use rand::Rng as _;

    fn random_probs(c: &NetworkConfig, seed: u64) -> NodeProbs<f64> {
        let mut r = rng::seeded(seed);
        let mut p = NodeProbs::zeros(c);
        for x in p.v.iter_mut().chain(p.r.iter_mut()).chain(p.h1.iter_mut()).chain(p.h2.iter_mut()) {
            *x = r.random();
        }
        p
    }

    #[test]
    fn zero_probabilities_give_zero_stats() {
        let c = NetworkConfig::triway(3, 2, 2, 2);
        let p: ModelParams<f64> = ModelParams::zeros(c).unwrap();
        let s = phase_statistics(&p, &NodeProbs::zeros(&c)).unwrap();
        assert_eq!(s.max_abs(), 0.0);
    }

    #[test]
    fn single_certain_pair_counts_once() {
        let c = NetworkConfig::triway(3, 1, 1, 0);
        let p: ModelParams<f64> = ModelParams::zeros(c).unwrap();
        let mut st = NetworkState::zeros(&c);
        st.v[0] = true;
        st.v[2] = true;
        st.r[RelationId::new(0, 2, 0).flat(3)] = true;
        let s = phase_statistics(&p, &NodeProbs::from_state(&st)).unwrap();
        assert_eq!(s.s_tri[0], 1.0);
    }

    #[test]
    fn tri_stat_equals_pair_loop() {
        for seed in 0..20 {
            let c = NetworkConfig::triway(4, 3, 2, 1);
            let p: ModelParams<f64> = ModelParams::zeros(c).unwrap();
            let probs = random_probs(&c, seed);
            let s = phase_statistics(&p, &probs).unwrap();
            for t in 0..3 {
                let mut expected = 0.0;
                for j in 0..4 {
                    for k in 0..4 {
                        expected += probs.r[RelationId::new(t, j, k).flat(4)] * probs.v[j] * probs.v[k];
                    }
                }
                assert!((s.s_tri[t] - expected).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn outer_products_match_definition() {
        for sharing in [RhSharing::PerNode, RhSharing::PerType] {
            let mut c = NetworkConfig::triway(3, 2, 3, 2);
            c.rh_sharing = sharing;
            c.use_biases = true;
            let p: ModelParams<f64> = ModelParams::zeros(c).unwrap();
            let probs = random_probs(&c, 5);
            let s = phase_statistics(&p, &probs).unwrap();
            for m in 0..3 {
                for j in 0..3 {
                    assert!((s.s_hv[[m, j]] - probs.h1[m] * probs.v[j]).abs() < 1e-12);
                }
                for n in 0..2 {
                    assert!((s.s_12[[m, n]] - probs.h1[m] * probs.h2[n]).abs() < 1e-12);
                }
                let mut cols = vec![0.0; c.rh_columns()];
                for f in 0..c.num_relations() {
                    cols[c.rh_column(f)] += probs.h1[m] * probs.r[f];
                }
                for (col, want) in cols.into_iter().enumerate() {
                    assert!((s.s_rh[[m, col]] - want).abs() < 1e-12);
                }
            }
            assert_eq!(s.biases.as_ref().unwrap().h2.to_vec(), probs.h2);
        }
    }

    #[test]
    fn equal_phases_leave_params_unchanged() {
        let c = NetworkConfig::triway(3, 2, 2, 2);
        let p: ModelParams<f64> = init_params(c, &mut rng::seeded(3)).unwrap();
        let s = phase_statistics(&p, &random_probs(&c, 1)).unwrap();
        assert_eq!(apply_update(&p, &s, &s, 0.5).unwrap(), p);
    }

    #[test]
    fn unit_difference_moves_weight_by_alpha() {
        let c = NetworkConfig::triway(2, 1, 1, 1);
        let p: ModelParams<f64> = ModelParams::zeros(c).unwrap();
        let zero = EdgeStats::zeros(&c);
        let mut pos = zero.clone();
        pos.s_tri[0] = 1.0;
        pos.s_hv[[0, 1]] = 1.0;
        let q = apply_update(&p, &pos, &zero, 0.5).unwrap();
        assert_eq!(q.w_tri[0], 0.5);
        assert_eq!(q.w_hv[[0, 1]], 0.5);
        assert_eq!(q.w_hv[[0, 0]], 0.0);
        assert_eq!(q.w_tri.len(), c.num_types);
    }

    #[test]
    fn non_finite_update_names_family() {
        let c = NetworkConfig::triway(2, 1, 1, 1);
        let p: ModelParams<f64> = ModelParams::zeros(c).unwrap();
        let zero = EdgeStats::zeros(&c);
        let mut pos = zero.clone();
        pos.s_12[[0, 0]] = f64::INFINITY;
        match apply_update(&p, &pos, &zero, 1.0) {
            Err(Error::NonFinite { family }) => assert_eq!(family, "W_12"),
            other => panic!("expected NonFinite, got {other:?}"),
        }
    }

    #[test]
    fn flat_layout_matches_params() {
        let mut c = NetworkConfig::triway(2, 2, 2, 1);
        c.use_biases = true;
        let s = phase_statistics(&ModelParams::<f64>::zeros(c).unwrap(), &random_probs(&c, 2)).unwrap();
        let flat = s.to_flat();
        assert_eq!(flat.len(), ModelParams::<f64>::zeros(c).unwrap().num_weights());
        assert_eq!(EdgeStats::from_flat(&c, &flat).unwrap(), s);
    }
}
