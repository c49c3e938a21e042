use ndarray::Array1;

use super::params::ModelParams;
use super::state::{NetworkState, Node};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::scene::RelationId;

#[inline]
pub(crate) fn sigmoid<S: Scalar>(x: S) -> S {
    if x >= S::zero() {
        S::one() / (S::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (S::one() + e)
    }
}

/// `1 / (1 + exp(-input / T))`: the probability of switching a unit on when
/// that lowers the energy by `input`.
pub fn activation_prob<S: Scalar>(input: S, temperature: S) -> Result<S> {
    if !(temperature > S::zero()) {
        return Err(Error::Temperature(temperature.as_f64()));
    }
    Ok(sigmoid(input / temperature))
}

/// The non-negated sums making up the energy; `energy = -(sum of all)`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EnergyTerms<S> {
    pub hidden_object: S,
    pub hidden_hidden: S,
    pub triway: S,
    pub relation_hidden: S,
    pub bias: S,
}

impl<S: Scalar> EnergyTerms<S> {
    pub fn total(&self) -> S {
        -(self.hidden_object + self.hidden_hidden + self.triway + self.relation_hidden + self.bias)
    }
}

fn sum_where<S: Scalar>(values: impl Iterator<Item = S>, mask: &[bool]) -> S {
    values.zip(mask).filter(|(_, &on)| on).map(|(x, _)| x).sum()
}

pub fn energy_terms<S: Scalar>(params: &ModelParams<S>, state: &NetworkState) -> Result<EnergyTerms<S>> {
    let c = &params.config;
    state.check_shape(c)?;
    let objects = state.active_objects();
    let relations = state.active_relations();
    let v = c.num_objects;

    let mut t = EnergyTerms::<S>::default();
    for (m, _) in state.h1.iter().enumerate().filter(|(_, &on)| on) {
        let row_hv = params.w_hv.row(m);
        t.hidden_object += objects.iter().map(|&j| row_hv[j]).sum();
        t.hidden_hidden += sum_where(params.w_12.row(m).iter().copied(), &state.h2);
        let row_rh = params.w_rh.row(m);
        t.relation_hidden += relations.iter().map(|&f| row_rh[c.rh_column(f)]).sum();
    }
    if c.use_triway {
        for &f in &relations {
            let id = RelationId::from_flat(f, v);
            if state.v[id.j] && state.v[id.k] {
                t.triway += params.w_tri[id.t];
            }
        }
    }
    if let Some(b) = &params.biases {
        t.bias = sum_where(b.v.iter().copied(), &state.v)
            + sum_where(b.r.iter().copied(), &state.r)
            + sum_where(b.h1.iter().copied(), &state.h1)
            + sum_where(b.h2.iter().copied(), &state.h2);
    }
    Ok(t)
}

/// Energy of a joint state (temperature not applied).
///
/// `E = -Σ h1·W_hv·v - Σ h1·W_12·h2 - Σ_t w_t Σ_{j,k} r_tjk v_j v_k - Σ r·W_rh·h1 - biases`.
/// There are no visible–visible and no intra-layer hidden terms.
pub fn energy<S: Scalar>(params: &ModelParams<S>, state: &NetworkState) -> Result<S> {
    Ok(energy_terms(params, state)?.total())
}

/// Tri-way contribution to object `j`'s input given the current state.
pub fn object_triway_input<S: Scalar>(params: &ModelParams<S>, state: &NetworkState, j: usize) -> S {
    let c = &params.config;
    if !c.use_triway {
        return S::zero();
    }
    let v = c.num_objects;
    let mut total = S::zero();
    for t in 0..c.num_types {
        let base = t * v * v;
        let mut count = 0usize;
        for k in 0..v {
            if k == j {
                count += state.r[base + j * v + j] as usize;
            } else if state.v[k] {
                count += state.r[base + j * v + k] as usize + state.r[base + k * v + j] as usize;
            }
        }
        if count > 0 {
            total += params.w_tri[t] * S::of(count as f64);
        }
    }
    total
}

/// Input `I(x)` such that `E(x=1) - E(x=0) = -I(x)` with every other unit fixed.
pub fn node_input<S: Scalar>(params: &ModelParams<S>, state: &NetworkState, node: Node) -> Result<S> {
    let c = &params.config;
    state.check_shape(c)?;
    if state.get(node).is_none() {
        return Err(Error::IndexOutOfRange(format!("{node:?}")));
    }
    let bias = |f: fn(&super::params::Biases<S>) -> &Array1<S>, i: usize| {
        params.biases.as_ref().map_or(S::zero(), |b| f(b)[i])
    };
    let input = match node {
        Node::Object(j) => {
            sum_where(params.w_hv.column(j).iter().copied(), &state.h1)
                + object_triway_input(params, state, j)
                + bias(|b| &b.v, j)
        }
        Node::Relation(f) => {
            let id = RelationId::from_flat(f, c.num_objects);
            let tri = if c.use_triway && state.v[id.j] && state.v[id.k] { params.w_tri[id.t] } else { S::zero() };
            tri + sum_where(params.w_rh.column(c.rh_column(f)).iter().copied(), &state.h1) + bias(|b| &b.r, f)
        }
        Node::Hidden1(m) => {
            let row_rh = params.w_rh.row(m);
            let rel: S = state.r.iter().enumerate().filter(|(_, &on)| on).map(|(f, _)| row_rh[c.rh_column(f)]).sum();
            sum_where(params.w_hv.row(m).iter().copied(), &state.v)
                + rel
                + sum_where(params.w_12.row(m).iter().copied(), &state.h2)
                + bias(|b| &b.h1, m)
        }
        Node::Hidden2(n) => sum_where(params.w_12.column(n).iter().copied(), &state.h1) + bias(|b| &b.h2, n),
    };
    Ok(input)
}

/// Inputs to every bottom-layer hidden unit.
pub fn hidden1_inputs<S: Scalar>(params: &ModelParams<S>, state: &NetworkState) -> Vec<S> {
    let c = &params.config;
    let objects = state.active_objects();
    let columns: Vec<usize> = state.active_relations().into_iter().map(|f| c.rh_column(f)).collect();
    let h2: Vec<usize> = state.h2.iter().enumerate().filter_map(|(n, &on)| on.then_some(n)).collect();
    (0..c.hidden1)
        .map(|m| {
            let hv = params.w_hv.row(m);
            let rh = params.w_rh.row(m);
            let w12 = params.w_12.row(m);
            let mut x: S = objects.iter().map(|&j| hv[j]).sum();
            x += columns.iter().map(|&col| rh[col]).sum();
            x += h2.iter().map(|&n| w12[n]).sum();
            if let Some(b) = &params.biases {
                x += b.h1[m];
            }
            x
        })
        .collect()
}

/// Inputs to every top-layer hidden unit.
pub fn hidden2_inputs<S: Scalar>(params: &ModelParams<S>, h1: &[bool]) -> Vec<S> {
    let mut acc = Array1::<S>::zeros(params.config.hidden2);
    for (m, _) in h1.iter().enumerate().filter(|(_, &on)| on) {
        acc.scaled_add(S::one(), &params.w_12.row(m));
    }
    if let Some(b) = &params.biases {
        acc += &b.h2;
    }
    acc.to_vec()
}

/// Hidden (plus bias) part of every object's input.
pub fn object_hidden_drive<S: Scalar>(params: &ModelParams<S>, h1: &[bool]) -> Vec<S> {
    let mut acc = Array1::<S>::zeros(params.config.num_objects);
    for (m, _) in h1.iter().enumerate().filter(|(_, &on)| on) {
        acc.scaled_add(S::one(), &params.w_hv.row(m));
    }
    if let Some(b) = &params.biases {
        acc += &b.v;
    }
    acc.to_vec()
}

/// Hidden part of the input for every relation weight column.
pub fn relation_hidden_drive<S: Scalar>(params: &ModelParams<S>, h1: &[bool]) -> Vec<S> {
    let mut acc = Array1::<S>::zeros(params.config.rh_columns());
    for (m, _) in h1.iter().enumerate().filter(|(_, &on)| on) {
        acc.scaled_add(S::one(), &params.w_rh.row(m));
    }
    acc.to_vec()
}

/// Input of relation `flat` given a precomputed [`relation_hidden_drive`].
#[inline]
pub fn relation_input<S: Scalar>(params: &ModelParams<S>, state: &NetworkState, drive: &[S], flat: usize) -> S {
    let c = &params.config;
    let mut x = drive[c.rh_column(flat)];
    if c.use_triway {
        let id = RelationId::from_flat(flat, c.num_objects);
        if state.v[id.j] && state.v[id.k] {
            x += params.w_tri[id.t];
        }
    }
    if let Some(b) = &params.biases {
        x += b.r[flat];
    }
    x
}
