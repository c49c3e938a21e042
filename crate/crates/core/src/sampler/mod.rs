//! Gibbs sampling: hidden sweeps under clamping, the object-then-relation
//! negative phase, conditional completion and hidden-driven generation.
//!
//! Hidden units within a layer are conditionally independent and update in
//! parallel. Object units are coupled through tri-way edges, so by default
//! they update one at a time in a fresh random order each step. Relation units
//! are conditionally independent given objects and hidden units.

mod mask;
mod settings;

pub use mask::ClampMask;
pub use settings::{Anneal, SamplerSettings, UpdateOrder};

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::model::{
    hidden1_inputs, hidden2_inputs, object_hidden_drive, object_triway_input, relation_hidden_drive,
    relation_input, sigmoid, ModelParams, NetworkState, Node, NodeProbs, RelationSupport,
};
use crate::scalar::Scalar;
use crate::scene::{RelationId, SceneVector};

/// A Markov chain position: current bits plus the probability each unit had
/// at its most recent update (clamped units carry their bit).
#[derive(Debug, Clone, PartialEq)]
pub struct Chain<S> {
    pub state: NetworkState,
    pub probs: NodeProbs<S>,
}

impl<S: Scalar> Chain<S> {
    pub fn new(state: NetworkState) -> Self {
        let probs = NodeProbs::from_state(&state);
        Self { state, probs }
    }
}

#[inline]
fn draw<S: Scalar, R: Rng + ?Sized>(p: S, rng: &mut R) -> bool {
    rng.random::<f64>() < p.as_f64()
}

#[inline]
fn bit<S: Scalar>(b: bool) -> S {
    if b {
        S::one()
    } else {
        S::zero()
    }
}

fn check<S: Scalar>(params: &ModelParams<S>, chain: &Chain<S>, mask: &ClampMask, temperature: S) -> Result<()> {
    chain.state.check_shape(&params.config)?;
    mask.check_shape(&params.config)?;
    if !(temperature > S::zero()) {
        return Err(Error::Temperature(temperature.as_f64()));
    }
    Ok(())
}

fn sweep_hidden_unchecked<S: Scalar, R: Rng + ?Sized>(
    params: &ModelParams<S>,
    chain: &mut Chain<S>,
    mask: &ClampMask,
    temperature: S,
    rng: &mut R,
) {
    let inputs = hidden1_inputs(params, &chain.state);
    for (m, x) in inputs.into_iter().enumerate() {
        match mask.hidden1[m] {
            Some(b) => {
                chain.state.h1[m] = b;
                chain.probs.h1[m] = bit(b);
            }
            None => {
                let p = sigmoid(x / temperature);
                chain.probs.h1[m] = p;
                chain.state.h1[m] = draw(p, rng);
            }
        }
    }
    if params.config.hidden2 == 0 {
        return;
    }
    let inputs = hidden2_inputs(params, &chain.state.h1);
    for (n, x) in inputs.into_iter().enumerate() {
        match mask.hidden2[n] {
            Some(b) => {
                chain.state.h2[n] = b;
                chain.probs.h2[n] = bit(b);
            }
            None => {
                let p = sigmoid(x / temperature);
                chain.probs.h2[n] = p;
                chain.state.h2[n] = draw(p, rng);
            }
        }
    }
}

/// Resamples the bottom hidden layer given visibles and the top layer, then
/// the top layer given the new bottom layer. Clamped hidden units take their
/// forced values.
pub fn sweep_hidden<S: Scalar, R: Rng + ?Sized>(
    params: &ModelParams<S>,
    chain: &mut Chain<S>,
    mask: &ClampMask,
    temperature: S,
    rng: &mut R,
) -> Result<()> {
    check(params, chain, mask, temperature)?;
    sweep_hidden_unchecked(params, chain, mask, temperature, rng);
    Ok(())
}

fn sample_objects<S: Scalar, R: Rng + ?Sized>(
    params: &ModelParams<S>,
    chain: &mut Chain<S>,
    mask: &ClampMask,
    temperature: S,
    order: UpdateOrder,
    rng: &mut R,
) {
    let drive = object_hidden_drive(params, &chain.state.h1);
    let mut free: Vec<usize> = (0..params.config.num_objects).filter(|&j| !mask.objects[j]).collect();
    match order {
        UpdateOrder::SequentialRandom => {
            free.shuffle(rng);
            for j in free {
                let x = drive[j] + object_triway_input(params, &chain.state, j);
                let p = sigmoid(x / temperature);
                chain.probs.v[j] = p;
                chain.state.v[j] = draw(p, rng);
            }
        }
        UpdateOrder::ParallelBlock => {
            let probs: Vec<S> = free
                .iter()
                .map(|&j| sigmoid((drive[j] + object_triway_input(params, &chain.state, j)) / temperature))
                .collect();
            for (j, p) in free.into_iter().zip(probs) {
                chain.probs.v[j] = p;
                chain.state.v[j] = draw(p, rng);
            }
        }
    }
}

fn sample_relations<S: Scalar, R: Rng + ?Sized>(
    params: &ModelParams<S>,
    chain: &mut Chain<S>,
    mask: &ClampMask,
    temperature: S,
    rng: &mut R,
) {
    let c = &params.config;
    let v = c.num_objects;
    let drive = relation_hidden_drive(params, &chain.state.h1);
    let gated = c.relation_support == RelationSupport::ActivePairs;
    for f in 0..c.num_relations() {
        if mask.relations[f] {
            continue;
        }
        if gated {
            let id = RelationId::from_flat(f, v);
            if !(chain.state.v[id.j] && chain.state.v[id.k]) {
                chain.state.r[f] = false;
                chain.probs.r[f] = S::zero();
                continue;
            }
        }
        let p = sigmoid(relation_input(params, &chain.state, &drive, f) / temperature);
        chain.probs.r[f] = p;
        chain.state.r[f] = draw(p, rng);
    }
}

/// One negative-phase step: hidden sweep, then free objects given hidden
/// units and relations, then free relations given the new objects and hidden
/// units.
pub fn negative_phase_step<S: Scalar, R: Rng + ?Sized>(
    params: &ModelParams<S>,
    chain: &mut Chain<S>,
    mask: &ClampMask,
    temperature: S,
    order: UpdateOrder,
    rng: &mut R,
) -> Result<()> {
    check(params, chain, mask, temperature)?;
    sweep_hidden_unchecked(params, chain, mask, temperature, rng);
    sample_objects(params, chain, mask, temperature, order, rng);
    sample_relations(params, chain, mask, temperature, rng);
    Ok(())
}

/// Clamps `scene` under `mask`, settles with `settle_sweeps` negative-phase
/// steps and returns the final state with per-unit probabilities averaged
/// over the last `⌈settle_sweeps / 2⌉` steps.
///
/// Free visibles start from `scene` as well, and the hidden layers get
/// `k_pos` warm-up sweeps before any visible unit moves.
pub fn conditional_complete<S: Scalar, R: Rng + ?Sized>(
    params: &ModelParams<S>,
    scene: &SceneVector,
    mask: &ClampMask,
    settings: &SamplerSettings,
    rng: &mut R,
) -> Result<(NetworkState, NodeProbs<S>)> {
    settings.validate()?;
    let mut state = NetworkState::from_scene(&params.config, scene)?;
    mask.check_shape(&params.config)?;
    mask.apply_hidden(&mut state);
    let mut chain = Chain::new(state);

    let first = S::of(settings.temperature_at(0));
    for _ in 0..settings.k_pos {
        sweep_hidden(params, &mut chain, mask, first, rng)?;
    }
    let tail = settings.settle_sweeps.div_ceil(2);
    let weight = S::one() / S::of(tail as f64);
    let mut mean = NodeProbs::zeros(&params.config);
    for sweep in 0..settings.settle_sweeps {
        let t = S::of(settings.temperature_at(sweep));
        negative_phase_step(params, &mut chain, mask, t, settings.order, rng)?;
        if sweep >= settings.settle_sweeps - tail {
            mean.add_scaled(&chain.probs, weight);
        }
    }
    Ok((chain.state, mean))
}

/// Clamps the given hidden units on (others start off and stay free), starts
/// from an empty scene and settles. An empty `hidden` gives a free-running
/// sample.
pub fn generate_from_hidden<S: Scalar, R: Rng + ?Sized>(
    params: &ModelParams<S>,
    hidden: &[Node],
    settings: &SamplerSettings,
    rng: &mut R,
) -> Result<(NetworkState, NodeProbs<S>)> {
    let c = &params.config;
    let mut mask = ClampMask::free(c);
    for &node in hidden {
        mask.clamp_hidden(node, true)?;
    }
    conditional_complete(params, &SceneVector::empty(c.num_objects, c.num_types), &mask, settings, rng)
}
