//! Exact quantities for tiny networks by enumerating every joint state.
//!
//! States are visited in lexicographic order over the unit layout
//! `v, r, h1, h2`, first unit most significant. Everything is accumulated in
//! log space with max-subtraction and returned in `f64`.

use crate::error::{Error, Result};
use crate::model::{energy, ModelParams, NetworkConfig, NetworkState, NodeProbs};
use crate::sampler::ClampMask;
use crate::scalar::Scalar;
use crate::scene::RelationId;
use crate::trainer::EdgeStats;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TinyLimit {
    pub max_total_nodes: usize,
}

impl Default for TinyLimit {
    fn default() -> Self {
        Self { max_total_nodes: 20 }
    }
}

impl TinyLimit {
    pub fn check(&self, config: &NetworkConfig) -> Result<()> {
        let nodes = config.num_nodes();
        if nodes > self.max_total_nodes {
            return Err(Error::TooLarge { nodes, limit: self.max_total_nodes });
        }
        Ok(())
    }
}

/// Decodes state number `index` (first unit = most significant bit).
pub fn state_from_index(config: &NetworkConfig, index: u64) -> NetworkState {
    let n = config.num_nodes();
    let bit = |i: usize| (index >> (n - 1 - i)) & 1 == 1;
    let (v, r, h1) = (config.num_objects, config.num_relations(), config.hidden1);
    NetworkState {
        v: (0..v).map(bit).collect(),
        r: (v..v + r).map(bit).collect(),
        h1: (v + r..v + r + h1).map(bit).collect(),
        h2: (v + r + h1..n).map(bit).collect(),
    }
}

pub(crate) fn log_sum_exp(xs: impl IntoIterator<Item = f64>) -> f64 {
    let xs: Vec<f64> = xs.into_iter().collect();
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + compensated_sum(xs.iter().map(|x| (x - max).exp())).ln()
}

/// Neumaier summation; the finite-difference checks difference two of these.
pub(crate) fn compensated_sum(xs: impl IntoIterator<Item = f64>) -> f64 {
    let (mut sum, mut carry) = (0.0f64, 0.0f64);
    for x in xs {
        let t = sum + x;
        carry += if sum.abs() >= x.abs() { (sum - t) + x } else { (x - t) + sum };
        sum = t;
    }
    sum + carry
}

/// `-E(s)/T` for every state, in enumeration order.
fn log_weights<S: Scalar>(params: &ModelParams<S>, limit: TinyLimit) -> Result<Vec<f64>> {
    let c = &params.config;
    limit.check(c)?;
    let t = c.temperature;
    (0..1u64 << c.num_nodes())
        .map(|i| Ok(-energy(params, &state_from_index(c, i))?.as_f64() / t))
        .collect()
}

/// `log Z` with `Z = Σ_s exp(-E(s)/T)`.
pub fn log_partition_function<S: Scalar>(params: &ModelParams<S>) -> Result<f64> {
    Ok(log_sum_exp(log_weights(params, TinyLimit::default())?))
}

pub fn partition_function<S: Scalar>(params: &ModelParams<S>) -> Result<f64> {
    Ok(log_partition_function(params)?.exp())
}

/// Probability of every state, in enumeration order.
pub fn state_probabilities<S: Scalar>(params: &ModelParams<S>) -> Result<Vec<f64>> {
    let lw = log_weights(params, TinyLimit::default())?;
    let log_z = log_sum_exp(lw.iter().copied());
    Ok(lw.into_iter().map(|x| (x - log_z).exp()).collect())
}

fn consistent(state: &NetworkState, mask: &ClampMask, reference: &NetworkState) -> bool {
    let vis = |a: &[bool], m: &[bool], r: &[bool]| a.iter().zip(m).zip(r).all(|((x, &c), y)| !c || x == y);
    let hid = |a: &[bool], m: &[Option<bool>]| a.iter().zip(m).all(|(x, c)| c.is_none_or(|c| c == *x));
    vis(&state.v, &mask.objects, &reference.v)
        && vis(&state.r, &mask.relations, &reference.r)
        && hid(&state.h1, &mask.hidden1)
        && hid(&state.h2, &mask.hidden2)
}

/// `p(x = 1 | clamped units)` for every unit. Clamped visible units take
/// their value from `reference`, clamped hidden units from the mask.
pub fn exact_marginals<S: Scalar>(
    params: &ModelParams<S>,
    mask: &ClampMask,
    reference: &NetworkState,
) -> Result<NodeProbs<f64>> {
    let c = &params.config;
    TinyLimit::default().check(c)?;
    mask.check_shape(c)?;
    reference.check_shape(c)?;
    let mut states = Vec::new();
    let mut logw = Vec::new();
    for i in 0..1u64 << c.num_nodes() {
        let s = state_from_index(c, i);
        if consistent(&s, mask, reference) {
            logw.push(-energy(params, &s)?.as_f64() / c.temperature);
            states.push(s);
        }
    }
    let log_z = log_sum_exp(logw.iter().copied());
    let mut out = NodeProbs::<f64>::zeros(c);
    for (s, lw) in states.iter().zip(logw) {
        let p = (lw - log_z).exp();
        for (dst, src) in [(&mut out.v, &s.v), (&mut out.r, &s.r), (&mut out.h1, &s.h1), (&mut out.h2, &s.h2)] {
            for (d, &b) in dst.iter_mut().zip(src) {
                if b {
                    *d += p;
                }
            }
        }
    }
    Ok(out)
}

/// Sufficient statistics `-∂E/∂w` of one joint state, by direct loops.
pub fn sufficient_stats(config: &NetworkConfig, s: &NetworkState) -> EdgeStats<f64> {
    let mut st = EdgeStats::<f64>::zeros(config);
    let one = |b: bool| if b { 1.0 } else { 0.0 };
    let v = config.num_objects;
    for m in 0..config.hidden1 {
        for j in 0..v {
            st.s_hv[[m, j]] = one(s.h1[m] && s.v[j]);
        }
        for n in 0..config.hidden2 {
            st.s_12[[m, n]] = one(s.h1[m] && s.h2[n]);
        }
        for f in 0..config.num_relations() {
            st.s_rh[[m, config.rh_column(f)]] += one(s.h1[m] && s.r[f]);
        }
    }
    if config.use_triway {
        for t in 0..config.num_types {
            for j in 0..v {
                for k in 0..v {
                    st.s_tri[t] += one(s.r[RelationId::new(t, j, k).flat(v)] && s.v[j] && s.v[k]);
                }
            }
        }
    }
    if let Some(b) = &mut st.biases {
        for (dst, src) in [(&mut b.v, &s.v), (&mut b.r, &s.r), (&mut b.h1, &s.h1), (&mut b.h2, &s.h2)] {
            for (d, &x) in dst.iter_mut().zip(src) {
                *d = one(x);
            }
        }
    }
    st
}

fn check_data(config: &NetworkConfig, data: &[NetworkState]) -> Result<()> {
    if data.is_empty() {
        return Err(Error::EmptyDataset("oracle needs at least one visible configuration".into()));
    }
    data.iter().try_for_each(|d| d.check_shape(config))
}

/// Joint states sharing `data`'s visibles, with their unnormalized log weights.
fn hidden_completions<S: Scalar>(params: &ModelParams<S>, visible: &NetworkState) -> Result<Vec<(NetworkState, f64)>> {
    let c = &params.config;
    let hidden = c.hidden1 + c.hidden2;
    (0..1u64 << hidden)
        .map(|h| {
            let mut s = visible.clone();
            for i in 0..c.hidden1 {
                s.h1[i] = (h >> (hidden - 1 - i)) & 1 == 1;
            }
            for i in 0..c.hidden2 {
                s.h2[i] = (h >> (c.hidden2 - 1 - i)) & 1 == 1;
            }
            let lw = -energy(params, &s)?.as_f64() / c.temperature;
            Ok((s, lw))
        })
        .collect()
}

/// Mean over `data` of `log p(v, r)`, hidden units marginalized.
pub fn exact_loglik<S: Scalar>(params: &ModelParams<S>, data: &[NetworkState]) -> Result<f64> {
    let c = &params.config;
    check_data(c, data)?;
    let log_z = log_partition_function(params)?;
    let mut total = 0.0;
    for d in data {
        let lw = hidden_completions(params, d)?.into_iter().map(|(_, w)| w);
        total += log_sum_exp(lw) - log_z;
    }
    Ok(total / data.len() as f64)
}

/// `E_data[stats]` with hidden units drawn from their exact posterior.
pub fn data_expectations<S: Scalar>(params: &ModelParams<S>, data: &[NetworkState]) -> Result<EdgeStats<f64>> {
    let c = &params.config;
    check_data(c, data)?;
    let mut acc = EdgeStats::zeros(c);
    for d in data {
        let completions = hidden_completions(params, d)?;
        let log_norm = log_sum_exp(completions.iter().map(|(_, w)| *w));
        for (s, lw) in completions {
            let mut st = sufficient_stats(c, &s);
            st.scale((lw - log_norm).exp() / data.len() as f64);
            acc.add_assign(&st)?;
        }
    }
    Ok(acc)
}

/// `E_model[stats]` under `p ∝ exp(-E/T)`.
pub fn model_expectations<S: Scalar>(params: &ModelParams<S>) -> Result<EdgeStats<f64>> {
    let c = &params.config;
    let probs = state_probabilities(params)?;
    let mut acc = EdgeStats::zeros(c);
    for (i, p) in probs.into_iter().enumerate() {
        let mut st = sufficient_stats(c, &state_from_index(c, i as u64));
        st.scale(p);
        acc.add_assign(&st)?;
    }
    Ok(acc)
}

/// `∂/∂w` of [`exact_loglik`]: `(E_data[stats] − E_model[stats]) / T`.
pub fn exact_gradient<S: Scalar>(params: &ModelParams<S>, data: &[NetworkState]) -> Result<EdgeStats<f64>> {
    let mut g = data_expectations(params, data)?.difference(&model_expectations(params)?)?;
    g.scale(1.0 / params.config.temperature);
    Ok(g)
}

/// Gradient contribution of the single pair `(j, k)` to tri-way weight `t`,
/// computed with its own enumeration.
pub fn exact_pair_gradient<S: Scalar>(
    params: &ModelParams<S>,
    data: &[NetworkState],
    t: usize,
    j: usize,
    k: usize,
) -> Result<f64> {
    let c = &params.config;
    check_data(c, data)?;
    let flat = RelationId::new(t, j, k).flat(c.num_objects);
    let indicator = |s: &NetworkState| if s.r[flat] && s.v[j] && s.v[k] { 1.0 } else { 0.0 };
    let mut data_term = 0.0;
    for d in data {
        let completions = hidden_completions(params, d)?;
        let log_norm = log_sum_exp(completions.iter().map(|(_, w)| *w));
        data_term += completions.iter().map(|(s, lw)| (lw - log_norm).exp() * indicator(s)).sum::<f64>();
    }
    data_term /= data.len() as f64;
    let model_term: f64 = state_probabilities(params)?
        .into_iter()
        .enumerate()
        .map(|(i, p)| p * indicator(&state_from_index(c, i as u64)))
        .sum();
    Ok((data_term - model_term) / c.temperature)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{init_params, Node};
    use crate::rng;
    use ndarray::array;
    use rand::Rng as _;

    fn tiny(seed: u64) -> ModelParams<f64> {
        let c = NetworkConfig::triway(3, 1, 2, 2);
        let mut p: ModelParams<f64> = init_params(c, &mut rng::seeded(seed)).unwrap();
        let mut r = rng::seeded(seed + 1000);
        let flat: Vec<f64> = (0..p.num_weights()).map(|_| r.random_range(-1.0..1.0)).collect();
        p.set_flat(&flat).unwrap();
        p
    }

    #[test]
    fn zero_weights_give_two_to_the_n() {
        let c = NetworkConfig::triway(2, 1, 2, 2);
        let p = ModelParams::<f64>::zeros(c).unwrap();
        assert!((partition_function(&p).unwrap() - 2f64.powi(c.num_nodes() as i32)).abs() < 1e-9);
        let m = exact_marginals(&p, &ClampMask::free(&c), &NetworkState::zeros(&c)).unwrap();
        assert!(m.values().all(|x| (x - 0.5).abs() < 1e-12));
    }

    #[test]
    fn single_edge_partition_function() {
        let c = NetworkConfig::rbm(1, 1, 1);
        let mut p = ModelParams::<f64>::zeros(c).unwrap();
        // two relevant units (v0, h0) plus one idle relation unit doubling Z
        let w = 0.7;
        p.w_hv = array![[w]];
        assert!((partition_function(&p).unwrap() - 2.0 * (3.0 + w.exp())).abs() < 1e-12);
    }

    #[test]
    fn worked_example_z_two_orders() {
        let c = NetworkConfig { use_triway: true, ..NetworkConfig::rbm(2, 1, 1) };
        let mut p = ModelParams::<f64>::zeros(c).unwrap();
        p.w_hv = array![[0.5, -0.25]];
        p.w_tri = array![1.0];
        let z = partition_function(&p).unwrap();
        // reverse order, plain (non-log) accumulation
        let n = c.num_nodes();
        let mut z2 = 0.0;
        for i in (0..1u64 << n).rev() {
            z2 += (-energy(&p, &state_from_index(&c, i)).unwrap()).exp();
        }
        assert!((z - z2).abs() < 1e-9 * z);
    }

    #[test]
    fn probabilities_sum_to_one() {
        let p = tiny(3);
        let total: f64 = state_probabilities(&p).unwrap().iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn too_large_rejected() {
        let p = ModelParams::<f64>::zeros(NetworkConfig::triway(3, 2, 2, 2)).unwrap();
        assert!(matches!(log_partition_function(&p), Err(Error::TooLarge { .. })));
    }

    #[test]
    fn clamped_marginal_equals_clamp() {
        let p = tiny(4);
        let c = p.config;
        let mut mask = ClampMask::free(&c);
        mask.clamp(Node::Object(1)).unwrap();
        mask.clamp_hidden(Node::Hidden2(0), false).unwrap();
        let mut reference = NetworkState::zeros(&c);
        reference.v[1] = true;
        let m = exact_marginals(&p, &mask, &reference).unwrap();
        assert!((m.v[1] - 1.0).abs() < 1e-12);
        assert!(m.h2[0].abs() < 1e-12);
    }

    #[test]
    fn marginals_satisfy_chain_rule() {
        // 3-unit case: v0, one hidden unit, plus idle relation units on a V=1 net
        let c = NetworkConfig::rbm(1, 1, 2);
        let mut p = ModelParams::<f64>::zeros(c).unwrap();
        p.w_hv = array![[0.8], [-1.3]];
        p.w_rh = array![[0.4], [0.9]];
        let free = exact_marginals(&p, &ClampMask::free(&c), &NetworkState::zeros(&c)).unwrap();
        let mut via_conditioning = 0.0;
        for v0 in [false, true] {
            let mut reference = NetworkState::zeros(&c);
            reference.v[0] = v0;
            let mut mask = ClampMask::free(&c);
            mask.clamp(Node::Object(0)).unwrap();
            let cond = exact_marginals(&p, &mask, &reference).unwrap();
            let p_v0 = if v0 { free.v[0] } else { 1.0 - free.v[0] };
            via_conditioning += cond.h1[0] * p_v0;
        }
        assert!((via_conditioning - free.h1[0]).abs() < 1e-12);
    }

    fn all_visibles(c: &NetworkConfig) -> Vec<NetworkState> {
        let nv = c.num_visible();
        (0..1u64 << nv)
            .map(|i| {
                let mut s = NetworkState::zeros(c);
                for u in 0..nv {
                    let b = (i >> (nv - 1 - u)) & 1 == 1;
                    if u < c.num_objects {
                        s.v[u] = b;
                    } else {
                        s.r[u - c.num_objects] = b;
                    }
                }
                s
            })
            .collect()
    }

    #[test]
    fn uniform_data_zero_weights_zero_gradient() {
        let c = NetworkConfig::triway(2, 1, 1, 1);
        let p = ModelParams::<f64>::zeros(c).unwrap();
        let g = exact_gradient(&p, &all_visibles(&c)).unwrap();
        assert!(g.max_abs() < 1e-12);
    }

    fn random_data(c: &NetworkConfig, seed: u64, n: usize) -> Vec<NetworkState> {
        let mut r = rng::seeded(seed);
        (0..n)
            .map(|_| {
                let mut s = NetworkState::zeros(c);
                s.v.iter_mut().chain(s.r.iter_mut()).for_each(|b| *b = r.random());
                s
            })
            .collect()
    }

    #[test]
    fn gradient_matches_central_differences() {
        let p = tiny(5);
        let data = random_data(&p.config, 9, 6);
        let g = exact_gradient(&p, &data).unwrap().to_flat();
        let base = p.to_flat();
        let h = 1e-5;
        for i in 0..base.len() {
            let mut plus = p.clone();
            let mut minus = p.clone();
            let mut x = base.clone();
            x[i] += h;
            plus.set_flat(&x).unwrap();
            x[i] -= 2.0 * h;
            minus.set_flat(&x).unwrap();
            let fd = (exact_loglik(&plus, &data).unwrap() - exact_loglik(&minus, &data).unwrap()) / (2.0 * h);
            let rel = (fd - g[i]).abs() / g[i].abs().max(1e-3);
            assert!(rel < 1e-5, "weight {i}: fd {fd} vs analytic {}", g[i]);
        }
    }

    #[test]
    fn tri_gradient_is_sum_of_pair_gradients() {
        let p = tiny(6);
        let data = random_data(&p.config, 2, 5);
        let g = exact_gradient(&p, &data).unwrap();
        let mut pair_sum = 0.0;
        for j in 0..3 {
            for k in 0..3 {
                pair_sum += exact_pair_gradient(&p, &data, 0, j, k).unwrap();
            }
        }
        assert!((g.s_tri[0] - pair_sum).abs() < 1e-9);
    }
}
