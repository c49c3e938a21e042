//! Oracle-backed release checks on built-in tiny networks.
//!
//! Each check returns the largest deviation it saw next to its tolerance, so a
//! failure says which invariant broke and by how much. A [`Mutation`] injects
//! a known bug into the trainer-side computation to show the checks catch it.

use std::fmt;
use std::str::FromStr;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{energy, node_input, ModelParams, NetworkConfig, NetworkState, Node, NodeProbs, RhSharing};
use crate::oracle::{
    exact_gradient, exact_loglik, exact_marginals, exact_pair_gradient,
    state_from_index, state_probabilities,
};
use crate::rng;
use crate::sampler::{negative_phase_step, Chain, ClampMask, UpdateOrder};
use crate::scene::implied_dimension;
use crate::tasks::chance_levels;
use crate::trainer::{apply_update, EdgeStats};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mutation {
    #[default]
    None,
    /// Update with `−α(p⁺ − p⁻)`.
    FlipUpdateSign,
    /// Average tri-way statistics over pairs instead of summing them.
    WrongTriwayAggregation,
}

impl FromStr for Mutation {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(Mutation::None),
            "flip-update-sign" => Ok(Mutation::FlipUpdateSign),
            "wrong-triway-aggregation" => Ok(Mutation::WrongTriwayAggregation),
            _ => Err(Error::Config(format!("unknown mutation `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub invariant: String,
    pub passed: bool,
    pub deviation: f64,
    pub tolerance: f64,
    pub detail: String,
}

impl fmt::Display for CheckResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{}] {}: {} (deviation {:.3e}, tolerance {:.1e}){}",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.invariant,
            self.deviation,
            self.tolerance,
            if self.detail.is_empty() { String::new() } else { format!(" — {}", self.detail) }
        )
    }
}

/// How much work each check does.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Budget {
    pub delta_e_cases: usize,
    pub stationarity_steps: usize,
    pub tying_cases: usize,
}

impl Budget {
    pub fn full() -> Self {
        Self { delta_e_cases: 1000, stationarity_steps: 200_000, tying_cases: 100 }
    }

    pub fn quick() -> Self {
        Self { delta_e_cases: 200, stationarity_steps: 100_000, tying_cases: 10 }
    }
}

/// The 16-node network used by the sampler and gradient checks.
pub fn tiny_config() -> NetworkConfig {
    NetworkConfig::triway(3, 1, 2, 2)
}

/// `tiny_config` with weights uniform in `[-scale, scale]`.
pub fn random_params(config: NetworkConfig, scale: f64, seed: u64) -> ModelParams<f64> {
    let mut p = ModelParams::<f64>::zeros(config).expect("valid config");
    let mut r = rng::seeded(seed);
    let flat: Vec<f64> = (0..p.num_weights()).map(|_| r.random_range(-scale..scale)).collect();
    p.set_flat(&flat).expect("matching length");
    p
}

/// Random visible configurations for the tiny network.
pub fn random_data(config: &NetworkConfig, n: usize, seed: u64) -> Vec<NetworkState> {
    let mut r = rng::seeded(seed);
    (0..n)
        .map(|_| {
            let mut s = NetworkState::zeros(config);
            s.v.iter_mut().chain(s.r.iter_mut()).for_each(|b| *b = r.random_bool(0.4));
            s
        })
        .collect()
}

fn result(name: &str, invariant: &str, deviation: f64, tolerance: f64, detail: String) -> CheckResult {
    CheckResult {
        name: name.into(),
        invariant: invariant.into(),
        passed: deviation.is_finite() && deviation < tolerance,
        deviation,
        tolerance,
        detail,
    }
}

/// `E(x=1) − E(x=0) = −I(x)` on random small networks, states and nodes.
pub fn check_delta_e(cases: usize, seed: u64) -> Result<CheckResult> {
    let mut r = rng::seeded(seed);
    let mut worst = 0.0f64;
    let mut where_ = String::new();
    for case in 0..cases {
        let mut c = NetworkConfig {
            use_triway: r.random_bool(0.7),
            use_biases: r.random_bool(0.3),
            rh_sharing: if r.random_bool(0.5) { RhSharing::PerNode } else { RhSharing::PerType },
            ..NetworkConfig::triway(r.random_range(1..6), r.random_range(1..5), r.random_range(1..5), r.random_range(0..4))
        };
        c.seed = case as u64;
        let p = random_params(c, 2.0, r.random());
        let mut s = NetworkState::zeros(&c);
        s.v.iter_mut().chain(s.r.iter_mut()).chain(s.h1.iter_mut()).chain(s.h2.iter_mut()).for_each(|b| *b = r.random());
        let node = match r.random_range(0..4) {
            0 => Node::Object(r.random_range(0..c.num_objects)),
            1 => Node::Relation(r.random_range(0..c.num_relations())),
            2 => Node::Hidden1(r.random_range(0..c.hidden1)),
            _ if c.hidden2 > 0 => Node::Hidden2(r.random_range(0..c.hidden2)),
            _ => Node::Object(0),
        };
        let input = node_input(&p, &s, node)?;
        s.set(node, true)?;
        let on = energy(&p, &s)?;
        s.set(node, false)?;
        let off = energy(&p, &s)?;
        let dev = (on - off + input).abs();
        if dev > worst {
            worst = dev;
            where_ = format!("case {case}, {node:?}");
        }
    }
    Ok(result("delta-e", "energy difference equals minus node input", worst, 1e-9, where_))
}

/// Long-run empirical marginals of the free negative-phase chain against the
/// exact marginals.
pub fn check_stationarity(steps: usize, seed: u64) -> Result<CheckResult> {
    let c = tiny_config();
    let p = random_params(c, 1.0, seed);
    let zero = NetworkState::zeros(&c);
    let mask = ClampMask::free(&c);
    let exact: Vec<f64> = exact_marginals(&p, &mask, &zero)?.values().collect();
    let mut chain = Chain::new(zero);
    let mut r = rng::stream(seed, &[1]);
    for _ in 0..1000 {
        negative_phase_step(&p, &mut chain, &mask, 1.0, UpdateOrder::SequentialRandom, &mut r)?;
    }
    let mut on = vec![0u64; c.num_nodes()];
    for _ in 0..steps {
        negative_phase_step(&p, &mut chain, &mask, 1.0, UpdateOrder::SequentialRandom, &mut r)?;
        for (n, b) in on.iter_mut().zip(chain.state.bits()) {
            *n += u64::from(b);
        }
    }
    let (mut worst, mut unit) = (0.0f64, 0);
    for (i, (&n, e)) in on.iter().zip(&exact).enumerate() {
        let dev = (n as f64 / steps as f64 - e).abs();
        if dev > worst {
            worst = dev;
            unit = i;
        }
    }
    Ok(result(
        "stationarity",
        "empirical sampler marginals match exact marginals",
        worst,
        0.02,
        format!("{steps} steps, worst unit {unit}"),
    ))
}

/// The trainer's update direction from exact phase statistics, per unit step.
fn update_direction(params: &ModelParams<f64>, data: &[NetworkState], mutation: Mutation) -> Result<Vec<f64>> {
    let pos = trainer_statistics(params, data, true, mutation)?;
    let neg = trainer_statistics(params, data, false, mutation)?;
    let (pos, neg) = if mutation == Mutation::FlipUpdateSign { (neg, pos) } else { (pos, neg) };
    let next = apply_update(params, &pos, &neg, 1.0)?;
    Ok(next.to_flat().iter().zip(params.to_flat()).map(|(a, b)| a - b).collect())
}

/// Exact positive (`data`) or negative (model) statistics built with the
/// trainer's own aggregation over enumerated joint states.
pub fn trainer_statistics(
    params: &ModelParams<f64>,
    data: &[NetworkState],
    positive: bool,
    mutation: Mutation,
) -> Result<EdgeStats<f64>> {
    let c = &params.config;
    let mut acc = EdgeStats::zeros(c);
    if positive {
        let nh = c.hidden1 + c.hidden2;
        for d in data {
            let mut states = Vec::with_capacity(1 << nh);
            let mut logw = Vec::with_capacity(1 << nh);
            for h in 0..1u64 << nh {
                let mut s = d.clone();
                for (i, b) in s.h1.iter_mut().chain(s.h2.iter_mut()).enumerate() {
                    *b = (h >> (nh - 1 - i)) & 1 == 1;
                }
                logw.push(-energy(params, &s)? / c.temperature);
                states.push(s);
            }
            let norm = crate::oracle::log_sum_exp(logw.iter().copied());
            for (s, lw) in states.iter().zip(logw) {
                acc.accumulate(c, &NodeProbs::from_state(s), (lw - norm).exp() / data.len() as f64);
            }
        }
    } else {
        for (i, p) in state_probabilities(params)?.into_iter().enumerate() {
            acc.accumulate(c, &NodeProbs::from_state(&state_from_index(c, i as u64)), p);
        }
    }
    if mutation == Mutation::WrongTriwayAggregation {
        let pairs = (c.num_objects * c.num_objects) as f64;
        acc.s_tri.mapv_inplace(|x| x / pairs);
    }
    Ok(acc)
}

/// Exact gradient against central differences of the exact log-likelihood,
/// the trainer's update direction against the same, and a small update step
/// that must raise the log-likelihood.
pub fn check_gradient(seed: u64, mutation: Mutation) -> Result<Vec<CheckResult>> {
    let c = tiny_config();
    let p = random_params(c, 1.0, seed);
    let data = random_data(&c, 8, seed + 1);
    let g = exact_gradient(&p, &data)?.to_flat();
    let dir = update_direction(&p, &data, mutation)?;
    let base = p.to_flat();
    let h = 1e-5;
    let mut fd = Vec::with_capacity(base.len());
    for i in 0..base.len() {
        let mut x = base.clone();
        let mut shifted = p.clone();
        x[i] = base[i] + h;
        shifted.set_flat(&x)?;
        let up = exact_loglik(&shifted, &data)?;
        x[i] = base[i] - h;
        shifted.set_flat(&x)?;
        let down = exact_loglik(&shifted, &data)?;
        fd.push((up - down) / (2.0 * h));
    }
    let rel = |a: &[f64], b: &[f64]| {
        a.iter().zip(b).map(|(x, y)| (x - y).abs() / x.abs().max(y.abs()).max(1e-4)).fold(0.0f64, f64::max)
    };

    let pos = trainer_statistics(&p, &data, true, mutation)?;
    let neg = trainer_statistics(&p, &data, false, mutation)?;
    let (pos, neg) = if mutation == Mutation::FlipUpdateSign { (neg, pos) } else { (pos, neg) };
    let before = exact_loglik(&p, &data)?;
    let after = exact_loglik(&apply_update(&p, &pos, &neg, 0.01)?, &data)?;
    let gain = after - before;

    Ok(vec![
        result(
            "gradient-fd",
            "exact gradient matches central differences of the exact log-likelihood",
            rel(&g, &fd),
            1e-5,
            format!("{} weights, h = {h}", g.len()),
        ),
        result(
            "update-direction",
            "update direction from exact phase statistics matches the log-likelihood gradient",
            rel(&dir, &fd),
            1e-5,
            String::new(),
        ),
        CheckResult {
            name: "update-ascent".into(),
            invariant: "one update step with alpha = 0.01 raises the exact log-likelihood".into(),
            passed: gain > 0.0,
            deviation: -gain,
            tolerance: 0.0,
            detail: format!("log-likelihood {before:.6} -> {after:.6}"),
        },
    ])
}

/// The trainer's aggregated tri-way gradient against a sum of independently
/// enumerated per-pair gradients, and the tri-way parameter count.
pub fn check_triway_tying(cases: usize, seed: u64, mutation: Mutation) -> Result<CheckResult> {
    let mut r = rng::seeded(seed);
    let mut worst = 0.0f64;
    let mut count_ok = true;
    for _ in 0..cases {
        let c = NetworkConfig::triway(r.random_range(2..4), 1, r.random_range(1..3), r.random_range(0..2));
        let c = if c.num_nodes() > 20 { tiny_config() } else { c };
        let p = random_params(c, 1.5, r.random());
        let data = random_data(&c, r.random_range(1..5), r.random());
        let pos = trainer_statistics(&p, &data, true, mutation)?;
        let neg = trainer_statistics(&p, &data, false, mutation)?;
        let updated = apply_update(&p, &pos, &neg, 1.0)?;
        count_ok &= updated.w_tri.len() == c.num_types && p.w_tri.len() == c.num_types;
        for t in 0..c.num_types {
            let applied = (updated.w_tri[t] - p.w_tri[t]) * c.temperature;
            let mut pair_sum = 0.0;
            for j in 0..c.num_objects {
                for k in 0..c.num_objects {
                    pair_sum += exact_pair_gradient(&p, &data, t, j, k)?;
                }
            }
            let dev = (applied - pair_sum).abs();
            if dev > worst || !dev.is_finite() {
                worst = dev;
            }
        }
    }
    let mut res = result(
        "triway-tying",
        "aggregated tri-way gradient equals the sum of per-pair gradients",
        worst,
        1e-9,
        format!("{cases} cases"),
    );
    if !count_ok {
        res.passed = false;
        res.detail += "; tri-way parameter count differs from Tc";
    }
    Ok(res)
}

/// Vector length and relation chance level at the full vocabulary size.
/// The quoted chance carries two decimals, so it is compared to that step.
pub fn check_encoding_arithmetic() -> CheckResult {
    let dim = implied_dimension(417, 4);
    let chance = chance_levels(&NetworkConfig::triway(417, 4, 1, 1)).task1;
    let mut r = result(
        "encoding",
        "V=417, Tc=4 gives length 695,973 and relation chance 1.43e-6",
        (chance - 1.43e-6).abs(),
        0.01e-6,
        format!("length {dim}, chance {chance:.4e}"),
    );
    r.passed &= dim == 695_973;
    r
}

/// Every check, in order.
pub fn run_all(budget: Budget, mutation: Mutation, seed: u64) -> Result<Vec<CheckResult>> {
    let mut out = vec![check_delta_e(budget.delta_e_cases, seed)?, check_stationarity(budget.stationarity_steps, seed)?];
    out.extend(check_gradient(seed, mutation)?);
    out.push(check_triway_tying(budget.tying_cases, seed, mutation)?);
    out.push(check_encoding_arithmetic());
    Ok(out)
}
