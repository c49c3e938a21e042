//! The model's energy, partition function and marginals against a reference
//! written here from the energy formula alone, plus closed-form values for a
//! hand-built network.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use scenebm::model::{energy, ModelParams, NetworkState, RhSharing};
use scenebm::oracle::{exact_marginals, log_partition_function, state_probabilities};
use scenebm::{ClampMask, NetworkConfig};

/// Dense copy of every unit as 0/1 floats.
struct Bits {
    v: Vec<f64>,
    r: Vec<f64>,
    h1: Vec<f64>,
    h2: Vec<f64>,
}

fn bits(c: &NetworkConfig, mut code: u64) -> Bits {
    let mut take = |n: usize| {
        (0..n)
            .map(|_| {
                let b = (code & 1) as f64;
                code >>= 1;
                b
            })
            .collect::<Vec<f64>>()
    };
    let v = take(c.num_objects);
    let r = take(c.num_types * c.num_objects * c.num_objects);
    let h1 = take(c.hidden1);
    let h2 = take(c.hidden2);
    Bits { v, r, h1, h2 }
}

fn to_state(b: &Bits) -> NetworkState {
    let on = |x: &[f64]| x.iter().map(|&y| y == 1.0).collect();
    NetworkState { v: on(&b.v), r: on(&b.r), h1: on(&b.h1), h2: on(&b.h2) }
}

fn reference_energy(p: &ModelParams<f64>, s: &Bits) -> f64 {
    let c = &p.config;
    let vv = c.num_objects;
    let mut e = 0.0;
    for m in 0..c.hidden1 {
        for j in 0..vv {
            e -= s.h1[m] * p.w_hv[[m, j]] * s.v[j];
        }
        for n in 0..c.hidden2 {
            e -= s.h1[m] * p.w_12[[m, n]] * s.h2[n];
        }
        for (f, &r) in s.r.iter().enumerate() {
            let col = match c.rh_sharing {
                RhSharing::PerNode => f,
                RhSharing::PerType => f / (vv * vv),
            };
            e -= r * p.w_rh[[m, col]] * s.h1[m];
        }
    }
    if c.use_triway {
        for t in 0..c.num_types {
            for j in 0..vv {
                for k in 0..vv {
                    e -= p.w_tri[t] * s.r[t * vv * vv + j * vv + k] * s.v[j] * s.v[k];
                }
            }
        }
    }
    if let Some(b) = &p.biases {
        let dot = |w: &[f64], x: &[f64]| w.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
        e -= dot(b.v.as_slice().unwrap(), &s.v) + dot(b.r.as_slice().unwrap(), &s.r);
        e -= dot(b.h1.as_slice().unwrap(), &s.h1) + dot(b.h2.as_slice().unwrap(), &s.h2);
    }
    e
}

fn random_params(c: NetworkConfig, seed: u64) -> ModelParams<f64> {
    let mut p = ModelParams::<f64>::zeros(c).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let flat: Vec<f64> = (0..p.num_weights()).map(|_| rng.random_range(-1.5..1.5)).collect();
    p.set_flat(&flat).unwrap();
    p
}

fn configs() -> Vec<NetworkConfig> {
    let mut with_biases = NetworkConfig::triway(2, 2, 2, 1);
    with_biases.use_biases = true;
    let mut per_type = NetworkConfig::triway(2, 2, 2, 1);
    per_type.rh_sharing = RhSharing::PerType;
    vec![
        NetworkConfig::rbm(2, 2, 3),
        NetworkConfig::gbm(2, 2, 2, 2),
        NetworkConfig::triway(2, 2, 2, 1),
        with_biases,
        per_type,
        NetworkConfig::triway(3, 1, 1, 1),
    ]
}

fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

#[test]
fn energy_matches_reference_on_every_state() {
    for (i, c) in configs().into_iter().enumerate() {
        let p = random_params(c, 100 + i as u64);
        for code in 0..1u64 << c.num_nodes() {
            let b = bits(&c, code);
            let got = energy(&p, &to_state(&b)).unwrap();
            let want = reference_energy(&p, &b);
            assert!((got - want).abs() < 1e-12, "config {i}, state {code}: {got} vs {want}");
        }
    }
}

#[test]
fn partition_function_and_probabilities_match_reference() {
    for (i, c) in configs().into_iter().enumerate() {
        let p = random_params(c, 200 + i as u64);
        let neg: Vec<f64> = (0..1u64 << c.num_nodes()).map(|s| -reference_energy(&p, &bits(&c, s))).collect();
        let log_z = log_sum_exp(&neg);
        assert!((log_partition_function(&p).unwrap() - log_z).abs() < 1e-10, "config {i}");

        // state order differs between the two enumerations; compare sorted
        let mut ours = state_probabilities(&p).unwrap();
        let mut theirs: Vec<f64> = neg.iter().map(|x| (x - log_z).exp()).collect();
        ours.sort_by(f64::total_cmp);
        theirs.sort_by(f64::total_cmp);
        let worst = ours.iter().zip(&theirs).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(worst < 1e-12, "config {i}: {worst}");
    }
}

#[test]
fn free_marginals_match_reference() {
    let c = NetworkConfig::triway(2, 2, 2, 1);
    let p = random_params(c, 7);
    let n = 1u64 << c.num_nodes();
    let neg: Vec<f64> = (0..n).map(|s| -reference_energy(&p, &bits(&c, s))).collect();
    let log_z = log_sum_exp(&neg);
    let mut v0 = 0.0;
    let mut r_last = 0.0;
    let mut h2 = 0.0;
    for s in 0..n {
        let b = bits(&c, s);
        let w = (neg[s as usize] - log_z).exp();
        v0 += w * b.v[0];
        r_last += w * b.r[b.r.len() - 1];
        h2 += w * b.h2[0];
    }
    let m = exact_marginals(&p, &ClampMask::free(&c), &NetworkState::zeros(&c)).unwrap();
    assert!((m.v[0] - v0).abs() < 1e-12);
    assert!((m.r[m.r.len() - 1] - r_last).abs() < 1e-12);
    assert!((m.h2[0] - h2).abs() < 1e-12);
}

/// Two objects, one relation type, a single tri-way weight `ln 3` and nothing
/// else. Summing the relation bits out leaves `Π (1 + 3^{v_j v_k})` over the
/// four ordered pairs, so the visible sum is 16 + 32 + 32 + 256 = 336 and the
/// two free hidden units multiply it by 4.
#[test]
fn closed_form_triway_network() {
    let c = NetworkConfig::triway(2, 1, 1, 1);
    let mut p = ModelParams::<f64>::zeros(c).unwrap();
    p.w_tri[0] = 3f64.ln();
    assert!((log_partition_function(&p).unwrap() - 1344f64.ln()).abs() < 1e-12);

    let m = exact_marginals(&p, &ClampMask::free(&c), &NetworkState::zeros(&c)).unwrap();
    assert!((m.v[0] - 6.0 / 7.0).abs() < 1e-12, "{}", m.v[0]);
    // relation (0, 1): on with weight 3 when both objects are on, else 1
    let r01 = (16.0 * 0.5 + 32.0 * 0.5 + 32.0 * 0.5 + 256.0 * 0.75) / 336.0;
    assert!((m.r[1] - r01).abs() < 1e-12, "{}", m.r[1]);
    assert!((m.h1[0] - 0.5).abs() < 1e-12);
}

/// One object, one hidden unit, weight `w`: Z = 3 + e^w and
/// `p(h = 1) = (1 + e^w) / (3 + e^w)`.
#[test]
fn closed_form_single_edge() {
    let c = NetworkConfig::rbm(1, 1, 1);
    let mut p = ModelParams::<f64>::zeros(c).unwrap();
    let w = 0.7;
    p.w_hv[[0, 0]] = w;
    // the lone relation node is free and unconnected: factor 2
    let z = 2.0 * (3.0 + w.exp());
    assert!((log_partition_function(&p).unwrap() - z.ln()).abs() < 1e-12);
    let m = exact_marginals(&p, &ClampMask::free(&c), &NetworkState::zeros(&c)).unwrap();
    assert!((m.h1[0] - (1.0 + w.exp()) / (3.0 + w.exp())).abs() < 1e-12);
}

#[test]
fn single_precision_energy_tracks_double() {
    let c = NetworkConfig::triway(2, 2, 2, 1);
    let p = random_params(c, 9);
    let p32 = p.cast::<f32>();
    for code in (0..1u64 << c.num_nodes()).step_by(97) {
        let s = to_state(&bits(&c, code));
        let (a, b) = (energy(&p, &s).unwrap(), energy(&p32, &s).unwrap());
        assert!((a - f64::from(b)).abs() < 1e-4, "{a} vs {b}");
    }
}
