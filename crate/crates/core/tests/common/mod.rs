//! Shared builders and brute-force oracles for the integration tests.
#![allow(dead_code)]

use bistatic_ab::prob::{Alphabet, DiscreteDistribution, JointTable};
use bistatic_ab::se::{distortion_weights, objective_f, update_c};
use bistatic_ab::logloss::{logloss_weights, objective_f_ll, update_f};
use bistatic_ab::ChannelModel;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn simplex(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| 0.02 + rng.random::<f64>()).collect();
    let t: f64 = raw.iter().sum();
    raw.into_iter().map(|v| v / t).collect()
}

pub fn grid(n: usize) -> Vec<f64> {
    (0..n).map(|i| -1.0 + 2.0 * i as f64 / (n - 1).max(1) as f64).collect()
}

/// State-dependent channel with random kernels; X and S values on `[−1, 1]`.
pub fn random_channel(rng: &mut ChaCha8Rng, nx: usize, ns: usize, ny: usize, nz: usize) -> ChannelModel {
    let x = Alphabet::with_values(grid(nx)).unwrap();
    let s = Alphabet::with_values(grid(ns)).unwrap();
    let prior = DiscreteDistribution::new(s.clone(), simplex(rng, ns)).unwrap();
    let ky: Vec<f64> = (0..nx * ns).flat_map(|_| simplex(rng, ny)).collect();
    let kz: Vec<f64> = (0..nx * ns).flat_map(|_| simplex(rng, nz)).collect();
    let ky = JointTable::conditional(vec![x.clone(), s.clone(), Alphabet::new(ny).unwrap()], ky, vec![0, 1]).unwrap();
    let kz = JointTable::conditional(vec![x, s, Alphabet::new(nz).unwrap()], kz, vec![0, 1]).unwrap();
    ChannelModel::state_dependent(prior, ky, kz).unwrap()
}

pub fn random_markov(rng: &mut ChaCha8Rng, nx: usize, ns: usize, ny: usize, nz: usize) -> ChannelModel {
    random_channel(rng, nx, ns, ny, nz).to_markov().unwrap()
}

/// Smallest `E[Var(S|x,Z)]` over single inputs allowed by the budget: an
/// upper bound on the smallest reachable squared error.
pub fn best_single_input_mse(ch: &ChannelModel, budget: Option<f64>) -> f64 {
    let k = ch.kernels();
    let s = ch.state_values();
    let xs = ch.input_values();
    (0..k.nx)
        .filter(|&x| budget.is_none_or(|b| xs[x] * xs[x] <= b))
        .map(|x| {
            let mut total = 0.0;
            for z in 0..k.nz {
                let row = &k.zs[(x * k.nz + z) * k.ns..(x * k.nz + z + 1) * k.ns];
                let m: f64 = row.iter().sum();
                if m > 0.0 {
                    let mean = row.iter().zip(s).map(|(p, v)| p * v).sum::<f64>() / m;
                    total += row.iter().zip(s).map(|(p, v)| p * (v - mean).powi(2)).sum::<f64>();
                }
            }
            total
        })
        .fold(f64::INFINITY, f64::min)
}

/// Smallest `H(S|x,Z)` over single inputs allowed by the budget.
pub fn best_single_input_entropy(ch: &ChannelModel, budget: Option<f64>) -> f64 {
    let k = ch.kernels();
    let xs = ch.input_values();
    (0..k.nx)
        .filter(|&x| budget.is_none_or(|b| xs[x] * xs[x] <= b))
        .map(|x| {
            let mut total = 0.0;
            for z in 0..k.nz {
                let row = &k.zs[(x * k.nz + z) * k.ns..(x * k.nz + z + 1) * k.ns];
                let m: f64 = row.iter().sum();
                for p in row {
                    if *p > 0.0 {
                        total -= p * (p / m).ln();
                    }
                }
            }
            total
        })
        .fold(f64::INFINITY, f64::min)
}

pub fn p_table(nu: usize, nx: usize, mass: Vec<f64>) -> JointTable {
    JointTable::joint(vec![Alphabet::new(nu).unwrap(), Alphabet::new(nx).unwrap()], mass).unwrap()
}

/// Compositions of `steps` into 4 parts, scaled to the simplex.
fn simplex_grid_4(steps: usize) -> impl Iterator<Item = [f64; 4]> {
    let n = steps as f64;
    (0..=steps).flat_map(move |a| {
        (0..=steps - a).flat_map(move |b| {
            (0..=steps - a - b).map(move |c| {
                let d = steps - a - b - c;
                [a as f64 / n, b as f64 / n, c as f64 / n, d as f64 / n]
            })
        })
    })
}

/// Best squared-error rate over a `1/steps` simplex grid on `p(u,x)` with
/// binary U and X, using the exact conditional-mean estimator.
pub fn grid_oracle_se(ch: &ChannelModel, d: f64, steps: usize) -> f64 {
    let mut best = f64::NEG_INFINITY;
    for m in simplex_grid_4(steps) {
        let p = p_table(2, 2, m.to_vec());
        let c = update_c(&p, ch).unwrap();
        let w = distortion_weights(&c, ch).unwrap();
        let dist: f64 = m.iter().zip(&w).map(|(a, b)| a * b).sum();
        if dist <= d {
            best = best.max(objective_f(&p, ch).unwrap());
        }
    }
    best
}

/// Log-loss counterpart of [`grid_oracle_se`].
pub fn grid_oracle_ll(ch: &ChannelModel, d: f64, steps: usize) -> f64 {
    let mut best = f64::NEG_INFINITY;
    for m in simplex_grid_4(steps) {
        let p = p_table(2, 2, m.to_vec());
        let f = update_f(&p, ch).unwrap();
        let w = logloss_weights(&f, ch).unwrap();
        let loss: f64 = -m.iter().zip(&w).filter(|(a, _)| **a > 0.0).map(|(a, b)| a * b).sum::<f64>();
        if loss <= d {
            best = best.max(objective_f_ll(&p, ch).unwrap());
        }
    }
    best
}
