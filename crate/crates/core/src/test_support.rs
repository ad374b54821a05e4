//! Random small instances for unit tests.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::channel::ChannelModel;
use crate::prob::{Alphabet, DiscreteDistribution, JointTable};

fn grid(n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![0.0];
    }
    (0..n).map(|i| -1.0 + 2.0 * i as f64 / (n - 1) as f64).collect()
}

fn simplex(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| 0.05 + rng.random::<f64>()).collect();
    let t: f64 = raw.iter().sum();
    raw.into_iter().map(|v| v / t).collect()
}

/// State-dependent channel with X and S values on `[−1, 1]` grids.
pub(crate) fn random_channel(seed: u64, nx: usize, ns: usize, ny: usize, nz: usize) -> ChannelModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = Alphabet::with_values(grid(nx)).unwrap();
    let s = Alphabet::with_values(grid(ns)).unwrap();
    let prior = DiscreteDistribution::new(s.clone(), simplex(&mut rng, ns)).unwrap();
    let ky: Vec<f64> = (0..nx * ns).flat_map(|_| simplex(&mut rng, ny)).collect();
    let kz: Vec<f64> = (0..nx * ns).flat_map(|_| simplex(&mut rng, nz)).collect();
    let ky = JointTable::conditional(vec![x.clone(), s.clone(), Alphabet::new(ny).unwrap()], ky, vec![0, 1]).unwrap();
    let kz = JointTable::conditional(vec![x, s, Alphabet::new(nz).unwrap()], kz, vec![0, 1]).unwrap();
    ChannelModel::state_dependent(prior, ky, kz).unwrap()
}

pub(crate) fn random_p_ux(seed: u64, nu: usize, nx: usize) -> JointTable {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    JointTable::joint(
        vec![Alphabet::new(nu).unwrap(), Alphabet::new(nx).unwrap()],
        simplex(&mut rng, nu * nx),
    )
    .unwrap()
}
