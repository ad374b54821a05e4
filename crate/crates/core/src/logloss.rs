//! Capacity-distortion solver under logarithmic loss.
//!
//! Maximizes `I(X;Y|U) + I(U;Z)` over `p(u,x)` subject to `H(S|U,Z) ≤ D`
//! (and optionally `E[X²] ≤ B`) on a channel in the Markov factorization
//! `p(y|x) p(z,s|x)`. The soft estimator `f(s|u,z)` is carried as a free
//! table and updated after every tilt.

use crate::channel::ChannelModel;
use crate::classic::mutual_information;
use crate::error::{Error, Result};
use crate::multiplier::TiltSign;
use crate::prob::{conditional_mutual_information, Alphabet, JointTable, TableMode};
use crate::se::{add_auxiliary_fused, add_posterior_term, auxiliary_information, row_negentropy};
use crate::solver::{check_p_ux, input_marginal, p_ux_table, solve_model, Estimator, Model, SolveResult, SolverConfig};

fn require_markov(channel: &ChannelModel) -> Result<()> {
    if channel.is_markov() {
        Ok(())
    } else {
        Err(Error::Argument(
            "log-loss problems need a channel in the p(y|x) p(z,s|x) factorization".into(),
        ))
    }
}

/// `I(X;Y|U) + I(U;Z)` in nats.
pub fn objective_f_ll(p_ux: &JointTable, channel: &ChannelModel) -> Result<f64> {
    require_markov(channel)?;
    let k = channel.kernels();
    let (nu, p) = check_p_ux(p_ux, k.nx)?;
    let (nx, ny) = (k.nx, k.ny);
    let mut uxy = vec![0.0; nu * nx * ny];
    for u in 0..nu {
        for x in 0..nx {
            let pux = p[u * nx + x];
            for y in 0..ny {
                uxy[(u * nx + x) * ny + y] = pux * k.y[x * ny + y];
            }
        }
    }
    let joint = JointTable::from_parts(
        vec![
            Alphabet::new(nu)?,
            channel.input_alphabet().clone(),
            channel.y_alphabet().clone(),
        ],
        uxy,
        TableMode::Joint,
    );
    let first = conditional_mutual_information(&joint, &[1], &[2], &[0])?;
    Ok(first + auxiliary_information(&p, nu, channel)?)
}

/// Posterior `p(s|u,z)` with axes `[U, Z, S]`, conditioned on `U, Z`;
/// uniform where `(u,z)` has no mass.
pub fn update_f(p_ux: &JointTable, channel: &ChannelModel) -> Result<JointTable> {
    require_markov(channel)?;
    let (nu, p) = check_p_ux(p_ux, channel.kernels().nx)?;
    let model = LlModel::new(channel, nu)?;
    Ok(model.soft_table(&model.estimate(&p)))
}

/// `w(u,x) = Σ_{z,s} p(z,s|x) ln f(s|u,z)`, row major over `(u, x)`.
/// Entries are `≤ 0`, and `-inf` where a positive kernel cell meets a zero
/// estimate.
pub fn logloss_weights(f_s_uz: &JointTable, channel: &ChannelModel) -> Result<Vec<f64>> {
    require_markov(channel)?;
    let k = channel.kernels();
    let shape = f_s_uz.shape();
    if shape.len() != 3 || shape[1] != k.nz || shape[2] != k.ns {
        return Err(Error::Shape(format!(
            "f(s|u,z) must have shape [U, {}, {}], got {shape:?}",
            k.nz, k.ns
        )));
    }
    let model = LlModel::new(channel, shape[0])?;
    let mut w = vec![0.0; shape[0] * k.nx];
    model.weights(&f_s_uz.mass().to_vec(), &mut w);
    Ok(w)
}

/// Largest `I(X;Y|U) + I(U;Z)` with `H(S|U,Z) ≤ d`, with an optional
/// second-moment budget on the input.
pub fn solve_ll(
    channel: &ChannelModel,
    d: f64,
    config: &SolverConfig,
    power_budget: Option<f64>,
) -> Result<SolveResult> {
    require_markov(channel)?;
    let nu = config.u_size.unwrap_or(channel.kernels().nx);
    let model = LlModel::new(channel, nu)?;
    solve_model(&model, d, power_budget, config, None)
}

/// [`solve_ll`] with `init` as an extra first start ahead of the jittered
/// ones.
pub fn solve_ll_from(
    channel: &ChannelModel,
    d: f64,
    config: &SolverConfig,
    power_budget: Option<f64>,
    init: &JointTable,
) -> Result<SolveResult> {
    require_markov(channel)?;
    let (nu, p) = check_p_ux(init, channel.kernels().nx)?;
    let config = SolverConfig {
        u_size: Some(nu),
        ..config.clone()
    };
    let model = LlModel::new(channel, nu)?;
    solve_model(&model, d, power_budget, &config, Some(&p))
}

pub(crate) struct LlModel<'a> {
    channel: &'a ChannelModel,
    nu: usize,
    negent_y: Vec<f64>,
}

impl<'a> LlModel<'a> {
    pub(crate) fn new(channel: &'a ChannelModel, nu: usize) -> Result<Self> {
        if nu == 0 {
            return Err(Error::Argument("auxiliary alphabet must be non-empty".into()));
        }
        let k = channel.kernels();
        Ok(Self {
            channel,
            nu,
            negent_y: row_negentropy(&k.y, k.nx, k.ny),
        })
    }

    fn soft_table(&self, f: &[f64]) -> JointTable {
        JointTable::from_parts(
            vec![
                Alphabet::new(self.nu).expect("nu > 0"),
                self.channel.z_alphabet().clone(),
                self.channel.state_alphabet().clone(),
            ],
            f.to_vec(),
            TableMode::Conditional { given: vec![0, 1] },
        )
    }
}

impl Model for LlModel<'_> {
    type Est = Vec<f64>;

    fn nu(&self) -> usize {
        self.nu
    }

    fn nx(&self) -> usize {
        self.channel.kernels().nx
    }

    fn sign(&self) -> TiltSign {
        TiltSign::Plus
    }

    fn exponent(&self, p: &[f64], d: &mut [f64]) {
        let k = self.channel.kernels();
        d.iter_mut().for_each(|v| *v = 0.0);
        add_posterior_term(p, self.nu, k.nx, &k.y, k.ny, &self.negent_y, d);
        add_auxiliary_fused(p, self.nu, k, d);
    }

    fn estimate(&self, p: &[f64]) -> Vec<f64> {
        let k = self.channel.kernels();
        let (nx, nz, ns) = (k.nx, k.nz, k.ns);
        let mut f = vec![0.0; self.nu * nz * ns];
        for u in 0..self.nu {
            for x in 0..nx {
                let pux = p[u * nx + x];
                if pux > 0.0 {
                    let src = &k.zs[x * nz * ns..(x + 1) * nz * ns];
                    for (acc, kv) in f[u * nz * ns..(u + 1) * nz * ns].iter_mut().zip(src) {
                        *acc += pux * kv;
                    }
                }
            }
            for z in 0..nz {
                let slice = &mut f[(u * nz + z) * ns..(u * nz + z + 1) * ns];
                let total: f64 = slice.iter().sum();
                if total > 0.0 {
                    slice.iter_mut().for_each(|v| *v /= total);
                } else {
                    slice.iter_mut().for_each(|v| *v = 1.0 / ns as f64);
                }
            }
        }
        f
    }

    fn weights(&self, f: &Vec<f64>, w: &mut [f64]) {
        let k = self.channel.kernels();
        let (nx, nz, ns) = (k.nx, k.nz, k.ns);
        let logs: Vec<f64> = f.iter().map(|v| v.ln()).collect();
        for u in 0..self.nu {
            for x in 0..nx {
                let mut acc = 0.0;
                for z in 0..nz {
                    let row = &k.zs[(x * nz + z) * ns..(x * nz + z + 1) * ns];
                    let lf = &logs[(u * nz + z) * ns..(u * nz + z + 1) * ns];
                    for (kv, l) in row.iter().zip(lf) {
                        if *kv > 0.0 {
                            acc += kv * l;
                        }
                    }
                }
                w[u * nx + x] = acc.min(0.0);
            }
        }
    }

    fn upper_bound(&self, p: &[f64]) -> f64 {
        let k = self.channel.kernels();
        let px = input_marginal(p, self.nu, k.nx);
        mutual_information(&px, &k.y, k.ny) + mutual_information(&px, &k.z, k.nz)
    }

    fn rate(&self, p: &[f64]) -> Result<f64> {
        objective_f_ll(&p_ux_table(self.channel, self.nu, p.to_vec()), self.channel)
    }

    fn achieved(&self, p: &[f64], f: &Vec<f64>) -> f64 {
        let mut w = vec![0.0; p.len()];
        self.weights(f, &mut w);
        -p.iter()
            .zip(&w)
            .filter(|(pv, _)| **pv > 0.0)
            .map(|(a, b)| a * b)
            .sum::<f64>()
    }

    fn export(&self, f: &Vec<f64>) -> Estimator {
        Estimator::Soft(self.soft_table(f))
    }

    fn channel(&self) -> &ChannelModel {
        self.channel
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classic::{capacity, CapacityConfig};
    use crate::prob::{condition, entropy_of, marginalize, DiscreteDistribution};
    use crate::test_support::{random_channel, random_p_ux};

    fn markov(seed: u64, nx: usize, ns: usize, ny: usize, nz: usize) -> ChannelModel {
        random_channel(seed, nx, ns, ny, nz).to_markov().unwrap()
    }

    /// Joint `p(u,z,s)` with axes `[U, Z, S]`.
    fn joint_uzs(p: &JointTable, ch: &ChannelModel) -> JointTable {
        let k = ch.kernels();
        let nu = p.shape()[0];
        let mut m = vec![0.0; nu * k.nz * k.ns];
        for u in 0..nu {
            for x in 0..k.nx {
                for i in 0..k.nz * k.ns {
                    m[u * k.nz * k.ns + i] += p.get(&[u, x]) * k.zs[x * k.nz * k.ns + i];
                }
            }
        }
        JointTable::joint(
            vec![Alphabet::new(nu).unwrap(), Alphabet::new(k.nz).unwrap(), Alphabet::new(k.ns).unwrap()],
            m,
        )
        .unwrap()
    }

    fn conditional_entropy_s(p: &JointTable, ch: &ChannelModel) -> f64 {
        let j = joint_uzs(p, ch);
        let uz = marginalize(&j, &[0, 1]).unwrap();
        entropy_of(j.mass()) - entropy_of(uz.mass())
    }

    #[test]
    fn state_dependent_channel_is_rejected() {
        let ch = random_channel(0, 2, 2, 2, 2);
        let p = random_p_ux(0, 2, 2);
        assert!(matches!(objective_f_ll(&p, &ch), Err(Error::Argument(_))));
    }

    #[test]
    fn singleton_auxiliary_gives_plain_information() {
        let ch = markov(1, 3, 2, 3, 2);
        let px = vec![0.5, 0.2, 0.3];
        let p = JointTable::joint(vec![Alphabet::new(1).unwrap(), Alphabet::new(3).unwrap()], px.clone()).unwrap();
        let k = ch.kernels();
        let expected = mutual_information(&px, &k.y, k.ny);
        assert!((objective_f_ll(&p, &ch).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn noiseless_link_with_independent_auxiliary() {
        let x = Alphabet::with_values(vec![0.0, 1.0, 2.0]).unwrap();
        let s = Alphabet::with_values(vec![0.0, 1.0]).unwrap();
        let prior = DiscreteDistribution::new(s.clone(), vec![0.4, 0.6]).unwrap();
        let mut eye = vec![0.0; 9];
        for i in 0..3 {
            eye[i * 4] = 1.0;
        }
        let ky = JointTable::conditional(vec![x.clone(), Alphabet::new(3).unwrap()], eye, vec![0]).unwrap();
        // p(z,s|x) = p(z) p(s), identical for every x.
        let zs: Vec<f64> = (0..3).flat_map(|_| vec![0.12, 0.18, 0.28, 0.42]).collect();
        let kzs = JointTable::conditional(vec![x, Alphabet::new(2).unwrap(), s], zs, vec![0]).unwrap();
        let ch = ChannelModel::markov(prior, ky, kzs).unwrap();
        let p = JointTable::joint(
            vec![Alphabet::new(2).unwrap(), Alphabet::new(3).unwrap()],
            vec![0.1, 0.1, 0.1, 0.7 / 3.0, 0.7 / 3.0, 0.7 / 3.0],
        )
        .unwrap();
        assert!((objective_f_ll(&p, &ch).unwrap() - 3f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn objective_matches_entropy_identities() {
        for seed in 0..5 {
            let ch = markov(seed, 2, 2, 2, 2);
            let p = random_p_ux(seed + 3, 2, 2);
            let k = ch.kernels();
            // H(Y|U) − H(Y|U,X) + H(Z) − H(Z|U), all from entropies of joints.
            let mut uy = vec![0.0; 4];
            let mut uz = vec![0.0; 4];
            let mut hy_x = 0.0;
            for u in 0..2 {
                for x in 0..2 {
                    let pux = p.get(&[u, x]);
                    for o in 0..2 {
                        uy[u * 2 + o] += pux * k.y[x * 2 + o];
                        uz[u * 2 + o] += pux * k.z[x * 2 + o];
                        let v = k.y[x * 2 + o];
                        hy_x -= pux * v * v.ln();
                    }
                }
            }
            let pu = [p.get(&[0, 0]) + p.get(&[0, 1]), p.get(&[1, 0]) + p.get(&[1, 1])];
            let hu = entropy_of(&pu);
            let hz = entropy_of(&[uz[0] + uz[2], uz[1] + uz[3]]);
            let expected = (entropy_of(&uy) - hu) - hy_x + hz - (entropy_of(&uz) - hu);
            assert!((objective_f_ll(&p, &ch).unwrap() - expected).abs() < 1e-10);
        }
    }

    #[test]
    fn soft_estimate_matches_conditioning_oracle() {
        for seed in 0..5 {
            let ch = markov(seed, 3, 3, 2, 2);
            let p = random_p_ux(seed + 11, 2, 3);
            let f = update_f(&p, &ch).unwrap();
            let oracle = condition(&joint_uzs(&p, &ch), &[0, 1]).unwrap();
            for (a, b) in f.mass().iter().zip(oracle.mass()) {
                assert!((a - b).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn independent_state_estimate_is_prior() {
        let x = Alphabet::with_values(vec![0.0, 1.0]).unwrap();
        let s = Alphabet::with_values(vec![0.0, 1.0]).unwrap();
        let prior = DiscreteDistribution::new(s.clone(), vec![0.3, 0.7]).unwrap();
        let ky = JointTable::conditional(vec![x.clone(), Alphabet::new(2).unwrap()], vec![0.9, 0.1, 0.2, 0.8], vec![0]).unwrap();
        let kzs = JointTable::conditional(
            vec![x, Alphabet::new(2).unwrap(), s],
            vec![0.15, 0.35, 0.15, 0.35, 0.06, 0.14, 0.24, 0.56],
            vec![0],
        )
        .unwrap();
        let ch = ChannelModel::markov(prior, ky, kzs).unwrap();
        let f = update_f(&random_p_ux(2, 2, 2), &ch).unwrap();
        for slice in f.mass().chunks(2) {
            assert!((slice[0] - 0.3).abs() < 1e-14 && (slice[1] - 0.7).abs() < 1e-14);
        }
    }

    fn revealing_channel() -> ChannelModel {
        // Z = S exactly.
        let x = Alphabet::with_values(vec![0.0, 1.0]).unwrap();
        let s = Alphabet::with_values(vec![0.0, 1.0]).unwrap();
        let prior = DiscreteDistribution::new(s.clone(), vec![0.3, 0.7]).unwrap();
        let ky = JointTable::conditional(vec![x.clone(), Alphabet::new(2).unwrap()], vec![0.9, 0.1, 0.2, 0.8], vec![0]).unwrap();
        let kzs = JointTable::conditional(
            vec![x, Alphabet::new(2).unwrap(), s],
            vec![0.3, 0.0, 0.0, 0.7, 0.3, 0.0, 0.0, 0.7],
            vec![0],
        )
        .unwrap();
        ChannelModel::markov(prior, ky, kzs).unwrap()
    }

    #[test]
    fn revealed_state_gives_point_masses_and_zero_loss() {
        let ch = revealing_channel();
        let p = random_p_ux(5, 2, 2);
        let f = update_f(&p, &ch).unwrap();
        for u in 0..2 {
            assert_eq!(f.get(&[u, 0, 0]), 1.0);
            assert_eq!(f.get(&[u, 1, 1]), 1.0);
        }
        let w = logloss_weights(&f, &ch).unwrap();
        assert!(w.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn uniform_estimate_weight() {
        let ch = markov(8, 3, 4, 2, 3);
        let f = JointTable::from_parts(
            vec![Alphabet::new(2).unwrap(), Alphabet::new(3).unwrap(), Alphabet::new(4).unwrap()],
            vec![0.25; 24],
            TableMode::Conditional { given: vec![0, 1] },
        );
        let w = logloss_weights(&f, &ch).unwrap();
        assert!(w.iter().all(|v| (v + 4f64.ln()).abs() < 1e-14));
    }

    #[test]
    fn expected_loss_is_conditional_entropy() {
        for seed in 0..6 {
            let ch = markov(seed, 3, 3, 2, 3);
            let p = random_p_ux(seed + 40, 2, 3);
            let f = update_f(&p, &ch).unwrap();
            let w = logloss_weights(&f, &ch).unwrap();
            let loss: f64 = -p.mass().iter().zip(&w).map(|(a, b)| a * b).sum::<f64>();
            assert!((loss - conditional_entropy_s(&p, &ch)).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_mass_fills_do_not_change_expected_loss() {
        let ch = markov(4, 2, 2, 2, 2);
        // u = 1 carries no mass.
        let p = JointTable::joint(vec![Alphabet::new(2).unwrap(), Alphabet::new(2).unwrap()], vec![0.4, 0.6, 0.0, 0.0]).unwrap();
        let f = update_f(&p, &ch).unwrap();
        let mut other = f.mass().to_vec();
        for v in &mut other[4..] {
            *v = 0.0;
        }
        other[4] = 1.0;
        other[7] = 1.0;
        let g = JointTable::from_parts(f.axes().to_vec(), other, f.mode().clone());
        let expected = |t: &JointTable| -> f64 {
            let w = logloss_weights(t, &ch).unwrap();
            p.mass().iter().zip(&w).filter(|(a, _)| **a > 0.0).map(|(a, b)| a * b).sum()
        };
        assert_eq!(expected(&f), expected(&g));
    }

    #[test]
    fn slack_target_recovers_link_capacity() {
        let ch = markov(12, 3, 2, 3, 2);
        let hs = entropy_of(ch.state_prior().mass());
        let cfg = SolverConfig {
            u_size: Some(1),
            tol: 1e-13,
            max_iters: 20000,
            ..SolverConfig::default()
        };
        let r = solve_ll(&ch, hs + 0.1, &cfg, None).unwrap();
        let c = capacity(&ch.kernel_y_marginal(), &CapacityConfig { tol: 1e-14, max_iters: 100000, ..CapacityConfig::default() }).unwrap();
        assert_eq!(r.lambda, 0.0);
        assert!((r.rate_nats - c.capacity).abs() < 1e-6);
    }
}
