//! Capacity-distortion solver under squared-error distortion.
//!
//! Maximizes `I(X;Y|U,S) + I(U;Z)` over `p(u,x)` subject to
//! `E[(S − E[S|U,Z])²] ≤ D` and optionally `E[X²] ≤ B`. The conditional-mean
//! estimator is carried as a free table `c(u,z)` and updated after every tilt.

use crate::channel::{ChannelModel, Kernels};
use crate::classic::mutual_information;
use crate::error::{Error, Result};
use crate::multiplier::TiltSign;
use crate::prob::{conditional_mutual_information, Alphabet, JointTable, TableMode};
use crate::solver::{check_p_ux, input_marginal, solve_model, Estimator, EstimatorTable, Model, SolveResult, SolverConfig};

/// `I(X;Y|U,S) + I(U;Z)` in nats, built from the full joint tables.
pub fn objective_f(p_ux: &JointTable, channel: &ChannelModel) -> Result<f64> {
    let k = channel.kernels();
    let (nu, p) = check_p_ux(p_ux, k.nx)?;
    let (nx, ny, ns) = (k.nx, k.ny, k.ns);
    let mut uxys = vec![0.0; nu * nx * ny * ns];
    for u in 0..nu {
        for x in 0..nx {
            let pux = p[u * nx + x];
            let base = (u * nx + x) * ny * ns;
            for (i, kv) in k.ys[x * ny * ns..(x + 1) * ny * ns].iter().enumerate() {
                uxys[base + i] = pux * kv;
            }
        }
    }
    let joint = JointTable::from_parts(
        vec![
            Alphabet::new(nu)?,
            channel.input_alphabet().clone(),
            channel.y_alphabet().clone(),
            channel.state_alphabet().clone(),
        ],
        uxys,
        TableMode::Joint,
    );
    let first = conditional_mutual_information(&joint, &[1], &[2], &[0, 3])?;
    Ok(first + auxiliary_information(&p, nu, channel)?)
}

/// `I(U;Z)` under `p(u,x) p(z|x)`.
pub(crate) fn auxiliary_information(p: &[f64], nu: usize, channel: &ChannelModel) -> Result<f64> {
    let k = channel.kernels();
    let uz = joint_uz(p, nu, k);
    let joint = JointTable::from_parts(
        vec![Alphabet::new(nu)?, channel.z_alphabet().clone()],
        uz,
        TableMode::Joint,
    );
    conditional_mutual_information(&joint, &[0], &[1], &[])
}

fn joint_uz(p: &[f64], nu: usize, k: &Kernels) -> Vec<f64> {
    let (nx, nz) = (k.nx, k.nz);
    let mut uz = vec![0.0; nu * nz];
    for u in 0..nu {
        for x in 0..nx {
            let pux = p[u * nx + x];
            if pux > 0.0 {
                for z in 0..nz {
                    uz[u * nz + z] += pux * k.z[x * nz + z];
                }
            }
        }
    }
    uz
}

/// Posteriors `q(x|u,y,s)` (axes `[U, X, Y, S]`, conditioned on `U, Y, S`)
/// and `q(u|z)` (axes `[U, Z]`, conditioned on `Z`). Conditions with zero
/// mass get uniform slices.
pub fn update_q(p_ux: &JointTable, channel: &ChannelModel) -> Result<(JointTable, JointTable)> {
    let k = channel.kernels();
    let (nu, p) = check_p_ux(p_ux, k.nx)?;
    let (nx, nys) = (k.nx, k.ny * k.ns);
    let mut q = vec![0.0; nu * nx * nys];
    for u in 0..nu {
        for o in 0..nys {
            let total: f64 = (0..nx).map(|x| p[u * nx + x] * k.ys[x * nys + o]).sum();
            for x in 0..nx {
                q[(u * nx + x) * nys + o] = if total > 0.0 {
                    p[u * nx + x] * k.ys[x * nys + o] / total
                } else {
                    1.0 / nx as f64
                };
            }
        }
    }
    let q_x = JointTable::from_parts(
        vec![
            Alphabet::new(nu)?,
            channel.input_alphabet().clone(),
            channel.y_alphabet().clone(),
            channel.state_alphabet().clone(),
        ],
        q,
        TableMode::Conditional {
            given: vec![0, 2, 3],
        },
    );
    Ok((q_x, auxiliary_posterior(&p, nu, channel)?))
}

/// `q(u|z)` with axes `[U, Z]`.
pub(crate) fn auxiliary_posterior(p: &[f64], nu: usize, channel: &ChannelModel) -> Result<JointTable> {
    let k = channel.kernels();
    let nz = k.nz;
    let mut uz = joint_uz(p, nu, k);
    for z in 0..nz {
        let total: f64 = (0..nu).map(|u| uz[u * nz + z]).sum();
        for u in 0..nu {
            uz[u * nz + z] = if total > 0.0 {
                uz[u * nz + z] / total
            } else {
                1.0 / nu as f64
            };
        }
    }
    Ok(JointTable::from_parts(
        vec![Alphabet::new(nu)?, channel.z_alphabet().clone()],
        uz,
        TableMode::Conditional { given: vec![1] },
    ))
}

/// `d[q](u,x) = Σ_{y,s} p(y,s|x) ln q(x|u,y,s) + Σ_z p(z|x) ln q(u|z)`, row
/// major over `(u, x)`. Entries are `-inf` where a positive kernel cell
/// meets a zero posterior.
pub fn exponent_base(
    q_x_uys: &JointTable,
    q_u_z: &JointTable,
    channel: &ChannelModel,
) -> Result<Vec<f64>> {
    let k = channel.kernels();
    let (nx, nys) = (k.nx, k.ny * k.ns);
    let shape = q_x_uys.shape();
    if shape.len() != 4 || shape[1] != nx || shape[2] != k.ny || shape[3] != k.ns {
        return Err(Error::Shape(format!(
            "q(x|u,y,s) must have shape [U, {nx}, {}, {}], got {shape:?}",
            k.ny, k.ns
        )));
    }
    let nu = shape[0];
    let q = q_x_uys.mass();
    let mut d = vec![0.0; nu * nx];
    for u in 0..nu {
        for x in 0..nx {
            let mut acc = 0.0;
            for o in 0..nys {
                let kv = k.ys[x * nys + o];
                if kv > 0.0 {
                    acc += kv * q[(u * nx + x) * nys + o].ln();
                }
            }
            d[u * nx + x] = acc;
        }
    }
    add_auxiliary_term(q_u_z, nu, k, &mut d)?;
    Ok(d)
}

pub(crate) fn add_auxiliary_term(q_u_z: &JointTable, nu: usize, k: &Kernels, d: &mut [f64]) -> Result<()> {
    let (nx, nz) = (k.nx, k.nz);
    if q_u_z.shape() != vec![nu, nz] {
        return Err(Error::Shape(format!(
            "q(u|z) must have shape [{nu}, {nz}], got {:?}",
            q_u_z.shape()
        )));
    }
    let qz = q_u_z.mass();
    for u in 0..nu {
        for x in 0..nx {
            let mut acc = 0.0;
            for z in 0..nz {
                let kv = k.z[x * nz + z];
                if kv > 0.0 {
                    acc += kv * qz[u * nz + z].ln();
                }
            }
            d[u * nx + x] += acc;
        }
    }
    Ok(())
}

/// Conditional mean `E[S|U=u,Z=z]`; the prior mean where `(u,z)` has no
/// mass.
pub fn update_c(p_ux: &JointTable, channel: &ChannelModel) -> Result<EstimatorTable> {
    let k = channel.kernels();
    let (nu, p) = check_p_ux(p_ux, k.nx)?;
    let model = SeModel::new(channel, nu)?;
    Ok(EstimatorTable {
        u_size: nu,
        z_size: k.nz,
        values: model.estimate(&p),
    })
}

/// `w(u,x) = Σ_{z,s} p(z,s|x) (s − c(u,z))²`, row major over `(u, x)`.
pub fn distortion_weights(c: &EstimatorTable, channel: &ChannelModel) -> Result<Vec<f64>> {
    let k = channel.kernels();
    if c.z_size != k.nz || c.values.len() != c.u_size * k.nz {
        return Err(Error::Shape(format!(
            "estimator must be {}x{}, got {}x{}",
            c.u_size, k.nz, c.u_size, c.z_size
        )));
    }
    if c.values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Argument("estimator entries must be finite".into()));
    }
    let model = SeModel::new(channel, c.u_size)?;
    let mut w = vec![0.0; c.u_size * k.nx];
    model.weights(&c.values, &mut w);
    Ok(w)
}

/// Solves for the largest rate at distortion `d` (squared error), with an
/// optional second-moment budget on the input.
pub fn solve(
    channel: &ChannelModel,
    d: f64,
    config: &SolverConfig,
    power_budget: Option<f64>,
) -> Result<SolveResult> {
    let nu = config.u_size.unwrap_or(channel.kernels().nx);
    let model = SeModel::new(channel, nu)?;
    solve_model(&model, d, power_budget, config, None)
}

/// [`solve`] with `init` as an extra first start ahead of the jittered ones.
pub fn solve_from(
    channel: &ChannelModel,
    d: f64,
    config: &SolverConfig,
    power_budget: Option<f64>,
    init: &JointTable,
) -> Result<SolveResult> {
    let (nu, p) = check_p_ux(init, channel.kernels().nx)?;
    let config = SolverConfig {
        u_size: Some(nu),
        ..config.clone()
    };
    let model = SeModel::new(channel, nu)?;
    solve_model(&model, d, power_budget, &config, Some(&p))
}

/// Adds `Σ_o k(o|x) ln q(x|u,o)` for the posterior `q ∝ p(u,x) k(o|x)` to
/// `out`, without building `q`.
pub(crate) fn add_posterior_term(
    p: &[f64],
    nu: usize,
    nx: usize,
    kernel: &[f64],
    nout: usize,
    negent: &[f64],
    out: &mut [f64],
) {
    let mut m = vec![0.0; nout];
    let mut lm = vec![0.0; nout];
    for u in 0..nu {
        m.iter_mut().for_each(|v| *v = 0.0);
        for x in 0..nx {
            let pux = p[u * nx + x];
            if pux > 0.0 {
                for (acc, kv) in m.iter_mut().zip(&kernel[x * nout..(x + 1) * nout]) {
                    *acc += pux * kv;
                }
            }
        }
        for (l, mv) in lm.iter_mut().zip(&m) {
            *l = if *mv > 0.0 { mv.ln() } else { 0.0 };
        }
        for x in 0..nx {
            let idx = u * nx + x;
            let row = &kernel[x * nout..(x + 1) * nout];
            let pux = p[idx];
            out[idx] += if pux > 0.0 {
                let cross: f64 = row.iter().zip(&lm).map(|(kv, l)| kv * l).sum();
                pux.ln() + negent[x] - cross
            } else if row.iter().zip(&m).any(|(kv, mv)| *kv > 0.0 && *mv > 0.0) {
                f64::NEG_INFINITY
            } else {
                // Every output this input reaches has no mass under u, where
                // the posterior is filled uniform.
                -(nx as f64).ln()
            };
        }
    }
}

/// Adds `Σ_z p(z|x) ln q(u|z)` to `out`.
pub(crate) fn add_auxiliary_fused(p: &[f64], nu: usize, k: &Kernels, out: &mut [f64]) {
    let (nx, nz) = (k.nx, k.nz);
    let uz = joint_uz(p, nu, k);
    let mut lq = vec![0.0; nu * nz];
    for z in 0..nz {
        let total: f64 = (0..nu).map(|u| uz[u * nz + z]).sum();
        for u in 0..nu {
            let v = uz[u * nz + z];
            lq[u * nz + z] = if total <= 0.0 {
                -(nu as f64).ln()
            } else if v > 0.0 {
                (v / total).ln()
            } else {
                f64::NEG_INFINITY
            };
        }
    }
    for u in 0..nu {
        for x in 0..nx {
            let mut acc = 0.0;
            for z in 0..nz {
                let kv = k.z[x * nz + z];
                if kv > 0.0 {
                    acc += kv * lq[u * nz + z];
                }
            }
            out[u * nx + x] += acc;
        }
    }
}

pub(crate) fn row_negentropy(kernel: &[f64], nx: usize, nout: usize) -> Vec<f64> {
    (0..nx)
        .map(|x| {
            kernel[x * nout..(x + 1) * nout]
                .iter()
                .filter(|v| **v > 0.0)
                .map(|v| v * v.ln())
                .sum()
        })
        .collect()
}

pub(crate) struct SeModel<'a> {
    channel: &'a ChannelModel,
    nu: usize,
    negent_ys: Vec<f64>,
    /// `Σ_s p(z,s|x) s` at `x*nz + z`.
    first_moment: Vec<f64>,
    prior_mean: f64,
}

impl<'a> SeModel<'a> {
    pub(crate) fn new(channel: &'a ChannelModel, nu: usize) -> Result<Self> {
        if nu == 0 {
            return Err(Error::Argument("auxiliary alphabet must be non-empty".into()));
        }
        let k = channel.kernels();
        let s = channel.state_values();
        let mut first_moment = vec![0.0; k.nx * k.nz];
        for x in 0..k.nx {
            for z in 0..k.nz {
                first_moment[x * k.nz + z] = (0..k.ns).map(|j| k.zs[(x * k.nz + z) * k.ns + j] * s[j]).sum();
            }
        }
        Ok(Self {
            channel,
            nu,
            negent_ys: row_negentropy(&k.ys, k.nx, k.ny * k.ns),
            first_moment,
            prior_mean: channel.state_prior().mean()?,
        })
    }
}

impl Model for SeModel<'_> {
    type Est = Vec<f64>;

    fn nu(&self) -> usize {
        self.nu
    }

    fn nx(&self) -> usize {
        self.channel.kernels().nx
    }

    fn sign(&self) -> TiltSign {
        TiltSign::Minus
    }

    fn exponent(&self, p: &[f64], d: &mut [f64]) {
        let k = self.channel.kernels();
        d.iter_mut().for_each(|v| *v = 0.0);
        add_posterior_term(p, self.nu, k.nx, &k.ys, k.ny * k.ns, &self.negent_ys, d);
        add_auxiliary_fused(p, self.nu, k, d);
    }

    fn estimate(&self, p: &[f64]) -> Vec<f64> {
        let k = self.channel.kernels();
        let (nx, nz) = (k.nx, k.nz);
        let mut c = vec![0.0; self.nu * nz];
        for u in 0..self.nu {
            for z in 0..nz {
                let mut num = 0.0;
                let mut den = 0.0;
                for x in 0..nx {
                    let pux = p[u * nx + x];
                    num += pux * self.first_moment[x * nz + z];
                    den += pux * k.z[x * nz + z];
                }
                c[u * nz + z] = if den > 0.0 { num / den } else { self.prior_mean };
            }
        }
        c
    }

    fn weights(&self, c: &Vec<f64>, w: &mut [f64]) {
        let k = self.channel.kernels();
        let s = self.channel.state_values();
        let (nx, nz, ns) = (k.nx, k.nz, k.ns);
        for u in 0..self.nu {
            for x in 0..nx {
                let mut acc = 0.0;
                for z in 0..nz {
                    let cv = c[u * nz + z];
                    let row = &k.zs[(x * nz + z) * ns..(x * nz + z + 1) * ns];
                    for (kv, sv) in row.iter().zip(s) {
                        let e = sv - cv;
                        acc += kv * e * e;
                    }
                }
                w[u * nx + x] = acc;
            }
        }
    }

    fn upper_bound(&self, p: &[f64]) -> f64 {
        let k = self.channel.kernels();
        let px = input_marginal(p, self.nu, k.nx);
        mutual_information(&px, &k.ys, k.ny * k.ns) + mutual_information(&px, &k.z, k.nz)
    }

    fn rate(&self, p: &[f64]) -> Result<f64> {
        let table = crate::solver::p_ux_table(self.channel, self.nu, p.to_vec());
        objective_f(&table, self.channel)
    }

    fn achieved(&self, p: &[f64], c: &Vec<f64>) -> f64 {
        let mut w = vec![0.0; p.len()];
        self.weights(c, &mut w);
        p.iter().zip(&w).map(|(a, b)| a * b).sum()
    }

    fn export(&self, c: &Vec<f64>) -> Estimator {
        Estimator::Mean(EstimatorTable {
            u_size: self.nu,
            z_size: self.channel.kernels().nz,
            values: c.clone(),
        })
    }

    fn channel(&self) -> &ChannelModel {
        self.channel
    }
}
