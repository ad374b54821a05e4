//! State-dependent memoryless channel models.
//!
//! A [`ChannelModel`] stores its kernels in one of two factorizations:
//!
//! * [`Factorization::StateDependent`]: `p(s) p(y|x,s) p(z|x,s)`, used by the
//!   squared-error problem.
//! * [`Factorization::Markov`]: `p(y|x) p(z,s|x)`, used by the log-loss
//!   problem where X - Y - Z is Markov.
//!
//! The composite kernels the solvers need (`p(y,s|x)`, `p(z,s|x)`, `p(z|x)`,
//! `p(y|x)`) are derived once at construction and kept as flat arrays.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prob::{Alphabet, DiscreteDistribution, JointTable, TableMode, INPUT_SUM_TOL};

/// Authoritative kernels of a channel.
#[derive(Debug, Clone, PartialEq)]
pub enum Factorization {
    /// `kernel_y` has axes `[X, S, Y]`, `kernel_z` has axes `[X, S, Z]`, both
    /// conditioned on `X, S`.
    StateDependent {
        kernel_y: JointTable,
        kernel_z: JointTable,
    },
    /// `kernel_y` has axes `[X, Y]` conditioned on `X`; `kernel_zs` has axes
    /// `[X, Z, S]` conditioned on `X`.
    Markov {
        kernel_y: JointTable,
        kernel_zs: JointTable,
    },
}

/// Flat composite kernels, row-major with `x` outermost.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernels {
    pub nx: usize,
    pub ns: usize,
    pub ny: usize,
    pub nz: usize,
    /// `p(y,s|x)` at `(x*ny + y)*ns + s`.
    pub ys: Vec<f64>,
    /// `p(z,s|x)` at `(x*nz + z)*ns + s`.
    pub zs: Vec<f64>,
    /// `p(z|x)` at `x*nz + z`.
    pub z: Vec<f64>,
    /// `p(y|x)` at `x*ny + y`.
    pub y: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelModel {
    state_prior: DiscreteDistribution,
    x: Alphabet,
    y: Alphabet,
    z: Alphabet,
    factorization: Factorization,
    kernels: Kernels,
}

impl ChannelModel {
    /// Channel given by `p(s)`, `p(y|x,s)` and `p(z|x,s)`.
    pub fn state_dependent(
        state_prior: DiscreteDistribution,
        kernel_y: JointTable,
        kernel_z: JointTable,
    ) -> Result<Self> {
        expect_conditional(&kernel_y, 3, &[0, 1], "kernel_y")?;
        expect_conditional(&kernel_z, 3, &[0, 1], "kernel_z")?;
        let x = kernel_y.axes()[0].clone();
        let s = state_prior.alphabet();
        same_size(&kernel_y.axes()[1], s, "kernel_y state axis")?;
        same_size(&kernel_z.axes()[0], &x, "kernel_z input axis")?;
        same_size(&kernel_z.axes()[1], s, "kernel_z state axis")?;
        let y = kernel_y.axes()[2].clone();
        let z = kernel_z.axes()[2].clone();
        require_values(&x, "X")?;
        require_values(s, "S")?;

        let (nx, ns, ny, nz) = (x.size(), s.size(), y.size(), z.size());
        let ps = state_prior.mass();
        let ky = kernel_y.mass();
        let kz = kernel_z.mass();
        let mut k = Kernels::zeros(nx, ns, ny, nz);
        for xi in 0..nx {
            for si in 0..ns {
                for yi in 0..ny {
                    let v = ps[si] * ky[(xi * ns + si) * ny + yi];
                    k.ys[(xi * ny + yi) * ns + si] = v;
                    k.y[xi * ny + yi] += v;
                }
                for zi in 0..nz {
                    let v = ps[si] * kz[(xi * ns + si) * nz + zi];
                    k.zs[(xi * nz + zi) * ns + si] = v;
                    k.z[xi * nz + zi] += v;
                }
            }
        }
        Ok(Self {
            state_prior,
            x,
            y,
            z,
            factorization: Factorization::StateDependent { kernel_y, kernel_z },
            kernels: k,
        })
    }

    /// Channel given by `p(y|x)` and `p(z,s|x)`. The state marginal of
    /// `p(z,s|x)` must equal `state_prior` for every input.
    pub fn markov(
        state_prior: DiscreteDistribution,
        kernel_y: JointTable,
        kernel_zs: JointTable,
    ) -> Result<Self> {
        expect_conditional(&kernel_y, 2, &[0], "kernel_y")?;
        expect_conditional(&kernel_zs, 3, &[0], "kernel_zs")?;
        let x = kernel_y.axes()[0].clone();
        let s = state_prior.alphabet();
        same_size(&kernel_zs.axes()[0], &x, "kernel_zs input axis")?;
        same_size(&kernel_zs.axes()[2], s, "kernel_zs state axis")?;
        let y = kernel_y.axes()[1].clone();
        let z = kernel_zs.axes()[1].clone();
        require_values(&x, "X")?;
        require_values(s, "S")?;

        let (nx, ns, ny, nz) = (x.size(), s.size(), y.size(), z.size());
        let ps = state_prior.mass();
        let mut k = Kernels::zeros(nx, ns, ny, nz);
        k.y.copy_from_slice(kernel_y.mass());
        k.zs.copy_from_slice(kernel_zs.mass());
        for xi in 0..nx {
            let mut s_given_x = vec![0.0; ns];
            for zi in 0..nz {
                for si in 0..ns {
                    let v = k.zs[(xi * nz + zi) * ns + si];
                    k.z[xi * nz + zi] += v;
                    s_given_x[si] += v;
                }
            }
            for si in 0..ns {
                if (s_given_x[si] - ps[si]).abs() > INPUT_SUM_TOL {
                    return Err(Error::Argument(format!(
                        "kernel_zs state marginal at x={xi}, s={si} is {} but the prior is {}",
                        s_given_x[si], ps[si]
                    )));
                }
            }
            for yi in 0..ny {
                for si in 0..ns {
                    k.ys[(xi * ny + yi) * ns + si] = k.y[xi * ny + yi] * ps[si];
                }
            }
        }
        Ok(Self {
            state_prior,
            x,
            y,
            z,
            factorization: Factorization::Markov { kernel_y, kernel_zs },
            kernels: k,
        })
    }

    /// Markov-factorized channel with the same `p(y|x)` (state averaged out)
    /// and `p(z,s|x) = p(s) p(z|x,s)`. The joint law of `Y` with `(Z,S)` is
    /// not preserved; the log-loss objective only depends on these two
    /// marginals.
    pub fn to_markov(&self) -> Result<Self> {
        if self.is_markov() {
            return Ok(self.clone());
        }
        let k = &self.kernels;
        let s = self.state_prior.alphabet().clone();
        let kernel_y = JointTable::from_parts(
            vec![self.x.clone(), self.y.clone()],
            k.y.clone(),
            TableMode::Conditional { given: vec![0] },
        );
        let kernel_zs = JointTable::from_parts(
            vec![self.x.clone(), self.z.clone(), s],
            k.zs.clone(),
            TableMode::Conditional { given: vec![0] },
        );
        Self::markov(self.state_prior.clone(), kernel_y, kernel_zs)
    }

    pub fn is_markov(&self) -> bool {
        matches!(self.factorization, Factorization::Markov { .. })
    }

    pub fn factorization(&self) -> &Factorization {
        &self.factorization
    }

    pub fn kernels(&self) -> &Kernels {
        &self.kernels
    }

    pub fn state_prior(&self) -> &DiscreteDistribution {
        &self.state_prior
    }

    pub fn input_alphabet(&self) -> &Alphabet {
        &self.x
    }

    pub fn state_alphabet(&self) -> &Alphabet {
        self.state_prior.alphabet()
    }

    pub fn y_alphabet(&self) -> &Alphabet {
        &self.y
    }

    pub fn z_alphabet(&self) -> &Alphabet {
        &self.z
    }

    pub fn input_values(&self) -> &[f64] {
        self.x.values().expect("validated at construction")
    }

    pub fn state_values(&self) -> &[f64] {
        self.state_alphabet().values().expect("validated at construction")
    }

    /// `p(y,s|x)` with axes `[X, Y, S]`.
    pub fn kernel_ys(&self) -> JointTable {
        self.cond_table(
            vec![self.x.clone(), self.y.clone(), self.state_alphabet().clone()],
            self.kernels.ys.clone(),
        )
    }

    /// `p(z,s|x)` with axes `[X, Z, S]`.
    pub fn kernel_zs(&self) -> JointTable {
        self.cond_table(
            vec![self.x.clone(), self.z.clone(), self.state_alphabet().clone()],
            self.kernels.zs.clone(),
        )
    }

    /// `p(z|x)` with axes `[X, Z]`.
    pub fn kernel_z_marginal(&self) -> JointTable {
        self.cond_table(vec![self.x.clone(), self.z.clone()], self.kernels.z.clone())
    }

    /// `p(y|x)` with axes `[X, Y]`.
    pub fn kernel_y_marginal(&self) -> JointTable {
        self.cond_table(vec![self.x.clone(), self.y.clone()], self.kernels.y.clone())
    }

    /// Full `p(y,s,z|x)` with axes `[X, Y, S, Z]`. Size grows as the product
    /// of all four alphabets; meant for checks on small channels.
    pub fn kernel_ysz(&self) -> JointTable {
        let k = &self.kernels;
        let (nx, ns, ny, nz) = (k.nx, k.ns, k.ny, k.nz);
        let mut mass = vec![0.0; nx * ny * ns * nz];
        for xi in 0..nx {
            for yi in 0..ny {
                for si in 0..ns {
                    for zi in 0..nz {
                        let v = match &self.factorization {
                            Factorization::StateDependent { kernel_y, kernel_z } => {
                                let ps = self.state_prior.mass()[si];
                                ps * kernel_y.mass()[(xi * ns + si) * ny + yi]
                                    * kernel_z.mass()[(xi * ns + si) * nz + zi]
                            }
                            Factorization::Markov { .. } => {
                                k.y[xi * ny + yi] * k.zs[(xi * nz + zi) * ns + si]
                            }
                        };
                        mass[((xi * ny + yi) * ns + si) * nz + zi] = v;
                    }
                }
            }
        }
        self.cond_table(
            vec![
                self.x.clone(),
                self.y.clone(),
                self.state_alphabet().clone(),
                self.z.clone(),
            ],
            mass,
        )
    }

    fn cond_table(&self, axes: Vec<Alphabet>, mass: Vec<f64>) -> JointTable {
        JointTable::from_parts(axes, mass, TableMode::Conditional { given: vec![0] })
    }
}

impl Kernels {
    fn zeros(nx: usize, ns: usize, ny: usize, nz: usize) -> Self {
        Self {
            nx,
            ns,
            ny,
            nz,
            ys: vec![0.0; nx * ny * ns],
            zs: vec![0.0; nx * nz * ns],
            z: vec![0.0; nx * nz],
            y: vec![0.0; nx * ny],
        }
    }
}

/// Second moment `E[X²]` of an input distribution over a valued alphabet.
pub fn power(p_x: &DiscreteDistribution) -> Result<f64> {
    let values = p_x
        .alphabet()
        .values()
        .ok_or_else(|| Error::Argument("input alphabet carries no grid values".into()))?;
    Ok(p_x.mass().iter().zip(values).map(|(p, x)| p * x * x).sum())
}

/// Additive Gaussian channel `Y = S + X + N₁`, `Z = S + X + N₂` with
/// independent `S ~ N(0, σ_s²)`, `N₁ ~ N(0, σ₁²)`, `N₂ ~ N(0, σ₂²)`, and the
/// grids used to discretize it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussianSpec {
    pub sigma_s_sq: f64,
    pub sigma_1_sq: f64,
    pub sigma_2_sq: f64,
    pub power_budget: f64,
    #[serde(default = "default_small_grid")]
    pub n_x: usize,
    #[serde(default = "default_small_grid")]
    pub n_s: usize,
    #[serde(default = "default_output_grid")]
    pub n_y: usize,
    #[serde(default = "default_output_grid")]
    pub n_z: usize,
    /// Half-width of the state range and of the Y/Z ranges, in standard
    /// deviations.
    #[serde(default = "default_truncation")]
    pub truncation_multiplier: f64,
    /// Half-width of the input grid in units of `√B`.
    #[serde(default = "default_x_span")]
    pub x_span_multiplier: f64,
}

fn default_small_grid() -> usize {
    17
}
fn default_output_grid() -> usize {
    33
}
fn default_truncation() -> f64 {
    4.0
}
fn default_x_span() -> f64 {
    2.5
}

impl GaussianSpec {
    /// Spec with the default grids (17 input and state points, 33 output
    /// bins, ±4σ truncation, input span ±2.5√B).
    pub fn new(sigma_s_sq: f64, sigma_1_sq: f64, sigma_2_sq: f64, power_budget: f64) -> Self {
        Self {
            sigma_s_sq,
            sigma_1_sq,
            sigma_2_sq,
            power_budget,
            n_x: default_small_grid(),
            n_s: default_small_grid(),
            n_y: default_output_grid(),
            n_z: default_output_grid(),
            truncation_multiplier: default_truncation(),
            x_span_multiplier: default_x_span(),
        }
    }

    pub fn with_grids(mut self, n_x: usize, n_s: usize, n_y: usize, n_z: usize) -> Self {
        self.n_x = n_x;
        self.n_s = n_s;
        self.n_y = n_y;
        self.n_z = n_z;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("sigma_s_sq", self.sigma_s_sq),
            ("sigma_1_sq", self.sigma_1_sq),
            ("sigma_2_sq", self.sigma_2_sq),
            ("power_budget", self.power_budget),
            ("truncation_multiplier", self.truncation_multiplier),
            ("x_span_multiplier", self.x_span_multiplier),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Argument(format!("{name} must be positive, got {v}")));
            }
        }
        for (name, n) in [
            ("n_x", self.n_x),
            ("n_s", self.n_s),
            ("n_y", self.n_y),
            ("n_z", self.n_z),
        ] {
            if n < 2 {
                return Err(Error::Argument(format!("{name} must be at least 2, got {n}")));
            }
        }
        Ok(())
    }

    /// Input grid: `n_x` evenly spaced amplitudes on `±x_span_multiplier·√B`.
    pub fn input_grid(&self) -> Vec<f64> {
        let amp = self.x_span_multiplier * self.power_budget.sqrt();
        symmetric_points(self.n_x, amp)
    }

    /// State grid: centers of `n_s` equal bins on `±truncation·σ_s`.
    pub fn state_grid(&self) -> Vec<f64> {
        let half = self.truncation_multiplier * self.sigma_s_sq.sqrt();
        let n = self.n_s as f64;
        symmetric_points(self.n_s, half * (n - 1.0) / n)
    }
}

/// Discretizes the additive Gaussian channel of `spec` into a
/// state-dependent [`ChannelModel`].
///
/// The state mass of each grid point is the Gaussian probability of its bin,
/// with the two outer bins extended to ±∞. Y and Z use `n_y`/`n_z` equal
/// bins over ±truncation standard deviations of the output marginal under
/// the power budget (`√(B + σ_s² + σ²)`), again with half-open outer bins,
/// so every slice carries the full Gaussian mass.
pub fn discretize_gaussian(spec: &GaussianSpec) -> Result<ChannelModel> {
    spec.validate()?;
    let t = spec.truncation_multiplier;
    let xs = spec.input_grid();
    let ss = spec.state_grid();
    let sd_s = spec.sigma_s_sq.sqrt();

    let s_edges = bin_edges(spec.n_s, t * sd_s);
    let ps: Vec<f64> = s_edges
        .windows(2)
        .map(|e| gauss_interval(e[0], e[1], 0.0, sd_s))
        .collect();
    let state_prior =
        DiscreteDistribution::new(Alphabet::with_values(ss.clone())?, renormalize(ps))?;

    let output_kernel = |noise_var: f64, n: usize| -> Vec<f64> {
        let half = t * (spec.power_budget + spec.sigma_s_sq + noise_var).sqrt();
        let edges = bin_edges(n, half);
        let sd = noise_var.sqrt();
        let mut mass = Vec::with_capacity(xs.len() * ss.len() * n);
        for &x in &xs {
            for &s in &ss {
                let row: Vec<f64> = edges
                    .windows(2)
                    .map(|e| gauss_interval(e[0], e[1], x + s, sd))
                    .collect();
                mass.extend(renormalize(row));
            }
        }
        mass
    };

    let x_alpha = Alphabet::with_values(xs.clone())?;
    let s_alpha = state_prior.alphabet().clone();
    let y_alpha = Alphabet::with_values(bin_centers(spec.n_y, t * (spec.power_budget + spec.sigma_s_sq + spec.sigma_1_sq).sqrt()))?;
    let z_alpha = Alphabet::with_values(bin_centers(spec.n_z, t * (spec.power_budget + spec.sigma_s_sq + spec.sigma_2_sq).sqrt()))?;

    let kernel_y = JointTable::conditional(
        vec![x_alpha.clone(), s_alpha.clone(), y_alpha],
        output_kernel(spec.sigma_1_sq, spec.n_y),
        vec![0, 1],
    )?;
    let kernel_z = JointTable::conditional(
        vec![x_alpha, s_alpha, z_alpha],
        output_kernel(spec.sigma_2_sq, spec.n_z),
        vec![0, 1],
    )?;
    ChannelModel::state_dependent(state_prior, kernel_y, kernel_z)
}

/// `n` points `amp·(2i − (n−1))/(n−1)`; exactly antisymmetric.
fn symmetric_points(n: usize, amp: f64) -> Vec<f64> {
    let m = (n - 1) as f64;
    (0..n)
        .map(|i| tidy_zero(amp * (2.0 * i as f64 - m) / m))
        .collect()
}

/// `n + 1` edges of `n` equal bins on `[−half, half]`, outer edges at ±∞.
fn bin_edges(n: usize, half: f64) -> Vec<f64> {
    let mut e: Vec<f64> = (0..=n)
        .map(|k| tidy_zero(half * (2.0 * k as f64 - n as f64) / n as f64))
        .collect();
    e[0] = f64::NEG_INFINITY;
    e[n] = f64::INFINITY;
    e
}

fn bin_centers(n: usize, half: f64) -> Vec<f64> {
    (0..n)
        .map(|k| tidy_zero(half * (2.0 * k as f64 + 1.0 - n as f64) / n as f64))
        .collect()
}

fn tidy_zero(v: f64) -> f64 {
    if v == 0.0 {
        0.0
    } else {
        v
    }
}

fn renormalize(mut row: Vec<f64>) -> Vec<f64> {
    let sum: f64 = row.iter().sum();
    row.iter_mut().for_each(|v| *v /= sum);
    row
}

/// Standard normal upper tail `P(N > t)`.
fn upper_tail(t: f64) -> f64 {
    0.5 * libm::erfc(t / std::f64::consts::SQRT_2)
}

/// `P(a < N(mean, sd²) ≤ b)`, evaluated on the tail that avoids
/// cancellation.
fn gauss_interval(a: f64, b: f64, mean: f64, sd: f64) -> f64 {
    let ta = (a - mean) / sd;
    let tb = (b - mean) / sd;
    let v = if ta >= 0.0 {
        upper_tail(ta) - upper_tail(tb)
    } else if tb <= 0.0 {
        upper_tail(-tb) - upper_tail(-ta)
    } else {
        1.0 - upper_tail(tb) - upper_tail(-ta)
    };
    v.max(0.0)
}

fn expect_conditional(t: &JointTable, rank: usize, given: &[usize], name: &str) -> Result<()> {
    if t.rank() != rank {
        return Err(Error::Shape(format!(
            "{name} must have {rank} axes, found {}",
            t.rank()
        )));
    }
    match t.mode() {
        TableMode::Conditional { given: g } if g == given => Ok(()),
        _ => Err(Error::Argument(format!(
            "{name} must be a conditional table given axes {given:?}"
        ))),
    }
}

fn same_size(a: &Alphabet, b: &Alphabet, what: &str) -> Result<()> {
    if a.size() != b.size() {
        return Err(Error::Shape(format!(
            "{what}: size {} does not match {}",
            a.size(),
            b.size()
        )));
    }
    Ok(())
}

fn require_values(a: &Alphabet, name: &str) -> Result<()> {
    if a.values().is_none() {
        return Err(Error::Argument(format!("{name} alphabet must carry real values")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bsc_model(eps: f64) -> ChannelModel {
        let x = Alphabet::indexed(2).unwrap();
        let s = Alphabet::indexed(1).unwrap();
        let prior = DiscreteDistribution::uniform(s.clone());
        let ky = JointTable::conditional(
            vec![x.clone(), s.clone(), Alphabet::new(2).unwrap()],
            vec![1.0 - eps, eps, eps, 1.0 - eps],
            vec![0, 1],
        )
        .unwrap();
        let kz = JointTable::conditional(
            vec![x, s, Alphabet::new(3).unwrap()],
            vec![0.2, 0.3, 0.5, 0.2, 0.3, 0.5],
            vec![0, 1],
        )
        .unwrap();
        ChannelModel::state_dependent(prior, ky, kz).unwrap()
    }

    #[test]
    fn trivial_state_keeps_kernel() {
        let m = bsc_model(0.1);
        let k = m.kernels();
        assert_eq!(k.ys, vec![0.9, 0.1, 0.1, 0.9]);
        assert_eq!(k.y, k.ys);
    }

    #[test]
    fn constant_z_slices_give_constant_marginal() {
        let m = bsc_model(0.1);
        let k = m.kernels();
        assert_eq!(&k.z[..3], &k.z[3..]);
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let x = Alphabet::indexed(2).unwrap();
        let s = Alphabet::indexed(2).unwrap();
        let prior = DiscreteDistribution::uniform(Alphabet::indexed(3).unwrap());
        let ky = JointTable::conditional(
            vec![x.clone(), s.clone(), Alphabet::new(2).unwrap()],
            vec![0.5; 8],
            vec![0, 1],
        )
        .unwrap();
        let kz = ky.clone();
        assert!(matches!(
            ChannelModel::state_dependent(prior, ky, kz),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn markov_requires_matching_state_marginal() {
        let x = Alphabet::indexed(2).unwrap();
        let s = Alphabet::indexed(2).unwrap();
        let prior = DiscreteDistribution::uniform(s.clone());
        let ky = JointTable::conditional(
            vec![x.clone(), Alphabet::new(2).unwrap()],
            vec![0.5; 4],
            vec![0],
        )
        .unwrap();
        // p(s|x=0) = (0.8, 0.2) disagrees with the uniform prior.
        let kzs = JointTable::conditional(
            vec![x, Alphabet::new(1).unwrap(), s],
            vec![0.8, 0.2, 0.5, 0.5],
            vec![0],
        )
        .unwrap();
        assert!(ChannelModel::markov(prior, ky, kzs).is_err());
    }

    #[test]
    fn power_reference_values() {
        let a = Alphabet::with_values(vec![-1.0, 0.0, 1.0]).unwrap();
        let pm = DiscreteDistribution::point_mass(a.clone(), 1).unwrap();
        assert_eq!(power(&pm).unwrap(), 0.0);
        let pm2 = DiscreteDistribution::new(a, vec![0.5, 0.0, 0.5]).unwrap();
        assert_eq!(power(&pm2).unwrap(), 1.0);
        let vals = [-2.0, -0.5, 0.0, 1.5, 3.0];
        let p = [0.1, 0.2, 0.3, 0.25, 0.15];
        let d = DiscreteDistribution::new(Alphabet::with_values(vals.to_vec()).unwrap(), p.to_vec())
            .unwrap();
        let direct: f64 = vals.iter().zip(p).map(|(x, q)| q * x * x).sum();
        assert!((power(&d).unwrap() - direct).abs() < 1e-15);
        let unvalued = DiscreteDistribution::uniform(Alphabet::new(2).unwrap());
        assert!(power(&unvalued).is_err());
    }

    #[test]
    fn gaussian_state_moments() {
        let mut spec = GaussianSpec::new(1.0, 1.0, 2.0, 10.0);
        spec.n_s = 33;
        let m = discretize_gaussian(&spec).unwrap();
        let prior = m.state_prior();
        assert!(prior.mean().unwrap().abs() < 1e-3);
        assert!((prior.variance().unwrap() - 1.0).abs() < 0.01);
    }

    #[test]
    fn gaussian_grids_are_symmetric() {
        let spec = GaussianSpec::new(1.0, 1.0, 2.0, 10.0);
        let xs = spec.input_grid();
        let ss = spec.state_grid();
        for i in 0..xs.len() {
            assert_eq!(xs[i], -xs[xs.len() - 1 - i]);
        }
        for j in 0..ss.len() {
            assert_eq!(ss[j], -ss[ss.len() - 1 - j]);
        }
        assert_eq!(xs.len(), 17);
        assert!((xs[16] - 2.5 * 10f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn gaussian_interval_tails() {
        assert!((gauss_interval(f64::NEG_INFINITY, f64::INFINITY, 3.0, 2.0) - 1.0).abs() < 1e-15);
        assert!((gauss_interval(0.0, f64::INFINITY, 0.0, 1.0) - 0.5).abs() < 1e-15);
        // Far tail stays accurate instead of cancelling to zero.
        let v = gauss_interval(10.0, 11.0, 0.0, 1.0);
        assert!(v > 7e-24 && v < 8e-24);
    }

    #[test]
    fn invalid_spec_rejected() {
        let mut spec = GaussianSpec::new(1.0, 1.0, 2.0, 10.0);
        spec.n_y = 1;
        assert!(discretize_gaussian(&spec).is_err());
        let spec = GaussianSpec::new(0.0, 1.0, 2.0, 10.0);
        assert!(discretize_gaussian(&spec).is_err());
    }
}
