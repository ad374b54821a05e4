//! Channel capacity by the Arimoto–Blahut iteration, with an optional input
//! cost constraint.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::multiplier::{solve_scalar_near, RootConfig, TiltProblem, TiltSign};
use crate::prob::{DiscreteDistribution, JointTable, TableMode};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CapacityConfig {
    /// Stop once successive objective values differ by less than this (nats).
    pub tol: f64,
    pub max_iters: usize,
    pub root: RootConfig,
}

impl Default for CapacityConfig {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            max_iters: 5000,
            root: RootConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CapacityResult {
    pub input_dist: DiscreteDistribution,
    /// Nats.
    pub capacity: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Mutual information after each iteration.
    pub trace: Vec<f64>,
    /// Cost multiplier at the last iteration (0 without a cost constraint).
    pub mu: f64,
}

impl CapacityResult {
    pub fn capacity_bits(&self) -> f64 {
        self.capacity / std::f64::consts::LN_2
    }
}

/// Capacity of `kernel`, a conditional table whose axis 0 is the input and
/// whose remaining axes form the output.
pub fn capacity(kernel: &JointTable, config: &CapacityConfig) -> Result<CapacityResult> {
    run(kernel, None, config)
}

/// Capacity subject to `Σ p(x) cost(x) ≤ budget`.
pub fn capacity_with_cost(
    kernel: &JointTable,
    cost: &[f64],
    budget: f64,
    config: &CapacityConfig,
) -> Result<CapacityResult> {
    run(kernel, Some((cost, budget)), config)
}

/// `I(X;Y)` in nats for input `p` and row-stochastic `kernel` (`nx × ny`).
pub(crate) fn mutual_information(p: &[f64], kernel: &[f64], ny: usize) -> f64 {
    let m = output_marginal(p, kernel, ny);
    let mut total = 0.0;
    for (xi, px) in p.iter().enumerate() {
        if *px <= 0.0 {
            continue;
        }
        let row = &kernel[xi * ny..(xi + 1) * ny];
        let mut acc = 0.0;
        for (k, my) in row.iter().zip(&m) {
            if *k > 0.0 {
                acc += k * (k / my).ln();
            }
        }
        total += px * acc;
    }
    total.max(0.0)
}

fn output_marginal(p: &[f64], kernel: &[f64], ny: usize) -> Vec<f64> {
    let mut m = vec![0.0; ny];
    for (xi, px) in p.iter().enumerate() {
        if *px > 0.0 {
            for (acc, k) in m.iter_mut().zip(&kernel[xi * ny..(xi + 1) * ny]) {
                *acc += px * k;
            }
        }
    }
    m
}

fn run(
    kernel: &JointTable,
    cost: Option<(&[f64], f64)>,
    config: &CapacityConfig,
) -> Result<CapacityResult> {
    if kernel.mode() != &(TableMode::Conditional { given: vec![0] }) {
        return Err(Error::Argument(
            "capacity needs a kernel conditioned on axis 0".into(),
        ));
    }
    let shape = kernel.shape();
    let nx = shape[0];
    let ny: usize = shape[1..].iter().product();
    let k = kernel.mass();
    let x_axis = kernel.axes()[0].clone();

    let mut allowed = vec![true; nx];
    if let Some((c, budget)) = cost {
        if c.len() != nx {
            return Err(Error::Shape(format!(
                "cost has {} entries for {nx} inputs",
                c.len()
            )));
        }
        if c.iter().any(|v| !v.is_finite()) || !budget.is_finite() {
            return Err(Error::Argument("cost and budget must be finite".into()));
        }
        let min_cost = c.iter().copied().fold(f64::INFINITY, f64::min);
        if budget < min_cost {
            return Err(Error::CostInfeasible { budget, min_cost });
        }
        // A budget equal to the cheapest cost pins the input to the
        // cheapest symbols; no finite multiplier reaches that boundary.
        if budget <= min_cost {
            for (a, v) in allowed.iter_mut().zip(c) {
                *a = *v <= min_cost;
            }
        }
    }

    // Σ_y K ln K per input.
    let negent: Vec<f64> = (0..nx)
        .map(|xi| {
            k[xi * ny..(xi + 1) * ny]
                .iter()
                .filter(|v| **v > 0.0)
                .map(|v| v * v.ln())
                .sum()
        })
        .collect();

    let n_allowed = allowed.iter().filter(|a| **a).count() as f64;
    let mut p: Vec<f64> = allowed
        .iter()
        .map(|a| if *a { 1.0 / n_allowed } else { 0.0 })
        .collect();
    let mut trace = Vec::new();
    let mut mu = 0.0;
    let mut converged = false;
    let mut prev = mutual_information(&p, k, ny);
    let mut d = vec![0.0; nx];
    for _ in 0..config.max_iters {
        let m = output_marginal(&p, k, ny);
        let mut any_finite = false;
        for xi in 0..nx {
            d[xi] = if p[xi] > 0.0 {
                let cross: f64 = k[xi * ny..(xi + 1) * ny]
                    .iter()
                    .zip(&m)
                    .filter(|(kv, _)| **kv > 0.0)
                    .map(|(kv, mv)| kv * mv.ln())
                    .sum();
                any_finite = true;
                p[xi].ln() + negent[xi] - cross
            } else {
                f64::NEG_INFINITY
            };
        }
        debug_assert!(any_finite);
        p = match cost {
            Some((c, budget)) if allowed.iter().all(|a| *a) => {
                let problem =
                    TiltProblem::new(1, nx, d.clone(), c.to_vec(), budget, TiltSign::Minus)?;
                let hint = (mu > 0.0).then_some(mu);
                let root = solve_scalar_near(&problem, &config.root, hint)?;
                mu = root.lambda;
                root.dist.mass().to_vec()
            }
            _ => {
                let problem = TiltProblem::new(1, nx, d.clone(), vec![0.0; nx], 0.0, TiltSign::Minus)?;
                problem.tilt_distribution(0.0).mass().to_vec()
            }
        };
        let value = mutual_information(&p, k, ny);
        trace.push(value);
        if (value - prev).abs() < config.tol {
            converged = true;
            prev = value;
            break;
        }
        prev = value;
    }
    Ok(CapacityResult {
        input_dist: DiscreteDistribution::new(x_axis, p)?,
        capacity: prev,
        iterations: trace.len(),
        converged,
        trace,
        mu,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prob::Alphabet;

    fn kernel(rows: &[&[f64]]) -> JointTable {
        let nx = rows.len();
        let ny = rows[0].len();
        JointTable::conditional(
            vec![Alphabet::new(nx).unwrap(), Alphabet::new(ny).unwrap()],
            rows.concat(),
            vec![0],
        )
        .unwrap()
    }

    #[test]
    fn binary_symmetric_channel() {
        let eps: f64 = 0.1;
        let h = -eps * eps.ln() - (1.0 - eps) * (1.0 - eps).ln();
        let r = capacity(&kernel(&[&[0.9, 0.1], &[0.1, 0.9]]), &CapacityConfig::default()).unwrap();
        assert!((r.capacity - (2f64.ln() - h)).abs() < 1e-8);
        assert!((r.capacity - 0.3681).abs() < 1e-4);
        assert!((r.input_dist.mass()[0] - 0.5).abs() < 1e-9);
    }

    #[test]
    fn noiseless_binary() {
        let r = capacity(&kernel(&[&[1.0, 0.0], &[0.0, 1.0]]), &CapacityConfig::default()).unwrap();
        assert!((r.capacity - 2f64.ln()).abs() < 1e-10);
    }

    #[test]
    fn identical_rows_carry_nothing() {
        let r = capacity(
            &kernel(&[&[0.3, 0.7], &[0.3, 0.7], &[0.3, 0.7]]),
            &CapacityConfig::default(),
        )
        .unwrap();
        assert!(r.capacity.abs() < 1e-12);
    }

    #[test]
    fn z_channel_optimum() {
        // Z-channel with crossover 1/2: capacity ln(5/4), p(1) = 2/5.
        let r = capacity(&kernel(&[&[1.0, 0.0], &[0.5, 0.5]]), &CapacityConfig::default()).unwrap();
        assert!((r.capacity - (1.25f64).ln()).abs() < 1e-8);
        assert!((r.input_dist.mass()[1] - 0.4).abs() < 1e-4);
    }

    #[test]
    fn slack_cost_matches_unconstrained() {
        let k = kernel(&[&[0.9, 0.1], &[0.1, 0.9]]);
        let cfg = CapacityConfig::default();
        let a = capacity(&k, &cfg).unwrap();
        let b = capacity_with_cost(&k, &[0.0, 1.0], 10.0, &cfg).unwrap();
        assert!((a.capacity - b.capacity).abs() < 1e-12);
        assert_eq!(b.mu, 0.0);
    }

    #[test]
    fn binding_cost_meets_budget() {
        let k = kernel(&[&[1.0, 0.0], &[0.0, 1.0]]);
        let r = capacity_with_cost(&k, &[0.0, 1.0], 0.2, &CapacityConfig::default()).unwrap();
        // Noiseless: rate is the input entropy at p(1) = 0.2.
        let h = -(0.2f64 * 0.2f64.ln() + 0.8 * 0.8f64.ln());
        assert!((r.capacity - h).abs() < 1e-9);
        assert!(r.mu > 0.0);
    }

    #[test]
    fn budget_at_min_cost_pins_input() {
        let k = kernel(&[&[1.0, 0.0], &[0.0, 1.0]]);
        let r = capacity_with_cost(&k, &[0.0, 1.0], 0.0, &CapacityConfig::default()).unwrap();
        assert_eq!(r.input_dist.mass(), &[1.0, 0.0]);
        assert!(r.capacity.abs() < 1e-15);
    }

    #[test]
    fn budget_below_min_cost_is_rejected() {
        let k = kernel(&[&[1.0, 0.0], &[0.0, 1.0]]);
        assert!(matches!(
            capacity_with_cost(&k, &[0.5, 1.0], 0.1, &CapacityConfig::default()),
            Err(Error::CostInfeasible { .. })
        ));
    }
}
