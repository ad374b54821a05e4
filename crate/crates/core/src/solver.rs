//! Alternating loop shared by the squared-error and log-loss solvers.
//!
//! One iteration: posterior update (folded into the exponent base `d`),
//! multiplier solve and tilt for `p`, then the estimator update. The loop is
//! generic over [`Model`], which supplies the problem-specific pieces.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::channel::ChannelModel;
use crate::error::{Error, Result};
use crate::multiplier::{solve_pair_near, solve_scalar_near, RootConfig, TiltProblem, TiltSign};
use crate::prob::{Alphabet, JointTable, TableMode};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    /// Stop once successive surrogate values differ by less than this (nats).
    pub tol: f64,
    /// Iteration cap per start.
    pub max_iters: usize,
    /// Number of jittered starts; 0 runs a single start from the uniform
    /// table.
    pub restarts: usize,
    /// Relative magnitude of the multiplicative start jitter.
    pub jitter: f64,
    pub seed: u64,
    /// Auxiliary alphabet size; defaults to the input alphabet size.
    pub u_size: Option<usize>,
    pub root: RootConfig,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            max_iters: 2000,
            restarts: 4,
            jitter: 0.05,
            seed: 0,
            u_size: None,
            root: RootConfig::default(),
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(Error::Config(format!("tol must be positive, got {}", self.tol)));
        }
        if self.max_iters == 0 {
            return Err(Error::Config("max_iters must be at least 1".into()));
        }
        if !(0.0..1.0).contains(&self.jitter) {
            return Err(Error::Config(format!(
                "jitter must lie in [0, 1), got {}",
                self.jitter
            )));
        }
        if self.u_size == Some(0) {
            return Err(Error::Config("u_size must be positive".into()));
        }
        if !(self.root.root_tol > 0.0) || !(self.root.lambda_max > 0.0) {
            return Err(Error::Config(
                "root_tol and lambda_max must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Point estimate `c(u,z)` of the state, in units of `S`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorTable {
    pub u_size: usize,
    pub z_size: usize,
    /// Row-major over `(u, z)`.
    pub values: Vec<f64>,
}

impl EstimatorTable {
    pub fn get(&self, u: usize, z: usize) -> f64 {
        self.values[u * self.z_size + z]
    }
}

/// Final estimator of a solve.
#[derive(Debug, Clone, PartialEq)]
pub enum Estimator {
    /// Conditional-mean estimate (squared error).
    Mean(EstimatorTable),
    /// Soft estimate `f(s|u,z)` with axes `[U, Z, S]` (log-loss).
    Soft(JointTable),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    /// Surrogate at the new iterate, `F̃(p_k, q_k)`.
    pub surrogate: f64,
    /// Surrogate before the tilt, `F̃(p_{k−1}, q_k)`; equals `F(p_{k−1})`.
    pub surrogate_prior: f64,
    /// `E[w]` at the new iterate with the weights used in the update
    /// (expected log-loss in log-loss mode).
    pub distortion: f64,
    pub lambda: f64,
    pub mu: f64,
    /// `I(X;Y|S) + I(X;Z)` (log-loss: `I(X;Y) + I(X;Z)`) at the new iterate.
    pub upper_bound: f64,
    /// The requested distortion was out of reach for the current weights and
    /// a relaxed target was used instead.
    pub restoring: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    /// Axes `[U, X]`.
    pub p_ux: JointTable,
    pub estimator: Estimator,
    pub rate_nats: f64,
    pub rate_bits: f64,
    /// Squared error with the final estimator, or `H(S|U,Z)` in log-loss
    /// mode.
    pub achieved_distortion: f64,
    pub lambda: f64,
    pub mu: f64,
    pub iterations: usize,
    pub converged: bool,
    pub trace: Vec<TraceEntry>,
    /// Rate reached by every start, in start order.
    pub start_rates: Vec<f64>,
    pub seed: u64,
}

impl SolveResult {
    /// Largest decrease along the chain
    /// `F̃(p_{k−1},q_{k−1}) ≤ F̃(p_{k−1},q_k) ≤ F̃(p_k,q_k)`, over iterations
    /// whose previous iterate already met the distortion target (the chain
    /// presumes a feasible previous iterate). Non-positive when the chain
    /// holds.
    pub fn max_chain_decrease(&self) -> f64 {
        max_chain_decrease(&self.trace)
    }

    /// Largest excess of the surrogate over the upper bound.
    pub fn max_bound_excess(&self) -> f64 {
        self.trace
            .iter()
            .map(|t| t.surrogate - t.upper_bound)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

pub fn max_chain_decrease(trace: &[TraceEntry]) -> f64 {
    let mut worst = f64::NEG_INFINITY;
    for pair in trace.windows(2) {
        let (prev, cur) = (&pair[0], &pair[1]);
        if prev.restoring || cur.restoring {
            continue;
        }
        worst = worst
            .max(prev.surrogate - cur.surrogate_prior)
            .max(cur.surrogate_prior - cur.surrogate);
    }
    worst
}

/// Problem-specific pieces of the alternating loop. Tables are row-major
/// over `(u, x)`.
pub(crate) trait Model: Sync {
    type Est: Clone;

    fn nu(&self) -> usize;
    fn nx(&self) -> usize;
    fn sign(&self) -> TiltSign;
    /// `d[q]` with `q` the posteriors of `p`.
    fn exponent(&self, p: &[f64], d: &mut [f64]);
    fn estimate(&self, p: &[f64]) -> Self::Est;
    fn weights(&self, est: &Self::Est, w: &mut [f64]);
    fn upper_bound(&self, p: &[f64]) -> f64;
    /// True objective, evaluated independently of the loop.
    fn rate(&self, p: &[f64]) -> Result<f64>;
    fn achieved(&self, p: &[f64], est: &Self::Est) -> f64;
    fn export(&self, est: &Self::Est) -> Estimator;
    fn channel(&self) -> &ChannelModel;
}

/// `Σ p (d − ln p)`, skipping empty cells.
pub(crate) fn surrogate(p: &[f64], d: &[f64]) -> f64 {
    p.iter()
        .zip(d)
        .filter(|(pv, _)| **pv > 0.0)
        .map(|(pv, dv)| pv * (dv - pv.ln()))
        .sum()
}

/// Marginal of `p(u,x)` over `u`.
pub(crate) fn input_marginal(p: &[f64], nu: usize, nx: usize) -> Vec<f64> {
    let mut px = vec![0.0; nx];
    for u in 0..nu {
        for (acc, v) in px.iter_mut().zip(&p[u * nx..(u + 1) * nx]) {
            *acc += v;
        }
    }
    px
}

/// Validates a user-supplied `p(u,x)` table and returns its flat mass.
pub(crate) fn check_p_ux(p_ux: &JointTable, nx: usize) -> Result<(usize, Vec<f64>)> {
    let shape = p_ux.shape();
    if !p_ux.is_joint() || shape.len() != 2 || shape[1] != nx {
        return Err(Error::Shape(format!(
            "p(u,x) must be a joint table of shape [U, {nx}], got {shape:?}"
        )));
    }
    Ok((shape[0], p_ux.mass().to_vec()))
}

pub(crate) fn p_ux_table(channel: &ChannelModel, nu: usize, mass: Vec<f64>) -> JointTable {
    JointTable::from_parts(
        vec![
            Alphabet::new(nu).expect("nu > 0"),
            channel.input_alphabet().clone(),
        ],
        mass,
        TableMode::Joint,
    )
}

struct Start<E> {
    p: Vec<f64>,
    est: E,
    lambda: f64,
    mu: f64,
    iterations: usize,
    converged: bool,
    trace: Vec<TraceEntry>,
}

/// Consecutive restoring iterations without distortion progress before the
/// target is declared out of reach.
const RESTORE_PATIENCE: usize = 50;

/// Restoration gives up on the relaxed target once the gap between the
/// current and the reachable distortion falls below this (relative).
const RESTORE_MIN_SPREAD: f64 = 1e-9;

fn run_start<M: Model>(
    model: &M,
    target: f64,
    cost: Option<(&[f64], f64)>,
    config: &SolverConfig,
    p0: Vec<f64>,
) -> Result<Start<M::Est>> {
    let (nu, nx) = (model.nu(), model.nx());
    let sign = model.sign();
    let mut p = p0;
    let mut est = model.estimate(&p);
    let mut d = vec![0.0; nu * nx];
    let mut w = vec![0.0; nu * nx];
    let mut trace: Vec<TraceEntry> = Vec::new();
    let mut hint: Option<(f64, f64)> = None;
    let mut converged = false;
    let (mut lambda, mut mu) = (0.0, 0.0);
    let mut best_restoring = f64::INFINITY;
    let mut stalled = 0;
    let mut jumped = false;

    for _ in 0..config.max_iters {
        model.exponent(&p, &mut d);
        let prior = surrogate(&p, &d);
        model.weights(&est, &mut w);
        let problem = TiltProblem::new(nu, nx, d.clone(), w.clone(), target, sign)?;
        let solved = match solve_multipliers(&problem, cost, &config.root, hint) {
            Ok(r) => Some((r, false)),
            Err(Error::DistortionInfeasible { .. } | Error::PairInfeasible { .. }) => {
                // The target is below what the current weights allow. Aim
                // halfway between the current distortion and the reachable
                // minimum; the estimator update then lowers the weights.
                let floor = problem.min_achievable(cost);
                let v = |i: usize| match sign {
                    TiltSign::Minus => w[i],
                    TiltSign::Plus => -w[i],
                };
                let current: f64 = (0..p.len()).filter(|&i| p[i] > 0.0).map(|i| p[i] * v(i)).sum();
                let spread = if current > floor {
                    current - floor
                } else {
                    (0..p.len())
                        .filter(|&i| d[i].is_finite())
                        .map(v)
                        .fold(f64::NEG_INFINITY, f64::max)
                        - floor
                };
                let relaxed = floor + 0.5 * spread;
                if relaxed > target && relaxed.is_finite() && spread > RESTORE_MIN_SPREAD * floor.abs().max(1.0) {
                    let relaxed_problem = TiltProblem::new(nu, nx, d.clone(), w.clone(), relaxed, sign)?;
                    solve_multipliers(&relaxed_problem, cost, &config.root, None)
                        .ok()
                        .map(|r| (r, true))
                } else {
                    None
                }
            }
            Err(e) => return Err(e),
        };
        let Some((root, restoring)) = solved else {
            // Alternating descent on the distortion has reached a corner
            // above the target.
            p = escape_corner(model, cost, &p, target, best_restoring, &mut jumped)?;
            est = model.estimate(&p);
            hint = None;
            stalled = 0;
            continue;
        };
        lambda = root.0;
        mu = root.1;
        hint = Some((lambda, mu));
        p = root.2;
        est = model.estimate(&p);
        let value = surrogate(&p, &d);
        let distortion: f64 = (0..p.len())
            .filter(|&i| p[i] > 0.0)
            .map(|i| {
                let e = p[i] * w[i];
                match sign {
                    TiltSign::Minus => e,
                    TiltSign::Plus => -e,
                }
            })
            .sum();
        let entry = TraceEntry {
            surrogate: value,
            surrogate_prior: prior,
            distortion,
            lambda,
            mu,
            upper_bound: model.upper_bound(&p),
            restoring,
        };
        if restoring {
            if distortion < best_restoring - 1e-12 {
                best_restoring = distortion;
                stalled = 0;
            } else {
                stalled += 1;
                if stalled >= RESTORE_PATIENCE {
                    trace.push(entry);
                    p = escape_corner(model, cost, &p, target, best_restoring, &mut jumped)?;
                    est = model.estimate(&p);
                    hint = None;
                    stalled = 0;
                    continue;
                }
            }
        }
        let settled = trace
            .last()
            .is_some_and(|prev| !prev.restoring && !restoring && (value - prev.surrogate).abs() < config.tol);
        trace.push(entry);
        if settled {
            converged = true;
            break;
        }
    }
    if trace.last().is_some_and(|t| t.restoring) {
        let achieved = trace.last().map_or(f64::NAN, |t| t.distortion);
        return Err(Error::DistortionInfeasible {
            target,
            residual: target - achieved,
        });
    }
    Ok(Start {
        p,
        est,
        lambda,
        mu,
        iterations: trace.len(),
        converged,
        trace,
    })
}

/// Replaces `p` by a blend with the distortion minimizer, once per start.
/// Fails when the minimizer itself misses the target or was already used.
fn escape_corner<M: Model>(
    model: &M,
    cost: Option<(&[f64], f64)>,
    p: &[f64],
    target: f64,
    best_restoring: f64,
    jumped: &mut bool,
) -> Result<Vec<f64>> {
    let found = distortion_minimizer(model, cost);
    match found {
        Some((a, floor)) if !*jumped && floor < target => {
            *jumped = true;
            Ok(blend_toward(model, p, &a, floor, target))
        }
        _ => Err(Error::DistortionInfeasible {
            target,
            residual: target - found.map_or(best_restoring, |(_, f)| f.min(best_restoring)),
        }),
    }
}

/// Input law with the smallest exact distortion, with its distortion. The
/// Bayes risk is concave in `p(x)`, so the minimum over the budget set sits
/// at a single input or at a two-point mix on the budget line.
fn distortion_minimizer<M: Model>(model: &M, cost: Option<(&[f64], f64)>) -> Option<(Vec<f64>, f64)> {
    let (nu, nx) = (model.nu(), model.nx());
    let mut candidates: Vec<Vec<f64>> = Vec::new();
    for i in 0..nx {
        match cost {
            Some((c, b)) if c[i] > b => {}
            _ => {
                let mut a = vec![0.0; nx];
                a[i] = 1.0;
                candidates.push(a);
            }
        }
    }
    if let Some((c, b)) = cost {
        for i in (0..nx).filter(|&i| c[i] < b) {
            for j in (0..nx).filter(|&j| c[j] > b) {
                let t = (b - c[i]) / (c[j] - c[i]);
                let mut a = vec![0.0; nx];
                a[i] = 1.0 - t;
                a[j] = t;
                candidates.push(a);
            }
        }
    }
    let spread = |a: &[f64]| -> Vec<f64> { (0..nu * nx).map(|k| a[k % nx] / nu as f64).collect() };
    candidates
        .into_iter()
        .map(|a| {
            let p = spread(&a);
            let v = model.achieved(&p, &model.estimate(&p));
            (p, v)
        })
        .filter(|(_, v)| v.is_finite())
        .min_by(|x, y| x.1.total_cmp(&y.1))
}

/// Mixes the minimizer `a` (distortion `floor`) with `p` so that the mix,
/// scored with the estimator of `a`, lands halfway between `floor` and
/// `target`. Keeps every cell of `p` that `a`'s estimator can score.
fn blend_toward<M: Model>(model: &M, p: &[f64], a: &[f64], floor: f64, target: f64) -> Vec<f64> {
    let mut w = vec![0.0; p.len()];
    model.weights(&model.estimate(a), &mut w);
    let mut b: Vec<f64> = p.iter().zip(&w).map(|(v, wv)| if wv.is_finite() { *v } else { 0.0 }).collect();
    let mass: f64 = b.iter().sum();
    if !(mass > 0.0) {
        return a.to_vec();
    }
    b.iter_mut().for_each(|v| *v /= mass);
    let loss: f64 = b
        .iter()
        .zip(&w)
        .filter(|(v, _)| **v > 0.0)
        .map(|(v, wv)| match model.sign() {
            TiltSign::Minus => v * wv,
            TiltSign::Plus => -v * wv,
        })
        .sum();
    let eps = if loss > floor {
        (0.5 * (target - floor) / (loss - floor)).min(0.5)
    } else {
        0.5
    };
    a.iter().zip(&b).map(|(x, y)| (1.0 - eps) * x + eps * y).collect()
}

/// Returns `(λ, μ, p)`.
fn solve_multipliers(
    problem: &TiltProblem,
    cost: Option<(&[f64], f64)>,
    root: &RootConfig,
    hint: Option<(f64, f64)>,
) -> Result<(f64, f64, Vec<f64>)> {
    match cost {
        None => {
            let r = solve_scalar_near(problem, root, hint.map(|h| h.0))?;
            Ok((r.lambda, 0.0, r.dist.mass().to_vec()))
        }
        Some((c, budget)) => {
            let r = solve_pair_near(problem, c, budget, root, hint)?;
            Ok((r.lambda, r.mu, r.dist.mass().to_vec()))
        }
    }
}

/// Start tables: the uniform table when `restarts == 0`, otherwise
/// `restarts` jittered copies drawn from one seeded stream.
pub(crate) fn initial_tables(nu: usize, nx: usize, config: &SolverConfig) -> Vec<Vec<f64>> {
    let n = nu * nx;
    if config.restarts == 0 {
        return vec![vec![1.0 / n as f64; n]];
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    (0..config.restarts)
        .map(|_| {
            let mut p: Vec<f64> = (0..n)
                .map(|_| 1.0 + config.jitter * (2.0 * rng.random::<f64>() - 1.0))
                .collect();
            let total: f64 = p.iter().sum();
            p.iter_mut().for_each(|v| *v /= total);
            p
        })
        .collect()
}

/// Runs every start and keeps the one with the largest rate.
pub(crate) fn solve_model<M: Model>(
    model: &M,
    target: f64,
    power_budget: Option<f64>,
    config: &SolverConfig,
    init: Option<&[f64]>,
) -> Result<SolveResult> {
    config.validate()?;
    if !(target > 0.0) || !target.is_finite() {
        return Err(Error::Argument(format!(
            "distortion target must be positive and finite, got {target}"
        )));
    }
    let (nu, nx) = (model.nu(), model.nx());
    let cost: Option<Vec<f64>> = match power_budget {
        None => None,
        Some(b) => {
            if !(b > 0.0) || !b.is_finite() {
                return Err(Error::Argument(format!(
                    "power budget must be positive and finite, got {b}"
                )));
            }
            let xs = model.channel().input_values();
            Some(xs.iter().map(|x| x * x).collect())
        }
    };
    let cost_ref = cost.as_deref().zip(power_budget);

    let mut starts = Vec::new();
    if let Some(p) = init {
        if p.len() != nu * nx {
            return Err(Error::Shape(format!(
                "initial table has {} entries, expected {}",
                p.len(),
                nu * nx
            )));
        }
        starts.push(p.to_vec());
    }
    starts.extend(initial_tables(nu, nx, config));

    let mut best: Option<(f64, Start<M::Est>)> = None;
    let mut rates = Vec::with_capacity(starts.len());
    let mut first_err = None;
    for p0 in starts {
        match run_start(model, target, cost_ref, config, p0) {
            Ok(start) => {
                let rate = model.rate(&start.p)?;
                rates.push(rate);
                if best.as_ref().is_none_or(|(r, _)| rate > *r) {
                    best = Some((rate, start));
                }
            }
            Err(e) => {
                rates.push(f64::NAN);
                first_err.get_or_insert(e);
            }
        }
    }
    let Some((rate, start)) = best else {
        return Err(first_err.expect("at least one start"));
    };
    let achieved = model.achieved(&start.p, &start.est);
    Ok(SolveResult {
        p_ux: p_ux_table(model.channel(), nu, start.p),
        estimator: model.export(&start.est),
        rate_nats: rate,
        rate_bits: rate / std::f64::consts::LN_2,
        achieved_distortion: achieved,
        lambda: start.lambda,
        mu: start.mu,
        iterations: start.iterations,
        converged: start.converged,
        trace: start.trace,
        start_rates: rates,
        seed: config.seed,
    })
}
