//! Multipliers of the tilted update `p ∝ exp(d ± λ w)`.
//!
//! Both solvers reduce the constrained maximization over `p(u,x)` to an
//! exponential tilt of a base table `d` by a constraint weight `w`. The
//! constraint residual is non-decreasing in the multiplier (its derivative is
//! the tilted variance of `w`), so every multiplier here is found by
//! bracketing and bisection.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prob::{Alphabet, JointTable, TableMode};

/// Scalar roots are driven this far inside `root_tol`, so that multiplier
/// jitter between outer iterations stays far below the solvers' objective
/// tolerance.
const INNER_TOL_FRACTION: f64 = 1e-3;

/// Direction of the tilt.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TiltSign {
    /// `exp(d − λw)` with residual `target − E[w]`; squared-error weights and
    /// input costs.
    Minus,
    /// `exp(d + λw)` with residual `target + E[w]`; log-loss weights (w ≤ 0).
    Plus,
}

impl TiltSign {
    fn factor(self) -> f64 {
        match self {
            TiltSign::Minus => -1.0,
            TiltSign::Plus => 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RootConfig {
    pub root_tol: f64,
    pub lambda_max: f64,
}

impl Default for RootConfig {
    fn default() -> Self {
        Self {
            root_tol: 1e-10,
            lambda_max: 1e6,
        }
    }
}

/// Base table `d(u,x)`, weight `w(u,x)` and target of one tilted update.
#[derive(Debug, Clone, PartialEq)]
pub struct TiltProblem {
    rows: usize,
    cols: usize,
    d: Vec<f64>,
    w: Vec<f64>,
    target: f64,
    sign: TiltSign,
}

impl TiltProblem {
    /// `d` may hold `-inf` (cells that must carry no mass) but at least one
    /// entry must be finite. In [`TiltSign::Plus`] mode `w` must be ≤ 0.
    pub fn new(
        rows: usize,
        cols: usize,
        d: Vec<f64>,
        w: Vec<f64>,
        target: f64,
        sign: TiltSign,
    ) -> Result<Self> {
        if rows == 0 || cols == 0 || d.len() != rows * cols || w.len() != rows * cols {
            return Err(Error::Shape(format!(
                "tilt tables must have {rows}x{cols} entries (d: {}, w: {})",
                d.len(),
                w.len()
            )));
        }
        if d.iter().any(|v| v.is_nan() || *v == f64::INFINITY) {
            return Err(Error::Argument("d table must not hold NaN or +inf".into()));
        }
        if !d.iter().any(|v| v.is_finite()) {
            return Err(Error::Argument("d table has no finite entry".into()));
        }
        if !target.is_finite() {
            return Err(Error::Argument(format!("target must be finite, got {target}")));
        }
        match sign {
            TiltSign::Minus => {
                if w.iter().any(|v| !v.is_finite()) {
                    return Err(Error::Argument("w table must be finite".into()));
                }
            }
            TiltSign::Plus => {
                if w.iter().any(|v| v.is_nan() || *v > 0.0) {
                    return Err(Error::Argument(
                        "log-loss weights must be nonpositive".into(),
                    ));
                }
            }
        }
        Ok(Self {
            rows,
            cols,
            d,
            w,
            target,
            sign,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn d_table(&self) -> &[f64] {
        &self.d
    }

    pub fn w_table(&self) -> &[f64] {
        &self.w
    }

    pub fn target(&self) -> f64 {
        self.target
    }

    pub fn sign(&self) -> TiltSign {
        self.sign
    }

    /// `p(u,x) ∝ exp(d + sign·λ·w)`, normalized with the largest exponent
    /// subtracted first.
    pub fn tilt_distribution(&self, lambda: f64) -> JointTable {
        let mut out = vec![0.0; self.d.len()];
        self.tilt_into(lambda, &mut out);
        as_table(self.rows, self.cols, out)
    }

    /// `target − E[w]` for [`TiltSign::Minus`], `target + E[w]` for
    /// [`TiltSign::Plus`], under the tilted distribution at `lambda`.
    pub fn constraint_residual(&self, lambda: f64) -> f64 {
        let mut out = vec![0.0; self.d.len()];
        self.tilt_into(lambda, &mut out)
    }

    /// Writes the tilted distribution into `out` and returns the residual.
    fn tilt_into(&self, lambda: f64, out: &mut [f64]) -> f64 {
        let s = self.sign.factor();
        let exponent = |i: usize| {
            if lambda == 0.0 {
                self.d[i]
            } else {
                self.d[i] + s * lambda * self.w[i]
            }
        };
        let mut max = f64::NEG_INFINITY;
        for i in 0..self.d.len() {
            let e = exponent(i);
            out[i] = e;
            if e > max {
                max = e;
            }
        }
        let mut total = 0.0;
        for v in out.iter_mut() {
            *v = if *v == f64::NEG_INFINITY {
                0.0
            } else {
                (*v - max).exp()
            };
            total += *v;
        }
        let mut mean_w = 0.0;
        for (i, v) in out.iter_mut().enumerate() {
            *v /= total;
            if *v > 0.0 {
                mean_w += *v * self.w[i];
            }
        }
        self.target + s * mean_w
    }

    /// Same problem with `d − μ·cost(x)` as base, `cost` indexed by column.
    fn with_cost(&self, cost: &[f64], mu: f64) -> TiltProblem {
        let mut shifted = self.clone();
        if mu != 0.0 {
            for (i, v) in shifted.d.iter_mut().enumerate() {
                *v -= mu * cost[i % self.cols];
            }
        }
        shifted
    }

    /// Smallest value of the constrained quantity (`E[w]` for
    /// [`TiltSign::Minus`], `−E[w]` for [`TiltSign::Plus`]) over
    /// distributions supported on the cells where `d` is finite, optionally
    /// subject to `E[cost] ≤ budget`. The target is attainable exactly when it
    /// is at least this value (strictly above it for a finite multiplier).
    pub fn min_achievable(&self, cost: Option<(&[f64], f64)>) -> f64 {
        let s = self.sign.factor();
        let cells: Vec<(f64, f64)> = (0..self.d.len())
            .filter(|&i| self.d[i].is_finite())
            .map(|i| {
                let c = cost.map_or(0.0, |(c, _)| c[i % self.cols]);
                (-s * self.w[i], c)
            })
            .collect();
        let budget = cost.map_or(f64::INFINITY, |(_, b)| b);
        let mut best = cells
            .iter()
            .filter(|(_, c)| *c <= budget)
            .map(|(v, _)| *v)
            .fold(f64::INFINITY, f64::min);
        if cost.is_some() {
            // Optimal mixtures under one linear constraint use at most two
            // cells, one on each side of the budget.
            for &(vl, cl) in cells.iter().filter(|(_, c)| *c <= budget) {
                for &(vh, ch) in cells.iter().filter(|(_, c)| *c > budget) {
                    let t = (budget - cl) / (ch - cl);
                    best = best.min(vl + t * (vh - vl));
                }
            }
        }
        best
    }
}

/// Multiplier and tilted distribution satisfying one constraint.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarRoot {
    pub lambda: f64,
    pub residual: f64,
    pub dist: JointTable,
}

/// Multipliers and tilted distribution satisfying the distortion and the
/// power constraint together.
#[derive(Debug, Clone, PartialEq)]
pub struct PairRoot {
    pub lambda: f64,
    pub mu: f64,
    pub distortion_residual: f64,
    pub power_residual: f64,
    pub dist: JointTable,
}

/// Solves `residual(λ) = 0` for `λ ≥ 0`, or returns `λ = 0` when the
/// constraint is slack there.
///
/// Brackets by doubling from 1 up to `lambda_max`, then bisects until the
/// residual is within `root_tol / 1000` (or the bracket collapses). The
/// returned multiplier lies on the feasible side (`residual ≥ 0`).
pub fn solve_scalar(problem: &TiltProblem, config: &RootConfig) -> Result<ScalarRoot> {
    solve_scalar_near(problem, config, None)
}

/// [`solve_scalar`] with a starting guess used to seed the bracket.
pub fn solve_scalar_near(
    problem: &TiltProblem,
    config: &RootConfig,
    hint: Option<f64>,
) -> Result<ScalarRoot> {
    let mut buf = vec![0.0; problem.d.len()];
    let r0 = problem.tilt_into(0.0, &mut buf);
    if r0 >= 0.0 {
        return Ok(ScalarRoot {
            lambda: 0.0,
            residual: r0,
            dist: as_table(problem.rows, problem.cols, buf),
        });
    }
    let search = find_root(
        |lambda| Some(problem.tilt_into(lambda, &mut buf)),
        hint,
        config.lambda_max,
        config.root_tol * INNER_TOL_FRACTION,
    );
    match search {
        RootSearch::Found { x, fx } => {
            let mut dist = vec![0.0; problem.d.len()];
            problem.tilt_into(x, &mut dist);
            Ok(ScalarRoot {
                lambda: x,
                residual: fx,
                dist: as_table(problem.rows, problem.cols, dist),
            })
        }
        RootSearch::Negative { fx } | RootSearch::Unevaluable { fx } => {
            Err(Error::DistortionInfeasible {
                target: problem.target,
                residual: fx,
            })
        }
    }
}

/// Finds `(λ, μ)` so the distribution `∝ exp(d ± λw − μ·cost(x))` meets the
/// distortion target and `E[cost] ≤ budget`, each multiplier zero when its
/// constraint is slack.
///
/// Outer bisection on `μ` with an inner [`solve_scalar`] on `λ`: the power of
/// the inner solution is non-increasing in `μ`.
pub fn solve_pair(
    problem: &TiltProblem,
    cost: &[f64],
    budget: f64,
    config: &RootConfig,
) -> Result<PairRoot> {
    solve_pair_near(problem, cost, budget, config, None)
}

/// [`solve_pair`] seeded with previous `(λ, μ)` values.
pub fn solve_pair_near(
    problem: &TiltProblem,
    cost: &[f64],
    budget: f64,
    config: &RootConfig,
    hint: Option<(f64, f64)>,
) -> Result<PairRoot> {
    if cost.len() != problem.cols {
        return Err(Error::Shape(format!(
            "cost has {} entries, the problem has {} columns",
            cost.len(),
            problem.cols
        )));
    }
    if cost.iter().any(|c| !c.is_finite()) {
        return Err(Error::Argument("cost must be finite".into()));
    }
    let power = |dist: &JointTable| -> f64 {
        dist.mass()
            .iter()
            .enumerate()
            .map(|(i, p)| p * cost[i % problem.cols])
            .sum()
    };
    let lambda_hint = hint.map(|h| h.0);
    let at_zero = solve_scalar_near(problem, config, lambda_hint)?;
    let r0 = budget - power(&at_zero.dist);
    if r0 >= 0.0 {
        return Ok(PairRoot {
            lambda: at_zero.lambda,
            mu: 0.0,
            distortion_residual: at_zero.residual,
            power_residual: r0,
            dist: at_zero.dist,
        });
    }

    let mut last_lambda = lambda_hint.or(Some(at_zero.lambda));
    let mut best: Option<(f64, ScalarRoot, f64)> = None;
    let inner = |mu: f64, last_lambda: &mut Option<f64>| -> Option<(ScalarRoot, f64)> {
        let shifted = problem.with_cost(cost, mu);
        let root = solve_scalar_near(&shifted, config, *last_lambda).ok()?;
        *last_lambda = Some(root.lambda).filter(|l| *l > 0.0).or(*last_lambda);
        let r = budget - power(&root.dist);
        Some((root, r))
    };
    let tol = config.root_tol * budget.abs().max(1.0);
    let search = find_root(
        |mu| {
            let (root, r) = inner(mu, &mut last_lambda)?;
            if r >= 0.0 && best.as_ref().is_none_or(|(m, _, _)| mu < *m) {
                best = Some((mu, root, r));
            }
            Some(r)
        },
        hint.map(|h| h.1),
        config.lambda_max,
        tol,
    );
    match (search, best) {
        (RootSearch::Found { x, .. }, Some((mu, root, r))) if mu == x => Ok(PairRoot {
            lambda: root.lambda,
            mu,
            distortion_residual: root.residual,
            power_residual: r,
            dist: root.dist,
        }),
        (RootSearch::Found { x, .. }, _) => {
            let mut ll = Some(at_zero.lambda);
            let (root, r) = inner(x, &mut ll).ok_or(Error::PairInfeasible {
                distortion_residual: f64::NAN,
                power_residual: r0,
            })?;
            Ok(PairRoot {
                lambda: root.lambda,
                mu: x,
                distortion_residual: root.residual,
                power_residual: r,
                dist: root.dist,
            })
        }
        (RootSearch::Negative { fx }, _) | (RootSearch::Unevaluable { fx }, _) => {
            Err(Error::PairInfeasible {
                distortion_residual: at_zero.residual,
                power_residual: fx,
            })
        }
    }
}

enum RootSearch {
    Found { x: f64, fx: f64 },
    /// Still negative at the cap.
    Negative { fx: f64 },
    /// The function could not be evaluated at the bracket's upper end.
    Unevaluable { fx: f64 },
}

/// Root of a non-decreasing `f` on `(0, x_max]` given `f(0) < 0`. `f`
/// returning `None` means "cannot evaluate here", treated as lying above
/// the root. Bisection stops once `0 ≤ f(hi) ≤ tol` or the bracket has
/// collapsed to adjacent doubles.
///
/// With a hint the bracket starts as a narrow interval around it and grows
/// geometrically on whichever side misses; without one it doubles from 1.
fn find_root(
    mut f: impl FnMut(f64) -> Option<f64>,
    hint: Option<f64>,
    x_max: f64,
    tol: f64,
) -> RootSearch {
    const HINT_SPREAD: f64 = 1e-6;
    const GROWTH: f64 = 8.0;
    let mut lo = 0.0;
    let mut lo_f = f64::NEG_INFINITY;
    let mut hi: Option<(f64, Option<f64>)>;

    if let Some(h) = hint.filter(|h| h.is_finite() && *h > 0.0 && *h < x_max) {
        let mut step = h * HINT_SPREAD;
        // Upper side first: the root usually moves little between calls.
        loop {
            let x = (h + step).min(x_max);
            match f(x) {
                Some(v) if v < 0.0 => {
                    lo = x;
                    lo_f = v;
                    if x >= x_max {
                        return RootSearch::Negative { fx: v };
                    }
                    step *= GROWTH;
                }
                v => {
                    hi = Some((x, v));
                    break;
                }
            }
        }
        if lo == 0.0 {
            let mut step = h * HINT_SPREAD;
            loop {
                let x = h - step;
                if x <= 0.0 {
                    break;
                }
                match f(x) {
                    Some(v) if v < 0.0 => {
                        lo = x;
                        lo_f = v;
                        break;
                    }
                    v => {
                        hi = Some((x, v));
                        step *= GROWTH;
                    }
                }
            }
        }
    } else {
        let mut x = 1.0f64.min(x_max);
        loop {
            match f(x) {
                Some(v) if v >= 0.0 => {
                    hi = Some((x, Some(v)));
                    break;
                }
                Some(v) => {
                    lo = x;
                    lo_f = v;
                    if x >= x_max {
                        return RootSearch::Negative { fx: v };
                    }
                    x = (x * 2.0).min(x_max);
                }
                None => {
                    hi = Some((x, None));
                    break;
                }
            }
        }
    }
    let (mut hx, mut hf) = hi.expect("bracket set");
    if let Some(v) = hf {
        if v <= tol {
            return RootSearch::Found { x: hx, fx: v };
        }
    }
    loop {
        let mid = lo + 0.5 * (hx - lo);
        if mid <= lo || mid >= hx {
            break;
        }
        match f(mid) {
            Some(v) if v >= 0.0 => {
                hx = mid;
                hf = Some(v);
                if v <= tol {
                    break;
                }
            }
            Some(v) => {
                lo = mid;
                lo_f = v;
            }
            None => {
                hx = mid;
                hf = None;
            }
        }
    }
    match hf {
        Some(v) => RootSearch::Found { x: hx, fx: v },
        None => RootSearch::Unevaluable { fx: lo_f },
    }
}

fn as_table(rows: usize, cols: usize, mass: Vec<f64>) -> JointTable {
    JointTable::from_parts(
        vec![
            Alphabet::new(rows).expect("rows > 0"),
            Alphabet::new(cols).expect("cols > 0"),
        ],
        mass,
        TableMode::Joint,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn problem(d: Vec<f64>, w: Vec<f64>, target: f64, sign: TiltSign) -> TiltProblem {
        TiltProblem::new(2, 2, d, w, target, sign).unwrap()
    }

    #[test]
    fn zero_multiplier_constant_base_is_uniform() {
        let p = problem(vec![0.3; 4], vec![0.1, 0.5, 0.9, 1.2], 1.0, TiltSign::Minus);
        let t = p.tilt_distribution(0.0);
        assert!(t.mass().iter().all(|m| (*m - 0.25).abs() < 1e-16));
    }

    #[test]
    fn tilt_matches_direct_evaluation() {
        let d = vec![-0.3, -1.2, -0.7, -2.0];
        let w = vec![0.2, 1.0, 0.5, 0.1];
        let p = problem(d.clone(), w.clone(), 0.5, TiltSign::Minus);
        let lambda = 1.7;
        let raw: Vec<f64> = (0..4).map(|i| (d[i] - lambda * w[i]).exp()).collect();
        let z: f64 = raw.iter().sum();
        let t = p.tilt_distribution(lambda);
        for i in 0..4 {
            assert!((t.mass()[i] - raw[i] / z).abs() < 1e-13);
        }
    }

    #[test]
    fn tilt_survives_huge_multipliers() {
        let p = problem(vec![0.0; 4], vec![0.2, 1.0, 0.5, 0.1], 0.5, TiltSign::Minus);
        let t = p.tilt_distribution(1e6);
        assert!(t.mass().iter().all(|m| m.is_finite()));
        assert_eq!(t.mass()[3], 1.0);
    }

    #[test]
    fn constant_weight_residual_ignores_lambda() {
        let p = problem(vec![0.0, -1.0, -0.5, -0.2], vec![0.4; 4], 0.9, TiltSign::Minus);
        for l in [0.0, 0.5, 3.0, 100.0] {
            assert!((p.constraint_residual(l) - 0.5).abs() < 1e-15);
        }
    }

    #[test]
    fn slack_target_returns_zero_multiplier() {
        let p = problem(vec![0.0; 4], vec![0.2, 1.0, 0.2, 1.0], 0.7, TiltSign::Minus);
        let r = solve_scalar(&p, &RootConfig::default()).unwrap();
        assert_eq!(r.lambda, 0.0);
    }

    #[test]
    fn two_atom_equation() {
        // d ≡ 0, w ∈ {0.2, 1.0} on two cells each: E[w] = 0.6 exactly when both
        // atoms carry equal mass... which happens at λ = 0. Shift the target
        // to 0.4 instead: 0.2 a + 1.0 (1 − a) = 0.4 ⇒ a = 0.75, and
        // a/(1−a) = exp(0.8 λ) ⇒ λ = ln 3 / 0.8.
        let p = problem(vec![0.0; 4], vec![0.2, 1.0, 0.2, 1.0], 0.4, TiltSign::Minus);
        let r = solve_scalar(&p, &RootConfig::default()).unwrap();
        let expected = 3f64.ln() / 0.8;
        assert!((r.lambda - expected).abs() < 1e-12, "{} vs {expected}", r.lambda);
        assert!(r.residual >= 0.0 && r.residual <= 1e-10);
    }

    #[test]
    fn target_below_min_weight_is_infeasible() {
        let p = problem(vec![0.0; 4], vec![0.2, 1.0, 0.3, 0.5], 0.1, TiltSign::Minus);
        assert!(matches!(
            solve_scalar(&p, &RootConfig::default()),
            Err(Error::DistortionInfeasible { .. })
        ));
    }

    #[test]
    fn plus_sign_requires_nonpositive_weights() {
        assert!(TiltProblem::new(1, 2, vec![0.0; 2], vec![-0.1, 0.2], 1.0, TiltSign::Plus).is_err());
        let p = TiltProblem::new(1, 3, vec![0.0; 3], vec![-0.1, -1.0, -2.0], 0.5, TiltSign::Plus)
            .unwrap();
        let r = solve_scalar(&p, &RootConfig::default()).unwrap();
        assert!(r.lambda > 0.0);
        assert!(r.residual.abs() <= 1e-10);
    }

    #[test]
    fn neg_infinite_base_gets_no_mass() {
        let p = problem(
            vec![0.0, f64::NEG_INFINITY, -1.0, 0.5],
            vec![0.2, 0.0, 0.3, 0.9],
            0.25,
            TiltSign::Minus,
        );
        let r = solve_scalar(&p, &RootConfig::default()).unwrap();
        assert_eq!(r.dist.mass()[1], 0.0);
        // The −inf cell is excluded from the minimum as well.
        assert!((p.min_achievable(None) - 0.2).abs() < 1e-15);
    }

    #[test]
    fn min_achievable_with_budget() {
        // cells: (w, cost) = (0.1, 4), (0.5, 0), (0.1, 4), (0.5, 0); budget 1
        // ⇒ mix a quarter of the cheap-high... 0.5 + 0.25·(0.1−0.5) = 0.4.
        let p = problem(vec![0.0; 4], vec![0.1, 0.5, 0.1, 0.5], 0.45, TiltSign::Minus);
        let v = p.min_achievable(Some((&[4.0, 0.0], 1.0)));
        assert!((v - 0.4).abs() < 1e-15);
    }

    #[test]
    fn pair_with_slack_power_matches_scalar() {
        let p = problem(vec![-0.1, -0.4, -0.3, 0.0], vec![0.2, 1.0, 0.6, 0.9], 0.5, TiltSign::Minus);
        let cfg = RootConfig::default();
        let s = solve_scalar(&p, &cfg).unwrap();
        let pr = solve_pair(&p, &[1.0, 4.0], 1e6, &cfg).unwrap();
        assert_eq!(pr.mu, 0.0);
        assert_eq!(pr.lambda, s.lambda);
        assert_eq!(pr.dist, s.dist);
    }

    #[test]
    fn pair_both_slack_is_plain_softmax() {
        let d = vec![-0.1, -0.4, -0.3, 0.0];
        let p = problem(d.clone(), vec![0.2, 1.0, 0.6, 0.9], 100.0, TiltSign::Minus);
        let pr = solve_pair(&p, &[1.0, 4.0], 1e6, &RootConfig::default()).unwrap();
        assert_eq!((pr.lambda, pr.mu), (0.0, 0.0));
        let z: f64 = d.iter().map(|v| v.exp()).sum();
        for i in 0..4 {
            assert!((pr.dist.mass()[i] - d[i].exp() / z).abs() < 1e-15);
        }
    }
}
