//! Python bindings. Tables go in and out as nested lists; errors surface
//! as `ValueError`.

use ::bistatic_ab as ab;
use ::bistatic_ab::{Alphabet, DiscreteDistribution, JointTable};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn err(e: ab::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn flatten3(t: Vec<Vec<Vec<f64>>>) -> (Vec<usize>, Vec<f64>) {
    let a = t.len();
    let b = t.first().map_or(0, Vec::len);
    let c = t.first().and_then(|r| r.first()).map_or(0, Vec::len);
    (vec![a, b, c], t.into_iter().flatten().flatten().collect())
}

fn flatten2(t: Vec<Vec<f64>>) -> (Vec<usize>, Vec<f64>) {
    let a = t.len();
    let b = t.first().map_or(0, Vec::len);
    (vec![a, b], t.into_iter().flatten().collect())
}

fn ragged(shape: &[usize], data: &[f64]) -> PyResult<()> {
    if shape.iter().product::<usize>() != data.len() {
        return Err(PyValueError::new_err("nested lists must be rectangular"));
    }
    Ok(())
}

fn rows(shape: &[usize], data: &[f64]) -> Vec<Vec<f64>> {
    let n = *shape.last().unwrap_or(&1);
    data.chunks(n.max(1)).map(<[f64]>::to_vec).collect()
}

#[pyclass(name = "GaussianSpec", from_py_object)]
#[derive(Clone)]
struct PyGaussianSpec {
    inner: ab::GaussianSpec,
}

#[pymethods]
impl PyGaussianSpec {
    #[new]
    #[pyo3(signature = (sigma_s_sq, sigma_1_sq, sigma_2_sq, power_budget, n_x=17, n_s=17, n_y=33, n_z=33, truncation_multiplier=4.0, x_span_multiplier=2.5))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        sigma_s_sq: f64,
        sigma_1_sq: f64,
        sigma_2_sq: f64,
        power_budget: f64,
        n_x: usize,
        n_s: usize,
        n_y: usize,
        n_z: usize,
        truncation_multiplier: f64,
        x_span_multiplier: f64,
    ) -> PyResult<Self> {
        let mut inner = ab::GaussianSpec::new(sigma_s_sq, sigma_1_sq, sigma_2_sq, power_budget)
            .with_grids(n_x, n_s, n_y, n_z);
        inner.truncation_multiplier = truncation_multiplier;
        inner.x_span_multiplier = x_span_multiplier;
        inner.validate().map_err(err)?;
        Ok(Self { inner })
    }

    #[getter]
    fn power_budget(&self) -> f64 {
        self.inner.power_budget
    }

    fn input_grid(&self) -> Vec<f64> {
        self.inner.input_grid()
    }

    fn state_grid(&self) -> Vec<f64> {
        self.inner.state_grid()
    }

    fn discretize(&self) -> PyResult<PyChannel> {
        let inner = ab::discretize_gaussian(&self.inner).map_err(err)?;
        Ok(PyChannel { inner })
    }

    fn __repr__(&self) -> String {
        let s = &self.inner;
        format!(
            "GaussianSpec(sigma_s_sq={}, sigma_1_sq={}, sigma_2_sq={}, power_budget={}, n_x={}, n_s={}, n_y={}, n_z={})",
            s.sigma_s_sq, s.sigma_1_sq, s.sigma_2_sq, s.power_budget, s.n_x, s.n_s, s.n_y, s.n_z
        )
    }
}

#[pyclass(name = "Channel", from_py_object)]
#[derive(Clone)]
struct PyChannel {
    inner: ab::ChannelModel,
}

fn prior(s_values: Vec<f64>, mass: Vec<f64>) -> PyResult<DiscreteDistribution> {
    let s = Alphabet::with_values(s_values).map_err(err)?;
    DiscreteDistribution::new(s, mass).map_err(err)
}

#[pymethods]
impl PyChannel {
    /// `kernel_y[x][s][y] = p(y|x,s)`, `kernel_z[x][s][z] = p(z|x,s)`.
    #[staticmethod]
    fn state_dependent(
        x_values: Vec<f64>,
        s_values: Vec<f64>,
        state_prior: Vec<f64>,
        kernel_y: Vec<Vec<Vec<f64>>>,
        kernel_z: Vec<Vec<Vec<f64>>>,
    ) -> PyResult<Self> {
        let x = Alphabet::with_values(x_values).map_err(err)?;
        let p = prior(s_values, state_prior)?;
        let s = p.alphabet().clone();
        let (sy, ky) = flatten3(kernel_y);
        let (sz, kz) = flatten3(kernel_z);
        ragged(&sy, &ky)?;
        ragged(&sz, &kz)?;
        let axes = |n: usize| -> PyResult<Vec<Alphabet>> {
            Ok(vec![x.clone(), s.clone(), Alphabet::new(n).map_err(err)?])
        };
        let ky = JointTable::conditional(axes(sy[2])?, ky, vec![0, 1]).map_err(err)?;
        let kz = JointTable::conditional(axes(sz[2])?, kz, vec![0, 1]).map_err(err)?;
        let inner = ab::ChannelModel::state_dependent(p, ky, kz).map_err(err)?;
        Ok(Self { inner })
    }

    /// `kernel_y[x][y] = p(y|x)`, `kernel_zs[x][z][s] = p(z,s|x)`.
    #[staticmethod]
    fn markov(
        x_values: Vec<f64>,
        s_values: Vec<f64>,
        state_prior: Vec<f64>,
        kernel_y: Vec<Vec<f64>>,
        kernel_zs: Vec<Vec<Vec<f64>>>,
    ) -> PyResult<Self> {
        let x = Alphabet::with_values(x_values).map_err(err)?;
        let p = prior(s_values, state_prior)?;
        let s = p.alphabet().clone();
        let (sy, ky) = flatten2(kernel_y);
        let (sz, kz) = flatten3(kernel_zs);
        ragged(&sy, &ky)?;
        ragged(&sz, &kz)?;
        let ky = JointTable::conditional(vec![x.clone(), Alphabet::new(sy[1]).map_err(err)?], ky, vec![0])
            .map_err(err)?;
        let kz = JointTable::conditional(vec![x, Alphabet::new(sz[1]).map_err(err)?, s], kz, vec![0])
            .map_err(err)?;
        let inner = ab::ChannelModel::markov(p, ky, kz).map_err(err)?;
        Ok(Self { inner })
    }

    fn to_markov(&self) -> PyResult<Self> {
        Ok(Self {
            inner: self.inner.to_markov().map_err(err)?,
        })
    }

    #[getter]
    fn is_markov(&self) -> bool {
        self.inner.is_markov()
    }

    /// `(|X|, |S|, |Y|, |Z|)`.
    #[getter]
    fn sizes(&self) -> (usize, usize, usize, usize) {
        let k = self.inner.kernels();
        (k.nx, k.ns, k.ny, k.nz)
    }

    #[getter]
    fn input_values(&self) -> Vec<f64> {
        self.inner.input_values().to_vec()
    }

    #[getter]
    fn state_values(&self) -> Vec<f64> {
        self.inner.state_values().to_vec()
    }

    #[getter]
    fn state_prior(&self) -> Vec<f64> {
        self.inner.state_prior().mass().to_vec()
    }

    /// `p(y|x)` as rows.
    fn kernel_y(&self) -> Vec<Vec<f64>> {
        let t = self.inner.kernel_y_marginal();
        rows(&t.shape(), t.mass())
    }

    fn __repr__(&self) -> String {
        let (nx, ns, ny, nz) = self.sizes();
        format!("Channel(|X|={nx}, |S|={ns}, |Y|={ny}, |Z|={nz}, markov={})", self.inner.is_markov())
    }
}

#[pyclass(name = "SolveResult", from_py_object)]
#[derive(Clone)]
struct PySolveResult {
    inner: ab::SolveResult,
}

#[pymethods]
impl PySolveResult {
    #[getter]
    fn rate_bits(&self) -> f64 {
        self.inner.rate_bits
    }
    #[getter]
    fn rate_nats(&self) -> f64 {
        self.inner.rate_nats
    }
    #[getter]
    fn achieved_distortion(&self) -> f64 {
        self.inner.achieved_distortion
    }
    #[getter]
    fn lambda_(&self) -> f64 {
        self.inner.lambda
    }
    #[getter]
    fn mu(&self) -> f64 {
        self.inner.mu
    }
    #[getter]
    fn iterations(&self) -> usize {
        self.inner.iterations
    }
    #[getter]
    fn converged(&self) -> bool {
        self.inner.converged
    }
    #[getter]
    fn seed(&self) -> u64 {
        self.inner.seed
    }
    #[getter]
    fn start_rates(&self) -> Vec<f64> {
        self.inner.start_rates.clone()
    }

    /// `p[u][x]`.
    #[getter]
    fn p_ux(&self) -> Vec<Vec<f64>> {
        rows(&self.inner.p_ux.shape(), self.inner.p_ux.mass())
    }

    /// `c[u][z]` for squared error, `f[u][z][s]` for log-loss.
    #[getter]
    fn estimator<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        match &self.inner.estimator {
            ab::Estimator::Mean(c) => {
                let v: Vec<Vec<f64>> = rows(&[c.u_size, c.z_size], &c.values);
                Ok(v.into_pyobject(py)?.into_any())
            }
            ab::Estimator::Soft(f) => {
                let shape = f.shape();
                let v: Vec<Vec<Vec<f64>>> = f
                    .mass()
                    .chunks(shape[1] * shape[2])
                    .map(|b| rows(&shape[1..], b))
                    .collect();
                Ok(v.into_pyobject(py)?.into_any())
            }
        }
    }

    /// One dict per iteration.
    #[getter]
    fn trace<'py>(&self, py: Python<'py>) -> PyResult<Vec<Bound<'py, PyDict>>> {
        self.inner
            .trace
            .iter()
            .map(|t| {
                let d = PyDict::new(py);
                d.set_item("surrogate", t.surrogate)?;
                d.set_item("surrogate_prior", t.surrogate_prior)?;
                d.set_item("distortion", t.distortion)?;
                d.set_item("lambda", t.lambda)?;
                d.set_item("mu", t.mu)?;
                d.set_item("upper_bound", t.upper_bound)?;
                d.set_item("restoring", t.restoring)?;
                Ok(d)
            })
            .collect()
    }

    fn max_chain_decrease(&self) -> f64 {
        self.inner.max_chain_decrease()
    }

    fn max_bound_excess(&self) -> f64 {
        self.inner.max_bound_excess()
    }

    fn __repr__(&self) -> String {
        format!(
            "SolveResult(rate_bits={:.6}, achieved_distortion={:.6}, lambda={:.4}, mu={:.4}, iterations={}, converged={})",
            self.inner.rate_bits,
            self.inner.achieved_distortion,
            self.inner.lambda,
            self.inner.mu,
            self.inner.iterations,
            self.inner.converged
        )
    }
}

fn solver_config(
    tol: f64,
    max_iters: usize,
    restarts: usize,
    jitter: f64,
    seed: u64,
    u_size: Option<usize>,
) -> PyResult<ab::SolverConfig> {
    let cfg = ab::SolverConfig {
        tol,
        max_iters,
        restarts,
        jitter,
        seed,
        u_size,
        ..ab::SolverConfig::default()
    };
    cfg.validate().map_err(err)?;
    Ok(cfg)
}

/// Largest rate with squared-error distortion at most `d`.
#[pyfunction]
#[pyo3(signature = (channel, d, power_budget=None, *, tol=1e-9, max_iters=2000, restarts=4, jitter=0.05, seed=0, u_size=None))]
#[allow(clippy::too_many_arguments)]
fn solve(
    py: Python<'_>,
    channel: &PyChannel,
    d: f64,
    power_budget: Option<f64>,
    tol: f64,
    max_iters: usize,
    restarts: usize,
    jitter: f64,
    seed: u64,
    u_size: Option<usize>,
) -> PyResult<PySolveResult> {
    let cfg = solver_config(tol, max_iters, restarts, jitter, seed, u_size)?;
    let ch = channel.inner.clone();
    let inner = py.detach(move || ab::solve(&ch, d, &cfg, power_budget)).map_err(err)?;
    Ok(PySolveResult { inner })
}

/// Largest rate with `H(S|U,Z)` at most `d`; the channel must be Markov.
#[pyfunction]
#[pyo3(signature = (channel, d, power_budget=None, *, tol=1e-9, max_iters=2000, restarts=4, jitter=0.05, seed=0, u_size=None))]
#[allow(clippy::too_many_arguments)]
fn solve_ll(
    py: Python<'_>,
    channel: &PyChannel,
    d: f64,
    power_budget: Option<f64>,
    tol: f64,
    max_iters: usize,
    restarts: usize,
    jitter: f64,
    seed: u64,
    u_size: Option<usize>,
) -> PyResult<PySolveResult> {
    let cfg = solver_config(tol, max_iters, restarts, jitter, seed, u_size)?;
    let ch = channel.inner.clone();
    let inner = py.detach(move || ab::solve_ll(&ch, d, &cfg, power_budget)).map_err(err)?;
    Ok(PySolveResult { inner })
}

/// Capacity of the row-stochastic `kernel[x][y]`, optionally with
/// `Σ p(x) cost[x] ≤ budget`. Returns `(capacity_nats, input_distribution)`.
#[pyfunction]
#[pyo3(signature = (kernel, cost=None, budget=None, *, tol=1e-9, max_iters=5000))]
fn capacity(
    kernel: Vec<Vec<f64>>,
    cost: Option<Vec<f64>>,
    budget: Option<f64>,
    tol: f64,
    max_iters: usize,
) -> PyResult<(f64, Vec<f64>)> {
    let (shape, data) = flatten2(kernel);
    ragged(&shape, &data)?;
    let axes = vec![
        Alphabet::new(shape[0]).map_err(err)?,
        Alphabet::new(shape[1]).map_err(err)?,
    ];
    let k = JointTable::conditional(axes, data, vec![0]).map_err(err)?;
    let cfg = ab::CapacityConfig {
        tol,
        max_iters,
        ..ab::CapacityConfig::default()
    };
    let r = match (cost, budget) {
        (None, None) => ab::capacity(&k, &cfg),
        (Some(c), Some(b)) => ab::capacity_with_cost(&k, &c, b, &cfg),
        _ => return Err(PyValueError::new_err("cost and budget go together")),
    }
    .map_err(err)?;
    Ok((r.capacity, r.input_dist.mass().to_vec()))
}

/// Rate (bits) and distortion of the estimator that knows the input.
#[pyfunction]
#[pyo3(signature = (channel, power_budget=None))]
fn monostatic_reference(channel: &PyChannel, power_budget: Option<f64>) -> PyResult<(f64, f64)> {
    let r = ab::monostatic_reference(&channel.inner, power_budget, &ab::CapacityConfig::default())
        .map_err(err)?;
    Ok((r.rate.capacity_bits(), r.distortion))
}

#[pymodule(name = "bistatic_ab")]
fn init_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGaussianSpec>()?;
    m.add_class::<PyChannel>()?;
    m.add_class::<PySolveResult>()?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(solve_ll, m)?)?;
    m.add_function(wrap_pyfunction!(capacity, m)?)?;
    m.add_function(wrap_pyfunction!(monostatic_reference, m)?)?;
    Ok(())
}
