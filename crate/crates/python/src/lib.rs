//! Python bindings: parameter types, analytics, Monte Carlo estimates and
//! sample paths.

use gflbdp_core::analytics as an;
use gflbdp_core::simulator as sim;
use gflbdp_core::special;
use num_complex::Complex64;
use pyo3::exceptions::{PyArithmeticError, PyNotImplementedError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;

fn to_py(e: gflbdp_core::Error) -> PyErr {
    use gflbdp_core::Error as E;
    let msg = e.to_string();
    match e {
        E::Domain(_) => PyValueError::new_err(msg),
        E::Divergence { .. } | E::Numeric { .. } | E::InversionUnstable { .. } => {
            PyArithmeticError::new_err(msg)
        }
        E::UnsupportedRegime(_) => PyNotImplementedError::new_err(msg),
        E::Horizon { .. } | E::PathCap(_) | E::Consistency(_) => PyRuntimeError::new_err(msg),
    }
}

trait IntoPy<T> {
    fn py(self) -> PyResult<T>;
}

impl<T> IntoPy<T> for gflbdp_core::Result<T> {
    fn py(self) -> PyResult<T> {
        self.map_err(to_py)
    }
}

/// Rates and time-change parameters of the process.
#[pyclass(name = "ProcessParams", frozen)]
struct PyProcessParams {
    inner: an::ProcessParams,
}

#[pymethods]
impl PyProcessParams {
    /// `constrained=False` skips the ceiling constraint (analytics only).
    #[new]
    #[pyo3(signature = (lambda_, mu, alpha=1.0, beta=1.0, gamma=0.0, rho=1.0, constrained=true))]
    fn new(
        lambda_: f64,
        mu: f64,
        alpha: f64,
        beta: f64,
        gamma: f64,
        rho: f64,
        constrained: bool,
    ) -> PyResult<Self> {
        let inner = if constrained {
            an::ProcessParams::new(lambda_, mu, alpha, beta, gamma, rho)
        } else {
            an::ProcessParams::new_unconstrained(lambda_, mu, alpha, beta, gamma, rho)
        }
        .py()?;
        Ok(Self { inner })
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
    fn alpha(&self) -> f64 {
        self.inner.alpha
    }
    #[getter]
    fn beta(&self) -> f64 {
        self.inner.beta
    }
    #[getter]
    fn gamma(&self) -> f64 {
        self.inner.gamma
    }
    #[getter]
    fn rho(&self) -> f64 {
        self.inner.rho
    }

    /// Whether the subordinator composition exists for these parameters.
    fn is_simulable(&self) -> bool {
        self.inner.is_simulable()
    }

    fn __repr__(&self) -> String {
        let p = &self.inner;
        format!(
            "ProcessParams(lambda_={}, mu={}, alpha={}, beta={}, gamma={}, rho={})",
            p.lambda, p.mu, p.alpha, p.beta, p.gamma, p.rho
        )
    }
}

/// Bounded two-type model on {0, ..., M}.
#[pyclass(name = "GeneticParams", frozen)]
struct PyGeneticParams {
    inner: an::GeneticParams,
}

#[pymethods]
impl PyGeneticParams {
    #[new]
    #[pyo3(signature = (m, n0, lambda_, mu, rho=1.0))]
    fn new(m: u32, n0: u32, lambda_: f64, mu: f64, rho: f64) -> PyResult<Self> {
        Ok(Self {
            inner: an::GeneticParams::new(m, n0, lambda_, mu, rho).py()?,
        })
    }

    #[getter]
    fn m(&self) -> u32 {
        self.inner.m
    }
    #[getter]
    fn n0(&self) -> u32 {
        self.inner.n0
    }
    #[getter]
    fn equilibrium(&self) -> f64 {
        self.inner.equilibrium()
    }

    fn __repr__(&self) -> String {
        let g = &self.inner;
        format!(
            "GeneticParams(m={}, n0={}, lambda_={}, mu={}, rho={})",
            g.m, g.n0, g.lambda, g.mu, g.rho
        )
    }
}

/// Monte Carlo estimate with its standard error.
#[pyclass(name = "MCEstimate", frozen, get_all)]
struct PyMCEstimate {
    value: f64,
    stderr: f64,
    n_paths: usize,
    seed: u64,
    failures: usize,
    /// (imaginary part, its standard error) for kind "cf".
    imag: Option<(f64, f64)>,
}

#[pymethods]
impl PyMCEstimate {
    fn __repr__(&self) -> String {
        format!(
            "MCEstimate(value={}, stderr={}, n_paths={}, seed={})",
            self.value, self.stderr, self.n_paths, self.seed
        )
    }
}

impl From<sim::MCEstimate> for PyMCEstimate {
    fn from(e: sim::MCEstimate) -> Self {
        Self {
            value: e.value,
            stderr: e.stderr,
            n_paths: e.n_paths,
            seed: e.seed,
            failures: e.failures,
            imag: e.imag,
        }
    }
}

/// E^gamma_{alpha,beta}(x).
#[pyfunction]
#[pyo3(signature = (alpha, beta, gamma, x, tol=1e-14))]
fn mittag_leffler(alpha: f64, beta: f64, gamma: f64, x: f64, tol: f64) -> PyResult<f64> {
    special::mittag_leffler_3p(&special::MlArgs::with_tol(alpha, beta, gamma, x, tol).py()?).py()
}

#[pyfunction]
#[pyo3(signature = (params, t, tol=1e-8))]
fn mean(params: &PyProcessParams, t: f64, tol: f64) -> PyResult<f64> {
    an::mean_gflbdp(&params.inner, t, tol).py()
}

#[pyfunction]
#[pyo3(signature = (params, t, tol=1e-8))]
fn variance(params: &PyProcessParams, t: f64, tol: f64) -> PyResult<f64> {
    an::variance_gflbdp(&params.inner, t, tol).py()
}

#[pyfunction]
#[pyo3(signature = (params, t, tol=1e-8))]
fn extinction_prob(params: &PyProcessParams, t: f64, tol: f64) -> PyResult<f64> {
    Ok(
        an::extinction_with(&params.inner, t, &an::EvalOptions::with_tol(tol))
            .py()?
            .value,
    )
}

#[pyfunction]
#[pyo3(signature = (params, n, t, tol=1e-8))]
fn state_prob(params: &PyProcessParams, n: u32, t: f64, tol: f64) -> PyResult<f64> {
    Ok(
        an::state_with(&params.inner, n, t, &an::EvalOptions::with_tol(tol))
            .py()?
            .value,
    )
}

/// E exp(iuN(t) + ivY(t)).
#[pyfunction]
#[pyo3(signature = (params, u, v, t, tol=1e-10))]
fn joint_cf(params: &PyProcessParams, u: f64, v: f64, t: f64, tol: f64) -> PyResult<Complex64> {
    an::joint_cf_gflbdp(u, v, &params.inner, t, special::DEFAULT_TERM_CAP, tol).py()
}

#[pyfunction]
#[pyo3(signature = (params, alpha_p, rho_p, beta_p, gamma_p, t, tol=1e-10))]
fn mean_prabhakar_integral(
    params: &PyProcessParams,
    alpha_p: f64,
    rho_p: f64,
    beta_p: f64,
    gamma_p: f64,
    t: f64,
    tol: f64,
) -> PyResult<f64> {
    let ip = an::PrabhakarIntegralParams::new(alpha_p, rho_p, beta_p, gamma_p).py()?;
    an::mean_prabhakar_integral(&params.inner, &ip, t, tol).py()
}

#[pyfunction]
fn genetic_mean(gp: &PyGeneticParams, t: f64) -> PyResult<f64> {
    an::genetic_mean(&gp.inner, t).py()
}

#[pyfunction]
fn genetic_avg_type_h(gp: &PyGeneticParams, t: f64) -> PyResult<f64> {
    an::genetic_avg_type_h(&gp.inner, t).py()
}

fn kind_from(
    kind: &str,
    n: Option<u32>,
    u: Option<f64>,
    v: Option<f64>,
    z: Option<f64>,
) -> PyResult<sim::McKind> {
    let need = |x: Option<f64>, name: &str| {
        x.ok_or_else(|| PyValueError::new_err(format!("kind {kind:?} needs {name}")))
    };
    Ok(match kind {
        "mean" => sim::McKind::Mean,
        "variance" => sim::McKind::Variance,
        "extinction" => sim::McKind::Extinction,
        "state_pmf" => sim::McKind::StatePmf(
            n.ok_or_else(|| PyValueError::new_err("kind \"state_pmf\" needs n"))?,
        ),
        "cf" => sim::McKind::JointCf {
            u: need(u, "u")?,
            v: need(v, "v")?,
        },
        "path_integral_mean" => sim::McKind::PathIntegralMean,
        "clock_laplace" => sim::McKind::ClockLaplace(need(z, "z")?),
        "genetic_mean" => sim::McKind::GeneticMean,
        other => {
            return Err(PyValueError::new_err(format!(
                "unknown estimate kind {other:?}"
            )))
        }
    })
}

/// Monte Carlo estimate of `kind` at time `t`; `model` is a ProcessParams
/// or, for kind "genetic_mean", a GeneticParams. The result depends only on
/// (seed, n_paths).
#[pyfunction]
#[pyo3(signature = (kind, model, t, n_paths=20_000, seed=42, n=None, u=None, v=None, z=None))]
#[allow(clippy::too_many_arguments)]
fn mc_estimate(
    py: Python<'_>,
    kind: &str,
    model: &Bound<'_, PyAny>,
    t: f64,
    n_paths: usize,
    seed: u64,
    n: Option<u32>,
    u: Option<f64>,
    v: Option<f64>,
    z: Option<f64>,
) -> PyResult<PyMCEstimate> {
    let mk = kind_from(kind, n, u, v, z)?;
    let model = if let Ok(p) = model.cast::<PyProcessParams>() {
        sim::Model::Process(p.get().inner)
    } else if let Ok(g) = model.cast::<PyGeneticParams>() {
        sim::Model::Genetic(g.get().inner)
    } else {
        return Err(PyValueError::new_err(
            "model must be ProcessParams or GeneticParams",
        ));
    };
    let est = py
        .detach(|| sim::mc_estimate(mk, &model, t, n_paths, seed))
        .py()?;
    Ok(est.into())
}

/// One trajectory of N(Q(s)) on [0, horizon] as (jump_times, states);
/// `index` selects the random stream under `seed`.
#[pyfunction]
#[pyo3(signature = (params, horizon, seed=42, index=0))]
fn sample_path(
    params: &PyProcessParams,
    horizon: f64,
    seed: u64,
    index: usize,
) -> PyResult<(Vec<f64>, Vec<u64>)> {
    let mut rng = sim::path_rng(seed, index);
    let path = sim::sample_gflbdp_path(
        &params.inner,
        horizon,
        &sim::GridConfig::default(),
        &mut rng,
    )
    .py()?;
    Ok((path.jump_times, path.states))
}

#[pymodule]
pub fn gflbdp(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyProcessParams>()?;
    m.add_class::<PyGeneticParams>()?;
    m.add_class::<PyMCEstimate>()?;
    m.add_function(wrap_pyfunction!(mittag_leffler, m)?)?;
    m.add_function(wrap_pyfunction!(mean, m)?)?;
    m.add_function(wrap_pyfunction!(variance, m)?)?;
    m.add_function(wrap_pyfunction!(extinction_prob, m)?)?;
    m.add_function(wrap_pyfunction!(state_prob, m)?)?;
    m.add_function(wrap_pyfunction!(joint_cf, m)?)?;
    m.add_function(wrap_pyfunction!(mean_prabhakar_integral, m)?)?;
    m.add_function(wrap_pyfunction!(genetic_mean, m)?)?;
    m.add_function(wrap_pyfunction!(genetic_avg_type_h, m)?)?;
    m.add_function(wrap_pyfunction!(mc_estimate, m)?)?;
    m.add_function(wrap_pyfunction!(sample_path, m)?)?;
    Ok(())
}
