//! Python bindings for `gdrate`.
//!
//! Build with `cargo build -p gdrate-py --release --features extension-module`
//! and copy `libgdrate_py.so` to `gdrate_py.so` on the Python path.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use gdrate::lab::{empirical_probe, Family};
use gdrate::Error;

fn to_py(e: Error) -> PyErr {
    match e {
        Error::InvalidInstance(_) | Error::IncompatibleFamily(_) | Error::Domain(_) => PyValueError::new_err(e.to_string()),
        other => PyRuntimeError::new_err(other.to_string()),
    }
}

fn solve_options(tol: f64) -> gdrate::SolveOptions {
    gdrate::SolveOptions { tol, ..Default::default() }
}

/// A horizon, function class and stepsize.
#[pyclass(frozen, get_all, skip_from_py_object, module = "gdrate_py")]
#[derive(Clone)]
struct ProblemInstance {
    iterations: usize,
    mu: f64,
    smoothness: f64,
    stepsize: f64,
}

#[pymethods]
impl ProblemInstance {
    /// `stepsize=None` picks the optimal stepsize.
    #[new]
    #[pyo3(signature = (iterations, mu, smoothness, stepsize=None, tol=1e-13))]
    fn new(iterations: usize, mu: f64, smoothness: f64, stepsize: Option<f64>, tol: f64) -> PyResult<Self> {
        let stepsize = match stepsize {
            Some(g) => g,
            None => {
                gdrate::ProblemInstance::new(iterations, mu, smoothness, 1.0 / smoothness).map_err(to_py)?;
                gdrate::optimal_stepsize(iterations, mu, smoothness, &solve_options(tol)).map_err(to_py)?
            }
        };
        let inst = gdrate::ProblemInstance::new(iterations, mu, smoothness, stepsize).map_err(to_py)?;
        Ok(Self::from(inst))
    }

    fn normalized_stepsize(&self) -> f64 {
        self.stepsize * self.smoothness
    }

    fn rate(&self) -> PyResult<RateBound> {
        gdrate::rate_bound(&self.inner()).map(RateBound::from).map_err(to_py)
    }

    fn __repr__(&self) -> String {
        format!(
            "ProblemInstance(iterations={}, mu={}, smoothness={}, stepsize={})",
            self.iterations, self.mu, self.smoothness, self.stepsize
        )
    }
}

impl ProblemInstance {
    fn inner(&self) -> gdrate::ProblemInstance {
        gdrate::ProblemInstance {
            iterations: self.iterations,
            mu: self.mu,
            smoothness: self.smoothness,
            stepsize: self.stepsize,
        }
    }
}

impl From<gdrate::ProblemInstance> for ProblemInstance {
    fn from(i: gdrate::ProblemInstance) -> Self {
        ProblemInstance { iterations: i.iterations, mu: i.mu, smoothness: i.smoothness, stepsize: i.stepsize }
    }
}

/// Worst-case rate. `branch_mu` and `max_value` are `None` when `mu < 0`.
#[pyclass(frozen, get_all, module = "gdrate_py")]
struct RateBound {
    branch_mu: Option<f64>,
    branch_rho: f64,
    max_value: Option<f64>,
    min_form: f64,
    regime: &'static str,
}

impl From<gdrate::RateBound> for RateBound {
    fn from(r: gdrate::RateBound) -> Self {
        RateBound {
            branch_mu: r.branch_mu,
            branch_rho: r.branch_rho,
            max_value: r.max_value,
            min_form: r.min_form,
            regime: r.regime.as_str(),
        }
    }
}

#[pymethods]
impl RateBound {
    fn __repr__(&self) -> String {
        format!(
            "RateBound(branch_mu={:?}, branch_rho={}, max_value={:?}, min_form={}, regime={:?})",
            self.branch_mu, self.branch_rho, self.max_value, self.min_form, self.regime
        )
    }
}

/// Outcome of certification; `to_json()` gives the full report.
#[pyclass(frozen, module = "gdrate_py")]
struct VerificationReport(gdrate::VerificationReport);

#[pymethods]
impl VerificationReport {
    #[getter]
    fn certified(&self) -> bool {
        self.0.certified
    }

    #[getter]
    fn failing_stage(&self) -> Option<String> {
        self.0.failing_stage.clone()
    }

    #[getter]
    fn bound_value(&self) -> f64 {
        self.0.bound_value
    }

    #[getter]
    fn bound_form(&self) -> &'static str {
        self.0.bound_form.as_str()
    }

    #[getter]
    fn tau(&self) -> f64 {
        self.0.tau
    }

    #[getter]
    fn min_lambda(&self) -> f64 {
        self.0.min_lambda
    }

    #[getter]
    fn min_eigenvalue(&self) -> f64 {
        self.0.min_eigenvalue
    }

    #[getter]
    fn oracle_max_error(&self) -> f64 {
        self.0.oracle_max_error
    }

    fn to_json(&self) -> String {
        self.0.to_json()
    }

    fn __repr__(&self) -> String {
        format!("VerificationReport(certified={}, bound_value={})", self.0.certified, self.0.bound_value)
    }
}

#[pyfunction]
#[pyo3(signature = (iterations, mu, smoothness, tol=1e-13))]
fn optimal_stepsize(iterations: usize, mu: f64, smoothness: f64, tol: f64) -> PyResult<f64> {
    gdrate::ProblemInstance::new(iterations, mu, smoothness, 1.0 / smoothness).map_err(to_py)?;
    gdrate::optimal_stepsize(iterations, mu, smoothness, &solve_options(tol)).map_err(to_py)
}

#[pyfunction]
fn rate_bound(inst: &ProblemInstance) -> PyResult<RateBound> {
    inst.rate()
}

/// `(mu', L', rho', eta', regime)` of the class that makes the stepsize optimal.
#[pyfunction]
#[pyo3(signature = (inst, tol=1e-13))]
fn surrogate_class<'py>(py: Python<'py>, inst: &ProblemInstance, tol: f64) -> PyResult<Bound<'py, PyDict>> {
    let s = gdrate::surrogate_class(&inst.inner(), &solve_options(tol)).map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("mu_eff", s.mu_eff)?;
    d.set_item("l_eff", s.l_eff)?;
    d.set_item("rho_eff", s.rho_eff)?;
    d.set_item("eta_eff", s.eta_eff)?;
    let regime = match s.regime {
        gdrate::SurrogateRegime::BelowOptimal => "below_optimal",
        gdrate::SurrogateRegime::AboveOptimal => "above_optimal",
        gdrate::SurrogateRegime::AtOptimal => "at_optimal",
    };
    d.set_item("regime", regime)?;
    Ok(d)
}

/// `tau` and the multipliers keyed by `(i, j)`.
#[pyfunction]
fn build_certificate<'py>(
    py: Python<'py>,
    iterations: usize,
    rho: f64,
    eta: f64,
    smoothness: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let c = gdrate::build_certificate(iterations, &rho, &eta, &smoothness).map_err(to_py)?;
    let lambda = PyDict::new(py);
    for (k, v) in &c.lambda {
        lambda.set_item(*k, *v)?;
    }
    let d = PyDict::new(py);
    d.set_item("tau", c.tau)?;
    d.set_item("lambda", lambda)?;
    Ok(d)
}

/// Symmetric PEP matrix of the certificate at `(rho, eta)`, as nested lists.
#[pyfunction]
fn pep_matrix(iterations: usize, rho: f64, eta: f64, smoothness: f64) -> PyResult<Vec<Vec<f64>>> {
    let c = gdrate::build_certificate(iterations, &rho, &eta, &smoothness).map_err(to_py)?;
    let set = gdrate::PepMatrixSet::for_certificate(&c).map_err(to_py)?;
    Ok((0..set.s_sym.rows()).map(|i| set.s_sym.row(i)).collect())
}

#[pyfunction]
#[pyo3(signature = (inst, seed=0, oracle_trials=100, psd_tol=1e-8))]
fn certify(py: Python<'_>, inst: &ProblemInstance, seed: u64, oracle_trials: usize, psd_tol: f64) -> PyResult<VerificationReport> {
    let cfg = gdrate::CertifyConfig { seed, oracle_trials, psd_tol, ..Default::default() };
    let i = inst.inner();
    py.detach(|| gdrate::certify(&i, &cfg)).map(VerificationReport).map_err(to_py)
}

/// Largest observed ratio over random members of `family` and its quotient
/// against the bound.
#[pyfunction]
#[pyo3(signature = (inst, family="quadratic", trials=1000, seed=0))]
fn simulate<'py>(
    py: Python<'py>,
    inst: &ProblemInstance,
    family: &str,
    trials: usize,
    seed: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let family: Family = family.parse().map_err(to_py)?;
    let i = inst.inner();
    let p = py.detach(|| empirical_probe(&i, family, trials, seed)).map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("family", p.family.as_str())?;
    d.set_item("trials", p.trials)?;
    d.set_item("max_ratio", p.max_ratio)?;
    d.set_item("bound_ratio", p.bound_ratio)?;
    d.set_item("quotient", p.quotient)?;
    d.set_item("anchor_l_quotient", p.anchor_l_quotient)?;
    d.set_item("anchor_mu_quotient", p.anchor_mu_quotient)?;
    Ok(d)
}

#[pymodule]
fn gdrate_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<ProblemInstance>()?;
    m.add_class::<RateBound>()?;
    m.add_class::<VerificationReport>()?;
    m.add_function(wrap_pyfunction!(optimal_stepsize, m)?)?;
    m.add_function(wrap_pyfunction!(rate_bound, m)?)?;
    m.add_function(wrap_pyfunction!(surrogate_class, m)?)?;
    m.add_function(wrap_pyfunction!(build_certificate, m)?)?;
    m.add_function(wrap_pyfunction!(pep_matrix, m)?)?;
    m.add_function(wrap_pyfunction!(certify, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    Ok(())
}
