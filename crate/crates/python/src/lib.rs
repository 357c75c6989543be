//! Python bindings for the subadditivity laboratory.
//!
//! Reports come back as plain dicts; models are small wrapper classes.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use serde::Serialize;

use subadd_core::decomposition::Decomposition;
use subadd_core::divergence::{chi2_approx_report, f_divergence, ClosePair, GeneratorKind};
use subadd_core::gaussian::{GaussianDistribution, PerturbedGaussian1D};
use subadd_core::io::{parse_model, Model};
use subadd_core::lab::{self, Example, Measure, Mode};
use subadd_core::model::{self as core_model, FiniteDistribution, VariableSpace};
use subadd_core::transport::{metric_from_space, wasserstein2_gaussian, wasserstein_finite};

fn err(e: subadd_core::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

trait OrPy<T> {
    fn py_err(self) -> PyResult<T>;
}

impl<T> OrPy<T> for subadd_core::Result<T> {
    fn py_err(self) -> PyResult<T> {
        self.map_err(err)
    }
}

/// Turn any serializable report into native Python objects.
fn to_py<T: Serialize>(py: Python<'_>, value: &T) -> PyResult<Py<PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyValueError::new_err(e.to_string()))?;
    Ok(py.import("json")?.call_method1("loads", (text,))?.unbind())
}

fn space(
    cardinalities: Vec<usize>,
    embedding: Option<Vec<Vec<Vec<f64>>>>,
) -> PyResult<VariableSpace> {
    match embedding {
        Some(e) => VariableSpace::with_embedding(cardinalities, e),
        None => VariableSpace::new(cardinalities),
    }
    .py_err()
}

fn parse<T: std::str::FromStr<Err = subadd_core::Error>>(s: &str) -> PyResult<T> {
    s.parse().py_err()
}

/// Explicit joint table over a product of finite variables.
#[pyclass(name = "Distribution", module = "subadd", frozen)]
pub struct PyDistribution(FiniteDistribution);

#[pymethods]
impl PyDistribution {
    /// `cardinalities` defaults to a single variable with `len(probs)` states.
    #[new]
    #[pyo3(signature = (probs, cardinalities=None, embedding=None))]
    fn new(
        probs: Vec<f64>,
        cardinalities: Option<Vec<usize>>,
        embedding: Option<Vec<Vec<Vec<f64>>>>,
    ) -> PyResult<Self> {
        let cards = cardinalities.unwrap_or_else(|| vec![probs.len()]);
        Ok(Self(
            FiniteDistribution::new(space(cards, embedding)?, probs).py_err()?,
        ))
    }

    #[getter]
    fn probs(&self) -> Vec<f64> {
        self.0.probs().to_vec()
    }

    #[getter]
    fn cardinalities(&self) -> Vec<usize> {
        self.0.space().cardinalities().to_vec()
    }

    fn marginal(&self, subset: Vec<usize>) -> PyResult<Self> {
        Ok(Self(self.0.marginal(&subset).py_err()?))
    }

    fn __len__(&self) -> usize {
        self.0.probs().len()
    }

    fn __repr__(&self) -> String {
        format!(
            "Distribution(cardinalities={:?})",
            self.0.space().cardinalities()
        )
    }
}

#[pyclass(name = "BayesNet", module = "subadd", frozen)]
pub struct PyBayesNet(core_model::BayesNet);

#[pymethods]
impl PyBayesNet {
    #[new]
    #[pyo3(signature = (cardinalities, parents, cpts, embedding=None))]
    fn new(
        cardinalities: Vec<usize>,
        parents: Vec<Vec<usize>>,
        cpts: Vec<Vec<Vec<f64>>>,
        embedding: Option<Vec<Vec<Vec<f64>>>>,
    ) -> PyResult<Self> {
        Ok(Self(
            core_model::BayesNet::new(space(cardinalities, embedding)?, parents, cpts).py_err()?,
        ))
    }

    /// Autoregressive chain: node `t ≥ p` depends on the `p` previous nodes.
    #[staticmethod]
    fn autoregressive(n: usize, coeffs: Vec<f64>, initials: Vec<f64>) -> PyResult<Self> {
        let spec = core_model::ArSpec::new(n, coeffs, initials).py_err()?;
        Ok(Self(core_model::autoregressive_bayesnet(&spec).py_err()?))
    }

    #[getter]
    fn parents(&self) -> Vec<Vec<usize>> {
        self.0.parents().to_vec()
    }

    fn expand(&self) -> PyResult<PyDistribution> {
        Ok(PyDistribution(self.0.expand().py_err()?))
    }

    /// Local neighborhoods: `parents`, `truncated`, `cliques` or `bfs`.
    #[pyo3(signature = (mode="parents", contract=Vec::new()))]
    fn decompose(&self, mode: &str, contract: Vec<usize>) -> PyResult<Vec<Vec<usize>>> {
        let mut dec: Decomposition = parse::<Mode>(mode)?.decompose(&self.0).py_err()?;
        for s in contract {
            dec = subadd_core::decomposition::contract(&dec, s).py_err()?;
        }
        Ok(dec.neighborhoods().to_vec())
    }

    fn to_json(&self) -> String {
        Model::BayesNet(self.0.clone()).to_json()
    }

    fn __repr__(&self) -> String {
        format!(
            "BayesNet(nodes={}, parents={:?})",
            self.0.len(),
            self.0.parents()
        )
    }
}

#[pyclass(name = "Mrf", module = "subadd", frozen)]
pub struct PyMrf(core_model::Mrf);

#[pymethods]
impl PyMrf {
    /// The graph is the union of the cliques.
    #[new]
    #[pyo3(signature = (cardinalities, cliques, potentials, embedding=None))]
    fn new(
        cardinalities: Vec<usize>,
        cliques: Vec<Vec<usize>>,
        potentials: Vec<Vec<f64>>,
        embedding: Option<Vec<Vec<Vec<f64>>>>,
    ) -> PyResult<Self> {
        Ok(Self(
            core_model::Mrf::from_cliques(space(cardinalities, embedding)?, cliques, potentials)
                .py_err()?,
        ))
    }

    #[getter]
    fn cliques(&self) -> Vec<Vec<usize>> {
        self.0.cliques().to_vec()
    }

    /// `(joint, partition function)`.
    fn expand(&self) -> PyResult<(PyDistribution, f64)> {
        let e = self.0.expand().py_err()?;
        Ok((PyDistribution(e.dist), e.partition))
    }

    fn to_json(&self) -> String {
        Model::Mrf(self.0.clone()).to_json()
    }
}

#[pyclass(name = "Gaussian", module = "subadd", frozen)]
pub struct PyGaussian(GaussianDistribution);

#[pymethods]
impl PyGaussian {
    #[new]
    fn new(mean: Vec<f64>, cov: Vec<Vec<f64>>) -> PyResult<Self> {
        Ok(Self(GaussianDistribution::from_rows(&mean, &cov).py_err()?))
    }

    #[getter]
    fn dim(&self) -> usize {
        self.0.dim()
    }

    #[getter]
    fn mean(&self) -> Vec<f64> {
        self.0.mean().iter().copied().collect()
    }

    #[getter]
    fn cov(&self) -> Vec<Vec<f64>> {
        let c = self.0.cov();
        (0..c.nrows())
            .map(|i| c.row(i).iter().copied().collect())
            .collect()
    }
}

/// Parse a JSON model file into the matching class.
#[pyfunction]
#[pyo3(signature = (text, enum_limit=None))]
fn load_model(py: Python<'_>, text: &str, enum_limit: Option<usize>) -> PyResult<Py<PyAny>> {
    Ok(match parse_model(text, enum_limit).py_err()? {
        Model::BayesNet(b) => Py::new(py, PyBayesNet(b))?.into_any(),
        Model::Mrf(m) => Py::new(py, PyMrf(m))?.into_any(),
        Model::Gaussian(g) => Py::new(py, PyGaussian(g))?.into_any(),
        Model::Table(t) => Py::new(py, PyDistribution(t))?.into_any(),
    })
}

/// `D_f(P‖Q)`; may be `inf`.
#[pyfunction]
fn divergence(kind: &str, p: &PyDistribution, q: &PyDistribution) -> PyResult<f64> {
    Ok(f_divergence(parse(kind)?, &p.0, &q.0).py_err()?.value())
}

/// `W_p(P, Q)` under the Euclidean metric of the embedding.
#[pyfunction]
#[pyo3(signature = (p, q, order=1.0))]
fn wasserstein(p: &PyDistribution, q: &PyDistribution, order: f64) -> PyResult<f64> {
    let metric = metric_from_space(p.0.space()).py_err()?;
    Ok(wasserstein_finite(order, &p.0, &q.0, &metric).py_err()?.0)
}

/// Optimal coupling, duals and certificate as a dict.
#[pyfunction]
#[pyo3(signature = (p, q, order=1.0))]
fn transport_plan(
    py: Python<'_>,
    p: &PyDistribution,
    q: &PyDistribution,
    order: f64,
) -> PyResult<Py<PyAny>> {
    let metric = metric_from_space(p.0.space()).py_err()?;
    let (value, plan) = wasserstein_finite(order, &p.0, &q.0, &metric).py_err()?;
    let certificate = plan.certificate(p.0.probs(), q.0.probs(), &metric, order);
    to_py(
        py,
        &serde_json::json!({ "value": value, "plan": plan, "certificate": certificate }),
    )
}

#[pyfunction]
fn w2_gaussian(p: &PyGaussian, q: &PyGaussian) -> PyResult<f64> {
    wasserstein2_gaussian(&p.0, &q.0).py_err()
}

/// Gap report of `c·Σ locals − joint` for a Bayes-net pair.
#[pyfunction]
#[pyo3(signature = (measure, p, q, mode="parents"))]
fn subadditivity_gap(
    py: Python<'_>,
    measure: &str,
    p: &PyBayesNet,
    q: &PyBayesNet,
    mode: &str,
) -> PyResult<Py<PyAny>> {
    let measure: Measure = parse(measure)?;
    let dec = parse::<Mode>(mode)?.decompose(&p.0).py_err()?;
    let (jp, jq) = (p.0.expand().py_err()?, q.0.expand().py_err()?);
    let metric = metric_from_space(jp.space()).py_err()?;
    let c = lab::linear_coefficient(measure, Some(&metric)).py_err()?;
    to_py(
        py,
        &lab::subadditivity_bound(measure, &jp, &jq, &dec, c).py_err()?,
    )
}

/// Gap of the Gaussian W₂ counter-example at `(x, y)`.
#[pyfunction]
fn counterexample_gap(py: Python<'_>, x: f64, y: f64) -> PyResult<Py<PyAny>> {
    to_py(py, &lab::counterexample_gap(x, y).py_err()?)
}

/// Sweep an example family over its default `grid × grid` axis.
#[pyfunction]
#[pyo3(signature = (example, kind, grid, mode="parents"))]
fn sweep(
    py: Python<'_>,
    example: &str,
    kind: &str,
    grid: usize,
    mode: &str,
) -> PyResult<Py<PyAny>> {
    let example: Example = parse(example)?;
    let (measure, mode) = (parse::<Measure>(kind)?, parse::<Mode>(mode)?);
    let axis = example.default_axis(grid);
    let result = py
        .detach(|| lab::sweep(example, &axis, &axis, measure, mode))
        .py_err()?;
    to_py(py, &result)
}

/// `D_f` against its χ² approximation on `P = (1 + ε sin x) N(0, 1)`.
#[pyfunction]
fn local_approx(py: Python<'_>, kind: &str, eps: f64) -> PyResult<Py<PyAny>> {
    let kind: GeneratorKind = parse(kind)?;
    let pg = PerturbedGaussian1D::new(eps).py_err()?;
    to_py(
        py,
        &chi2_approx_report(kind, ClosePair::Perturbed(&pg)).py_err()?,
    )
}

/// Subadditivity gap of a close pair against its χ² prediction.
#[pyfunction]
fn perturbation_gap(
    py: Python<'_>,
    kind: &str,
    p: &PyBayesNet,
    q: &PyBayesNet,
) -> PyResult<Py<PyAny>> {
    to_py(
        py,
        &lab::perturbation_gap_report(parse(kind)?, &p.0, &q.0).py_err()?,
    )
}

#[pymodule]
fn subadd(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add("GAP_TOL", lab::GAP_TOL)?;
    m.add_class::<PyDistribution>()?;
    m.add_class::<PyBayesNet>()?;
    m.add_class::<PyMrf>()?;
    m.add_class::<PyGaussian>()?;
    m.add_function(wrap_pyfunction!(load_model, m)?)?;
    m.add_function(wrap_pyfunction!(divergence, m)?)?;
    m.add_function(wrap_pyfunction!(wasserstein, m)?)?;
    m.add_function(wrap_pyfunction!(transport_plan, m)?)?;
    m.add_function(wrap_pyfunction!(w2_gaussian, m)?)?;
    m.add_function(wrap_pyfunction!(subadditivity_gap, m)?)?;
    m.add_function(wrap_pyfunction!(counterexample_gap, m)?)?;
    m.add_function(wrap_pyfunction!(sweep, m)?)?;
    m.add_function(wrap_pyfunction!(local_approx, m)?)?;
    m.add_function(wrap_pyfunction!(perturbation_gap, m)?)?;
    Ok(())
}
