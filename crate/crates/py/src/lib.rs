use std::sync::Arc;

use energy_space::energy::EnergySpace;
use energy_space::multop::{self, AnalysisOptions, Multiplier};
use energy_space::network::{self, ConductanceProfile, Family, Network, VertexId};
use energy_space::randwalk;
use energy_space::Error;
use num_complex::Complex64;
use pyo3::exceptions::{PyOSError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyList;
use serde_json::Value;

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Io(e) => PyOSError::new_err(e.to_string()),
        e => PyValueError::new_err(e.to_string()),
    }
}

trait OrPy<T> {
    fn py(self) -> PyResult<T>;
}

impl<T> OrPy<T> for energy_space::Result<T> {
    fn py(self) -> PyResult<T> {
        self.map_err(py_err)
    }
}

fn json_to_py(py: Python<'_>, value: &Value) -> PyResult<Py<PyAny>> {
    Ok(py.import("json")?.call_method1("loads", (value.to_string(),))?.unbind())
}

fn vertex_id(obj: &Bound<'_, PyAny>) -> PyResult<VertexId> {
    Ok(obj.str()?.to_string().parse().expect("infallible"))
}

fn vertex(net: &Network, obj: &Bound<'_, PyAny>) -> PyResult<usize> {
    net.resolve(&obj.str()?.to_string()).py()
}

fn vertices(net: &Network, objs: Option<&Bound<'_, PyList>>) -> PyResult<Vec<usize>> {
    match objs {
        None => Ok(net.non_origin()),
        Some(list) => list.iter().map(|o| vertex(net, &o)).collect(),
    }
}

fn exhaustion(net: &Network, sizes: Option<Vec<usize>>) -> PyResult<Vec<Vec<usize>>> {
    let sizes = sizes.unwrap_or_else(|| vec![net.len() - 1]);
    multop::prefix_exhaustion(net, &sizes).py()
}

/// Connected weighted graph with a distinguished origin.
#[pyclass(name = "Network", module = "energy_space", frozen)]
struct PyNetwork {
    inner: Arc<Network>,
}

#[pymethods]
impl PyNetwork {
    /// Builds a network from `(x, y, c)` triples.
    #[new]
    fn new(edges: Vec<(Bound<'_, PyAny>, Bound<'_, PyAny>, f64)>, origin: Bound<'_, PyAny>) -> PyResult<Self> {
        let list = edges
            .iter()
            .map(|(x, y, c)| Ok((vertex_id(x)?, vertex_id(y)?, *c)))
            .collect::<PyResult<Vec<_>>>()?;
        let net = Network::new(list, vertex_id(&origin)?).py()?;
        Ok(PyNetwork { inner: Arc::new(net) })
    }

    /// `path:n`, `cycle:n`, `integer_segment:n` or `binary_tree:d`.
    #[staticmethod]
    #[pyo3(signature = (family, weights = "unit"))]
    fn generate(family: &str, weights: &str) -> PyResult<Self> {
        let family: Family = family.parse().py()?;
        let profile: ConductanceProfile = weights.parse().py()?;
        Ok(PyNetwork {
            inner: Arc::new(Network::generate(family, &profile).py()?),
        })
    }

    #[staticmethod]
    #[pyo3(signature = (n, extra_edges, lo = 0.2, hi = 5.0, seed = 0))]
    fn random(n: usize, extra_edges: usize, lo: f64, hi: f64, seed: u64) -> PyResult<Self> {
        Ok(PyNetwork {
            inner: Arc::new(network::random_connected(n, extra_edges, lo, hi, seed).py()?),
        })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(PyNetwork {
            inner: Arc::new(network::parse_network_json(text).py()?),
        })
    }

    fn to_json(&self) -> String {
        self.inner.to_json()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!(
            "Network(vertices={}, edges={}, origin={})",
            self.inner.len(),
            self.inner.edges().len(),
            self.inner.id(self.inner.origin())
        )
    }

    #[getter]
    fn origin(&self) -> String {
        self.inner.id(self.inner.origin()).to_string()
    }

    #[getter]
    fn ids(&self) -> Vec<String> {
        self.inner.ids().iter().map(ToString::to_string).collect()
    }

    /// Internal index of a vertex id.
    fn index(&self, x: Bound<'_, PyAny>) -> PyResult<usize> {
        vertex(&self.inner, &x)
    }

    fn conductance(&self, x: Bound<'_, PyAny>, y: Bound<'_, PyAny>) -> PyResult<f64> {
        Ok(self.inner.conductance(vertex(&self.inner, &x)?, vertex(&self.inner, &y)?))
    }

    fn total_conductance(&self, x: Bound<'_, PyAny>) -> PyResult<f64> {
        self.inner.total_conductance(vertex(&self.inner, &x)?).py()
    }

    /// Dense Laplacian, rows in index order.
    fn laplacian(&self) -> Vec<Vec<f64>> {
        let l = self.inner.laplacian_matrix();
        l.row_iter().map(|r| r.iter().copied().collect()).collect()
    }
}

/// Multiplication symbol `f` on the vertices of a network.
#[pyclass(name = "Multiplier", module = "energy_space", frozen)]
struct PyMultiplier {
    inner: Multiplier,
}

#[pymethods]
impl PyMultiplier {
    /// Values in index order.
    #[new]
    fn new(network: &PyNetwork, values: Vec<Complex64>) -> PyResult<Self> {
        Ok(PyMultiplier {
            inner: Multiplier::new(&network.inner, values).py()?,
        })
    }

    #[staticmethod]
    fn delta(network: &PyNetwork, x: Bound<'_, PyAny>) -> PyResult<Self> {
        let x = vertex(&network.inner, &x)?;
        Ok(PyMultiplier {
            inner: Multiplier::delta(&network.inner, x).py()?,
        })
    }

    #[staticmethod]
    fn kernel(space: &PyEnergySpace, x: Bound<'_, PyAny>) -> PyResult<Self> {
        let x = vertex(space.inner.network(), &x)?;
        Ok(PyMultiplier {
            inner: Multiplier::kernel(&space.inner, x).py()?,
        })
    }

    #[staticmethod]
    fn constant(network: &PyNetwork, c: Complex64) -> Self {
        PyMultiplier {
            inner: Multiplier::constant(&network.inner, c),
        }
    }

    #[staticmethod]
    fn from_json(network: &PyNetwork, text: &str) -> PyResult<Self> {
        Ok(PyMultiplier {
            inner: Multiplier::from_json(&network.inner, text).py()?,
        })
    }

    #[getter]
    fn values(&self) -> Vec<Complex64> {
        self.inner.values().to_vec()
    }

    fn is_real(&self) -> bool {
        self.inner.is_real()
    }
}

/// Energy space of a network: kernels, Gram matrices and multiplier analysis.
#[pyclass(name = "EnergySpace", module = "energy_space", frozen)]
struct PyEnergySpace {
    inner: Arc<EnergySpace>,
}

impl PyEnergySpace {
    fn net(&self) -> &Network {
        self.inner.network()
    }
}

#[pymethods]
impl PyEnergySpace {
    #[new]
    fn new(network: &PyNetwork) -> Self {
        PyEnergySpace {
            inner: Arc::new(EnergySpace::new(Arc::clone(&network.inner))),
        }
    }

    #[getter]
    fn network(&self) -> PyNetwork {
        PyNetwork {
            inner: self.inner.network_arc(),
        }
    }

    /// Values of `v_x` in index order.
    fn kernel(&self, x: Bound<'_, PyAny>) -> PyResult<Vec<f64>> {
        let x = vertex(self.net(), &x)?;
        Ok(self.inner.kernel_values(x).py()?.to_vec())
    }

    fn resistance(&self, x: Bound<'_, PyAny>) -> PyResult<f64> {
        let x = vertex(self.net(), &x)?;
        Ok(self.inner.effective_resistance(x).py()?.value())
    }

    #[pyo3(signature = (vertices = None))]
    fn gram(&self, py: Python<'_>, vertices: Option<&Bound<'_, PyList>>) -> PyResult<Vec<Vec<f64>>> {
        let set = self::vertices(self.net(), vertices)?;
        let g = py.detach(|| self.inner.gram_matrix(&set)).py()?;
        Ok(g.matrix().matrix().row_iter().map(|r| r.iter().copied().collect()).collect())
    }

    /// `‖M_f‖` restricted to the span of `{v_x : x in vertices}`.
    #[pyo3(signature = (m, vertices = None))]
    fn restricted_norm(&self, py: Python<'_>, m: &PyMultiplier, vertices: Option<&Bound<'_, PyList>>) -> PyResult<f64> {
        let set = self::vertices(self.net(), vertices)?;
        py.detach(|| multop::restricted_norm(&self.inner, &m.inner, &set)).py()
    }

    /// `(is_psd, min_eigenvalue)` of `s_f` at bound `b` for each prefix size.
    #[pyo3(signature = (m, b, sizes = None, tol = None))]
    fn certify(
        &self,
        py: Python<'_>,
        m: &PyMultiplier,
        b: f64,
        sizes: Option<Vec<usize>>,
        tol: Option<f64>,
    ) -> PyResult<Vec<(bool, f64)>> {
        let ex = exhaustion(self.net(), sizes)?;
        let verdicts = py.detach(|| multop::certify_bound(&self.inner, &m.inner, b, &ex, tol)).py()?;
        Ok(verdicts.iter().map(|v| (v.is_psd, v.min_eigenvalue)).collect())
    }

    /// Full multiplier report as a dict.
    #[pyo3(signature = (m, sizes = None, bounds = Vec::new(), estimate = false, tol = None))]
    fn analyze(
        &self,
        py: Python<'_>,
        m: &PyMultiplier,
        sizes: Option<Vec<usize>>,
        bounds: Vec<f64>,
        estimate: bool,
        tol: Option<f64>,
    ) -> PyResult<Py<PyAny>> {
        let ex = exhaustion(self.net(), sizes)?;
        let options = AnalysisOptions {
            bounds,
            estimate,
            psd_tolerance: tol,
            bisection_tolerance: None,
        };
        let report = py.detach(|| multop::analyze(&self.inner, &m.inner, &ex, &options)).py()?;
        json_to_py(py, &report.to_json(self.net()))
    }

    /// `√(c(x) R(x))`.
    fn point_mass_norm(&self, x: Bound<'_, PyAny>) -> PyResult<f64> {
        let x = vertex(self.net(), &x)?;
        Ok(multop::point_mass_norm(&self.inner, x).py()?.value)
    }

    fn sufficiency_bound(&self, m: &PyMultiplier) -> PyResult<f64> {
        multop::sufficiency_bound(&self.inner, &m.inner).py()
    }

    fn escape_prob(&self, x: Bound<'_, PyAny>) -> PyResult<f64> {
        let x = vertex(self.net(), &x)?;
        randwalk::escape_prob_exact(self.net(), x).py()
    }

    #[pyo3(signature = (x, samples = 100_000, seed = 0))]
    fn escape_prob_mc(&self, py: Python<'_>, x: Bound<'_, PyAny>, samples: u64, seed: u64) -> PyResult<Py<PyAny>> {
        let x = vertex(self.net(), &x)?;
        let est = py.detach(|| randwalk::escape_prob_mc(self.net(), x, samples, seed)).py()?;
        json_to_py(py, &est.to_json(self.net()))
    }
}

/// Registers the classes on `m`.
pub fn register(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyNetwork>()?;
    m.add_class::<PyMultiplier>()?;
    m.add_class::<PyEnergySpace>()?;
    Ok(())
}

#[pymodule]
#[pyo3(name = "energy_space")]
fn energy_space_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    register(m)
}
