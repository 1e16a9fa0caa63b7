//! Python bindings for `ffgap`, loaded as `ffgap_py`.

use nalgebra::DMatrix;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use ffgap::capgeom::{self, CapQuery};
use ffgap::certificate;
use ffgap::haar::{self, RandomSeed};
use ffgap::harness::{self, ExperimentConfig};
use ffgap::model::{self, ChainSpec, Lattice, TreeSpec};
use ffgap::spectral::{self, SolverMethod, SpectralOptions};
use ffgap::Error;

fn to_py(e: Error) -> PyErr {
    match e {
        Error::NotConverged(_) | Error::Io(_) => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

/// Orthonormal family of `r` vectors in dimension `d^2`.
#[pyclass(frozen, name = "OrthonormalFamily")]
struct PyFamily(haar::OrthonormalFamily);

#[pymethods]
impl PyFamily {
    #[getter]
    fn d(&self) -> usize {
        self.0.d
    }

    #[getter]
    fn r(&self) -> usize {
        self.0.r
    }

    #[getter]
    fn vectors(&self) -> Vec<Vec<f64>> {
        self.0.vectors.clone()
    }

    fn gram_deviation(&self) -> f64 {
        self.0.gram_deviation()
    }
}

/// Rank-`r` projector on `C^d (x) C^d`.
#[pyclass(frozen, name = "LocalProjector")]
struct PyProjector(model::LocalProjector);

#[pymethods]
impl PyProjector {
    #[staticmethod]
    fn from_family(family: &PyFamily) -> Self {
        Self(model::LocalProjector::from_family(&family.0))
    }

    #[staticmethod]
    fn reference(d: usize, r: usize) -> PyResult<Self> {
        model::LocalProjector::reference(d, r).map(Self).map_err(to_py)
    }

    #[staticmethod]
    fn from_matrix(d: usize, r: usize, matrix: Vec<Vec<f64>>) -> PyResult<Self> {
        let n = matrix.len();
        if matrix.iter().any(|row| row.len() != n) {
            return Err(PyValueError::new_err("matrix must be square"));
        }
        let m = DMatrix::from_fn(n, n, |i, j| matrix[i][j]);
        model::LocalProjector::from_matrix(d, r, m).map(Self).map_err(to_py)
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        serde_json::from_str(text)
            .map(Self)
            .map_err(|e| PyValueError::new_err(e.to_string()))
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.0).map_err(|e| PyValueError::new_err(e.to_string()))
    }

    #[getter]
    fn d(&self) -> usize {
        self.0.d()
    }

    #[getter]
    fn rank(&self) -> usize {
        self.0.rank()
    }

    #[getter]
    fn matrix(&self) -> Vec<Vec<f64>> {
        rows(self.0.matrix())
    }
}

#[pyclass(frozen, name = "SpectralReport")]
struct PySpectralReport(spectral::SpectralReport);

#[pymethods]
impl PySpectralReport {
    #[getter]
    fn ground_energy(&self) -> f64 {
        self.0.ground_energy
    }

    #[getter]
    fn kernel_dim(&self) -> Option<usize> {
        self.0.kernel_dim
    }

    #[getter]
    fn gap(&self) -> Option<f64> {
        self.0.gap
    }

    #[getter]
    fn frustration_free(&self) -> bool {
        self.0.frustration_free
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.0).map_err(|e| PyValueError::new_err(e.to_string()))
    }
}

#[pyclass(frozen, name = "Certificate")]
struct PyCertificate(certificate::Certificate);

#[pymethods]
impl PyCertificate {
    #[getter]
    fn coupling_norm(&self) -> f64 {
        self.0.coupling_norm
    }

    #[getter]
    fn gamma_loc(&self) -> f64 {
        self.0.gamma_loc
    }

    #[getter]
    fn chain_bound(&self) -> f64 {
        self.0.chain_bound
    }

    #[getter]
    fn verdict(&self) -> &'static str {
        self.0.verdict.as_str()
    }

    #[getter]
    fn tree_bounds(&self) -> Vec<(usize, f64)> {
        self.0.tree_bounds.iter().map(|(k, b)| (*k, *b)).collect()
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.0).map_err(|e| PyValueError::new_err(e.to_string()))
    }
}

#[pyfunction]
#[pyo3(signature = (d, r, master_seed, stream_index=0))]
fn sample_family(d: usize, r: usize, master_seed: u64, stream_index: u64) -> PyResult<PyFamily> {
    haar::sample_family(d, r, RandomSeed::new(master_seed, stream_index))
        .map(PyFamily)
        .map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (d, r, epsilon, master_seed, stream_index=0))]
fn construct_near_good(
    d: usize,
    r: usize,
    epsilon: f64,
    master_seed: u64,
    stream_index: u64,
) -> PyResult<PyFamily> {
    certificate::construct_near_good(d, r, epsilon, RandomSeed::new(master_seed, stream_index))
        .map(PyFamily)
        .map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (n, master_seed, stream_index=0))]
fn haar_orthogonal(n: usize, master_seed: u64, stream_index: u64) -> PyResult<Vec<Vec<f64>>> {
    haar::haar_orthogonal(n, RandomSeed::new(master_seed, stream_index))
        .map(|m| rows(&m))
        .map_err(to_py)
}

/// Low spectrum of a chain of `length` sites, or of a `k`-ary tree with `levels` levels.
#[pyfunction]
#[pyo3(signature = (projector, length=None, k=None, levels=None, method="auto", kernel_cap=0))]
fn gap_report(
    py: Python<'_>,
    projector: &PyProjector,
    length: Option<usize>,
    k: Option<usize>,
    levels: Option<usize>,
    method: &str,
    kernel_cap: usize,
) -> PyResult<PySpectralReport> {
    let p = &projector.0;
    let lattice = match (length, k, levels) {
        (Some(l), None, None) => ChainSpec::new(p.d(), p.rank(), l).map(Lattice::Chain),
        (None, Some(k), Some(n)) => TreeSpec::new(p.d(), p.rank(), k, n).map(Lattice::Tree),
        _ => return Err(PyValueError::new_err("give either length, or both k and levels")),
    }
    .map_err(to_py)?;
    let method = match method {
        "auto" => SolverMethod::Auto,
        "dense" => SolverMethod::Dense,
        "iterative" => SolverMethod::Iterative,
        other => return Err(PyValueError::new_err(format!("unknown method {other:?}"))),
    };
    let opts = SpectralOptions {
        method,
        kernel_cap,
        ..Default::default()
    };
    py.detach(|| spectral::gap_report(&lattice, p, &opts))
        .map(PySpectralReport)
        .map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (projector, k_list=Vec::new()))]
fn certify(projector: &PyProjector, k_list: Vec<usize>) -> PyResult<PyCertificate> {
    certificate::certify(&projector.0, &k_list)
        .map(PyCertificate)
        .map_err(to_py)
}

#[pyfunction]
fn cap_measure_exact(n: usize, delta: f64) -> PyResult<f64> {
    CapQuery::new(n, delta)
        .and_then(|q| capgeom::cap_measure_exact(&q))
        .map_err(to_py)
}

#[pyfunction]
fn cap_lower_bound(n: usize, delta: f64) -> PyResult<f64> {
    CapQuery::new(n, delta)
        .and_then(|q| capgeom::cap_lower_bound(&q))
        .map_err(to_py)
}

#[pyfunction]
fn landing_probability_bound(d: usize, r: usize, epsilon: f64) -> PyResult<f64> {
    capgeom::landing_probability_bound(d, r, epsilon).map_err(to_py)
}

#[pyfunction]
fn gap_probability_bound(d: usize, r: usize, epsilon: f64) -> PyResult<f64> {
    capgeom::gap_probability_bound(d, r, epsilon).map_err(to_py)
}

#[pyfunction]
fn step_bound(d: usize, i: usize, delta: f64) -> PyResult<f64> {
    capgeom::step_bound(d, i, delta).map_err(to_py)
}

#[pyfunction]
fn spherical_distance(x: Vec<f64>, y: Vec<f64>) -> PyResult<f64> {
    capgeom::spherical_distance(&x, &y).map_err(to_py)
}

/// Runs a JSON experiment config; returns `(document, failed_trials)`.
#[pyfunction]
fn run_experiment(py: Python<'_>, config_json: &str) -> PyResult<(String, usize)> {
    let cfg = ExperimentConfig::from_json_str(config_json).map_err(to_py)?;
    cfg.validate().map_err(to_py)?;
    let out = py.detach(|| harness::run(&cfg)).map_err(to_py)?;
    let doc = out.render(cfg.format).map_err(to_py)?;
    let doc = String::from_utf8(doc).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    Ok((doc, out.failed_trials()))
}

#[pymodule]
fn ffgap_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyFamily>()?;
    m.add_class::<PyProjector>()?;
    m.add_class::<PySpectralReport>()?;
    m.add_class::<PyCertificate>()?;
    m.add_function(wrap_pyfunction!(sample_family, m)?)?;
    m.add_function(wrap_pyfunction!(construct_near_good, m)?)?;
    m.add_function(wrap_pyfunction!(haar_orthogonal, m)?)?;
    m.add_function(wrap_pyfunction!(gap_report, m)?)?;
    m.add_function(wrap_pyfunction!(certify, m)?)?;
    m.add_function(wrap_pyfunction!(cap_measure_exact, m)?)?;
    m.add_function(wrap_pyfunction!(cap_lower_bound, m)?)?;
    m.add_function(wrap_pyfunction!(landing_probability_bound, m)?)?;
    m.add_function(wrap_pyfunction!(gap_probability_bound, m)?)?;
    m.add_function(wrap_pyfunction!(step_bound, m)?)?;
    m.add_function(wrap_pyfunction!(spherical_distance, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    Ok(())
}
