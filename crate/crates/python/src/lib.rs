//! Python bindings. Matrices cross the boundary as lists of rows; supports
//! as 0/1 rows.

use fsmf_core::generators;
use fsmf_core::iterative::{default_grid, grid_search, IterativeConfig, Method};
use fsmf_core::landscape;
use fsmf_core::{DenseMatrix, FactorPair, FsmfError, ProblemInstance, SolveMode, SupportMask, SupportPair};
use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

create_exception!(fsmf, CertificateError, PyException);

fn to_py(e: FsmfError) -> PyErr {
    match e {
        FsmfError::CertificateMismatch(m) => CertificateError::new_err(m),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn matrix(rows: Vec<Vec<f64>>) -> PyResult<DenseMatrix> {
    if rows.is_empty() {
        return Err(PyValueError::new_err("empty matrix"));
    }
    DenseMatrix::from_rows(&rows).map_err(to_py)
}

fn mask(rows: Vec<Vec<u8>>) -> PyResult<SupportMask> {
    if rows.is_empty() {
        return Err(PyValueError::new_err("empty support"));
    }
    SupportMask::from_binary_rows(&rows).map_err(to_py)
}

type Pair = (Vec<Vec<f64>>, Vec<Vec<f64>>);

fn pair(f: FactorPair) -> Pair {
    (f.x.to_rows(), f.y.to_rows())
}

#[pyclass(name = "Supports", frozen)]
pub struct PySupports {
    inner: SupportPair,
}

#[pymethods]
impl PySupports {
    #[new]
    fn new(left: Vec<Vec<u8>>, right: Vec<Vec<u8>>) -> PyResult<Self> {
        let inner = SupportPair::new(mask(left)?, mask(right)?).map_err(to_py)?;
        Ok(PySupports { inner })
    }

    #[getter]
    fn shape(&self) -> (usize, usize, usize) {
        (self.inner.m(), self.inner.n(), self.inner.rank())
    }

    fn left(&self) -> Vec<Vec<u8>> {
        self.inner.left().to_binary_rows()
    }

    fn right(&self) -> Vec<Vec<u8>> {
        self.inner.right().to_binary_rows()
    }

    fn certify(&self) -> PyCertificate {
        PyCertificate::from(&self.inner)
    }

    fn is_feasible(&self, x: Vec<Vec<f64>>, y: Vec<Vec<f64>>) -> PyResult<bool> {
        Ok(self.inner.is_feasible(&FactorPair::new(matrix(x)?, matrix(y)?).map_err(to_py)?))
    }

    fn __repr__(&self) -> String {
        format!("Supports(m={}, n={}, rank={})", self.inner.m(), self.inner.n(), self.inner.rank())
    }
}

#[pyclass(name = "Certificate", frozen, get_all)]
pub struct PyCertificate {
    level: String,
    summary: String,
    /// 1-based `(i1, j1, i2, j2, k)` or `None`.
    witness: Option<(usize, usize, usize, usize, usize)>,
    /// `(members, rows, cols, complete)` per class, 1-based.
    classes: Vec<(Vec<usize>, Vec<usize>, Vec<usize>, bool)>,
}

impl From<&SupportPair> for PyCertificate {
    fn from(s: &SupportPair) -> Self {
        let c = fsmf_core::certify(s);
        let one = |v: &[usize]| v.iter().map(|i| i + 1).collect::<Vec<_>>();
        PyCertificate {
            level: c.level.as_str().into(),
            summary: c.summary(),
            witness: c.spurious_witness.map(|w| w.one_based()),
            classes: c
                .partition
                .classes
                .iter()
                .map(|p| (one(&p.members), one(&p.representative.rows), one(&p.representative.cols), p.is_complete))
                .collect(),
        }
    }
}

#[pymethods]
impl PyCertificate {
    fn is_certified(&self) -> bool {
        self.level != "Unknown"
    }

    fn __repr__(&self) -> String {
        format!("Certificate({})", self.summary)
    }
}

#[pyfunction]
fn certify(supports: &PySupports) -> PyCertificate {
    supports.certify()
}

#[pyfunction]
fn loss(a: Vec<Vec<f64>>, x: Vec<Vec<f64>>, y: Vec<Vec<f64>>) -> PyResult<f64> {
    let f = FactorPair::new(matrix(x)?, matrix(y)?).map_err(to_py)?;
    fsmf_core::loss(&matrix(a)?, &f).map_err(to_py)
}

#[pyfunction]
fn truncated_svd(a: Vec<Vec<f64>>, k: usize) -> PyResult<Pair> {
    let (u, v) = fsmf_core::truncated_svd(&matrix(a)?, k).map_err(to_py)?;
    Ok((u.to_rows(), v.to_rows()))
}

#[pyfunction]
fn svd_fsmf(a: Vec<Vec<f64>>, supports: &PySupports) -> PyResult<Pair> {
    fsmf_core::svd_fsmf(&matrix(a)?, &supports.inner).map(pair).map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (a, supports, best_effort = false))]
fn svd_fsmf2(a: Vec<Vec<f64>>, supports: &PySupports, best_effort: bool) -> PyResult<Pair> {
    let mode = if best_effort { SolveMode::BestEffort } else { SolveMode::Strict };
    fsmf_core::svd_fsmf2(&matrix(a)?, &supports.inner, mode).map(pair).map_err(to_py)
}

#[pyfunction]
fn masked_gradient(a: Vec<Vec<f64>>, supports: &PySupports, x: Vec<Vec<f64>>, y: Vec<Vec<f64>>) -> PyResult<Pair> {
    let inst = ProblemInstance::new(matrix(a)?, supports.inner.clone()).map_err(to_py)?;
    let f = FactorPair::new(matrix(x)?, matrix(y)?).map_err(to_py)?;
    fsmf_core::masked_gradient(&inst, &f).map(pair).map_err(to_py)
}

/// Runs `gd`, `momentum`, `adam` or `palm`. With `lr=None` the default grid
/// is searched (except for PALM).
#[pyfunction]
#[pyo3(signature = (a, supports, method = "gd", lr = None, max_iters = 10_000, seed = 0))]
fn run_iterative<'py>(
    py: Python<'py>,
    a: Vec<Vec<f64>>,
    supports: &PySupports,
    method: &str,
    lr: Option<f64>,
    max_iters: usize,
    seed: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let m = Method::parse(method).map_err(to_py)?;
    let inst = ProblemInstance::new(matrix(a)?, supports.inner.clone()).map_err(to_py)?;
    let mut c = IterativeConfig::new(m, lr.unwrap_or(0.0));
    c.max_iters = max_iters;
    c.seed = seed;
    let o = py
        .detach(|| match lr {
            None if m != Method::Palm => grid_search(&inst, &c, &default_grid(), true).map(|g| g.best),
            _ => fsmf_core::run_iterative(&inst, &c),
        })
        .map_err(to_py)?;
    let d = PyDict::new(py);
    let r = &o.report;
    d.set_item("method", &r.method_tag)?;
    d.set_item("x", o.factors.x.to_rows())?;
    d.set_item("y", o.factors.y.to_rows())?;
    d.set_item("final_loss", r.final_loss)?;
    d.set_item("log10_frobenius_error", r.log10_frobenius_error())?;
    d.set_item("iterations", r.iterations)?;
    d.set_item("learning_rate", r.learning_rate)?;
    d.set_item("converged", r.converged)?;
    d.set_item("diverged", r.diverged)?;
    d.set_item("wall_time_s", r.wall_time)?;
    Ok(d)
}

#[pyfunction]
fn g_sigma(sigma: f64) -> f64 {
    landscape::g_sigma(sigma)
}

#[pyfunction]
fn gen_full(m: usize, n: usize, r: usize) -> PySupports {
    PySupports { inner: generators::gen_full(m, n, r) }
}

#[pyfunction]
fn gen_lu(n: usize) -> PySupports {
    PySupports { inner: generators::gen_lu(n) }
}

#[pyfunction]
fn gen_kron1(level: u32) -> PyResult<PySupports> {
    Ok(PySupports { inner: generators::gen_kron1(level).map_err(to_py)? })
}

#[pyfunction]
fn gen_kron2(level: u32) -> PyResult<PySupports> {
    Ok(PySupports { inner: generators::gen_kron2(level).map_err(to_py)? })
}

#[pyfunction]
fn gen_hodlr(level: u32) -> PyResult<PySupports> {
    Ok(PySupports { inner: generators::gen_hodlr(level).map_err(to_py)? })
}

#[pyfunction]
fn hadamard(level: u32) -> PyResult<Vec<Vec<f64>>> {
    Ok(generators::hadamard(level).map_err(to_py)?.to_rows())
}

#[pymodule]
fn fsmf(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add("CertificateError", m.py().get_type::<CertificateError>())?;
    m.add_class::<PySupports>()?;
    m.add_class::<PyCertificate>()?;
    m.add_function(wrap_pyfunction!(certify, m)?)?;
    m.add_function(wrap_pyfunction!(loss, m)?)?;
    m.add_function(wrap_pyfunction!(truncated_svd, m)?)?;
    m.add_function(wrap_pyfunction!(svd_fsmf, m)?)?;
    m.add_function(wrap_pyfunction!(svd_fsmf2, m)?)?;
    m.add_function(wrap_pyfunction!(masked_gradient, m)?)?;
    m.add_function(wrap_pyfunction!(run_iterative, m)?)?;
    m.add_function(wrap_pyfunction!(g_sigma, m)?)?;
    m.add_function(wrap_pyfunction!(gen_full, m)?)?;
    m.add_function(wrap_pyfunction!(gen_lu, m)?)?;
    m.add_function(wrap_pyfunction!(gen_kron1, m)?)?;
    m.add_function(wrap_pyfunction!(gen_kron2, m)?)?;
    m.add_function(wrap_pyfunction!(gen_hodlr, m)?)?;
    m.add_function(wrap_pyfunction!(hadamard, m)?)?;
    Ok(())
}
