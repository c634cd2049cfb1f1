//! Python bindings for `anw_core`.
//!
//! Matrices cross the boundary as nested lists (row-major, interleaved
//! quadratures); reports come back as dicts.

use anw_core::entanglement::{self, EntanglementGraph, Variant, VlfReport};
use anw_core::gaussian::{change_basis, CovarianceMatrix, Direction};
use anw_core::graphcalc;
use anw_core::lattice::{self, ArrayConfig};
use anw_core::propagation;
use anw_core::Error;
use nalgebra::DMatrix;
use pyo3::exceptions::{PyArithmeticError, PyOSError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn to_py(err: Error) -> PyErr {
    match err {
        Error::Numerical(_) => PyArithmeticError::new_err(err.to_string()),
        Error::Io(_) => PyOSError::new_err(err.to_string()),
        _ => PyValueError::new_err(err.to_string()),
    }
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

fn parse_variant(s: &str) -> PyResult<Variant> {
    s.parse().map_err(to_py)
}

fn graph_dict<'py>(py: Python<'py>, graph: &EntanglementGraph) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    let edges: Vec<(usize, usize, f64)> = graph.edges.iter().map(|e| (e.i, e.j, e.weight)).collect();
    d.set_item("edges", edges)?;
    d.set_item(
        "waveguides",
        graph.nodes.iter().map(|n| n.waveguide).collect::<Vec<_>>(),
    )?;
    d.set_item("components", graph.components())?;
    Ok(d)
}

fn report_dict<'py>(py: Python<'py>, r: &VlfReport) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("z", r.z)?;
    d.set_item("variant", r.variant.to_string())?;
    d.set_item("optimized", r.optimized)?;
    d.set_item("pairs", r.pairs.iter().map(|p| (p[0], p[1])).collect::<Vec<_>>())?;
    d.set_item("values", r.values.clone())?;
    d.set_item("unoptimized", r.unoptimized.clone())?;
    d.set_item("gains", r.gains.clone())?;
    d.set_item("asymptote", r.asymptote)?;
    d.set_item("fully_inseparable", r.fully_inseparable)?;
    d.set_item("genuine_multipartite", r.genuine_multipartite)?;
    d.set_item("graph", graph_dict(py, &r.graph)?)?;
    Ok(d)
}

/// Waveguide array with nearest-neighbour coupling `C0 * f_j` and
/// nonlinearity `eta` (rates in 1/mm).
#[pyclass(name = "Array", frozen)]
struct PyArray {
    inner: ArrayConfig,
}

#[pymethods]
impl PyArray {
    #[new]
    #[pyo3(signature = (n, c0 = 0.70, eta = 0.025, profile = None))]
    fn new(n: usize, c0: f64, eta: f64, profile: Option<Vec<f64>>) -> PyResult<Self> {
        let inner = match profile {
            Some(f) => ArrayConfig::new(n, c0, f, eta),
            None => ArrayConfig::homogeneous(n, c0, eta),
        }
        .map_err(to_py)?;
        Ok(PyArray { inner })
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn c0(&self) -> f64 {
        self.inner.c0()
    }

    #[getter]
    fn eta(&self) -> f64 {
        self.inner.eta()
    }

    /// Eigenvalues (descending) and supermodes as rows.
    fn eigen<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let basis = propagation::basis_for(&self.inner).map_err(to_py)?;
        let d = PyDict::new(py);
        d.set_item("eigenvalues", basis.eigenvalues().iter().copied().collect::<Vec<_>>())?;
        d.set_item("modes", basis.modes_rows())?;
        d.set_item("zero_supermode", lattice::zero_supermode_index(self.inner.n()).ok())?;
        Ok(d)
    }

    /// Covariance at distance `z` (mm) in the `individual` or `supermode` basis.
    #[pyo3(signature = (z, basis = "individual"))]
    fn covariance(&self, z: f64, basis: &str) -> PyResult<Vec<Vec<f64>>> {
        let sb = propagation::basis_for(&self.inner).map_err(to_py)?;
        let v = propagation::covariance_individual(&self.inner, &sb, z).map_err(to_py)?;
        let v = match basis {
            "individual" => v,
            "supermode" => change_basis(&v, &sb, Direction::ToSupermode).map_err(to_py)?,
            other => return Err(PyValueError::new_err(format!("unknown basis {other:?}"))),
        };
        Ok(rows(v.entries()))
    }

    /// `S Sᵀ` with `S` the matrix exponential of the full generator.
    fn numeric_covariance(&self, z: f64) -> PyResult<Vec<Vec<f64>>> {
        let s = propagation::propagate_numeric(&propagation::assemble_generator(&self.inner), z).map_err(to_py)?;
        Ok(rows(&(&s * s.transpose())))
    }

    #[pyo3(signature = (z, variant = "a", optimized = true))]
    fn vlf<'py>(&self, py: Python<'py>, z: f64, variant: &str, optimized: bool) -> PyResult<Bound<'py, PyDict>> {
        let r = entanglement::vlf_suite(&self.inner, z, parse_variant(variant)?, optimized).map_err(to_py)?;
        report_dict(py, &r)
    }

    fn __repr__(&self) -> String {
        format!(
            "Array(n={}, c0={}, eta={}, profile={:?})",
            self.inner.n(),
            self.inner.c0(),
            self.inner.eta(),
            self.inner.profile()
        )
    }
}

/// Closed-form large-coupling VLF value; `z` may be `inf`.
#[pyfunction]
#[pyo3(signature = (l, eta, z, optimized = true))]
fn asymptotic_vlf(l: usize, eta: f64, z: f64, optimized: bool) -> PyResult<f64> {
    entanglement::asymptotic_vlf(l, eta, z, optimized).map_err(to_py)
}

#[pyfunction]
fn large_coupling_covariance(l: usize, eta: f64, z: f64) -> PyResult<Vec<Vec<f64>>> {
    Ok(rows(
        entanglement::large_coupling_covariance(l, eta, z)
            .map_err(to_py)?
            .entries(),
    ))
}

#[pyfunction]
#[pyo3(signature = (l, eta, z, variant = "a", optimized = true))]
fn large_coupling_vlf<'py>(
    py: Python<'py>,
    l: usize,
    eta: f64,
    z: f64,
    variant: &str,
    optimized: bool,
) -> PyResult<Bound<'py, PyDict>> {
    let r = entanglement::large_coupling_vlf(l, eta, z, parse_variant(variant)?, optimized).map_err(to_py)?;
    report_dict(py, &r)
}

/// Duan entanglement graph of a covariance over the zero-supermode modes.
#[pyfunction]
#[pyo3(signature = (covariance, variant = "a"))]
fn duan_graph<'py>(py: Python<'py>, covariance: Vec<Vec<f64>>, variant: &str) -> PyResult<Bound<'py, PyDict>> {
    let dim = covariance.len();
    if covariance.iter().any(|r| r.len() != dim) {
        return Err(PyValueError::new_err("covariance must be square"));
    }
    let flat: Vec<f64> = covariance.into_iter().flatten().collect();
    let v =
        CovarianceMatrix::new(DMatrix::from_row_slice(dim, dim, &flat), anw_core::Basis::Individual).map_err(to_py)?;
    let g = entanglement::duan_nullifiers(&v, parse_variant(variant)?).map_err(to_py)?;
    graph_dict(py, &g)
}

/// Adjacency matrices `V`, `U` of the large-coupling state and `tr U`.
#[pyfunction]
fn adjacency<'py>(py: Python<'py>, l: usize, eta: f64, z: f64) -> PyResult<Bound<'py, PyDict>> {
    let pair = graphcalc::adjacency_matrices(l, eta, z).map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("V", rows(&pair.v))?;
    d.set_item("U", rows(&pair.u))?;
    d.set_item("trace_u", graphcalc::approximation_error(&pair))?;
    Ok(d)
}

#[pymodule]
fn anw(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyArray>()?;
    m.add_function(wrap_pyfunction!(asymptotic_vlf, m)?)?;
    m.add_function(wrap_pyfunction!(large_coupling_covariance, m)?)?;
    m.add_function(wrap_pyfunction!(large_coupling_vlf, m)?)?;
    m.add_function(wrap_pyfunction!(duan_graph, m)?)?;
    m.add_function(wrap_pyfunction!(adjacency, m)?)?;
    Ok(())
}
