//! Python bindings for the PCS estimator. Mirrors the library surface:
//! dataset construction, h/breakdown arithmetic, exact and randomized
//! solves, contamination and equivariance probes.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use nalgebra::DVector;
use pcs_core::{
    Caps, ContaminationSpec, Dataset, HSubset, PcsError, PcsFit, SolverConfig, SubsetSize,
    SweepSettings, Tolerances,
};

fn to_py_err(e: PcsError) -> PyErr {
    PyValueError::new_err(format!("{} (exit code {})", e, e.exit_code()))
}

#[pyclass(name = "Dataset")]
struct PyDataset {
    inner: Dataset,
}

#[pymethods]
impl PyDataset {
    #[new]
    #[pyo3(signature = (rows, allow_duplicate_tail=None))]
    fn new(rows: Vec<Vec<f64>>, allow_duplicate_tail: Option<usize>) -> PyResult<Self> {
        let tol = Tolerances::default();
        let inner = match allow_duplicate_tail {
            Some(genuine) => Dataset::new_with_contaminated_tail(rows, genuine, &tol),
            None => Dataset::new(rows, &tol),
        }
        .map_err(to_py_err)?;
        Ok(PyDataset { inner })
    }

    #[staticmethod]
    #[pyo3(signature = (path, has_header=None))]
    fn from_csv(path: std::path::PathBuf, has_header: Option<bool>) -> PyResult<Self> {
        let inner =
            Dataset::from_csv(&path, has_header, &Tolerances::default()).map_err(to_py_err)?;
        Ok(PyDataset { inner })
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn p(&self) -> usize {
        self.inner.p()
    }

    fn rows(&self) -> Vec<Vec<f64>> {
        self.inner
            .rows()
            .iter()
            .map(|r| r.iter().copied().collect())
            .collect()
    }

    fn __repr__(&self) -> String {
        format!("Dataset(n={}, p={})", self.inner.n(), self.inner.p())
    }
}

#[pyfunction]
fn default_h(n: usize, p: usize) -> PyResult<usize> {
    Ok(pcs_core::default_h(n, p).map_err(to_py_err)?.h)
}

/// Returns ((n-h+1), n, float) for the breakdown bound (n-h+1)/n.
#[pyfunction]
fn breakdown_bound(n: usize, h: usize) -> PyResult<(u64, u64, f64)> {
    let b = pcs_core::breakdown_bound(n, h).map_err(to_py_err)?;
    Ok((*b.ratio.numer(), *b.ratio.denom(), b.as_f64()))
}

fn subset_size(data: &Dataset, h: Option<usize>) -> PyResult<SubsetSize> {
    match h {
        Some(h) => SubsetSize::with_override(data.n(), data.p(), h).map_err(to_py_err),
        None => pcs_core::default_h(data.n(), data.p()).map_err(to_py_err),
    }
}

fn fit_to_dict<'py>(
    py: Python<'py>,
    data: &Dataset,
    h: &SubsetSize,
    fit: &PcsFit,
) -> PyResult<Bound<'py, PyDict>> {
    let report = fit.report(data, h);
    let json = serde_json::to_value(&report)
        .map_err(|e| PyValueError::new_err(e.to_string()))?;
    let loads = py.import("json")?.getattr("loads")?;
    let obj = loads.call1((json.to_string(),))?;
    Ok(obj.extract::<Bound<'py, PyDict>>()?)
}

#[pyfunction]
#[pyo3(signature = (data, h=None))]
fn solve_exact<'py>(
    py: Python<'py>,
    data: &PyDataset,
    h: Option<usize>,
) -> PyResult<Bound<'py, PyDict>> {
    let hh = subset_size(&data.inner, h)?;
    let fit = pcs_core::solve_exact(&data.inner, &hh, &Tolerances::default(), &Caps::default())
        .map_err(to_py_err)?;
    fit_to_dict(py, &data.inner, &hh, &fit)
}

#[pyfunction]
#[pyo3(signature = (data, seed, h=None, n_starts=500, n_isteps=3, k_directions=250))]
fn solve_randomized<'py>(
    py: Python<'py>,
    data: &PyDataset,
    seed: u64,
    h: Option<usize>,
    n_starts: usize,
    n_isteps: usize,
    k_directions: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let hh = subset_size(&data.inner, h)?;
    let cfg = SolverConfig {
        n_starts,
        n_isteps,
        k_directions,
        seed,
    };
    let fit = pcs_core::solve_randomized(
        &data.inner,
        &hh,
        &cfg,
        &Tolerances::default(),
        &Caps::default(),
    )
    .map_err(to_py_err)?;
    fit_to_dict(py, &data.inner, &hh, &fit)
}

/// Mean and covariance (population divisor) over 1-based row indices.
#[pyfunction]
fn estimate(data: &PyDataset, rows: Vec<usize>) -> PyResult<(Vec<f64>, Vec<Vec<f64>>)> {
    if rows.iter().any(|&i| i == 0) {
        return Err(PyValueError::new_err("row indices are 1-based"));
    }
    let subset = HSubset::new_checked(rows.iter().map(|&i| i - 1).collect(), data.inner.n())
        .map_err(to_py_err)?;
    let (t, s) = pcs_core::estimate(&data.inner, &subset).map_err(to_py_err)?;
    let p = data.inner.p();
    let scatter: Vec<Vec<f64>> = (0..p)
        .map(|r| (0..p).map(|c| s[(r, c)]).collect())
        .collect();
    Ok((t.iter().copied().collect(), scatter))
}

/// Aggregate incongruence I(H) of a 1-based h-subset under exhaustive
/// direction enumeration.
#[pyfunction]
#[pyo3(signature = (data, rows, h=None))]
fn incongruence_index(data: &PyDataset, rows: Vec<usize>, h: Option<usize>) -> PyResult<f64> {
    let hh = subset_size(&data.inner, h)?;
    if rows.iter().any(|&i| i == 0) {
        return Err(PyValueError::new_err("row indices are 1-based"));
    }
    let subset = HSubset::new_checked(rows.iter().map(|&i| i - 1).collect(), data.inner.n())
        .map_err(to_py_err)?;
    let tol = Tolerances::default();
    let caps = Caps::default();
    let dirs =
        pcs_core::enumerate_directions(&data.inner, &subset, &tol, &caps).map_err(to_py_err)?;
    let rep = pcs_core::incongruence_index(&data.inner, &subset, &dirs, hh.h, &tol)
        .map_err(to_py_err)?;
    Ok(rep.aggregate)
}

/// Replaces the last c rows with a point mass at distance L along
/// `direction` (unit-normalized; seeded random when omitted).
#[pyfunction]
#[pyo3(signature = (data, c, distance, seed, direction=None))]
fn contaminate(
    data: &PyDataset,
    c: usize,
    distance: f64,
    seed: u64,
    direction: Option<Vec<f64>>,
) -> PyResult<PyDataset> {
    let spec = ContaminationSpec::point_mass(
        c,
        distance,
        direction.map(|d| DVector::from_vec(d)),
    );
    let inner = pcs_core::contaminate(&data.inner, &spec, seed).map_err(to_py_err)?;
    Ok(PyDataset { inner })
}

#[pyfunction]
#[pyo3(signature = (data, allow_sampling=false, seed=0))]
fn check_general_position(
    data: &PyDataset,
    allow_sampling: bool,
    seed: u64,
) -> PyResult<(bool, Option<Vec<usize>>)> {
    let r = pcs_core::check_general_position(
        &data.inner,
        &Tolerances::default(),
        &Caps::default(),
        allow_sampling,
        seed,
    )
    .map_err(to_py_err)?;
    Ok((
        r.in_general_position,
        r.witness.map(|w| w.iter().map(|&i| i + 1).collect()),
    ))
}

/// One seeded affine-equivariance trial with the exact solver; returns
/// (pass, location_error, scatter_error).
#[pyfunction]
#[pyo3(signature = (data, seed, h=None))]
fn equivariance_trial(
    data: &PyDataset,
    seed: u64,
    h: Option<usize>,
) -> PyResult<(bool, f64, f64)> {
    let hh = subset_size(&data.inner, h)?;
    let settings = SweepSettings::exact(seed);
    let r = pcs_core::equivariance_trial(
        &data.inner,
        &hh,
        &settings,
        seed,
        &Tolerances::default(),
        &Caps::default(),
    )
    .map_err(to_py_err)?;
    Ok((r.pass, r.location_error, r.scatter_error))
}

#[pymodule]
fn pcs_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyDataset>()?;
    m.add_function(wrap_pyfunction!(default_h, m)?)?;
    m.add_function(wrap_pyfunction!(breakdown_bound, m)?)?;
    m.add_function(wrap_pyfunction!(solve_exact, m)?)?;
    m.add_function(wrap_pyfunction!(solve_randomized, m)?)?;
    m.add_function(wrap_pyfunction!(estimate, m)?)?;
    m.add_function(wrap_pyfunction!(incongruence_index, m)?)?;
    m.add_function(wrap_pyfunction!(contaminate, m)?)?;
    m.add_function(wrap_pyfunction!(check_general_position, m)?)?;
    m.add_function(wrap_pyfunction!(equivariance_trial, m)?)?;
    Ok(())
}
