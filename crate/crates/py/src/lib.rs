//! Python bindings for the fbpool core.
//!
//! Reports come back as plain dicts (decoded from the same JSON the CLI prints);
//! fields are wrapped in the `Field` class.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::PathBuf;

use fbpool_core::boundary::{f_flat, WeightFn};
use fbpool_core::energy::{energy_J, weiss as weiss_fn, DEFAULT_ZERO_TOL};
use fbpool_core::freeboundary::{classify_points, default_r_cls, extract_boundaries, find_pools, default_min_area};
use fbpool_core::harness::{self, default_tolerances, parse_graph, VerifyConfig};
use fbpool_core::minimize2d::{self, SolveConfig};
use fbpool_core::regdist::{self, GraphMeasureSpec};
use fbpool_core::slice1d;
use fbpool_core::{Error, Grid, ProfileParams, Rect, ScalarField2D, Weights};
use pyo3::exceptions::{PyIOError, PyIndexError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use serde::Serialize;

fn err(e: Error) -> PyErr {
    match e {
        Error::Io(e) => PyIOError::new_err(e.to_string()),
        Error::Index { .. } => PyIndexError::new_err(e.to_string()),
        Error::SolverStall { .. } | Error::Numeric(_) => PyRuntimeError::new_err(e.to_string()),
        e => PyValueError::new_err(e.to_string()),
    }
}

fn to_py<'py, T: Serialize>(py: Python<'py>, v: &T) -> PyResult<Bound<'py, PyAny>> {
    let s = serde_json::to_string(v).map_err(|e| PyValueError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (s,))
}

type RectTuple = (f64, f64, f64, f64);

fn rect_of(r: RectTuple) -> PyResult<Rect> {
    Rect::new(r.0, r.1, r.2, r.3).map_err(err)
}

/// Nodal field on a uniform grid. `values` is row-major with `x` fastest:
/// node `(i, j)` sits at index `j * (nx + 1) + i`.
#[pyclass(name = "Field", module = "fbpool", frozen)]
struct PyField {
    inner: ScalarField2D,
}

#[pymethods]
impl PyField {
    #[new]
    fn new(rect: RectTuple, nx: usize, ny: usize, values: Vec<f64>) -> PyResult<Self> {
        let grid = Grid::new(rect_of(rect)?, nx, ny).map_err(err)?;
        Ok(Self { inner: ScalarField2D::new(grid, values).map_err(err)? })
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        let f = File::open(path)?;
        Ok(Self { inner: ScalarField2D::read_dump(BufReader::new(f)).map_err(err)? })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        let mut w = BufWriter::new(File::create(path)?);
        self.inner.write_dump(&mut w).map_err(err)?;
        w.flush()?;
        Ok(())
    }

    #[getter]
    fn nx(&self) -> usize {
        self.inner.grid().nx
    }

    #[getter]
    fn ny(&self) -> usize {
        self.inner.grid().ny
    }

    #[getter]
    fn rect(&self) -> RectTuple {
        let r = self.inner.grid().rect;
        (r.x_lo, r.x_hi, r.y_lo, r.y_hi)
    }

    fn values(&self) -> Vec<f64> {
        self.inner.values().to_vec()
    }

    fn x(&self, i: usize) -> f64 {
        self.inner.grid().x(i)
    }

    fn y(&self, j: usize) -> f64 {
        self.inner.grid().y(j)
    }

    fn at(&self, i: usize, j: usize) -> PyResult<f64> {
        let g = self.inner.grid();
        if i > g.nx || j > g.ny {
            return Err(PyIndexError::new_err(format!("node ({i}, {j}) outside {} x {} cells", g.nx, g.ny)));
        }
        Ok(self.inner.at(i, j))
    }

    /// Bilinear value at `(x, y)`, or None outside the grid.
    fn interpolate(&self, x: f64, y: f64) -> Option<f64> {
        self.inner.interpolate(x, y)
    }

    fn __len__(&self) -> usize {
        self.inner.values().len()
    }

    fn __repr__(&self) -> String {
        let g = self.inner.grid();
        format!("Field({} x {} cells on {})", g.nx, g.ny, g.rect)
    }
}

#[pyclass(name = "SliceSolution", module = "fbpool", frozen, get_all)]
struct PySlice {
    f: f64,
    a: f64,
    b: f64,
    energy: f64,
}

impl From<slice1d::SliceSolution> for PySlice {
    fn from(s: slice1d::SliceSolution) -> Self {
        Self { f: s.f, a: s.a, b: s.b, energy: s.energy }
    }
}

#[pymethods]
impl PySlice {
    fn eval(&self, y: f64) -> f64 {
        slice1d::slice_value(self.f, y)
    }

    fn __repr__(&self) -> String {
        format!("SliceSolution(f={}, a={}, b={}, energy={})", self.f, self.a, self.b, self.energy)
    }
}

#[pyfunction]
fn slice_minimize(f: f64) -> PyResult<PySlice> {
    Ok(slice1d::slice_minimize(f).map_err(err)?.into())
}

#[pyfunction]
#[pyo3(signature = (f, grid_n = 2000))]
fn slice_oracle(f: f64, grid_n: usize) -> PyResult<PySlice> {
    Ok(slice1d::slice_oracle(f, grid_n).map_err(err)?.into())
}

/// Flat boundary profile at `x` for the strip of half-length `3 n`.
#[pyfunction]
#[pyo3(signature = (x, n, alpha = 0.1))]
fn profile(x: f64, n: f64, alpha: f64) -> PyResult<f64> {
    f_flat(x, &ProfileParams::new(n, alpha).map_err(err)?).map_err(err)
}

/// Minimizes the strip energy; returns the field and the run summary.
#[pyfunction]
#[pyo3(signature = (n, alpha = 0.1, hy = 1.0 / 64.0, seed = 0, max_iter = None))]
fn solve<'py>(
    py: Python<'py>,
    n: f64,
    alpha: f64,
    hy: f64,
    seed: u64,
    max_iter: Option<usize>,
) -> PyResult<(PyField, Bound<'py, PyAny>)> {
    let mut cfg = SolveConfig::new(ProfileParams::new(n, alpha).map_err(err)?, hy).map_err(err)?;
    cfg.seed = seed;
    if let Some(m) = max_iter {
        cfg.max_iter = m;
    }
    let r = py.detach(|| minimize2d::solve(&cfg)).map_err(err)?;
    let summary = to_py(py, &r.summary())?;
    Ok((PyField { inner: r.u }, summary))
}

#[pyfunction]
#[pyo3(signature = (field, q_plus = 1.0, q_minus = 1.0, sub = None, zero_tol = DEFAULT_ZERO_TOL))]
fn energy<'py>(
    py: Python<'py>,
    field: &PyField,
    q_plus: f64,
    q_minus: f64,
    sub: Option<RectTuple>,
    zero_tol: f64,
) -> PyResult<Bound<'py, PyAny>> {
    let rect = match sub {
        Some(r) => rect_of(r)?,
        None => field.inner.grid().rect,
    };
    let w = Weights::constant(q_plus, q_minus).map_err(err)?;
    to_py(py, &energy_J(&field.inner, &w, &rect, zero_tol).map_err(err)?)
}

#[pyfunction]
#[pyo3(signature = (field, center, r, q_plus = 1.0, q_minus = 1.0, zero_tol = DEFAULT_ZERO_TOL))]
fn weiss(field: &PyField, center: (f64, f64), r: f64, q_plus: f64, q_minus: f64, zero_tol: f64) -> PyResult<f64> {
    let w = Weights::constant(q_plus, q_minus).map_err(err)?;
    weiss_fn(&field.inner, &w, center, r, zero_tol).map_err(err)
}

/// Free boundaries with classified vertices, branch points and zero pools.
#[pyfunction]
#[pyo3(signature = (field, r_cls = None, zero_tol = DEFAULT_ZERO_TOL))]
fn free_boundary<'py>(py: Python<'py>, field: &PyField, r_cls: Option<f64>, zero_tol: f64) -> PyResult<Bound<'py, PyAny>> {
    let u = &field.inner;
    let g = *u.grid();
    let fb = classify_points(&extract_boundaries(u, zero_tol), &g, r_cls.unwrap_or_else(|| default_r_cls(&g))).map_err(err)?;
    let pools = find_pools(u, zero_tol, default_min_area(&g));
    let d = to_py(py, &fb)?;
    d.set_item("length", fb.length())?;
    d.set_item("pools", to_py(py, &pools)?)?;
    Ok(d)
}

/// Regularized distance to a graph given by a CLI-style spec (`flat`, `bump=0.1,1`, JSON, ...).
#[pyfunction]
#[pyo3(signature = (graph, x, y, q = 1.0, r_domain = 10.0))]
fn regdist_eval(graph: &str, x: f64, y: f64, q: f64, r_domain: f64) -> PyResult<f64> {
    let g = parse_graph(graph).map_err(err)?;
    let spec = GraphMeasureSpec::new(g, WeightFn::Constant(q), r_domain).map_err(err)?;
    regdist::regdist_eval(&spec, (x, y)).map_err(err)
}

/// Two-phase almost-minimizer built from regularized distances on `[-1, 1]^2`.
#[pyfunction]
#[pyo3(signature = (graph_plus, graph_minus = None, n = 256, q = 1.0, r_domain = 10.0))]
fn almost_minimizer(graph_plus: &str, graph_minus: Option<&str>, n: usize, q: f64, r_domain: f64) -> PyResult<PyField> {
    let gp = parse_graph(graph_plus).map_err(err)?;
    let gm = match graph_minus {
        Some(s) => parse_graph(s).map_err(err)?,
        None => gp.reflected(),
    };
    let plus = GraphMeasureSpec::new(gp, WeightFn::Constant(q), r_domain).map_err(err)?;
    let minus = GraphMeasureSpec::new(gm, WeightFn::Constant(q), r_domain).map_err(err)?;
    let grid = Grid::new(rect_of((-1.0, 1.0, -1.0, 1.0))?, n, n).map_err(err)?;
    Ok(PyField { inner: regdist::build_almost_minimizer(&plus, &minus, &grid).map_err(err)? })
}

/// Runs the verification sweep and returns the report.
#[pyfunction]
#[pyo3(signature = (n_list, alpha = 0.1, hy = 1.0 / 64.0, seed = 0, regions = 20, audit_balls = 60, expect_subcritical = false, tolerances = None))]
#[allow(clippy::too_many_arguments)]
fn verify<'py>(
    py: Python<'py>,
    n_list: Vec<f64>,
    alpha: f64,
    hy: f64,
    seed: u64,
    regions: usize,
    audit_balls: usize,
    expect_subcritical: bool,
    tolerances: Option<std::collections::BTreeMap<String, f64>>,
) -> PyResult<Bound<'py, PyAny>> {
    let mut tol = default_tolerances();
    for (k, v) in tolerances.unwrap_or_default() {
        if !tol.contains_key(&k) {
            return Err(PyValueError::new_err(format!("unknown tolerance {k:?}")));
        }
        tol.insert(k, v);
    }
    let cfg = VerifyConfig {
        n_list,
        alpha,
        hy,
        tolerances: tol,
        seed,
        n_regions: regions,
        audit_balls,
        expect_subcritical,
        ..VerifyConfig::default()
    };
    let report = py.detach(|| harness::run_verify(&cfg)).map_err(err)?;
    to_py(py, &report)
}

#[pyfunction]
#[pyo3(signature = (n_list, alpha = 0.1))]
fn radial<'py>(py: Python<'py>, n_list: Vec<f64>, alpha: f64) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &harness::radial_decay_check(&n_list, alpha).map_err(err)?)
}

#[pymodule]
fn fbpool(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyField>()?;
    m.add_class::<PySlice>()?;
    m.add_function(wrap_pyfunction!(slice_minimize, m)?)?;
    m.add_function(wrap_pyfunction!(slice_oracle, m)?)?;
    m.add_function(wrap_pyfunction!(profile, m)?)?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(energy, m)?)?;
    m.add_function(wrap_pyfunction!(weiss, m)?)?;
    m.add_function(wrap_pyfunction!(free_boundary, m)?)?;
    m.add_function(wrap_pyfunction!(regdist_eval, m)?)?;
    m.add_function(wrap_pyfunction!(almost_minimizer, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    m.add_function(wrap_pyfunction!(radial, m)?)?;
    Ok(())
}
