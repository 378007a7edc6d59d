//! Python bindings: measures, time families, order checks and the embedding.

use std::path::PathBuf;
use std::sync::Arc;

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use peacock::azema_yor::{simulate_embedding, PathConfig};
use peacock::cli::{Overrides, RunConfig};
use peacock::constructions::scale_family;
use peacock::grids::default_x_grid;
use peacock::measures::{measure_from_isf as invert_isf, Analytic, IsfCurve, Measure, TimeFamily};
use peacock::mrl::{check_family_mrl, check_madan_yor, check_peacock, try_mrl_psi};
use peacock::rng::StreamId;
use peacock::totalpos::{isf_tp2_check, tp2_check as scan, ScanMode, Tp2Grid};
use peacock::verdict::{OrderVerdict, Tol};

fn err(e: peacock::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn verdict<'py>(py: Python<'py>, v: &OrderVerdict) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("holds", v.holds)?;
    d.set_item("worst_violation", v.worst_violation)?;
    d.set_item("witness", v.witness.map(|w| w.to_string()))?;
    d.set_item("checked", v.checked)?;
    Ok(d)
}

#[pyclass(name = "Measure", module = "peacock_py", from_py_object)]
#[derive(Clone)]
pub struct PyMeasure {
    inner: Measure,
}

fn analytic(law: Analytic) -> PyResult<PyMeasure> {
    Measure::analytic(law).map(|inner| PyMeasure { inner }).map_err(err)
}

#[pymethods]
impl PyMeasure {
    #[staticmethod]
    #[pyo3(signature = (mean = 0.0, sd = 1.0))]
    fn gaussian(mean: f64, sd: f64) -> PyResult<Self> {
        analytic(Analytic::Gaussian { mean, sd })
    }

    #[staticmethod]
    #[pyo3(signature = (rate = 1.0))]
    fn exponential(rate: f64) -> PyResult<Self> {
        analytic(Analytic::Exponential { rate })
    }

    #[staticmethod]
    #[pyo3(signature = (shape, scale = 1.0))]
    fn gamma(shape: f64, scale: f64) -> PyResult<Self> {
        analytic(Analytic::Gamma { shape, scale })
    }

    #[staticmethod]
    fn beta(a: f64, b: f64) -> PyResult<Self> {
        analytic(Analytic::Beta { a, b })
    }

    #[staticmethod]
    fn student_t(dof: f64) -> PyResult<Self> {
        analytic(Analytic::StudentT { dof })
    }

    #[staticmethod]
    #[pyo3(signature = (rate = 1.0))]
    fn laplace(rate: f64) -> PyResult<Self> {
        analytic(Analytic::Laplace { rate })
    }

    #[staticmethod]
    fn uniform(lo: f64, hi: f64) -> PyResult<Self> {
        analytic(Analytic::Uniform { lo, hi })
    }

    #[staticmethod]
    fn lognormal(mu: f64, sigma: f64) -> PyResult<Self> {
        analytic(Analytic::LogNormal { mu, sigma })
    }

    #[staticmethod]
    fn atomic(atoms: Vec<f64>, masses: Vec<f64>) -> PyResult<Self> {
        Measure::atomic(atoms, masses).map(|inner| PyMeasure { inner }).map_err(err)
    }

    #[staticmethod]
    fn dirac(x: f64) -> Self {
        PyMeasure { inner: Measure::dirac(x) }
    }

    /// Law of `scale * X + shift`, `scale >= 0`.
    fn affine(&self, scale: f64, shift: f64) -> PyResult<Self> {
        Measure::affine(self.inner.clone(), scale, shift).map(|inner| PyMeasure { inner }).map_err(err)
    }

    /// Shifted copy with mean zero.
    fn centered(&self) -> PyResult<Self> {
        let m = self.inner.mean().map_err(err)?;
        self.affine(1.0, -m)
    }

    fn mean(&self) -> PyResult<f64> {
        self.inner.mean().map_err(err)
    }

    fn survival(&self, x: f64) -> f64 {
        self.inner.survival(x)
    }

    /// `E[(X - x)^+]`.
    fn isf(&self, x: f64) -> PyResult<f64> {
        self.inner.isf(x).map_err(err)
    }

    fn mrl(&self, x: f64) -> PyResult<f64> {
        try_mrl_psi(&self.inner, x).map(|p| p.0).map_err(err)
    }

    fn psi(&self, x: f64) -> PyResult<f64> {
        try_mrl_psi(&self.inner, x).map(|p| p.1).map_err(err)
    }

    fn quantile(&self, p: f64) -> f64 {
        self.inner.quantile(p)
    }

    #[pyo3(signature = (n, seed = 0))]
    fn sample(&self, n: usize, seed: u64) -> PyResult<Vec<f64>> {
        self.inner.sample(n, StreamId::new(seed, 0)).map_err(err)
    }

    fn __repr__(&self) -> String {
        format!("Measure({})", self.inner.name())
    }
}

#[pyclass(name = "Family", module = "peacock_py", from_py_object)]
#[derive(Clone)]
pub struct PyFamily {
    inner: TimeFamily,
}

impl PyFamily {
    fn grid(&self, xs: Option<Vec<f64>>) -> PyResult<Vec<f64>> {
        match xs {
            Some(xs) => Ok(xs),
            None => Ok(default_x_grid(&self.inner.marginals().map_err(err)?, 257)),
        }
    }
}

#[pymethods]
impl PyFamily {
    /// `t -> t * Y` for a centered `Y`.
    #[staticmethod]
    fn scale(base: &PyMeasure, times: Vec<f64>) -> PyResult<Self> {
        scale_family(base.inner.clone(), Arc::new(|t| t), times).map(|inner| PyFamily { inner }).map_err(err)
    }

    /// Family described by the `[family]` section of an INI document.
    #[staticmethod]
    #[pyo3(signature = (text, base_dir = None))]
    fn from_config(text: &str, base_dir: Option<PathBuf>) -> PyResult<Self> {
        let cfg = RunConfig::parse(text, base_dir.unwrap_or_else(|| PathBuf::from(".")), &Overrides::default())
            .map_err(err)?;
        cfg.family().map(|inner| PyFamily { inner }).map_err(err)
    }

    fn times(&self) -> Vec<f64> {
        self.inner.times().to_vec()
    }

    fn marginal(&self, t: f64) -> PyResult<PyMeasure> {
        self.inner.marginal_at(t).map(|inner| PyMeasure { inner }).map_err(err)
    }

    #[pyo3(signature = (n = 257))]
    fn x_grid(&self, n: usize) -> PyResult<Vec<f64>> {
        Ok(default_x_grid(&self.inner.marginals().map_err(err)?, n))
    }

    #[pyo3(signature = (xs = None, rel = 1e-9))]
    fn check_mrl<'py>(&self, py: Python<'py>, xs: Option<Vec<f64>>, rel: f64) -> PyResult<Bound<'py, PyDict>> {
        let xs = self.grid(xs)?;
        verdict(py, &check_family_mrl(&self.inner, &xs, Tol::new(rel)).map_err(err)?)
    }

    #[pyo3(signature = (xs = None, rel = 1e-9))]
    fn check_peacock<'py>(&self, py: Python<'py>, xs: Option<Vec<f64>>, rel: f64) -> PyResult<Bound<'py, PyDict>> {
        let xs = self.grid(xs)?;
        verdict(py, &check_peacock(&self.inner, &xs, Tol::new(rel)).map_err(err)?)
    }

    #[pyo3(signature = (xs = None, rel = 1e-9))]
    fn isf_tp2<'py>(&self, py: Python<'py>, xs: Option<Vec<f64>>, rel: f64) -> PyResult<Bound<'py, PyDict>> {
        let xs = self.grid(xs)?;
        verdict(py, &isf_tp2_check(&self.inner, &xs, Tol::new(rel)).map_err(err)?)
    }

    fn __repr__(&self) -> String {
        format!("Family({}, {} times)", self.inner.label(), self.inner.times().len())
    }
}

/// All-pairs TP2 scan of a matrix given as a list of rows.
#[pyfunction]
#[pyo3(signature = (matrix, rows = None, cols = None, rel = 1e-9))]
fn tp2_check<'py>(
    py: Python<'py>,
    matrix: Vec<Vec<f64>>,
    rows: Option<Vec<f64>>,
    cols: Option<Vec<f64>>,
    rel: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let n = matrix.first().map_or(0, Vec::len);
    let rows = rows.unwrap_or_else(|| (0..matrix.len()).map(|i| i as f64).collect());
    let cols = cols.unwrap_or_else(|| (0..n).map(|j| j as f64).collect());
    let grid = Tp2Grid::from_rows(rows, cols, matrix).map_err(err)?;
    verdict(py, &scan(&grid, ScanMode::AllPairs, Tol::new(rel)).map_err(err)?)
}

#[pyfunction]
#[pyo3(signature = (measure, a_grid, rel = 1e-9))]
fn madan_yor<'py>(py: Python<'py>, measure: &PyMeasure, a_grid: Vec<f64>, rel: f64) -> PyResult<Bound<'py, PyDict>> {
    verdict(py, &check_madan_yor(&measure.inner, &a_grid, Tol::new(rel)).map_err(err)?)
}

/// Law whose integrated survival function interpolates `(xs, cs)` with mean `asymptote`.
#[pyfunction]
fn measure_from_isf(xs: Vec<f64>, cs: Vec<f64>, asymptote: f64) -> PyResult<PyMeasure> {
    invert_isf(&IsfCurve::new(xs, cs, asymptote)).map(|inner| PyMeasure { inner }).map_err(err)
}

/// Simulates the embedding and returns its summary statistics.
#[pyfunction]
#[pyo3(signature = (family, times, paths = 100_000, dt = 1e-3, seed = 0, v_max = 1e4))]
fn embed<'py>(
    py: Python<'py>,
    family: &PyFamily,
    times: Vec<f64>,
    paths: usize,
    dt: f64,
    seed: u64,
    v_max: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let cfg = PathConfig { dt, v_max, paths, seed };
    let fam = family.inner.clone();
    let report = py.detach(|| simulate_embedding(&fam, &times, cfg)).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("times", report.times.clone())?;
    d.set_item("ks", report.ks.clone())?;
    d.set_item("ks_threshold", report.ks_threshold())?;
    let censored: Vec<f64> = (0..report.times.len()).map(|k| report.censored_fraction(k)).collect();
    d.set_item("censored_fraction", censored)?;
    d.set_item("violation_rate", report.violation_rate())?;
    let bins: Vec<bool> = report.martingale.iter().map(|m| m.as_ref().is_ok_and(|t| t.passes())).collect();
    d.set_item("martingale_ok", bins)?;
    d.set_item("passes", report.passes())?;
    let stops: Vec<Vec<f64>> = (0..report.times.len())
        .map(|k| (0..report.paths()).map(|p| report.stop(p, k).m).collect())
        .collect();
    d.set_item("stopped_values", stops)?;
    Ok(d)
}

#[pymodule]
fn peacock_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyMeasure>()?;
    m.add_class::<PyFamily>()?;
    m.add_function(wrap_pyfunction!(tp2_check, m)?)?;
    m.add_function(wrap_pyfunction!(madan_yor, m)?)?;
    m.add_function(wrap_pyfunction!(measure_from_isf, m)?)?;
    m.add_function(wrap_pyfunction!(embed, m)?)?;
    Ok(())
}
