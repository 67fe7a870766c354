//! Python bindings: `import driftscope`.
//!
//! Structured results (verdicts, splits, normality tests) cross the boundary
//! as plain dicts and lists decoded from the library's JSON form.

use std::path::PathBuf;

use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyValueError};
use pyo3::prelude::*;

use driftscope::analysis::{analyze as run_analysis, AnalysisConfig, AnalysisResults, DatasetAnalysis};
use driftscope::chronology::NormalityMode;
use driftscope::ingest::{self, Loaded, SchemaConfig};
use driftscope::kernel::{self, KernelType, DEFAULT_KAPPA};
use driftscope::regression::{self, DesignMatrix};
use driftscope::report;
use driftscope::stats::{self, DEFAULT_ALPHA};
use driftscope::sweep::{self, DEFAULT_EPSILON};
use driftscope::synth::{self, ProcessSpec};

create_exception!(driftscope, DriftscopeError, PyException);

fn err(e: driftscope::Error) -> PyErr {
    if e.is_validation() {
        PyValueError::new_err(e.to_string())
    } else {
        DriftscopeError::new_err(e.to_string())
    }
}

fn parse_kernel(name: &str) -> PyResult<KernelType> {
    name.parse().map_err(PyValueError::new_err)
}

fn json_to_py<'py>(py: Python<'py>, value: &impl serde::Serialize) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| DriftscopeError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

/// A loaded or generated effort dataset.
#[pyclass(name = "Dataset", module = "driftscope", frozen)]
struct PyDataset {
    inner: driftscope::Dataset,
    diagnostics: Vec<ingest::Diagnostic>,
}

impl From<Loaded> for PyDataset {
    fn from(l: Loaded) -> Self {
        PyDataset {
            inner: l.dataset,
            diagnostics: l.diagnostics,
        }
    }
}

#[pymethods]
impl PyDataset {
    #[staticmethod]
    fn load_nasa93(path: PathBuf) -> PyResult<Self> {
        ingest::load_nasa93(path).map(Into::into).map_err(err)
    }

    #[staticmethod]
    fn load_desharnais(path: PathBuf) -> PyResult<Self> {
        ingest::load_desharnais(path).map(Into::into).map_err(err)
    }

    #[staticmethod]
    fn load_kitchenham(path: PathBuf) -> PyResult<Self> {
        ingest::load_kitchenham(path).map(Into::into).map_err(err)
    }

    /// Loads a CSV described by a TOML schema file.
    #[staticmethod]
    fn load_generic(path: PathBuf, schema: PathBuf) -> PyResult<Self> {
        let config = SchemaConfig::read(&schema).map_err(err)?;
        ingest::load_generic(path, &config).map(Into::into).map_err(err)
    }

    #[getter]
    fn name(&self) -> &str {
        &self.inner.name
    }

    #[getter]
    fn origin_year(&self) -> i32 {
        self.inner.origin_year
    }

    fn years(&self) -> Vec<i32> {
        self.inner.years()
    }

    fn __len__(&self) -> usize {
        self.inner.records.len()
    }

    fn __repr__(&self) -> String {
        format!(
            "Dataset(name={:?}, records={}, origin_year={})",
            self.inner.name,
            self.inner.records.len(),
            self.inner.origin_year
        )
    }

    fn records<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        json_to_py(py, &self.inner.records)
    }

    fn spec<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        json_to_py(py, &self.inner.spec)
    }

    fn diagnostics<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        json_to_py(py, &self.diagnostics)
    }

    /// Chronological splits after any start-date test filtering.
    fn splits<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        let splits = driftscope::analysis::prepare_splits(&self.inner).map_err(err)?;
        json_to_py(py, &splits)
    }
}

/// A synthetic dataset with its CSV, schema and true drift profile.
#[pyclass(name = "Synthetic", module = "driftscope", frozen)]
struct PySynthetic {
    inner: synth::Synthetic,
}

#[pymethods]
impl PySynthetic {
    #[getter]
    fn dataset(&self) -> PyDataset {
        PyDataset {
            inner: self.inner.dataset.clone(),
            diagnostics: Vec::new(),
        }
    }

    fn to_csv(&self) -> String {
        self.inner.to_csv()
    }

    fn schema_toml(&self) -> PyResult<String> {
        self.inner.schema_config().to_toml().map_err(err)
    }

    fn profile<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        json_to_py(py, &self.inner.profile)
    }
}

#[pyfunction]
#[pyo3(signature = (n_years=10, projects_per_year=10, intercept=1.0, slope=1.0, sigma=0.3, seed=0))]
fn synth_stationary(
    n_years: usize,
    projects_per_year: usize,
    intercept: f64,
    slope: f64,
    sigma: f64,
    seed: u64,
) -> PyResult<PySynthetic> {
    let spec = ProcessSpec::stationary(n_years, projects_per_year, intercept, slope, sigma, seed);
    synth::gen_stationary(&spec)
        .map(|inner| PySynthetic { inner })
        .map_err(err)
}

/// Slope ramp from `slope_from` to `slope_to`; with `switch_at`, an abrupt
/// switch to (`intercept_after`, `slope_to`) at that year offset instead.
#[pyfunction]
#[pyo3(signature = (n_years=10, projects_per_year=10, intercept=1.0, slope_from=0.5, slope_to=1.5, sigma=0.2, seed=0, switch_at=None, intercept_after=None))]
#[allow(clippy::too_many_arguments)]
fn synth_drifting(
    n_years: usize,
    projects_per_year: usize,
    intercept: f64,
    slope_from: f64,
    slope_to: f64,
    sigma: f64,
    seed: u64,
    switch_at: Option<usize>,
    intercept_after: Option<f64>,
) -> PyResult<PySynthetic> {
    let spec = match switch_at {
        Some(at) => ProcessSpec::regime_switch(
            n_years,
            projects_per_year,
            (intercept, slope_from),
            (intercept_after.unwrap_or(intercept), slope_to),
            at,
            sigma,
            seed,
        ),
        None => ProcessSpec::slope_ramp(n_years, projects_per_year, intercept, slope_from, slope_to, sigma, seed),
    };
    synth::gen_drifting(&spec)
        .map(|inner| PySynthetic { inner })
        .map_err(err)
}

/// Results of a full analysis of one dataset.
#[pyclass(name = "Analysis", module = "driftscope", frozen)]
struct PyAnalysis {
    config: AnalysisConfig,
    inner: DatasetAnalysis,
}

impl PyAnalysis {
    fn results(&self) -> AnalysisResults {
        AnalysisResults {
            config: self.config.clone(),
            analyses: vec![self.inner.clone()],
        }
    }
}

#[pymethods]
impl PyAnalysis {
    fn verdicts<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        json_to_py(py, &self.inner.verdicts)
    }

    /// Per-kernel majority verdicts over splits.
    fn summary<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        json_to_py(py, &self.inner.summary)
    }

    fn agreement<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        json_to_py(py, &self.inner.agreement)
    }

    fn curves<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        json_to_py(py, &self.inner.curves)
    }

    fn verdict_table(&self) -> String {
        sweep::verdict_table(&self.inner.verdicts)
    }

    fn to_json(&self) -> PyResult<String> {
        self.results().to_json().map_err(err)
    }

    /// Markdown report and its SVG assets keyed by relative path.
    fn report(&self) -> PyResult<(String, std::collections::BTreeMap<String, String>)> {
        let r = report::render_report(&self.results()).map_err(err)?;
        Ok((r.markdown, r.assets))
    }

    fn __repr__(&self) -> String {
        format!(
            "Analysis(dataset={:?}, splits={}, verdicts={})",
            self.inner.dataset,
            self.inner.splits.len(),
            self.inner.verdicts.len()
        )
    }
}

#[pyfunction]
#[pyo3(signature = (dataset, kernels=None, bandwidths=None, epsilon=DEFAULT_EPSILON, kappa=DEFAULT_KAPPA, alpha=DEFAULT_ALPHA, mode="paper_fixed", jobs=None))]
#[allow(clippy::too_many_arguments)]
fn analyze(
    py: Python<'_>,
    dataset: &PyDataset,
    kernels: Option<Vec<String>>,
    bandwidths: Option<Vec<f64>>,
    epsilon: f64,
    kappa: f64,
    alpha: f64,
    mode: &str,
    jobs: Option<usize>,
) -> PyResult<PyAnalysis> {
    let defaults = AnalysisConfig::default();
    let config = AnalysisConfig {
        kernels: match kernels {
            Some(names) => names.iter().map(|k| parse_kernel(k)).collect::<PyResult<_>>()?,
            None => defaults.kernels.clone(),
        },
        bandwidths: bandwidths.unwrap_or_else(|| defaults.bandwidths.clone()),
        epsilon,
        kappa,
        alpha,
        mode: mode.parse::<NormalityMode>().map_err(PyValueError::new_err)?,
        jobs,
        ..defaults
    };
    let data = &dataset.inner;
    let inner = py
        .detach(|| run_analysis(data, &config))
        .map_err(err)?;
    Ok(PyAnalysis { config, inner })
}

#[pyfunction]
fn kernel_weight(kernel: &str, t: f64) -> PyResult<f64> {
    Ok(kernel::kernel_weight(parse_kernel(kernel)?, t))
}

#[pyfunction]
fn scaled_time(i: i32, j: i32, bandwidth: f64) -> PyResult<f64> {
    kernel::scaled_time(i, j, bandwidth).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (kernel, bandwidth, kappa=DEFAULT_KAPPA))]
fn decay_horizon(kernel: &str, bandwidth: f64, kappa: f64) -> PyResult<f64> {
    kernel::decay_horizon(parse_kernel(kernel)?, bandwidth, kappa).map_err(err)
}

#[pyfunction]
fn relative_error(predicted: Vec<f64>, measured: Vec<f64>) -> PyResult<f64> {
    stats::relative_error(&predicted, &measured).map_err(err)
}

#[pyfunction]
fn sample_variance(values: Vec<f64>) -> PyResult<f64> {
    stats::sample_variance(&values).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (sample, alpha=DEFAULT_ALPHA))]
fn shapiro_wilk<'py>(py: Python<'py>, sample: Vec<f64>, alpha: f64) -> PyResult<Bound<'py, PyAny>> {
    let result = stats::shapiro_wilk(&sample, alpha).map_err(err)?;
    json_to_py(py, &result)
}

/// Weighted least squares on a row-major design (include an intercept
/// column yourself). Returns coefficients and fit diagnostics.
#[pyfunction]
fn fit_wls<'py>(
    py: Python<'py>,
    rows: Vec<Vec<f64>>,
    response: Vec<f64>,
    weights: Vec<f64>,
) -> PyResult<Bound<'py, PyAny>> {
    let cols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != cols) {
        return Err(PyValueError::new_err("rows have different lengths"));
    }
    let design = DesignMatrix {
        column_names: (0..cols).map(|j| format!("x{j}")).collect(),
        row_record_ids: (0..rows.len()).map(|i| i.to_string()).collect(),
        rows,
        response,
    };
    let fit = regression::fit_weighted(&design, &weights).map_err(err)?;
    json_to_py(py, &fit)
}

/// Weight curves as an SVG document.
#[pyfunction]
fn render_weight_curves(kernel: &str, bandwidths: Vec<f64>, max_years: u32) -> PyResult<String> {
    report::render_weight_curves(parse_kernel(kernel)?, &bandwidths, max_years).map_err(err)
}

#[pymodule]
#[pyo3(name = "driftscope")]
fn driftscope_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("DriftscopeError", m.py().get_type::<DriftscopeError>())?;
    m.add("KERNELS", KernelType::ALL.map(|k| k.as_str()).to_vec())?;
    m.add_class::<PyDataset>()?;
    m.add_class::<PySynthetic>()?;
    m.add_class::<PyAnalysis>()?;
    m.add_function(wrap_pyfunction!(analyze, m)?)?;
    m.add_function(wrap_pyfunction!(synth_stationary, m)?)?;
    m.add_function(wrap_pyfunction!(synth_drifting, m)?)?;
    m.add_function(wrap_pyfunction!(kernel_weight, m)?)?;
    m.add_function(wrap_pyfunction!(scaled_time, m)?)?;
    m.add_function(wrap_pyfunction!(decay_horizon, m)?)?;
    m.add_function(wrap_pyfunction!(relative_error, m)?)?;
    m.add_function(wrap_pyfunction!(sample_variance, m)?)?;
    m.add_function(wrap_pyfunction!(shapiro_wilk, m)?)?;
    m.add_function(wrap_pyfunction!(fit_wls, m)?)?;
    m.add_function(wrap_pyfunction!(render_weight_curves, m)?)?;
    Ok(())
}
