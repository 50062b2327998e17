//! Python bindings: the model, its statistics and the calibration objective.

use lobcal_core::calibrate::calibrate;
use lobcal_core::data::{bars_1min, parse_ticks, SessionWindow};
use lobcal_core::model::{self, RunConfig};
use lobcal_core::objective::{evaluate, ObjectiveSettings, ObjectiveSpec, WeightSettings};
use lobcal_core::search::{self, FreeParam, GeneticConfig, NelderMeadConfig, ParamBounds, SearchConfig};
use lobcal_core::stats;
use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

create_exception!(
    lobcal,
    LobcalError,
    PyException,
    "Numeric or data failure in the core library."
);

fn err(e: lobcal_core::Error) -> PyErr {
    match e {
        lobcal_core::Error::InvalidParameter { .. } => PyValueError::new_err(e.to_string()),
        _ => LobcalError::new_err(e.to_string()),
    }
}

/// The seven model parameters.
#[pyclass(name = "ModelParams", module = "lobcal", eq, skip_from_py_object)]
#[derive(Clone, Copy, PartialEq)]
struct PyModelParams {
    #[pyo3(get, set)]
    n_agents: u32,
    #[pyo3(get, set)]
    delta: f64,
    #[pyo3(get, set)]
    lambda0: f64,
    #[pyo3(get, set)]
    c_lambda: u32,
    #[pyo3(get, set)]
    delta_s: f64,
    #[pyo3(get, set)]
    alpha: f64,
    #[pyo3(get, set)]
    mu: f64,
}

impl From<model::ModelParams> for PyModelParams {
    fn from(p: model::ModelParams) -> Self {
        PyModelParams {
            n_agents: p.n_agents,
            delta: p.delta,
            lambda0: p.lambda0,
            c_lambda: p.c_lambda,
            delta_s: p.delta_s,
            alpha: p.alpha,
            mu: p.mu,
        }
    }
}

impl From<&PyModelParams> for model::ModelParams {
    fn from(p: &PyModelParams) -> Self {
        model::ModelParams {
            n_agents: p.n_agents,
            delta: p.delta,
            lambda0: p.lambda0,
            c_lambda: p.c_lambda,
            delta_s: p.delta_s,
            alpha: p.alpha,
            mu: p.mu,
        }
    }
}

#[pymethods]
impl PyModelParams {
    /// Keyword arguments override the default parameter set.
    #[new]
    #[pyo3(signature = (**kwargs))]
    fn new(kwargs: Option<&Bound<'_, PyDict>>) -> PyResult<Self> {
        let mut p = PyModelParams::from(model::ModelParams::default());
        if let Some(kw) = kwargs {
            for (k, v) in kw.iter() {
                let key: String = k.extract()?;
                match key.as_str() {
                    "n_agents" => p.n_agents = v.extract()?,
                    "delta" => p.delta = v.extract()?,
                    "lambda0" => p.lambda0 = v.extract()?,
                    "c_lambda" => p.c_lambda = v.extract()?,
                    "delta_s" => p.delta_s = v.extract()?,
                    "alpha" => p.alpha = v.extract()?,
                    "mu" => p.mu = v.extract()?,
                    _ => return Err(PyValueError::new_err(format!("unknown parameter `{key}`"))),
                }
            }
        }
        Ok(p)
    }

    #[staticmethod]
    fn default() -> Self {
        model::ModelParams::default().into()
    }

    /// Best set found by the simplex calibrations.
    #[staticmethod]
    fn calibrated() -> Self {
        model::ModelParams::calibrated().into()
    }

    fn validate(&self) -> PyResult<()> {
        model::ModelParams::from(self).validate().map_err(err)
    }

    fn __repr__(&self) -> String {
        format!(
            "ModelParams(n_agents={}, delta={}, lambda0={}, c_lambda={}, delta_s={}, alpha={}, mu={})",
            self.n_agents, self.delta, self.lambda0, self.c_lambda, self.delta_s, self.alpha, self.mu
        )
    }
}

fn moments_dict<'py>(py: Python<'py>, m: &stats::MomentVector) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("mean", m.mean)?;
    d.set_item("std", m.std)?;
    d.set_item("kurtosis", m.kurtosis)?;
    d.set_item("ks", m.ks)?;
    d.set_item("hurst", m.hurst)?;
    Ok(d)
}

/// Run the model; returns log prices, trade signs and per-step diagnostics.
#[pyfunction]
#[pyo3(signature = (params, steps = 2300, seed = 0, p0 = 24_700, tick_size = 0.01, q_var_steps = 100_000))]
fn simulate<'py>(
    py: Python<'py>,
    params: PyRef<'py, PyModelParams>,
    steps: usize,
    seed: u64,
    p0: u32,
    tick_size: f64,
    q_var_steps: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let p = model::ModelParams::from(&*params);
    let config = RunConfig {
        steps,
        seed,
        p0,
        tick_size,
        q_var_steps,
        ..RunConfig::default()
    };
    let out = py.detach(|| model::simulate(&p, &config)).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("log_prices", &out.log_prices)?;
    d.set_item("trade_signs", &out.trade_signs)?;
    d.set_item("q_var", out.q_var)?;
    d.set_item(
        "lambda_t",
        out.diagnostics.iter().map(|r| r.lambda_t).collect::<Vec<_>>(),
    )?;
    d.set_item("q_taker", out.diagnostics.iter().map(|r| r.q_taker).collect::<Vec<_>>())?;
    d.set_item("carried_forward", out.carried_forward_steps())?;
    Ok(d)
}

/// Mean, std, kurtosis, KS distance to `empirical` and Hurst exponent.
#[pyfunction]
#[pyo3(signature = (series, empirical = None))]
fn moments<'py>(py: Python<'py>, series: Vec<f64>, empirical: Option<Vec<f64>>) -> PyResult<Bound<'py, PyDict>> {
    let reference = empirical.as_deref().unwrap_or(&series);
    let m = stats::moments(&series, reference).map_err(err)?;
    moments_dict(py, &m)
}

#[pyfunction]
fn ks_statistic(a: Vec<f64>, b: Vec<f64>) -> f64 {
    stats::ks_statistic(&a, &b)
}

#[pyfunction]
fn generalized_hurst(series: Vec<f64>) -> PyResult<f64> {
    stats::generalized_hurst(&series).map_err(err)
}

/// Autocorrelation at lags 1..=max_lag and the 95% noise band.
#[pyfunction]
#[pyo3(signature = (series, max_lag = 100))]
fn acf(series: Vec<f64>, max_lag: usize) -> PyResult<(Vec<f64>, f64)> {
    let r = stats::acf(&series, max_lag).map_err(err)?;
    Ok((r.values, r.noise_band))
}

#[pyfunction]
#[pyo3(signature = (series, max_lag = 100))]
fn ensemble_acf(series: Vec<Vec<i8>>, max_lag: usize) -> PyResult<(Vec<f64>, f64)> {
    let r = stats::ensemble_acf(&series, max_lag).map_err(err)?;
    Ok((r.values, r.noise_band))
}

/// Student-t interval of the mean: `(lower, upper, std_err)`.
#[pyfunction]
#[pyo3(signature = (samples, level = 0.95))]
fn confidence_interval(samples: Vec<f64>, level: f64) -> PyResult<(f64, f64, f64)> {
    let ci = stats::confidence_interval(&samples, level).map_err(err)?;
    Ok((ci.lower, ci.upper, ci.std_err))
}

#[pyfunction]
fn sobol_2d(n: usize) -> Vec<(f64, f64)> {
    search::sobol_2d(n).into_iter().map(|[x, y]| (x, y)).collect()
}

/// One-minute log-price bars of a tick CSV, session window in minutes.
#[pyfunction]
#[pyo3(signature = (path, start_minute = 550, end_minute = 1010))]
fn bars_from_ticks(path: std::path::PathBuf, start_minute: u32, end_minute: u32) -> PyResult<Vec<f64>> {
    let file = std::fs::File::open(&path)?;
    let ticks = parse_ticks(std::io::BufReader::new(file)).map_err(err)?;
    let window = SessionWindow {
        start_minute,
        end_minute,
    };
    Ok(bars_1min(&ticks, &window).map_err(err)?.log_prices())
}

/// Simulated-moments objective against one empirical log-price series.
#[pyclass(name = "Objective", module = "lobcal", frozen)]
struct PyObjective {
    spec: ObjectiveSpec,
}

#[pymethods]
impl PyObjective {
    #[new]
    #[pyo3(signature = (empirical, tick_size = 0.01, replications = 5, seed_base = 1, q_var_steps = 100_000, block_len = 100, resamples = 2000, bootstrap_seed = 0))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        py: Python<'_>,
        empirical: Vec<f64>,
        tick_size: f64,
        replications: usize,
        seed_base: u64,
        q_var_steps: usize,
        block_len: usize,
        resamples: usize,
        bootstrap_seed: u64,
    ) -> PyResult<Self> {
        let weights = WeightSettings {
            block_len,
            resamples,
            seed: bootstrap_seed,
            ..WeightSettings::default()
        }
        .fitted_to(empirical.len());
        let settings = ObjectiveSettings {
            replications,
            seed_base,
            q_var_steps,
            ..ObjectiveSettings::default()
        };
        let spec = py
            .detach(|| ObjectiveSpec::build(empirical, tick_size, &weights, settings))
            .map_err(err)?;
        Ok(PyObjective { spec })
    }

    /// Objective value; penalized points return the penalty constant.
    fn __call__(&self, py: Python<'_>, params: PyRef<'_, PyModelParams>) -> f64 {
        let p = model::ModelParams::from(&*params);
        py.detach(|| evaluate(&p, &self.spec)).value
    }

    fn evaluate<'py>(&self, py: Python<'py>, params: PyRef<'py, PyModelParams>) -> PyResult<Bound<'py, PyDict>> {
        let p = model::ModelParams::from(&*params);
        let ev = py.detach(|| evaluate(&p, &self.spec));
        let d = PyDict::new(py);
        d.set_item("value", ev.value)?;
        d.set_item("penalized", ev.penalized)?;
        d.set_item("failure", ev.failure)?;
        Ok(d)
    }

    #[getter]
    fn target<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        moments_dict(py, &self.spec.target)
    }

    #[getter]
    fn p0(&self) -> u32 {
        self.spec.alignment.p0
    }

    #[getter]
    fn weight_matrix(&self) -> Vec<Vec<f64>> {
        self.spec.weights.matrix.iter().map(|r| r.to_vec()).collect()
    }

    /// Run one search. `method` is "ga" or "nm"; `bounds` maps parameter
    /// names to `(lower, upper)`. Returns final parameters and objective.
    #[pyo3(signature = (base, free, method = "ga", seed = 1, bounds = None, population = 30, generations = 20, iterations = 50))]
    #[allow(clippy::too_many_arguments)]
    fn calibrate<'py>(
        &self,
        py: Python<'py>,
        base: PyRef<'py, PyModelParams>,
        free: Vec<String>,
        method: &str,
        seed: u64,
        bounds: Option<std::collections::HashMap<String, (f64, f64)>>,
        population: usize,
        generations: usize,
        iterations: usize,
    ) -> PyResult<Bound<'py, PyDict>> {
        let free: Vec<FreeParam> = free.iter().map(|s| s.parse().map_err(err)).collect::<PyResult<_>>()?;
        let mut pb = ParamBounds::default();
        for (name, (lo, hi)) in bounds.unwrap_or_default() {
            let p: FreeParam = name.parse().map_err(err)?;
            pb.set(p, search::Bounds::new(lo, hi).map_err(err)?);
        }
        let config = match method {
            "ga" => SearchConfig::Genetic(GeneticConfig {
                population,
                generations,
                ..GeneticConfig::default()
            }),
            "nm" => SearchConfig::NelderMead(NelderMeadConfig {
                iterations,
                ..NelderMeadConfig::default()
            }),
            _ => return Err(PyValueError::new_err(format!("unknown method `{method}`"))),
        };
        let base = model::ModelParams::from(&*base);
        let (exp, _) = py.detach(|| calibrate(&self.spec, &base, &free, &pb, &config, seed, false));
        let d = PyDict::new(py);
        let params = PyDict::new(py);
        for (name, v) in exp.parameters.iter().zip(&exp.final_params) {
            params.set_item(name, v)?;
        }
        d.set_item("params", params)?;
        d.set_item("objective", exp.final_objective)?;
        d.set_item("evaluations", exp.evaluations)?;
        d.set_item(
            "trajectory",
            exp.trajectory.iter().map(|t| t.best_objective).collect::<Vec<_>>(),
        )?;
        Ok(d)
    }
}

#[pymodule]
fn lobcal(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("LobcalError", m.py().get_type::<LobcalError>())?;
    m.add_class::<PyModelParams>()?;
    m.add_class::<PyObjective>()?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(moments, m)?)?;
    m.add_function(wrap_pyfunction!(ks_statistic, m)?)?;
    m.add_function(wrap_pyfunction!(generalized_hurst, m)?)?;
    m.add_function(wrap_pyfunction!(acf, m)?)?;
    m.add_function(wrap_pyfunction!(ensemble_acf, m)?)?;
    m.add_function(wrap_pyfunction!(confidence_interval, m)?)?;
    m.add_function(wrap_pyfunction!(sobol_2d, m)?)?;
    m.add_function(wrap_pyfunction!(bars_from_ticks, m)?)?;
    Ok(())
}
