//! Python bindings. Structured results come back as plain dicts built from
//! the same serialized form the CLI writes.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyAny;
use serde::Serialize;

use sdp_bounds::montecarlo::{self, MonteCarloConfig};
use sdp_bounds::report::{self, EvalConfig, PointInputs};
use sdp_bounds::{chernoff, hazard, ingest, ReliabilityMode, TimePoint};

fn err(e: sdp_bounds::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_py<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyValueError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn mode(name: &str) -> PyResult<ReliabilityMode> {
    name.parse().map_err(err)
}

fn time(t: f64) -> PyResult<TimePoint> {
    TimePoint::new(t).map_err(err)
}

/// Defective-but-predicted-clean count model: `X ~ Binomial(l, p)`.
#[pyclass(frozen, module = "sdpbounds")]
struct FailurePopulation(sdp_bounds::FailurePopulation);

#[pymethods]
impl FailurePopulation {
    #[new]
    fn new(l: u64, p: f64) -> PyResult<Self> {
        sdp_bounds::FailurePopulation::new(l, p)
            .map(Self)
            .map_err(err)
    }

    #[getter]
    fn l(&self) -> u64 {
        self.0.l()
    }

    #[getter]
    fn p(&self) -> f64 {
        self.0.p()
    }

    fn expected_failures(&self) -> f64 {
        self.0.expected_failures()
    }

    fn pmf(&self, k: u64) -> PyResult<f64> {
        self.0.pmf(k).map_err(err)
    }

    /// `Pr[X < threshold]`.
    fn cdf_below(&self, threshold: f64) -> f64 {
        self.0.cdf_below(threshold)
    }

    fn __repr__(&self) -> String {
        format!("FailurePopulation(l={}, p={})", self.0.l(), self.0.p())
    }
}

/// Weibull hazard `K t^m`.
#[pyclass(frozen, module = "sdpbounds")]
struct WeibullParams(sdp_bounds::WeibullParams);

#[pymethods]
impl WeibullParams {
    #[new]
    fn new(k: f64, m: f64) -> PyResult<Self> {
        sdp_bounds::WeibullParams::new(k, m).map(Self).map_err(err)
    }

    fn hazard(&self, t: f64) -> PyResult<f64> {
        self.0.hazard(time(t)?).map_err(err)
    }

    fn cumulative_hazard(&self, t: f64) -> PyResult<f64> {
        Ok(self.0.cumulative_hazard(time(t)?))
    }

    fn reliability(&self, t: f64) -> PyResult<f64> {
        Ok(self.0.reliability(time(t)?))
    }

    fn __repr__(&self) -> String {
        format!(
            "WeibullParams(K={}, m={})",
            self.0.scale_k(),
            self.0.shape_m()
        )
    }
}

#[pyfunction]
fn false_omission_rate(fn_count: u64, tn_count: u64) -> PyResult<f64> {
    ingest::ConfusionCounts::new(fn_count, tn_count)
        .false_omission_rate()
        .map_err(err)
}

#[pyfunction]
fn validate_assumptions(
    py: Python<'_>,
    fn_count: u64,
    tn_count: u64,
) -> PyResult<Bound<'_, PyAny>> {
    to_py(
        py,
        &ingest::validate_assumptions(&ingest::ConfusionCounts::new(fn_count, tn_count)),
    )
}

/// Parse `module_id,predicted[,actual]` CSV text into a list of dicts.
#[pyfunction]
fn parse_records<'py>(py: Python<'py>, text: &str) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &ingest::parse_records(text).map_err(err)?)
}

#[pyfunction]
fn parse_confusion<'py>(py: Python<'py>, text: &str) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &ingest::parse_confusion(text).map_err(err)?)
}

fn model(l: u64, p: f64, k_hat: f64, m_hat: f64) -> PyResult<hazard::CombinedHazardModel> {
    let pop = sdp_bounds::FailurePopulation::new(l, p).map_err(err)?;
    let residual = sdp_bounds::WeibullParams::named(k_hat, m_hat, "K_hat", "m_hat").map_err(err)?;
    Ok(hazard::CombinedHazardModel::new(residual, pop))
}

#[pyfunction]
#[pyo3(signature = (l, p, K_hat, m_hat, t))]
#[allow(non_snake_case)]
fn expected_sdp_reliability_exact(l: u64, p: f64, K_hat: f64, m_hat: f64, t: f64) -> PyResult<f64> {
    Ok(model(l, p, K_hat, m_hat)?.expected_reliability_exact(time(t)?))
}

#[pyfunction]
#[pyo3(signature = (l, p, K_hat, m_hat, t, mode="as-stated"))]
#[allow(non_snake_case)]
fn expected_sdp_reliability_bound(
    l: u64,
    p: f64,
    K_hat: f64,
    m_hat: f64,
    t: f64,
    mode: &str,
) -> PyResult<f64> {
    Ok(model(l, p, K_hat, m_hat)?.expected_reliability_bound(time(t)?, self::mode(mode)?))
}

struct Point {
    pop: sdp_bounds::FailurePopulation,
    manual: sdp_bounds::WeibullParams,
    residual: sdp_bounds::WeibullParams,
    t: TimePoint,
}

fn point(l: u64, p: f64, k: f64, m: f64, k_hat: f64, m_hat: f64, t: f64) -> PyResult<Point> {
    Ok(Point {
        pop: sdp_bounds::FailurePopulation::new(l, p).map_err(err)?,
        manual: sdp_bounds::WeibullParams::named(k, m, "K", "m").map_err(err)?,
        residual: sdp_bounds::WeibullParams::named(k_hat, m_hat, "K_hat", "m_hat").map_err(err)?,
        t: time(t)?,
    })
}

/// Bound on `Pr[expected SDP hazard < manual hazard]`.
#[pyfunction]
#[pyo3(signature = (l, p, K, m, K_hat, m_hat, t))]
#[allow(non_snake_case, clippy::too_many_arguments)]
fn hazard_deviation_bound(
    py: Python<'_>,
    l: u64,
    p: f64,
    K: f64,
    m: f64,
    K_hat: f64,
    m_hat: f64,
    t: f64,
) -> PyResult<Bound<'_, PyAny>> {
    let pt = point(l, p, K, m, K_hat, m_hat, t)?;
    let r =
        chernoff::hazard_deviation_bound(&pt.pop, &pt.manual, &pt.residual, pt.t).map_err(err)?;
    to_py(py, &r)
}

/// Bound on `Pr[SDP reliability > manual reliability]`.
#[pyfunction]
#[pyo3(signature = (l, p, K, m, K_hat, m_hat, t, mode="as-stated"))]
#[allow(non_snake_case, clippy::too_many_arguments)]
fn reliability_deviation_bound<'py>(
    py: Python<'py>,
    l: u64,
    p: f64,
    K: f64,
    m: f64,
    K_hat: f64,
    m_hat: f64,
    t: f64,
    mode: &str,
) -> PyResult<Bound<'py, PyAny>> {
    let pt = point(l, p, K, m, K_hat, m_hat, t)?;
    let r = chernoff::reliability_deviation_bound(
        &pt.pop,
        &pt.manual,
        &pt.residual,
        pt.t,
        self::mode(mode)?,
    )
    .map_err(err)?;
    to_py(py, &r)
}

#[pyfunction]
fn reference_chernoff_bound(
    py: Python<'_>,
    l: u64,
    p: f64,
    threshold: f64,
) -> PyResult<Bound<'_, PyAny>> {
    let pop = sdp_bounds::FailurePopulation::new(l, p).map_err(err)?;
    to_py(
        py,
        &chernoff::reference_chernoff_bound(&pop, threshold).map_err(err)?,
    )
}

/// Seeded estimate of `Pr[X < threshold]`.
#[pyfunction]
#[pyo3(signature = (l, p, threshold, samples=100_000, seed=0))]
fn estimate_tail_probability(
    py: Python<'_>,
    l: u64,
    p: f64,
    threshold: f64,
    samples: u64,
    seed: u64,
) -> PyResult<Bound<'_, PyAny>> {
    let pop = sdp_bounds::FailurePopulation::new(l, p).map_err(err)?;
    let cfg = MonteCarloConfig::new(samples, seed);
    let est = py
        .detach(|| montecarlo::estimate_tail_probability(&pop, threshold, &cfg))
        .map_err(err)?;
    to_py(py, &est)
}

/// Seeded estimate of the expected SDP reliability.
#[pyfunction]
#[pyo3(signature = (l, p, K_hat, m_hat, t, samples=100_000, seed=0))]
#[allow(non_snake_case, clippy::too_many_arguments)]
fn estimate_expected_reliability(
    py: Python<'_>,
    l: u64,
    p: f64,
    K_hat: f64,
    m_hat: f64,
    t: f64,
    samples: u64,
    seed: u64,
) -> PyResult<Bound<'_, PyAny>> {
    let model = model(l, p, K_hat, m_hat)?;
    let t = time(t)?;
    let cfg = MonteCarloConfig::new(samples, seed);
    let est = py
        .detach(|| montecarlo::estimate_expected_reliability(&model, t, &cfg))
        .map_err(err)?;
    to_py(py, &est)
}

/// Full audited record for one parameter point (the same record `analyze`
/// writes per time point).
#[pyfunction]
#[pyo3(signature = (l, p, K, m, K_hat, m_hat, t, samples=0, seed=0, modes=None))]
#[allow(non_snake_case, clippy::too_many_arguments)]
fn evaluate_point(
    py: Python<'_>,
    l: u64,
    p: f64,
    K: f64,
    m: f64,
    K_hat: f64,
    m_hat: f64,
    t: f64,
    samples: u64,
    seed: u64,
    modes: Option<Vec<String>>,
) -> PyResult<Bound<'_, PyAny>> {
    let modes = match modes {
        Some(names) => names.iter().map(|n| mode(n)).collect::<PyResult<_>>()?,
        None => ReliabilityMode::ALL.to_vec(),
    };
    let inputs = PointInputs {
        l,
        p,
        k: K,
        m,
        k_hat: K_hat,
        m_hat,
        t,
    };
    let cfg = EvalConfig {
        samples,
        seed,
        workers: 0,
        modes,
    };
    let rec = py
        .detach(|| report::evaluate_point(&inputs, &cfg))
        .map_err(err)?;
    to_py(py, &rec)
}

#[pymodule]
fn sdpbounds(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", report::TOOLKIT_VERSION)?;
    m.add_class::<FailurePopulation>()?;
    m.add_class::<WeibullParams>()?;
    m.add_function(wrap_pyfunction!(false_omission_rate, m)?)?;
    m.add_function(wrap_pyfunction!(validate_assumptions, m)?)?;
    m.add_function(wrap_pyfunction!(parse_records, m)?)?;
    m.add_function(wrap_pyfunction!(parse_confusion, m)?)?;
    m.add_function(wrap_pyfunction!(expected_sdp_reliability_exact, m)?)?;
    m.add_function(wrap_pyfunction!(expected_sdp_reliability_bound, m)?)?;
    m.add_function(wrap_pyfunction!(hazard_deviation_bound, m)?)?;
    m.add_function(wrap_pyfunction!(reliability_deviation_bound, m)?)?;
    m.add_function(wrap_pyfunction!(reference_chernoff_bound, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_tail_probability, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_expected_reliability, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate_point, m)?)?;
    Ok(())
}
