//! Weibull hazards, the combined hazard of prediction-assisted testing, and
//! the corresponding reliability functions.
//!
//! Every reliability is carried as a log-reliability (minus the cumulative
//! hazard) and exponentiated last, since cumulative hazards of several
//! hundred are routine at large `t`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::failure::FailurePopulation;
use crate::quadrature::{self, DEFAULT_MAX_INTERVALS};

/// Hazard `z(t) = K·t^m` with `K > 0`, `m > -1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeibullParams {
    scale_k: f64,
    shape_m: f64,
}

/// Time since deployment (deployment happens at `t = 0`).
///
/// Zero is admitted so reliability can be evaluated at deployment; hazard
/// evaluation rejects it.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TimePoint(f64);

impl TimePoint {
    pub fn new(t: f64) -> Result<Self> {
        if !(t.is_finite() && t >= 0.0) {
            return Err(Error::domain(
                "t",
                format!("time must be finite and >= 0, got {t}"),
            ));
        }
        Ok(Self(t))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    fn positive(self) -> Result<f64> {
        if self.0 > 0.0 {
            Ok(self.0)
        } else {
            Err(Error::domain("t", "hazard is defined for t > 0 only"))
        }
    }
}

impl WeibullParams {
    pub fn new(scale_k: f64, shape_m: f64) -> Result<Self> {
        Self::named(scale_k, shape_m, "K", "m")
    }

    /// Like [`WeibullParams::new`] but with custom parameter names in errors
    /// (e.g. `K_hat`, `m_hat` for the residual hazard).
    pub fn named(scale_k: f64, shape_m: f64, k_name: &str, m_name: &str) -> Result<Self> {
        if !(scale_k.is_finite() && scale_k > 0.0) {
            return Err(Error::domain(k_name, format!("must be > 0, got {scale_k}")));
        }
        if !(shape_m.is_finite() && shape_m > -1.0) {
            return Err(Error::domain(
                m_name,
                format!("must be > -1, got {shape_m}"),
            ));
        }
        Ok(Self { scale_k, shape_m })
    }

    pub fn scale_k(&self) -> f64 {
        self.scale_k
    }

    pub fn shape_m(&self) -> f64 {
        self.shape_m
    }

    pub fn hazard(&self, t: TimePoint) -> Result<f64> {
        let t = t.positive()?;
        Ok(self.scale_k * t.powf(self.shape_m))
    }

    /// `∫₀ᵗ K x^m dx = K t^(m+1) / (m+1)`.
    pub fn cumulative_hazard(&self, t: TimePoint) -> f64 {
        let m1 = self.shape_m + 1.0;
        self.scale_k * t.0.powf(m1) / m1
    }

    pub fn log_reliability(&self, t: TimePoint) -> f64 {
        -self.cumulative_hazard(t)
    }

    pub fn reliability(&self, t: TimePoint) -> f64 {
        self.log_reliability(t).exp()
    }
}

/// Which form of the expected-reliability upper bound to use.
///
/// `AsStated` keeps the residual factor as `e^(+A')`, `SignCorrected` uses
/// `e^(-A')` as the integral of the residual hazard requires
/// (`A' = K̂ t^(m̂+1)/(m̂+1)`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReliabilityMode {
    AsStated,
    SignCorrected,
}

impl ReliabilityMode {
    pub const ALL: [ReliabilityMode; 2] =
        [ReliabilityMode::AsStated, ReliabilityMode::SignCorrected];

    pub fn as_str(self) -> &'static str {
        match self {
            ReliabilityMode::AsStated => "as-stated",
            ReliabilityMode::SignCorrected => "sign-corrected",
        }
    }
}

impl std::str::FromStr for ReliabilityMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "as-stated" => Ok(ReliabilityMode::AsStated),
            "sign-corrected" => Ok(ReliabilityMode::SignCorrected),
            other => Err(Error::domain("mode", format!("unknown mode `{other}`"))),
        }
    }
}

/// Hazard of prediction-assisted software: `ẑ(t) = X + K̂ t^m̂`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CombinedHazardModel {
    pub residual: WeibullParams,
    pub population: FailurePopulation,
}

impl CombinedHazardModel {
    pub fn new(residual: WeibullParams, population: FailurePopulation) -> Self {
        Self {
            residual,
            population,
        }
    }

    fn check_x(&self, x: u64) -> Result<()> {
        if x > self.population.l() {
            return Err(Error::domain(
                "x",
                format!("realized failures {x} exceed l = {}", self.population.l()),
            ));
        }
        Ok(())
    }

    /// `x + K̂ t^m̂` for a realized failure count `x`.
    pub fn hazard(&self, x: u64, t: TimePoint) -> Result<f64> {
        self.check_x(x)?;
        Ok(x as f64 + self.residual.hazard(t)?)
    }

    /// `l·p + K̂ t^m̂`.
    pub fn expected_hazard(&self, t: TimePoint) -> Result<f64> {
        Ok(self.population.expected_failures() + self.residual.hazard(t)?)
    }

    /// `-(x·t + K̂ t^(m̂+1)/(m̂+1))`; `X` is held constant over `[0, t]`.
    pub fn log_reliability(&self, x: u64, t: TimePoint) -> Result<f64> {
        self.check_x(x)?;
        Ok(-(x as f64 * t.0 + self.residual.cumulative_hazard(t)))
    }

    pub fn reliability(&self, x: u64, t: TimePoint) -> Result<f64> {
        self.log_reliability(x, t).map(f64::exp)
    }

    /// Log of `E[R̂(t)] = e^(-A') (1 + p(e^(-t) - 1))^l`, exact under the
    /// binomial model.
    pub fn log_expected_reliability_exact(&self, t: TimePoint) -> f64 {
        let l = self.population.l() as f64;
        let p = self.population.p();
        -self.residual.cumulative_hazard(t) + l * (p * (-t.0).exp_m1()).ln_1p()
    }

    pub fn expected_reliability_exact(&self, t: TimePoint) -> f64 {
        self.log_expected_reliability_exact(t).exp()
    }

    /// Log of the `1 + x < e^x` relaxation of the expected reliability,
    /// `l p (e^(-t) - 1) ± A'`.
    pub fn log_expected_reliability_bound(&self, t: TimePoint, mode: ReliabilityMode) -> f64 {
        let lp = self.population.expected_failures();
        let a = self.residual.cumulative_hazard(t);
        let base = lp * (-t.0).exp_m1();
        match mode {
            ReliabilityMode::AsStated => base + a,
            ReliabilityMode::SignCorrected => base - a,
        }
    }

    pub fn expected_reliability_bound(&self, t: TimePoint, mode: ReliabilityMode) -> f64 {
        self.log_expected_reliability_bound(t, mode).exp()
    }
}

pub fn weibull_hazard(params: &WeibullParams, t: TimePoint) -> Result<f64> {
    params.hazard(t)
}

pub fn weibull_reliability(params: &WeibullParams, t: TimePoint) -> f64 {
    params.reliability(t)
}

pub fn combined_hazard(model: &CombinedHazardModel, x: u64, t: TimePoint) -> Result<f64> {
    model.hazard(x, t)
}

pub fn expected_combined_hazard(model: &CombinedHazardModel, t: TimePoint) -> Result<f64> {
    model.expected_hazard(t)
}

pub fn sdp_reliability(model: &CombinedHazardModel, x: u64, t: TimePoint) -> Result<f64> {
    model.reliability(x, t)
}

pub fn expected_sdp_reliability_exact(model: &CombinedHazardModel, t: TimePoint) -> f64 {
    model.expected_reliability_exact(t)
}

pub fn expected_sdp_reliability_bound(
    model: &CombinedHazardModel,
    t: TimePoint,
    mode: ReliabilityMode,
) -> f64 {
    model.expected_reliability_bound(t, mode)
}

/// `-∫₀ᵗ hazard(x) dx` by adaptive quadrature, to absolute `tolerance` on the
/// integral.
pub fn log_reliability_by_integration<F: Fn(f64) -> f64>(
    hazard: F,
    t: TimePoint,
    tolerance: f64,
) -> Result<f64> {
    let integral = quadrature::integrate(hazard, 0.0, t.0, tolerance, DEFAULT_MAX_INTERVALS)?;
    Ok(-integral.value)
}

/// `exp(-∫₀ᵗ hazard(x) dx)`; the numerical counterpart of the closed forms.
pub fn reliability_by_integration<F: Fn(f64) -> f64>(
    hazard: F,
    t: TimePoint,
    tolerance: f64,
) -> Result<f64> {
    log_reliability_by_integration(hazard, t, tolerance).map(f64::exp)
}
