//! Chernoff-style deviation bounds for prediction-assisted software.
//!
//! Two bounds compare the prediction-assisted software against its manually
//! tested twin:
//!
//! * the hazard bound, on `Pr[X + K̂t^m̂ < K t^m]`, substitutes
//!   `μ = l·p + K̂t^m̂` into the lower-tail inequality
//!   `Pr[X < (1-δ)μ] < exp(-μδ²/2)`;
//! * the reliability bound, on `Pr[R̂(t) > R(t)]`, rewrites the event as
//!   `X < K t^m/(m+1) - K̂ t^m̂/(m̂+1)` and substitutes the upper bound on
//!   `E[R̂(t)]` for `μ`.
//!
//! Both substitutions are evaluated exactly as written, including when `μ`
//! is not the mean of `X`. [`reference_chernoff_bound`] applies the same
//! inequality with the true mean `l·p` so any evaluation can be checked
//! against a bound that is valid by construction. All arithmetic stays in
//! log space; `bound` is materialized for reporting only.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::failure::FailurePopulation;
use crate::hazard::{CombinedHazardModel, ReliabilityMode, TimePoint, WeibullParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum BoundKind {
    Hazard,
    Reliability { mode: ReliabilityMode },
    Reference,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct DomainFlags {
    /// `0 < δ <= 1`, the range the lower-tail inequality is stated for.
    pub delta_in_range: bool,
    /// `δ` is exactly 0 or exactly 1.
    pub delta_at_boundary: bool,
    /// The event cutoff on `X` is positive (otherwise the event is empty).
    pub threshold_positive: bool,
    /// The cutoff lies below the substituted `μ`.
    pub threshold_below_mu: bool,
    /// `bound >= 1`, i.e. carries no information.
    pub vacuous: bool,
}

impl DomainFlags {
    fn new(delta: f64, threshold: f64, mu: f64, log_bound: f64) -> Self {
        Self {
            delta_in_range: delta > 0.0 && delta <= 1.0,
            delta_at_boundary: delta == 0.0 || delta == 1.0,
            threshold_positive: threshold > 0.0,
            threshold_below_mu: threshold < mu,
            vacuous: log_bound >= 0.0,
        }
    }

    /// All conditions under which the lower-tail inequality applies.
    pub fn all_pass(&self) -> bool {
        self.delta_in_range && self.threshold_positive && self.threshold_below_mu
    }
}

/// One bound evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    #[serde(flatten)]
    pub kind: BoundKind,
    /// Cutoff `c` of the rewritten event `X < c`.
    pub event_threshold: f64,
    pub delta: f64,
    pub mu_used: f64,
    pub log_bound: f64,
    pub bound: f64,
    /// `-μδ²/2` evaluated directly from `(μ, δ)`; equals `log_bound` up to
    /// rounding.
    pub unsimplified_log_bound: f64,
    pub domain_flags: DomainFlags,
    /// Set to 0 when the cutoff is non-positive: `X >= 0` makes the event
    /// impossible.
    pub exact_probability: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl BoundReport {
    fn assemble(
        kind: BoundKind,
        event_threshold: f64,
        mu: f64,
        log_bound: f64,
        notes: Vec<String>,
    ) -> Self {
        let delta = 1.0 - event_threshold / mu;
        let unsimplified = -mu * delta * delta / 2.0;
        Self {
            kind,
            event_threshold,
            delta,
            mu_used: mu,
            log_bound,
            bound: log_bound.exp(),
            unsimplified_log_bound: unsimplified,
            domain_flags: DomainFlags::new(delta, event_threshold, mu, log_bound),
            exact_probability: (event_threshold <= 0.0).then_some(0.0),
            notes,
        }
    }

    /// Relative gap between the closed form and `-μδ²/2`.
    pub fn closed_form_gap(&self) -> f64 {
        let (a, b) = (self.log_bound, self.unsimplified_log_bound);
        let scale = a.abs().max(b.abs());
        if scale == 0.0 {
            0.0
        } else {
            (a - b).abs() / scale
        }
    }
}

/// `-μδ²/2`, the log of the lower-tail bound.
pub fn log_chernoff_lower_tail(mu: f64, delta: f64) -> Result<f64> {
    if !(mu.is_finite() && mu > 0.0) {
        return Err(Error::domain("mu", format!("must be > 0, got {mu}")));
    }
    Ok(-mu * delta * delta / 2.0)
}

/// `exp(-μδ²/2)`. Callers check `0 < δ <= 1` themselves (see
/// [`DomainFlags`]).
pub fn chernoff_lower_tail(mu: f64, delta: f64) -> Result<f64> {
    log_chernoff_lower_tail(mu, delta).map(f64::exp)
}

/// `K t^m - K̂ t^m̂`, the cutoff on `X` in the hazard event.
pub fn hazard_event_threshold(
    manual: &WeibullParams,
    residual: &WeibullParams,
    t: TimePoint,
) -> Result<f64> {
    Ok(manual.hazard(t)? - residual.hazard(t)?)
}

/// `K t^m/(m+1) - K̂ t^m̂/(m̂+1)`, the cutoff on `X` in the reliability event
/// (obtained by dividing the cumulative-hazard comparison through by `t`).
pub fn reliability_event_threshold(
    manual: &WeibullParams,
    residual: &WeibullParams,
    t: TimePoint,
) -> Result<f64> {
    Ok(manual.hazard(t)? / (manual.shape_m() + 1.0)
        - residual.hazard(t)? / (residual.shape_m() + 1.0))
}

/// Bound on `Pr[X + K̂t^m̂ < K t^m]`:
/// `exp(-(lp - B + 2A)² / (2(A + lp)))` with `A = K̂t^m̂`, `B = K t^m`.
pub fn hazard_deviation_bound(
    pop: &FailurePopulation,
    manual: &WeibullParams,
    residual: &WeibullParams,
    t: TimePoint,
) -> Result<BoundReport> {
    let a = residual.hazard(t)?;
    let b = manual.hazard(t)?;
    let lp = pop.expected_failures();
    let mu = a + lp;
    let gap = lp - b + 2.0 * a;
    let log_bound = -(gap * gap) / (2.0 * mu);
    Ok(BoundReport::assemble(
        BoundKind::Hazard,
        b - a,
        mu,
        log_bound,
        Vec::new(),
    ))
}

/// Bound on `Pr[R̂(t) > R(t)]`:
/// `exp(-(μ_R - c)² / (2 μ_R))` with `c` the reliability event cutoff and
/// `μ_R` the chosen form of the expected-reliability upper bound.
pub fn reliability_deviation_bound(
    pop: &FailurePopulation,
    manual: &WeibullParams,
    residual: &WeibullParams,
    t: TimePoint,
    mode: ReliabilityMode,
) -> Result<BoundReport> {
    let threshold = reliability_event_threshold(manual, residual, t)?;
    let model = CombinedHazardModel::new(*residual, *pop);
    let mu = model.expected_reliability_bound(t, mode);
    if !(mu.is_finite() && mu > 0.0) {
        return Err(Error::domain(
            "t",
            format!(
                "expected-reliability bound ({}) is not representable in f64 at t = {} (log value {})",
                mode.as_str(),
                t.value(),
                model.log_expected_reliability_bound(t, mode)
            ),
        ));
    }
    let gap = mu - threshold;
    let log_bound = -(gap * gap) / (2.0 * mu);
    let notes = vec![
        "cutoff is a failure count while mu_used is an expected reliability; the two are on different scales"
            .to_string(),
    ];
    Ok(BoundReport::assemble(
        BoundKind::Reliability { mode },
        threshold,
        mu,
        log_bound,
        notes,
    ))
}

/// Lower-tail bound on `Pr[X < threshold]` using the true mean `μ = l·p`.
pub fn reference_chernoff_bound(pop: &FailurePopulation, threshold: f64) -> Result<BoundReport> {
    if threshold.is_nan() {
        return Err(Error::domain("threshold", "NaN"));
    }
    let mu = pop.expected_failures();
    if threshold >= mu {
        let mut report =
            BoundReport::assemble(BoundKind::Reference, threshold, mu, 0.0, Vec::new());
        report.unsimplified_log_bound = 0.0;
        return Ok(report);
    }
    let delta = 1.0 - threshold / mu;
    let log_bound = log_chernoff_lower_tail(mu, delta)?;
    Ok(BoundReport::assemble(
        BoundKind::Reference,
        threshold,
        mu,
        log_bound,
        Vec::new(),
    ))
}
