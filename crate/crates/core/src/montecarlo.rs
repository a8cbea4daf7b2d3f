//! Seeded Monte Carlo estimation and the bound auditor.
//!
//! The sample index space is cut into fixed blocks of [`BLOCK_SIZE`] draws.
//! Block `b` draws from a ChaCha8 stream keyed by `(seed, b)`, so the draws
//! never depend on how many workers run. Per-block statistics are merged in
//! block order, which makes every estimate bit-identical for any worker
//! count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chernoff::{reliability_event_threshold, BoundReport};
use crate::error::{Error, Result};
use crate::failure::{FailurePopulation, FailureSampler, SamplingMethod};
use crate::hazard::{CombinedHazardModel, TimePoint, WeibullParams};

pub const BLOCK_SIZE: u64 = 1 << 16;
pub const MIN_SAMPLES: u64 = 1_000;
/// Two-sided 95% standard normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MonteCarloConfig {
    pub samples: u64,
    pub seed: u64,
    /// Worker threads; 0 uses the global rayon pool.
    pub workers: usize,
    pub method: SamplingMethod,
}

impl MonteCarloConfig {
    pub fn new(samples: u64, seed: u64) -> Self {
        Self {
            samples,
            seed,
            workers: 0,
            method: SamplingMethod::Exact,
        }
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = workers;
        self
    }

    pub fn with_method(mut self, method: SamplingMethod) -> Self {
        self.method = method;
        self
    }

    fn check(&self) -> Result<()> {
        if self.samples < MIN_SAMPLES {
            return Err(Error::domain(
                "samples",
                format!("need at least {MIN_SAMPLES} samples, got {}", self.samples),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloEstimate {
    pub estimate: f64,
    pub std_error: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub n_samples: u64,
    pub seed: u64,
    /// Cutoff `c` when this estimates an event `X < c`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub event_threshold: Option<f64>,
}

/// Source of failure-count draws. Implemented by [`FailureSampler`]; tests
/// substitute fixed draws.
pub trait FailureDraws: Sync {
    fn draw(&self, pop: &FailurePopulation, rng: &mut ChaCha8Rng) -> u64;
}

impl FailureDraws for FailureSampler {
    fn draw(&self, pop: &FailurePopulation, rng: &mut ChaCha8Rng) -> u64 {
        debug_assert_eq!(pop, self.population());
        self.sample(rng)
    }
}

fn block_rng(seed: u64, block: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(block);
    rng
}

/// Run `per_block(block_index, block_len, rng)` over every block and return
/// the results in block order.
fn map_blocks<T, F>(cfg: &MonteCarloConfig, per_block: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64, u64, &mut ChaCha8Rng) -> T + Sync,
{
    let n_blocks = cfg.samples.div_ceil(BLOCK_SIZE);
    let run = || {
        (0..n_blocks)
            .into_par_iter()
            .map(|b| {
                let len = BLOCK_SIZE.min(cfg.samples - b * BLOCK_SIZE);
                let mut rng = block_rng(cfg.seed, b);
                per_block(b, len, &mut rng)
            })
            .collect()
    };
    if cfg.workers == 0 {
        run()
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.workers)
            .build()
            .expect("thread pool")
            .install(run)
    }
}

/// Every draw of `X` under `cfg`, in sample-index order.
pub fn draw_failures(pop: &FailurePopulation, cfg: &MonteCarloConfig) -> Vec<u64> {
    draw_failures_with(pop, cfg, &FailureSampler::new(*pop, cfg.method))
}

pub fn draw_failures_with<D: FailureDraws + ?Sized>(
    pop: &FailurePopulation,
    cfg: &MonteCarloConfig,
    draws: &D,
) -> Vec<u64> {
    map_blocks(cfg, |_, len, rng| {
        (0..len).map(|_| draws.draw(pop, rng)).collect::<Vec<_>>()
    })
    .concat()
}

/// Per-draw indicator of the tail event `X < threshold`.
pub fn tail_indicator(x: u64, threshold: f64) -> bool {
    (x as f64) < threshold
}

/// Per-draw indicator of `R̂(t) > R(t)`, compared on log-reliabilities so
/// that underflow of both sides cannot hide the event.
pub fn exceedance_indicator(
    model: &CombinedHazardModel,
    manual: &WeibullParams,
    x: u64,
    t: TimePoint,
) -> bool {
    let lhs = -(x as f64 * t.value() + model.residual.cumulative_hazard(t));
    lhs > manual.log_reliability(t)
}

/// Wilson score interval for `successes` out of `n`.
pub fn wilson_interval(successes: u64, n: u64, z: f64) -> (f64, f64) {
    let n_f = n as f64;
    let p_hat = successes as f64 / n_f;
    let z2 = z * z;
    let denom = 1.0 + z2 / n_f;
    let center = (p_hat + z2 / (2.0 * n_f)) / denom;
    let half = z / denom * (p_hat * (1.0 - p_hat) / n_f + z2 / (4.0 * n_f * n_f)).sqrt();
    let lo = (center - half).clamp(0.0, 1.0).min(p_hat);
    let hi = (center + half).clamp(0.0, 1.0).max(p_hat);
    (lo, hi)
}

fn proportion(
    successes: u64,
    cfg: &MonteCarloConfig,
    threshold: Option<f64>,
) -> MonteCarloEstimate {
    let n = cfg.samples;
    let p_hat = successes as f64 / n as f64;
    let (ci_low, ci_high) = wilson_interval(successes, n, Z95);
    MonteCarloEstimate {
        estimate: p_hat,
        std_error: (p_hat * (1.0 - p_hat) / n as f64).sqrt(),
        ci_low,
        ci_high,
        n_samples: n,
        seed: cfg.seed,
        event_threshold: threshold,
    }
}

fn empty_event(cfg: &MonteCarloConfig, threshold: f64) -> MonteCarloEstimate {
    MonteCarloEstimate {
        estimate: 0.0,
        std_error: 0.0,
        ci_low: 0.0,
        ci_high: 0.0,
        n_samples: cfg.samples,
        seed: cfg.seed,
        event_threshold: Some(threshold),
    }
}

fn count_events<D, F>(pop: &FailurePopulation, cfg: &MonteCarloConfig, draws: &D, event: F) -> u64
where
    D: FailureDraws + ?Sized,
    F: Fn(u64) -> bool + Sync,
{
    map_blocks(cfg, |_, len, rng| {
        (0..len).filter(|_| event(draws.draw(pop, rng))).count() as u64
    })
    .into_iter()
    .sum()
}

/// Fraction of draws with `X < threshold`, with a Wilson 95% interval.
pub fn estimate_tail_probability(
    pop: &FailurePopulation,
    threshold: f64,
    cfg: &MonteCarloConfig,
) -> Result<MonteCarloEstimate> {
    estimate_tail_probability_with(pop, threshold, cfg, &FailureSampler::new(*pop, cfg.method))
}

pub fn estimate_tail_probability_with<D: FailureDraws + ?Sized>(
    pop: &FailurePopulation,
    threshold: f64,
    cfg: &MonteCarloConfig,
    draws: &D,
) -> Result<MonteCarloEstimate> {
    cfg.check()?;
    if threshold.is_nan() {
        return Err(Error::domain("threshold", "NaN"));
    }
    if threshold <= 0.0 {
        return Ok(empty_event(cfg, threshold));
    }
    let hits = count_events(pop, cfg, draws, |x| tail_indicator(x, threshold));
    Ok(proportion(hits, cfg, Some(threshold)))
}

/// Fraction of draws where the prediction-assisted reliability exceeds the
/// manual one. Uses the same draws as [`estimate_tail_probability`] for the
/// same configuration.
pub fn estimate_reliability_exceedance(
    model: &CombinedHazardModel,
    manual: &WeibullParams,
    t: TimePoint,
    cfg: &MonteCarloConfig,
) -> Result<MonteCarloEstimate> {
    estimate_reliability_exceedance_with(
        model,
        manual,
        t,
        cfg,
        &FailureSampler::new(model.population, cfg.method),
    )
}

pub fn estimate_reliability_exceedance_with<D: FailureDraws + ?Sized>(
    model: &CombinedHazardModel,
    manual: &WeibullParams,
    t: TimePoint,
    cfg: &MonteCarloConfig,
    draws: &D,
) -> Result<MonteCarloEstimate> {
    cfg.check()?;
    if t.value() == 0.0 {
        // R̂(0) = R(0) = 1
        return Ok(empty_event(cfg, 0.0));
    }
    let threshold = reliability_event_threshold(manual, &model.residual, t)?;
    if threshold <= 0.0 {
        // R̂(t) > R(t) needs X < threshold, impossible for a count
        return Ok(empty_event(cfg, threshold));
    }
    let hits = count_events(&model.population, cfg, draws, |x| {
        exceedance_indicator(model, manual, x, t)
    });
    Ok(proportion(hits, cfg, Some(threshold)))
}

#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    n: u64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    fn merge(self, other: Moments) -> Moments {
        if self.n == 0 {
            return other;
        }
        if other.n == 0 {
            return self;
        }
        let n = self.n + other.n;
        let d = other.mean - self.mean;
        let (na, nb, nf) = (self.n as f64, other.n as f64, n as f64);
        Moments {
            n,
            mean: self.mean + d * nb / nf,
            m2: self.m2 + other.m2 + d * d * na * nb / nf,
        }
    }
}

/// Mean of `R̂(t)` over sampled failure counts, with a normal 95% interval.
pub fn estimate_expected_reliability(
    model: &CombinedHazardModel,
    t: TimePoint,
    cfg: &MonteCarloConfig,
) -> Result<MonteCarloEstimate> {
    estimate_expected_reliability_with(
        model,
        t,
        cfg,
        &FailureSampler::new(model.population, cfg.method),
    )
}

pub fn estimate_expected_reliability_with<D: FailureDraws + ?Sized>(
    model: &CombinedHazardModel,
    t: TimePoint,
    cfg: &MonteCarloConfig,
    draws: &D,
) -> Result<MonteCarloEstimate> {
    cfg.check()?;
    let residual = model.residual.cumulative_hazard(t);
    let tv = t.value();
    let stats = map_blocks(cfg, |_, len, rng| {
        let mut m = Moments::default();
        for _ in 0..len {
            let x = draws.draw(&model.population, rng);
            m.push((-(x as f64 * tv + residual)).exp());
        }
        m
    })
    .into_iter()
    .fold(Moments::default(), Moments::merge);

    let var = if stats.n > 1 {
        stats.m2 / (stats.n - 1) as f64
    } else {
        0.0
    };
    let se = (var / stats.n as f64).sqrt();
    let est = stats.mean;
    Ok(MonteCarloEstimate {
        estimate: est,
        std_error: se,
        ci_low: (est - Z95 * se).max(0.0).min(est),
        ci_high: (est + Z95 * se).min(1.0).max(est),
        n_samples: stats.n,
        seed: cfg.seed,
        event_threshold: None,
    })
}

/// Evidence an audit compares a bound against.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Empirical {
    MonteCarlo(MonteCarloEstimate),
    Exact { probability: f64, threshold: f64 },
}

impl Empirical {
    fn threshold(&self) -> Option<f64> {
        match self {
            Empirical::MonteCarlo(e) => e.event_threshold,
            Empirical::Exact { threshold, .. } => Some(*threshold),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Holds,
    Violated,
    Inconclusive,
    ExactZeroEvent,
}

impl Verdict {
    pub const ALL: [Verdict; 4] = [
        Verdict::Holds,
        Verdict::Violated,
        Verdict::Inconclusive,
        Verdict::ExactZeroEvent,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Holds => "holds",
            Verdict::Violated => "violated",
            Verdict::Inconclusive => "inconclusive",
            Verdict::ExactZeroEvent => "exact-zero-event",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AuditVerdict {
    pub verdict: Verdict,
    pub empirical: Empirical,
    pub bound_value: f64,
    /// `bound - upper edge of the evidence` (the exact value or `ci_high`).
    pub margin: f64,
}

fn same_threshold(a: f64, b: f64) -> bool {
    a == b || (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0)
}

/// Whether `value` is above the bound, either as reported or in log space
/// (the latter still decides when the reported bound underflows).
fn exceeds(value: f64, report: &BoundReport) -> bool {
    value > report.bound || (value > 0.0 && value.ln() > report.log_bound)
}

/// Compare a bound against exact or sampled evidence for the same event.
pub fn audit_bound(report: &BoundReport, empirical: &Empirical) -> Result<AuditVerdict> {
    let threshold = empirical.threshold().ok_or_else(|| {
        Error::EventMismatch("estimate is not an event probability (no event threshold)".into())
    })?;
    if !same_threshold(threshold, report.event_threshold) {
        return Err(Error::EventMismatch(format!(
            "bound is for X < {} but evidence is for X < {}",
            report.event_threshold, threshold
        )));
    }

    let (upper, verdict) = match empirical {
        Empirical::Exact { probability, .. } => {
            let v = if exceeds(*probability, report) {
                Verdict::Violated
            } else if report.event_threshold <= 0.0 {
                Verdict::ExactZeroEvent
            } else {
                Verdict::Holds
            };
            (*probability, v)
        }
        Empirical::MonteCarlo(est) => {
            let v = if exceeds(est.ci_low, report) {
                Verdict::Violated
            } else if report.event_threshold <= 0.0 {
                Verdict::ExactZeroEvent
            } else if !exceeds(est.ci_high, report) {
                Verdict::Holds
            } else {
                Verdict::Inconclusive
            };
            (est.ci_high, v)
        }
    };
    Ok(AuditVerdict {
        verdict,
        empirical: *empirical,
        bound_value: report.bound,
        margin: report.bound - upper,
    })
}
