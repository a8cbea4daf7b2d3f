//! Run reports, parameter sweeps and plot-ready series.
//!
//! A [`PointRecord`] holds everything evaluated at one parameter point:
//! hazards, reliabilities, both deviation bounds with their audits, the
//! reference bound, and optional Monte Carlo confirmation. Reports and
//! sweeps are assembled from point records in deterministic grid order; the
//! per-point seed is the user seed, so a sweep record can be recomputed on
//! its own.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::chernoff::{
    hazard_deviation_bound, reference_chernoff_bound, reliability_deviation_bound, BoundReport,
    DomainFlags,
};
use crate::error::{Error, Result};
use crate::failure::FailurePopulation;
use crate::hazard::{CombinedHazardModel, ReliabilityMode, TimePoint, WeibullParams};
use crate::ingest::{validate_assumptions, AssumptionVerdict, ConfusionCounts};
use crate::montecarlo::{
    audit_bound, estimate_expected_reliability, estimate_reliability_exceedance,
    estimate_tail_probability, AuditVerdict, Empirical, MonteCarloConfig, MonteCarloEstimate,
    Verdict,
};

pub const TOOLKIT_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Largest `l` for which audits use the exact binomial CDF instead of
/// sampling.
pub const EXACT_ORACLE_MAX_L: u64 = 1_000_000;

/// Sample count used for audits when `l` is too large for the exact oracle
/// and no sample count was requested.
pub const FALLBACK_AUDIT_SAMPLES: u64 = 100_000;

/// One parameter point, keyed with the model's symbol names.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointInputs {
    pub l: u64,
    pub p: f64,
    #[serde(rename = "K")]
    pub k: f64,
    pub m: f64,
    #[serde(rename = "K_hat")]
    pub k_hat: f64,
    pub m_hat: f64,
    pub t: f64,
}

struct Resolved {
    pop: FailurePopulation,
    manual: WeibullParams,
    residual: WeibullParams,
    t: TimePoint,
}

impl PointInputs {
    fn resolve(&self) -> Result<Resolved> {
        let pop = FailurePopulation::new(self.l, self.p)?;
        let manual = WeibullParams::named(self.k, self.m, "K", "m")?;
        let residual = WeibullParams::named(self.k_hat, self.m_hat, "K_hat", "m_hat")?;
        if !(self.t.is_finite() && self.t > 0.0) {
            return Err(Error::domain("t", format!("must be > 0, got {}", self.t)));
        }
        Ok(Resolved {
            pop,
            manual,
            residual,
            t: TimePoint::new(self.t)?,
        })
    }

    /// Value of a named axis as `f64`.
    pub fn axis(&self, axis: Axis) -> f64 {
        match axis {
            Axis::L => self.l as f64,
            Axis::P => self.p,
            Axis::K => self.k,
            Axis::M => self.m,
            Axis::KHat => self.k_hat,
            Axis::MHat => self.m_hat,
            Axis::T => self.t,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Axis {
    #[serde(rename = "l")]
    L,
    #[serde(rename = "p")]
    P,
    #[serde(rename = "K")]
    K,
    #[serde(rename = "m")]
    M,
    #[serde(rename = "K_hat")]
    KHat,
    #[serde(rename = "m_hat")]
    MHat,
    #[serde(rename = "t")]
    T,
}

impl Axis {
    pub const ALL: [Axis; 7] = [
        Axis::L,
        Axis::P,
        Axis::K,
        Axis::M,
        Axis::KHat,
        Axis::MHat,
        Axis::T,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Axis::L => "l",
            Axis::P => "p",
            Axis::K => "K",
            Axis::M => "m",
            Axis::KHat => "K_hat",
            Axis::MHat => "m_hat",
            Axis::T => "t",
        }
    }
}

impl std::str::FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Axis::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::domain("x", format!("unknown axis `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EvalConfig {
    /// Monte Carlo samples per estimator; 0 disables sampling.
    pub samples: u64,
    pub seed: u64,
    /// Worker threads; 0 uses the global rayon pool.
    pub workers: usize,
    pub modes: Vec<ReliabilityMode>,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            samples: 0,
            seed: 0,
            workers: 0,
            modes: ReliabilityMode::ALL.to_vec(),
        }
    }
}

impl EvalConfig {
    fn run<T: Send>(&self, f: impl FnOnce() -> T + Send) -> T {
        if self.workers == 0 {
            f()
        } else {
            rayon::ThreadPoolBuilder::new()
                .num_threads(self.workers)
                .build()
                .expect("thread pool")
                .install(f)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditedBound {
    pub report: BoundReport,
    pub audit: AuditVerdict,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeValue {
    pub mode: ReliabilityMode,
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloSection {
    /// `Pr[X < K t^m - K̂ t^m̂]`.
    pub hazard_event: MonteCarloEstimate,
    /// `Pr[R̂(t) > R(t)]`.
    pub reliability_exceedance: MonteCarloEstimate,
    pub expected_reliability: MonteCarloEstimate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointRecord {
    pub inputs: PointInputs,
    pub expected_failures: f64,
    pub manual_hazard: f64,
    pub expected_sdp_hazard: f64,
    pub manual_reliability: f64,
    /// Reliability with no hidden failures (`x = 0`).
    pub residual_reliability: f64,
    pub expected_sdp_reliability: f64,
    pub expected_reliability_bounds: Vec<ModeValue>,
    /// Exact `Pr[X < c]` for the hazard event, when the oracle is affordable.
    pub hazard_event_exact: Option<f64>,
    pub reliability_event_exact: Option<f64>,
    pub hazard_bound: AuditedBound,
    pub reliability_bounds: Vec<AuditedBound>,
    pub reference_hazard_event: AuditedBound,
    pub reference_reliability_event: AuditedBound,
    pub monte_carlo: Option<MonteCarloSection>,
}

impl PointRecord {
    pub fn reliability_bound(&self, mode: ReliabilityMode) -> Option<&AuditedBound> {
        self.reliability_bounds.iter().find(|b| {
            matches!(b.report.kind, crate::chernoff::BoundKind::Reliability { mode: m } if m == mode)
        })
    }
}

/// Evidence for auditing events on `X`: exact when affordable, sampled
/// otherwise.
fn evidence(
    pop: &FailurePopulation,
    threshold: f64,
    exact: Option<f64>,
    sampled: Option<&MonteCarloEstimate>,
    cfg: &EvalConfig,
) -> Result<Empirical> {
    if let Some(probability) = exact {
        return Ok(Empirical::Exact {
            probability,
            threshold,
        });
    }
    if let Some(est) = sampled {
        return Ok(Empirical::MonteCarlo(*est));
    }
    let samples = if cfg.samples == 0 {
        FALLBACK_AUDIT_SAMPLES
    } else {
        cfg.samples
    };
    let mc = MonteCarloConfig::new(samples, cfg.seed);
    Ok(Empirical::MonteCarlo(estimate_tail_probability(
        pop, threshold, &mc,
    )?))
}

fn audited(report: BoundReport, evidence: &Empirical) -> Result<AuditedBound> {
    let audit = audit_bound(&report, evidence)?;
    Ok(AuditedBound { report, audit })
}

/// Evaluate every quantity at one parameter point.
pub fn evaluate_point(inputs: &PointInputs, cfg: &EvalConfig) -> Result<PointRecord> {
    let r = inputs.resolve()?;
    let model = CombinedHazardModel::new(r.residual, r.pop);

    let hazard = hazard_deviation_bound(&r.pop, &r.manual, &r.residual, r.t)?;
    let reliability: Vec<BoundReport> = cfg
        .modes
        .iter()
        .map(|&mode| reliability_deviation_bound(&r.pop, &r.manual, &r.residual, r.t, mode))
        .collect::<Result<_>>()?;
    let hazard_threshold = hazard.event_threshold;
    let reliability_threshold =
        crate::chernoff::reliability_event_threshold(&r.manual, &r.residual, r.t)?;

    let affordable = r.pop.l() <= EXACT_ORACLE_MAX_L;
    let hazard_exact = affordable.then(|| r.pop.cdf_below(hazard_threshold));
    let reliability_exact = affordable.then(|| r.pop.cdf_below(reliability_threshold));

    let monte_carlo = if cfg.samples > 0 {
        let mc = MonteCarloConfig::new(cfg.samples, cfg.seed);
        Some(MonteCarloSection {
            hazard_event: estimate_tail_probability(&r.pop, hazard_threshold, &mc)?,
            reliability_exceedance: estimate_reliability_exceedance(&model, &r.manual, r.t, &mc)?,
            expected_reliability: estimate_expected_reliability(&model, r.t, &mc)?,
        })
    } else {
        None
    };

    let hazard_evidence = evidence(
        &r.pop,
        hazard_threshold,
        hazard_exact,
        monte_carlo.as_ref().map(|s| &s.hazard_event),
        cfg,
    )?;
    let reliability_evidence = evidence(
        &r.pop,
        reliability_threshold,
        reliability_exact,
        monte_carlo.as_ref().map(|s| &s.reliability_exceedance),
        cfg,
    )?;

    Ok(PointRecord {
        inputs: *inputs,
        expected_failures: r.pop.expected_failures(),
        manual_hazard: r.manual.hazard(r.t)?,
        expected_sdp_hazard: model.expected_hazard(r.t)?,
        manual_reliability: r.manual.reliability(r.t),
        residual_reliability: model.reliability(0, r.t)?,
        expected_sdp_reliability: model.expected_reliability_exact(r.t),
        expected_reliability_bounds: cfg
            .modes
            .iter()
            .map(|&mode| ModeValue {
                mode,
                value: model.expected_reliability_bound(r.t, mode),
            })
            .collect(),
        hazard_event_exact: hazard_exact,
        reliability_event_exact: reliability_exact,
        hazard_bound: audited(hazard, &hazard_evidence)?,
        reliability_bounds: reliability
            .into_iter()
            .map(|b| audited(b, &reliability_evidence))
            .collect::<Result<_>>()?,
        reference_hazard_event: audited(
            reference_chernoff_bound(&r.pop, hazard_threshold)?,
            &hazard_evidence,
        )?,
        reference_reliability_event: audited(
            reference_chernoff_bound(&r.pop, reliability_threshold)?,
            &reliability_evidence,
        )?,
        monte_carlo,
    })
}

/// Where `p` (and possibly `l`) came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "kebab-case")]
pub enum ProbabilitySource {
    Literal,
    Counts,
    ConfusionFile { path: String },
    RecordsFile { path: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForProvenance {
    #[serde(flatten)]
    pub source: ProbabilitySource,
    pub counts: Option<ConfusionCounts>,
    pub verdict: Option<AssumptionVerdict>,
    pub p: f64,
    pub l: u64,
}

impl ForProvenance {
    pub fn literal(l: u64, p: f64) -> Self {
        Self {
            source: ProbabilitySource::Literal,
            counts: None,
            verdict: None,
            p,
            l,
        }
    }

    /// Take `p` from confusion counts; `l` defaults to the predicted-clean
    /// count `fn + tn` unless overridden. Fails when the counts leave `p`
    /// at 0 or 1.
    pub fn from_counts(
        counts: ConfusionCounts,
        source: ProbabilitySource,
        l_override: Option<u64>,
    ) -> Result<Self> {
        let verdict = validate_assumptions(&counts);
        if !verdict.ok {
            return Err(match verdict.p {
                Some(p) => Error::DegenerateProbability { p },
                None => Error::NoPredictedClean,
            });
        }
        Ok(Self {
            source,
            counts: Some(counts),
            p: verdict.p.expect("ok verdict has p"),
            verdict: Some(verdict),
            l: l_override.unwrap_or_else(|| counts.predicted_clean()),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterEcho {
    pub l: u64,
    pub p: f64,
    #[serde(rename = "K")]
    pub k: f64,
    pub m: f64,
    #[serde(rename = "K_hat")]
    pub k_hat: f64,
    pub m_hat: f64,
    pub t: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub toolkit_version: String,
    pub seed: u64,
    pub samples: u64,
    pub modes: Vec<ReliabilityMode>,
    pub provenance: ForProvenance,
    pub parameters: ParameterEcho,
    pub points: Vec<PointRecord>,
}

impl RunReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn verdicts(&self) -> impl Iterator<Item = Verdict> + '_ {
        self.points.iter().flat_map(point_verdicts)
    }
}

fn point_verdicts(p: &PointRecord) -> impl Iterator<Item = Verdict> + '_ {
    std::iter::once(p.hazard_bound.audit.verdict)
        .chain(p.reliability_bounds.iter().map(|b| b.audit.verdict))
        .chain([
            p.reference_hazard_event.audit.verdict,
            p.reference_reliability_event.audit.verdict,
        ])
}

/// Evaluate `manual`/`residual` hazards at each time in `times`.
pub fn analyze(
    provenance: ForProvenance,
    k: f64,
    m: f64,
    k_hat: f64,
    m_hat: f64,
    times: &[f64],
    cfg: &EvalConfig,
) -> Result<RunReport> {
    if times.is_empty() {
        return Err(Error::domain("t", "at least one time point is required"));
    }
    let inputs: Vec<PointInputs> = times
        .iter()
        .map(|&t| PointInputs {
            l: provenance.l,
            p: provenance.p,
            k,
            m,
            k_hat,
            m_hat,
            t,
        })
        .collect();
    let points = evaluate_all(&inputs, cfg)?;
    Ok(RunReport {
        toolkit_version: TOOLKIT_VERSION.to_string(),
        seed: cfg.seed,
        samples: cfg.samples,
        modes: cfg.modes.clone(),
        parameters: ParameterEcho {
            l: provenance.l,
            p: provenance.p,
            k,
            m,
            k_hat,
            m_hat,
            t: times.to_vec(),
        },
        provenance,
        points,
    })
}

fn evaluate_all(inputs: &[PointInputs], cfg: &EvalConfig) -> Result<Vec<PointRecord>> {
    use rayon::prelude::*;
    cfg.run(|| {
        inputs
            .par_iter()
            .map(|p| evaluate_point(p, cfg))
            .collect::<Vec<_>>()
    })
    .into_iter()
    .collect()
}

/// Per-parameter value lists; the sweep evaluates their Cartesian product.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepGrid {
    pub l: Vec<u64>,
    pub p: Vec<f64>,
    #[serde(rename = "K")]
    pub k: Vec<f64>,
    pub m: Vec<f64>,
    #[serde(rename = "K_hat")]
    pub k_hat: Vec<f64>,
    pub m_hat: Vec<f64>,
    pub t: Vec<f64>,
}

impl Default for SweepGrid {
    /// 432 points around the canonical example.
    fn default() -> Self {
        Self {
            l: vec![10, 100, 1000],
            p: vec![0.05, 0.1, 0.3],
            k: vec![1.0, 2.0],
            m: vec![0.0, 0.5],
            k_hat: vec![0.5, 1.0],
            m_hat: vec![0.0, 0.5],
            t: vec![1.0, 4.0, 16.0],
        }
    }
}

impl SweepGrid {
    pub fn single(inputs: PointInputs) -> Self {
        Self {
            l: vec![inputs.l],
            p: vec![inputs.p],
            k: vec![inputs.k],
            m: vec![inputs.m],
            k_hat: vec![inputs.k_hat],
            m_hat: vec![inputs.m_hat],
            t: vec![inputs.t],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let lists: [(&str, usize); 7] = [
            ("l", self.l.len()),
            ("p", self.p.len()),
            ("K", self.k.len()),
            ("m", self.m.len()),
            ("K_hat", self.k_hat.len()),
            ("m_hat", self.m_hat.len()),
            ("t", self.t.len()),
        ];
        if let Some((name, _)) = lists.iter().find(|(_, n)| *n == 0) {
            return Err(Error::domain(*name, "sweep axis has no values"));
        }
        for &l in &self.l {
            FailurePopulation::new(l, 0.5)?;
        }
        for &p in &self.p {
            FailurePopulation::new(1, p)?;
        }
        for &k in &self.k {
            WeibullParams::named(k, 0.0, "K", "m")?;
        }
        for &m in &self.m {
            WeibullParams::named(1.0, m, "K", "m")?;
        }
        for &k in &self.k_hat {
            WeibullParams::named(k, 0.0, "K_hat", "m_hat")?;
        }
        for &m in &self.m_hat {
            WeibullParams::named(1.0, m, "K_hat", "m_hat")?;
        }
        for &t in &self.t {
            if !(t.is_finite() && t > 0.0) {
                return Err(Error::domain("t", format!("must be > 0, got {t}")));
            }
        }
        Ok(())
    }

    /// Grid points in lexicographic order with `t` varying fastest.
    pub fn points(&self) -> Vec<PointInputs> {
        let mut out = Vec::new();
        for &l in &self.l {
            for &p in &self.p {
                for &k in &self.k {
                    for &m in &self.m {
                        for &k_hat in &self.k_hat {
                            for &m_hat in &self.m_hat {
                                for &t in &self.t {
                                    out.push(PointInputs {
                                        l,
                                        p,
                                        k,
                                        m,
                                        k_hat,
                                        m_hat,
                                        t,
                                    });
                                }
                            }
                        }
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct VerdictTally {
    pub holds: u64,
    pub violated: u64,
    /// Violations where every domain flag passed.
    pub violated_in_domain: u64,
    pub inconclusive: u64,
    pub exact_zero_event: u64,
}

impl VerdictTally {
    fn add(&mut self, b: &AuditedBound) {
        match b.audit.verdict {
            Verdict::Holds => self.holds += 1,
            Verdict::Violated => {
                self.violated += 1;
                if b.report.domain_flags.all_pass() {
                    self.violated_in_domain += 1;
                }
            }
            Verdict::Inconclusive => self.inconclusive += 1,
            Verdict::ExactZeroEvent => self.exact_zero_event += 1,
        }
    }
}

/// Whether the hazard bound falls strictly along one axis with the other
/// parameters held fixed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotonicityCheck {
    pub axis: Axis,
    /// The fixed parameters (the `axis` entry holds the first value).
    pub fixed: PointInputs,
    pub values: Vec<f64>,
    pub log_bounds: Vec<f64>,
    /// For `l`: `lp + 2A - B > 0` at every point. For `t`: every domain flag
    /// passes at every point.
    pub applicable: bool,
    pub strictly_decreasing: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub points: usize,
    /// Keyed by bound name (`hazard`, `reliability/<mode>`, `reference/hazard`,
    /// `reference/reliability`).
    pub verdicts: BTreeMap<String, VerdictTally>,
    pub monotonicity: Vec<MonotonicityCheck>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepOutput {
    pub toolkit_version: String,
    pub seed: u64,
    pub samples: u64,
    pub modes: Vec<ReliabilityMode>,
    pub grid: SweepGrid,
    pub records: Vec<PointRecord>,
    pub summary: SweepSummary,
}

impl SweepOutput {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn to_csv(&self) -> String {
        records_to_csv(&self.records)
    }

    pub fn any_violated(&self) -> bool {
        self.summary.verdicts.values().any(|t| t.violated > 0)
    }
}

pub fn sweep(grid: &SweepGrid, cfg: &EvalConfig) -> Result<SweepOutput> {
    grid.validate()?;
    let records = evaluate_all(&grid.points(), cfg)?;
    let summary = summarize(&records, grid);
    Ok(SweepOutput {
        toolkit_version: TOOLKIT_VERSION.to_string(),
        seed: cfg.seed,
        samples: cfg.samples,
        modes: cfg.modes.clone(),
        grid: grid.clone(),
        records,
        summary,
    })
}

fn summarize(records: &[PointRecord], grid: &SweepGrid) -> SweepSummary {
    let mut verdicts: BTreeMap<String, VerdictTally> = BTreeMap::new();
    for r in records {
        verdicts
            .entry("hazard".into())
            .or_default()
            .add(&r.hazard_bound);
        for b in &r.reliability_bounds {
            if let crate::chernoff::BoundKind::Reliability { mode } = b.report.kind {
                verdicts
                    .entry(format!("reliability/{}", mode.as_str()))
                    .or_default()
                    .add(b);
            }
        }
        verdicts
            .entry("reference/hazard".into())
            .or_default()
            .add(&r.reference_hazard_event);
        verdicts
            .entry("reference/reliability".into())
            .or_default()
            .add(&r.reference_reliability_event);
    }

    let mut monotonicity = Vec::new();
    if grid.l.len() > 1 {
        monotonicity.extend(monotonicity_checks(records, Axis::L, |r| {
            let inp = &r.inputs;
            let a = r.expected_sdp_hazard - r.expected_failures;
            inp.l as f64 * inp.p + 2.0 * a - r.manual_hazard > 0.0
        }));
    }
    if grid.t.len() > 1 {
        monotonicity.extend(monotonicity_checks(records, Axis::T, |r| {
            r.hazard_bound.report.domain_flags.all_pass()
        }));
    }
    SweepSummary {
        points: records.len(),
        verdicts,
        monotonicity,
    }
}

fn monotonicity_checks<F>(
    records: &[PointRecord],
    axis: Axis,
    applicable: F,
) -> Vec<MonotonicityCheck>
where
    F: Fn(&PointRecord) -> bool,
{
    // group by every other axis, keeping first-appearance order
    let mut groups: Vec<(Vec<u64>, Vec<&PointRecord>)> = Vec::new();
    for r in records {
        let key: Vec<u64> = Axis::ALL
            .iter()
            .filter(|&&a| a != axis)
            .map(|&a| r.inputs.axis(a).to_bits())
            .collect();
        match groups.iter_mut().find(|(k, _)| *k == key) {
            Some((_, members)) => members.push(r),
            None => groups.push((key, vec![r])),
        }
    }
    groups
        .into_iter()
        .map(|(_, mut members)| {
            members.sort_by(|a, b| a.inputs.axis(axis).total_cmp(&b.inputs.axis(axis)));
            let values: Vec<f64> = members.iter().map(|r| r.inputs.axis(axis)).collect();
            let log_bounds: Vec<f64> = members
                .iter()
                .map(|r| r.hazard_bound.report.log_bound)
                .collect();
            MonotonicityCheck {
                axis,
                fixed: members[0].inputs,
                applicable: members.iter().all(|r| applicable(r)),
                strictly_decreasing: log_bounds.windows(2).all(|w| w[1] < w[0]),
                values,
                log_bounds,
            }
        })
        .collect()
}

fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

fn fmt_flags(f: &DomainFlags) -> String {
    let mut names = Vec::new();
    if f.delta_in_range {
        names.push("delta_in_range");
    }
    if f.delta_at_boundary {
        names.push("delta_at_boundary");
    }
    if f.threshold_positive {
        names.push("threshold_positive");
    }
    if f.threshold_below_mu {
        names.push("threshold_below_mu");
    }
    if f.vacuous {
        names.push("vacuous");
    }
    names.join(";")
}

fn bound_columns(prefix: &str, b: Option<&AuditedBound>, cols: &mut Vec<(String, String)>) {
    let get = |f: fn(&AuditedBound) -> String| b.map(f).unwrap_or_default();
    cols.push((
        format!("{prefix}_threshold"),
        get(|b| fmt_f64(b.report.event_threshold)),
    ));
    cols.push((format!("{prefix}_delta"), get(|b| fmt_f64(b.report.delta))));
    cols.push((format!("{prefix}_mu"), get(|b| fmt_f64(b.report.mu_used))));
    cols.push((
        format!("{prefix}_log_bound"),
        get(|b| fmt_f64(b.report.log_bound)),
    ));
    cols.push((prefix.to_string(), get(|b| fmt_f64(b.report.bound))));
    cols.push((
        format!("{prefix}_flags"),
        get(|b| fmt_flags(&b.report.domain_flags)),
    ));
    cols.push((
        format!("{prefix}_verdict"),
        get(|b| b.audit.verdict.as_str().to_string()),
    ));
    cols.push((format!("{prefix}_margin"), get(|b| fmt_f64(b.audit.margin))));
}

/// Flat `(column, value)` view of a record; shared by the CSV writer and
/// the plot extractor.
pub fn flatten_record(r: &PointRecord) -> Vec<(String, String)> {
    let i = &r.inputs;
    let mut cols: Vec<(String, String)> = vec![
        ("l".into(), i.l.to_string()),
        ("p".into(), fmt_f64(i.p)),
        ("K".into(), fmt_f64(i.k)),
        ("m".into(), fmt_f64(i.m)),
        ("K_hat".into(), fmt_f64(i.k_hat)),
        ("m_hat".into(), fmt_f64(i.m_hat)),
        ("t".into(), fmt_f64(i.t)),
        ("expected_failures".into(), fmt_f64(r.expected_failures)),
        ("manual_hazard".into(), fmt_f64(r.manual_hazard)),
        ("expected_sdp_hazard".into(), fmt_f64(r.expected_sdp_hazard)),
        ("manual_reliability".into(), fmt_f64(r.manual_reliability)),
        (
            "residual_reliability".into(),
            fmt_f64(r.residual_reliability),
        ),
        (
            "expected_sdp_reliability".into(),
            fmt_f64(r.expected_sdp_reliability),
        ),
    ];
    for mode in ReliabilityMode::ALL {
        let v = r
            .expected_reliability_bounds
            .iter()
            .find(|mv| mv.mode == mode)
            .map(|mv| mv.value);
        cols.push((
            format!("expected_reliability_bound_{}", mode_suffix(mode)),
            fmt_opt(v),
        ));
    }
    cols.push(("hazard_event_exact".into(), fmt_opt(r.hazard_event_exact)));
    cols.push((
        "reliability_event_exact".into(),
        fmt_opt(r.reliability_event_exact),
    ));
    bound_columns("hazard_bound", Some(&r.hazard_bound), &mut cols);
    for mode in ReliabilityMode::ALL {
        bound_columns(
            &format!("reliability_bound_{}", mode_suffix(mode)),
            r.reliability_bound(mode),
            &mut cols,
        );
    }
    bound_columns(
        "reference_hazard",
        Some(&r.reference_hazard_event),
        &mut cols,
    );
    bound_columns(
        "reference_reliability",
        Some(&r.reference_reliability_event),
        &mut cols,
    );
    let mc = r.monte_carlo.as_ref();
    for (name, get) in [
        (
            "mc_hazard_event",
            (|s: &MonteCarloSection| s.hazard_event)
                as fn(&MonteCarloSection) -> MonteCarloEstimate,
        ),
        ("mc_reliability_exceedance", |s| s.reliability_exceedance),
        ("mc_expected_reliability", |s| s.expected_reliability),
    ] {
        let e = mc.map(get);
        cols.push((name.to_string(), fmt_opt(e.map(|e| e.estimate))));
        cols.push((format!("{name}_ci_low"), fmt_opt(e.map(|e| e.ci_low))));
        cols.push((format!("{name}_ci_high"), fmt_opt(e.map(|e| e.ci_high))));
    }
    cols
}

fn mode_suffix(mode: ReliabilityMode) -> &'static str {
    match mode {
        ReliabilityMode::AsStated => "as_stated",
        ReliabilityMode::SignCorrected => "sign_corrected",
    }
}

/// Sweep table: one row per record, 17 significant digits per float.
pub fn records_to_csv(records: &[PointRecord]) -> String {
    let mut out = String::new();
    let header = match records.first() {
        Some(r) => flatten_record(r)
            .into_iter()
            .map(|(k, _)| k)
            .collect::<Vec<_>>(),
        None => return out,
    };
    out.push_str(&header.join(","));
    out.push('\n');
    for r in records {
        let row: Vec<String> = flatten_record(r).into_iter().map(|(_, v)| v).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlotQuantity {
    Hazard,
    Reliability,
    BoundT1,
    BoundT2,
    ExactTail,
}

impl std::str::FromStr for PlotQuantity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hazard" => Ok(PlotQuantity::Hazard),
            "reliability" => Ok(PlotQuantity::Reliability),
            "bound_t1" => Ok(PlotQuantity::BoundT1),
            "bound_t2" => Ok(PlotQuantity::BoundT2),
            "exact_tail" => Ok(PlotQuantity::ExactTail),
            other => Err(Error::UnknownQuantity(other.to_string())),
        }
    }
}

impl PlotQuantity {
    fn columns(self) -> &'static [&'static str] {
        match self {
            PlotQuantity::Hazard => &["manual_hazard", "expected_sdp_hazard"],
            PlotQuantity::Reliability => &[
                "manual_reliability",
                "residual_reliability",
                "expected_sdp_reliability",
            ],
            PlotQuantity::BoundT1 => &["hazard_bound"],
            PlotQuantity::BoundT2 => &[
                "reliability_bound_as_stated",
                "reliability_bound_sign_corrected",
            ],
            PlotQuantity::ExactTail => &["hazard_event_exact", "reliability_event_exact"],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

/// Rows of a table as column maps, from either a report/sweep JSON document
/// or a sweep CSV.
pub fn load_table(source: &str) -> Result<Vec<BTreeMap<String, String>>> {
    let trimmed = source.trim_start();
    if trimmed.is_empty() {
        return Ok(Vec::new());
    }
    if trimmed.starts_with(['{', '[']) {
        let value: serde_json::Value = serde_json::from_str(trimmed)?;
        let records = if !value.is_object() {
            return Err(Error::Parse {
                row: 0,
                message: "expected a report or sweep object".into(),
            });
        } else if value.get("points").is_some() {
            RunReport::from_json(trimmed)?.points
        } else {
            SweepOutput::from_json(trimmed)?.records
        };
        return Ok(records
            .iter()
            .map(|r| flatten_record(r).into_iter().collect())
            .collect());
    }
    let mut reader = csv::Reader::from_reader(trimmed.as_bytes());
    let headers = reader.headers()?.clone();
    if let Some(axis) = Axis::ALL
        .iter()
        .find(|a| !headers.iter().any(|h| h == a.name()))
    {
        return Err(Error::Parse {
            row: 1,
            message: format!("not a sweep table: no `{}` column", axis.name()),
        });
    }
    let mut rows = Vec::new();
    for row in reader.records() {
        let row = row?;
        rows.push(
            headers
                .iter()
                .zip(row.iter())
                .map(|(h, v)| (h.to_string(), v.to_string()))
                .collect(),
        );
    }
    Ok(rows)
}

fn parse_cell(row: &BTreeMap<String, String>, col: &str) -> Result<Option<f64>> {
    match row.get(col).map(String::as_str) {
        None | Some("") => Ok(None),
        Some(v) => v.parse::<f64>().map(Some).map_err(|_| Error::Parse {
            row: 0,
            message: format!("column `{col}`: `{v}` is not a number"),
        }),
    }
}

/// Series of `quantity` against `x`. When `x` is `None` the axis is the one
/// that varies across rows (preferring `t`). Curves are split by the values
/// of the other varying axes, in first-appearance order; points are sorted
/// by `x`.
pub fn plot_series(
    rows: &[BTreeMap<String, String>],
    quantity: PlotQuantity,
    x: Option<Axis>,
) -> Result<Vec<Series>> {
    let mut inputs: Vec<[f64; 7]> = Vec::with_capacity(rows.len());
    for row in rows {
        let mut v = [0.0; 7];
        for (slot, axis) in v.iter_mut().zip(Axis::ALL) {
            *slot = parse_cell(row, axis.name())?.ok_or_else(|| Error::Parse {
                row: 0,
                message: format!("missing column `{}`", axis.name()),
            })?;
        }
        inputs.push(v);
    }
    let varies = |idx: usize| {
        inputs
            .iter()
            .any(|v| v[idx].to_bits() != inputs[0][idx].to_bits())
    };
    let x_axis = x.unwrap_or_else(|| {
        [
            Axis::T,
            Axis::L,
            Axis::P,
            Axis::K,
            Axis::M,
            Axis::KHat,
            Axis::MHat,
        ]
        .into_iter()
        .find(|a| varies(Axis::ALL.iter().position(|b| b == a).unwrap()))
        .unwrap_or(Axis::T)
    });
    let x_idx = Axis::ALL.iter().position(|a| *a == x_axis).unwrap();
    let split: Vec<usize> = (0..7).filter(|&i| i != x_idx && varies(i)).collect();

    let mut series: Vec<Series> = Vec::new();
    for &col in quantity.columns() {
        let mut groups: Vec<(Vec<u64>, Series)> = Vec::new();
        for (row, v) in rows.iter().zip(&inputs) {
            let Some(y) = parse_cell(row, col)? else {
                continue;
            };
            let key: Vec<u64> = split.iter().map(|&i| v[i].to_bits()).collect();
            let idx = match groups.iter().position(|(k, _)| *k == key) {
                Some(i) => i,
                None => {
                    let label = split
                        .iter()
                        .map(|&i| format!("{}={}", Axis::ALL[i].name(), v[i]))
                        .collect::<Vec<_>>()
                        .join(",");
                    let name = if label.is_empty() {
                        col.to_string()
                    } else {
                        format!("{col}[{label}]")
                    };
                    groups.push((
                        key,
                        Series {
                            name,
                            points: Vec::new(),
                        },
                    ));
                    groups.len() - 1
                }
            };
            groups[idx].1.points.push((v[x_idx], y));
        }
        for (_, mut s) in groups {
            s.points.sort_by(|a, b| a.0.total_cmp(&b.0));
            series.push(s);
        }
    }
    Ok(series)
}

/// Render series as `# name` / `x,y` blocks separated by blank lines. With
/// no series only the `x,y` header is written.
pub fn render_series(series: &[Series]) -> String {
    if series.is_empty() {
        return "x,y\n".to_string();
    }
    let mut out = String::new();
    for (i, s) in series.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        let _ = writeln!(out, "# {}", s.name);
        out.push_str("x,y\n");
        for (x, y) in &s.points {
            let _ = writeln!(out, "{x:?},{y:?}");
        }
    }
    out
}
