//! Bounds on the reliability of software whose defect predictor misses
//! some faulty modules.
//!
//! Hidden failures `X` among the `l` modules predicted clean follow
//! `Binomial(l, p)` where `p` is the predictor's false omission rate. Their
//! hazard adds to a Weibull residual hazard; [`chernoff`] bounds how far the
//! resulting hazard and reliability can drift below a manually estimated
//! Weibull model, and [`montecarlo`] checks those bounds empirically.

#![allow(clippy::excessive_precision)]

pub mod chernoff;
pub mod error;
pub mod failure;
pub mod hazard;
pub mod ingest;
pub mod montecarlo;
pub mod quadrature;
pub mod report;

pub use chernoff::{
    hazard_deviation_bound, reference_chernoff_bound, reliability_deviation_bound, BoundKind,
    BoundReport, DomainFlags,
};
pub use error::{Error, Result};
pub use failure::{FailurePopulation, SamplingMethod};
pub use hazard::{CombinedHazardModel, ReliabilityMode, TimePoint, WeibullParams};
pub use ingest::{
    parse_confusion, parse_records, validate_assumptions, AssumptionVerdict, ConfusionCounts,
    Label, PredictionRecord,
};
pub use montecarlo::{
    audit_bound, AuditVerdict, Empirical, MonteCarloConfig, MonteCarloEstimate, Verdict,
};
pub use report::{
    analyze, evaluate_point, sweep, EvalConfig, PointInputs, PointRecord, RunReport, SweepGrid,
    SweepOutput,
};
