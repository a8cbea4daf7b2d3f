//! Reference values and grids shared by the integration suites.
//!
//! Every `*_MP` constant is printed by `oracles/mp_oracle.py` (mpmath, 50
//! digits) and frozen here; none comes from this crate.
#![allow(dead_code, clippy::excessive_precision)]

use sdp_bounds::{FailurePopulation, TimePoint, WeibullParams};

/// `(l, p, k, pmf)`.
pub const PMF_MP: [(u64, f64, u64, f64); 8] = [
    (10, 0.5, 2, 0.0439453125),
    (100, 0.1, 10, 0.13186534682448821662),
    (1000, 0.3, 280, 0.010700779097633626017),
    (1_000_000, 0.01, 10_000, 0.0040094873631829205393),
    (1_000_000, 0.5, 500_000, 0.00079788436133175008909),
    (1_000_000, 0.5, 499_000, 0.00010798197801891516213),
    (100_000, 0.99, 99_000, 0.012678161323544588602),
    (5000, 0.001, 0, 0.0067211119598656178118),
];

/// `(l, p, threshold, Pr[X < threshold])`.
pub const CDF_MP: [(u64, f64, f64, f64); 4] = [
    (10, 0.5, 3.0, 0.0546875),
    (100, 0.1, 2.0, 0.00032168805319411499842),
    (10, 0.5, 1.0, 0.0009765625),
    (100, 0.1, 5.5, 0.057576886487033808238),
];

pub const EXP_MINUS_9_MP: f64 = 0.0001234098040866795495;
pub const EXP_MINUS_32_3_MP: f64 = 0.000023309101142937002487;

/// Expected reliability at `l=20, p=0.2, K̂=1, m̂=1, t=0.5`.
pub const EXPECTED_R_EXACT_MP: f64 = 0.17131382975544242585;
pub const EXPECTED_R_SIGN_CORRECTED_MP: f64 = 0.18288872683694582377;
pub const EXPECTED_R_AS_STATED_MP: f64 = 0.23483377368429988995;

/// Hazard bound at the canonical point, `e^(-100/24)`.
pub const HAZARD_BOUND_CANONICAL_MP: f64 = 0.015503853599009318882;
pub const CHERNOFF_MU10_D08_MP: f64 = 0.040762203978366215166;

/// Reliability bound at `l=10, p=0.5, K=2, m=1, K̂=1, m̂=1, t=2`:
/// `(mu, log_bound)` for as-stated then sign-corrected.
pub const RELIABILITY_BOUND_MP: [(f64, f64); 2] = [
    (0.097947507280096070994, -4.1537488917165336424),
    (0.0017939711733939018359, -277.71217585975125721),
];

pub fn rel_err(actual: f64, expected: f64) -> f64 {
    ((actual - expected) / expected).abs()
}

/// Canonical example point.
pub struct Canonical {
    pub pop: FailurePopulation,
    pub manual: WeibullParams,
    pub residual: WeibullParams,
    pub t: TimePoint,
}

pub fn canonical() -> Canonical {
    Canonical {
        pop: FailurePopulation::new(100, 0.1).unwrap(),
        manual: WeibullParams::new(2.0, 0.5).unwrap(),
        residual: WeibullParams::new(1.0, 0.5).unwrap(),
        t: TimePoint::new(4.0).unwrap(),
    }
}

pub const GRID_K: [f64; 4] = [0.1, 1.0, 2.0, 10.0];
pub const GRID_M: [f64; 5] = [-0.5, 0.0, 0.5, 1.0, 2.0];
pub const GRID_T: [f64; 5] = [0.01, 0.1, 1.0, 5.0, 10.0];

/// The 100-point `(K, m, t)` grid.
pub fn kmt_grid() -> Vec<(f64, f64, f64)> {
    let mut out = Vec::new();
    for k in GRID_K {
        for m in GRID_M {
            for t in GRID_T {
                out.push((k, m, t));
            }
        }
    }
    out
}

pub const GRID_L: [u64; 3] = [10, 100, 1000];
pub const GRID_P: [f64; 3] = [0.05, 0.1, 0.3];

/// Relative difference between two reliabilities given as logs; immune to
/// underflow of the reliabilities themselves.
pub fn reliability_rel_err(log_a: f64, log_b: f64) -> f64 {
    (log_a - log_b).exp_m1().abs()
}
