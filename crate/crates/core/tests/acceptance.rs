//! Acceptance checks, one per criterion. Runs as its own binary (no libtest
//! harness) so every criterion prints a PASS/FAIL line even when others fail;
//! the process exits non-zero if any criterion fails.

mod common;

use std::time::{Duration, Instant};

use common::*;
use sdp_bounds::chernoff::{hazard_deviation_bound, reliability_deviation_bound};
use sdp_bounds::hazard::{log_reliability_by_integration, CombinedHazardModel};
use sdp_bounds::montecarlo::{
    audit_bound, draw_failures, estimate_expected_reliability, estimate_reliability_exceedance,
    estimate_tail_probability, exceedance_indicator, tail_indicator, Empirical, MonteCarloConfig,
    Verdict,
};
use sdp_bounds::quadrature::DEFAULT_TOLERANCE;
use sdp_bounds::report::ForProvenance;
use sdp_bounds::{
    analyze, evaluate_point, parse_confusion, reference_chernoff_bound, sweep,
    validate_assumptions, BoundKind, ConfusionCounts, EvalConfig, FailurePopulation, PointInputs,
    ReliabilityMode, SweepGrid, TimePoint, WeibullParams,
};

/// Outcome of one check: `Err` carries the reason it failed.
type Check = Result<String, String>;

type Criterion = (&'static str, fn() -> Check);

fn ensure(ok: bool, why: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(why())
    }
}

fn within(elapsed: Duration, limit_s: f64) -> Result<(), String> {
    ensure(elapsed.as_secs_f64() < limit_s, || {
        format!("took {:.2}s, limit {limit_s}s", elapsed.as_secs_f64())
    })
}

fn canonical_inputs() -> PointInputs {
    PointInputs {
        l: 100,
        p: 0.1,
        k: 2.0,
        m: 0.5,
        k_hat: 1.0,
        m_hat: 0.5,
        t: 4.0,
    }
}

fn false_omission_rate_exactness() -> Check {
    let start = Instant::now();
    let c = parse_confusion(r#"{"fn": 5, "tn": 45}"#).map_err(|e| e.to_string())?;
    let p = c.false_omission_rate().map_err(|e| e.to_string())?;
    ensure(p == 0.1, || format!("fn=5 tn=45 gave p={p:?}"))?;
    let half = ConfusionCounts::new(1, 1)
        .false_omission_rate()
        .map_err(|e| e.to_string())?;
    ensure(half == 0.5, || format!("fn=1 tn=1 gave p={half:?}"))?;
    let gate = validate_assumptions(&ConfusionCounts::new(0, 50));
    ensure(!gate.ok && !gate.violations.is_empty(), || {
        format!("fn=0 tn=50 was accepted: {gate:?}")
    })?;
    ensure(validate_assumptions(&c).ok, || {
        "fn=5 tn=45 was rejected".into()
    })?;
    within(start.elapsed(), 1.0)?;
    Ok("p(5,45) = 0.1, p(1,1) = 0.5, p = 0 rejected".into())
}

fn weibull_quadrature_agreement() -> Check {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for (k, m, t) in kmt_grid() {
        let w = WeibullParams::new(k, m).map_err(|e| e.to_string())?;
        let t = TimePoint::new(t).map_err(|e| e.to_string())?;
        let quad = log_reliability_by_integration(|s| k * s.powf(m), t, DEFAULT_TOLERANCE)
            .map_err(|e| e.to_string())?;
        let err = reliability_rel_err(w.log_reliability(t), quad);
        ensure(err <= 1e-8, || {
            format!("K={k} m={m} t={}: relative error {err:e}", t.value())
        })?;
        worst = worst.max(err);
    }
    within(start.elapsed(), 10.0)?;
    Ok(format!("100 grid points, worst relative error {worst:.1e}"))
}

fn expected_reliability_consistency() -> Check {
    let start = Instant::now();
    let model = CombinedHazardModel::new(
        WeibullParams::new(1.0, 1.0).unwrap(),
        FailurePopulation::new(20, 0.2).unwrap(),
    );
    let t = TimePoint::new(0.5).unwrap();
    let exact = model.expected_reliability_exact(t);
    ensure(rel_err(exact, EXPECTED_R_EXACT_MP) <= 1e-12, || {
        format!("exact expectation {exact} vs reference {EXPECTED_R_EXACT_MP}")
    })?;
    let est = estimate_expected_reliability(&model, t, &MonteCarloConfig::new(1_000_000, 11))
        .map_err(|e| e.to_string())?;
    let z = (est.estimate - exact) / est.std_error;
    ensure(z.abs() <= 3.0, || {
        format!("sampled mean {est:?} is {z:.2} SE away")
    })?;

    let mut points = 0;
    for l in GRID_L {
        for p in GRID_P {
            let pop = FailurePopulation::new(l, p).unwrap();
            for (k, m, t) in kmt_grid() {
                let model = CombinedHazardModel::new(WeibullParams::new(k, m).unwrap(), pop);
                let t = TimePoint::new(t).unwrap();
                // logs: the reliabilities underflow at the far end of the grid
                let e = model.log_expected_reliability_exact(t);
                let sc = model.log_expected_reliability_bound(t, ReliabilityMode::SignCorrected);
                let st = model.log_expected_reliability_bound(t, ReliabilityMode::AsStated);
                ensure(e < sc && sc < st, || {
                    format!("order broken at l={l} p={p} K={k} m={m} t={}", t.value())
                })?;
                points += 1;
            }
        }
    }
    within(start.elapsed(), 30.0)?;
    Ok(format!(
        "E[R] = {exact:.6}, sampled {:.6} ({z:+.2} SE), ordering holds at {points} points",
        est.estimate
    ))
}

fn canonical_hazard_bound() -> Check {
    let start = Instant::now();
    let rec =
        evaluate_point(&canonical_inputs(), &EvalConfig::default()).map_err(|e| e.to_string())?;
    let h = &rec.hazard_bound;
    let r = &h.report;
    ensure((r.delta - 5.0 / 6.0).abs() <= 1e-15, || {
        format!("delta {}", r.delta)
    })?;
    ensure(r.mu_used == 12.0, || format!("mu {}", r.mu_used))?;
    ensure(rel_err(r.bound, HAZARD_BOUND_CANONICAL_MP) <= 1e-12, || {
        format!("bound {} vs {HAZARD_BOUND_CANONICAL_MP}", r.bound)
    })?;
    let exact = rec.hazard_event_exact.ok_or("no exact event probability")?;
    ensure(rel_err(exact, CDF_MP[1].3) <= 1e-12, || {
        format!("Pr[X < 2] = {exact} vs {}", CDF_MP[1].3)
    })?;
    ensure(h.audit.verdict == Verdict::Holds, || {
        format!("verdict {:?}", h.audit.verdict)
    })?;
    ensure(h.audit.margin > 1e-2, || {
        format!("margin {}", h.audit.margin)
    })?;
    ensure(r.closed_form_gap() <= 1e-12, || {
        format!("closed-form gap {:e}", r.closed_form_gap())
    })?;
    within(start.elapsed(), 1.0)?;
    Ok(format!(
        "bound {:.4e}, Pr[X < 2] = {exact:.4e}, holds with margin {:.4e}",
        r.bound, h.audit.margin
    ))
}

fn reliability_event_structure() -> Check {
    let start = Instant::now();
    for (l, p, k, m, kh, mh, t) in [
        (10, 0.5, 2.0, 1.0, 1.0, 1.0, 2.0),
        (100, 0.1, 2.0, 0.5, 1.0, 0.5, 4.0),
        (50, 0.3, 10.0, 2.0, 1.0, 0.0, 0.7),
        (1000, 0.05, 1.0, -0.5, 0.5, 0.5, 3.0),
    ] {
        let pop = FailurePopulation::new(l, p).unwrap();
        let manual = WeibullParams::new(k, m).unwrap();
        let model = CombinedHazardModel::new(WeibullParams::new(kh, mh).unwrap(), pop);
        let t = TimePoint::new(t).unwrap();
        let c = sdp_bounds::chernoff::reliability_event_threshold(&manual, &model.residual, t)
            .map_err(|e| e.to_string())?;
        let cfg = MonteCarloConfig::new(50_000, 3);
        for x in draw_failures(&pop, &cfg) {
            ensure(
                exceedance_indicator(&model, &manual, x, t) == tail_indicator(x, c),
                || format!("indicators differ at x={x}, cutoff {c}"),
            )?;
        }
        let a =
            estimate_reliability_exceedance(&model, &manual, t, &cfg).map_err(|e| e.to_string())?;
        let b = estimate_tail_probability(&pop, c, &cfg).map_err(|e| e.to_string())?;
        ensure(a == b, || format!("estimates differ: {a:?} vs {b:?}"))?;
    }

    let same = WeibullParams::new(1.5, 0.5).unwrap();
    let pop = FailurePopulation::new(30, 0.4).unwrap();
    let model = CombinedHazardModel::new(same, pop);
    for t in GRID_T {
        let t = TimePoint::new(t).unwrap();
        let r = reliability_deviation_bound(&pop, &same, &same, t, ReliabilityMode::AsStated)
            .map_err(|e| e.to_string())?;
        ensure(r.exact_probability == Some(0.0), || {
            format!(
                "t={}: exact probability {:?}",
                t.value(),
                r.exact_probability
            )
        })?;
        ensure(pop.cdf_below(r.event_threshold) == 0.0, || {
            "non-zero CDF".into()
        })?;
        let e = estimate_reliability_exceedance(&model, &same, t, &MonteCarloConfig::new(5000, 9))
            .map_err(|e| e.to_string())?;
        ensure(e.estimate == 0.0 && e.ci_high == 0.0, || format!("{e:?}"))?;
    }

    let mut points = 0;
    let mut worst: f64 = 0.0;
    for l in GRID_L {
        for p in GRID_P {
            let pop = FailurePopulation::new(l, p).unwrap();
            for (k, m, t) in kmt_grid() {
                for (kh, mh) in [(0.5, 0.0), (1.0, 0.5), (0.1, -0.5)] {
                    let manual = WeibullParams::new(k, m).unwrap();
                    let residual = WeibullParams::new(kh, mh).unwrap();
                    let t = TimePoint::new(t).unwrap();
                    for mode in ReliabilityMode::ALL {
                        // an overflowing as-stated expectation is a reported error
                        let Ok(r) = reliability_deviation_bound(&pop, &manual, &residual, t, mode)
                        else {
                            continue;
                        };
                        // compared as values while the bound is a normal float; past
                        // that both sides are 0.0 and only the exponents can differ
                        let err = if r.bound >= f64::MIN_POSITIVE {
                            rel_err(r.bound, r.unsimplified_log_bound.exp())
                        } else {
                            r.closed_form_gap()
                        };
                        ensure(err <= 1e-12, || {
                            format!("closed form off by {err:e} at {r:?}")
                        })?;
                        worst = worst.max(err);
                        points += 1;
                    }
                }
            }
        }
    }
    within(start.elapsed(), 10.0)?;
    Ok(format!(
        "indicators identical, identical hazards give 0, closed form within {worst:.1e} at {points} points"
    ))
}

fn bound_decreases_in_l() -> Check {
    let start = Instant::now();
    let c = canonical();
    let mut logs = Vec::new();
    for l in [10u64, 100, 1000] {
        let pop = FailurePopulation::new(l, c.pop.p()).unwrap();
        let a = c.residual.hazard(c.t).unwrap();
        let b = c.manual.hazard(c.t).unwrap();
        ensure(pop.expected_failures() + 2.0 * a > b, || {
            format!("l={l} outside lp + 2A > B")
        })?;
        logs.push(
            hazard_deviation_bound(&pop, &c.manual, &c.residual, c.t)
                .map_err(|e| e.to_string())?
                .log_bound,
        );
    }
    ensure(logs.windows(2).all(|w| w[1] < w[0]), || {
        format!("log bounds over l = 10, 100, 1000: {logs:?}")
    })?;
    within(start.elapsed(), 1.0)?;
    Ok(format!("log bounds over l = 10, 100, 1000: {logs:.3?}"))
}

fn bound_decreases_in_t() -> Check {
    let start = Instant::now();
    let c = canonical();
    let mut logs = Vec::new();
    for t in [1.0, 4.0, 16.0] {
        let t = TimePoint::new(t).unwrap();
        let r =
            hazard_deviation_bound(&c.pop, &c.manual, &c.residual, t).map_err(|e| e.to_string())?;
        if r.domain_flags.all_pass() {
            logs.push((t.value(), r.log_bound));
        }
    }
    ensure(logs.windows(2).all(|w| w[1].1 < w[0].1), || {
        format!("domain flags pass at every t but log bounds are {logs:.3?}")
    })?;
    within(start.elapsed(), 1.0)?;
    Ok(format!(
        "(t, log bound) with domain flags passing: {logs:.3?}"
    ))
}

fn audit_integrity() -> Check {
    let start = Instant::now();
    let pop = FailurePopulation::new(10, 0.5).unwrap();
    let mut inversions = 0;
    for (bound, exact) in [(0.5, 0.7), (1e-300, 2e-300), (0.01, 0.01f64.next_up())] {
        let mut r = reference_chernoff_bound(&pop, 3.0).map_err(|e| e.to_string())?;
        r.bound = bound;
        r.log_bound = bound.ln();
        let a = audit_bound(
            &r,
            &Empirical::Exact {
                probability: exact,
                threshold: 3.0,
            },
        )
        .map_err(|e| e.to_string())?;
        ensure(a.verdict == Verdict::Violated, || {
            format!("bound {bound:e} < exact {exact:e} reported {:?}", a.verdict)
        })?;
        inversions += 1;
    }
    // log-space bound whose linear value underflows to 0
    let mut r = reference_chernoff_bound(&pop, 3.0).map_err(|e| e.to_string())?;
    r.log_bound = -800.0;
    r.bound = 0.0;
    let a = audit_bound(
        &r,
        &Empirical::Exact {
            probability: 1e-300,
            threshold: 3.0,
        },
    )
    .map_err(|e| e.to_string())?;
    ensure(a.verdict == Verdict::Violated, || {
        format!("underflowed bound: {:?}", a.verdict)
    })?;
    inversions += 1;

    let grid = SweepGrid::default();
    let out = sweep(
        &grid,
        &EvalConfig {
            samples: 10_000,
            ..EvalConfig::default()
        },
    )
    .map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let mut in_domain = 0;
    for rec in &out.records {
        for b in [
            &rec.reference_hazard_event,
            &rec.reference_reliability_event,
        ] {
            ensure(matches!(b.report.kind, BoundKind::Reference), || {
                "wrong bound kind".into()
            })?;
            if !b.report.domain_flags.all_pass() {
                continue;
            }
            in_domain += 1;
            let exact = match b.audit.empirical {
                Empirical::Exact { probability, .. } => probability,
                Empirical::MonteCarlo(_) => return Err("reference audited by sampling".into()),
            };
            ensure(exact <= b.report.bound, || {
                format!(
                    "reference bound {} below exact {exact} at {:?}",
                    b.report.bound, rec.inputs
                )
            })?;
        }
    }
    ensure(in_domain > 0, || "no in-domain reference points".into())?;
    ensure(out.records.len() == grid.points().len(), || {
        "sweep dropped points".into()
    })?;
    let hazard = &out.summary.verdicts["hazard"];
    within(elapsed, 60.0)?;
    Ok(format!(
        "{inversions} inversions flagged, reference dominates at {in_domain}/{in_domain} in-domain points, \
         hazard bound violated at {} of {} points (recorded), sweep {:.1}s",
        hazard.violated,
        out.records.len(),
        elapsed.as_secs_f64()
    ))
}

fn determinism() -> Check {
    let cfg = |workers| EvalConfig {
        samples: 20_000,
        seed: 42,
        workers,
        modes: ReliabilityMode::ALL.to_vec(),
    };
    let run_analyze = |workers| {
        analyze(
            ForProvenance::literal(100, 0.1),
            2.0,
            0.5,
            1.0,
            0.5,
            &[1.0, 4.0, 16.0],
            &cfg(workers),
        )
        .and_then(|r| r.to_json())
        .map_err(|e| e.to_string())
    };
    let a = [run_analyze(1)?, run_analyze(1)?, run_analyze(4)?];
    ensure(a[0] == a[1] && a[1] == a[2], || {
        "analyze output differs between runs".into()
    })?;

    let grid = SweepGrid::default();
    let run_sweep = |workers| {
        sweep(&grid, &cfg(workers))
            .and_then(|s| Ok((s.to_json()?, s.to_csv())))
            .map_err(|e| e.to_string())
    };
    let s = [run_sweep(1)?, run_sweep(1)?, run_sweep(4)?];
    ensure(s[0] == s[1] && s[1] == s[2], || {
        "sweep output differs between runs".into()
    })?;
    Ok(format!(
        "analyze ({} bytes) and sweep ({} bytes JSON, {} bytes CSV) identical over 2 runs and workers 1, 4",
        a[0].len(),
        s[0].0.len(),
        s[0].1.len()
    ))
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("1", false_omission_rate_exactness),
        ("2", weibull_quadrature_agreement),
        ("3", expected_reliability_consistency),
        ("4", canonical_hazard_bound),
        ("5", reliability_event_structure),
        ("6 (l)", bound_decreases_in_l),
        ("6 (t)", bound_decreases_in_t),
        ("7", audit_integrity),
        ("8", determinism),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        match check() {
            Ok(detail) => println!("PASS criterion {name}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL criterion {name}: {why}");
            }
        }
    }
    if failed > 0 {
        println!("{failed} criterion check(s) failed");
        std::process::exit(1);
    }
}
