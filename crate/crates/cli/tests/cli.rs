use std::fmt::Write as _;
use std::path::Path;
use std::process::{Command, Output};

use sdp_bounds::{RunReport, SweepOutput};

/// The canonical point without its time.
const CANONICAL: [&str; 12] = [
    "--l", "100", "--p", "0.1", "--K", "2", "--m", "0.5", "--K-hat", "1", "--m-hat", "0.5",
];

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sdp-bounds"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// 50 predicted-clean modules, 5 of them defective, plus 10 predicted defective.
fn labeled_records() -> String {
    let mut s = String::from("module_id,predicted,actual\n");
    for i in 0..50 {
        let actual = if i < 5 { "defective" } else { "clean" };
        let _ = writeln!(s, "m{i},clean,{actual}");
    }
    for i in 50..60 {
        let _ = writeln!(s, "m{i},defective,defective");
    }
    s
}

#[test]
fn for_reports_the_false_omission_rate() {
    let out = run(&["for", "--fn", "5", "--tn", "45"]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    assert!(text.contains("p = 0.1\n"), "{text}");
    assert!(text.contains("l = 50"));
    assert!(text.contains("verdict: ok"));
    assert!(text.contains("assumed: "));
}

#[test]
fn for_rejects_degenerate_probabilities() {
    for (f, t) in [("0", "9"), ("0", "50"), ("3", "0"), ("0", "0")] {
        let out = run(&["for", "--fn", f, "--tn", t]);
        assert_eq!(code(&out), 1, "fn={f} tn={t}");
    }
}

#[test]
fn bad_flags_are_usage_errors() {
    assert_eq!(code(&run(&["for", "--fn", "5"])), 1);
    assert_eq!(code(&run(&["analyze", "--bogus"])), 1);
    assert_eq!(code(&run(&["analyze", "--l", "100", "--p", "0.1"])), 1);
    let mut args = vec!["analyze"];
    args.extend(CANONICAL);
    args.extend(["--t", "4", "--mode", "sideways"]);
    assert_eq!(code(&run(&args)), 1);
    // p outside (0, 1) is a domain error
    let mut args = vec!["analyze"];
    args.extend(CANONICAL);
    args.extend(["--t", "4"]);
    args[4] = "1.5";
    assert_eq!(code(&run(&args)), 1);
    assert_eq!(code(&run(&["--help"])), 0);
}

#[test]
fn malformed_inputs_are_parse_errors() {
    let dir = tempfile::tempdir().unwrap();
    let bad_records = dir.path().join("r.csv");
    std::fs::write(&bad_records, "m1,clean,defective\nm2,maybe,clean\n").unwrap();
    let out = run(&["for", "--records", path_str(&bad_records)]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("row 2"));

    let bad_confusion = dir.path().join("c.json");
    std::fs::write(&bad_confusion, "{\"fn\": 5}").unwrap();
    assert_eq!(
        code(&run(&["for", "--confusion", path_str(&bad_confusion)])),
        2
    );

    let missing = dir.path().join("nope.csv");
    assert_eq!(code(&run(&["for", "--records", path_str(&missing)])), 2);

    let not_a_table = dir.path().join("x.json");
    std::fs::write(&not_a_table, "[1, 2").unwrap();
    assert_eq!(
        code(&run(&["plotdata", path_str(&not_a_table), "-q", "hazard"])),
        2
    );
}

#[test]
fn records_and_confusion_give_the_same_population() {
    let dir = tempfile::tempdir().unwrap();
    let records = dir.path().join("records.csv");
    std::fs::write(&records, labeled_records()).unwrap();
    let confusion = dir.path().join("confusion.json");
    std::fs::write(&confusion, r#"{"fn": 5, "tn": 45}"#).unwrap();

    let from_records = stdout(&run(&["for", "--records", path_str(&records)]));
    let from_confusion = stdout(&run(&["for", "--confusion", path_str(&confusion)]));
    let from_counts = stdout(&run(&["for", "--fn", "5", "--tn", "45"]));
    assert_eq!(from_records, from_confusion);
    assert_eq!(from_records, from_counts);

    let analyze = |source: &[&str]| {
        let mut args = vec!["analyze"];
        args.extend(source);
        args.extend(["--K", "2", "--m", "0.5", "--K-hat", "1", "--m-hat", "0.5"]);
        args.extend(["--t", "1,4", "--samples", "2000"]);
        let out = run(&args);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
        RunReport::from_json(&stdout(&out)).unwrap()
    };
    let a = analyze(&["--records", path_str(&records)]);
    let b = analyze(&["--confusion", path_str(&confusion)]);
    let c = analyze(&["--l", "50", "--p", "0.1"]);
    assert_eq!(a.points, b.points);
    assert_eq!(a.points, c.points);
    assert_eq!((a.provenance.l, a.provenance.p), (50, 0.1));
}

#[test]
fn unlabeled_records_need_a_probability() {
    let dir = tempfile::tempdir().unwrap();
    let records = dir.path().join("records.csv");
    std::fs::write(&records, "a,clean\nb,clean\nc,defective\n").unwrap();
    let base = [
        "analyze",
        "--records",
        path_str(&records),
        "--K",
        "2",
        "--m",
        "0.5",
        "--K-hat",
        "1",
        "--m-hat",
        "0.5",
        "--t",
        "4",
        "--samples",
        "0",
    ];
    assert_eq!(code(&run(&base)), 1);
    let mut args = base.to_vec();
    args.extend(["--p", "0.1"]);
    let out = run(&args);
    assert_eq!(code(&out), 0);
    assert_eq!(RunReport::from_json(&stdout(&out)).unwrap().provenance.l, 2);
    assert_eq!(code(&run(&["for", "--records", path_str(&records)])), 2);
}

#[test]
fn analyze_summarizes_the_canonical_point() {
    let dir = tempfile::tempdir().unwrap();
    let json = dir.path().join("report.json");
    let mut args = vec!["analyze"];
    args.extend(CANONICAL);
    args.extend(["--t", "4", "--samples", "20000", "--out", path_str(&json)]);
    let out = run(&args);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    assert!(
        text.contains("t = 4: hazard bound 1.550385e-2 (exact 3.216881e-4) holds"),
        "{text}"
    );
    let report = RunReport::from_json(&std::fs::read_to_string(&json).unwrap()).unwrap();
    let pt = &report.points[0];
    assert!(pt.monte_carlo.is_some());
    assert_eq!(pt.hazard_bound.report.mu_used, 12.0);
}

#[test]
fn strict_mode_fails_on_violations() {
    // both reliability bounds are violated at the canonical point
    let mut args = vec!["analyze"];
    args.extend(CANONICAL);
    args.extend(["--t", "4", "--samples", "0"]);
    assert_eq!(code(&run(&args)), 0);
    args.push("--strict");
    assert_eq!(code(&run(&args)), 3);

    let sweep = [
        "sweep",
        "--l",
        "100",
        "--p",
        "0.05",
        "--K",
        "2",
        "--m",
        "0.5",
        "--K-hat",
        "1",
        "--m-hat",
        "0.5",
        "--t",
        "16",
        "--samples",
        "0",
    ];
    assert_eq!(code(&run(&sweep)), 0);
    let mut strict = sweep.to_vec();
    strict.push("--strict");
    assert_eq!(code(&run(&strict)), 3);
}

#[test]
fn single_point_sweep_matches_analyze() {
    let dir = tempfile::tempdir().unwrap();
    let json = dir.path().join("sweep.json");
    let csv = dir.path().join("sweep.csv");
    let mut args = vec!["sweep"];
    args.extend(CANONICAL);
    args.extend(["--t", "4", "--samples", "5000", "--seed", "9"]);
    args.extend(["--out", path_str(&csv), "--json", path_str(&json)]);
    let out = run(&args);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).starts_with("1 points\n"));
    let sweep = SweepOutput::from_json(&std::fs::read_to_string(&json).unwrap()).unwrap();

    let mut args = vec!["analyze"];
    args.extend(CANONICAL);
    args.extend(["--t", "4", "--samples", "5000", "--seed", "9"]);
    let report = RunReport::from_json(&stdout(&run(&args))).unwrap();
    assert_eq!(sweep.records, report.points);
    assert_eq!(std::fs::read_to_string(&csv).unwrap().lines().count(), 2);
}

#[test]
fn outputs_do_not_depend_on_run_or_worker_count() {
    let analyze = |workers: &str| {
        let mut args = vec!["analyze"];
        args.extend(CANONICAL);
        args.extend(["--t", "1,4,16", "--samples", "30000", "--seed", "5"]);
        args.extend(["--workers", workers]);
        run(&args).stdout
    };
    let one = analyze("1");
    assert_eq!(one, analyze("1"));
    assert_eq!(one, analyze("4"));

    let sweep = |workers: &str| {
        run(&[
            "sweep",
            "--l",
            "10,100",
            "--t",
            "1,4",
            "--samples",
            "5000",
            "--seed",
            "5",
            "--workers",
            workers,
        ])
        .stdout
    };
    let one = sweep("1");
    assert!(!one.is_empty());
    assert_eq!(one, sweep("1"));
    assert_eq!(one, sweep("4"));
}

#[test]
fn json_round_trip_is_exact() {
    let mut args = vec!["analyze"];
    args.extend(CANONICAL);
    args.extend(["--t", "0.3,4,16", "--samples", "3000", "--seed", "1"]);
    let text = stdout(&run(&args));
    let report = RunReport::from_json(&text).unwrap();
    assert_eq!(report.to_json().unwrap(), text.trim_end());
    let pt = &report.points[2];
    let original: serde_json::Value = serde_json::from_str(&text).unwrap();
    let bound = original["points"][2]["hazard_bound"]["report"]["bound"]
        .as_f64()
        .unwrap();
    assert_eq!(bound.to_bits(), pt.hazard_bound.report.bound.to_bits());
}

#[test]
fn plotdata_extracts_series() {
    let dir = tempfile::tempdir().unwrap();
    let json = dir.path().join("report.json");
    let mut args = vec!["analyze"];
    args.extend(CANONICAL);
    args.extend(["--t", "1,4,16", "--samples", "0", "--out", path_str(&json)]);
    assert_eq!(code(&run(&args)), 0);

    let out = run(&["plotdata", path_str(&json), "--quantity", "bound_t1"]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "# hazard_bound");
    assert_eq!(lines[1], "x,y");
    assert_eq!(lines.len(), 5);
    assert!(lines[3].starts_with("4.0,0.0155038535990093"), "{text}");

    let reliability = stdout(&run(&["plotdata", path_str(&json), "-q", "reliability"]));
    assert_eq!(reliability.matches("# ").count(), 3);

    let csv = dir.path().join("sweep.csv");
    let out = run(&[
        "sweep",
        "--l",
        "10,100,1000",
        "--t",
        "4",
        "--p",
        "0.1",
        "--K",
        "2",
        "--m",
        "0.5",
        "--K-hat",
        "1",
        "--m-hat",
        "0.5",
        "--samples",
        "0",
        "--out",
        path_str(&csv),
    ]);
    assert_eq!(code(&out), 0);
    let by_l = stdout(&run(&["plotdata", path_str(&csv), "-q", "bound_t1"]));
    let ys: Vec<f64> = by_l
        .lines()
        .skip(2)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert_eq!(ys.len(), 3);
    assert!(ys[0] > ys[1] && ys[1] > ys[2], "{by_l}");

    assert_eq!(
        code(&run(&["plotdata", path_str(&json), "-q", "nonsense"])),
        1
    );
}

#[test]
fn plotdata_of_an_empty_report_is_a_header() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("empty.csv");
    std::fs::write(&csv, "").unwrap();
    let out = run(&["plotdata", path_str(&csv), "-q", "hazard"]);
    assert_eq!(code(&out), 0);
    assert_eq!(stdout(&out), "x,y\n");
}
