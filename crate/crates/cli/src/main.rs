use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use sdp_bounds::ingest::{parse_confusion, parse_records, summarize_project, tally_confusion};
use sdp_bounds::report::{
    analyze, load_table, plot_series, render_series, sweep, Axis, EvalConfig, ForProvenance,
    PlotQuantity, ProbabilitySource, RunReport, SweepGrid, SweepOutput,
};
use sdp_bounds::{validate_assumptions, ConfusionCounts, ReliabilityMode, Verdict};

#[derive(Parser, Debug)]
#[command(
    name = "sdp-bounds",
    version,
    about = "Reliability bounds for software tested with defect prediction"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Compute the false omission rate and check it is usable (0 < p < 1).
    For {
        #[command(flatten)]
        source: SourceArgs,
        /// Write the summary as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate hazards, reliabilities and audited bounds at each time point.
    Analyze(AnalyzeArgs),
    /// Evaluate the Cartesian product of parameter lists.
    Sweep(SweepArgs),
    /// Extract plot-ready (x, y) series from a report or sweep output.
    Plotdata(PlotArgs),
}

#[derive(Args, Debug, Default)]
struct SourceArgs {
    /// False negatives (defective modules predicted clean).
    #[arg(long = "fn", requires = "tn_count")]
    fn_count: Option<u64>,
    /// True negatives (clean modules predicted clean).
    #[arg(long = "tn", requires = "fn_count")]
    tn_count: Option<u64>,
    /// CSV of `module_id,predicted[,actual]` rows.
    #[arg(long, conflicts_with_all = ["fn_count", "confusion"])]
    records: Option<PathBuf>,
    /// JSON object `{"fn": .., "tn": ..}`.
    #[arg(long, conflicts_with = "fn_count")]
    confusion: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct EvalArgs {
    /// Monte Carlo samples per estimator (0 disables sampling).
    #[arg(long)]
    samples: Option<u64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = ModeArg::Both)]
    mode: ModeArg,
    /// Worker threads (0 = all cores). Results do not depend on this.
    #[arg(long, default_value_t = 0)]
    workers: usize,
    /// Exit with status 3 if any audit verdict is "violated".
    #[arg(long)]
    strict: bool,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    AsStated,
    SignCorrected,
    Both,
}

impl ModeArg {
    fn modes(self) -> Vec<ReliabilityMode> {
        match self {
            ModeArg::AsStated => vec![ReliabilityMode::AsStated],
            ModeArg::SignCorrected => vec![ReliabilityMode::SignCorrected],
            ModeArg::Both => ReliabilityMode::ALL.to_vec(),
        }
    }
}

#[derive(Args, Debug)]
struct AnalyzeArgs {
    #[command(flatten)]
    source: SourceArgs,
    /// Number of predicted-clean modules (defaults to the count in the input file).
    #[arg(long)]
    l: Option<u64>,
    /// Misclassification probability, when no labeled input is given.
    #[arg(long)]
    p: Option<f64>,
    #[arg(long = "K")]
    k: f64,
    #[arg(long, allow_hyphen_values = true)]
    m: f64,
    #[arg(long = "K-hat")]
    k_hat: f64,
    #[arg(long = "m-hat", allow_hyphen_values = true)]
    m_hat: f64,
    /// Comma-separated time points.
    #[arg(long, value_delimiter = ',', required = true)]
    t: Vec<f64>,
    #[command(flatten)]
    eval: EvalArgs,
    /// Write the JSON report here and print a summary instead.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[command(flatten)]
    source: SourceArgs,
    #[arg(long, value_delimiter = ',')]
    l: Vec<u64>,
    #[arg(long, value_delimiter = ',')]
    p: Vec<f64>,
    #[arg(long = "K", value_delimiter = ',')]
    k: Vec<f64>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    m: Vec<f64>,
    #[arg(long = "K-hat", value_delimiter = ',')]
    k_hat: Vec<f64>,
    #[arg(long = "m-hat", value_delimiter = ',', allow_hyphen_values = true)]
    m_hat: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    t: Vec<f64>,
    #[command(flatten)]
    eval: EvalArgs,
    /// Write the CSV table here (default: standard output).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the full sweep output as JSON.
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct PlotArgs {
    /// Report JSON, sweep JSON or sweep CSV.
    input: PathBuf,
    /// hazard, reliability, bound_t1, bound_t2 or exact_tail.
    #[arg(long, short)]
    quantity: String,
    /// Axis for x (default: the axis that varies, preferring t).
    #[arg(long)]
    x: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Input(String),
    Core(sdp_bounds::Error),
    Violations(usize),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Core(e) if e.is_parse_error() => 2,
            CliError::Core(_) => 1,
            CliError::Input(_) => 2,
            CliError::Violations(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Input(m) => f.write_str(m),
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Violations(n) => write!(f, "strict mode: {n} audit verdict(s) violated"),
        }
    }
}

impl From<sdp_bounds::Error> for CliError {
    fn from(e: sdp_bounds::Error) -> Self {
        CliError::Core(e)
    }
}

type CliResult<T> = Result<T, CliError>;

fn read(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> CliResult<()> {
    std::fs::write(path, text)
        .map_err(|e| CliError::Usage(format!("cannot write {}: {e}", path.display())))
}

fn display(path: &Path) -> String {
    path.display().to_string()
}

/// Confusion counts from whichever source was given, if any.
fn load_counts(src: &SourceArgs) -> CliResult<Option<(ConfusionCounts, ProbabilitySource)>> {
    if let (Some(f), Some(t)) = (src.fn_count, src.tn_count) {
        return Ok(Some((
            ConfusionCounts::new(f, t),
            ProbabilitySource::Counts,
        )));
    }
    if let Some(path) = &src.confusion {
        let counts = parse_confusion(&read(path)?)?;
        return Ok(Some((
            counts,
            ProbabilitySource::ConfusionFile {
                path: display(path),
            },
        )));
    }
    if let Some(path) = &src.records {
        let records = parse_records(&read(path)?)?;
        if records.iter().all(|r| r.actual.is_some()) {
            return Ok(Some((
                tally_confusion(&records)?,
                ProbabilitySource::RecordsFile {
                    path: display(path),
                },
            )));
        }
    }
    Ok(None)
}

/// Resolve `l` and `p`. A labeled source fixes `p`; `--l` overrides its
/// predicted-clean count. An unlabeled records file supplies only `l`.
fn resolve_population(
    src: &SourceArgs,
    l: Option<u64>,
    p: Option<f64>,
) -> CliResult<ForProvenance> {
    if let Some((counts, source)) = load_counts(src)? {
        if p.is_some() {
            return Err(CliError::Usage(
                "--p conflicts with a labeled source that already determines p".into(),
            ));
        }
        return Ok(ForProvenance::from_counts(counts, source, l)?);
    }
    if let Some(path) = &src.records {
        let records = parse_records(&read(path)?)?;
        let p =
            p.ok_or_else(|| CliError::Usage("records have no actual labels; give --p".into()))?;
        let l = l.unwrap_or_else(|| summarize_project(&records).l_clean);
        return Ok(ForProvenance {
            source: ProbabilitySource::RecordsFile {
                path: display(path),
            },
            counts: None,
            verdict: None,
            p,
            l,
        });
    }
    match (l, p) {
        (Some(l), Some(p)) => Ok(ForProvenance::literal(l, p)),
        _ => Err(CliError::Usage(
            "give --l and --p, or --fn/--tn, --confusion or --records".into(),
        )),
    }
}

fn eval_config(args: &EvalArgs, default_samples: u64) -> EvalConfig {
    EvalConfig {
        samples: args.samples.unwrap_or(default_samples),
        seed: args.seed,
        workers: args.workers,
        modes: args.mode.modes(),
    }
}

fn cmd_for(source: &SourceArgs, out: Option<&Path>) -> CliResult<()> {
    let (counts, _) =
        match load_counts(source)? {
            Some(c) => c,
            None if source.records.is_some() => return Err(CliError::Input(
                "records have no actual labels; the false omission rate needs a labeled test set"
                    .into(),
            )),
            None => {
                return Err(CliError::Usage(
                    "give --fn and --tn, --confusion or --records".into(),
                ))
            }
        };
    let verdict = validate_assumptions(&counts);
    let mut text = String::new();
    let _ = writeln!(
        text,
        "fn = {}, tn = {}, l = {}",
        counts.fn_count,
        counts.tn_count,
        counts.predicted_clean()
    );
    match verdict.p {
        Some(p) => {
            let _ = writeln!(text, "p = {p}");
        }
        None => text.push_str("p = undefined\n"),
    }
    if verdict.ok {
        text.push_str("verdict: ok\n");
    } else {
        for v in &verdict.violations {
            let _ = writeln!(text, "verdict: violated: {v}");
        }
    }
    for c in &verdict.caveats {
        let _ = writeln!(text, "assumed: {c}");
    }
    print!("{text}");
    if let Some(path) = out {
        let doc = serde_json::json!({ "counts": counts, "verdict": verdict });
        write(
            path,
            &serde_json::to_string_pretty(&doc).expect("serializable"),
        )?;
    }
    if verdict.ok {
        Ok(())
    } else {
        Err(CliError::Usage(
            "misclassification probability must satisfy 0 < p < 1".into(),
        ))
    }
}

fn fmt_verdict(v: Verdict) -> &'static str {
    v.as_str()
}

fn summarize_report(report: &RunReport) -> String {
    let mut s = String::new();
    let prov = &report.provenance;
    let _ = writeln!(
        s,
        "l = {}, p = {}, seed = {}, samples = {}",
        prov.l, prov.p, report.seed, report.samples
    );
    for pt in &report.points {
        let h = &pt.hazard_bound;
        let _ = writeln!(
            s,
            "t = {}: hazard bound {:.6e} (exact {}) {}",
            pt.inputs.t,
            h.report.bound,
            pt.hazard_event_exact
                .map_or("n/a".into(), |e| format!("{e:.6e}")),
            fmt_verdict(h.audit.verdict),
        );
        for b in &pt.reliability_bounds {
            if let sdp_bounds::BoundKind::Reliability { mode } = b.report.kind {
                let _ = writeln!(
                    s,
                    "        reliability bound [{}] {:.6e} (exact {}) {}",
                    mode.as_str(),
                    b.report.bound,
                    pt.reliability_event_exact
                        .map_or("n/a".into(), |e| format!("{e:.6e}")),
                    fmt_verdict(b.audit.verdict),
                );
            }
        }
        if !h.report.domain_flags.all_pass() {
            let _ = writeln!(
                s,
                "        hazard bound outside its domain: {:?}",
                h.report.domain_flags
            );
        }
    }
    s
}

fn cmd_analyze(args: &AnalyzeArgs) -> CliResult<()> {
    let prov = resolve_population(&args.source, args.l, args.p)?;
    let cfg = eval_config(&args.eval, 100_000);
    let report = analyze(prov, args.k, args.m, args.k_hat, args.m_hat, &args.t, &cfg)?;
    let json = report.to_json()?;
    match &args.out {
        Some(path) => {
            write(path, &json)?;
            print!("{}", summarize_report(&report));
        }
        None => println!("{json}"),
    }
    let violated = report
        .verdicts()
        .filter(|v| *v == Verdict::Violated)
        .count();
    if args.eval.strict && violated > 0 {
        return Err(CliError::Violations(violated));
    }
    Ok(())
}

fn summarize_sweep(out: &SweepOutput) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{} points", out.summary.points);
    for (name, t) in &out.summary.verdicts {
        let _ = writeln!(
            s,
            "{name}: holds {}, violated {} ({} in domain), inconclusive {}, exact-zero-event {}",
            t.holds, t.violated, t.violated_in_domain, t.inconclusive, t.exact_zero_event
        );
    }
    for axis in [Axis::L, Axis::T] {
        let checks: Vec<_> = out
            .summary
            .monotonicity
            .iter()
            .filter(|c| c.axis == axis)
            .collect();
        if checks.is_empty() {
            continue;
        }
        let applicable: Vec<_> = checks.iter().filter(|c| c.applicable).collect();
        let decreasing = applicable.iter().filter(|c| c.strictly_decreasing).count();
        let _ = writeln!(
            s,
            "hazard bound strictly decreasing in {}: {decreasing} of {} applicable groups ({} not applicable)",
            axis.name(),
            applicable.len(),
            checks.len() - applicable.len()
        );
        for c in applicable.iter().filter(|c| !c.strictly_decreasing) {
            let f = &c.fixed;
            let _ = writeln!(
                s,
                "  not decreasing at l={},p={},K={},m={},K_hat={},m_hat={},t={}",
                f.l, f.p, f.k, f.m, f.k_hat, f.m_hat, f.t
            );
        }
    }
    s
}

fn cmd_sweep(args: &SweepArgs) -> CliResult<()> {
    let defaults = SweepGrid::default();
    let pick = |v: &Vec<f64>, d: &Vec<f64>| if v.is_empty() { d.clone() } else { v.clone() };
    let mut grid = SweepGrid {
        l: if args.l.is_empty() {
            defaults.l.clone()
        } else {
            args.l.clone()
        },
        p: pick(&args.p, &defaults.p),
        k: pick(&args.k, &defaults.k),
        m: pick(&args.m, &defaults.m),
        k_hat: pick(&args.k_hat, &defaults.k_hat),
        m_hat: pick(&args.m_hat, &defaults.m_hat),
        t: pick(&args.t, &defaults.t),
    };
    if let Some((counts, _)) = load_counts(&args.source)? {
        if !args.p.is_empty() {
            return Err(CliError::Usage(
                "--p conflicts with a labeled source that already determines p".into(),
            ));
        }
        let prov = ForProvenance::from_counts(counts, ProbabilitySource::Counts, None)?;
        grid.p = vec![prov.p];
        if args.l.is_empty() {
            grid.l = vec![prov.l];
        }
    } else if let Some(path) = &args.source.records {
        if args.l.is_empty() {
            grid.l = vec![summarize_project(&parse_records(&read(path)?)?).l_clean];
        }
    }
    let cfg = eval_config(&args.eval, 10_000);
    let out = sweep(&grid, &cfg)?;
    let csv = out.to_csv();
    let summary = summarize_sweep(&out);
    match &args.out {
        Some(path) => {
            write(path, &csv)?;
            print!("{summary}");
        }
        None => {
            print!("{csv}");
            eprint!("{summary}");
        }
    }
    if let Some(path) = &args.json {
        write(path, &out.to_json()?)?;
    }
    let violated: u64 = out.summary.verdicts.values().map(|t| t.violated).sum();
    if args.eval.strict && violated > 0 {
        return Err(CliError::Violations(violated as usize));
    }
    Ok(())
}

fn cmd_plotdata(args: &PlotArgs) -> CliResult<()> {
    let quantity: PlotQuantity = args
        .quantity
        .parse()
        .map_err(|e: sdp_bounds::Error| CliError::Usage(e.to_string()))?;
    let x: Option<Axis> = args
        .x
        .as_deref()
        .map(str::parse)
        .transpose()
        .map_err(|e: sdp_bounds::Error| CliError::Usage(e.to_string()))?;
    let rows = load_table(&read(&args.input)?)?;
    let text = render_series(&plot_series(&rows, quantity, x)?);
    match &args.out {
        Some(path) => write(path, &text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> CliResult<()> {
    match &cli.command {
        Command::For { source, out } => cmd_for(source, out.as_deref()),
        Command::Analyze(args) => cmd_analyze(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Plotdata(args) => cmd_plotdata(args),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
