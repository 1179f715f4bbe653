use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use kronecker_gaps::construction::{
    construct_3d, extended_construct, general_construct, simple_pair, ConstructedTuple,
};
use kronecker_gaps::metric::MetricSpec;
use kronecker_gaps::truncation::{AlphaSpec, DepthPolicy};
use kronecker_gaps::verify::{self, CheckReport, Sweep};

mod input;
mod output;

use input::{parse_alpha, parse_depth, parse_metrics, parse_schedule, parse_stream};
use output::{emit, Format};

#[derive(Parser)]
#[command(name = "kgaps", version, about = "Nearest-neighbor distances and gaps of Kronecker sequences")]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a tuple whose coordinates share convergent denominators.
    Construct {
        #[command(subcommand)]
        kind: ConstructKind,
    },
    /// Sweep g_N and h_1(N) over N.
    Analyze(AnalyzeArgs),
    /// Run checks; exits 0 iff all pass.
    Verify {
        #[command(subcommand)]
        check: VerifyCommand,
    },
    /// Adjacent gaps of a one-dimensional orbit.
    #[command(name = "gaps-1d")]
    Gaps1d(GapsArgs),
}

#[derive(Args)]
struct OutputArgs {
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Write to this file instead of stdout.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct ScheduleArgs {
    /// Stream supplying alpha_1's free coefficients, e.g. "0;1,(2)".
    #[arg(long)]
    alpha1: String,
    /// Schedule JSON, inline or a file path.
    #[arg(long)]
    schedule: String,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Subcommand)]
enum ConstructKind {
    /// (alpha_1, 1 - alpha_1) for alpha_1 = [0; 1, ...].
    Simple {
        #[arg(long)]
        alpha1: String,
        /// Number of alpha_1 denominators to record in the ledger.
        #[arg(long, default_value_t = 30)]
        depth: usize,
        #[command(flatten)]
        out: OutputArgs,
    },
    General(ScheduleArgs),
    #[command(name = "3d")]
    ThreeD(ScheduleArgs),
    Extended(ScheduleArgs),
}

#[derive(Args, Clone)]
struct AlphaArgs {
    /// One coordinate per flag: a stream "a0;a1,...,(period)" or a rational "p/q".
    #[arg(long = "alpha")]
    alpha: Vec<String>,
    /// A tuple file written by `construct`.
    #[arg(long, conflicts_with = "alpha")]
    tuple: Option<PathBuf>,
    /// Shorthand for the simple pair built from this alpha_1.
    #[arg(long, conflicts_with_all = ["alpha", "tuple"])]
    alpha1: Option<String>,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long, default_value_t = 2000)]
    nmax: u64,
    #[arg(long, default_value = "1,2,inf")]
    metrics: String,
    #[arg(long, default_value_t = 1)]
    base: u64,
    /// "auto" or a fixed truncation depth.
    #[arg(long, default_value = "auto")]
    depth: String,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[command(flatten)]
    alpha: AlphaArgs,
    #[command(flatten)]
    sweep: SweepArgs,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Args)]
struct GapsArgs {
    #[arg(long)]
    alpha: String,
    #[arg(long)]
    n: u64,
    #[arg(long, default_value_t = 1)]
    base: u64,
    #[arg(long, default_value = "auto")]
    depth: String,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Args)]
struct ReportArgs {
    /// Write the JSON reports to this file instead of stdout.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Subcommand)]
enum VerifyCommand {
    #[command(name = "three-gap")]
    ThreeGap {
        #[arg(long)]
        alpha: String,
        #[arg(long, default_value_t = 500)]
        nmax: u64,
        #[command(flatten)]
        out: ReportArgs,
    },
    /// h_{1+k}(n+k) = h_1(n) whenever h_1(n+k) = h_1(n).
    Lemma1 {
        #[command(flatten)]
        alpha: AlphaArgs,
        #[arg(long, default_value_t = 200)]
        nmax: u64,
        #[arg(long, default_value = "1,2,inf")]
        metrics: String,
        #[command(flatten)]
        out: ReportArgs,
    },
    /// h_1(q+1) = q for shared denominators q.
    Lemma2 {
        #[command(flatten)]
        alpha: AlphaArgs,
        #[arg(long, default_value_t = 10_000)]
        qcap: u64,
        #[arg(long, default_value = "1,2,inf")]
        metrics: String,
        #[command(flatten)]
        out: ReportArgs,
    },
    /// Distance counts and windows of (alpha_1, 1 - alpha_1).
    Theorem1 {
        #[arg(long)]
        alpha1: String,
        #[arg(long, default_value_t = 2000)]
        nmax: u64,
        #[arg(long, default_value = "1,2,inf")]
        metrics: String,
        #[command(flatten)]
        out: ReportArgs,
    },
    /// Ordering of the smallest torus norms between consecutive denominators.
    Asmallest {
        #[arg(long)]
        alpha: String,
        #[arg(long, default_value_t = 8)]
        imax: usize,
        #[arg(long, default_value_t = 10_000_000)]
        ncap: u64,
        #[command(flatten)]
        out: ReportArgs,
    },
    /// Euclidean g_N against the kissing bounds, over sweep files or a fresh sweep.
    Bounds {
        /// JSON files written by `analyze --format json`.
        #[arg(long)]
        log: Vec<PathBuf>,
        #[command(flatten)]
        alpha: AlphaArgs,
        #[arg(long, default_value_t = 2000)]
        nmax: u64,
        #[command(flatten)]
        out: ReportArgs,
    },
    /// Every check on the simple pair built from alpha_1.
    All {
        #[arg(long)]
        alpha1: String,
        #[arg(long, default_value_t = 2000)]
        nmax: u64,
        #[arg(long, default_value = "1,2,inf")]
        metrics: String,
        #[command(flatten)]
        out: ReportArgs,
    },
}

/// Coordinates plus the shared denominators used for windows.
struct Target {
    spec: AlphaSpec,
    tuple: Option<ConstructedTuple>,
}

impl Target {
    fn ledger(&self) -> Vec<kronecker_gaps::BigUint> {
        self.tuple.as_ref().map(|t| t.ledger_denominators()).unwrap_or_default()
    }
}

fn simple_from(alpha1: &str, nmax: u64) -> Result<ConstructedTuple> {
    let stream = parse_stream(alpha1)?;
    let bound = kronecker_gaps::BigUint::from(nmax) * nmax;
    let depth = kronecker_gaps::cf::depth_exceeding(&stream, &bound) + 4;
    Ok(simple_pair(&stream, depth)?)
}

fn load_target(a: &AlphaArgs, nmax: u64) -> Result<Target> {
    if let Some(path) = &a.tuple {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let tuple: ConstructedTuple =
            serde_json::from_str(&text).with_context(|| format!("parsing tuple file {}", path.display()))?;
        return Ok(Target { spec: AlphaSpec::from_tuple(&tuple), tuple: Some(tuple) });
    }
    if let Some(alpha1) = &a.alpha1 {
        let tuple = simple_from(alpha1, nmax)?;
        return Ok(Target { spec: AlphaSpec::from_tuple(&tuple), tuple: Some(tuple) });
    }
    if a.alpha.is_empty() {
        bail!("give --alpha (once per coordinate), --alpha1 or --tuple");
    }
    let streams = a.alpha.iter().enumerate().map(|(c, s)| parse_alpha(s).with_context(|| format!("--alpha #{}", c + 1))).collect::<Result<Vec<_>>>()?;
    Ok(Target { spec: AlphaSpec::new(streams), tuple: None })
}

fn run_sweep(target: &Target, args: &SweepArgs) -> Result<Sweep> {
    if args.nmax < 2 {
        bail!("--nmax must be at least 2");
    }
    let metrics = parse_metrics(&args.metrics)?;
    let policy = parse_depth(&args.depth)?;
    Ok(verify::sweep(&target.spec, &target.ledger(), args.nmax, &metrics, args.base, policy)?)
}

fn construct(kind: ConstructKind) -> Result<bool> {
    let (tuple, out) = match kind {
        ConstructKind::Simple { alpha1, depth, out } => (simple_pair(&parse_stream(&alpha1)?, depth)?, out),
        ConstructKind::General(a) => (general_construct(&parse_stream(&a.alpha1)?, &parse_schedule(&a.schedule)?)?, a.out),
        ConstructKind::ThreeD(a) => (construct_3d(&parse_stream(&a.alpha1)?, &parse_schedule(&a.schedule)?)?, a.out),
        ConstructKind::Extended(a) => {
            (extended_construct(&parse_stream(&a.alpha1)?, &parse_schedule(&a.schedule)?)?, a.out)
        }
    };
    if out.format == Format::Csv {
        let mut text = String::from("l,q\n");
        for e in &tuple.ledger {
            text.push_str(&format!("{},{}\n", e.l, e.q));
        }
        emit(&text, out.output.as_deref())?;
    } else {
        emit(&output::json(&tuple)?, out.output.as_deref())?;
    }
    eprintln!("ledger: {}", tuple.ledger.iter().map(|e| e.q.to_string()).collect::<Vec<_>>().join(", "));
    Ok(true)
}

fn analyze(args: AnalyzeArgs) -> Result<bool> {
    let target = load_target(&args.alpha, args.sweep.nmax)?;
    let sw = run_sweep(&target, &args.sweep)?;
    let text = match args.out.format {
        Format::Csv => sw.to_csv(),
        Format::Json => output::json(&sw)?,
    };
    emit(&text, args.out.output.as_deref())?;
    eprintln!("depths: {:?}", sw.depths);
    Ok(true)
}

fn gaps_1d(args: GapsArgs) -> Result<bool> {
    let spec = AlphaSpec::new(vec![parse_alpha(&args.alpha)?]);
    let depths = spec.depths(args.n.max(2), parse_depth(&args.depth)?);
    let alpha = spec.realize(&depths)?;
    let gaps = kronecker_gaps::circle::circle_gaps(&alpha, args.n, args.base)?;
    let text = match args.out.format {
        Format::Json => output::json(&serde_json::json!({
            "alpha": alpha[0],
            "depth": depths[0],
            "n": args.n,
            "index_base": args.base,
            "points": args.n + 1 - args.base,
            "distinct": gaps.distinct(),
            "gaps": gaps.counts().iter().map(|(g, c)| serde_json::json!({ "length": g, "count": c })).collect::<Vec<_>>(),
        }))?,
        Format::Csv => {
            let mut t = String::from("length,count\n");
            for (g, c) in gaps.counts() {
                t.push_str(&format!("{g},{c}\n"));
            }
            t
        }
    };
    emit(&text, args.out.output.as_deref())?;
    eprintln!("{} distinct gaps", gaps.distinct());
    Ok(true)
}

fn verify_cmd(check: VerifyCommand) -> Result<bool> {
    let (reports, out): (Vec<CheckReport>, ReportArgs) = match check {
        VerifyCommand::ThreeGap { alpha, nmax, out } => (vec![verify::check_three_gap(&parse_alpha(&alpha)?, nmax)?], out),
        VerifyCommand::Lemma1 { alpha, nmax, metrics, out } => {
            let target = load_target(&alpha, nmax)?;
            let depths = kronecker_gaps::truncation::stable_depths(&target.spec, nmax, DepthPolicy::Auto, &parse_metrics(&metrics)?)?;
            let a = target.spec.realize(&depths)?;
            let reports = parse_metrics(&metrics)?
                .into_iter()
                .map(|m| verify::check_lemma_part1(&a, nmax, m))
                .collect::<kronecker_gaps::Result<_>>()?;
            (reports, out)
        }
        VerifyCommand::Lemma2 { alpha, qcap, metrics, out } => {
            let target = load_target(&alpha, qcap)?;
            let Some(tuple) = &target.tuple else { bail!("lemma2 needs --tuple or --alpha1") };
            (vec![verify::check_lemma_part2(tuple, &parse_metrics(&metrics)?, qcap)?], out)
        }
        VerifyCommand::Theorem1 { alpha1, nmax, metrics, out } => {
            let report = verify::check_theorem1(&parse_stream(&alpha1)?, nmax, &parse_metrics(&metrics)?)?;
            (vec![report.to_check_report()], out)
        }
        VerifyCommand::Asmallest { alpha, imax, ncap, out } => {
            (vec![verify::check_asmallest(&parse_alpha(&alpha)?, imax, ncap)?], out)
        }
        VerifyCommand::Bounds { log, alpha, nmax, out } => {
            let mut entries = Vec::new();
            for path in &log {
                let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                let sw: Sweep = serde_json::from_str(&text).with_context(|| format!("parsing sweep file {}", path.display()))?;
                entries.extend(sw.log_entries(&path.display().to_string()));
            }
            if !alpha.alpha.is_empty() || alpha.tuple.is_some() || alpha.alpha1.is_some() {
                let target = load_target(&alpha, nmax)?;
                let args = SweepArgs { nmax, metrics: "2".into(), base: 1, depth: "auto".into() };
                entries.extend(run_sweep(&target, &args)?.log_entries("sweep"));
            }
            (vec![verify::check_upper_bounds(&entries)?], out)
        }
        VerifyCommand::All { alpha1, nmax, metrics, out } => (verify_all(&alpha1, nmax, &parse_metrics(&metrics)?)?, out),
    };
    for r in &reports {
        eprintln!("{}: {} ({} instances, {:.3}s)", r.check, r.verdict, r.instances, r.elapsed.as_secs_f64());
    }
    emit(&output::json(&reports)?, out.output.as_deref())?;
    Ok(verify::all_passed(&reports))
}

fn verify_all(alpha1: &str, nmax: u64, metrics: &[MetricSpec]) -> Result<Vec<CheckReport>> {
    let stream = parse_stream(alpha1)?;
    let tuple = simple_from(alpha1, nmax)?;
    let spec = AlphaSpec::from_tuple(&tuple);
    let depths = kronecker_gaps::truncation::stable_depths(&spec, nmax, DepthPolicy::Auto, metrics)?;
    let pair = spec.realize(&depths)?;

    let mut reports = vec![verify::check_three_gap(&stream, nmax)?];
    for &m in metrics {
        reports.push(verify::check_lemma_part1(&pair, nmax.min(verify::DIRECT_SCAN_LIMIT), m)?);
    }
    reports.push(verify::check_lemma_part2(&tuple, metrics, nmax)?);
    let windows = verify::check_theorem1(&stream, nmax, metrics)?;
    let log = windows.sweep.as_ref().map(|s| s.log_entries("theorem1")).unwrap_or_default();
    reports.push(windows.to_check_report());
    reports.push(verify::check_asmallest(&stream, 8, 10_000_000)?);
    reports.push(verify::check_upper_bounds(&log)?);
    Ok(reports)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(jobs) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    let start = Instant::now();
    let result = match cli.command {
        Command::Construct { kind } => construct(kind),
        Command::Analyze(a) => analyze(a),
        Command::Verify { check } => verify_cmd(check),
        Command::Gaps1d(a) => gaps_1d(a),
    };
    eprintln!("elapsed: {:.3}s", start.elapsed().as_secs_f64());
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
