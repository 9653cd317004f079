//! `simulate`: coupled chains on R^d or on a finite problem.

use std::fmt::Write as _;
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use serde_json::json;

use mhcoupling::rational::format_rational;
use mhsamplers::finite::{bound_violations, meeting_bound, FiniteCoupling, FiniteCouplingKind};
use mhsamplers::rng::{stream, Role};
use mhsamplers::simulate::{run_trajectory, write_trajectory_jsonl};
use mhsamplers::target::{DiagonalGaussian, Funnel, StandardGaussian, UniformBox};
use mhsamplers::{simulate_meetings, ContinuousCoupling, CouplingSpec, MeetingSummary, Proposal, Target};

use crate::error::CliError;
use crate::files::ProblemFile;
use crate::Report;

/// Standard errors allowed above the exact bound before a pair counts as a violation.
const VIOLATION_SE: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Algorithm {
    Rwm,
    Mala,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// `normal`, `funnel`, `gaussian:MEANS:SDS` or `box:LO:HI`, with comma-separated lists.
    #[arg(long, conflicts_with = "problem", required_unless_present = "problem")]
    target: Option<String>,
    /// Finite problem file; simulates the exact kernels instead of a continuous target.
    #[arg(long)]
    problem: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    dim: usize,
    #[arg(long, value_enum, default_value_t = Algorithm::Rwm)]
    algorithm: Algorithm,
    /// RWM step sd or MALA step size (defaults 1.0 and 0.25).
    #[arg(long)]
    scale: Option<f64>,
    /// Continuous: `proposal[:acceptance][:unfaithful]`. Finite: `maximal`,
    /// `independent`, `crn` or `proposal-P:A`.
    #[arg(long, default_value = "maximal")]
    coupling: String,
    /// Horizon per replicate.
    #[arg(long, default_value_t = 100)]
    steps: usize,
    #[arg(long, default_value_t = 1000)]
    replicates: u64,
    #[arg(long, env = "MHCOUPLE_SEED", default_value_t = 1)]
    seed: u64,
    /// Meeting-time CSV.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Initial x: comma-separated coordinates, or a state label.
    #[arg(long, allow_hyphen_values = true)]
    x0: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    y0: Option<String>,
    /// JSON-lines trajectory of the first replicate (continuous only).
    #[arg(long)]
    trajectory: Option<PathBuf>,
}

fn floats(s: &str) -> Result<Vec<f64>, CliError> {
    s.split(',')
        .map(|v| v.trim().parse::<f64>().map_err(|e| CliError::Parse(format!("'{v}': {e}"))))
        .collect()
}

fn parse_target(spec: &str, dim: usize) -> Result<Box<dyn Target>, CliError> {
    let parts: Vec<&str> = spec.split(':').collect();
    Ok(match parts.as_slice() {
        ["normal"] => Box::new(StandardGaussian { d: dim }),
        ["funnel"] => Box::new(Funnel { d: dim }),
        ["gaussian", mean, sd] => Box::new(DiagonalGaussian::new(floats(mean)?, floats(sd)?)?),
        ["box", lo, hi] => {
            let lo: f64 = lo.parse().map_err(|_| CliError::Parse(format!("bad box bound '{lo}'")))?;
            let hi: f64 = hi.parse().map_err(|_| CliError::Parse(format!("bad box bound '{hi}'")))?;
            if lo.is_nan() || hi.is_nan() || lo >= hi {
                return Err(CliError::Parse("box needs lo < hi".into()));
            }
            Box::new(UniformBox { d: dim, lo, hi })
        }
        _ => return Err(CliError::Parse(format!("unknown target '{spec}'"))),
    })
}

fn parse_finite_kind(spec: &str) -> Result<(FiniteCouplingKind, bool), CliError> {
    let (name, faithful) = match spec.strip_suffix(":unfaithful") {
        Some(rest) => (rest, false),
        None => (spec, true),
    };
    let name = if name == "maximal" { "kernel-maximal" } else { name };
    FiniteCouplingKind::all()
        .into_iter()
        .find(|k| k.name() == name)
        .map(|k| (k, faithful))
        .ok_or_else(|| {
            let known: Vec<String> = FiniteCouplingKind::all().iter().map(|k| k.name()).collect();
            CliError::Parse(format!("unknown finite coupling '{spec}'; known: {}", known.join(", ")))
        })
}

fn write_csv(summary: &MeetingSummary, out: &Option<PathBuf>) -> Result<(), CliError> {
    if let Some(path) = out {
        let file = File::create(path)
            .map_err(|e| CliError::Internal(format!("cannot write {}: {e}", path.display())))?;
        summary.write_csv(BufWriter::new(file))?;
    }
    Ok(())
}

fn opt(v: Option<f64>) -> String {
    v.map_or("n/a".into(), |v| format!("{v:.4}"))
}

fn summary_text(summary: &MeetingSummary) -> String {
    format!(
        "replicates {}, fraction met {:.4}, mean meeting time {}, median meeting time {}\n",
        summary.records.len(),
        summary.fraction_met(),
        opt(summary.mean_meeting_time()),
        opt(summary.median_meeting_time())
    )
}

pub fn run(args: &SimulateArgs) -> Result<Report, CliError> {
    if args.replicates == 0 {
        return Err(CliError::Parse("--replicates must be positive".into()));
    }
    match &args.problem {
        Some(path) => run_finite(args, path),
        None => run_continuous(args, args.target.as_deref().expect("clap requires a target")),
    }
}

fn run_finite(args: &SimulateArgs, path: &Path) -> Result<Report, CliError> {
    let problem = ProblemFile::load(path)?.to_problem()?;
    let space = problem.space().clone();
    if space.len() < 2 && (args.x0.is_none() || args.y0.is_none()) {
        return Err(CliError::Parse("give --x0 and --y0 for a one-state problem".into()));
    }
    let state = |s: &Option<String>, default: usize| match s {
        Some(label) => space
            .index_of(label)
            .ok_or_else(|| CliError::Parse(format!("unknown state '{label}'"))),
        None => Ok(default),
    };
    let init = (state(&args.x0, 0)?, state(&args.y0, 1)?);
    let (kind, faithful) = parse_finite_kind(&args.coupling)?;
    let mut chain = FiniteCoupling::new(&problem, kind)?;
    chain.faithful = faithful;
    let summary = simulate_meetings(&chain, init, args.steps, args.replicates, args.seed)?;
    write_csv(&summary, &args.out)?;
    let violations = bound_violations(&problem, &summary.pair_meetings, VIOLATION_SE)?;

    let mut text = summary_text(&summary);
    writeln!(text, "coupling {}", kind.name()).unwrap();
    let mut pairs = Vec::new();
    for (&(x, y), f) in &summary.pair_meetings {
        let bound = meeting_bound(&problem, x, y)?;
        let cell = format!("({},{})", space.label(x), space.label(y));
        writeln!(
            text,
            "  pair {cell}: meet frequency {:.4} (se {:.4}) over {} steps, bound {}",
            f.value(),
            f.se(),
            f.trials,
            format_rational(&bound)
        )
        .unwrap();
        pairs.push(json!({
            "pair": cell,
            "trials": f.trials,
            "meet_frequency": f.value(),
            "se": f.se(),
            "bound": format_rational(&bound),
        }));
    }
    writeln!(text, "bound violations beyond {VIOLATION_SE} SE: {}", violations.len()).unwrap();
    let out = json!({
        "mode": "finite",
        "coupling": kind.name(),
        "replicates": args.replicates,
        "horizon": args.steps,
        "seed": args.seed,
        "fraction_met": summary.fraction_met(),
        "mean_meeting_time": summary.mean_meeting_time(),
        "median_meeting_time": summary.median_meeting_time(),
        "bound_violations": violations.len(),
        "pairs": pairs,
    });
    Ok(Report { text, json: out, code: 0 })
}

fn run_continuous(args: &SimulateArgs, target_spec: &str) -> Result<Report, CliError> {
    let target = parse_target(target_spec, args.dim)?;
    let d = target.dim();
    let proposal = match args.algorithm {
        Algorithm::Rwm => Proposal::Rwm { sigma: args.scale.unwrap_or(1.0) },
        Algorithm::Mala => Proposal::Mala { tau: args.scale.unwrap_or(0.25) },
    };
    proposal.validate(target.as_ref())?;
    let spec: CouplingSpec = args.coupling.parse()?;
    let point = |s: &Option<String>, default: f64| -> Result<Vec<f64>, CliError> {
        let v = match s {
            Some(s) => floats(s)?,
            None => vec![default; d],
        };
        if v.len() != d {
            return Err(CliError::Parse(format!("initial point has {} coordinates, target has {d}", v.len())));
        }
        Ok(v)
    };
    let init = (point(&args.x0, -1.0)?, point(&args.y0, 1.0)?);
    let chain = ContinuousCoupling::new(target.as_ref(), proposal, spec)?;
    let summary = simulate_meetings(&chain, init.clone(), args.steps, args.replicates, args.seed)?;
    write_csv(&summary, &args.out)?;
    if let Some(path) = &args.trajectory {
        let mut rng = stream(args.seed, 0, Role::Chain);
        let records = run_trajectory(&chain, init, args.steps, &mut rng)?;
        let file = File::create(path)
            .map_err(|e| CliError::Internal(format!("cannot write {}: {e}", path.display())))?;
        write_trajectory_jsonl(BufWriter::new(file), &records)?;
    }

    let mut text = summary_text(&summary);
    writeln!(text, "coupling {spec}, target {target_spec} in dimension {d}").unwrap();
    writeln!(text, "bound violations: n/a (no exact bound for continuous targets)").unwrap();
    let out = json!({
        "mode": "continuous",
        "target": target_spec,
        "dim": d,
        "proposal": proposal,
        "coupling": spec.to_string(),
        "replicates": args.replicates,
        "horizon": args.steps,
        "seed": args.seed,
        "fraction_met": summary.fraction_met(),
        "mean_meeting_time": summary.mean_meeting_time(),
        "median_meeting_time": summary.median_meeting_time(),
        "bound_violations": null,
    });
    Ok(Report { text, json: out, code: 0 })
}
