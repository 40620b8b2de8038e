//! Experiment runner for the smoothed proximal augmented-Lagrangian solver
//! family: single runs from a config file, the built-in study presets,
//! trace comparison, and instance generation.

mod compare;
mod config;
mod experiment;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use proxadmm::instances::{Family, GenSpec};
use proxadmm::model::problem_to_json;
use proxadmm::Result;

use crate::compare::Metric;
use crate::config::ExperimentConfig;

#[derive(Parser)]
#[command(name = "proxadmm", version, about = "Augmented-Lagrangian solver experiments")]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment from a config file, or a named preset.
    Solve(SolveArgs),
    /// Align trace CSVs by iteration and tabulate a metric.
    Compare(CompareArgs),
    /// Generate a seeded problem instance as a JSON document.
    Gen(GenArgs),
}

#[derive(Args)]
struct SolveArgs {
    /// Experiment config JSON file.
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Built-in preset: oscillation, beta-sweep, admm-compare.
    #[arg(long, required_unless_present = "config")]
    preset: Option<String>,
    /// Instance seed for presets (default 1).
    #[arg(long, requires = "preset")]
    seed: Option<u64>,
    /// Run the sweep presets at full scale (n=500, m=100) instead of n=50, m=10.
    #[arg(long, requires = "preset")]
    full_scale: bool,
    /// Output directory; overrides the config's output_dir.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Append a sampled opt_gap column to trace.csv.
    #[arg(long)]
    extended_trace: bool,
}

#[derive(Args)]
struct CompareArgs {
    /// Metric to tabulate.
    #[arg(long, value_enum)]
    metric: Metric,
    /// Trace CSV paths.
    #[arg(required = true, num_args = 2..)]
    traces: Vec<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FamilyArg {
    #[value(name = "neg_def_qp")]
    NegDefQp,
    #[value(name = "uniform_qp")]
    UniformQp,
    #[value(name = "two_block_qp")]
    TwoBlockQp,
}

impl From<FamilyArg> for Family {
    fn from(f: FamilyArg) -> Family {
        match f {
            FamilyArg::NegDefQp => Family::NegDefQp,
            FamilyArg::UniformQp => Family::UniformQp,
            FamilyArg::TwoBlockQp => Family::TwoBlockQp,
        }
    }
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, value_enum)]
    family: FamilyArg,
    /// Problem dimension.
    #[arg(long)]
    n: usize,
    /// Number of equality constraints.
    #[arg(long)]
    m: usize,
    #[arg(long)]
    seed: u64,
    /// Destination for the problem JSON.
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(cmd: Command) -> Result<()> {
    match cmd {
        Command::Solve(args) => solve(args),
        Command::Compare(args) => {
            compare::compare_traces(&args.traces, args.metric)?.print();
            Ok(())
        }
        Command::Gen(args) => gen(args),
    }
}

fn solve(args: SolveArgs) -> Result<()> {
    if let Some(path) = &args.config {
        let text = fs::read_to_string(path)?;
        let cfg = ExperimentConfig::parse(&text)?;
        let prob = cfg.resolve_problem()?;
        let out_dir = args.out.unwrap_or_else(|| cfg.output_dir.clone());
        let summary = experiment::run_experiment(
            &prob,
            cfg.algo,
            &cfg.params,
            cfg.stop_rule(),
            cfg.audits,
            args.extended_trace,
            &out_dir,
        )?;
        let label = cfg.preset.as_deref().map(|p| format!(" ({p})")).unwrap_or_default();
        println!(
            "wrote {}{label}: iterations={} feas={:.3e} opt_gap={:.3e} grad_evals={} stop={:?}",
            out_dir.display(),
            summary.iterations,
            summary.feas,
            summary.opt_gap,
            summary.grad_evals,
            summary.stop_reason
        );
        return Ok(());
    }
    let preset = args.preset.expect("clap guarantees a preset when no config is given");
    let out_root = args.out.unwrap_or_else(|| experiment::default_preset_out(&preset));
    experiment::run_preset(
        &preset,
        args.seed.unwrap_or(1),
        args.full_scale,
        args.extended_trace,
        &out_root,
    )
}

fn gen(args: GenArgs) -> Result<()> {
    let spec = GenSpec { family: args.family.into(), n: args.n, m: args.m, seed: args.seed };
    let prob = spec.build()?;
    fs::write(&args.out, problem_to_json(&prob)? + "\n")?;
    println!("wrote {}", args.out.display());
    Ok(())
}
