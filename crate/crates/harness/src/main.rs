use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use lowrank_core::{Error, RngSeed};
use lowrank_harness::config::{parse_config, Experiment, ExperimentConfig};
use lowrank_harness::experiments::run_experiment_detailed;
use lowrank_harness::phase::phase_transition_with_records;
use lowrank_harness::records::write_records_csv;
use lowrank_harness::report::{certificate_csv, details_jsonl, emit_report, ReportFormat};

#[derive(Parser)]
#[command(name = "lowrank", about = "Low-rank recovery experiments", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Nuclear-norm completion of block-diagonal PSD matrices.
    Complete(Common),
    /// Trimmed SVD projection against the error bound.
    SvdProject(Common),
    /// Completion of clustering affinities with side information.
    Structured(Common),
    /// Low-rank plus sparse split of planted-clique graphs.
    Decompose(Common),
    /// Golfing certificate checks.
    Certify(Common),
    /// Minimal sampling probability per rank.
    Phase(Common),
    /// Exact clique recovery rates.
    Clique(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    n: Option<usize>,
    /// Comma-separated ranks (clique sizes for clique/decompose, cluster
    /// counts for structured).
    #[arg(long, value_delimiter = ',')]
    rank: Option<Vec<usize>>,
    /// Comma-separated sampling probabilities.
    #[arg(long, value_delimiter = ',')]
    p: Option<Vec<f64>>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Solver relative tolerance.
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    grid_step: Option<f64>,
    /// Output directory; records go to stdout as CSV when unset.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    workers: Option<usize>,
    /// JSON or `key = value` config file; explicit flags win.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Successes required per grid point.
    #[arg(long)]
    quota: Option<usize>,
    #[arg(long)]
    linear_scan: bool,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    side_extra: Option<usize>,
    #[arg(long)]
    k0: Option<usize>,
    #[arg(long)]
    svd_constant: Option<f64>,
    #[arg(long)]
    max_iters: Option<usize>,
    /// Report formats written to --out (csv, json, svg).
    #[arg(long, value_delimiter = ',', default_value = "csv")]
    format: Vec<String>,
}

impl Command {
    fn split(self) -> (Experiment, Common) {
        match self {
            Command::Complete(c) => (Experiment::Complete, c),
            Command::SvdProject(c) => (Experiment::SvdProject, c),
            Command::Structured(c) => (Experiment::Structured, c),
            Command::Decompose(c) => (Experiment::Decompose, c),
            Command::Certify(c) => (Experiment::Certify, c),
            Command::Phase(c) => (Experiment::Phase, c),
            Command::Clique(c) => (Experiment::Clique, c),
        }
    }
}

fn build_config(experiment: Experiment, args: &Common) -> lowrank_core::Result<ExperimentConfig> {
    let mut config = ExperimentConfig::for_experiment(experiment);
    if let Some(path) = &args.config {
        let file = parse_config(&fs::read_to_string(path)?)?;
        config.apply(&file)?;
        config.experiment = experiment;
    }
    macro_rules! set {
        ($($field:ident => $target:expr),* $(,)?) => {
            $(if let Some(v) = args.$field.clone() { $target = v; })*
        };
    }
    set!(
        n => config.n,
        rank => config.ranks,
        p => config.ps,
        trials => config.trials,
        grid_step => config.grid_step,
        workers => config.workers,
        quota => config.success_quota,
        side_extra => config.side_extra,
        svd_constant => config.svd_constant,
        max_iters => config.solver.max_iters,
        tol => config.solver.rel_tol,
    );
    if let Some(s) = args.seed {
        config.base_seed = RngSeed(s);
    }
    if args.out.is_some() {
        config.out = args.out.clone();
    }
    if args.lambda.is_some() {
        config.lambda = args.lambda;
    }
    if args.k0.is_some() {
        config.k0 = args.k0;
    }
    if args.linear_scan {
        config.linear_scan = true;
    }
    if args.quota.is_none() && config.success_quota > config.trials {
        config.success_quota = config.trials;
    }
    config.validate()?;
    Ok(config)
}

fn run(experiment: Experiment, args: Common) -> lowrank_core::Result<()> {
    let config = build_config(experiment, &args)?;
    let formats = args
        .format
        .iter()
        .map(|f| f.parse::<ReportFormat>())
        .collect::<lowrank_core::Result<Vec<_>>>()?;
    let (records, curve, outcomes) = if experiment == Experiment::Phase {
        let (curve, records) = phase_transition_with_records(&config)?;
        (records, Some(curve), Vec::new())
    } else {
        let outcomes = run_experiment_detailed(&config)?;
        let records = outcomes.iter().map(|o| o.record.clone()).collect();
        (records, None, outcomes)
    };
    let Some(dir) = &config.out else {
        print!("{}", write_records_csv(&records)?);
        if let Some(c) = &curve {
            for (r, p) in c.ranks.iter().zip(&c.p_star) {
                eprintln!("r = {r}: p* = {}", p.map_or("none".into(), |p| p.to_string()));
            }
        }
        return Ok(());
    };
    for format in formats {
        if format == ReportFormat::Svg && curve.is_none() {
            return Err(Error::Parameter("svg output needs the phase experiment".into()));
        }
        for path in emit_report(&records, curve.as_ref(), format, dir)? {
            eprintln!("wrote {}", path.display());
        }
    }
    if experiment == Experiment::Certify {
        fs::write(dir.join("certificates.jsonl"), details_jsonl(&outcomes)?)?;
        fs::write(dir.join("certificates.csv"), certificate_csv(&records))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let (experiment, args) = Cli::parse().command.split();
    match run(experiment, args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Io(_) => ExitCode::from(3),
                _ => ExitCode::from(2),
            }
        }
    }
}
