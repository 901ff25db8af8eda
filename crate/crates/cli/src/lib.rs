//! Config-driven runner for the MALA verification experiments.
//!
//! `mala-lab <subcommand> --config <file> --seed <u64> [--out <dir>] [--workers <n>]`
//! writes `<subcommand>.csv` and `<subcommand>.md` into the output
//! directory. Exit codes: 0 all assertions pass, 1 an assertion failed,
//! 2 configuration error, 3 numeric or i/o error.

pub mod config;
pub mod error;
pub mod experiments;
pub mod output;
pub mod report;

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

pub use config::Config;
pub use error::{LabError, EXIT_ASSERTION, EXIT_CONFIG, EXIT_NUMERIC, EXIT_OK};
pub use experiments::Experiment;
pub use report::report_summary;

#[derive(Debug, Parser)]
#[command(name = "mala-lab", version, about = "Seeded MALA experiments and lemma checks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run chains and write trajectories.
    Sample(RunArgs),
    /// Moment lemmas against their Υ_ℓ bounds.
    VerifyMoments(RunArgs),
    /// Frequency of Δ_η > 1/4 at the admissible step size.
    AcceptanceTail(RunArgs),
    /// Energy-difference decomposition residuals.
    DecompositionCheck(RunArgs),
    /// Closed-form proposal TV against 2‖x − y‖/η.
    ProposalOverlap(RunArgs),
    /// Mixing time versus dimension.
    MixingScan(RunArgs),
    /// Exact s-conductance of a discretized chain.
    Conductance(RunArgs),
    /// Warm-start TV bound on a discretized chain.
    LovaszCheck(RunArgs),
    /// Markdown summary of CSV artifacts.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Worker threads (defaults to the number of cores).
    #[arg(long)]
    pub workers: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    pub files: Vec<PathBuf>,
    /// Directory for `summary.md`; printed to stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Runs the parsed command and returns the process exit code.
pub fn execute(cli: Cli) -> u8 {
    let result = match cli.command {
        Command::Report(args) => report(&args).map(|()| EXIT_OK),
        Command::Sample(a) => experiment(Experiment::Sample, &a),
        Command::VerifyMoments(a) => experiment(Experiment::VerifyMoments, &a),
        Command::AcceptanceTail(a) => experiment(Experiment::AcceptanceTail, &a),
        Command::DecompositionCheck(a) => experiment(Experiment::DecompositionCheck, &a),
        Command::ProposalOverlap(a) => experiment(Experiment::ProposalOverlap, &a),
        Command::MixingScan(a) => experiment(Experiment::MixingScan, &a),
        Command::Conductance(a) => experiment(Experiment::Conductance, &a),
        Command::LovaszCheck(a) => experiment(Experiment::LovaszCheck, &a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("mala-lab: {e}");
            e.exit_code()
        }
    }
}

fn read_config(path: &Path) -> Result<Config, LabError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| LabError::Config(format!("cannot read {}: {e}", path.display())))?;
    Config::parse(&text)
}

fn experiment(exp: Experiment, args: &RunArgs) -> Result<u8, LabError> {
    let mut cfg = read_config(&args.config)?;
    if let Some(name) = &cfg.experiment {
        if name != exp.name() {
            return Err(LabError::Config(format!(
                "config names experiment `{name}` but `{}` was requested",
                exp.name()
            )));
        }
    }
    match cfg.seed {
        Some(s) if s != args.seed => {
            return Err(LabError::Config(format!("config seed {s} differs from --seed {}", args.seed)))
        }
        _ => cfg.seed = Some(args.seed),
    }
    cfg.experiment = Some(exp.name().to_string());

    let start = Instant::now();
    let outcome = match args.workers {
        Some(0) => return Err(LabError::Config("--workers must be at least 1".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| LabError::Config(format!("cannot start {n} workers: {e}")))?
            .install(|| experiments::run(exp, &cfg, args.seed))?,
        None => experiments::run(exp, &cfg, args.seed)?,
    };
    let resolved = cfg.resolved();
    let meta = output::RunMeta {
        experiment: exp.name(),
        seed: args.seed,
        resolved_config: &resolved,
        wall_clock_s: start.elapsed().as_secs_f64(),
        passed: outcome.doc.passed,
        failed: outcome.doc.failed,
    };
    std::fs::create_dir_all(&args.out)?;
    let csv_name = format!("{}.csv", exp.name());
    let text = outcome.doc.render(&meta);
    std::fs::write(args.out.join(&csv_name), &text)?;
    for extra in &outcome.extras {
        match extra {
            experiments::Extra::Text { name, body } => {
                std::fs::write(args.out.join(name), format!("{}{body}", meta.header()))?
            }
            experiments::Extra::Binary { name, bytes } => std::fs::write(args.out.join(name), bytes)?,
        }
    }
    let summary = report_summary(&[(csv_name, text)])?;
    std::fs::write(args.out.join(format!("{}.md", exp.name())), &summary)?;
    print!("{summary}");
    Ok(if outcome.doc.failed == 0 { EXIT_OK } else { EXIT_ASSERTION })
}

fn report(args: &ReportArgs) -> Result<(), LabError> {
    let artifacts = args
        .files
        .iter()
        .map(|p| {
            std::fs::read_to_string(p)
                .map(|t| (p.display().to_string(), t))
                .map_err(|e| LabError::Config(format!("cannot read {}: {e}", p.display())))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let summary = report_summary(&artifacts)?;
    match &args.out {
        Some(dir) => {
            std::fs::create_dir_all(dir)?;
            std::fs::write(dir.join("summary.md"), summary)?;
        }
        None => print!("{summary}"),
    }
    Ok(())
}
