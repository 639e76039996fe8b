//! `hde`: batch true-path-rule correction of class score matrices.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use commands::CliError;

#[derive(Debug, Parser)]
#[command(name = "hde", version, about = "Hierarchical corrections for DAG-structured class scores")]
struct Cli {
    /// Worker threads for row-parallel work (0 = one per core).
    #[arg(long, global = true, env = "HDE_JOBS", default_value_t = 0)]
    jobs: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Correct a flat score matrix so that it obeys the true path rule.
    Correct(CorrectArgs),
    /// Print the max-distance level of every class.
    Levels(LevelsArgs),
    /// List true-path-rule violations; exits 1 if there are any.
    Validate(ValidateArgs),
    /// Fit per-class thresholds on training scores and labels.
    FitThresholds(FitArgs),
    /// Per-class precision, recall and F at given thresholds.
    Eval(EvalArgs),
}

#[derive(Debug, Args)]
struct DagArgs {
    /// Edge list, one `parent<TAB>child` per line.
    #[arg(long)]
    dag: PathBuf,
    /// Drop repeated edges instead of failing.
    #[arg(long)]
    dedup: bool,
}

#[derive(Debug, Args)]
#[group(multiple = false)]
struct SelectionArgs {
    /// Same threshold for every class.
    #[arg(long)]
    threshold: Option<f64>,
    /// Per-class thresholds, `class<TAB>threshold` rows.
    #[arg(long)]
    thresholds_file: Option<PathBuf>,
    /// Positive children are those scoring above the parent's flat score.
    #[arg(long)]
    adaptive: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SolverArg {
    Partition,
    Dykstra,
}

#[derive(Debug, Args)]
struct MethodArgs {
    /// Weight of a node's own score in tpr-w (and optionally other tpr variants).
    #[arg(long)]
    w: Option<f64>,
    /// Top-down pass compares against flat scores instead of bottom-up ones (reduces TPR to HTD).
    #[arg(long)]
    literal_topdown: bool,
    /// iso-tpr: project the flat scores rather than the bottom-up result.
    #[arg(long)]
    iso_on_flat: bool,
    #[arg(long, value_enum, default_value_t = SolverArg::Partition)]
    iso_solver: SolverArg,
    /// Dykstra stopping tolerance.
    #[arg(long, default_value_t = 1e-10)]
    iso_tol: f64,
    /// Dykstra sweep cap.
    #[arg(long, default_value_t = 100_000)]
    iso_max_sweeps: usize,
}

#[derive(Debug, Args)]
struct CorrectArgs {
    #[command(flatten)]
    dag: DagArgs,
    /// Flat scores TSV.
    #[arg(long)]
    scores: PathBuf,
    /// htd, tpr, tpr-w, tpr-desc-const, tpr-desc-lin or iso-tpr.
    #[arg(long)]
    method: String,
    #[command(flatten)]
    selection: SelectionArgs,
    #[command(flatten)]
    params: MethodArgs,
    /// Round output values to this many decimals.
    #[arg(long)]
    digits: Option<usize>,
    /// Output path (default: stdout).
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct LevelsArgs {
    #[command(flatten)]
    dag: DagArgs,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ValidateArgs {
    #[command(flatten)]
    dag: DagArgs,
    #[arg(long)]
    scores: PathBuf,
    /// Allowed slack: an edge is violated when child > parent + epsilon.
    #[arg(long, default_value_t = 0.0)]
    epsilon: f64,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Strategy {
    Global,
    Fscore,
    Percentile,
}

#[derive(Debug, Args)]
struct FitArgs {
    #[command(flatten)]
    dag: DagArgs,
    #[arg(long)]
    scores: PathBuf,
    /// 0/1 labels TSV with the same layout as the scores.
    #[arg(long)]
    labels: PathBuf,
    #[arg(long, value_enum)]
    strategy: Strategy,
    /// Global threshold (strategy global).
    #[arg(long, default_value_t = 0.5)]
    threshold: f64,
    /// Percentile of positive scores, 0 to 100 (strategy percentile).
    #[arg(long)]
    k: Option<f64>,
    /// Candidate thresholds as `start:stop:step` or a comma list (strategy fscore).
    #[arg(long)]
    grid: Option<String>,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[command(flatten)]
    dag: DagArgs,
    #[arg(long)]
    scores: PathBuf,
    #[arg(long)]
    labels: PathBuf,
    /// Correct the scores with this method before evaluating.
    #[arg(long)]
    method: Option<String>,
    #[command(flatten)]
    selection: SelectionArgs,
    #[command(flatten)]
    params: MethodArgs,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(cli.jobs).build() {
        Ok(p) => p,
        Err(e) => return report(CliError::Param(format!("thread pool: {e}"))),
    };
    let result = pool.install(|| match &cli.command {
        Command::Correct(a) => commands::correct(a),
        Command::Levels(a) => commands::levels(a),
        Command::Validate(a) => commands::validate(a),
        Command::FitThresholds(a) => commands::fit_thresholds(a),
        Command::Eval(a) => commands::eval(a),
    });
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => report(e),
    }
}

fn report(e: CliError) -> ExitCode {
    let message = e.to_string().replace(['\n', '\t'], " ");
    eprintln!("error\t{}\t{}", e.code(), message);
    ExitCode::from(e.exit_code())
}
