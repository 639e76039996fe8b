use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use hde_core::iso::{IsoOptions, IsoSolver};
use hde_core::scores::{read_labels, read_scores, Aligned};
use hde_core::thresholds::{
    default_grid, evaluate, fit_fscore, fit_global, fit_percentile, read_thresholds, Fit,
    ViolationSummary,
};
use hde_core::{
    compute_levels, read_edge_list, Dag, DiscreteLabeling, HdeError, LevelMap, Method, MethodConfig,
    PositiveSelection, ScoreMatrix, ViolationReport,
};
use rayon::prelude::*;
use thiserror::Error;

use crate::{
    CorrectArgs, DagArgs, EvalArgs, FitArgs, LevelsArgs, MethodArgs, SelectionArgs, SolverArg,
    Strategy, ValidateArgs,
};

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] HdeError),
    #[error("{0}")]
    Param(String),
    #[error("{0}")]
    Inconsistent(String),
}

impl CliError {
    pub fn code(&self) -> &'static str {
        match self {
            CliError::Core(e) => e.code(),
            CliError::Param(_) => "E_PARAM",
            CliError::Inconsistent(_) => "E_INCONSISTENT",
        }
    }

    /// 1 validation failure, 2 I/O or input data, 3 parameters, 4 convergence.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Inconsistent(_) => 1,
            CliError::Param(_) => 3,
            CliError::Core(e) => match e {
                HdeError::WeightRange(_)
                | HdeError::EmptyGrid
                | HdeError::Parameter(_)
                | HdeError::Size { .. }
                | HdeError::LevelMismatch => 3,
                HdeError::Convergence { .. } => 4,
                _ => 2,
            },
        }
    }
}

type CliResult<T> = Result<T, CliError>;

fn load_dag(args: &DagArgs) -> CliResult<(Dag, LevelMap)> {
    let dag = read_edge_list(&args.dag, args.dedup)?;
    let levels = compute_levels(&dag);
    Ok((dag, levels))
}

fn origin(path: &Path) -> String {
    path.display().to_string()
}

fn load_scores(path: &Path, dag: &Dag) -> CliResult<(ScoreMatrix, Aligned)> {
    let raw = read_scores(path)?;
    let aligned = raw.align_to(dag, &origin(path))?;
    Ok((raw, aligned))
}

/// Labels aligned to `dag` columns and to the example order of `scores`.
fn load_labels(path: &Path, dag: &Dag, scores: &ScoreMatrix) -> CliResult<DiscreteLabeling> {
    let raw = read_labels(path)?.to_matrix();
    let aligned = raw.align_to(dag, &origin(path))?.matrix;
    let rows = scores
        .example_ids()
        .iter()
        .map(|e| {
            aligned
                .example_ids()
                .iter()
                .position(|x| x == e)
                .map(|i| aligned.row(i).to_vec())
                .ok_or_else(|| CliError::Core(HdeError::MissingClass {
                    class: format!("example {e}"),
                    origin: origin(path),
                }))
        })
        .collect::<CliResult<Vec<_>>>()?;
    if aligned.n_examples() != scores.n_examples() {
        return Err(HdeError::Alignment {
            context: format!("examples in {}", origin(path)),
            expected: scores.n_examples(),
            found: aligned.n_examples(),
        }
        .into());
    }
    let matrix = ScoreMatrix::new(scores.example_ids().to_vec(), dag.names().to_vec(), rows)?;
    Ok(DiscreteLabeling::from_matrix(&matrix)?)
}

fn emit(output: Option<&PathBuf>, text: &str) -> CliResult<()> {
    let io = |path: String, e: std::io::Error| HdeError::Io {
        path,
        message: e.to_string(),
    };
    match output {
        Some(path) => std::fs::write(path, text).map_err(|e| io(origin(path), e))?,
        None => std::io::stdout()
            .lock()
            .write_all(text.as_bytes())
            .map_err(|e| io("<stdout>".into(), e))?,
    }
    Ok(())
}

fn check_unit(name: &str, v: f64) -> CliResult<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(CliError::Param(format!("{name} {v} outside [0, 1]")))
    }
}

fn selection(args: &SelectionArgs, dag: &Dag) -> CliResult<PositiveSelection> {
    if args.adaptive {
        return Ok(PositiveSelection::Adaptive);
    }
    if let Some(path) = &args.thresholds_file {
        return Ok(PositiveSelection::Threshold(read_thresholds(path, dag)?));
    }
    let t = args.threshold.unwrap_or(0.5);
    check_unit("--threshold", t)?;
    Ok(PositiveSelection::Threshold(fit_global(t, dag.len())?))
}

fn method_config(
    method: &str,
    sel: &SelectionArgs,
    params: &MethodArgs,
    dag: &Dag,
) -> CliResult<MethodConfig> {
    let method: Method = method.parse()?;
    if params.literal_topdown && !matches!(method, Method::Tpr | Method::TprW | Method::TprDescConst | Method::TprDescLin) {
        return Err(CliError::Param("--literal-topdown applies to tpr methods only".into()));
    }
    if params.iso_on_flat && method != Method::IsoTpr {
        return Err(CliError::Param("--iso-on-flat applies to iso-tpr only".into()));
    }
    if params.iso_tol.is_nan() || params.iso_tol <= 0.0 {
        return Err(CliError::Param("--iso-tol must be positive".into()));
    }
    let iso = IsoOptions {
        solver: match params.iso_solver {
            SolverArg::Partition => IsoSolver::Partition,
            SolverArg::Dykstra => IsoSolver::Dykstra,
        },
        tolerance: params.iso_tol,
        max_sweeps: params.iso_max_sweeps,
        on_flat: params.iso_on_flat,
    };
    let cfg = MethodConfig::new(method, selection(sel, dag)?, params.w, params.literal_topdown, iso)?;
    cfg.validate(dag)?;
    Ok(cfg)
}

fn correct_matrix(cfg: &MethodConfig, dag: &Dag, levels: &LevelMap, m: &ScoreMatrix) -> CliResult<ScoreMatrix> {
    let rows = (0..m.n_examples())
        .into_par_iter()
        .map(|i| cfg.correct_row(dag, levels, m.row(i)))
        .collect::<Result<Vec<_>, _>>()?;
    let out = m.with_rows(rows)?;
    let report = ViolationReport::scan(dag, &out, cfg.method.validity_epsilon())?;
    if !report.is_valid() {
        return Err(CliError::Inconsistent(format!(
            "{} produced {} violations (max gap {:e})",
            cfg.method, report.total_count, report.max_gap
        )));
    }
    Ok(out)
}

fn header_comments(dag: &Dag, aligned: &Aligned) -> Vec<String> {
    let mut out = Vec::new();
    if dag.has_synthetic_root() {
        out.push(format!("synthetic root: {}", dag.name(dag.root())));
    }
    if aligned.imputed_root {
        out.push(format!("imputed root column: {}=1", dag.name(dag.root())));
    }
    out
}

/// Input column order, with an imputed root column first.
fn output_columns(dag: &Dag, raw: &ScoreMatrix, aligned: &Aligned) -> Vec<String> {
    let mut cols = Vec::with_capacity(dag.len());
    if aligned.imputed_root {
        cols.push(dag.name(dag.root()).to_string());
    }
    cols.extend(raw.class_ids().iter().cloned());
    cols
}

pub fn correct(a: &CorrectArgs) -> CliResult<u8> {
    let (dag, levels) = load_dag(&a.dag)?;
    let cfg = method_config(&a.method, &a.selection, &a.params, &dag)?;
    let (raw, aligned) = load_scores(&a.scores, &dag)?;
    let corrected = correct_matrix(&cfg, &dag, &levels, &aligned.matrix)?;
    let out = corrected.select_columns(&output_columns(&dag, &raw, &aligned))?;
    emit(a.output.as_ref(), &out.to_tsv(a.digits, &header_comments(&dag, &aligned)))?;
    Ok(0)
}

pub fn levels(a: &LevelsArgs) -> CliResult<u8> {
    let (dag, levels) = load_dag(&a.dag)?;
    let mut out = String::from("class\tlevel\n");
    for (i, name) in dag.names().iter().enumerate() {
        let _ = writeln!(out, "{name}\t{}", levels.dist(i));
    }
    emit(a.output.as_ref(), &out)?;
    Ok(0)
}

pub fn validate(a: &ValidateArgs) -> CliResult<u8> {
    if a.epsilon.is_nan() || a.epsilon < 0.0 {
        return Err(CliError::Param("--epsilon must be non-negative".into()));
    }
    let (dag, _) = load_dag(&a.dag)?;
    let (_, aligned) = load_scores(&a.scores, &dag)?;
    let report = ViolationReport::scan(&dag, &aligned.matrix, a.epsilon)?;
    emit(a.output.as_ref(), &report.to_tsv(&dag, aligned.matrix.example_ids()))?;
    Ok(if report.is_valid() { 0 } else { 1 })
}

fn parse_grid(spec: &str) -> CliResult<Vec<f64>> {
    let bad = || CliError::Param(format!("bad grid {spec:?}"));
    let grid: Vec<f64> = if let [start, stop, step] = spec.split(':').collect::<Vec<_>>()[..] {
        let (start, stop, step): (f64, f64, f64) = (
            start.parse().map_err(|_| bad())?,
            stop.parse().map_err(|_| bad())?,
            step.parse().map_err(|_| bad())?,
        );
        if step.is_nan() || step <= 0.0 || stop < start {
            return Err(bad());
        }
        let n = ((stop - start) / step + 1e-9).floor() as usize;
        (0..=n)
            .map(|k| ((start + k as f64 * step) * 1e12).round() / 1e12)
            .collect()
    } else {
        spec.split(',')
            .map(|s| s.trim().parse().map_err(|_| bad()))
            .collect::<CliResult<_>>()?
    };
    for &g in &grid {
        check_unit("grid value", g)?;
    }
    Ok(grid)
}

pub fn fit_thresholds(a: &FitArgs) -> CliResult<u8> {
    let (dag, _) = load_dag(&a.dag)?;
    let (_, aligned) = load_scores(&a.scores, &dag)?;
    let labels = load_labels(&a.labels, &dag, &aligned.matrix)?;
    let fit = match a.strategy {
        Strategy::Global => {
            check_unit("--threshold", a.threshold)?;
            Fit {
                thresholds: fit_global(a.threshold, dag.len())?,
                no_positives: Vec::new(),
            }
        }
        Strategy::Fscore => {
            let grid = match &a.grid {
                Some(spec) => parse_grid(spec)?,
                None => default_grid(),
            };
            fit_fscore(&aligned.matrix, &labels, &grid)?
        }
        Strategy::Percentile => {
            let k = a
                .k
                .ok_or_else(|| CliError::Param("--k is required for the percentile strategy".into()))?;
            fit_percentile(&aligned.matrix, &labels, k)?
        }
    };
    for &j in &fit.no_positives {
        eprintln!(
            "warning\tno positive training examples for class {}; threshold set to {}",
            dag.name(j),
            fit.thresholds.get(j)
        );
    }
    emit(a.output.as_ref(), &fit.thresholds.to_tsv(&dag))?;
    Ok(0)
}

fn summary_line(label: &str, s: &ViolationSummary) -> String {
    format!(
        "violations {label}: examples={} total={} max_gap={}",
        s.examples_affected, s.total, s.max_gap
    )
}

pub fn eval(a: &EvalArgs) -> CliResult<u8> {
    let (dag, levels) = load_dag(&a.dag)?;
    let (_, aligned) = load_scores(&a.scores, &dag)?;
    let labels = load_labels(&a.labels, &dag, &aligned.matrix)?;
    let thresholds = match selection(&a.selection, &dag)? {
        PositiveSelection::Threshold(t) => t,
        PositiveSelection::Adaptive => fit_global(0.5, dag.len())?,
    };
    let mut comments = Vec::new();
    let scored = match &a.method {
        Some(m) => {
            let cfg = method_config(m, &a.selection, &a.params, &dag)?;
            let before = ViolationReport::scan(&dag, &aligned.matrix, 0.0)?;
            comments.push(summary_line("before", &ViolationSummary::from(&before)));
            correct_matrix(&cfg, &dag, &levels, &aligned.matrix)?
        }
        None => aligned.matrix.clone(),
    };
    let report = evaluate(&dag, &scored, &labels, &thresholds)?;
    let label = if a.method.is_some() { "after" } else { "in scores" };
    comments.push(summary_line(label, &report.violations));

    let mut out = String::new();
    for c in &comments {
        let _ = writeln!(out, "# {c}");
    }
    out.push_str(&report.to_tsv());
    emit(a.output.as_ref(), &out)?;
    Ok(0)
}
