//! Per-class thresholds for selecting positive children, and per-class
//! precision / recall / F evaluation.
//!
//! Three ways to pick thresholds are provided: one global value, the grid
//! value maximizing training F-score per class, or a nearest-rank percentile
//! of the scores that the class's training positives received. Every
//! comparison against a threshold is strict (`score > t`).

use std::fmt::Write as _;
use std::path::Path;

use crate::dag::Dag;
use crate::error::{HdeError, Result};
use crate::scores::{DiscreteLabeling, ScoreMatrix, ViolationReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ThresholdStrategy {
    Global,
    FScore,
    Percentile,
    /// Loaded from a file; the original strategy is unknown.
    External,
}

/// Thresholds aligned with [`Dag`] node order.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdVector {
    values: Vec<f64>,
    strategy: ThresholdStrategy,
}

impl ThresholdVector {
    pub fn new(values: Vec<f64>, strategy: ThresholdStrategy) -> Result<Self> {
        for (j, &t) in values.iter().enumerate() {
            if !(0.0..=1.0).contains(&t) {
                return Err(HdeError::Range {
                    location: format!("threshold {j}"),
                    value: t,
                });
            }
        }
        Ok(ThresholdVector { values, strategy })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, node: usize) -> f64 {
        self.values[node]
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn strategy(&self) -> ThresholdStrategy {
        self.strategy
    }

    pub fn to_tsv(&self, dag: &Dag) -> String {
        let mut out = String::from("class\tthreshold\n");
        for (name, t) in dag.names().iter().zip(&self.values) {
            let _ = writeln!(out, "{name}\t{t}");
        }
        out
    }
}

/// Same threshold for every class.
pub fn fit_global(t: f64, n_classes: usize) -> Result<ThresholdVector> {
    if !(0.0..=1.0).contains(&t) {
        return Err(HdeError::Range {
            location: "global threshold".into(),
            value: t,
        });
    }
    ThresholdVector::new(vec![t; n_classes], ThresholdStrategy::Global)
}

/// `0.01, 0.02, ..., 0.99`.
pub fn default_grid() -> Vec<f64> {
    (1..=99).map(|k| k as f64 / 100.0).collect()
}

/// Thresholds plus the classes that had no positive training example.
#[derive(Debug, Clone, PartialEq)]
pub struct Fit {
    pub thresholds: ThresholdVector,
    pub no_positives: Vec<usize>,
}

fn check_training(scores: &ScoreMatrix, labels: &DiscreteLabeling) -> Result<()> {
    if scores.class_ids() != labels.class_ids() {
        return Err(HdeError::Parameter(
            "score and label columns differ".into(),
        ));
    }
    if scores.example_ids() != labels.example_ids() {
        return Err(HdeError::alignment(
            "label rows",
            scores.n_examples(),
            labels.example_ids().len(),
        ));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    pub tn: usize,
}

impl Confusion {
    /// Counts for the rule "predict positive iff score > t".
    pub fn at(scores: &[f64], positive: &[bool], t: f64) -> Self {
        let mut c = Confusion::default();
        for (&s, &y) in scores.iter().zip(positive) {
            match (s > t, y) {
                (true, true) => c.tp += 1,
                (true, false) => c.fp += 1,
                (false, true) => c.fn_ += 1,
                (false, false) => c.tn += 1,
            }
        }
        c
    }

    pub fn precision(&self) -> f64 {
        ratio(self.tp, self.tp + self.fp)
    }

    pub fn recall(&self) -> f64 {
        ratio(self.tp, self.tp + self.fn_)
    }

    pub fn f_score(&self) -> f64 {
        let (p, r) = (self.precision(), self.recall());
        if p + r > 0.0 {
            2.0 * p * r / (p + r)
        } else {
            0.0
        }
    }
}

fn ratio(a: usize, b: usize) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

/// Per class, the smallest grid value maximizing training F; classes without
/// positives get the largest grid value.
pub fn fit_fscore(scores: &ScoreMatrix, labels: &DiscreteLabeling, grid: &[f64]) -> Result<Fit> {
    check_training(scores, labels)?;
    if grid.is_empty() {
        return Err(HdeError::EmptyGrid);
    }
    for &g in grid {
        if !(0.0..=1.0).contains(&g) {
            return Err(HdeError::Range {
                location: "threshold grid".into(),
                value: g,
            });
        }
    }
    let grid_max = grid.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut values = Vec::with_capacity(scores.n_classes());
    let mut no_positives = Vec::new();
    for j in 0..scores.n_classes() {
        let col = scores.column(j);
        let pos: Vec<bool> = (0..scores.n_examples()).map(|i| labels.row(i)[j]).collect();
        if !pos.contains(&true) {
            no_positives.push(j);
            values.push(grid_max);
            continue;
        }
        let mut best = (f64::NEG_INFINITY, f64::INFINITY);
        for &t in grid {
            let f = Confusion::at(&col, &pos, t).f_score();
            if f > best.0 || (f == best.0 && t < best.1) {
                best = (f, t);
            }
        }
        values.push(best.1);
    }
    Ok(Fit {
        thresholds: ThresholdVector::new(values, ThresholdStrategy::FScore)?,
        no_positives,
    })
}

/// Nearest-rank percentile: the value at 1-based rank `ceil(k/100 * m)` of the
/// `m` sorted positive scores, with rank 0 promoted to 1.
pub fn nearest_rank(sorted: &[f64], k: f64) -> f64 {
    let m = sorted.len();
    let rank = ((k * m as f64) / 100.0).ceil() as usize;
    sorted[rank.clamp(1, m) - 1]
}

/// Fallback threshold for classes with no positive training example.
pub const NO_POSITIVES_THRESHOLD: f64 = 0.5;

pub fn fit_percentile(scores: &ScoreMatrix, labels: &DiscreteLabeling, k: f64) -> Result<Fit> {
    check_training(scores, labels)?;
    if !(0.0..=100.0).contains(&k) {
        return Err(HdeError::Parameter(format!("percentile {k} outside [0, 100]")));
    }
    let mut values = Vec::with_capacity(scores.n_classes());
    let mut no_positives = Vec::new();
    for j in 0..scores.n_classes() {
        let mut pos: Vec<f64> = scores
            .rows()
            .enumerate()
            .filter(|(i, _)| labels.row(*i)[j])
            .map(|(_, r)| r[j])
            .collect();
        if pos.is_empty() {
            no_positives.push(j);
            values.push(NO_POSITIVES_THRESHOLD);
            continue;
        }
        pos.sort_by(f64::total_cmp);
        values.push(nearest_rank(&pos, k));
    }
    Ok(Fit {
        thresholds: ThresholdVector::new(values, ThresholdStrategy::Percentile)?,
        no_positives,
    })
}

/// Parses `class<TAB>threshold` rows (optional header) into node order.
/// The root may be omitted; it is never a child, so its threshold is inert.
pub fn parse_thresholds(text: &str, origin: &str, dag: &Dag) -> Result<ThresholdVector> {
    let mut values = vec![None; dag.len()];
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') || line == "class\tthreshold" {
            continue;
        }
        let location = format!("{origin}:{}", lineno + 1);
        let fields: Vec<&str> = line.split('\t').map(str::trim).collect();
        if fields.len() != 2 {
            return Err(HdeError::Parse {
                location,
                message: format!("expected 2 tab-separated fields, found {}", fields.len()),
            });
        }
        let node = dag.require(fields[0])?;
        let t: f64 = fields[1].parse().map_err(|_| HdeError::Parse {
            location: location.clone(),
            message: format!("not a number: {:?}", fields[1]),
        })?;
        if !(0.0..=1.0).contains(&t) {
            return Err(HdeError::Range { location, value: t });
        }
        values[node] = Some(t);
    }
    let values = values
        .into_iter()
        .enumerate()
        .map(|(i, t)| match t {
            Some(t) => Ok(t),
            None if i == dag.root() => Ok(1.0),
            None => Err(HdeError::MissingClass {
                class: dag.name(i).to_string(),
                origin: origin.to_string(),
            }),
        })
        .collect::<Result<_>>()?;
    ThresholdVector::new(values, ThresholdStrategy::External)
}

pub fn read_thresholds(path: impl AsRef<Path>, dag: &Dag) -> Result<ThresholdVector> {
    let path = path.as_ref();
    parse_thresholds(&crate::read_text(path)?, &path.display().to_string(), dag)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassMetrics {
    pub class: String,
    pub counts: Confusion,
    pub precision: f64,
    pub recall: f64,
    pub f_score: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ViolationSummary {
    pub examples_affected: usize,
    pub total: usize,
    pub max_gap: f64,
}

impl From<&ViolationReport> for ViolationSummary {
    fn from(r: &ViolationReport) -> Self {
        ViolationSummary {
            examples_affected: r.examples_affected(),
            total: r.total_count,
            max_gap: r.max_gap,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub classes: Vec<ClassMetrics>,
    pub violations: ViolationSummary,
}

impl EvalReport {
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("class\tP\tR\tF\n");
        for m in &self.classes {
            let _ = writeln!(out, "{}\t{}\t{}\t{}", m.class, m.precision, m.recall, m.f_score);
        }
        out
    }
}

/// Per-class metrics at `thresholds` plus a violation summary of `scores`.
/// Inputs must already be aligned with `dag`.
pub fn evaluate(
    dag: &Dag,
    scores: &ScoreMatrix,
    labels: &DiscreteLabeling,
    thresholds: &ThresholdVector,
) -> Result<EvalReport> {
    check_training(scores, labels)?;
    if scores.n_classes() != dag.len() {
        return Err(HdeError::alignment("score columns", dag.len(), scores.n_classes()));
    }
    if thresholds.len() != dag.len() {
        return Err(HdeError::alignment("thresholds", dag.len(), thresholds.len()));
    }
    let classes = (0..dag.len())
        .map(|j| {
            let col = scores.column(j);
            let pos: Vec<bool> = (0..scores.n_examples()).map(|i| labels.row(i)[j]).collect();
            let counts = Confusion::at(&col, &pos, thresholds.get(j));
            ClassMetrics {
                class: dag.name(j).to_string(),
                counts,
                precision: counts.precision(),
                recall: counts.recall(),
                f_score: counts.f_score(),
            }
        })
        .collect();
    let report = ViolationReport::scan(dag, scores, 0.0)?;
    Ok(EvalReport {
        classes,
        violations: ViolationSummary::from(&report),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dag::build_dag;

    fn one_class(scores: &[f64], labels: &[bool]) -> (ScoreMatrix, DiscreteLabeling) {
        let ids: Vec<String> = (0..scores.len()).map(|i| format!("e{i}")).collect();
        let m = ScoreMatrix::new(ids.clone(), vec!["c".into()], scores.iter().map(|&s| vec![s]).collect())
            .unwrap();
        let l = ScoreMatrix::new(
            ids,
            vec!["c".into()],
            labels.iter().map(|&b| vec![if b { 1.0 } else { 0.0 }]).collect(),
        )
        .unwrap();
        (m, DiscreteLabeling::from_matrix(&l).unwrap())
    }

    /// Independent exhaustive scan: F of every grid point, computed from raw counts.
    fn scan_best(scores: &[f64], labels: &[bool], grid: &[f64]) -> f64 {
        let f_at = |t: f64| {
            let tp = scores.iter().zip(labels).filter(|(s, y)| **s > t && **y).count() as f64;
            let pp = scores.iter().filter(|s| **s > t).count() as f64;
            let ap = labels.iter().filter(|y| **y).count() as f64;
            if tp == 0.0 {
                0.0
            } else {
                2.0 * tp / (pp + ap)
            }
        };
        let best_f = grid.iter().map(|&t| f_at(t)).fold(f64::NEG_INFINITY, f64::max);
        grid.iter()
            .copied()
            .filter(|&t| f_at(t) == best_f)
            .fold(f64::INFINITY, f64::min)
    }

    fn tenths() -> Vec<f64> {
        (1..=9).map(|k| k as f64 / 10.0).collect()
    }

    #[test]
    fn global() {
        assert_eq!(fit_global(0.5, 4).unwrap().values(), [0.5; 4]);
        assert_eq!(fit_global(0.0, 2).unwrap().values(), [0.0; 2]);
        assert!(matches!(fit_global(1.1, 2), Err(HdeError::Range { .. })));
    }

    #[test]
    fn fscore_separable_class() {
        let s = [0.8, 0.6, 0.4, 0.2];
        let y = [true, true, false, false];
        let expected = scan_best(&s, &y, &tenths());
        assert_eq!(expected, 0.4);
        let (m, l) = one_class(&s, &y);
        let fit = fit_fscore(&m, &l, &tenths()).unwrap();
        assert_eq!(fit.thresholds.values(), [expected]);
        let c = Confusion::at(&s, &y, expected);
        assert_eq!(c.f_score(), 1.0);
    }

    #[test]
    fn fscore_no_positives_takes_grid_max() {
        let (m, l) = one_class(&[0.3, 0.9], &[false, false]);
        let fit = fit_fscore(&m, &l, &tenths()).unwrap();
        assert_eq!(fit.thresholds.values(), [0.9]);
        assert_eq!(fit.no_positives, [0]);
    }

    #[test]
    fn fscore_inverted_scores() {
        let s = [0.1, 0.2, 0.8, 0.9];
        let y = [true, true, false, false];
        let (m, l) = one_class(&s, &y);
        let fit = fit_fscore(&m, &l, &tenths()).unwrap();
        assert_eq!(fit.thresholds.values(), [scan_best(&s, &y, &tenths())]);
        assert!(matches!(fit_fscore(&m, &l, &[]), Err(HdeError::EmptyGrid)));
    }

    #[test]
    fn percentile_nearest_rank() {
        let (m, l) = one_class(&[0.6, 0.2, 0.8, 0.4, 0.95], &[true, true, true, true, false]);
        let t = |k| fit_percentile(&m, &l, k).unwrap().thresholds.values()[0];
        assert_eq!(t(25.0), 0.2);
        assert_eq!(t(100.0), 0.8);
        assert_eq!(t(0.0), 0.2);
        assert_eq!(t(50.0), 0.4);
        assert_eq!(t(51.0), 0.6);
        let (m, l) = one_class(&[0.7], &[true]);
        assert_eq!(fit_percentile(&m, &l, 30.0).unwrap().thresholds.values(), [0.7]);
    }

    #[test]
    fn percentile_rank_is_exact_for_integer_k() {
        // 0.7 * 10 rounds up to 7.000000000000001 in floating point.
        let sorted: Vec<f64> = (1..=10).map(|i| i as f64 / 10.0).collect();
        assert_eq!(nearest_rank(&sorted, 70.0), 0.7);
    }

    #[test]
    fn percentile_without_positives_falls_back() {
        let (m, l) = one_class(&[0.3], &[false]);
        let fit = fit_percentile(&m, &l, 50.0).unwrap();
        assert_eq!(fit.thresholds.values(), [NO_POSITIVES_THRESHOLD]);
        assert_eq!(fit.no_positives, [0]);
    }

    #[test]
    fn evaluate_extremes() {
        let d = build_dag(&[("r", "a")], false).unwrap();
        let ids = vec!["e1".to_string(), "e2".to_string()];
        let lab = ScoreMatrix::new(ids.clone(), d.names().to_vec(), vec![vec![1.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let labels = DiscreteLabeling::from_matrix(&lab).unwrap();
        let t = fit_global(0.5, 2).unwrap();

        let perfect = evaluate(&d, &lab, &labels, &t).unwrap();
        assert!(perfect.classes.iter().all(|c| c.f_score == 1.0));

        let zeros = ScoreMatrix::new(ids.clone(), d.names().to_vec(), vec![vec![0.0; 2]; 2]).unwrap();
        let rep = evaluate(&d, &zeros, &labels, &t).unwrap();
        assert!(rep.classes.iter().all(|c| c.recall == 0.0 && c.f_score == 0.0));

        let flipped = ScoreMatrix::new(ids, d.names().to_vec(), vec![vec![0.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let rep = evaluate(&d, &flipped, &labels, &t).unwrap();
        assert!(rep.classes.iter().all(|c| c.precision == 0.0));
        assert_eq!(rep.violations.total, 1);
        let c = rep.classes[1].counts;
        assert_eq!(c.tp + c.fp + c.fn_ + c.tn, 2);
    }

    #[test]
    fn threshold_file_round_trip() {
        let d = build_dag(&[("r", "a"), ("r", "b")], false).unwrap();
        let t = ThresholdVector::new(vec![0.5, 0.25, 0.75], ThresholdStrategy::FScore).unwrap();
        let back = parse_thresholds(&t.to_tsv(&d), "t", &d).unwrap();
        assert_eq!(back.values(), t.values());
        let no_root = parse_thresholds("a\t0.3\nb\t0.4\n", "t", &d).unwrap();
        assert_eq!(no_root.values(), [1.0, 0.3, 0.4]);
        assert!(matches!(
            parse_thresholds("a\t0.3\n", "t", &d),
            Err(HdeError::MissingClass { .. })
        ));
        assert!(matches!(
            parse_thresholds("a\t1.3\nb\t0.1\n", "t", &d),
            Err(HdeError::Range { .. })
        ));
    }
}
