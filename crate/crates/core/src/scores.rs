//! Score matrices, discrete labelings and true-path-rule validity checks.
//!
//! TSV layout: a header `example<TAB>class...` followed by one row per
//! example. Lines starting with `#` are comments.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::Path;

use crate::dag::Dag;
use crate::error::{HdeError, Result};

/// Examples × classes, row-major, every value in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreMatrix {
    example_ids: Vec<String>,
    class_ids: Vec<String>,
    values: Vec<f64>,
}

impl ScoreMatrix {
    pub fn new(example_ids: Vec<String>, class_ids: Vec<String>, rows: Vec<Vec<f64>>) -> Result<Self> {
        if rows.len() != example_ids.len() {
            return Err(HdeError::alignment("score rows", example_ids.len(), rows.len()));
        }
        let mut values = Vec::with_capacity(rows.len() * class_ids.len());
        for (e, row) in example_ids.iter().zip(&rows) {
            if row.len() != class_ids.len() {
                return Err(HdeError::alignment(format!("row {e}"), class_ids.len(), row.len()));
            }
            for &v in row {
                check_unit(v, || format!("row {e}"))?;
            }
            values.extend_from_slice(row);
        }
        check_unique(&example_ids, "example")?;
        check_unique(&class_ids, "class")?;
        Ok(ScoreMatrix {
            example_ids,
            class_ids,
            values,
        })
    }

    pub fn n_examples(&self) -> usize {
        self.example_ids.len()
    }

    pub fn n_classes(&self) -> usize {
        self.class_ids.len()
    }

    pub fn example_ids(&self) -> &[String] {
        &self.example_ids
    }

    pub fn class_ids(&self) -> &[String] {
        &self.class_ids
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let k = self.n_classes();
        &self.values[i * k..(i + 1) * k]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> + '_ {
        // chunks() rejects a zero chunk size.
        (0..self.n_examples()).map(move |i| self.row(i))
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows().map(|r| r[j]).collect()
    }

    /// Same ids, new values. Rows must keep the current width and stay in `[0, 1]`.
    pub fn with_rows(&self, rows: Vec<Vec<f64>>) -> Result<Self> {
        ScoreMatrix::new(self.example_ids.clone(), self.class_ids.clone(), rows)
    }

    /// Reorders columns to `dag` node order. A missing root column is
    /// imputed as 1.0; any other missing class is an error.
    pub fn align_to(&self, dag: &Dag, origin: &str) -> Result<Aligned> {
        let mut source = Vec::with_capacity(dag.len());
        let mut imputed_root = false;
        for (node, name) in dag.names().iter().enumerate() {
            match self.class_ids.iter().position(|c| c == name) {
                Some(j) => source.push(Some(j)),
                None if node == dag.root() => {
                    imputed_root = true;
                    source.push(None);
                }
                None => {
                    return Err(HdeError::MissingClass {
                        class: name.clone(),
                        origin: origin.to_string(),
                    })
                }
            }
        }
        if let Some(extra) = self.class_ids.iter().find(|c| dag.index_of(c).is_none()) {
            return Err(HdeError::UnknownNode(extra.clone()));
        }
        let values = self
            .rows()
            .flat_map(|row| source.iter().map(move |s| s.map_or(1.0, |j| row[j])))
            .collect();
        Ok(Aligned {
            matrix: ScoreMatrix {
                example_ids: self.example_ids.clone(),
                class_ids: dag.names().to_vec(),
                values,
            },
            imputed_root,
        })
    }

    /// Column subset/permutation by class id.
    pub fn select_columns<S: AsRef<str>>(&self, order: &[S]) -> Result<Self> {
        let idx: Vec<usize> = order
            .iter()
            .map(|c| {
                self.class_ids
                    .iter()
                    .position(|x| x == c.as_ref())
                    .ok_or_else(|| HdeError::UnknownNode(c.as_ref().to_string()))
            })
            .collect::<Result<_>>()?;
        let values = self
            .rows()
            .flat_map(|row| idx.iter().map(move |&j| row[j]))
            .collect();
        Ok(ScoreMatrix {
            example_ids: self.example_ids.clone(),
            class_ids: idx.iter().map(|&j| self.class_ids[j].clone()).collect(),
            values,
        })
    }

    /// `digits: None` writes shortest round-trip representations.
    pub fn to_tsv(&self, digits: Option<usize>, comments: &[String]) -> String {
        let mut out = String::new();
        for c in comments {
            let _ = writeln!(out, "# {c}");
        }
        out.push_str("example");
        for c in &self.class_ids {
            out.push('\t');
            out.push_str(c);
        }
        out.push('\n');
        for (e, row) in self.example_ids.iter().zip(self.rows()) {
            out.push_str(e);
            for &v in row {
                out.push('\t');
                match digits {
                    Some(k) => {
                        let _ = write!(out, "{v:.k$}");
                    }
                    None => {
                        let _ = write!(out, "{v}");
                    }
                }
            }
            out.push('\n');
        }
        out
    }
}

/// A matrix in DAG node order, remembering whether the root column was filled in.
#[derive(Debug, Clone, PartialEq)]
pub struct Aligned {
    pub matrix: ScoreMatrix,
    pub imputed_root: bool,
}

fn check_unit(v: f64, location: impl FnOnce() -> String) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(HdeError::Range {
            location: location(),
            value: v,
        })
    }
}

fn check_unique(ids: &[String], what: &str) -> Result<()> {
    let mut seen = HashSet::new();
    for id in ids {
        if !seen.insert(id.as_str()) {
            return Err(HdeError::Parameter(format!("duplicate {what} id {id}")));
        }
    }
    Ok(())
}

fn parse_table(text: &str, origin: &str, binary: bool) -> Result<ScoreMatrix> {
    let parse_err = |line: usize, message: String| HdeError::Parse {
        location: format!("{origin}:{line}"),
        message,
    };
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.trim().is_empty() && !l.starts_with('#'));

    let (hline, header) = lines
        .next()
        .ok_or_else(|| parse_err(1, "missing header line".into()))?;
    let mut cols = header.split('\t');
    if cols.next() != Some("example") {
        return Err(parse_err(hline, "first header column must be `example`".into()));
    }
    let class_ids: Vec<String> = cols.map(|c| c.trim().to_string()).collect();
    if class_ids.iter().any(String::is_empty) {
        return Err(parse_err(hline, "empty class identifier in header".into()));
    }
    let mut seen = HashSet::new();
    if let Some(dup) = class_ids.iter().find(|c| !seen.insert(c.as_str())) {
        return Err(parse_err(hline, format!("duplicate class column {dup}")));
    }

    let mut example_ids = Vec::new();
    let mut seen_examples = HashSet::new();
    let mut values = Vec::new();
    for (lineno, line) in lines {
        let mut fields = line.split('\t');
        let id = fields.next().unwrap_or("").trim().to_string();
        if id.is_empty() {
            return Err(parse_err(lineno, "empty example id".into()));
        }
        if !seen_examples.insert(id.clone()) {
            return Err(parse_err(lineno, format!("duplicate example id {id}")));
        }
        let before = values.len();
        for field in fields {
            let v: f64 = field
                .trim()
                .parse()
                .map_err(|_| parse_err(lineno, format!("not a number: {field:?}")))?;
            check_unit(v, || format!("{origin}:{lineno}"))?;
            if binary && v != 0.0 && v != 1.0 {
                return Err(parse_err(lineno, format!("label must be 0 or 1, found {field}")));
            }
            values.push(v);
        }
        let found = values.len() - before;
        if found != class_ids.len() {
            return Err(parse_err(
                lineno,
                format!("expected {} values, found {found}", class_ids.len()),
            ));
        }
        example_ids.push(id);
    }
    Ok(ScoreMatrix {
        example_ids,
        class_ids,
        values,
    })
}

pub fn parse_scores(text: &str, origin: &str) -> Result<ScoreMatrix> {
    parse_table(text, origin, false)
}

pub fn read_scores(path: impl AsRef<Path>) -> Result<ScoreMatrix> {
    let path = path.as_ref();
    parse_scores(&crate::read_text(path)?, &path.display().to_string())
}

pub fn write_scores(matrix: &ScoreMatrix, path: impl AsRef<Path>, digits: Option<usize>) -> Result<()> {
    crate::write_text(path.as_ref(), &matrix.to_tsv(digits, &[]))
}

/// Per-example class sets, stored as membership flags aligned with `class_ids`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteLabeling {
    example_ids: Vec<String>,
    class_ids: Vec<String>,
    members: Vec<Vec<bool>>,
}

impl DiscreteLabeling {
    /// Values must be exactly 0 or 1.
    pub fn from_matrix(m: &ScoreMatrix) -> Result<Self> {
        let members = m
            .rows()
            .zip(m.example_ids())
            .map(|(row, e)| {
                row.iter()
                    .map(|&v| match v {
                        1.0 => Ok(true),
                        0.0 => Ok(false),
                        x => Err(HdeError::Parameter(format!(
                            "label for {e} must be 0 or 1, found {x}"
                        ))),
                    })
                    .collect::<Result<Vec<bool>>>()
            })
            .collect::<Result<_>>()?;
        Ok(DiscreteLabeling {
            example_ids: m.example_ids().to_vec(),
            class_ids: m.class_ids().to_vec(),
            members,
        })
    }

    pub fn example_ids(&self) -> &[String] {
        &self.example_ids
    }

    pub fn class_ids(&self) -> &[String] {
        &self.class_ids
    }

    pub fn row(&self, i: usize) -> &[bool] {
        &self.members[i]
    }

    pub fn to_matrix(&self) -> ScoreMatrix {
        ScoreMatrix {
            example_ids: self.example_ids.clone(),
            class_ids: self.class_ids.clone(),
            values: self
                .members
                .iter()
                .flatten()
                .map(|&b| if b { 1.0 } else { 0.0 })
                .collect(),
        }
    }
}

pub fn parse_labels(text: &str, origin: &str) -> Result<DiscreteLabeling> {
    DiscreteLabeling::from_matrix(&parse_table(text, origin, true)?)
}

pub fn read_labels(path: impl AsRef<Path>) -> Result<DiscreteLabeling> {
    let path = path.as_ref();
    parse_labels(&crate::read_text(path)?, &path.display().to_string())
}

/// Membership flags in node order are a valid labeling iff every member's
/// parents are members too.
pub fn is_valid_labeling(dag: &Dag, member: &[bool]) -> bool {
    assert_eq!(member.len(), dag.len(), "labeling not aligned with dag");
    (0..dag.len())
        .filter(|&i| member[i])
        .all(|i| dag.parents(i).iter().all(|&p| member[p]))
}

/// Discrete true path rule for a set of class names.
pub fn check_valid_discrete<S: AsRef<str>>(dag: &Dag, set: &[S]) -> Result<bool> {
    let mut member = vec![false; dag.len()];
    for s in set {
        member[dag.require(s.as_ref())?] = true;
    }
    Ok(is_valid_labeling(dag, &member))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Violation {
    pub example: usize,
    pub parent: usize,
    pub child: usize,
    pub parent_score: f64,
    pub child_score: f64,
}

impl Violation {
    pub fn gap(&self) -> f64 {
        self.child_score - self.parent_score
    }
}

/// Edges whose child outscores its parent by more than the tolerance.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ViolationReport {
    pub violations: Vec<Violation>,
    pub total_count: usize,
    pub max_gap: f64,
}

impl ViolationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    fn scan_row(&mut self, dag: &Dag, example: usize, row: &[f64], eps: f64) {
        for &(p, c) in dag.edges() {
            if row[p] < row[c] - eps {
                let v = Violation {
                    example,
                    parent: p,
                    child: c,
                    parent_score: row[p],
                    child_score: row[c],
                };
                self.max_gap = self.max_gap.max(v.gap());
                self.total_count += 1;
                self.violations.push(v);
            }
        }
    }

    /// Scans every row of a matrix already aligned with `dag`.
    pub fn scan(dag: &Dag, matrix: &ScoreMatrix, eps: f64) -> Result<Self> {
        if matrix.n_classes() != dag.len() {
            return Err(HdeError::alignment("score columns", dag.len(), matrix.n_classes()));
        }
        let mut report = ViolationReport::default();
        for (i, row) in matrix.rows().enumerate() {
            report.scan_row(dag, i, row, eps);
        }
        Ok(report)
    }

    /// Number of distinct examples with at least one violation.
    pub fn examples_affected(&self) -> usize {
        let mut ex: Vec<usize> = self.violations.iter().map(|v| v.example).collect();
        ex.dedup();
        ex.len()
    }

    pub fn to_tsv(&self, dag: &Dag, example_ids: &[String]) -> String {
        let mut out = String::from("example\tparent\tchild\tparent_score\tchild_score\n");
        for v in &self.violations {
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}",
                example_ids[v.example],
                dag.name(v.parent),
                dag.name(v.child),
                v.parent_score,
                v.child_score
            );
        }
        out
    }
}

/// Continuous true path rule on one row: lists edges with `y_parent < y_child - eps`.
///
/// Panics if `row` is not aligned with `dag`.
pub fn check_valid_continuous(dag: &Dag, row: &[f64], eps: f64) -> ViolationReport {
    assert_eq!(row.len(), dag.len(), "score row not aligned with dag");
    let mut report = ViolationReport::default();
    report.scan_row(dag, 0, row, eps);
    report
}
