//! Hierarchical corrections of flat per-class scores over DAG taxonomies.
//!
//! A flat classifier scores each class independently, so its output usually
//! breaks the true path rule: a class may score higher than one of its
//! parents. The correction methods here turn such a score row into one where
//! every parent scores at least as high as each of its children.
//!
//! - [`htd::htd_correct`]: top-down capping by the parents' corrected scores.
//! - [`tpr::tpr_correct`]: bottom-up propagation of positive descendants,
//!   then the top-down pass. Weighted and descendant variants live alongside.
//! - [`iso::iso_tpr_correct`]: bottom-up pass followed by a least-squares
//!   projection onto the hierarchy-consistent set.
//!
//! Rows are `&[f64]` slices indexed by [`Dag`] node order.

pub mod correct;
pub mod dag;
pub mod error;
pub mod htd;
pub mod iso;
pub mod levels;
#[cfg(any(test, feature = "oracles"))]
pub mod oracles;
pub mod scores;
pub mod thresholds;
pub mod tpr;

pub use correct::{Method, MethodConfig};
pub use dag::{build_dag, parse_edge_list, read_edge_list, Dag, DagBuilder, Relation, SYNTHETIC_ROOT};
pub use error::{HdeError, Result};
pub use htd::htd_correct;
pub use iso::{isotonic_project, iso_tpr_correct, IsoOptions, IsoSolution, IsoSolver};
pub use levels::{compute_levels, LevelMap};
pub use scores::{
    check_valid_continuous, check_valid_discrete, DiscreteLabeling, ScoreMatrix, Violation,
    ViolationReport,
};
pub use thresholds::{ClassMetrics, EvalReport, ThresholdStrategy, ThresholdVector};
pub use tpr::{tpr_correct, tpr_desc_correct, tpr_w_correct, DescendantMode, PositiveSelection, TprConfig};

use std::path::Path;

pub(crate) fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| HdeError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

pub(crate) fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| HdeError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}
