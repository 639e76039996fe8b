//! Hierarchical top-down correction.
//!
//! Visiting nodes by increasing max-distance level, each node keeps its own
//! score unless the smallest corrected parent score is lower, in which case
//! it takes that value. The root keeps its flat score.

use crate::dag::Dag;
use crate::error::{HdeError, Result};
use crate::levels::LevelMap;

pub fn htd_correct(dag: &Dag, levels: &LevelMap, flat: &[f64]) -> Result<Vec<f64>> {
    check_row(dag, levels, flat)?;
    Ok(top_down(dag, levels.levels(), flat))
}

pub(crate) fn check_row(dag: &Dag, levels: &LevelMap, row: &[f64]) -> Result<()> {
    levels.ensure_for(dag)?;
    if row.len() != dag.len() {
        return Err(HdeError::alignment("score row", dag.len(), row.len()));
    }
    Ok(())
}

/// Top-down pass over `levels` (level 0 first). `reference[i]` is kept unless
/// some parent's corrected value is strictly smaller.
pub(crate) fn top_down(dag: &Dag, levels: &[Vec<usize>], reference: &[f64]) -> Vec<f64> {
    let mut out = reference.to_vec();
    for level in levels.iter().skip(1) {
        for &i in level {
            let x = dag
                .parents(i)
                .iter()
                .map(|&p| out[p])
                .fold(f64::INFINITY, f64::min);
            if x < reference[i] {
                out[i] = x;
            }
        }
    }
    out
}
