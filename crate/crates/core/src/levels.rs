//! Max-distance levels: `dist(n)` is the number of edges on the longest
//! root-to-`n` path, and level `d` holds every node with `dist(n) == d`.
//!
//! Processing nodes level by level in this order guarantees that all
//! ancestors of a node are finalized before the node itself. Shortest-path
//! (BFS) depth does not have that property once a DAG has skip edges.

use crate::dag::Dag;
use crate::error::{HdeError, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LevelMap {
    pub(crate) dist: Vec<usize>,
    pub(crate) levels: Vec<Vec<usize>>,
    pub(crate) fingerprint: u64,
}

/// Longest-path dynamic programming over the topological order, linear in |V| + |E|.
pub fn compute_levels(dag: &Dag) -> LevelMap {
    let dist: Vec<usize> = dag
        .longest_distances_from(dag.root())
        .into_iter()
        .map(|d| d.expect("every node is reachable from the root"))
        .collect();
    let max_level = dist.iter().copied().max().unwrap_or(0);
    let mut levels = vec![Vec::new(); max_level + 1];
    for (node, &d) in dist.iter().enumerate() {
        levels[d].push(node);
    }
    LevelMap {
        dist,
        levels,
        fingerprint: dag.fingerprint(),
    }
}

impl LevelMap {
    pub fn dist(&self, node: usize) -> usize {
        self.dist[node]
    }

    pub fn distances(&self) -> &[usize] {
        &self.dist
    }

    pub fn max_level(&self) -> usize {
        self.levels.len() - 1
    }

    /// Nodes at level `d` in node order; empty past the deepest level.
    pub fn level(&self, d: usize) -> &[usize] {
        self.levels.get(d).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn levels(&self) -> &[Vec<usize>] {
        &self.levels
    }

    /// Fails unless this map was computed from `dag`.
    pub fn ensure_for(&self, dag: &Dag) -> Result<()> {
        if self.fingerprint != dag.fingerprint() || self.dist.len() != dag.len() {
            return Err(HdeError::LevelMismatch);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dag::build_dag;

    fn named(dag: &Dag, lm: &LevelMap) -> Vec<(String, usize)> {
        (0..dag.len())
            .map(|i| (dag.name(i).to_string(), lm.dist(i)))
            .collect()
    }

    #[test]
    fn chain() {
        let d = build_dag(&[("r", "a"), ("a", "b")], false).unwrap();
        let lm = compute_levels(&d);
        assert_eq!(lm.distances(), [0, 1, 2]);
        assert_eq!(lm.max_level(), 2);
    }

    #[test]
    fn skip_edge_uses_longest_path() {
        let d = build_dag(&[("r", "a"), ("a", "c"), ("r", "c")], false).unwrap();
        let lm = compute_levels(&d);
        assert_eq!(
            named(&d, &lm),
            [("r".into(), 0), ("a".into(), 1), ("c".into(), 2)]
        );
    }

    #[test]
    fn diamond_levels_partition_nodes() {
        let d = build_dag(&[("r", "a"), ("r", "b"), ("a", "c"), ("b", "c")], false).unwrap();
        let lm = compute_levels(&d);
        assert_eq!(lm.distances(), [0, 1, 1, 2]);
        assert_eq!(lm.level(0), [0]);
        assert_eq!(lm.level(1), [1, 2]);
        assert_eq!(lm.level(2), [3]);
        assert!(lm.level(3).is_empty());
    }

    #[test]
    fn provenance_check() {
        let a = build_dag(&[("r", "a")], false).unwrap();
        let b = build_dag(&[("r", "b")], false).unwrap();
        let lm = compute_levels(&a);
        assert!(lm.ensure_for(&a).is_ok());
        assert_eq!(lm.ensure_for(&b).unwrap_err(), HdeError::LevelMismatch);
    }
}
