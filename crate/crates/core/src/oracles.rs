//! Slow, independent reference implementations and random instance
//! generators. Only compiled for tests or with the `oracles` feature.
//!
//! Nothing here shares code with the production paths it is used to check.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::dag::{Dag, DagBuilder};
use crate::error::{HdeError, Result};

pub const PATH_ORACLE_CAP: usize = 12;
pub const ISO_ORACLE_CAP: usize = 15;
pub const ISO_ORACLE_TOLERANCE: f64 = 1e-12;
pub const ISO_ORACLE_MAX_SWEEPS: usize = 1_000_000;

/// Longest root-to-`node` path length, by enumerating every root path with DFS.
pub fn longest_path_oracle(dag: &Dag, node: usize) -> Result<usize> {
    if dag.len() > PATH_ORACLE_CAP {
        return Err(HdeError::Size {
            nodes: dag.len(),
            cap: PATH_ORACLE_CAP,
        });
    }
    fn walk(dag: &Dag, at: usize, depth: usize, target: usize, best: &mut Option<usize>) {
        if at == target {
            *best = Some(best.map_or(depth, |b: usize| b.max(depth)));
        }
        for &c in dag.children(at) {
            walk(dag, c, depth + 1, target, best);
        }
    }
    let mut best = None;
    walk(dag, dag.root(), 0, node, &mut best);
    Ok(best.expect("node reachable from root"))
}

/// Max distances via Bellman-Ford shortest paths on edge weights of -1.
pub fn bellman_ford_levels(dag: &Dag) -> Vec<usize> {
    let n = dag.len();
    let mut dist = vec![i64::MAX; n];
    dist[dag.root()] = 0;
    for _ in 1..n.max(2) {
        let mut changed = false;
        for &(p, c) in dag.edges() {
            if dist[p] != i64::MAX && dist[p] - 1 < dist[c] {
                dist[c] = dist[p] - 1;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    dist.into_iter().map(|d| (-d) as usize).collect()
}

/// Projection onto `{y : y_p >= y_c for every edge}` by Dykstra's cyclic
/// projections over the edge half-spaces.
pub fn iso_oracle(dag: &Dag, z: &[f64]) -> Result<Vec<f64>> {
    if dag.len() > ISO_ORACLE_CAP {
        return Err(HdeError::Size {
            nodes: dag.len(),
            cap: ISO_ORACLE_CAP,
        });
    }
    let edges = dag.edges();
    let mut x = z.to_vec();
    let mut corr = vec![[0.0f64; 2]; edges.len()];
    let mut last_change = f64::INFINITY;
    for _ in 0..ISO_ORACLE_MAX_SWEEPS {
        let mut change = 0.0f64;
        for (e, &(p, c)) in edges.iter().enumerate() {
            let (yp, yc) = (x[p] + corr[e][0], x[c] + corr[e][1]);
            let (np, nc) = if yp < yc {
                let m = 0.5 * (yp + yc);
                (m, m)
            } else {
                (yp, yc)
            };
            corr[e] = [yp - np, yc - nc];
            change = change.max((np - x[p]).abs()).max((nc - x[c]).abs());
            x[p] = np;
            x[c] = nc;
        }
        last_change = change;
        if change < ISO_ORACLE_TOLERANCE {
            return Ok(x);
        }
    }
    Err(HdeError::Convergence {
        sweeps: ISO_ORACLE_MAX_SWEEPS,
        last_change,
    })
}

fn ancestor_closure(dag: &Dag, node: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut frontier = vec![node];
    let mut seen = vec![false; dag.len()];
    while let Some(u) = frontier.pop() {
        for &p in dag.parents(u) {
            if !seen[p] {
                seen[p] = true;
                out.push(p);
                frontier.push(p);
            }
        }
    }
    out
}

/// A set is valid iff it contains the full ancestral closure of each member.
pub fn discrete_validity_oracle(dag: &Dag, member: &[bool]) -> bool {
    (0..dag.len())
        .filter(|&i| member[i])
        .all(|i| ancestor_closure(dag, i).into_iter().all(|a| member[a]))
}

/// A row is valid iff no node outscores any of its ancestors.
pub fn continuous_validity_oracle(dag: &Dag, row: &[f64]) -> bool {
    (0..dag.len()).all(|i| {
        ancestor_closure(dag, i)
            .into_iter()
            .all(|a| row[i] <= row[a])
    })
}

/// Random rooted DAG on `n` nodes named `n0..`: node `k > 0` gets one parent
/// among earlier nodes plus each other earlier node with probability
/// `extra`. Edges are inserted in shuffled order so node indices are not a
/// topological order.
pub fn random_dag<R: Rng>(rng: &mut R, n: usize, extra: f64) -> Dag {
    let mut edges = Vec::new();
    for k in 1..n {
        let first = rng.gen_range(0..k);
        edges.push((first, k));
        for p in 0..k {
            if p != first && rng.gen_bool(extra) {
                edges.push((p, k));
            }
        }
    }
    finish(rng, n, edges)
}

/// Random sparse DAG: node `k > 0` draws 1 to `max_parents` distinct earlier parents.
pub fn random_sparse_dag<R: Rng>(rng: &mut R, n: usize, max_parents: usize) -> Dag {
    let mut edges = Vec::with_capacity(n * max_parents);
    for k in 1..n {
        let want = rng.gen_range(1..=max_parents.min(k));
        let mut chosen: Vec<usize> = Vec::with_capacity(want);
        while chosen.len() < want {
            // Bias towards recent nodes so the graph grows deep.
            let span = k.min(64);
            let p = if rng.gen_bool(0.5) {
                k - 1 - rng.gen_range(0..span)
            } else {
                rng.gen_range(0..k)
            };
            if !chosen.contains(&p) {
                chosen.push(p);
            }
        }
        edges.extend(chosen.into_iter().map(|p| (p, k)));
    }
    finish(rng, n, edges)
}

/// Layered DAG with `sizes[l]` nodes at layer `l`; each node below layer 0
/// has parents only in the layer directly above, so its level equals its layer.
pub fn random_layered_dag<R: Rng>(rng: &mut R, sizes: &[usize], extra: f64) -> Dag {
    assert_eq!(sizes.first(), Some(&1), "layer 0 must hold only the root");
    let mut start = vec![0];
    for s in sizes {
        start.push(start.last().unwrap() + s);
    }
    let n = *start.last().unwrap();
    let mut edges = Vec::new();
    for l in 1..sizes.len() {
        for k in start[l]..start[l + 1] {
            let first = rng.gen_range(start[l - 1]..start[l]);
            edges.push((first, k));
            for p in start[l - 1]..start[l] {
                if p != first && rng.gen_bool(extra) {
                    edges.push((p, k));
                }
            }
        }
    }
    finish(rng, n, edges)
}

fn finish<R: Rng>(rng: &mut R, n: usize, mut edges: Vec<(usize, usize)>) -> Dag {
    edges.shuffle(rng);
    let mut b = DagBuilder::new();
    if edges.is_empty() {
        for k in 0..n {
            b.add_node(&format!("n{k}")).unwrap();
        }
    }
    for (p, c) in edges {
        b.add_edge(&format!("n{p}"), &format!("n{c}")).unwrap();
    }
    b.build().expect("generated graph is a rooted DAG")
}

/// Uniform random row in `[0, 1]^n`.
pub fn random_row<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen::<f64>()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dag::build_dag;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn path_oracle_fixtures() {
        let d = build_dag(&[("r", "a"), ("a", "c"), ("r", "c")], false).unwrap();
        assert_eq!(longest_path_oracle(&d, d.require("c").unwrap()).unwrap(), 2);
        assert_eq!(longest_path_oracle(&d, d.root()).unwrap(), 0);
        let chain = build_dag(
            &[("0", "1"), ("1", "2"), ("2", "3"), ("3", "4"), ("4", "5")],
            false,
        )
        .unwrap();
        assert_eq!(longest_path_oracle(&chain, chain.require("5").unwrap()).unwrap(), 5);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let big = random_dag(&mut rng, 13, 0.1);
        assert!(matches!(longest_path_oracle(&big, 0), Err(HdeError::Size { .. })));
    }

    #[test]
    fn iso_oracle_fixtures() {
        let e = build_dag(&[("p", "c")], false).unwrap();
        let y = iso_oracle(&e, &[0.2, 0.8]).unwrap();
        assert!((y[0] - 0.5).abs() < 1e-9 && (y[1] - 0.5).abs() < 1e-9);
        assert_eq!(iso_oracle(&e, &[0.8, 0.2]).unwrap(), [0.8, 0.2]);
        let chain = build_dag(&[("r", "a"), ("a", "b")], false).unwrap();
        let y = iso_oracle(&chain, &[0.2, 0.9, 0.4]).unwrap();
        for (got, want) in y.iter().zip([0.55, 0.55, 0.4]) {
            assert!((got - want).abs() < 1e-9, "{y:?}");
        }
    }

    #[test]
    fn validity_oracles() {
        let d = build_dag(&[("r", "a"), ("r", "b"), ("a", "c"), ("b", "c")], false).unwrap();
        assert!(discrete_validity_oracle(&d, &[true, true, false, false]));
        assert!(!discrete_validity_oracle(&d, &[true, true, false, true]));
        assert!(continuous_validity_oracle(&d, &[0.9, 0.5, 0.7, 0.5]));
        assert!(!continuous_validity_oracle(&d, &[0.9, 0.5, 0.7, 0.6]));
    }

    #[test]
    fn generators_produce_requested_shapes() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let d = random_sparse_dag(&mut rng, 500, 3);
        assert_eq!(d.len(), 500);
        assert!(d.edges().len() <= 3 * 500);
        let l = random_layered_dag(&mut rng, &[1, 3, 5], 0.5);
        assert_eq!(l.len(), 9);
        assert_eq!(random_dag(&mut rng, 1, 0.5).len(), 1);
    }
}
