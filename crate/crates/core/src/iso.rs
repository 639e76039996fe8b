//! Least-squares isotonic projection onto the DAG order, and the ISO-TPR
//! correction built on it.
//!
//! The feasible set is `{y : y_p >= y_c for every edge (p, c)}`; the
//! projection of `z` is the unique feasible point closest to `z` in squared
//! distance.
//!
//! The default solver is exact and finite. It recursively splits a block of
//! nodes at its mean `m`: the ancestor-closed subset `U` maximizing
//! `sum_{i in U} (z_i - m)` (a maximum-weight closure, found with a min-cut)
//! holds exactly the nodes whose optimal value exceeds `m`. A block whose best
//! closure is empty is a level set of the solution and takes its mean.
//! Dykstra's cyclic projections are available as an iterative alternative.

use crate::dag::Dag;
use crate::error::{HdeError, Result};
use crate::htd::check_row;
use crate::levels::LevelMap;
use crate::tpr::{bottom_up, TprConfig};

pub const DEFAULT_TOLERANCE: f64 = 1e-10;
pub const DEFAULT_MAX_SWEEPS: usize = 100_000;
/// Edge tolerance used when checking ISO-TPR output.
pub const FEASIBILITY_EPS: f64 = 1e-9;

// Closure gains at or below this are treated as zero.
const GAIN_EPS: f64 = 1e-12;
const CAP_EPS: f64 = 1e-15;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum IsoSolver {
    /// Exact recursive partitioning via maximum-weight closures.
    #[default]
    Partition,
    /// Dykstra's alternating projections with per-edge correction terms.
    Dykstra,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IsoOptions {
    pub solver: IsoSolver,
    /// Dykstra stops once a full sweep moves no coordinate by more than this.
    pub tolerance: f64,
    pub max_sweeps: usize,
    /// Project the flat scores instead of the bottom-up result.
    pub on_flat: bool,
}

impl Default for IsoOptions {
    fn default() -> Self {
        IsoOptions {
            solver: IsoSolver::Partition,
            tolerance: DEFAULT_TOLERANCE,
            max_sweeps: DEFAULT_MAX_SWEEPS,
            on_flat: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IsoSolution {
    pub values: Vec<f64>,
    /// `sum_i (z_i - y_i)^2`.
    pub objective: f64,
    /// Min-cut solves (partition) or sweeps (Dykstra).
    pub iterations: usize,
    /// Largest `y_c - y_p` over edges, before clamping; 0 when exactly feasible.
    pub residual: f64,
}

pub fn isotonic_project(dag: &Dag, z: &[f64], options: &IsoOptions) -> Result<IsoSolution> {
    if z.len() != dag.len() {
        return Err(HdeError::alignment("projection input", dag.len(), z.len()));
    }
    let (values, iterations) = match options.solver {
        IsoSolver::Partition => partition(dag, z),
        IsoSolver::Dykstra => dykstra(dag, z, options.tolerance, options.max_sweeps)?,
    };
    let residual = dag
        .edges()
        .iter()
        .map(|&(p, c)| values[c] - values[p])
        .fold(0.0, f64::max);
    let objective = z.iter().zip(&values).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok(IsoSolution {
        values,
        objective,
        iterations,
        residual,
    })
}

/// Bottom-up TPR pass, then projection; values are clamped to `[0, 1]`.
pub fn iso_tpr_correct(
    dag: &Dag,
    levels: &LevelMap,
    flat: &[f64],
    config: &TprConfig,
    options: &IsoOptions,
) -> Result<Vec<f64>> {
    check_row(dag, levels, flat)?;
    config.validate(dag)?;
    let target = if options.on_flat {
        flat.to_vec()
    } else {
        bottom_up(dag, levels.levels(), flat, config)
    };
    let mut sol = isotonic_project(dag, &target, options)?;
    for v in &mut sol.values {
        *v = v.clamp(0.0, 1.0);
    }
    Ok(sol.values)
}

fn dykstra(dag: &Dag, z: &[f64], tol: f64, max_sweeps: usize) -> Result<(Vec<f64>, usize)> {
    let edges = dag.edges();
    if edges.is_empty() {
        return Ok((z.to_vec(), 0));
    }
    let mut x = z.to_vec();
    // Correction terms for (parent, child) of each edge half-space.
    let mut inc = vec![(0.0f64, 0.0f64); edges.len()];
    let mut moved = f64::INFINITY;
    for sweep in 1..=max_sweeps {
        moved = 0.0;
        for (&(p, c), q) in edges.iter().zip(inc.iter_mut()) {
            let yp = x[p] + q.0;
            let yc = x[c] + q.1;
            let (np, nc) = if yp >= yc {
                (yp, yc)
            } else {
                let m = (yp + yc) / 2.0;
                (m, m)
            };
            *q = (yp - np, yc - nc);
            moved = moved.max((np - x[p]).abs()).max((nc - x[c]).abs());
            x[p] = np;
            x[c] = nc;
        }
        if moved <= tol {
            return Ok((x, sweep));
        }
    }
    Err(HdeError::Convergence {
        sweeps: max_sweeps,
        last_change: moved,
    })
}

fn partition(dag: &Dag, z: &[f64]) -> (Vec<f64>, usize) {
    let n = dag.len();
    let mut out = vec![0.0; n];
    let mut local = vec![usize::MAX; n];
    let mut cuts = 0;
    let mut stack = vec![(0..n).collect::<Vec<usize>>()];
    while let Some(block) = stack.pop() {
        let mean = block.iter().map(|&i| z[i]).sum::<f64>() / block.len() as f64;
        if block.len() > 1 && block.iter().any(|&i| z[i] != mean) {
            cuts += 1;
            let upper = max_closure(dag, &block, z, mean, &mut local);
            let k = upper.iter().filter(|&&u| u).count();
            if k > 0 && k < block.len() {
                let (hi, lo): (Vec<usize>, Vec<usize>) =
                    (0..block.len()).partition(|&k| upper[k]);
                stack.push(hi.into_iter().map(|k| block[k]).collect());
                stack.push(lo.into_iter().map(|k| block[k]).collect());
                continue;
            }
        }
        for &i in &block {
            out[i] = mean;
        }
    }
    (out, cuts)
}

/// Maximum-weight ancestor-closed subset of `block` for weights `z_i - mean`,
/// as membership flags in block order. Empty when no closure has positive gain.
fn max_closure(dag: &Dag, block: &[usize], z: &[f64], mean: f64, local: &mut [usize]) -> Vec<bool> {
    let m = block.len();
    for (k, &i) in block.iter().enumerate() {
        local[i] = k;
    }
    let (s, t) = (m, m + 1);
    let mut net = FlowNet::new(m + 2);
    let mut gain_total = 0.0;
    for (k, &i) in block.iter().enumerate() {
        let w = z[i] - mean;
        if w > 0.0 {
            net.add(s, k, w);
            gain_total += w;
        } else if w < 0.0 {
            net.add(k, t, -w);
        }
        // Taking a child forces taking its parent.
        for &p in dag.parents(i) {
            if local[p] != usize::MAX {
                net.add(k, local[p], f64::INFINITY);
            }
        }
    }
    let flow = net.max_flow(s, t);
    let reach = net.reachable(s);
    for &i in block {
        local[i] = usize::MAX;
    }
    if gain_total - flow <= GAIN_EPS {
        return vec![false; m];
    }
    reach[..m].to_vec()
}

/// Dinic's max-flow on floating-point capacities.
struct FlowNet {
    head: Vec<Vec<usize>>,
    to: Vec<usize>,
    cap: Vec<f64>,
}

impl FlowNet {
    fn new(n: usize) -> Self {
        FlowNet {
            head: vec![Vec::new(); n],
            to: Vec::new(),
            cap: Vec::new(),
        }
    }

    fn add(&mut self, u: usize, v: usize, c: f64) {
        self.head[u].push(self.to.len());
        self.to.push(v);
        self.cap.push(c);
        self.head[v].push(self.to.len());
        self.to.push(u);
        self.cap.push(0.0);
    }

    fn bfs(&self, s: usize) -> Vec<usize> {
        let mut level = vec![usize::MAX; self.head.len()];
        level[s] = 0;
        let mut queue = std::collections::VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            for &e in &self.head[u] {
                let v = self.to[e];
                if self.cap[e] > CAP_EPS && level[v] == usize::MAX {
                    level[v] = level[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        level
    }

    fn reachable(&self, s: usize) -> Vec<bool> {
        self.bfs(s).into_iter().map(|l| l != usize::MAX).collect()
    }

    fn max_flow(&mut self, s: usize, t: usize) -> f64 {
        let mut total = 0.0;
        loop {
            let level = self.bfs(s);
            if level[t] == usize::MAX {
                return total;
            }
            let mut next = vec![0usize; self.head.len()];
            loop {
                let pushed = self.push(s, t, f64::INFINITY, &level, &mut next);
                if pushed <= CAP_EPS {
                    break;
                }
                total += pushed;
            }
        }
    }

    /// Iterative blocking-flow DFS: finds one augmenting path in the level graph.
    fn push(&mut self, s: usize, t: usize, limit: f64, level: &[usize], next: &mut [usize]) -> f64 {
        let mut path: Vec<usize> = Vec::new();
        let mut u = s;
        loop {
            if u == t {
                let f = path.iter().fold(limit, |acc, &e| acc.min(self.cap[e]));
                for &e in &path {
                    self.cap[e] -= f;
                    self.cap[e ^ 1] += f;
                }
                return f;
            }
            let mut advanced = false;
            while next[u] < self.head[u].len() {
                let e = self.head[u][next[u]];
                let v = self.to[e];
                if self.cap[e] > CAP_EPS && level[v] == level[u] + 1 {
                    path.push(e);
                    u = v;
                    advanced = true;
                    break;
                }
                next[u] += 1;
            }
            if !advanced {
                // Dead end: retreat and skip the edge that led here.
                match path.pop() {
                    Some(e) => {
                        u = self.to[e ^ 1];
                        next[u] += 1;
                    }
                    None => return 0.0,
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dag::{build_dag, DagBuilder};
    use crate::htd::htd_correct;
    use crate::levels::compute_levels;
    use crate::oracles::{iso_oracle, random_dag, random_row};
    use crate::scores::check_valid_continuous;
    use crate::thresholds::fit_global;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn assert_close(got: &[f64], want: &[f64], tol: f64) {
        assert_eq!(got.len(), want.len());
        for (g, w) in got.iter().zip(want) {
            assert!((g - w).abs() <= tol, "{got:?} vs {want:?}");
        }
    }

    fn both(dag: &Dag, z: &[f64]) -> [IsoSolution; 2] {
        [IsoSolver::Partition, IsoSolver::Dykstra].map(|solver| {
            isotonic_project(dag, z, &IsoOptions { solver, ..Default::default() }).unwrap()
        })
    }

    #[test]
    fn single_edge() {
        let d = build_dag(&[("p", "c")], false).unwrap();
        for sol in both(&d, &[0.2, 0.8]) {
            assert_close(&sol.values, &[0.5, 0.5], 1e-9);
            assert!((sol.objective - 0.18).abs() < 1e-9);
        }
    }

    #[test]
    fn chain() {
        let d = build_dag(&[("r", "a"), ("a", "b")], false).unwrap();
        for sol in both(&d, &[0.2, 0.9, 0.4]) {
            assert_close(&sol.values, &[0.55, 0.55, 0.4], 1e-9);
        }
    }

    #[test]
    fn feasible_input_is_fixed_point() {
        let d = build_dag(&[("r", "a"), ("r", "b"), ("a", "c"), ("b", "c")], false).unwrap();
        let z = [0.9, 0.5, 0.7, 0.5];
        for sol in both(&d, &z) {
            assert_eq!(sol.values, z);
            assert_eq!(sol.objective, 0.0);
            assert_eq!(sol.residual, 0.0);
        }
    }

    #[test]
    fn diamond_iso_tpr() {
        let d = build_dag(&[("r", "a"), ("r", "b"), ("a", "c"), ("b", "c")], false).unwrap();
        let lm = compute_levels(&d);
        let cfg = TprConfig::thresholds(fit_global(0.5, 4).unwrap());
        let out = iso_tpr_correct(&d, &lm, &[0.9, 0.5, 0.7, 0.6], &cfg, &IsoOptions::default()).unwrap();
        assert_close(&out, &[0.9, 0.575, 0.65, 0.575], 1e-12);

        let on_flat = IsoOptions { on_flat: true, ..Default::default() };
        let out = iso_tpr_correct(&d, &lm, &[0.9, 0.5, 0.7, 0.6], &cfg, &on_flat).unwrap();
        assert_close(&out, &[0.9, 0.55, 0.7, 0.55], 1e-12);
    }

    #[test]
    fn single_node() {
        let mut b = DagBuilder::new();
        b.add_node("only").unwrap();
        let d = b.build().unwrap();
        let lm = compute_levels(&d);
        let cfg = TprConfig::adaptive();
        for solver in [IsoSolver::Partition, IsoSolver::Dykstra] {
            let opts = IsoOptions { solver, ..Default::default() };
            assert_eq!(iso_tpr_correct(&d, &lm, &[0.3], &cfg, &opts).unwrap(), [0.3]);
        }
    }

    #[test]
    fn thresholds_one_on_consistent_input_is_identity() {
        let d = build_dag(&[("r", "a"), ("a", "b"), ("r", "b")], false).unwrap();
        let lm = compute_levels(&d);
        let cfg = TprConfig::thresholds(fit_global(1.0, 3).unwrap());
        let flat = [0.8, 0.6, 0.1];
        assert_eq!(iso_tpr_correct(&d, &lm, &flat, &cfg, &IsoOptions::default()).unwrap(), flat);
    }

    #[test]
    fn dykstra_reports_non_convergence() {
        let d = build_dag(&[("r", "a"), ("a", "b"), ("b", "c")], false).unwrap();
        let opts = IsoOptions {
            solver: IsoSolver::Dykstra,
            max_sweeps: 1,
            ..Default::default()
        };
        assert!(matches!(
            isotonic_project(&d, &[0.0, 0.3, 0.6, 1.0], &opts),
            Err(HdeError::Convergence { sweeps: 1, .. })
        ));
    }

    #[test]
    fn partition_matches_oracle_and_beats_htd() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..300 {
            let n = rng.gen_range(1..=15);
            let extra = rng.gen_range(0.0..0.5);
            let d = random_dag(&mut rng, n, extra);
            let z = random_row(&mut rng, n);
            let sol = isotonic_project(&d, &z, &IsoOptions::default()).unwrap();
            let oracle = iso_oracle(&d, &z).unwrap();
            assert_close(&sol.values, &oracle, 1e-6);
            assert!(check_valid_continuous(&d, &sol.values, FEASIBILITY_EPS).is_valid());

            let htd = htd_correct(&d, &compute_levels(&d), &z).unwrap();
            let htd_obj: f64 = z.iter().zip(&htd).map(|(a, b)| (a - b) * (a - b)).sum();
            assert!(sol.objective <= htd_obj + 1e-12);

            let again = isotonic_project(&d, &sol.values, &IsoOptions::default()).unwrap();
            assert_close(&again.values, &sol.values, 1e-9);
        }
    }

    #[test]
    fn partition_handles_large_sparse_graph() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let d = crate::oracles::random_sparse_dag(&mut rng, 3000, 3);
        let z = random_row(&mut rng, d.len());
        let sol = isotonic_project(&d, &z, &IsoOptions::default()).unwrap();
        assert!(sol.residual <= FEASIBILITY_EPS);
        let htd = htd_correct(&d, &compute_levels(&d), &z).unwrap();
        let htd_obj: f64 = z.iter().zip(&htd).map(|(a, b)| (a - b) * (a - b)).sum();
        assert!(sol.objective <= htd_obj);
    }
}
