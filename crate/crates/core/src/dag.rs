//! Rooted DAG taxonomy over string class identifiers.
//!
//! Nodes are addressed by dense indices in first-appearance order. When the
//! input has several in-degree-0 nodes, a synthetic root named
//! [`SYNTHETIC_ROOT`] is placed at index 0 with one edge to each of them.

use std::collections::hash_map::DefaultHasher;
use std::collections::{HashMap, HashSet, VecDeque};
use std::fmt::Write as _;
use std::hash::{Hash, Hasher};
use std::path::Path;
use std::sync::OnceLock;

use crate::error::{HdeError, Result};

pub const SYNTHETIC_ROOT: &str = "__ROOT__";

const UNREACHED: usize = usize::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Children,
    Parents,
    Ancestors,
    Descendants,
}

/// Incremental construction of a [`Dag`]; validation happens in [`DagBuilder::build`].
#[derive(Debug, Default)]
pub struct DagBuilder {
    names: Vec<String>,
    index: HashMap<String, usize>,
    edges: Vec<(usize, usize)>,
    seen: HashSet<(usize, usize)>,
    dedup: bool,
}

impl DagBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Silently drop repeated edges instead of failing with `DuplicateEdge`.
    pub fn dedup(mut self, yes: bool) -> Self {
        self.dedup = yes;
        self
    }

    pub fn add_node(&mut self, name: &str) -> Result<usize> {
        if name.is_empty() {
            return Err(HdeError::EmptyIdentifier);
        }
        if let Some(&i) = self.index.get(name) {
            return Ok(i);
        }
        let i = self.names.len();
        self.names.push(name.to_string());
        self.index.insert(name.to_string(), i);
        Ok(i)
    }

    pub fn add_edge(&mut self, parent: &str, child: &str) -> Result<()> {
        if parent.is_empty() || child.is_empty() {
            return Err(HdeError::EmptyIdentifier);
        }
        if parent == child {
            return Err(HdeError::SelfLoop(parent.to_string()));
        }
        let p = self.add_node(parent)?;
        let c = self.add_node(child)?;
        if !self.seen.insert((p, c)) {
            if self.dedup {
                return Ok(());
            }
            return Err(HdeError::DuplicateEdge {
                parent: parent.to_string(),
                child: child.to_string(),
            });
        }
        self.edges.push((p, c));
        Ok(())
    }

    pub fn build(self) -> Result<Dag> {
        let DagBuilder {
            mut names,
            mut edges,
            ..
        } = self;
        if names.is_empty() {
            return Err(HdeError::EmptyGraph);
        }

        let n = names.len();
        let mut children = adjacency(n, &edges, false);
        let mut parents = adjacency(n, &edges, true);

        let mut topo = kahn_order(&children, &parents);
        if topo.len() < n {
            let cycle = find_cycle(&children, &topo)
                .into_iter()
                .map(|i| names[i].clone())
                .collect();
            return Err(HdeError::Cycle { cycle });
        }

        let roots: Vec<usize> = (0..n).filter(|&i| parents[i].is_empty()).collect();
        let synthetic_root = roots.len() > 1;
        let root = if synthetic_root {
            if names.iter().any(|s| s == SYNTHETIC_ROOT) {
                return Err(HdeError::RootNameCollision(SYNTHETIC_ROOT.to_string()));
            }
            names.insert(0, SYNTHETIC_ROOT.to_string());
            let mut shifted: Vec<(usize, usize)> = roots.iter().map(|&r| (0, r + 1)).collect();
            shifted.extend(edges.iter().map(|&(p, c)| (p + 1, c + 1)));
            edges = shifted;
            children = adjacency(n + 1, &edges, false);
            parents = adjacency(n + 1, &edges, true);
            topo = std::iter::once(0).chain(topo.iter().map(|&i| i + 1)).collect();
            0
        } else {
            roots[0]
        };

        let index = names
            .iter()
            .enumerate()
            .map(|(i, s)| (s.clone(), i))
            .collect();
        let mut topo_pos = vec![0; names.len()];
        for (pos, &i) in topo.iter().enumerate() {
            topo_pos[i] = pos;
        }
        let fingerprint = fingerprint(&names, &edges);

        Ok(Dag {
            names,
            index,
            edges,
            children,
            parents,
            root,
            synthetic_root,
            topo,
            topo_pos,
            fingerprint,
            descendant_table: OnceLock::new(),
        })
    }
}

fn adjacency(n: usize, edges: &[(usize, usize)], reverse: bool) -> Vec<Vec<usize>> {
    let mut adj = vec![Vec::new(); n];
    for &(p, c) in edges {
        if reverse {
            adj[c].push(p);
        } else {
            adj[p].push(c);
        }
    }
    for list in &mut adj {
        list.sort_unstable();
    }
    adj
}

/// Kahn's algorithm, seeded and drained in index order so the result is deterministic.
fn kahn_order(children: &[Vec<usize>], parents: &[Vec<usize>]) -> Vec<usize> {
    let mut indeg: Vec<usize> = parents.iter().map(Vec::len).collect();
    let mut queue: VecDeque<usize> = (0..children.len()).filter(|&i| indeg[i] == 0).collect();
    let mut order = Vec::with_capacity(children.len());
    while let Some(u) = queue.pop_front() {
        order.push(u);
        for &c in &children[u] {
            indeg[c] -= 1;
            if indeg[c] == 0 {
                queue.push_back(c);
            }
        }
    }
    order
}

/// Every node left out of a partial topological order lies on or downstream of a
/// cycle, and every such node keeps a parent outside the order; walking those
/// parents backwards must revisit a node.
fn find_cycle(children: &[Vec<usize>], ordered: &[usize]) -> Vec<usize> {
    let n = children.len();
    let mut done = vec![false; n];
    for &i in ordered {
        done[i] = true;
    }
    let mut remaining_parent = vec![UNREACHED; n];
    for p in 0..n {
        if done[p] {
            continue;
        }
        for &c in &children[p] {
            if !done[c] && remaining_parent[c] == UNREACHED {
                remaining_parent[c] = p;
            }
        }
    }
    let start = (0..n).find(|&i| !done[i]).expect("unordered node");
    let mut pos_in_walk = vec![UNREACHED; n];
    let mut walk = Vec::new();
    let mut cur = start;
    while pos_in_walk[cur] == UNREACHED {
        pos_in_walk[cur] = walk.len();
        walk.push(cur);
        cur = remaining_parent[cur];
    }
    let mut cycle = walk[pos_in_walk[cur]..].to_vec();
    // The walk follows child -> parent; report it in edge direction, closed.
    cycle.reverse();
    cycle.push(cycle[0]);
    cycle
}

fn fingerprint(names: &[String], edges: &[(usize, usize)]) -> u64 {
    let mut h = DefaultHasher::new();
    names.hash(&mut h);
    edges.hash(&mut h);
    h.finish()
}

/// Immutable, validated taxonomy.
#[derive(Debug, Clone)]
pub struct Dag {
    names: Vec<String>,
    index: HashMap<String, usize>,
    edges: Vec<(usize, usize)>,
    children: Vec<Vec<usize>>,
    parents: Vec<Vec<usize>>,
    root: usize,
    synthetic_root: bool,
    topo: Vec<usize>,
    topo_pos: Vec<usize>,
    fingerprint: u64,
    descendant_table: OnceLock<Vec<Vec<(usize, usize)>>>,
}

impl PartialEq for Dag {
    fn eq(&self, other: &Self) -> bool {
        self.names == other.names
            && self.edges == other.edges
            && self.root == other.root
            && self.synthetic_root == other.synthetic_root
    }
}

impl Eq for Dag {}

/// Builds a validated DAG from `(parent, child)` pairs.
pub fn build_dag<S: AsRef<str>>(edges: &[(S, S)], dedup: bool) -> Result<Dag> {
    if edges.is_empty() {
        return Err(HdeError::EmptyGraph);
    }
    let mut builder = DagBuilder::new().dedup(dedup);
    for (p, c) in edges {
        builder.add_edge(p.as_ref(), c.as_ref())?;
    }
    builder.build()
}

impl Dag {
    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn has_synthetic_root(&self) -> bool {
        self.synthetic_root
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, node: usize) -> &str {
        &self.names[node]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn require(&self, name: &str) -> Result<usize> {
        self.index_of(name)
            .ok_or_else(|| HdeError::UnknownNode(name.to_string()))
    }

    /// Edges in insertion order (synthetic-root edges first).
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn children(&self, node: usize) -> &[usize] {
        &self.children[node]
    }

    pub fn parents(&self, node: usize) -> &[usize] {
        &self.parents[node]
    }

    pub fn topological_order(&self) -> &[usize] {
        &self.topo
    }

    pub fn fingerprint(&self) -> u64 {
        self.fingerprint
    }

    pub fn ancestors(&self, node: usize) -> Vec<usize> {
        self.reach(node, &self.parents)
    }

    pub fn descendants(&self, node: usize) -> Vec<usize> {
        self.reach(node, &self.children)
    }

    fn reach(&self, node: usize, adj: &[Vec<usize>]) -> Vec<usize> {
        let mut seen = vec![false; self.len()];
        let mut stack = vec![node];
        while let Some(u) = stack.pop() {
            for &v in &adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
        (0..self.len()).filter(|&i| seen[i]).collect()
    }

    /// Name-level relation query; results are in node order and exclude `node`.
    pub fn relatives(&self, node: &str, kind: Relation) -> Result<Vec<&str>> {
        let i = self.require(node)?;
        let ids = match kind {
            Relation::Children => self.children[i].clone(),
            Relation::Parents => self.parents[i].clone(),
            Relation::Ancestors => self.ancestors(i),
            Relation::Descendants => self.descendants(i),
        };
        Ok(ids.into_iter().map(|j| self.name(j)).collect())
    }

    /// Longest path length (in edges) from `source` to every node, `None` where unreachable.
    pub fn longest_distances_from(&self, source: usize) -> Vec<Option<usize>> {
        let mut dist = vec![UNREACHED; self.len()];
        self.longest_into(source, &mut dist);
        dist.into_iter()
            .map(|d| (d != UNREACHED).then_some(d))
            .collect()
    }

    fn longest_into(&self, source: usize, dist: &mut [usize]) {
        dist[source] = 0;
        for &u in &self.topo[self.topo_pos[source]..] {
            let du = dist[u];
            if du == UNREACHED {
                continue;
            }
            for &c in &self.children[u] {
                if dist[c] == UNREACHED || dist[c] < du + 1 {
                    dist[c] = du + 1;
                }
            }
        }
    }

    /// Descendants of `node` paired with their longest distance from it, in node order.
    ///
    /// The table for the whole graph is built on first use and cached.
    pub fn descendant_distances(&self, node: usize) -> &[(usize, usize)] {
        let table = self.descendant_table.get_or_init(|| {
            let mut dist = vec![UNREACHED; self.len()];
            (0..self.len())
                .map(|i| {
                    self.longest_into(i, &mut dist);
                    let row = (0..self.len())
                        .filter(|&j| j != i && dist[j] != UNREACHED)
                        .map(|j| (j, dist[j]))
                        .collect();
                    dist.iter_mut().for_each(|d| *d = UNREACHED);
                    row
                })
                .collect()
        });
        &table[node]
    }

    /// Edge-list TSV. Synthetic-root edges are omitted so that parsing the text
    /// back reproduces the same graph.
    pub fn to_edge_list_tsv(&self) -> String {
        let mut out = String::new();
        if self.synthetic_root {
            let _ = writeln!(out, "# synthetic root: {SYNTHETIC_ROOT}");
        }
        for &(p, c) in &self.edges {
            if self.synthetic_root && p == self.root {
                continue;
            }
            let _ = writeln!(out, "{}\t{}", self.names[p], self.names[c]);
        }
        out
    }
}

/// Parses an edge-list TSV: `parent<TAB>child` per line, `#` comments and blank lines skipped.
pub fn parse_edge_list(text: &str, origin: &str, dedup: bool) -> Result<Dag> {
    let mut builder = DagBuilder::new().dedup(dedup);
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
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
        if fields[0].is_empty() || fields[1].is_empty() {
            return Err(HdeError::Parse {
                location,
                message: "empty class identifier".into(),
            });
        }
        builder.add_edge(fields[0], fields[1])?;
    }
    if builder.names.is_empty() {
        return Err(HdeError::EmptyGraph);
    }
    builder.build()
}

pub fn read_edge_list(path: impl AsRef<Path>, dedup: bool) -> Result<Dag> {
    let path = path.as_ref();
    let text = crate::read_text(path)?;
    parse_edge_list(&text, &path.display().to_string(), dedup)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diamond() -> Dag {
        build_dag(&[("r", "a"), ("r", "b"), ("a", "c"), ("b", "c")], false).unwrap()
    }

    #[test]
    fn single_root_diamond() {
        let d = diamond();
        assert_eq!(d.len(), 4);
        assert_eq!(d.name(d.root()), "r");
        assert!(!d.has_synthetic_root());
        assert_eq!(d.names(), ["r", "a", "b", "c"]);
    }

    #[test]
    fn multiple_roots_get_synthetic_root() {
        let d = build_dag(&[("a", "c"), ("b", "c")], false).unwrap();
        assert!(d.has_synthetic_root());
        assert_eq!(d.name(d.root()), SYNTHETIC_ROOT);
        let edges: Vec<(&str, &str)> = d
            .edges()
            .iter()
            .map(|&(p, c)| (d.name(p), d.name(c)))
            .collect();
        assert_eq!(
            edges,
            [
                ("__ROOT__", "a"),
                ("__ROOT__", "b"),
                ("a", "c"),
                ("b", "c")
            ]
        );
    }

    #[test]
    fn synthetic_root_name_collision() {
        let err = build_dag(&[("a", "__ROOT__"), ("b", "c")], false).unwrap_err();
        assert_eq!(err, HdeError::RootNameCollision("__ROOT__".into()));
        // A user node called __ROOT__ is fine when it is the unique root.
        let d = build_dag(&[("__ROOT__", "a")], false).unwrap();
        assert!(!d.has_synthetic_root());
    }

    #[test]
    fn two_cycle_rejected() {
        let err = build_dag(&[("a", "b"), ("b", "a")], false).unwrap_err();
        match err {
            HdeError::Cycle { cycle } => {
                assert_eq!(cycle.len(), 3);
                assert_eq!(cycle.first(), cycle.last());
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn cycle_below_root_reports_only_cycle_nodes() {
        let err = build_dag(&[("r", "a"), ("a", "b"), ("b", "c"), ("c", "a"), ("c", "d")], false)
            .unwrap_err();
        let HdeError::Cycle { cycle } = err else {
            panic!("expected cycle");
        };
        let mut members: Vec<&str> = cycle[..cycle.len() - 1].iter().map(String::as_str).collect();
        members.sort();
        assert_eq!(members, ["a", "b", "c"]);
        for w in cycle.windows(2) {
            let ok = matches!(
                (w[0].as_str(), w[1].as_str()),
                ("a", "b") | ("b", "c") | ("c", "a")
            );
            assert!(ok, "{cycle:?} is not a walk along edges");
        }
    }

    #[test]
    fn self_loop_and_duplicates() {
        assert_eq!(
            build_dag(&[("a", "a")], false).unwrap_err(),
            HdeError::SelfLoop("a".into())
        );
        assert!(matches!(
            build_dag(&[("r", "a"), ("r", "a")], false),
            Err(HdeError::DuplicateEdge { .. })
        ));
        let d = build_dag(&[("r", "a"), ("r", "a")], true).unwrap();
        assert_eq!(d.edges().len(), 1);
    }

    #[test]
    fn empty_graph() {
        let none: [(&str, &str); 0] = [];
        assert_eq!(build_dag(&none, false).unwrap_err(), HdeError::EmptyGraph);
        assert_eq!(DagBuilder::new().build().unwrap_err(), HdeError::EmptyGraph);
        assert_eq!(
            parse_edge_list("# nothing\n\n", "x", false).unwrap_err(),
            HdeError::EmptyGraph
        );
    }

    #[test]
    fn relation_queries() {
        let d = diamond();
        assert_eq!(d.relatives("c", Relation::Parents).unwrap(), ["a", "b"]);
        assert_eq!(d.relatives("c", Relation::Ancestors).unwrap(), ["r", "a", "b"]);
        assert_eq!(d.relatives("r", Relation::Descendants).unwrap(), ["a", "b", "c"]);
        assert_eq!(d.relatives("r", Relation::Children).unwrap(), ["a", "b"]);
        assert!(d.relatives("r", Relation::Parents).unwrap().is_empty());
        assert_eq!(
            d.relatives("zz", Relation::Children).unwrap_err(),
            HdeError::UnknownNode("zz".into())
        );
    }

    #[test]
    fn descendant_distances_use_longest_paths() {
        let d = build_dag(&[("r", "a"), ("a", "c"), ("r", "c")], false).unwrap();
        let r = d.require("r").unwrap();
        let named: Vec<(&str, usize)> = d
            .descendant_distances(r)
            .iter()
            .map(|&(j, k)| (d.name(j), k))
            .collect();
        assert_eq!(named, [("a", 1), ("c", 2)]);
        assert!(d.descendant_distances(d.require("c").unwrap()).is_empty());
    }

    #[test]
    fn parse_skips_comments_and_reports_lines() {
        let d = parse_edge_list("# header\nr\ta\n\nr\tb\r\n", "t.tsv", false).unwrap();
        assert_eq!(d.names(), ["r", "a", "b"]);
        let err = parse_edge_list("r\ta\nr a b\n", "t.tsv", false).unwrap_err();
        assert!(matches!(err, HdeError::Parse { ref location, .. } if location == "t.tsv:2"));
    }

    #[test]
    fn edge_list_round_trip_with_synthetic_root() {
        let d = build_dag(&[("x", "y"), ("a", "y"), ("y", "z")], false).unwrap();
        let back = parse_edge_list(&d.to_edge_list_tsv(), "rt", false).unwrap();
        assert_eq!(back, d);
        assert_eq!(back.fingerprint(), d.fingerprint());
    }
}
