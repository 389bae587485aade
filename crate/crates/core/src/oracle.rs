//! Centralized ground truth and comparison baselines.
//!
//! [`oracle_dlmt`] grows, for every candidate root, the best branch of each
//! source with a best-first search outward from the root, then ranks the
//! resulting trees with the same tie-break chain the nodes use.
//! [`brute_force_dlmt`] reaches the same answer by enumerating every simple
//! path and every spanning tree, and only exists to cross-check the former on
//! small graphs.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::Serialize;
use thiserror::Error;

use crate::model::{branch_energy, compare_branches, BranchEnergy, Eid, Energy, NodeId, SelectionKey};
use crate::sim::Topology;

/// Largest graph [`brute_force_dlmt`] accepts.
pub const BRUTE_FORCE_LIMIT: usize = 8;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("graph has no sources")]
    Empty,
    #[error("unknown node {0}")]
    UnknownNode(NodeId),
    #[error("self loop at {0}")]
    SelfLoop(NodeId),
    #[error("sources unreachable from {root}: {unreachable:?}")]
    Unreachable {
        root: NodeId,
        unreachable: Vec<NodeId>,
    },
    #[error("{count} sources exceed the brute-force limit of {limit}")]
    TooManySources { count: usize, limit: usize },
    #[error("parent map is not a tree toward {root}: {reason}")]
    InvalidTree { root: NodeId, reason: String },
}

/// Undirected graph over the event sources.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceGraph {
    energies: BTreeMap<NodeId, Energy>,
    adjacency: BTreeMap<NodeId, BTreeSet<NodeId>>,
}

impl SourceGraph {
    pub fn new(
        nodes: impl IntoIterator<Item = (NodeId, Energy)>,
        edges: impl IntoIterator<Item = (NodeId, NodeId)>,
    ) -> Result<Self, OracleError> {
        let energies: BTreeMap<_, _> = nodes.into_iter().collect();
        let mut adjacency: BTreeMap<NodeId, BTreeSet<NodeId>> =
            energies.keys().map(|&id| (id, BTreeSet::new())).collect();
        for (a, b) in edges {
            if a == b {
                return Err(OracleError::SelfLoop(a));
            }
            for n in [a, b] {
                if !energies.contains_key(&n) {
                    return Err(OracleError::UnknownNode(n));
                }
            }
            adjacency.get_mut(&a).unwrap().insert(b);
            adjacency.get_mut(&b).unwrap().insert(a);
        }
        Ok(SourceGraph {
            energies,
            adjacency,
        })
    }

    /// Alive sources of `topology` (those not in `exclude`) and their links.
    pub fn from_topology(topology: &Topology, exclude: &BTreeSet<NodeId>) -> Self {
        let keep = |id: &NodeId| !exclude.contains(id);
        let nodes: Vec<_> = topology
            .nodes
            .iter()
            .filter(|n| n.is_source && !n.initial_energy.is_dead() && keep(&n.id))
            .map(|n| (n.id, n.initial_energy))
            .collect();
        let ids: BTreeSet<_> = nodes.iter().map(|(id, _)| *id).collect();
        let edges: Vec<_> = topology
            .links()
            .into_iter()
            .filter(|(a, b)| ids.contains(a) && ids.contains(b))
            .collect();
        SourceGraph::new(nodes, edges).expect("topology links reference known nodes")
    }

    pub fn len(&self) -> usize {
        self.energies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.energies.is_empty()
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.energies.keys().copied()
    }

    pub fn energy(&self, id: NodeId) -> Option<Energy> {
        self.energies.get(&id).copied()
    }

    pub fn eid(&self, id: NodeId) -> Eid {
        Eid::new(id, self.energies[&id])
    }

    pub fn neighbors(&self, id: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        self.adjacency.get(&id).into_iter().flatten().copied()
    }

    pub fn has_edge(&self, a: NodeId, b: NodeId) -> bool {
        self.adjacency.get(&a).is_some_and(|s| s.contains(&b))
    }

    /// Each undirected edge once, as `(low, high)`.
    pub fn edges(&self) -> Vec<(NodeId, NodeId)> {
        self.adjacency
            .iter()
            .flat_map(|(&a, ns)| ns.iter().filter(move |&&b| a < b).map(move |&b| (a, b)))
            .collect()
    }

    fn hops_from(&self, root: NodeId) -> BTreeMap<NodeId, usize> {
        let mut hops = BTreeMap::from([(root, 0)]);
        let mut queue = VecDeque::from([root]);
        while let Some(v) = queue.pop_front() {
            let h = hops[&v];
            for u in self.neighbors(v) {
                hops.entry(u).or_insert_with(|| {
                    queue.push_back(u);
                    h + 1
                });
            }
        }
        hops
    }

    fn check_reachable(&self, root: NodeId) -> Result<(), OracleError> {
        if !self.energies.contains_key(&root) {
            return Err(OracleError::UnknownNode(root));
        }
        let hops = self.hops_from(root);
        let unreachable: Vec<_> = self.nodes().filter(|n| !hops.contains_key(n)).collect();
        if unreachable.is_empty() {
            Ok(())
        } else {
            Err(OracleError::Unreachable { root, unreachable })
        }
    }

    pub fn is_connected(&self) -> bool {
        match self.nodes().next() {
            None => true,
            Some(first) => self.check_reachable(first).is_ok(),
        }
    }
}

/// Which link of the tie-break chain separated the winner from the runner-up.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TieBreak {
    /// Only one candidate root existed.
    Unopposed,
    Coverage,
    TreeEnergy,
    Depth,
    RootEnergy,
    RootId,
}

impl TieBreak {
    fn between(best: &SelectionKey, runner_up: &SelectionKey) -> TieBreak {
        if best.coverage != runner_up.coverage {
            TieBreak::Coverage
        } else if best.energy != runner_up.energy {
            TieBreak::TreeEnergy
        } else if best.depth != runner_up.depth {
            TieBreak::Depth
        } else if best.root_energy != runner_up.root_energy {
            TieBreak::RootEnergy
        } else {
            TieBreak::RootId
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OracleResult {
    pub root: NodeId,
    pub tree_energy: BranchEnergy,
    pub parent_map: BTreeMap<NodeId, NodeId>,
    pub depth: usize,
    pub decided_by: TieBreak,
}

/// Best branch of every source toward one root, realized as one tree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WidestBranches {
    pub root: NodeId,
    /// Initiator-first paths ending at `root`.
    pub branches: BTreeMap<NodeId, Vec<Eid>>,
}

impl WidestBranches {
    pub fn energy(&self, source: NodeId) -> Option<BranchEnergy> {
        self.branches
            .get(&source)
            .map(|p| branch_energy(p).expect("search yields simple paths"))
    }

    pub fn parent_map(&self) -> BTreeMap<NodeId, NodeId> {
        self.branches
            .iter()
            .filter(|(_, p)| p.len() > 1)
            .map(|(&s, p)| (s, p[1].node))
            .collect()
    }

    fn key(&self, graph: &SourceGraph) -> SelectionKey {
        key_of(graph, self.root, self.branches.values().map(Vec::as_slice))
    }
}

fn key_of<'a>(
    graph: &SourceGraph,
    root: NodeId,
    branches: impl Iterator<Item = &'a [Eid]>,
) -> SelectionKey {
    let mut energy = BranchEnergy::Infinite;
    let mut depth = 1;
    let mut coverage = 0;
    for p in branches {
        coverage += 1;
        energy = energy.min(branch_energy(p).expect("simple path"));
        depth = depth.max(p.len());
    }
    SelectionKey {
        coverage,
        energy,
        depth,
        root_energy: graph.energies[&root],
        root,
    }
}

/// Best-first search from `root` outward. A node's label is its branch to
/// the root; extending to a neighbor turns the node into a non-leaf, adding
/// its energy. Labels only get worse as paths grow, so the first label
/// settled for each node is its optimum, and every settled branch is its
/// parent's branch plus one hop.
pub fn widest_branches(graph: &SourceGraph, root: NodeId) -> Result<WidestBranches, OracleError> {
    graph.check_reachable(root)?;
    let mut tentative: BTreeMap<NodeId, Vec<Eid>> = BTreeMap::from([(root, vec![graph.eid(root)])]);
    let mut settled: BTreeMap<NodeId, Vec<Eid>> = BTreeMap::new();
    while !tentative.is_empty() {
        let next = tentative
            .iter()
            .max_by(|a, b| compare_branches(a.1, b.1))
            .map(|(&id, _)| id)
            .unwrap();
        let path = tentative.remove(&next).unwrap();
        for u in graph.neighbors(next) {
            if settled.contains_key(&u) || u == next {
                continue;
            }
            let mut candidate = Vec::with_capacity(path.len() + 1);
            candidate.push(graph.eid(u));
            candidate.extend_from_slice(&path);
            let better = match tentative.get(&u) {
                None => true,
                Some(current) => compare_branches(&candidate, current) == Ordering::Greater,
            };
            if better {
                tentative.insert(u, candidate);
            }
        }
        settled.insert(next, path);
    }
    Ok(WidestBranches {
        root,
        branches: settled,
    })
}

fn select(
    graph: &SourceGraph,
    candidates: impl IntoIterator<Item = (SelectionKey, BTreeMap<NodeId, NodeId>)>,
) -> Result<OracleResult, OracleError> {
    let mut ranked: Vec<_> = candidates.into_iter().collect();
    if ranked.is_empty() {
        return Err(OracleError::Empty);
    }
    ranked.sort_by_key(|c| std::cmp::Reverse(c.0));
    let decided_by = match ranked.get(1) {
        None => TieBreak::Unopposed,
        Some(second) => TieBreak::between(&ranked[0].0, &second.0),
    };
    let (key, parent_map) = ranked.swap_remove(0);
    debug_assert_eq!(key.coverage, graph.len());
    Ok(OracleResult {
        root: key.root,
        tree_energy: key.energy,
        parent_map,
        depth: key.depth,
        decided_by,
    })
}

/// Optimal aggregation tree: the root whose widest-branch tree ranks first.
pub fn oracle_dlmt(graph: &SourceGraph) -> Result<OracleResult, OracleError> {
    if graph.is_empty() {
        return Err(OracleError::Empty);
    }
    let mut candidates = Vec::with_capacity(graph.len());
    for root in graph.nodes() {
        let wb = widest_branches(graph, root)?;
        candidates.push((wb.key(graph), wb.parent_map()));
    }
    select(graph, candidates)
}

/// Best simple path from every source to every other node, by enumeration.
fn best_simple_paths(graph: &SourceGraph) -> BTreeMap<(NodeId, NodeId), Vec<Eid>> {
    fn walk(
        graph: &SourceGraph,
        path: &mut Vec<Eid>,
        best: &mut BTreeMap<(NodeId, NodeId), Vec<Eid>>,
    ) {
        let last = path[path.len() - 1].node;
        let key = (path[0].node, last);
        let replace = match best.get(&key) {
            None => true,
            Some(b) => compare_branches(path, b) == Ordering::Greater,
        };
        if replace {
            best.insert(key, path.clone());
        }
        for u in graph.neighbors(last) {
            if path.iter().any(|e| e.node == u) {
                continue;
            }
            path.push(graph.eid(u));
            walk(graph, path, best);
            path.pop();
        }
    }
    let mut best = BTreeMap::new();
    for s in graph.nodes() {
        let mut path = vec![graph.eid(s)];
        walk(graph, &mut path, &mut best);
    }
    best
}

/// Every spanning tree of `graph`, as edge lists.
pub fn spanning_trees(graph: &SourceGraph) -> Vec<Vec<(NodeId, NodeId)>> {
    let ids: Vec<NodeId> = graph.nodes().collect();
    let index: BTreeMap<NodeId, usize> = ids.iter().enumerate().map(|(i, &n)| (n, i)).collect();
    let edges: Vec<(usize, usize)> = graph
        .edges()
        .into_iter()
        .map(|(a, b)| (index[&a], index[&b]))
        .collect();
    let need = ids.len().saturating_sub(1);

    fn find(comp: &[usize], mut x: usize) -> usize {
        while comp[x] != x {
            x = comp[x];
        }
        x
    }

    #[allow(clippy::too_many_arguments)]
    fn rec(
        edges: &[(usize, usize)],
        at: usize,
        need: usize,
        comp: &mut Vec<usize>,
        chosen: &mut Vec<(usize, usize)>,
        out: &mut Vec<Vec<(usize, usize)>>,
    ) {
        if chosen.len() == need {
            out.push(chosen.clone());
            return;
        }
        if edges.len() - at < need - chosen.len() {
            return;
        }
        let (a, b) = edges[at];
        let (ra, rb) = (find(comp, a), find(comp, b));
        if ra != rb {
            let saved = comp.clone();
            comp[ra] = rb;
            chosen.push((a, b));
            rec(edges, at + 1, need, comp, chosen, out);
            chosen.pop();
            *comp = saved;
        }
        rec(edges, at + 1, need, comp, chosen, out);
    }

    let mut out = Vec::new();
    let mut comp: Vec<usize> = (0..ids.len()).collect();
    rec(&edges, 0, need, &mut comp, &mut Vec::new(), &mut out);
    out.into_iter()
        .map(|t| t.into_iter().map(|(a, b)| (ids[a], ids[b])).collect())
        .collect()
}

/// Exhaustive counterpart of [`oracle_dlmt`] for at most
/// [`BRUTE_FORCE_LIMIT`] sources.
///
/// A (spanning tree, root) pair is admissible when every source's branch in
/// the tree is its best simple path to the root; admissible pairs are ranked
/// by the tie-break chain.
pub fn brute_force_dlmt(graph: &SourceGraph) -> Result<OracleResult, OracleError> {
    if graph.is_empty() {
        return Err(OracleError::Empty);
    }
    if graph.len() > BRUTE_FORCE_LIMIT {
        return Err(OracleError::TooManySources {
            count: graph.len(),
            limit: BRUTE_FORCE_LIMIT,
        });
    }
    if let Some(first) = graph.nodes().next() {
        graph.check_reachable(first)?;
    }
    let best = best_simple_paths(graph);
    // Edges used by the optimal branches toward each root; a tree can only
    // be admissible for roots whose edge set it equals.
    let best_edges: BTreeMap<NodeId, BTreeSet<(NodeId, NodeId)>> = graph
        .nodes()
        .map(|r| {
            let edges = best
                .iter()
                .filter(|((_, to), _)| *to == r)
                .flat_map(|(_, p)| p.windows(2).map(|w| (w[0].node.min(w[1].node), w[0].node.max(w[1].node))))
                .collect();
            (r, edges)
        })
        .collect();
    let mut per_root: BTreeMap<NodeId, (SelectionKey, BTreeMap<NodeId, NodeId>)> = BTreeMap::new();
    for tree in spanning_trees(graph) {
        let tree_edges: BTreeSet<(NodeId, NodeId)> = tree.iter().copied().collect();
        if !best_edges.values().any(|e| *e == tree_edges) {
            continue;
        }
        let mut adj: BTreeMap<NodeId, Vec<NodeId>> = BTreeMap::new();
        for &(a, b) in &tree {
            adj.entry(a).or_default().push(b);
            adj.entry(b).or_default().push(a);
        }
        'roots: for root in graph.nodes() {
            if best_edges[&root] != tree_edges {
                continue;
            }
            let mut parent = BTreeMap::new();
            let mut queue = VecDeque::from([root]);
            let mut seen = BTreeSet::from([root]);
            while let Some(v) = queue.pop_front() {
                for &u in adj.get(&v).into_iter().flatten() {
                    if seen.insert(u) {
                        parent.insert(u, v);
                        queue.push_back(u);
                    }
                }
            }
            let mut branches = Vec::with_capacity(graph.len());
            for s in graph.nodes() {
                let mut path = vec![graph.eid(s)];
                let mut at = s;
                while let Some(&p) = parent.get(&at) {
                    path.push(graph.eid(p));
                    at = p;
                }
                if s != root && best[&(s, root)] != path {
                    continue 'roots;
                }
                branches.push(path);
            }
            let key = key_of(graph, root, branches.iter().map(Vec::as_slice));
            per_root.insert(root, (key, parent));
        }
    }
    select(graph, per_root.into_values())
}

/// Rebuilds branches from a parent map and scores the tree.
pub fn evaluate_tree(
    graph: &SourceGraph,
    root: NodeId,
    parent_map: &BTreeMap<NodeId, NodeId>,
) -> Result<OracleResult, OracleError> {
    let invalid = |reason: String| OracleError::InvalidTree { root, reason };
    if parent_map.len() + 1 != graph.len() || parent_map.contains_key(&root) {
        return Err(invalid(format!(
            "{} links for {} sources",
            parent_map.len(),
            graph.len()
        )));
    }
    let mut branches = Vec::with_capacity(graph.len());
    for s in graph.nodes() {
        let mut path = vec![graph.eid(s)];
        let mut at = s;
        while at != root {
            let p = *parent_map
                .get(&at)
                .ok_or_else(|| invalid(format!("{at} has no parent")))?;
            if !graph.has_edge(at, p) {
                return Err(invalid(format!("{at} -> {p} is not an edge")));
            }
            if path.iter().any(|e| e.node == p) {
                return Err(invalid(format!("cycle through {p}")));
            }
            path.push(graph.eid(p));
            at = p;
        }
        branches.push(path);
    }
    let key = key_of(graph, root, branches.iter().map(Vec::as_slice));
    Ok(OracleResult {
        root,
        tree_energy: key.energy,
        parent_map: parent_map.clone(),
        depth: key.depth,
        decided_by: TieBreak::Unopposed,
    })
}

/// Breadth-first tree from `root`, visiting neighbors in ascending id order.
pub fn bfs_baseline(graph: &SourceGraph, root: NodeId) -> Result<OracleResult, OracleError> {
    graph.check_reachable(root)?;
    let mut parent = BTreeMap::new();
    let mut seen = BTreeSet::from([root]);
    let mut queue = VecDeque::from([root]);
    while let Some(v) = queue.pop_front() {
        for u in graph.neighbors(v) {
            if seen.insert(u) {
                parent.insert(u, v);
                queue.push_back(u);
            }
        }
    }
    evaluate_tree(graph, root, &parent)
}

/// Minimal energy-aware spanning tree: the highest-energy source is the root
/// and every other source joins its highest-energy neighbor one hop closer to
/// the root. Ties go to the lower id.
pub fn espan_like_baseline(graph: &SourceGraph) -> Result<OracleResult, OracleError> {
    let root = graph
        .energies
        .iter()
        .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0)))
        .map(|(&id, _)| id)
        .ok_or(OracleError::Empty)?;
    graph.check_reachable(root)?;
    let hops = graph.hops_from(root);
    let mut parent = BTreeMap::new();
    for v in graph.nodes().filter(|&v| v != root) {
        let p = graph
            .neighbors(v)
            .filter(|u| hops[u] < hops[&v])
            .max_by(|a, b| graph.energies[a].cmp(&graph.energies[b]).then(b.cmp(a)))
            .expect("a reachable node has a neighbor one hop closer");
        parent.insert(v, p);
    }
    evaluate_tree(graph, root, &parent)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn j(x: u32) -> Energy {
        Energy::from_joules(x)
    }

    fn fin(x: u32) -> BranchEnergy {
        BranchEnergy::Finite(j(x))
    }

    /// a(3) - b(7) - c(5)
    fn path3() -> SourceGraph {
        SourceGraph::new(
            [(NodeId(0), j(3)), (NodeId(1), j(7)), (NodeId(2), j(5))],
            [(NodeId(0), NodeId(1)), (NodeId(1), NodeId(2))],
        )
        .unwrap()
    }

    /// a=2, b=9, c=3, d=5 with edges a-b, a-c, b-d, c-d.
    fn diamond() -> SourceGraph {
        SourceGraph::new(
            [
                (NodeId(0), j(2)),
                (NodeId(1), j(9)),
                (NodeId(2), j(3)),
                (NodeId(3), j(5)),
            ],
            [
                (NodeId(0), NodeId(1)),
                (NodeId(0), NodeId(2)),
                (NodeId(1), NodeId(3)),
                (NodeId(2), NodeId(3)),
            ],
        )
        .unwrap()
    }

    #[test]
    fn widest_on_path() {
        let g = path3();
        let at_b = widest_branches(&g, NodeId(1)).unwrap();
        assert_eq!(at_b.energy(NodeId(0)), Some(fin(7)));
        assert_eq!(at_b.energy(NodeId(2)), Some(fin(7)));
        let at_a = widest_branches(&g, NodeId(0)).unwrap();
        assert_eq!(at_a.energy(NodeId(2)), Some(fin(3)));
    }

    #[test]
    fn widest_on_diamond_goes_through_b() {
        let wb = widest_branches(&diamond(), NodeId(3)).unwrap();
        assert_eq!(wb.energy(NodeId(0)), Some(fin(5)));
        assert_eq!(wb.parent_map()[&NodeId(0)], NodeId(1));
    }

    #[test]
    fn oracle_on_path_and_singleton() {
        let r = oracle_dlmt(&path3()).unwrap();
        assert_eq!(r.root, NodeId(1));
        assert_eq!(r.tree_energy, fin(7));
        assert_eq!(r.decided_by, TieBreak::TreeEnergy);
        let single = SourceGraph::new([(NodeId(5), j(4))], []).unwrap();
        let r = oracle_dlmt(&single).unwrap();
        assert_eq!(r.root, NodeId(5));
        assert_eq!(r.tree_energy, BranchEnergy::Infinite);
        assert_eq!(r.decided_by, TieBreak::Unopposed);
    }

    #[test]
    fn complete_graph_with_equal_energy_picks_lowest_id() {
        let n = 5u16;
        let nodes = (1..=n).map(|i| (NodeId(i), j(6)));
        let edges = (1..=n).flat_map(|a| (a + 1..=n).map(move |b| (NodeId(a), NodeId(b))));
        let g = SourceGraph::new(nodes, edges).unwrap();
        let r = oracle_dlmt(&g).unwrap();
        assert_eq!(r.root, NodeId(1));
        assert_eq!(r.tree_energy, fin(6));
        assert_eq!(r.depth, 2);
        assert_eq!(r.decided_by, TieBreak::RootId);
        assert!(r.parent_map.values().all(|&p| p == NodeId(1)));
    }

    #[test]
    fn brute_force_small_cases() {
        let r = brute_force_dlmt(&path3()).unwrap();
        assert_eq!((r.root, r.tree_energy), (NodeId(1), fin(7)));
        let pair = SourceGraph::new(
            [(NodeId(0), j(4)), (NodeId(1), j(6))],
            [(NodeId(0), NodeId(1))],
        )
        .unwrap();
        let r = brute_force_dlmt(&pair).unwrap();
        assert_eq!((r.root, r.tree_energy), (NodeId(1), fin(6)));
    }

    #[test]
    fn brute_force_size_limit() {
        let nodes = (0..9).map(|i| (NodeId(i), j(5)));
        let edges = (0..8).map(|i| (NodeId(i), NodeId(i + 1)));
        let g = SourceGraph::new(nodes, edges).unwrap();
        assert_eq!(
            brute_force_dlmt(&g),
            Err(OracleError::TooManySources { count: 9, limit: 8 })
        );
    }

    #[test]
    fn spanning_tree_counts() {
        // Cayley: K4 has 16 spanning trees; a 4-cycle has 4.
        let k4 = SourceGraph::new(
            (0..4).map(|i| (NodeId(i), j(1))),
            (0..4u16).flat_map(|a| (a + 1..4).map(move |b| (NodeId(a), NodeId(b)))),
        )
        .unwrap();
        assert_eq!(spanning_trees(&k4).len(), 16);
        assert_eq!(spanning_trees(&diamond()).len(), 4);
    }

    #[test]
    fn disconnected_graph_is_reported() {
        let g = SourceGraph::new(
            [(NodeId(0), j(1)), (NodeId(1), j(2)), (NodeId(2), j(3))],
            [(NodeId(0), NodeId(1))],
        )
        .unwrap();
        assert_eq!(
            widest_branches(&g, NodeId(0)),
            Err(OracleError::Unreachable {
                root: NodeId(0),
                unreachable: vec![NodeId(2)]
            })
        );
        assert!(oracle_dlmt(&g).is_err());
        assert!(!g.is_connected());
    }

    #[test]
    fn baselines_on_path() {
        let g = path3();
        let bfs = bfs_baseline(&g, NodeId(0)).unwrap();
        assert_eq!(bfs.tree_energy, fin(3));
        let es = espan_like_baseline(&g).unwrap();
        assert_eq!((es.root, es.tree_energy), (NodeId(1), fin(7)));
    }

    #[test]
    fn evaluate_rejects_bad_maps() {
        let g = path3();
        let cyc = BTreeMap::from([(NodeId(0), NodeId(1)), (NodeId(1), NodeId(0))]);
        assert!(evaluate_tree(&g, NodeId(2), &cyc).is_err());
        let non_edge = BTreeMap::from([(NodeId(0), NodeId(2)), (NodeId(1), NodeId(2))]);
        assert!(evaluate_tree(&g, NodeId(2), &non_edge).is_err());
    }

    #[test]
    fn graph_construction_errors() {
        assert_eq!(
            SourceGraph::new([(NodeId(0), j(1))], [(NodeId(0), NodeId(0))]),
            Err(OracleError::SelfLoop(NodeId(0)))
        );
        assert_eq!(
            SourceGraph::new([(NodeId(0), j(1))], [(NodeId(0), NodeId(3))]),
            Err(OracleError::UnknownNode(NodeId(3)))
        );
    }
}
