mod common;

use std::collections::{BTreeMap, BTreeSet};

use common::family_graph;
use dlmt_core::oracle::{
    bfs_baseline, brute_force_dlmt, espan_like_baseline, oracle_dlmt, widest_branches, SourceGraph,
};
use dlmt_core::{branch_energy, BranchEnergy, Eid, NodeId};
use proptest::prelude::*;

/// Bottleneck of the best simple path from `from` to `to`, by enumeration.
fn enumerated_bottleneck(g: &SourceGraph, from: NodeId, to: NodeId) -> BranchEnergy {
    fn walk(g: &SourceGraph, path: &mut Vec<Eid>, to: NodeId, best: &mut Option<BranchEnergy>) {
        let last = path.last().unwrap().node;
        if last == to {
            let e = branch_energy(path).unwrap();
            *best = Some(best.map_or(e, |b| b.max(e)));
            return;
        }
        for u in g.neighbors(last).collect::<Vec<_>>() {
            if path.iter().all(|e| e.node != u) {
                path.push(g.eid(u));
                walk(g, path, to, best);
                path.pop();
            }
        }
    }
    let mut best = None;
    walk(g, &mut vec![g.eid(from)], to, &mut best);
    best.unwrap()
}

fn assert_valid_tree(g: &SourceGraph, root: NodeId, pm: &BTreeMap<NodeId, NodeId>) {
    assert_eq!(pm.len() + 1, g.len());
    for (&c, &p) in pm {
        assert!(g.has_edge(c, p), "{c}->{p} not an edge");
    }
    for s in g.nodes() {
        let mut seen = BTreeSet::from([s]);
        let mut at = s;
        while at != root {
            at = pm[&at];
            assert!(seen.insert(at), "cycle from {s}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn widest_bottlenecks_are_unbeatable(seed in 0u64..100_000) {
        let g = family_graph(seed);
        for root in g.nodes() {
            let wb = widest_branches(&g, root).unwrap();
            for s in g.nodes().filter(|&s| s != root) {
                prop_assert_eq!(wb.energy(s).unwrap(), enumerated_bottleneck(&g, s, root));
            }
            assert_valid_tree(&g, root, &wb.parent_map());
        }
    }

    #[test]
    fn oracle_matches_brute_force(seed in 0u64..100_000) {
        let g = family_graph(seed);
        let o = oracle_dlmt(&g).unwrap();
        let b = brute_force_dlmt(&g).unwrap();
        prop_assert_eq!((o.root, o.tree_energy, o.decided_by), (b.root, b.tree_energy, b.decided_by));
        prop_assert_eq!(&o.parent_map, &b.parent_map);
        assert_valid_tree(&g, o.root, &o.parent_map);
    }

    #[test]
    fn baselines_are_valid_and_dominated(seed in 0u64..100_000) {
        let g = family_graph(seed);
        let o = oracle_dlmt(&g).unwrap();
        let es = espan_like_baseline(&g).unwrap();
        assert_valid_tree(&g, es.root, &es.parent_map);
        prop_assert!(o.tree_energy >= es.tree_energy);
        for r in g.nodes() {
            let bfs = bfs_baseline(&g, r).unwrap();
            assert_valid_tree(&g, r, &bfs.parent_map);
            prop_assert!(o.tree_energy >= bfs.tree_energy);
        }
    }
}
