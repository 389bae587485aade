//! Side-by-side comparison of the protocol against the oracles and baselines.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{self, Write};

use dlmt_core::oracle::{
    bfs_baseline, brute_force_dlmt, espan_like_baseline, oracle_dlmt, OracleResult, SourceGraph, BRUTE_FORCE_LIMIT,
};
use dlmt_core::sim::{RunMetrics, Scenario, Simulation, StepResult};
use dlmt_core::{BranchEnergy, NodeId};
use serde::Serialize;

#[derive(Debug, Clone, Serialize)]
pub struct Row {
    pub method: &'static str,
    pub root: Option<NodeId>,
    pub tree_energy: Option<BranchEnergy>,
    pub depth: Option<usize>,
    /// Only the protocol exchanges messages.
    pub messages: Option<u64>,
    #[serde(skip)]
    parent_map: BTreeMap<NodeId, NodeId>,
}

impl Row {
    fn from_oracle(method: &'static str, r: &OracleResult) -> Row {
        Row {
            method,
            root: Some(r.root),
            tree_energy: Some(r.tree_energy),
            depth: Some(r.depth),
            messages: None,
            parent_map: r.parent_map.clone(),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct Report {
    pub rows: Vec<Row>,
    /// Protocol and oracle disagree on the root, the tree energy or the
    /// parent map, or the protocol never converged.
    pub mismatch: bool,
    pub metrics: RunMetrics,
}

/// Depth in nodes along the longest root path, as the oracle counts it.
pub fn depth_from_parents(root: NodeId, parents: &BTreeMap<NodeId, NodeId>) -> usize {
    let hops = |mut n: NodeId| {
        let mut h = 0;
        while n != root {
            match parents.get(&n) {
                Some(&p) if h <= parents.len() => {
                    n = p;
                    h += 1;
                }
                _ => return h,
            }
        }
        h
    };
    1 + parents.keys().map(|&n| hops(n)).max().unwrap_or(0)
}

/// Runs the protocol to completion and ranks it against the centralized
/// results over the sources still alive at the end.
pub fn compare(scenario: Scenario) -> Result<Report, String> {
    let topology = scenario.topology.clone();
    let mut sim = Simulation::new(scenario).map_err(|e| e.to_string())?;
    while sim.step().map_err(|e| e.to_string())? == StepResult::Processed {}
    let dead: BTreeSet<NodeId> = topology.nodes.iter().map(|n| n.id).filter(|&id| !sim.is_alive(id)).collect();
    let metrics = sim.into_outcome().metrics;

    let graph = SourceGraph::from_topology(&topology, &dead);
    let oracle = oracle_dlmt(&graph).map_err(|e| e.to_string())?;
    let protocol = Row {
        method: "protocol",
        root: metrics.final_root,
        tree_energy: metrics.final_tree_energy,
        depth: metrics
            .final_root
            .map(|r| depth_from_parents(r, &metrics.final_parent_map)),
        messages: Some(metrics.total_control_messages + metrics.total_hello_messages),
        parent_map: metrics.final_parent_map.clone(),
    };
    let mismatch = !metrics.converged
        || protocol.root != Some(oracle.root)
        || protocol.tree_energy != Some(oracle.tree_energy)
        || protocol.parent_map != oracle.parent_map;

    let mut rows = vec![protocol, Row::from_oracle("oracle", &oracle)];
    if graph.len() <= BRUTE_FORCE_LIMIT {
        let bf = brute_force_dlmt(&graph).map_err(|e| e.to_string())?;
        rows.push(Row::from_oracle("brute_force", &bf));
    }
    let bfs = bfs_baseline(&graph, oracle.root).map_err(|e| e.to_string())?;
    rows.push(Row::from_oracle("bfs", &bfs));
    let espan = espan_like_baseline(&graph).map_err(|e| e.to_string())?;
    rows.push(Row::from_oracle("espan_like", &espan));
    Ok(Report { rows, mismatch, metrics })
}

fn cell<T: ToString>(v: Option<T>) -> String {
    v.map_or_else(|| "-".to_owned(), |v| v.to_string())
}

impl Report {
    pub fn write_table(&self, out: &mut dyn Write) -> io::Result<()> {
        writeln!(out, "{:<12} {:>6} {:>12} {:>6} {:>9}", "method", "root", "tree_energy", "depth", "messages")?;
        for r in &self.rows {
            writeln!(
                out,
                "{:<12} {:>6} {:>12} {:>6} {:>9}",
                r.method,
                cell(r.root),
                cell(r.tree_energy),
                cell(r.depth),
                cell(r.messages)
            )?;
        }
        if self.mismatch {
            writeln!(out, "!! MISMATCH: protocol and oracle disagree")?;
        } else {
            writeln!(out, "protocol matches oracle")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn depth_counts_nodes_on_longest_chain() {
        let n = NodeId;
        assert_eq!(depth_from_parents(n(0), &BTreeMap::new()), 1);
        let chain = BTreeMap::from([(n(1), n(0)), (n(2), n(1)), (n(3), n(0))]);
        assert_eq!(depth_from_parents(n(0), &chain), 3);
    }
}
