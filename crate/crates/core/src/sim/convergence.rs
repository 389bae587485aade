use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::model::{DlmtSelection, NodeId, TreeTable};
use crate::protocol::NodeState;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConvergenceReport {
    pub converged: bool,
    /// Root of the most widely endorsed tree.
    pub majority_root: Option<NodeId>,
    /// Nodes endorsing something other than the most widely endorsed tree.
    pub disagreeing: Vec<NodeId>,
}

/// Converged when every given node endorses the same tree and covers every
/// given node.
pub fn check_convergence<'a>(states: impl IntoIterator<Item = &'a NodeState>) -> ConvergenceReport {
    let states: Vec<&NodeState> = states.into_iter().collect();
    let ids: BTreeSet<NodeId> = states.iter().map(|s| s.id()).collect();
    let mut votes: Vec<(&TreeTable, Vec<NodeId>)> = Vec::new();
    for s in &states {
        let t = s.dlmt().tree();
        match votes.iter_mut().find(|(v, _)| *v == t) {
            Some((_, ids)) => ids.push(s.id()),
            None => votes.push((t, vec![s.id()])),
        }
    }
    let Some((majority, _)) = votes
        .iter()
        .max_by(|a, b| a.1.len().cmp(&b.1.len()).then(b.1[0].cmp(&a.1[0])))
    else {
        return ConvergenceReport {
            converged: true,
            majority_root: None,
            disagreeing: Vec::new(),
        };
    };
    let majority: &TreeTable = majority;
    let disagreeing: Vec<NodeId> = states
        .iter()
        .filter(|s| s.dlmt().tree() != majority)
        .map(|s| s.id())
        .collect();
    let covered: BTreeSet<NodeId> = majority.entries().map(|b| b.initiator()).collect();
    ConvergenceReport {
        converged: disagreeing.is_empty() && covered == ids,
        majority_root: Some(majority.owner()),
        disagreeing,
    }
}

/// Whether the parent links in the endorsed tree contain a cycle.
///
/// Links are taken from every entry path, so two entries that route a node
/// through different parents both contribute.
pub fn has_parent_cycle(selection: &DlmtSelection) -> bool {
    parent_cycle(selection.tree()).is_some()
}

/// A node on a parent-link cycle in `table`, if any.
pub fn parent_cycle(table: &TreeTable) -> Option<NodeId> {
    let mut links: BTreeMap<NodeId, BTreeSet<NodeId>> = BTreeMap::new();
    for br in table.entries() {
        for w in br.path().windows(2) {
            links.entry(w[0].node).or_default().insert(w[1].node);
        }
    }
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        Open,
        Done,
    }
    fn visit(
        v: NodeId,
        links: &BTreeMap<NodeId, BTreeSet<NodeId>>,
        marks: &mut BTreeMap<NodeId, Mark>,
    ) -> Option<NodeId> {
        match marks.get(&v) {
            Some(Mark::Open) => return Some(v),
            Some(Mark::Done) => return None,
            None => {}
        }
        marks.insert(v, Mark::Open);
        for &u in links.get(&v).into_iter().flatten() {
            if let Some(c) = visit(u, links, marks) {
                return Some(c);
            }
        }
        marks.insert(v, Mark::Done);
        None
    }
    let mut marks = BTreeMap::new();
    links.keys().find_map(|&v| visit(v, &links, &mut marks))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{BrList, Eid, Energy};
    use crate::protocol::{init_node, MaintenanceConfig};

    fn eid(n: u16, j: u32) -> Eid {
        Eid::new(NodeId(n), Energy::from_joules(j))
    }

    #[test]
    fn isolated_nodes() {
        let cfg = MaintenanceConfig::default();
        let (a, _) = init_node(NodeId(0), Energy::from_joules(1), cfg).unwrap();
        let (b, _) = init_node(NodeId(1), Energy::from_joules(2), cfg).unwrap();
        assert!(check_convergence([&a]).converged);
        let r = check_convergence([&a, &b]);
        assert!(!r.converged);
        assert_eq!(r.disagreeing.len(), 1);
        assert!(check_convergence(std::iter::empty()).converged);
    }

    #[test]
    fn cycle_detection() {
        let owner = eid(0, 5);
        let ok = TreeTable::from_entries(
            owner.node,
            [
                BrList::singleton(owner),
                BrList::new(vec![eid(1, 3), owner]).unwrap(),
                BrList::new(vec![eid(2, 3), eid(1, 3), owner]).unwrap(),
            ],
        )
        .unwrap();
        assert_eq!(parent_cycle(&ok), None);
        let bad = TreeTable::from_entries(
            owner.node,
            [
                BrList::singleton(owner),
                BrList::new(vec![eid(1, 3), eid(2, 3), owner]).unwrap(),
                BrList::new(vec![eid(2, 3), eid(1, 3), owner]).unwrap(),
            ],
        )
        .unwrap();
        assert!(parent_cycle(&bad).is_some());
    }
}
