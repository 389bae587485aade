//! Domain values shared by the protocol, the simulator and the oracles,
//! together with the branch/tree energy arithmetic.
//!
//! Energies are fixed-point millijoules so that every comparison made while
//! breaking ties is exact.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Label of a sensor node.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct NodeId(pub u16);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n{}", self.0)
    }
}

/// Residual energy in millijoules. Zero means the node is dead.
#[derive(
    Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct Energy(u32);

impl Energy {
    pub const ZERO: Energy = Energy(0);

    pub const fn from_millijoules(mj: u32) -> Self {
        Energy(mj)
    }

    /// Whole joules, saturating at the 32-bit millijoule ceiling.
    pub const fn from_joules(j: u32) -> Self {
        Energy(j.saturating_mul(1000))
    }

    pub const fn millijoules(self) -> u32 {
        self.0
    }

    pub fn joules(self) -> f64 {
        f64::from(self.0) / 1000.0
    }

    pub const fn is_dead(self) -> bool {
        self.0 == 0
    }
}

impl fmt::Display for Energy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{:03} J", self.0 / 1000, self.0 % 1000)
    }
}

/// Energy of a branch or tree. A branch made of a single node has no
/// non-leaf member, so its energy is unbounded.
///
/// `Finite` sorts below `Infinite`, so `min` folds behave as expected.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BranchEnergy {
    Finite(Energy),
    Infinite,
}

impl BranchEnergy {
    pub fn finite(self) -> Option<Energy> {
        match self {
            BranchEnergy::Finite(e) => Some(e),
            BranchEnergy::Infinite => None,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, BranchEnergy::Infinite)
    }

    /// `min{e, self}`: energy after the branch is extended by a node of energy `e`.
    pub fn through(self, e: Energy) -> BranchEnergy {
        self.min(BranchEnergy::Finite(e))
    }
}

impl From<Energy> for BranchEnergy {
    fn from(e: Energy) -> Self {
        BranchEnergy::Finite(e)
    }
}

impl fmt::Display for BranchEnergy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BranchEnergy::Finite(e) => e.fmt(f),
            BranchEnergy::Infinite => f.write_str("inf"),
        }
    }
}

// JSON form: integer millijoules, or the string "inf".
impl Serialize for BranchEnergy {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            BranchEnergy::Finite(e) => s.serialize_u32(e.millijoules()),
            BranchEnergy::Infinite => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for BranchEnergy {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Mj(u32),
            Tag(String),
        }
        match Repr::deserialize(d)? {
            Repr::Mj(mj) => Ok(BranchEnergy::Finite(Energy::from_millijoules(mj))),
            Repr::Tag(t) if t == "inf" => Ok(BranchEnergy::Infinite),
            Repr::Tag(t) => Err(serde::de::Error::custom(format!(
                "expected millijoules or \"inf\", got {t:?}"
            ))),
        }
    }
}

/// An (energy level, node id) pair, the unit of all control state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Eid {
    pub energy: Energy,
    pub node: NodeId,
}

impl Eid {
    pub const fn new(node: NodeId, energy: Energy) -> Self {
        Eid { energy, node }
    }
}

impl fmt::Display for Eid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({})", self.node, self.energy)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("branch is empty")]
    EmptyBranch,
    #[error("malformed branch: node {0} appears more than once")]
    DuplicateNode(NodeId),
    #[error("branch for initiator {initiator} does not terminate at table owner {owner}")]
    ForeignBranch { initiator: NodeId, owner: NodeId },
    #[error("table owned by {0} lacks the owner's own singleton entry")]
    MissingOwnerEntry(NodeId),
    #[error("entry keyed by {key} starts at {initiator}")]
    KeyMismatch { key: NodeId, initiator: NodeId },
}

fn check_distinct(path: &[Eid]) -> Result<(), ModelError> {
    if path.is_empty() {
        return Err(ModelError::EmptyBranch);
    }
    // Paths are short (at most a few dozen hops); quadratic scan beats hashing.
    for (i, a) in path.iter().enumerate() {
        if path[i + 1..].iter().any(|b| b.node == a.node) {
            return Err(ModelError::DuplicateNode(a.node));
        }
    }
    Ok(())
}

/// Minimum energy over every node of `path` except its initiator (index 0).
pub fn branch_energy(path: &[Eid]) -> Result<BranchEnergy, ModelError> {
    check_distinct(path)?;
    Ok(path[1..]
        .iter()
        .fold(BranchEnergy::Infinite, |acc, eid| acc.through(eid.energy)))
}

/// Preference order between two branches joining the same pair of nodes,
/// `Greater` meaning `a` is preferred.
///
/// The sorted non-leaf energies are compared lexicographically, larger first
/// difference winning and a strict prefix winning over its extension. The
/// first element is the branch energy, so this refines the max-min order.
/// Remaining ties (same energy multiset) go to the lexicographically smaller
/// node-id sequence read from the initiator.
///
/// The order is preserved when the same node is added at either end of both
/// branches and strictly worsens when a branch grows. That makes hop-by-hop
/// relaxation and root-outward best-first search land on the same unique
/// optimum regardless of message timing.
pub fn compare_branches(a: &[Eid], b: &[Eid]) -> Ordering {
    let mut ea: Vec<u32> = a.iter().skip(1).map(|e| e.energy.millijoules()).collect();
    let mut eb: Vec<u32> = b.iter().skip(1).map(|e| e.energy.millijoules()).collect();
    ea.sort_unstable();
    eb.sort_unstable();
    for (x, y) in ea.iter().zip(&eb) {
        match x.cmp(y) {
            Ordering::Equal => continue,
            other => return other,
        }
    }
    match eb.len().cmp(&ea.len()) {
        Ordering::Equal => {}
        other => return other,
    }
    let ids_a = a.iter().map(|e| e.node);
    let ids_b = b.iter().map(|e| e.node);
    ids_b.cmp(ids_a)
}

/// Ordered path of Eids from the initiating source (index 0) to the current
/// holder (last index), with its cached branch energy.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BrList {
    path: Vec<Eid>,
    energy: BranchEnergy,
}

impl BrList {
    pub fn new(path: Vec<Eid>) -> Result<Self, ModelError> {
        let energy = branch_energy(&path)?;
        Ok(BrList { path, energy })
    }

    pub fn singleton(eid: Eid) -> Self {
        BrList {
            path: vec![eid],
            energy: BranchEnergy::Infinite,
        }
    }

    pub fn path(&self) -> &[Eid] {
        &self.path
    }

    pub fn energy(&self) -> BranchEnergy {
        self.energy
    }

    pub fn initiator(&self) -> NodeId {
        self.path[0].node
    }

    pub fn holder(&self) -> NodeId {
        self.path[self.path.len() - 1].node
    }

    pub fn len(&self) -> usize {
        self.path.len()
    }

    pub fn is_empty(&self) -> bool {
        self.path.is_empty()
    }

    pub fn contains(&self, node: NodeId) -> bool {
        self.path.iter().any(|e| e.node == node)
    }

    /// Appends `eid` at the holder end.
    pub fn extended(&self, eid: Eid) -> Result<BrList, ModelError> {
        if self.contains(eid.node) {
            return Err(ModelError::DuplicateNode(eid.node));
        }
        let mut path = Vec::with_capacity(self.path.len() + 1);
        path.extend_from_slice(&self.path);
        path.push(eid);
        Ok(BrList {
            path,
            energy: self.energy.through(eid.energy),
        })
    }

    pub fn rank_cmp(&self, other: &BrList) -> Ordering {
        compare_branches(&self.path, &other.path)
    }
}

impl fmt::Display for BrList {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, eid) in self.path.iter().enumerate() {
            if i > 0 {
                f.write_str(" -> ")?;
            }
            eid.fmt(f)?;
        }
        Ok(())
    }
}

/// One node's tree rooted at itself: best known branch per initiator.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TreeTable {
    owner: NodeId,
    entries: BTreeMap<NodeId, BrList>,
    tree_energy: BranchEnergy,
}

impl TreeTable {
    /// Fresh table holding only the owner's singleton branch.
    pub fn new(owner: Eid) -> Self {
        let mut entries = BTreeMap::new();
        entries.insert(owner.node, BrList::singleton(owner));
        TreeTable {
            owner: owner.node,
            entries,
            tree_energy: BranchEnergy::Infinite,
        }
    }

    pub fn from_entries(
        owner: NodeId,
        branches: impl IntoIterator<Item = BrList>,
    ) -> Result<Self, ModelError> {
        let mut entries = BTreeMap::new();
        for br in branches {
            if br.holder() != owner {
                return Err(ModelError::ForeignBranch {
                    initiator: br.initiator(),
                    owner,
                });
            }
            entries.insert(br.initiator(), br);
        }
        match entries.get(&owner) {
            Some(own) if own.len() == 1 => {}
            _ => return Err(ModelError::MissingOwnerEntry(owner)),
        }
        let mut table = TreeTable {
            owner,
            entries,
            tree_energy: BranchEnergy::Infinite,
        };
        table.tree_energy = tree_energy(&table);
        Ok(table)
    }

    pub fn owner(&self) -> NodeId {
        self.owner
    }

    /// The owner's Eid as recorded in its singleton entry.
    pub fn owner_eid(&self) -> Eid {
        self.entries[&self.owner].path[0]
    }

    pub fn get(&self, initiator: NodeId) -> Option<&BrList> {
        self.entries.get(&initiator)
    }

    pub fn entries(&self) -> impl Iterator<Item = &BrList> {
        self.entries.values()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn tree_energy(&self) -> BranchEnergy {
        self.tree_energy
    }

    pub fn depth(&self) -> usize {
        tree_depth(self)
    }

    /// Inserts or replaces the entry for `br`'s initiator and refreshes the
    /// tree energy. Returns the number of entries visited for the refresh.
    pub(crate) fn upsert(&mut self, br: BrList) -> usize {
        debug_assert_eq!(br.holder(), self.owner);
        self.entries.insert(br.initiator(), br);
        self.tree_energy = tree_energy(self);
        self.entries.len()
    }

    /// Lexicographic comparison of two tables over ascending initiators; an
    /// entry beats a missing one and present entries compare by branch
    /// preference. Successive versions of one owner's table only improve
    /// entry-wise, so this orders them by recency.
    pub fn version_cmp(&self, other: &TreeTable) -> Ordering {
        let mut a = self.entries.iter().peekable();
        let mut b = other.entries.iter().peekable();
        loop {
            match (a.peek(), b.peek()) {
                (None, None) => return Ordering::Equal,
                (Some(_), None) => return Ordering::Greater,
                (None, Some(_)) => return Ordering::Less,
                (Some((ka, va)), Some((kb, vb))) => match ka.cmp(kb) {
                    Ordering::Less => return Ordering::Greater,
                    Ordering::Greater => return Ordering::Less,
                    Ordering::Equal => {
                        let o = va.rank_cmp(vb);
                        if o != Ordering::Equal {
                            return o;
                        }
                        a.next();
                        b.next();
                    }
                },
            }
        }
    }
}

/// Minimum cached branch energy over every entry of the table.
pub fn tree_energy(table: &TreeTable) -> BranchEnergy {
    table
        .entries
        .values()
        .map(BrList::energy)
        .min()
        .unwrap_or(BranchEnergy::Infinite)
}

/// Longest branch in the table, counted in Eids.
pub fn tree_depth(table: &TreeTable) -> usize {
    table.entries.values().map(BrList::len).max().unwrap_or(1)
}

/// Tie-break chain for competing trees. `Greater` is preferred: more
/// initiators covered, then higher tree energy, then lower depth, then
/// higher root energy, then lower root id.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SelectionKey {
    pub coverage: usize,
    pub energy: BranchEnergy,
    pub depth: usize,
    pub root_energy: Energy,
    pub root: NodeId,
}

impl Ord for SelectionKey {
    fn cmp(&self, other: &Self) -> Ordering {
        self.coverage
            .cmp(&other.coverage)
            .then(self.energy.cmp(&other.energy))
            .then(other.depth.cmp(&self.depth))
            .then(self.root_energy.cmp(&other.root_energy))
            .then(other.root.cmp(&self.root))
    }
}

impl PartialOrd for SelectionKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// The tree a node currently endorses as the network's aggregation tree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DlmtSelection {
    tree: TreeTable,
    energy: BranchEnergy,
    depth: usize,
    root: NodeId,
    root_energy: Energy,
}

impl DlmtSelection {
    pub fn from_tree(tree: TreeTable) -> Self {
        let root_eid = tree.owner_eid();
        DlmtSelection {
            energy: tree.tree_energy(),
            depth: tree.depth(),
            root: root_eid.node,
            root_energy: root_eid.energy,
            tree,
        }
    }

    pub fn tree(&self) -> &TreeTable {
        &self.tree
    }

    pub fn energy(&self) -> BranchEnergy {
        self.energy
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn root_energy(&self) -> Energy {
        self.root_energy
    }

    pub fn coverage(&self) -> usize {
        self.tree.len()
    }

    pub fn key(&self) -> SelectionKey {
        SelectionKey {
            coverage: self.coverage(),
            energy: self.energy,
            depth: self.depth,
            root_energy: self.root_energy,
            root: self.root,
        }
    }

    /// Parent links (initiator -> next hop) implied by every entry.
    pub fn parent_map(&self) -> BTreeMap<NodeId, NodeId> {
        self.tree
            .entries()
            .filter(|br| br.len() > 1)
            .map(|br| (br.initiator(), br.path()[1].node))
            .collect()
    }
}

impl From<TreeTable> for DlmtSelection {
    fn from(tree: TreeTable) -> Self {
        DlmtSelection::from_tree(tree)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eid(node: u16, joules: u32) -> Eid {
        Eid::new(NodeId(node), Energy::from_joules(joules))
    }

    fn j(joules: u32) -> BranchEnergy {
        BranchEnergy::Finite(Energy::from_joules(joules))
    }

    #[test]
    fn branch_energy_skips_the_leaf() {
        assert_eq!(branch_energy(&[eid(0, 2), eid(1, 5), eid(2, 7)]), Ok(j(5)));
        assert_eq!(branch_energy(&[eid(0, 9)]), Ok(BranchEnergy::Infinite));
        assert_eq!(
            branch_energy(&[eid(0, 4), eid(1, 3), eid(2, 6), eid(3, 3)]),
            Ok(j(3))
        );
    }

    #[test]
    fn branch_energy_rejects_repeats() {
        assert_eq!(
            branch_energy(&[eid(0, 4), eid(1, 3), eid(0, 4)]),
            Err(ModelError::DuplicateNode(NodeId(0)))
        );
        assert_eq!(branch_energy(&[]), Err(ModelError::EmptyBranch));
    }

    #[test]
    fn extension_uses_the_recurrence() {
        let leaf = BrList::singleton(eid(1, 9));
        let one = leaf.extended(eid(2, 6)).unwrap();
        assert_eq!(one.energy(), j(6));
        let two = one.extended(eid(3, 8)).unwrap();
        assert_eq!(two.energy(), j(6));
        assert!(two.extended(eid(2, 1)).is_err());
    }

    #[test]
    fn fresh_table_is_unbounded_and_shallow() {
        let t = TreeTable::new(eid(4, 10));
        assert_eq!(t.len(), 1);
        assert_eq!(tree_energy(&t), BranchEnergy::Infinite);
        assert_eq!(tree_depth(&t), 1);
    }

    #[test]
    fn tree_energy_and_depth_over_entries() {
        let owner = eid(9, 7);
        let entries = vec![
            BrList::singleton(owner),
            BrList::new(vec![eid(1, 1), owner]).unwrap(),
            BrList::new(vec![eid(2, 1), eid(3, 8), owner]).unwrap(),
            BrList::new(vec![eid(4, 1), eid(5, 5), owner]).unwrap(),
        ];
        let t = TreeTable::from_entries(NodeId(9), entries).unwrap();
        // entry energies {inf, 7, 7, 5}
        assert_eq!(t.tree_energy(), j(5));
        assert_eq!(t.depth(), 3);
    }

    #[test]
    fn table_requires_owner_singleton() {
        let owner = eid(9, 7);
        let err = TreeTable::from_entries(
            NodeId(9),
            vec![BrList::new(vec![eid(1, 1), owner]).unwrap()],
        )
        .unwrap_err();
        assert_eq!(err, ModelError::MissingOwnerEntry(NodeId(9)));
        let err = TreeTable::from_entries(NodeId(9), vec![BrList::singleton(eid(1, 1))])
            .unwrap_err();
        assert!(matches!(err, ModelError::ForeignBranch { .. }));
    }

    #[test]
    fn branch_order_refines_energy() {
        let wide = [eid(0, 1), eid(1, 8), eid(9, 3)];
        let narrow = [eid(0, 1), eid(2, 2), eid(9, 3)];
        assert_eq!(compare_branches(&wide, &narrow), Ordering::Greater);
        // Same multiset, shorter wins.
        let direct = [eid(0, 1), eid(9, 3)];
        let detour = [eid(0, 1), eid(1, 8), eid(9, 3)];
        assert_eq!(compare_branches(&direct, &detour), Ordering::Greater);
        // Same multiset and length, lower ids first.
        let lo = [eid(0, 1), eid(1, 5), eid(2, 5), eid(9, 3)];
        let hi = [eid(0, 1), eid(2, 5), eid(1, 5), eid(9, 3)];
        assert_eq!(compare_branches(&lo, &hi), Ordering::Greater);
        assert_eq!(compare_branches(&lo, &lo), Ordering::Equal);
    }

    #[test]
    fn selection_key_chain() {
        let base = SelectionKey {
            coverage: 5,
            energy: j(7),
            depth: 3,
            root_energy: Energy::from_joules(9),
            root: NodeId(4),
        };
        assert!(SelectionKey { coverage: 6, energy: j(1), ..base } > base);
        assert!(SelectionKey { energy: j(8), depth: 9, ..base } > base);
        assert!(SelectionKey { depth: 2, root_energy: Energy::ZERO, ..base } > base);
        assert!(SelectionKey { root_energy: Energy::from_joules(10), ..base } > base);
        assert!(SelectionKey { root: NodeId(3), ..base } > base);
        assert_eq!(base.cmp(&base), Ordering::Equal);
    }

    #[test]
    fn branch_energy_serde() {
        assert_eq!(serde_json::to_string(&j(7)).unwrap(), "7000");
        assert_eq!(
            serde_json::to_string(&BranchEnergy::Infinite).unwrap(),
            "\"inf\""
        );
        let back: BranchEnergy = serde_json::from_str("\"inf\"").unwrap();
        assert_eq!(back, BranchEnergy::Infinite);
        assert!(serde_json::from_str::<BranchEnergy>("\"nope\"").is_err());
    }
}
