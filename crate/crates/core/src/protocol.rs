//! Per-node protocol state machine.
//!
//! Every source floods its branch list, extends received branches with its
//! own Eid, keeps the best branch per initiator, and endorses the best tree it
//! has seen so far. A periodic timer drives hello beacons from the root and
//! detects lost parents.
//!
//! All transitions are synchronous `(state, input) -> output` steps; the
//! caller owns delivery, timers and the clock.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{BrList, DlmtSelection, Eid, Energy, NodeId, TreeTable};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProtocolError {
    #[error("node {0} has no residual energy")]
    DeadNode(NodeId),
    #[error("node {0} received its own control message")]
    SelfMessage(NodeId),
    #[error("selection held by {0} has no branch for it")]
    InconsistentSelection(NodeId),
    #[error("invalid maintenance config: {0}")]
    InvalidConfig(&'static str),
}

/// Maintenance timer settings, in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaintenanceConfig {
    /// Period `T` of the maintenance timer.
    pub hello_period: f64,
    /// Parent silence `Tf` after which a node rebuilds.
    pub parent_timeout: f64,
}

impl Default for MaintenanceConfig {
    fn default() -> Self {
        MaintenanceConfig {
            hello_period: 25.0,
            parent_timeout: 50.0,
        }
    }
}

impl MaintenanceConfig {
    // Negated comparisons so NaN is rejected as well.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<(), ProtocolError> {
        if !(self.hello_period > 0.0) {
            return Err(ProtocolError::InvalidConfig("hello_period must be positive"));
        }
        if !(self.parent_timeout >= self.hello_period) {
            return Err(ProtocolError::InvalidConfig(
                "parent_timeout must be at least hello_period",
            ));
        }
        Ok(())
    }
}

/// `[restart, tree, dlmt]` as broadcast by `sender`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ControlMessage {
    pub sender: Eid,
    pub restart: bool,
    pub tree: TreeTable,
    pub dlmt: DlmtSelection,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct HelloMessage {
    pub sender: NodeId,
    pub root: NodeId,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Broadcast {
    Control(ControlMessage),
    Hello(HelloMessage),
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct NodeOutput {
    /// Single-hop broadcasts to hand to the medium.
    pub broadcasts: Vec<Broadcast>,
    pub state_changed: bool,
    /// The maintenance timer should be restarted to `now + T`.
    pub rearm_timer: bool,
    /// The node reset itself to singleton state during this step.
    pub reinitialized: bool,
}

/// Work counters for one `handle_control_message` call.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct ProcessingStats {
    /// Branch lists of the received tree examined.
    pub brlist_scans: u64,
    /// Entries of local tables looked up or visited.
    pub table_probes: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NodeState {
    me: Eid,
    tree: TreeTable,
    dlmt: DlmtSelection,
    restart_flag: bool,
    last_parent_hello: f64,
    config: MaintenanceConfig,
    alive: bool,
    stats: ProcessingStats,
    /// Newest snapshot seen of each other root's table.
    latest: BTreeMap<NodeId, DlmtSelection>,
    /// Newest snapshot of each other root's table this node has broadcast.
    announced: BTreeMap<NodeId, TreeTable>,
}

/// Builds the singleton state and the initial broadcast for a source.
pub fn init_node(
    id: NodeId,
    energy: Energy,
    config: MaintenanceConfig,
) -> Result<(NodeState, NodeOutput), ProtocolError> {
    if energy.is_dead() {
        return Err(ProtocolError::DeadNode(id));
    }
    config.validate()?;
    let me = Eid::new(id, energy);
    let tree = TreeTable::new(me);
    let state = NodeState {
        me,
        dlmt: DlmtSelection::from_tree(tree.clone()),
        tree,
        restart_flag: true,
        last_parent_hello: 0.0,
        config,
        alive: true,
        stats: ProcessingStats::default(),
        latest: BTreeMap::new(),
        announced: BTreeMap::new(),
    };
    let out = NodeOutput {
        broadcasts: vec![Broadcast::Control(state.control_message())],
        state_changed: true,
        rearm_timer: true,
        reinitialized: false,
    };
    Ok((state, out))
}

/// Whether `candidate` should replace `incumbent` as the endorsed tree.
///
/// Trees with different roots are ranked by the
/// [`SelectionKey`](crate::model::SelectionKey) chain. Two snapshots of the
/// same root's table are ranked by recency instead: the root only ever holds
/// its latest one, so an older snapshot cannot be realized even when its key
/// looks better.
pub fn best_tree(candidate: &DlmtSelection, incumbent: &DlmtSelection) -> bool {
    if candidate.root() == incumbent.root() {
        return candidate.tree().version_cmp(incumbent.tree()) == Ordering::Greater;
    }
    candidate.key() > incumbent.key()
}

impl NodeState {
    pub fn me(&self) -> Eid {
        self.me
    }

    pub fn id(&self) -> NodeId {
        self.me.node
    }

    pub fn tree(&self) -> &TreeTable {
        &self.tree
    }

    pub fn dlmt(&self) -> &DlmtSelection {
        &self.dlmt
    }

    pub fn restart_flag(&self) -> bool {
        self.restart_flag
    }

    pub fn last_parent_hello(&self) -> f64 {
        self.last_parent_hello
    }

    pub fn config(&self) -> MaintenanceConfig {
        self.config
    }

    pub fn alive(&self) -> bool {
        self.alive
    }

    /// Counters recorded by the most recent control message.
    pub fn last_stats(&self) -> ProcessingStats {
        self.stats
    }

    pub fn is_root(&self) -> bool {
        self.dlmt.root() == self.me.node
    }

    /// Marks the node dead; it ignores every later input.
    pub fn kill(&mut self) {
        self.alive = false;
    }

    /// The control message this node would broadcast now.
    pub fn control_message(&self) -> ControlMessage {
        ControlMessage {
            sender: self.me,
            restart: self.restart_flag,
            tree: self.tree.clone(),
            dlmt: self.dlmt.clone(),
        }
    }

    fn reinitialize(&mut self, now: f64) {
        self.tree = TreeTable::new(self.me);
        self.dlmt = DlmtSelection::from_tree(self.tree.clone());
        self.restart_flag = true;
        self.last_parent_hello = now;
        self.latest.clear();
        self.announced.clear();
    }

    /// Records `table` as the newest snapshot of its owner's table unless a
    /// newer one is already known. Tables rooted here are ignored: the live
    /// own table supersedes them.
    fn remember(&mut self, table: &TreeTable, probes: &mut u64) {
        let root = table.owner();
        if root == self.me.node {
            return;
        }
        *probes += table.len() as u64;
        let newer = match self.latest.get(&root) {
            None => true,
            Some(seen) => table.version_cmp(seen.tree()) == Ordering::Greater,
        };
        if newer {
            self.latest.insert(root, DlmtSelection::from_tree(table.clone()));
        }
    }

    /// Loop check for a received branch (which must not contain this node).
    ///
    /// Branches of at most two Eids are always accepted. Otherwise the part
    /// after the initiator, extended by this node, must equal Eid-for-Eid the
    /// branch already stored for its first node; a missing stored branch
    /// rejects.
    pub fn no_loop(&self, candidate: &BrList) -> bool {
        let mut probes = 0;
        self.no_loop_counted(candidate, &mut probes)
    }

    fn no_loop_counted(&self, candidate: &BrList, probes: &mut u64) -> bool {
        let rest = &candidate.path()[1..];
        if rest.len() < 2 {
            return true;
        }
        *probes += 1;
        match self.tree.get(rest[0].node) {
            Some(stored) => {
                let path = stored.path();
                path.len() == rest.len() + 1
                    && path[..rest.len()] == *rest
                    && path[rest.len()] == self.me
            }
            None => false,
        }
    }

    /// Next hop toward the endorsed root, `None` at the root itself.
    pub fn parent_of(&self) -> Result<Option<NodeId>, ProtocolError> {
        if self.is_root() {
            return Ok(None);
        }
        self.dlmt
            .tree()
            .get(self.me.node)
            .and_then(|br| br.path().get(1))
            .map(|eid| Some(eid.node))
            .ok_or(ProtocolError::InconsistentSelection(self.me.node))
    }

    pub fn handle_control_message(
        &mut self,
        msg: &ControlMessage,
        now: f64,
    ) -> Result<NodeOutput, ProtocolError> {
        if !self.alive {
            return Ok(NodeOutput::default());
        }
        if msg.sender.node == self.me.node {
            return Err(ProtocolError::SelfMessage(self.me.node));
        }
        let mut stats = ProcessingStats::default();
        let mut out = NodeOutput {
            rearm_timer: true,
            ..NodeOutput::default()
        };
        let mut tree_changed = false;
        let mut dlmt_changed = false;

        if msg.restart && !self.restart_flag {
            self.reinitialize(now);
            out.reinitialized = true;
            tree_changed = true;
        }

        // Shorter branches first so that a relayed prefix is stored before
        // the longer branches whose loop check depends on it.
        let mut incoming: Vec<&BrList> = msg.tree.entries().collect();
        incoming.sort_by_key(|br| (br.len(), br.initiator()));

        for br in incoming {
            stats.brlist_scans += 1;
            if br.contains(self.me.node) {
                continue;
            }
            if !self.no_loop_counted(br, &mut stats.table_probes) {
                continue;
            }
            let candidate = match br.extended(self.me) {
                Ok(c) => c,
                Err(_) => continue,
            };
            stats.table_probes += 1;
            let accept = match self.tree.get(candidate.initiator()) {
                None => true,
                Some(stored) => candidate.rank_cmp(stored) == Ordering::Greater,
            };
            if accept {
                stats.table_probes += self.tree.upsert(candidate) as u64;
                tree_changed = true;
            }
        }

        // The sender's own table and the selection it endorses are both
        // snapshots of some root's table.
        self.remember(&msg.tree, &mut stats.table_probes);
        self.remember(msg.dlmt.tree(), &mut stats.table_probes);

        // Endorse the best of the live own table and the newest snapshot of
        // every other root.
        let own = DlmtSelection::from_tree(self.tree.clone());
        stats.table_probes += own.coverage() as u64;
        let mut pick: Option<&DlmtSelection> = None;
        for cand in self.latest.values() {
            stats.table_probes += 1;
            if best_tree(cand, pick.unwrap_or(&own)) {
                pick = Some(cand);
            }
        }
        let best = pick.cloned().unwrap_or(own);
        if best != self.dlmt {
            self.dlmt = best;
            dlmt_changed = true;
        }

        // Whoever received an older snapshot of some root from this node
        // must also hear the newer one, even though it is no longer endorsed
        // here.
        let current = self.dlmt.root();
        let mut refresh = Vec::new();
        for (root, seen) in &self.latest {
            stats.table_probes += 1;
            if *root == current {
                continue;
            }
            if let Some(sent) = self.announced.get(root) {
                stats.table_probes += seen.coverage() as u64;
                if seen.tree().version_cmp(sent) == Ordering::Greater {
                    refresh.push(seen.clone());
                }
            }
        }
        for dlmt in refresh {
            self.announced.insert(dlmt.root(), dlmt.tree().clone());
            out.broadcasts.push(Broadcast::Control(ControlMessage {
                sender: self.me,
                restart: self.restart_flag,
                tree: self.tree.clone(),
                dlmt,
            }));
        }

        if tree_changed || dlmt_changed {
            self.last_parent_hello = now;
            out.state_changed = true;
            if current != self.me.node {
                self.announced.insert(current, self.dlmt.tree().clone());
            }
            out.broadcasts.push(Broadcast::Control(self.control_message()));
        }
        self.stats = stats;
        Ok(out)
    }

    pub fn on_timer_expiry(&mut self, now: f64) -> NodeOutput {
        if !self.alive {
            return NodeOutput::default();
        }
        let mut out = NodeOutput {
            rearm_timer: true,
            ..NodeOutput::default()
        };
        if self.restart_flag {
            self.restart_flag = false;
            out.state_changed = true;
        }
        if self.is_root() {
            out.broadcasts.push(Broadcast::Hello(HelloMessage {
                sender: self.me.node,
                root: self.me.node,
            }));
        } else if now > self.last_parent_hello + self.config.parent_timeout {
            self.reinitialize(now);
            out.reinitialized = true;
            out.state_changed = true;
            out.broadcasts.push(Broadcast::Control(self.control_message()));
        }
        out
    }

    pub fn handle_hello(&mut self, hello: &HelloMessage, now: f64) -> NodeOutput {
        if !self.alive {
            return NodeOutput::default();
        }
        // A selection that does not cover this node yet has no parent.
        match self.parent_of() {
            Ok(Some(parent)) if parent == hello.sender => {
                self.last_parent_hello = now;
                NodeOutput {
                    broadcasts: vec![Broadcast::Hello(HelloMessage {
                        sender: self.me.node,
                        root: self.dlmt.root(),
                    })],
                    state_changed: true,
                    ..NodeOutput::default()
                }
            }
            _ => NodeOutput::default(),
        }
    }

    /// Test hook: state with an arbitrary table and selection.
    #[doc(hidden)]
    pub fn with_parts(
        me: Eid,
        tree: TreeTable,
        dlmt: DlmtSelection,
        restart_flag: bool,
        last_parent_hello: f64,
        config: MaintenanceConfig,
    ) -> NodeState {
        NodeState {
            me,
            tree,
            dlmt,
            restart_flag,
            last_parent_hello,
            config,
            alive: true,
            stats: ProcessingStats::default(),
            latest: BTreeMap::new(),
            announced: BTreeMap::new(),
        }
    }
}
