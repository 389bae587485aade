//! Decentralized lifetime-minimizing aggregation trees (DLMT) for event-driven
//! sensor networks.
//!
//! * [`model`]: branch lists, tree tables and the ordering used to rank them.
//! * [`protocol`]: the per-node state machine.
//! * [`wire`]: the binary packet format.
//! * [`sim`]: a deterministic discrete-event harness.
//! * [`oracle`]: centralized optimum and comparison baselines.

pub mod model;
pub mod oracle;
pub mod protocol;
pub mod sim;
pub mod wire;

pub use model::{
    branch_energy, compare_branches, tree_depth, tree_energy, BrList, BranchEnergy, DlmtSelection,
    Eid, Energy, ModelError, NodeId, SelectionKey, TreeTable,
};
pub use protocol::{
    best_tree, init_node, Broadcast, ControlMessage, HelloMessage, MaintenanceConfig, NodeOutput,
    NodeState, ProcessingStats, ProtocolError,
};
