//! Discrete-event harness: topologies, scenarios, the event loop and its
//! observables.

mod convergence;
mod engine;
mod scenario;
mod topology;
mod trace;

pub use convergence::{check_convergence, has_parent_cycle, parent_cycle, ConvergenceReport};
pub use engine::{run, RunMetrics, RunOutcome, SimError, Simulation, StepResult};
pub use scenario::{EnergyModel, Kill, LatencyRange, Scenario, ScenarioError};
pub use topology::{
    generate_topology, GenerationError, GeneratorParams, Topology, TopologyError, TopologyNode,
};
pub use trace::{to_ndjson, write_ndjson, TraceKind, TraceRecord};
