//! Benchmark fixtures: connected random topologies sized by node count,
//! with a range that keeps the expected degree roughly constant.

use dlmt_core::sim::{generate_topology, GeneratorParams, Scenario, Simulation, Topology};
use dlmt_core::{ControlMessage, Energy};

pub fn topology(nodes: usize, seed: u64) -> Topology {
    let params = GeneratorParams {
        node_count: nodes,
        area_side: 100.0,
        transmission_range: (100.0 * (4.0 / nodes as f64).sqrt()).max(25.0),
        energy_min: Energy::from_joules(1),
        energy_max: Energy::from_joules(10),
        source_count: None,
        max_attempts: 100_000,
    };
    generate_topology(&params, seed).expect("fixture parameters admit a connected draw")
}

pub fn scenario(nodes: usize, seed: u64) -> Scenario {
    Scenario::new(topology(nodes, seed), seed)
}

/// The control message a node broadcasts once the network has converged,
/// carrying a full tree table.
pub fn converged_message(nodes: usize, seed: u64) -> ControlMessage {
    let sim = {
        let mut sim = Simulation::new(scenario(nodes, seed)).expect("fixture scenario is valid");
        while sim.step().expect("protocol step") == dlmt_core::sim::StepResult::Processed {}
        sim
    };
    sim.live_states()
        .max_by_key(|s| s.tree().len())
        .expect("at least one node")
        .control_message()
}
