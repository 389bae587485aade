mod common;

use std::collections::BTreeSet;

use common::{family_topology, lossless};
use dlmt_core::oracle::{oracle_dlmt, SourceGraph};
use dlmt_core::sim::{
    check_convergence, generate_topology, run, GeneratorParams, Kill, Scenario, Simulation,
    StepResult, Topology, TopologyNode,
};
use dlmt_core::{BranchEnergy, Energy, NodeId};

fn node(id: u16, x: f64, joules: u32) -> TopologyNode {
    TopologyNode {
        id: NodeId(id),
        x,
        y: 0.0,
        initial_energy: Energy::from_joules(joules),
        is_source: true,
    }
}

fn path3() -> Topology {
    Topology::new(vec![node(0, 0.0, 3), node(1, 10.0, 7), node(2, 20.0, 5)], 12.0).unwrap()
}

#[test]
fn single_source_converges_immediately() {
    let t = Topology::new(vec![node(4, 0.0, 10)], 5.0).unwrap();
    let out = run(Scenario::new(t, 0)).unwrap();
    let m = &out.metrics;
    assert!(m.converged);
    assert_eq!(m.final_root, Some(NodeId(4)));
    assert_eq!(m.final_tree_energy, Some(BranchEnergy::Infinite));
    assert_eq!(m.total_control_messages, 1);
}

#[test]
fn path_elects_the_middle() {
    let out = run(Scenario::new(path3(), 1)).unwrap();
    assert!(out.metrics.converged);
    assert_eq!(out.metrics.final_root, Some(NodeId(1)));
    assert_eq!(
        out.metrics.final_tree_energy,
        Some(BranchEnergy::Finite(Energy::from_joules(7)))
    );
}

#[test]
fn killed_root_is_replaced() {
    // 3 sits above the middle node and links both ends once it is gone.
    let mut above = node(3, 10.0, 6);
    above.y = 8.0;
    let t = Topology::new(vec![node(0, 0.0, 3), node(1, 10.0, 7), node(2, 20.0, 5), above], 13.0)
        .unwrap();
    let all = SourceGraph::from_topology(&t, &BTreeSet::new());
    assert_eq!(oracle_dlmt(&all).unwrap().root, NodeId(1));
    let survivors = SourceGraph::from_topology(&t, &BTreeSet::from([NodeId(1)]));
    let expected = oracle_dlmt(&survivors).unwrap();
    assert_eq!(expected.root, NodeId(3));

    let mut s = Scenario::new(t, 2);
    s.kill_schedule = vec![Kill { time: 100.0, node: NodeId(1) }];
    let out = run(s).unwrap();
    let m = &out.metrics;
    assert!(m.restarts_triggered >= 1);
    assert!(m.converged);
    assert_eq!(m.final_root, Some(NodeId(3)));
    assert_eq!(m.final_parent_map, expected.parent_map);
    assert_eq!(m.per_node_residual_energy[&NodeId(1)], 0.0);
}

#[test]
fn converged_state_is_replay_stable() {
    for seed in 0..50 {
        let mut sim = Simulation::new(lossless(family_topology(seed), seed)).unwrap();
        while sim.step().unwrap() == StepResult::Processed {}
        assert!(sim.convergence().converged, "seed {seed}");
        assert!(sim.replay_unstable().is_empty(), "seed {seed}: {:?}", sim.replay_unstable());
    }
}

#[test]
fn disagreement_names_the_odd_node() {
    let mut sim = Simulation::new(lossless(path3(), 0)).unwrap();
    // Before any delivery every node endorses only itself.
    let r = sim.convergence();
    assert!(!r.converged);
    assert_eq!(r.disagreeing.len(), 2);
    while sim.step().unwrap() == StepResult::Processed {}
    assert!(check_convergence(sim.live_states()).converged);
}

#[test]
fn complete_graph_generation() {
    let p = GeneratorParams {
        node_count: 20,
        area_side: 100.0,
        transmission_range: 150.0,
        ..GeneratorParams::default()
    };
    let t = generate_topology(&p, 5).unwrap();
    assert!(t.adjacency.values().all(|ns| ns.len() == 19));
}

#[test]
fn energy_costs_drain_and_kill() {
    let mut s = Scenario::new(path3(), 3);
    s.energy_model.tx_cost_per_byte = 0.01;
    s.energy_model.rx_cost_per_byte = 0.01;
    let out = run(s).unwrap();
    let m = &out.metrics;
    assert!(m.deaths >= 1);
    assert!(m.per_node_residual_energy.values().any(|&e| e == 0.0));
    let traced = out.trace.iter().filter(|r| r.kind == dlmt_core::sim::TraceKind::Death).count();
    assert_eq!(traced as u64, m.deaths);
}

#[test]
fn non_sources_relay_nothing() {
    let mut t = path3();
    t.nodes[1].is_source = false;
    t.validate().unwrap();
    let out = run(Scenario::new(t, 0)).unwrap();
    // With the middle node silent the two ends never hear each other.
    assert!(!out.metrics.converged);
}
