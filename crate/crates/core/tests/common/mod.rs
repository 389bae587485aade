#![allow(dead_code)]

use std::collections::BTreeSet;

use dlmt_core::oracle::SourceGraph;
use dlmt_core::sim::{generate_topology, GeneratorParams, Scenario, Topology};
use dlmt_core::Energy;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Connected unit-disk topology with 2..=8 nodes, all sources, energies in
/// [1, 10] J.
pub fn family_topology(seed: u64) -> Topology {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x005e_ed0f_fa11);
    let params = GeneratorParams {
        node_count: rng.random_range(2..=8),
        area_side: 100.0,
        transmission_range: rng.random_range(35.0..=90.0),
        energy_min: Energy::from_joules(1),
        energy_max: Energy::from_joules(10),
        source_count: None,
        max_attempts: 10_000,
    };
    generate_topology(&params, seed).expect("family parameters always admit a connected draw")
}

pub fn family_graph(seed: u64) -> SourceGraph {
    SourceGraph::from_topology(&family_topology(seed), &BTreeSet::new())
}

pub fn lossless(topology: Topology, seed: u64) -> Scenario {
    Scenario::new(topology, seed)
}

use std::collections::BTreeMap;

use dlmt_core::{BrList, ControlMessage, DlmtSelection, Eid, NodeId, TreeTable};
use rand::seq::{IndexedRandom, SliceRandom};

/// Random valid table owned by `owner`: a random subset of the other ids,
/// each with a random simple path ending at the owner.
pub fn random_table<R: Rng>(rng: &mut R, owner: NodeId, energies: &BTreeMap<NodeId, Energy>) -> TreeTable {
    let eid = |n: NodeId| Eid::new(n, energies[&n]);
    let others: Vec<NodeId> = energies.keys().copied().filter(|&n| n != owner).collect();
    let mut entries = vec![BrList::singleton(eid(owner))];
    for &init in &others {
        if !rng.random_bool(0.7) {
            continue;
        }
        let mut pool: Vec<NodeId> = others.iter().copied().filter(|&n| n != init).collect();
        pool.shuffle(rng);
        let hops = rng.random_range(0..=pool.len().min(5));
        let mut path = vec![eid(init)];
        path.extend(pool[..hops].iter().map(|&n| eid(n)));
        path.push(eid(owner));
        entries.push(BrList::new(path).unwrap());
    }
    TreeTable::from_entries(owner, entries).unwrap()
}

pub fn random_energies<R: Rng>(rng: &mut R, n: usize) -> BTreeMap<NodeId, Energy> {
    let mut ids: Vec<u16> = (0..u16::MAX).step_by(97).collect();
    ids.shuffle(rng);
    ids[..n]
        .iter()
        .map(|&i| (NodeId(i), Energy::from_millijoules(rng.random_range(1..=u32::MAX))))
        .collect()
}

pub fn random_control<R: Rng>(rng: &mut R) -> ControlMessage {
    let n = rng.random_range(1..=12);
    let energies = random_energies(rng, n);
    let ids: Vec<NodeId> = energies.keys().copied().collect();
    let sender = *ids.choose(rng).unwrap();
    let root = *ids.choose(rng).unwrap();
    ControlMessage {
        sender: Eid::new(sender, energies[&sender]),
        restart: rng.random_bool(0.5),
        tree: random_table(rng, sender, &energies),
        dlmt: DlmtSelection::from_tree(random_table(rng, root, &energies)),
    }
}
