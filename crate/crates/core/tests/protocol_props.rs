mod common;

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};

use dlmt_core::sim::{Simulation, StepResult};
use dlmt_core::{BrList, NodeId};
use proptest::prelude::*;

use common::{family_topology, lossless};

struct NodeWatch {
    restart: bool,
    best: BTreeMap<NodeId, BrList>,
}

fn lossy_sim(seed: u64, loss: f64, latency_max: f64) -> (Simulation, BTreeSet<(NodeId, NodeId)>) {
    let topology = family_topology(seed);
    let links = topology
        .links()
        .into_iter()
        .flat_map(|(a, b)| [(a, b), (b, a)])
        .collect();
    let mut scenario = lossless(topology, seed);
    scenario.loss_probability = loss;
    scenario.latency.min = 0.0;
    scenario.latency.max = latency_max;
    scenario.duration = 200.0;
    (Simulation::new(scenario).unwrap(), links)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(150))]

    #[test]
    fn stored_branches_stay_valid_and_only_improve(
        seed in 0u64..50_000,
        loss in 0.0f64..0.4,
        latency_max in 0.002f64..0.3,
    ) {
        let (mut sim, links) = lossy_sim(seed, loss, latency_max);
        let mut watch: BTreeMap<NodeId, NodeWatch> = BTreeMap::new();
        while sim.step().unwrap() == StepResult::Processed {
            for state in sim.live_states() {
                let me = state.id();
                let w = watch.entry(me).or_insert_with(|| NodeWatch {
                    restart: state.restart_flag(),
                    best: BTreeMap::new(),
                });
                // A false -> true flip is a re-init and opens a new epoch.
                if !w.restart && state.restart_flag() {
                    w.best.clear();
                }
                w.restart = state.restart_flag();
                for entry in state.tree().entries() {
                    prop_assert_eq!(entry.holder(), me);
                    for hop in entry.path().windows(2) {
                        prop_assert!(links.contains(&(hop[0].node, hop[1].node)));
                    }
                    if let Some(prev) = w.best.get(&entry.initiator()) {
                        prop_assert_ne!(entry.rank_cmp(prev), Ordering::Less);
                    }
                    w.best.insert(entry.initiator(), entry.clone());
                }
                for known in w.best.keys() {
                    prop_assert!(state.tree().get(*known).is_some());
                }
            }
        }
    }
}
