use std::path::PathBuf;

use clap::Args;
use dlmt_core::oracle::{brute_force_dlmt, oracle_dlmt, SourceGraph, BRUTE_FORCE_LIMIT};
use dlmt_core::sim::{generate_topology, LatencyRange, Scenario};
use dlmt_core::{BranchEnergy, NodeId};
use log::info;
use rayon::prelude::*;
use serde::Serialize;

use crate::{emit, exit, Failure, TopologyFlags};

#[derive(Debug, Args)]
pub struct BatchArgs {
    #[command(flatten)]
    topology: TopologyFlags,
    #[arg(long, default_value_t = 0)]
    seed_start: u64,
    #[arg(long, default_value_t = 100)]
    count: u64,
    #[arg(long, default_value_t = 0.0)]
    loss: f64,
    /// Seconds.
    #[arg(long, default_value_t = 0.001)]
    latency_min: f64,
    /// Seconds.
    #[arg(long, default_value_t = 0.010)]
    latency_max: f64,
    /// Simulated seconds per run.
    #[arg(long, default_value_t = 600.0)]
    duration: f64,
    /// Worker threads; rayon's default when omitted.
    #[arg(long)]
    jobs: Option<usize>,
    /// CSV output; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
struct BatchRow {
    seed: u64,
    /// `ok`, or why the run produced no protocol result.
    status: String,
    nodes: usize,
    links: usize,
    converged: bool,
    convergence_time: Option<f64>,
    control_messages: u64,
    hello_messages: u64,
    total_bytes: u64,
    protocol_root: Option<NodeId>,
    protocol_tree_energy: Option<BranchEnergy>,
    oracle_root: Option<NodeId>,
    oracle_tree_energy: Option<BranchEnergy>,
    matches_oracle: bool,
    /// Empty when the graph is too large to enumerate.
    brute_force_agrees: Option<bool>,
}

impl BatchRow {
    fn failed(seed: u64, status: String) -> BatchRow {
        BatchRow {
            seed,
            status,
            nodes: 0,
            links: 0,
            converged: false,
            convergence_time: None,
            control_messages: 0,
            hello_messages: 0,
            total_bytes: 0,
            protocol_root: None,
            protocol_tree_energy: None,
            oracle_root: None,
            oracle_tree_energy: None,
            matches_oracle: false,
            brute_force_agrees: None,
        }
    }
}

fn one_run(args: &BatchArgs, seed: u64) -> BatchRow {
    let params = match args.topology.params() {
        Ok(p) => p,
        Err(f) => return BatchRow::failed(seed, f.message),
    };
    let topology = match generate_topology(&params, seed) {
        Ok(t) => t,
        Err(e) => return BatchRow::failed(seed, e.to_string()),
    };
    let mut scenario = Scenario::new(topology.clone(), seed);
    scenario.loss_probability = args.loss;
    scenario.latency = LatencyRange {
        min: args.latency_min,
        max: args.latency_max,
    };
    scenario.duration = args.duration;
    let m = match dlmt_core::sim::run(scenario) {
        Ok(o) => o.metrics,
        Err(e) => return BatchRow::failed(seed, e.to_string()),
    };
    let graph = SourceGraph::from_topology(&topology, &Default::default());
    let oracle = oracle_dlmt(&graph).ok();
    let matches_oracle = m.converged
        && oracle.as_ref().is_some_and(|o| {
            m.final_root == Some(o.root)
                && m.final_tree_energy == Some(o.tree_energy)
                && m.final_parent_map == o.parent_map
        });
    let brute_force_agrees = (graph.len() <= BRUTE_FORCE_LIMIT).then(|| {
        match (brute_force_dlmt(&graph), &oracle) {
            (Ok(bf), Some(o)) => bf.root == o.root && bf.tree_energy == o.tree_energy,
            _ => false,
        }
    });
    BatchRow {
        seed,
        status: "ok".to_owned(),
        nodes: topology.nodes.len(),
        links: topology.links().len(),
        converged: m.converged,
        convergence_time: m.converged.then_some(m.convergence_time),
        control_messages: m.total_control_messages,
        hello_messages: m.total_hello_messages,
        total_bytes: m.total_bytes,
        protocol_root: m.final_root,
        protocol_tree_energy: m.final_tree_energy,
        oracle_root: oracle.as_ref().map(|o| o.root),
        oracle_tree_energy: oracle.as_ref().map(|o| o.tree_energy),
        matches_oracle,
        brute_force_agrees,
    }
}

/// Exits with the non-convergence code if any run failed to converge.
pub fn cmd_batch(args: &BatchArgs) -> Result<(), Failure> {
    args.topology.params()?;
    let end = args
        .seed_start
        .checked_add(args.count)
        .ok_or_else(|| Failure::usage("--seed-start + --count overflows"))?;
    let pool = {
        let mut b = rayon::ThreadPoolBuilder::new();
        if let Some(j) = args.jobs {
            b = b.num_threads(j);
        }
        b.build().map_err(|e| Failure::usage(e.to_string()))?
    };
    let rows: Vec<BatchRow> = pool.install(|| (args.seed_start..end).into_par_iter().map(|s| one_run(args, s)).collect());
    let stuck = rows.iter().filter(|r| !r.converged).count();
    info!("{} runs, {} did not converge", rows.len(), stuck);
    emit(args.out.as_deref(), |out| {
        let mut w = csv::Writer::from_writer(out);
        for r in &rows {
            w.serialize(r)?;
        }
        w.flush()
    })?;
    if stuck > 0 {
        return Err(Failure {
            code: exit::NO_CONVERGENCE,
            message: format!("{stuck} of {} runs did not converge", rows.len()),
        });
    }
    Ok(())
}
