use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;
use thiserror::Error;

use super::convergence::{check_convergence, ConvergenceReport};
use super::scenario::{Scenario, ScenarioError};
use super::trace::{TraceKind, TraceRecord};
use crate::model::{BranchEnergy, NodeId};
use crate::protocol::{
    init_node, Broadcast, ControlMessage, HelloMessage, NodeOutput, NodeState, ProcessingStats,
    ProtocolError,
};
use crate::wire::{control_len, HELLO_LEN};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
}

#[derive(Debug, Clone)]
enum EventKind {
    Control(Arc<ControlMessage>),
    Hello(HelloMessage),
    Timer { generation: u64 },
    Death { scheduled: bool },
}

#[derive(Debug)]
struct Queued {
    time: f64,
    seq: u64,
    node: NodeId,
    kind: EventKind,
}

impl PartialEq for Queued {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Queued {}

impl PartialOrd for Queued {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Queued {
    // Min-heap on (time, seq).
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .time
            .total_cmp(&self.time)
            .then(other.seq.cmp(&self.seq))
    }
}

#[derive(Debug, Clone)]
struct SimNode {
    is_source: bool,
    residual: f64,
    alive: bool,
    timer_generation: u64,
    state: Option<NodeState>,
    last_control: Option<(Arc<ControlMessage>, f64)>,
}

/// Summary of one run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunMetrics {
    pub converged: bool,
    /// Time of the last control broadcast.
    pub convergence_time: f64,
    pub end_time: f64,
    pub total_control_messages: u64,
    pub total_hello_messages: u64,
    pub total_bytes: u64,
    pub timer_events: u64,
    pub deaths: u64,
    pub restarts_triggered: u64,
    pub final_root: Option<NodeId>,
    pub final_tree_energy: Option<BranchEnergy>,
    pub final_parent_map: BTreeMap<NodeId, NodeId>,
    /// Residual energy in joules, for every topology node.
    pub per_node_residual_energy: BTreeMap<NodeId, f64>,
    pub max_brlist_scans: u64,
    pub max_table_probes: u64,
    pub disagreeing_nodes: Vec<NodeId>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub metrics: RunMetrics,
    pub trace: Vec<TraceRecord>,
}

/// What [`Simulation::step`] did.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepResult {
    /// One event was processed.
    Processed,
    /// Nothing left to do, or quiescence was reached.
    Finished,
}

/// Discrete-event simulation of the protocol over a broadcast medium.
///
/// Events are ordered by `(time, insertion order)`, and all randomness comes
/// from one ChaCha8 stream seeded from the scenario, so a scenario always
/// produces the same trace.
pub struct Simulation {
    scenario: Scenario,
    rng: ChaCha8Rng,
    now: f64,
    seq: u64,
    queue: BinaryHeap<Queued>,
    nodes: BTreeMap<NodeId, SimNode>,
    neighbors: BTreeMap<NodeId, Vec<NodeId>>,
    trace: Vec<TraceRecord>,
    pending_control: usize,
    pending_kills: usize,
    last_control_sent: f64,
    metrics: RunMetrics,
    finished: bool,
}

impl Simulation {
    pub fn new(mut scenario: Scenario) -> Result<Self, SimError> {
        scenario.validate()?;
        let rng = ChaCha8Rng::seed_from_u64(scenario.seed);
        let nodes: BTreeMap<NodeId, SimNode> = scenario
            .topology
            .nodes
            .iter()
            .map(|n| {
                (
                    n.id,
                    SimNode {
                        is_source: n.is_source,
                        residual: n.initial_energy.joules(),
                        alive: !n.initial_energy.is_dead(),
                        timer_generation: 0,
                        state: None,
                        last_control: None,
                    },
                )
            })
            .collect();
        let neighbors = scenario
            .topology
            .adjacency
            .iter()
            .map(|(&id, ns)| {
                let ns = ns.iter().copied().filter(|n| nodes[n].is_source).collect();
                (id, ns)
            })
            .collect();
        let metrics = RunMetrics {
            converged: false,
            convergence_time: 0.0,
            end_time: 0.0,
            total_control_messages: 0,
            total_hello_messages: 0,
            total_bytes: 0,
            timer_events: 0,
            deaths: 0,
            restarts_triggered: 0,
            final_root: None,
            final_tree_energy: None,
            final_parent_map: BTreeMap::new(),
            per_node_residual_energy: BTreeMap::new(),
            max_brlist_scans: 0,
            max_table_probes: 0,
            disagreeing_nodes: Vec::new(),
        };
        let mut sim = Simulation {
            scenario,
            rng,
            now: 0.0,
            seq: 0,
            queue: BinaryHeap::new(),
            nodes,
            neighbors,
            trace: Vec::new(),
            pending_control: 0,
            pending_kills: 0,
            last_control_sent: 0.0,
            metrics,
            finished: false,
        };
        sim.start()?;
        Ok(sim)
    }

    fn start(&mut self) -> Result<(), SimError> {
        let kills = self.scenario.kill_schedule.clone();
        for k in kills {
            self.pending_kills += 1;
            self.push(k.time, k.node, EventKind::Death { scheduled: true });
        }
        let cfg = self.scenario.maintenance;
        let sources: Vec<_> = self
            .scenario
            .topology
            .sources()
            .filter(|n| !n.initial_energy.is_dead())
            .map(|n| (n.id, n.initial_energy))
            .collect();
        for (id, energy) in sources {
            let (state, out) = init_node(id, energy, cfg)?;
            self.nodes.get_mut(&id).unwrap().state = Some(state);
            self.apply(id, out);
        }
        Ok(())
    }

    fn push(&mut self, time: f64, node: NodeId, kind: EventKind) {
        self.seq += 1;
        self.queue.push(Queued {
            time,
            seq: self.seq,
            node,
            kind,
        });
    }

    fn record(&mut self, kind: TraceKind, node: NodeId, detail: serde_json::Value) {
        self.trace.push(TraceRecord {
            time: self.now,
            kind,
            node,
            detail,
        });
    }

    /// Charges `joules` to `node`, scheduling its death when it runs dry.
    fn drain(&mut self, node: NodeId, joules: f64) {
        if joules <= 0.0 {
            return;
        }
        let n = self.nodes.get_mut(&node).unwrap();
        if !n.alive {
            return;
        }
        let before = n.residual;
        n.residual = (n.residual - joules).max(0.0);
        if before > 0.0 && n.residual <= 0.0 {
            self.push(self.now, node, EventKind::Death { scheduled: false });
        }
    }

    fn apply(&mut self, node: NodeId, out: NodeOutput) {
        if out.reinitialized {
            self.metrics.restarts_triggered += 1;
        }
        if out.rearm_timer {
            let n = self.nodes.get_mut(&node).unwrap();
            n.timer_generation += 1;
            let generation = n.timer_generation;
            self.push(
                self.now + self.scenario.maintenance.hello_period,
                node,
                EventKind::Timer { generation },
            );
        }
        for b in out.broadcasts {
            self.broadcast(node, b);
        }
    }

    fn broadcast(&mut self, from: NodeId, b: Broadcast) {
        let (bytes, kind) = match &b {
            Broadcast::Control(msg) => {
                let bytes = control_len(msg) as u64;
                self.metrics.total_control_messages += 1;
                self.last_control_sent = self.now;
                let detail = json!({
                    "bytes": bytes,
                    "restart": msg.restart,
                    "root": msg.dlmt.root(),
                    "entries": msg.tree.len(),
                });
                self.record(TraceKind::ControlSent, from, detail);
                (bytes, EventKind::Control(Arc::new(msg.clone())))
            }
            Broadcast::Hello(h) => {
                self.metrics.total_hello_messages += 1;
                let detail = json!({ "bytes": HELLO_LEN, "root": h.root });
                self.record(TraceKind::HelloSent, from, detail);
                (HELLO_LEN as u64, EventKind::Hello(*h))
            }
        };
        self.metrics.total_bytes += bytes;
        let tx = self.scenario.energy_model.tx_cost_per_byte * bytes as f64;
        self.drain(from, tx);

        let targets = self.neighbors.get(&from).cloned().unwrap_or_default();
        let loss = self.scenario.loss_probability;
        let lat = self.scenario.latency;
        for to in targets {
            if loss > 0.0 && self.rng.random::<f64>() < loss {
                continue;
            }
            let delay = if lat.max > lat.min {
                self.rng.random_range(lat.min..lat.max)
            } else {
                lat.min
            };
            if matches!(kind, EventKind::Control(_)) {
                self.pending_control += 1;
            }
            self.push(self.now + delay, to, kind.clone());
        }
    }

    fn receive_cost(&mut self, node: NodeId, bytes: u64) {
        let rx = self.scenario.energy_model.rx_cost_per_byte * bytes as f64;
        self.drain(node, rx);
    }

    fn quiescent(&self, next_time: f64) -> bool {
        self.pending_control == 0
            && self.pending_kills == 0
            && next_time >= self.last_control_sent + self.scenario.maintenance.hello_period
            && self.convergence().converged
    }

    /// Processes the next event. Returns [`StepResult::Finished`] once the
    /// queue is empty, the duration has elapsed, or the network is quiescent.
    pub fn step(&mut self) -> Result<StepResult, SimError> {
        if self.finished {
            return Ok(StepResult::Finished);
        }
        let next_time = match self.queue.peek() {
            None => {
                self.finish();
                return Ok(StepResult::Finished);
            }
            Some(ev) => ev.time,
        };
        if next_time > self.scenario.duration || self.quiescent(next_time) {
            self.finish();
            return Ok(StepResult::Finished);
        }
        let ev = self.queue.pop().unwrap();
        self.now = ev.time;
        let id = ev.node;
        match ev.kind {
            EventKind::Control(msg) => {
                self.pending_control -= 1;
                if !self.is_live_source(id) {
                    return Ok(StepResult::Processed);
                }
                self.receive_cost(id, control_len(&msg) as u64);
                let now = self.now;
                let n = self.nodes.get_mut(&id).unwrap();
                n.last_control = Some((Arc::clone(&msg), now));
                let state = n.state.as_mut().unwrap();
                let out = state.handle_control_message(&msg, now)?;
                let stats = state.last_stats();
                self.note_stats(stats);
                self.apply(id, out);
            }
            EventKind::Hello(h) => {
                if !self.is_live_source(id) {
                    return Ok(StepResult::Processed);
                }
                self.receive_cost(id, HELLO_LEN as u64);
                let now = self.now;
                let state = self.nodes.get_mut(&id).unwrap().state.as_mut().unwrap();
                let out = state.handle_hello(&h, now);
                self.apply(id, out);
            }
            EventKind::Timer { generation } => {
                let n = &self.nodes[&id];
                if !self.is_live_source(id) || n.timer_generation != generation {
                    return Ok(StepResult::Processed);
                }
                self.metrics.timer_events += 1;
                self.record(TraceKind::Timer, id, json!({}));
                let now = self.now;
                let state = self.nodes.get_mut(&id).unwrap().state.as_mut().unwrap();
                let out = state.on_timer_expiry(now);
                self.apply(id, out);
            }
            EventKind::Death { scheduled } => {
                if scheduled {
                    self.pending_kills -= 1;
                }
                let n = self.nodes.get_mut(&id).unwrap();
                if n.alive {
                    n.alive = false;
                    n.residual = 0.0;
                    if let Some(s) = n.state.as_mut() {
                        s.kill();
                    }
                    self.metrics.deaths += 1;
                    let cause = if scheduled { "scheduled" } else { "depleted" };
                    self.record(TraceKind::Death, id, json!({ "cause": cause }));
                }
            }
        }
        Ok(StepResult::Processed)
    }

    fn note_stats(&mut self, s: ProcessingStats) {
        self.metrics.max_brlist_scans = self.metrics.max_brlist_scans.max(s.brlist_scans);
        self.metrics.max_table_probes = self.metrics.max_table_probes.max(s.table_probes);
    }

    fn is_live_source(&self, id: NodeId) -> bool {
        let n = &self.nodes[&id];
        n.alive && n.state.is_some()
    }

    fn finish(&mut self) {
        if self.finished {
            return;
        }
        self.finished = true;
        let report = self.convergence();
        let m = &mut self.metrics;
        m.converged = report.converged && self.pending_control == 0;
        m.convergence_time = self.last_control_sent;
        m.end_time = self.now;
        m.disagreeing_nodes = report.disagreeing;
        let first = self.nodes.values().find_map(|n| match &n.state {
            Some(s) if n.alive => Some(s),
            _ => None,
        });
        if let Some(s) = first {
            m.final_root = Some(s.dlmt().root());
            m.final_tree_energy = Some(s.dlmt().energy());
            m.final_parent_map = s.dlmt().parent_map();
        }
        m.per_node_residual_energy = self.nodes.iter().map(|(&id, n)| (id, n.residual)).collect();
    }

    /// Runs to completion.
    pub fn run(mut self) -> Result<RunOutcome, SimError> {
        while self.step()? == StepResult::Processed {}
        Ok(self.into_outcome())
    }

    pub fn into_outcome(mut self) -> RunOutcome {
        self.finish();
        RunOutcome {
            metrics: self.metrics,
            trace: self.trace,
        }
    }

    pub fn now(&self) -> f64 {
        self.now
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    /// Protocol state of every live source.
    pub fn live_states(&self) -> impl Iterator<Item = &NodeState> {
        self.nodes
            .values()
            .filter(|n| n.alive)
            .filter_map(|n| n.state.as_ref())
    }

    pub fn state(&self, id: NodeId) -> Option<&NodeState> {
        self.nodes.get(&id).and_then(|n| n.state.as_ref())
    }

    pub fn is_alive(&self, id: NodeId) -> bool {
        self.nodes.get(&id).is_some_and(|n| n.alive)
    }

    pub fn convergence(&self) -> ConvergenceReport {
        check_convergence(self.live_states())
    }

    pub fn metrics(&self) -> &RunMetrics {
        &self.metrics
    }

    pub fn trace(&self) -> &[TraceRecord] {
        &self.trace
    }

    /// Live sources whose state would still change if their most recent
    /// control message were delivered again. The restart bit is cleared for
    /// the replay: the request was honoured on first delivery, and only the
    /// carried tables are being checked.
    pub fn replay_unstable(&self) -> Vec<NodeId> {
        let mut out = Vec::new();
        for (&id, n) in &self.nodes {
            let (Some(state), Some((msg, _))) = (&n.state, &n.last_control) else {
                continue;
            };
            if !n.alive {
                continue;
            }
            let mut copy = state.clone();
            let mut msg = ControlMessage::clone(msg);
            msg.restart = false;
            match copy.handle_control_message(&msg, self.now) {
                Ok(o) if !o.state_changed && o.broadcasts.is_empty() => {}
                _ => out.push(id),
            }
        }
        out
    }
}

/// Runs `scenario` to completion.
pub fn run(scenario: Scenario) -> Result<RunOutcome, SimError> {
    Simulation::new(scenario)?.run()
}
