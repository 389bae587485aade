use std::collections::{BTreeMap, BTreeSet, VecDeque};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Energy, NodeId};

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TopologyNode {
    pub id: NodeId,
    pub x: f64,
    pub y: f64,
    pub initial_energy: Energy,
    #[serde(default = "yes")]
    pub is_source: bool,
}

/// Unit-disk placement of nodes. Two nodes are neighbors when their
/// distance is at most `transmission_range`.
///
/// `adjacency` is derived; it is written out for readers of the document and
/// recomputed by [`Topology::validate`] on load.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Topology {
    pub nodes: Vec<TopologyNode>,
    pub transmission_range: f64,
    #[serde(default)]
    pub adjacency: BTreeMap<NodeId, Vec<NodeId>>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TopologyError {
    #[error("duplicate node id {0}")]
    DuplicateNode(NodeId),
    #[error("transmission range must be positive and finite, got {0}")]
    BadRange(f64),
    #[error("node {0} has a non-finite position")]
    BadPosition(NodeId),
}

impl Topology {
    pub fn new(nodes: Vec<TopologyNode>, transmission_range: f64) -> Result<Self, TopologyError> {
        let mut t = Topology {
            nodes,
            transmission_range,
            adjacency: BTreeMap::new(),
        };
        t.validate()?;
        Ok(t)
    }

    /// Checks ids, range and positions, and rebuilds `adjacency`.
    pub fn validate(&mut self) -> Result<(), TopologyError> {
        if !(self.transmission_range > 0.0 && self.transmission_range.is_finite()) {
            return Err(TopologyError::BadRange(self.transmission_range));
        }
        let mut seen = BTreeSet::new();
        for n in &self.nodes {
            if !seen.insert(n.id) {
                return Err(TopologyError::DuplicateNode(n.id));
            }
            if !(n.x.is_finite() && n.y.is_finite()) {
                return Err(TopologyError::BadPosition(n.id));
            }
        }
        self.nodes.sort_by_key(|n| n.id);
        let mut adjacency: BTreeMap<NodeId, Vec<NodeId>> =
            self.nodes.iter().map(|n| (n.id, Vec::new())).collect();
        for (a, b) in self.links() {
            adjacency.get_mut(&a).unwrap().push(b);
            adjacency.get_mut(&b).unwrap().push(a);
        }
        for ns in adjacency.values_mut() {
            ns.sort();
        }
        self.adjacency = adjacency;
        Ok(())
    }

    pub fn node(&self, id: NodeId) -> Option<&TopologyNode> {
        self.nodes.iter().find(|n| n.id == id)
    }

    /// In-range pairs `(low, high)`, computed from positions.
    pub fn links(&self) -> Vec<(NodeId, NodeId)> {
        let r2 = self.transmission_range * self.transmission_range;
        let mut out = Vec::new();
        for (i, a) in self.nodes.iter().enumerate() {
            for b in &self.nodes[i + 1..] {
                let (dx, dy) = (a.x - b.x, a.y - b.y);
                if dx * dx + dy * dy <= r2 {
                    out.push((a.id.min(b.id), a.id.max(b.id)));
                }
            }
        }
        out.sort();
        out
    }

    pub fn sources(&self) -> impl Iterator<Item = &TopologyNode> {
        self.nodes.iter().filter(|n| n.is_source)
    }

    /// Whether the sources, using only source-to-source links, form one
    /// connected component.
    pub fn sources_connected(&self) -> bool {
        let sources: BTreeSet<NodeId> = self.sources().map(|n| n.id).collect();
        let Some(&first) = sources.iter().next() else {
            return true;
        };
        let mut adj: BTreeMap<NodeId, Vec<NodeId>> = BTreeMap::new();
        for (a, b) in self.links() {
            if sources.contains(&a) && sources.contains(&b) {
                adj.entry(a).or_default().push(b);
                adj.entry(b).or_default().push(a);
            }
        }
        let mut seen = BTreeSet::from([first]);
        let mut queue = VecDeque::from([first]);
        while let Some(v) = queue.pop_front() {
            for &u in adj.get(&v).into_iter().flatten() {
                if seen.insert(u) {
                    queue.push_back(u);
                }
            }
        }
        seen.len() == sources.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorParams {
    pub node_count: usize,
    pub area_side: f64,
    pub transmission_range: f64,
    pub energy_min: Energy,
    pub energy_max: Energy,
    /// `None` makes every node a source.
    #[serde(default)]
    pub source_count: Option<usize>,
    #[serde(default = "default_attempts")]
    pub max_attempts: u32,
}

fn default_attempts() -> u32 {
    1000
}

impl Default for GeneratorParams {
    fn default() -> Self {
        GeneratorParams {
            node_count: 20,
            area_side: 100.0,
            transmission_range: 40.0,
            energy_min: Energy::from_joules(1),
            energy_max: Energy::from_joules(10),
            source_count: None,
            max_attempts: default_attempts(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GenerationError {
    #[error("invalid generator parameters: {0}")]
    InvalidParams(&'static str),
    #[error("no topology with connected sources after {attempts} attempts")]
    Disconnected { attempts: u32 },
}

/// Places nodes uniformly in the square and redraws until the sources are
/// connected. Deterministic in `seed`.
pub fn generate_topology(params: &GeneratorParams, seed: u64) -> Result<Topology, GenerationError> {
    use GenerationError::InvalidParams;
    if params.node_count == 0 {
        return Err(InvalidParams("node_count must be at least 1"));
    }
    if params.node_count > usize::from(u16::MAX) + 1 {
        return Err(InvalidParams("node_count exceeds the id space"));
    }
    if !(params.area_side > 0.0 && params.area_side.is_finite()) {
        return Err(InvalidParams("area_side must be positive"));
    }
    if !(params.transmission_range > 0.0 && params.transmission_range.is_finite()) {
        return Err(InvalidParams("transmission_range must be positive"));
    }
    if params.energy_min.is_dead() || params.energy_min > params.energy_max {
        return Err(InvalidParams("energy range must satisfy 0 < min <= max"));
    }
    let sources = params.source_count.unwrap_or(params.node_count);
    if sources == 0 || sources > params.node_count {
        return Err(InvalidParams("source_count must be in 1..=node_count"));
    }
    if params.max_attempts == 0 {
        return Err(InvalidParams("max_attempts must be at least 1"));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..params.max_attempts {
        let mut ids: Vec<u16> = (0..params.node_count as u32).map(|i| i as u16).collect();
        ids.shuffle(&mut rng);
        let source_ids: BTreeSet<u16> = ids[..sources].iter().copied().collect();
        let nodes = (0..params.node_count)
            .map(|i| {
                let id = i as u16;
                TopologyNode {
                    id: NodeId(id),
                    x: rng.random_range(0.0..params.area_side),
                    y: rng.random_range(0.0..params.area_side),
                    initial_energy: Energy::from_millijoules(
                        rng.random_range(params.energy_min.millijoules()..=params.energy_max.millijoules()),
                    ),
                    is_source: source_ids.contains(&id),
                }
            })
            .collect();
        let t = Topology::new(nodes, params.transmission_range)
            .expect("generated ids are unique and positions finite");
        if t.sources_connected() {
            return Ok(t);
        }
    }
    Err(GenerationError::Disconnected {
        attempts: params.max_attempts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn node(id: u16, x: f64, y: f64) -> TopologyNode {
        TopologyNode {
            id: NodeId(id),
            x,
            y,
            initial_energy: Energy::from_joules(1),
            is_source: true,
        }
    }

    #[test]
    fn links_use_inclusive_range() {
        let t = Topology::new(vec![node(0, 0.0, 0.0), node(1, 3.0, 4.0), node(2, 20.0, 0.0)], 5.0).unwrap();
        assert_eq!(t.links(), vec![(NodeId(0), NodeId(1))]);
        assert_eq!(t.adjacency[&NodeId(1)], vec![NodeId(0)]);
        assert!(!t.sources_connected());
    }

    #[test]
    fn duplicate_ids_rejected() {
        assert_eq!(
            Topology::new(vec![node(0, 0.0, 0.0), node(0, 1.0, 1.0)], 5.0),
            Err(TopologyError::DuplicateNode(NodeId(0)))
        );
    }

    #[test]
    fn generation_is_deterministic_and_connected() {
        let p = GeneratorParams::default();
        let a = generate_topology(&p, 7).unwrap();
        let b = generate_topology(&p, 7).unwrap();
        assert_eq!(a, b);
        assert!(a.sources_connected());
        assert_eq!(a.nodes.len(), 20);
        for n in &a.nodes {
            assert!(n.initial_energy >= p.energy_min && n.initial_energy <= p.energy_max);
        }
    }

    #[test]
    fn generation_gives_up() {
        let p = GeneratorParams {
            node_count: 30,
            area_side: 1000.0,
            transmission_range: 1.0,
            max_attempts: 5,
            ..GeneratorParams::default()
        };
        assert_eq!(
            generate_topology(&p, 1),
            Err(GenerationError::Disconnected { attempts: 5 })
        );
    }

    #[test]
    fn partial_sources() {
        let p = GeneratorParams {
            node_count: 10,
            source_count: Some(4),
            transmission_range: 60.0,
            ..GeneratorParams::default()
        };
        let t = generate_topology(&p, 3).unwrap();
        assert_eq!(t.sources().count(), 4);
    }

    #[test]
    fn invalid_params() {
        let p = GeneratorParams {
            node_count: 0,
            ..GeneratorParams::default()
        };
        assert!(matches!(generate_topology(&p, 0), Err(GenerationError::InvalidParams(_))));
    }
}
