use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::topology::{Topology, TopologyError};
use crate::model::NodeId;
use crate::protocol::MaintenanceConfig;

/// Uniform per-delivery latency, in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatencyRange {
    pub min: f64,
    pub max: f64,
}

impl Default for LatencyRange {
    fn default() -> Self {
        LatencyRange {
            min: 0.001,
            max: 0.010,
        }
    }
}

/// Joules charged per encoded byte sent and received.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnergyModel {
    #[serde(default)]
    pub tx_cost_per_byte: f64,
    #[serde(default)]
    pub rx_cost_per_byte: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Kill {
    pub time: f64,
    pub node: NodeId,
}

fn default_duration() -> f64 {
    600.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub topology: Topology,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub latency: LatencyRange,
    #[serde(default)]
    pub loss_probability: f64,
    #[serde(default)]
    pub energy_model: EnergyModel,
    #[serde(default)]
    pub maintenance: MaintenanceConfig,
    /// Simulated seconds after which the run stops regardless of activity.
    #[serde(default = "default_duration")]
    pub duration: f64,
    #[serde(default)]
    pub kill_schedule: Vec<Kill>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScenarioError {
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error("invalid scenario: {0}")]
    Invalid(String),
}

impl Scenario {
    pub fn new(topology: Topology, seed: u64) -> Self {
        Scenario {
            topology,
            seed,
            latency: LatencyRange::default(),
            loss_probability: 0.0,
            energy_model: EnergyModel::default(),
            maintenance: MaintenanceConfig::default(),
            duration: default_duration(),
            kill_schedule: Vec::new(),
        }
    }

    /// Range checks, plus adjacency rebuild on the topology.
    pub fn validate(&mut self) -> Result<(), ScenarioError> {
        let bad = |m: &str| Err(ScenarioError::Invalid(m.to_owned()));
        self.topology.validate()?;
        if !(0.0..=1.0).contains(&self.loss_probability) {
            return bad("loss_probability must be within [0, 1]");
        }
        let LatencyRange { min, max } = self.latency;
        if !(min >= 0.0 && min <= max && max.is_finite()) {
            return bad("latency must satisfy 0 <= min <= max");
        }
        let EnergyModel {
            tx_cost_per_byte: tx,
            rx_cost_per_byte: rx,
        } = self.energy_model;
        if !(tx >= 0.0 && rx >= 0.0 && tx.is_finite() && rx.is_finite()) {
            return bad("energy costs must be non-negative");
        }
        if self.maintenance.validate().is_err() {
            return bad("maintenance periods must be positive");
        }
        if !(self.duration > 0.0 && self.duration.is_finite()) {
            return bad("duration must be positive");
        }
        for k in &self.kill_schedule {
            if !(k.time >= 0.0 && k.time.is_finite()) {
                return bad("kill times must be non-negative");
            }
            if self.topology.node(k.node).is_none() {
                return Err(ScenarioError::Invalid(format!(
                    "kill schedule names unknown node {}",
                    k.node
                )));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_fill_in() {
        let doc = r#"{"topology":{"nodes":[{"id":0,"x":0,"y":0,"initial_energy":5000}],"transmission_range":10}}"#;
        let mut s: Scenario = serde_json::from_str(doc).unwrap();
        s.validate().unwrap();
        assert_eq!(s.latency, LatencyRange::default());
        assert_eq!(s.maintenance.hello_period, 25.0);
        assert_eq!(s.maintenance.parent_timeout, 50.0);
        assert!(s.topology.nodes[0].is_source);
    }

    #[test]
    fn unknown_fields_rejected() {
        let doc = r#"{"topology":{"nodes":[],"transmission_range":10},"bogus":1}"#;
        assert!(serde_json::from_str::<Scenario>(doc).is_err());
    }

    #[test]
    fn range_checks() {
        let doc = r#"{"topology":{"nodes":[],"transmission_range":10},"loss_probability":1.5}"#;
        let mut s: Scenario = serde_json::from_str(doc).unwrap();
        assert!(s.validate().is_err());
        let doc = r#"{"topology":{"nodes":[],"transmission_range":10},"kill_schedule":[{"time":1,"node":4}]}"#;
        let mut s: Scenario = serde_json::from_str(doc).unwrap();
        assert!(s.validate().is_err());
    }
}
