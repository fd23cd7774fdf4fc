//! Semantic network: the directed service dependency graph.
//!
//! An edge `s → t` exists iff some output of `s` matches some input of `t`
//! at similarity ≥ the match threshold. The edge records, per matched
//! input, the best similarity any output of `s` achieves, and carries a
//! coverage weight: the sum of those similarities divided by the total
//! input count of `t`. Partial coverage is deliberate — the rest of a
//! target's inputs may be supplied earlier along a composition.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;
use thiserror::Error;

use crate::exec::{map_indexed, ExecMode};
use crate::ontology::{ConceptId, Ontology};
use crate::registry::{Registry, ServiceDescription, ServiceId};

#[derive(Debug, Error)]
pub enum NetworkError {
    #[error("service {0} is already a node of the network")]
    NodeExists(ServiceId),
    #[error("service {0} is not present in the registry")]
    UnknownService(ServiceId),
}

/// Label of one dependency edge.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EdgeInfo {
    /// Target input concept → best similarity achieved by any source
    /// output; only entries at or above the match threshold are kept.
    pub provided: BTreeMap<ConceptId, f64>,
    /// Matched-similarity sum divided by the target's total input count.
    pub weight: f64,
}

/// Scores the `from → to` dependency; `None` when no input of `to` is
/// matched at `theta_match` or better.
pub fn edge_match(
    ontology: &Ontology,
    from: &ServiceDescription,
    to: &ServiceDescription,
    theta_match: f64,
) -> Option<EdgeInfo> {
    if to.inputs.is_empty() {
        return None;
    }
    let mut provided = BTreeMap::new();
    let mut sum = 0.0;
    for input in &to.inputs {
        let mut best = 0.0_f64;
        for output in &from.outputs {
            let sim = ontology
                .similarity(output, input)
                .expect("validated services reference known concepts");
            best = best.max(sim);
        }
        if best >= theta_match {
            provided.insert(input.clone(), best);
            sum += best;
        }
    }
    if provided.is_empty() {
        return None;
    }
    let weight = sum / to.inputs.len() as f64;
    Some(EdgeInfo { provided, weight })
}

#[derive(Debug, Serialize)]
struct NetworkDump<'a> {
    theta_match: f64,
    nodes: Vec<&'a ServiceId>,
    edges: Vec<EdgeDump<'a>>,
}

#[derive(Debug, Serialize)]
struct EdgeDump<'a> {
    from: &'a ServiceId,
    to: &'a ServiceId,
    weight: f64,
    provided: &'a BTreeMap<ConceptId, f64>,
}

/// Directed dependency graph over service ids.
#[derive(Debug, Clone, PartialEq)]
pub struct SemanticNetwork {
    theta_match: f64,
    nodes: BTreeSet<ServiceId>,
    out_edges: BTreeMap<ServiceId, BTreeMap<ServiceId, EdgeInfo>>,
}

impl SemanticNetwork {
    /// Builds the graph over every ordered service pair of the registry.
    pub fn build(
        registry: &Registry,
        ontology: &Ontology,
        theta_match: f64,
        mode: ExecMode,
    ) -> Self {
        let services = registry.services();
        let rows = map_indexed(mode, services.len(), |i| {
            let from = &services[i];
            let mut row = BTreeMap::new();
            for to in services {
                if from.id == to.id {
                    continue;
                }
                if let Some(info) = edge_match(ontology, from, to, theta_match) {
                    row.insert(to.id.clone(), info);
                }
            }
            row
        });
        let mut net = SemanticNetwork {
            theta_match,
            nodes: BTreeSet::new(),
            out_edges: BTreeMap::new(),
        };
        for (svc, row) in services.iter().zip(rows) {
            net.nodes.insert(svc.id.clone());
            if !row.is_empty() {
                net.out_edges.insert(svc.id.clone(), row);
            }
        }
        net
    }

    /// Adds a newly published service as a node together with every edge
    /// touching it. The result is identical to rebuilding from scratch.
    pub fn add_service_edges(
        &mut self,
        ontology: &Ontology,
        registry: &Registry,
        id: &ServiceId,
    ) -> Result<(), NetworkError> {
        if self.nodes.contains(id) {
            return Err(NetworkError::NodeExists(id.clone()));
        }
        let svc = registry
            .get(id)
            .ok_or_else(|| NetworkError::UnknownService(id.clone()))?;
        self.nodes.insert(id.clone());
        for other in registry.services() {
            if other.id == *id || !self.nodes.contains(&other.id) {
                continue;
            }
            if let Some(info) = edge_match(ontology, svc, other, self.theta_match) {
                self.out_edges
                    .entry(id.clone())
                    .or_default()
                    .insert(other.id.clone(), info);
            }
            if let Some(info) = edge_match(ontology, other, svc, self.theta_match) {
                self.out_edges
                    .entry(other.id.clone())
                    .or_default()
                    .insert(id.clone(), info);
            }
        }
        Ok(())
    }

    pub fn theta_match(&self) -> f64 {
        self.theta_match
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn contains_node(&self, id: &ServiceId) -> bool {
        self.nodes.contains(id)
    }

    pub fn nodes(&self) -> impl Iterator<Item = &ServiceId> {
        self.nodes.iter()
    }

    pub fn edge_count(&self) -> usize {
        self.out_edges.values().map(BTreeMap::len).sum()
    }

    pub fn edge(&self, from: &ServiceId, to: &ServiceId) -> Option<&EdgeInfo> {
        self.out_edges.get(from)?.get(to)
    }

    pub fn out_neighbors(
        &self,
        from: &ServiceId,
    ) -> impl Iterator<Item = (&ServiceId, &EdgeInfo)> {
        self.out_edges.get(from).into_iter().flatten()
    }

    /// Every edge as `(from, to, info)`, ordered by id pair.
    pub fn edges(&self) -> impl Iterator<Item = (&ServiceId, &ServiceId, &EdgeInfo)> {
        self.out_edges
            .iter()
            .flat_map(|(from, row)| row.iter().map(move |(to, info)| (from, to, info)))
    }

    /// Inspection document: `{"theta_match", "nodes", "edges"}`.
    pub fn to_dump_json(&self) -> String {
        let dump = NetworkDump {
            theta_match: self.theta_match,
            nodes: self.nodes.iter().collect(),
            edges: self
                .edges()
                .map(|(from, to, info)| EdgeDump {
                    from,
                    to,
                    weight: info.weight,
                    provided: &info.provided,
                })
                .collect(),
        };
        let mut out = serde_json::to_string_pretty(&dump).expect("network dump serialization");
        out.push('\n');
        out
    }
}
