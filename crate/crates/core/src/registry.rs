//! Service registry: typed service profiles with QoS vectors.
//!
//! A service profile is the simplified stand-in for a full semantic service
//! description: concept-typed inputs/outputs plus four measurable QoS
//! attributes. The registry validates profiles against the ontology, keeps
//! publication order, and exposes a min–max normalized QoS utility used as
//! heuristic desirability by the solver.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ontology::{ConceptId, Ontology};

/// Unique service identifier within a registry.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ServiceId(String);

impl ServiceId {
    pub fn new(id: impl Into<String>) -> Self {
        ServiceId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for ServiceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(&self.0, f)
    }
}

impl fmt::Debug for ServiceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

impl From<&str> for ServiceId {
    fn from(s: &str) -> Self {
        ServiceId(s.to_owned())
    }
}

/// Measurable non-functional attributes of a service.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QosVector {
    pub response_time_ms: f64,
    pub cost: f64,
    pub availability: f64,
    pub reliability: f64,
}

impl QosVector {
    fn validate(&self) -> Result<(), String> {
        let finite = [
            self.response_time_ms,
            self.cost,
            self.availability,
            self.reliability,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !finite {
            return Err("all QoS attributes must be finite".into());
        }
        if self.response_time_ms < 0.0 || self.cost < 0.0 {
            return Err("response_time_ms and cost must be non-negative".into());
        }
        for (name, v) in [
            ("availability", self.availability),
            ("reliability", self.reliability),
        ] {
            if v <= 0.0 || v > 1.0 {
                return Err(format!("{name} must lie in (0, 1], got {v}"));
            }
        }
        Ok(())
    }
}

/// A published service: concept-typed interface plus QoS.
///
/// Inputs may be empty (a service invokable with no data); outputs never
/// are.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ServiceDescription {
    pub id: ServiceId,
    pub name: String,
    pub inputs: BTreeSet<ConceptId>,
    pub outputs: BTreeSet<ConceptId>,
    pub qos: QosVector,
}

impl ServiceDescription {
    pub fn validate(&self, ontology: &Ontology) -> Result<(), RegistryError> {
        if self.id.as_str().is_empty() || self.id.as_str().contains(char::is_whitespace) {
            return Err(RegistryError::InvalidServiceId(self.id.as_str().to_owned()));
        }
        if self.outputs.is_empty() {
            return Err(RegistryError::EmptyOutputs(self.id.clone()));
        }
        for concept in self.inputs.iter().chain(&self.outputs) {
            if !ontology.contains(concept) {
                return Err(RegistryError::UnknownConcept {
                    service: self.id.clone(),
                    concept: concept.clone(),
                });
            }
        }
        self.qos
            .validate()
            .map_err(|reason| RegistryError::InvalidQos {
                service: self.id.clone(),
                reason,
            })
    }
}

#[derive(Debug, Error)]
pub enum RegistryError {
    #[error("invalid service id {0:?}: ids must be non-empty and contain no whitespace")]
    InvalidServiceId(String),
    #[error("duplicate service id {0}")]
    DuplicateService(ServiceId),
    #[error("service {0} not present in registry")]
    UnknownService(ServiceId),
    #[error("service {service} references unknown concept {concept}")]
    UnknownConcept {
        service: ServiceId,
        concept: ConceptId,
    },
    #[error("service {0} declares no outputs")]
    EmptyOutputs(ServiceId),
    #[error("service {service} has invalid QoS: {reason}")]
    InvalidQos { service: ServiceId, reason: String },
    #[error("registry is empty")]
    EmptyRegistry,
    #[error("malformed registry document: {0}")]
    Parse(String),
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RegistryDoc {
    ontology: String,
    services: Vec<ServiceDescription>,
}

/// Ordered collection of validated services.
#[derive(Debug, Clone)]
pub struct Registry {
    ontology_ref: String,
    services: Vec<ServiceDescription>,
    index: HashMap<ServiceId, usize>,
}

impl Registry {
    pub fn new(ontology_ref: impl Into<String>) -> Self {
        Registry {
            ontology_ref: ontology_ref.into(),
            services: Vec::new(),
            index: HashMap::new(),
        }
    }

    /// Parses and validates the registry document against `ontology`.
    pub fn from_json(text: &str, ontology: &Ontology) -> Result<Self, RegistryError> {
        let doc: RegistryDoc =
            serde_json::from_str(text).map_err(|e| RegistryError::Parse(e.to_string()))?;
        let mut reg = Registry::new(doc.ontology);
        for svc in doc.services {
            reg.publish(svc, ontology)?;
        }
        Ok(reg)
    }

    /// Serializes to the normalized document form: publication order kept,
    /// concept sets sorted, fixed field order. `from_json ∘ to_json` is the
    /// identity on bytes.
    pub fn to_json(&self) -> String {
        let doc = RegistryDoc {
            ontology: self.ontology_ref.clone(),
            services: self.services.clone(),
        };
        let mut out =
            serde_json::to_string_pretty(&doc).expect("registry document serialization");
        out.push('\n');
        out
    }

    pub fn ontology_ref(&self) -> &str {
        &self.ontology_ref
    }

    /// Validates and appends a service; the registry is unchanged on error.
    pub fn publish(
        &mut self,
        svc: ServiceDescription,
        ontology: &Ontology,
    ) -> Result<(), RegistryError> {
        svc.validate(ontology)?;
        if self.index.contains_key(&svc.id) {
            return Err(RegistryError::DuplicateService(svc.id));
        }
        self.index.insert(svc.id.clone(), self.services.len());
        self.services.push(svc);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.services.len()
    }

    pub fn is_empty(&self) -> bool {
        self.services.is_empty()
    }

    pub fn services(&self) -> &[ServiceDescription] {
        &self.services
    }

    pub fn get(&self, id: &ServiceId) -> Option<&ServiceDescription> {
        self.index.get(id).map(|&ix| &self.services[ix])
    }

    pub fn position(&self, id: &ServiceId) -> Option<usize> {
        self.index.get(id).copied()
    }

    /// Normalized QoS utility of a member service in [0, 1]: the mean of
    /// four min–max terms over the registry population (response time and
    /// cost inverted, availability and reliability direct; a constant
    /// attribute contributes 1).
    pub fn qos_utility(&self, id: &ServiceId) -> Result<f64, RegistryError> {
        let svc = self
            .get(id)
            .ok_or_else(|| RegistryError::UnknownService(id.clone()))?;
        Ok(QosStats::from_registry(self)?.utility(&svc.qos))
    }
}

/// Per-attribute min/max over a registry, for normalized utilities.
#[derive(Debug, Clone, Copy)]
pub struct QosStats {
    rt: (f64, f64),
    cost: (f64, f64),
    availability: (f64, f64),
    reliability: (f64, f64),
}

impl QosStats {
    pub fn from_registry(reg: &Registry) -> Result<Self, RegistryError> {
        if reg.is_empty() {
            return Err(RegistryError::EmptyRegistry);
        }
        let range = |f: fn(&QosVector) -> f64| {
            reg.services.iter().map(|s| f(&s.qos)).fold(
                (f64::INFINITY, f64::NEG_INFINITY),
                |(lo, hi), v| (lo.min(v), hi.max(v)),
            )
        };
        Ok(QosStats {
            rt: range(|q| q.response_time_ms),
            cost: range(|q| q.cost),
            availability: range(|q| q.availability),
            reliability: range(|q| q.reliability),
        })
    }

    fn inverted_term((lo, hi): (f64, f64), v: f64) -> f64 {
        if hi == lo {
            1.0
        } else {
            (hi - v) / (hi - lo)
        }
    }

    fn direct_term((lo, hi): (f64, f64), v: f64) -> f64 {
        if hi == lo {
            1.0
        } else {
            (v - lo) / (hi - lo)
        }
    }

    pub fn utility(&self, qos: &QosVector) -> f64 {
        (Self::inverted_term(self.rt, qos.response_time_ms)
            + Self::inverted_term(self.cost, qos.cost)
            + Self::direct_term(self.availability, qos.availability)
            + Self::direct_term(self.reliability, qos.reliability))
            / 4.0
    }
}
