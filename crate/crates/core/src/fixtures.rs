//! Small hand-built datasets shared by tests, benches and examples.
//!
//! Each fixture returns fully validated structures; concept names are
//! chosen so that unrelated concepts sit under different root children
//! (similarity 0) and related ones share a parent.

use crate::aco::Request;
use crate::ontology::{ConceptId, Ontology};
use crate::registry::{QosVector, Registry, ServiceDescription, ServiceId};

/// Thing→Vehicle→{Car,Truck}; Thing→Animal.
pub fn vehicle_taxonomy() -> Ontology {
    Ontology::from_entries(&[
        ("Vehicle", None),
        ("Car", Some("Vehicle")),
        ("Truck", Some("Vehicle")),
        ("Animal", None),
    ])
    .expect("fixture taxonomy is valid")
}

/// Service with neutral QoS, for structural tests.
pub fn test_service(id: &str, inputs: &[&str], outputs: &[&str]) -> ServiceDescription {
    service_with_qos(id, inputs, outputs, 100.0, 10.0, 0.95, 0.95)
}

pub fn service_with_qos(
    id: &str,
    inputs: &[&str],
    outputs: &[&str],
    response_time_ms: f64,
    cost: f64,
    availability: f64,
    reliability: f64,
) -> ServiceDescription {
    ServiceDescription {
        id: ServiceId::new(id),
        name: format!("service {id}"),
        inputs: inputs.iter().map(|c| ConceptId::new(*c)).collect(),
        outputs: outputs.iter().map(|c| ConceptId::new(*c)).collect(),
        qos: QosVector {
            response_time_ms,
            cost,
            availability,
            reliability,
        },
    }
}

fn request(provided: &[&str], required: &[&str]) -> Request {
    Request {
        provided: provided.iter().map(|c| ConceptId::new(*c)).collect(),
        required: required.iter().map(|c| ConceptId::new(*c)).collect(),
    }
}

/// Three-service pipeline `A → B → C`; the only valid composition for the
/// bundled request is the full chain.
pub fn chain() -> (Ontology, Registry, Request) {
    let ont = Ontology::from_entries(&[
        ("Start", None),
        ("Mid1", None),
        ("Mid2", None),
        ("Goal", None),
        ("Isolated", None),
    ])
    .expect("fixture taxonomy is valid");
    let mut reg = Registry::new("chain");
    for svc in [
        test_service("A", &["Start"], &["Mid1"]),
        test_service("B", &["Mid1"], &["Mid2"]),
        test_service("C", &["Mid2"], &["Goal"]),
    ] {
        reg.publish(svc, &ont).expect("fixture services are valid");
    }
    (ont, reg, request(&["Start"], &["Goal"]))
}

/// Diamond `A → {B, C} → D` where `B` dominates `C` on every QoS
/// attribute; the oracle-best composition is `[A, B, D]`.
pub fn diamond() -> (Ontology, Registry, Request) {
    let ont = Ontology::from_entries(&[
        ("Start", None),
        ("Mid", None),
        ("Link", None),
        ("Goal", None),
    ])
    .expect("fixture taxonomy is valid");
    let mut reg = Registry::new("diamond");
    for svc in [
        service_with_qos("A", &["Start"], &["Mid"], 100.0, 10.0, 0.95, 0.95),
        service_with_qos("B", &["Mid"], &["Link"], 100.0, 10.0, 0.99, 0.99),
        service_with_qos("C", &["Mid"], &["Link"], 400.0, 40.0, 0.90, 0.90),
        service_with_qos("D", &["Link"], &["Goal"], 100.0, 10.0, 0.95, 0.95),
    ] {
        reg.publish(svc, &ont).expect("fixture services are valid");
    }
    (ont, reg, request(&["Start"], &["Goal"]))
}

/// Two concept families with zero cross-family similarity; `per_family`
/// services each. Vehicle services are named `v00..`, animal `a00..`.
pub fn two_families(per_family: usize) -> (Ontology, Registry) {
    let ont = Ontology::from_entries(&[
        ("Vehicle", None),
        ("Car", Some("Vehicle")),
        ("Truck", Some("Vehicle")),
        ("Bus", Some("Vehicle")),
        ("Van", Some("Vehicle")),
        ("Animal", None),
        ("Dog", Some("Animal")),
        ("Cat", Some("Animal")),
        ("Bird", Some("Animal")),
        ("Fish", Some("Animal")),
    ])
    .expect("fixture taxonomy is valid");
    let vehicle = ["Car", "Truck", "Bus", "Van"];
    let animal = ["Dog", "Cat", "Bird", "Fish"];
    let mut reg = Registry::new("two-families");
    for i in 0..per_family {
        let svc = test_service(
            &format!("v{i:02}"),
            &[vehicle[i % 4]],
            &[vehicle[(i + 1) % 4]],
        );
        reg.publish(svc, &ont).expect("fixture services are valid");
    }
    for i in 0..per_family {
        let svc = test_service(
            &format!("a{i:02}"),
            &[animal[i % 4]],
            &[animal[(i + 1) % 4]],
        );
        reg.publish(svc, &ont).expect("fixture services are valid");
    }
    (ont, reg)
}

/// Single service whose only input matches the request's provided concept
/// at exactly 0.5: invisible to retrieval until the threshold has been
/// relaxed from 0.7 down to 0.5 (two retries), and invokable only when the
/// match threshold is at most 0.5.
pub fn retry() -> (Ontology, Registry, Request) {
    let ont = Ontology::from_entries(&[
        ("D1", None),
        ("D2", Some("D1")),
        ("D3", Some("D2")),
        ("D4", Some("D3")),
        ("D5", Some("D4")),
        ("Prize", None),
    ])
    .expect("fixture taxonomy is valid");
    // depth(D1) = 2, depth(D5) = 6, lca = D1 ⇒ sim = 2·2/(2+6) = 0.5
    let mut reg = Registry::new("retry");
    reg.publish(test_service("needy", &["D5"], &["Prize"]), &ont)
        .expect("fixture services are valid");
    (ont, reg, request(&["D1"], &["Prize"]))
}
