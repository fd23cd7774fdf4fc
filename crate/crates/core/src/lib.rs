//! Semantic web-service composition engine.
//!
//! Services carry concept-typed inputs/outputs (against a shared taxonomy)
//! plus a QoS vector. The engine links them into a similarity-weighted
//! dependency graph, indexes them in a hierarchical cluster tree for cheap
//! retrieval, and answers typed requests by running an ant-colony search
//! over the graph for the best-scoring valid composition. A brute-force
//! oracle and an evaluation harness (precision/recall, comparison-count
//! benchmark, optimality experiment, dataset generator) round it out.
//!
//! Module map:
//! - [`ontology`]: concept taxonomy and Wu–Palmer similarity.
//! - [`registry`]: service descriptions, QoS vectors, normalized utility.
//! - [`network`]: directed output→input dependency graph.
//! - [`cluster`]: agglomerative cluster tree, insertion, beam retrieval.
//! - [`aco`]: ant-colony solver with the threshold-relaxing retry loop.
//! - [`oracle`]: exhaustive ground truth for desk-scale instances.
//! - [`eval`]: metrics, benchmarks, synthetic dataset generator.
//! - [`exec`]: sequential/parallel execution switch (`parallel` feature).

pub mod aco;
mod bits;
pub mod cluster;
pub mod eval;
pub mod exec;
pub mod fixtures;
pub mod network;
pub mod ontology;
pub mod oracle;
pub mod registry;

pub use aco::{solve, AcoParams, CompositionPath, CompositionResult, Request};
pub use cluster::ClusterTree;
pub use exec::ExecMode;
pub use network::SemanticNetwork;
pub use ontology::{ConceptId, Ontology};
pub use registry::{Registry, ServiceDescription, ServiceId};
