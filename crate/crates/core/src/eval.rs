//! Evaluation harness: retrieval metrics, comparison-count benchmark,
//! solver-vs-oracle optimality experiment, and the synthetic dataset
//! generator feeding all of them.
//!
//! Precision and recall follow the plain set formulas `|A∩B|/|B|` and
//! `|A∩B|/|A|`; an empty denominator yields an explicit undefined value
//! (`None`, serialized as `null`), never a silent zero. The retrieval
//! benchmark treats a full linear scan at the same threshold as the
//! relevant set, making both metrics computable without human judgments.

use std::collections::BTreeSet;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::aco::{solve, AcoError, AcoParams, Request};
use crate::cluster::{invokability_score, ClusterError, ClusterTree, Retrieval, Signature};
use crate::exec::{map_indexed, ExecMode};
use crate::network::SemanticNetwork;
use crate::ontology::Ontology;
use crate::oracle::{exhaustive_best, OracleError, DEFAULT_NODE_GUARD};
use crate::registry::{QosVector, Registry, ServiceDescription, ServiceId};

/// Score-agreement tolerance for the optimality experiment.
pub const OPTIMALITY_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("invalid generator parameters: {0}")]
    InvalidParams(String),
    #[error(transparent)]
    Cluster(#[from] ClusterError),
    #[error(transparent)]
    Aco(#[from] AcoError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(
        "instances of {0} services exceed the oracle guard of {DEFAULT_NODE_GUARD}; \
         lower n_services"
    )]
    ExceedsOracleGuard(usize),
    #[error("planted request of instance seed {0} is unsolvable; generator invariant broken")]
    InstanceUnsolvable(u64),
}

/// `|A∩B| / |B|`, or `None` when nothing was retrieved.
pub fn precision(relevant: &BTreeSet<ServiceId>, retrieved: &BTreeSet<ServiceId>) -> Option<f64> {
    if retrieved.is_empty() {
        return None;
    }
    Some(relevant.intersection(retrieved).count() as f64 / retrieved.len() as f64)
}

/// `|A∩B| / |A|`, or `None` when nothing is relevant.
pub fn recall(relevant: &BTreeSet<ServiceId>, retrieved: &BTreeSet<ServiceId>) -> Option<f64> {
    if relevant.is_empty() {
        return None;
    }
    Some(relevant.intersection(retrieved).count() as f64 / relevant.len() as f64)
}

/// Relevant/retrieved sets with both metrics attached.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub relevant: BTreeSet<ServiceId>,
    pub retrieved: BTreeSet<ServiceId>,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
}

impl EvalReport {
    pub fn from_sets(relevant: BTreeSet<ServiceId>, retrieved: BTreeSet<ServiceId>) -> Self {
        let precision = precision(&relevant, &retrieved);
        let recall = recall(&relevant, &retrieved);
        EvalReport {
            relevant,
            retrieved,
            precision,
            recall,
        }
    }
}

/// Inclusive sampling ranges for generated QoS attributes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QosRanges {
    pub response_time_ms: (f64, f64),
    pub cost: (f64, f64),
    pub availability: (f64, f64),
    pub reliability: (f64, f64),
}

impl Default for QosRanges {
    fn default() -> Self {
        QosRanges {
            response_time_ms: (10.0, 500.0),
            cost: (1.0, 50.0),
            availability: (0.9, 0.999),
            reliability: (0.9, 0.999),
        }
    }
}

/// Synthetic dataset shape. Concepts are grouped into root-child families
/// (roughly six concepts each); every service draws its interface from one
/// family, so cross-family similarity is zero and cluster structure is
/// real. One solvable request is always planted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenParams {
    pub n_services: usize,
    pub n_concepts: usize,
    /// Maximum concept-chain length below the virtual root.
    pub taxonomy_depth: usize,
    /// Upper bound on generated input and output set sizes.
    pub max_io_size: usize,
    pub qos: QosRanges,
    /// Probability that an input reuses another service's output concept.
    pub chain_density: f64,
    pub n_requests: usize,
    pub seed: u64,
}

impl Default for GenParams {
    fn default() -> Self {
        GenParams {
            n_services: 40,
            n_concepts: 30,
            taxonomy_depth: 4,
            max_io_size: 3,
            qos: QosRanges::default(),
            chain_density: 0.5,
            n_requests: 5,
            seed: 0,
        }
    }
}

impl GenParams {
    pub fn validate(&self) -> Result<(), EvalError> {
        let err = |msg: String| Err(EvalError::InvalidParams(msg));
        if self.n_services == 0 {
            return err("n_services must be at least 1".into());
        }
        if self.n_concepts < 8 {
            return err("n_concepts must be at least 8".into());
        }
        if self.taxonomy_depth == 0 {
            return err("taxonomy_depth must be at least 1".into());
        }
        if self.max_io_size == 0 {
            return err("max_io_size must be at least 1".into());
        }
        if !(0.0..=1.0).contains(&self.chain_density) {
            return err("chain_density must lie in [0, 1]".into());
        }
        if self.n_requests == 0 {
            return err("n_requests must be at least 1".into());
        }
        for (name, (lo, hi)) in [
            ("response_time_ms", self.qos.response_time_ms),
            ("cost", self.qos.cost),
            ("availability", self.qos.availability),
            ("reliability", self.qos.reliability),
        ] {
            if !lo.is_finite() || !hi.is_finite() || lo > hi {
                return err(format!("{name} range must be finite with lo <= hi"));
            }
        }
        if self.qos.response_time_ms.0 < 0.0 || self.qos.cost.0 < 0.0 {
            return err("response_time_ms and cost ranges must be non-negative".into());
        }
        for (name, (lo, hi)) in [
            ("availability", self.qos.availability),
            ("reliability", self.qos.reliability),
        ] {
            if lo <= 0.0 || hi > 1.0 {
                return err(format!("{name} range must lie within (0, 1]"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RequestsDoc {
    requests: Vec<Request>,
}

/// A generated instance. Request 0 is the planted solvable one.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub ontology: Ontology,
    pub registry: Registry,
    pub requests: Vec<Request>,
}

impl Dataset {
    pub fn ontology_json(&self) -> String {
        self.ontology.to_json()
    }

    pub fn registry_json(&self) -> String {
        self.registry.to_json()
    }

    pub fn requests_json(&self) -> String {
        let doc = RequestsDoc {
            requests: self.requests.clone(),
        };
        let mut out = serde_json::to_string_pretty(&doc).expect("requests serialization");
        out.push('\n');
        out
    }

    /// Parses `{"requests": [...]}`.
    pub fn requests_from_json(text: &str) -> Result<Vec<Request>, serde_json::Error> {
        Ok(serde_json::from_str::<RequestsDoc>(text)?.requests)
    }
}

/// Deterministic synthetic dataset: family-structured taxonomy, services
/// with family-local interfaces, chain-biased inputs, and a planted
/// solvable request at index 0.
pub fn generate_dataset(params: &GenParams) -> Result<Dataset, EvalError> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);

    // Taxonomy: the first `n_families` concepts are family roots; every
    // later concept attaches inside its family, depth permitting.
    let n_concepts = params.n_concepts;
    let n_families = (n_concepts / 6).max(1);
    let names: Vec<String> = (0..n_concepts).map(|i| format!("c{i:04}")).collect();
    let mut depth = vec![1usize; n_concepts];
    let mut entries: Vec<(String, Option<String>)> = Vec::with_capacity(n_concepts);
    for i in 0..n_concepts {
        if i < n_families {
            entries.push((names[i].clone(), None));
            continue;
        }
        let family = i % n_families;
        let eligible: Vec<usize> = (0..i)
            .filter(|j| j % n_families == family && depth[*j] < params.taxonomy_depth)
            .collect();
        if eligible.is_empty() {
            entries.push((names[i].clone(), None));
        } else {
            let parent = eligible[rng.random_range(0..eligible.len())];
            depth[i] = depth[parent] + 1;
            entries.push((names[i].clone(), Some(names[parent].clone())));
        }
    }
    let ontology =
        Ontology::from_entries(&entries).expect("generated taxonomy is structurally valid");

    let family_concepts: Vec<Vec<usize>> = (0..n_families)
        .map(|f| (0..n_concepts).filter(|i| i % n_families == f).collect())
        .collect();

    // Planted chain in the largest family (ties: lowest index).
    let planted_family = (0..n_families)
        .max_by_key(|f| (family_concepts[*f].len(), n_families - f))
        .expect("at least one family exists");
    let fam = &family_concepts[planted_family];
    let chain_len = params.n_services.min(3).min(fam.len() - 1).max(1);
    let picked = sample(&mut rng, fam.len(), chain_len + 1);
    let chain_concepts: Vec<usize> = picked.iter().map(|k| fam[k]).collect();

    let draw_qos = |rng: &mut ChaCha8Rng| QosVector {
        response_time_ms: rng.random_range(params.qos.response_time_ms.0..=params.qos.response_time_ms.1),
        cost: rng.random_range(params.qos.cost.0..=params.qos.cost.1),
        availability: rng.random_range(params.qos.availability.0..=params.qos.availability.1),
        reliability: rng.random_range(params.qos.reliability.0..=params.qos.reliability.1),
    };

    let mut registry = Registry::new("ontology.json");
    let mut output_pool: Vec<Vec<usize>> = vec![Vec::new(); n_families];
    for j in 0..chain_len {
        let svc = ServiceDescription {
            id: ServiceId::new(format!("s{j:04}")),
            name: format!("chain step {j}"),
            inputs: [names[chain_concepts[j]].as_str().into()].into_iter().collect(),
            outputs: [names[chain_concepts[j + 1]].as_str().into()]
                .into_iter()
                .collect(),
            qos: draw_qos(&mut rng),
        };
        output_pool[planted_family].push(chain_concepts[j + 1]);
        registry
            .publish(svc, &ontology)
            .expect("generated services are valid");
    }

    for i in chain_len..params.n_services {
        let family = rng.random_range(0..n_families);
        let fam = &family_concepts[family];
        let pool = &output_pool[family];
        let n_inputs = 1 + rng.random_range(0..params.max_io_size);
        let mut inputs = BTreeSet::new();
        for _ in 0..n_inputs {
            let concept = if !pool.is_empty() && rng.random::<f64>() < params.chain_density {
                pool[rng.random_range(0..pool.len())]
            } else {
                fam[rng.random_range(0..fam.len())]
            };
            inputs.insert(names[concept].as_str().into());
        }
        let n_outputs = 1 + rng.random_range(0..params.max_io_size);
        let mut outputs = BTreeSet::new();
        let mut produced = Vec::new();
        for _ in 0..n_outputs {
            let concept = fam[rng.random_range(0..fam.len())];
            if outputs.insert(names[concept].as_str().into()) {
                produced.push(concept);
            }
        }
        let svc = ServiceDescription {
            id: ServiceId::new(format!("s{i:04}")),
            name: format!("generated service {i}"),
            inputs,
            outputs,
            qos: draw_qos(&mut rng),
        };
        output_pool[family].extend(produced);
        registry
            .publish(svc, &ontology)
            .expect("generated services are valid");
    }

    let mut requests = vec![Request {
        provided: [names[chain_concepts[0]].as_str().into()].into_iter().collect(),
        required: [names[chain_concepts[chain_len]].as_str().into()]
            .into_iter()
            .collect(),
    }];
    for _ in 1..params.n_requests {
        let family = rng.random_range(0..n_families);
        let fam = &family_concepts[family];
        let pool = &output_pool[family];
        let n_provided = 1 + rng.random_range(0..3.min(fam.len()));
        let mut provided = BTreeSet::new();
        for _ in 0..n_provided {
            provided.insert(names[fam[rng.random_range(0..fam.len())]].as_str().into());
        }
        let n_required = 1 + rng.random_range(0..2);
        let mut required = BTreeSet::new();
        for _ in 0..n_required {
            let concept = if pool.is_empty() {
                fam[rng.random_range(0..fam.len())]
            } else {
                pool[rng.random_range(0..pool.len())]
            };
            required.insert(names[concept].as_str().into());
        }
        requests.push(Request { provided, required });
    }

    Ok(Dataset {
        ontology,
        registry,
        requests,
    })
}

/// Baseline retrieval: score every service against the request, one
/// comparison per service, same ranking rule as the tree.
pub fn linear_scan(
    registry: &Registry,
    ontology: &Ontology,
    req: &Request,
    theta_retrieval: f64,
) -> Retrieval {
    let mut scored: Vec<(f64, &ServiceId)> = registry
        .services()
        .iter()
        .map(|s| {
            (
                invokability_score(ontology, &Signature::of_service(s), req),
                &s.id,
            )
        })
        .collect();
    scored.retain(|(s, _)| *s >= theta_retrieval);
    scored.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| a.1.cmp(b.1)));
    Retrieval {
        ranked: scored.into_iter().map(|(_, id)| id.clone()).collect(),
        comparisons: registry.len(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RetrievalRow {
    pub request_ix: usize,
    pub tree_comparisons: usize,
    pub linear_comparisons: usize,
    pub tree_count: usize,
    pub linear_count: usize,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RetrievalReport {
    pub n_services: usize,
    pub n_requests: usize,
    pub leaf_cap: usize,
    pub beam_width: usize,
    pub theta_retrieval: f64,
    pub mean_tree_comparisons: f64,
    pub mean_linear_comparisons: f64,
    /// Mean over requests where the metric is defined.
    pub mean_precision: Option<f64>,
    pub mean_recall: Option<f64>,
    pub rows: Vec<RetrievalRow>,
}

fn mean_defined(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let defined: Vec<f64> = values.flatten().collect();
    if defined.is_empty() {
        None
    } else {
        Some(defined.iter().sum::<f64>() / defined.len() as f64)
    }
}

impl RetrievalReport {
    pub fn to_json(&self) -> String {
        let mut out = serde_json::to_string_pretty(self).expect("report serialization");
        out.push('\n');
        out
    }

    /// Flat per-request table; undefined metrics are empty cells.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "request_ix",
            "tree_comparisons",
            "linear_comparisons",
            "tree_count",
            "linear_count",
            "precision",
            "recall",
        ])
        .expect("csv header");
        let cell = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for row in &self.rows {
            w.write_record([
                row.request_ix.to_string(),
                row.tree_comparisons.to_string(),
                row.linear_comparisons.to_string(),
                row.tree_count.to_string(),
                row.linear_count.to_string(),
                cell(row.precision),
                cell(row.recall),
            ])
            .expect("csv row");
        }
        String::from_utf8(w.into_inner().expect("csv flush")).expect("csv is utf-8")
    }
}

/// Runs tree retrieval against the linear baseline for every request,
/// treating the linear result set as the relevant set.
pub fn retrieval_benchmark(
    registry: &Registry,
    ontology: &Ontology,
    requests: &[Request],
    leaf_cap: usize,
    beam_width: usize,
    theta_retrieval: f64,
    mode: ExecMode,
) -> Result<RetrievalReport, EvalError> {
    let tree = ClusterTree::build(registry, ontology, leaf_cap, mode)?;
    let rows = map_indexed(mode, requests.len(), |i| {
        let req = &requests[i];
        let tree_result = tree.find_initial_services(ontology, req, theta_retrieval, beam_width);
        let linear = linear_scan(registry, ontology, req, theta_retrieval);
        let retrieved: BTreeSet<ServiceId> = tree_result.ranked.iter().cloned().collect();
        let relevant: BTreeSet<ServiceId> = linear.ranked.iter().cloned().collect();
        RetrievalRow {
            request_ix: i,
            tree_comparisons: tree_result.comparisons,
            linear_comparisons: linear.comparisons,
            tree_count: retrieved.len(),
            linear_count: relevant.len(),
            precision: precision(&relevant, &retrieved),
            recall: recall(&relevant, &retrieved),
        }
    });
    let n = rows.len().max(1);
    Ok(RetrievalReport {
        n_services: registry.len(),
        n_requests: rows.len(),
        leaf_cap,
        beam_width,
        theta_retrieval,
        mean_tree_comparisons: rows.iter().map(|r| r.tree_comparisons as f64).sum::<f64>()
            / n as f64,
        mean_linear_comparisons: rows.iter().map(|r| r.linear_comparisons as f64).sum::<f64>()
            / n as f64,
        mean_precision: mean_defined(rows.iter().map(|r| r.precision)),
        mean_recall: mean_defined(rows.iter().map(|r| r.recall)),
        rows,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimalityRow {
    pub instance: usize,
    pub instance_seed: u64,
    pub solve_seed: u64,
    pub oracle_score: f64,
    pub solve_score: Option<f64>,
    pub optimal: bool,
    /// 1-based iteration at which the oracle score was first reached.
    pub iterations_to_first_optimum: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimalityReport {
    pub n_instances: usize,
    pub n_seeds: usize,
    pub trials: usize,
    pub optimal_fraction: f64,
    pub mean_iterations_to_first_optimum: Option<f64>,
    pub rows: Vec<OptimalityRow>,
}

impl OptimalityReport {
    pub fn to_json(&self) -> String {
        let mut out = serde_json::to_string_pretty(self).expect("report serialization");
        out.push('\n');
        out
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "instance",
            "instance_seed",
            "solve_seed",
            "oracle_score",
            "solve_score",
            "optimal",
            "iterations_to_first_optimum",
        ])
        .expect("csv header");
        for row in &self.rows {
            w.write_record([
                row.instance.to_string(),
                row.instance_seed.to_string(),
                row.solve_seed.to_string(),
                row.oracle_score.to_string(),
                row.solve_score.map(|v| v.to_string()).unwrap_or_default(),
                row.optimal.to_string(),
                row.iterations_to_first_optimum
                    .map(|v| v.to_string())
                    .unwrap_or_default(),
            ])
            .expect("csv row");
        }
        String::from_utf8(w.into_inner().expect("csv flush")).expect("csv is utf-8")
    }
}

/// Generates `n_instances` solvable instances (each with its own seed),
/// solves each planted request with `n_seeds` solver seeds, and reports
/// the fraction of trials whose best score matches the exhaustive oracle
/// within [`OPTIMALITY_TOLERANCE`].
pub fn optimality_experiment(
    gen_base: &GenParams,
    aco_base: &AcoParams,
    n_instances: usize,
    n_seeds: usize,
    leaf_cap: usize,
    mode: ExecMode,
) -> Result<OptimalityReport, EvalError> {
    gen_base.validate()?;
    if gen_base.n_services > DEFAULT_NODE_GUARD {
        return Err(EvalError::ExceedsOracleGuard(gen_base.n_services));
    }
    let aco_base = aco_base.clone().validated()?;

    let per_instance: Vec<Result<Vec<OptimalityRow>, EvalError>> =
        map_indexed(mode, n_instances, |i| {
            let gen = GenParams {
                seed: gen_base.seed.wrapping_add(i as u64),
                ..gen_base.clone()
            };
            let data = generate_dataset(&gen)?;
            let net = SemanticNetwork::build(
                &data.registry,
                &data.ontology,
                aco_base.theta_match,
                ExecMode::Sequential,
            );
            let tree = ClusterTree::build(
                &data.registry,
                &data.ontology,
                leaf_cap,
                ExecMode::Sequential,
            )?;
            let req = &data.requests[0];
            let oracle = exhaustive_best(
                &net,
                &data.registry,
                &data.ontology,
                req,
                aco_base.theta_match,
                aco_base.max_path_len,
                &aco_base.weights,
                false,
            )?
            .ok_or(EvalError::InstanceUnsolvable(gen.seed))?;

            let mut rows = Vec::with_capacity(n_seeds);
            for s in 0..n_seeds {
                let params = AcoParams {
                    seed: aco_base.seed.wrapping_add(s as u64),
                    ..aco_base.clone()
                };
                let result = solve(
                    &net,
                    &tree,
                    &data.registry,
                    &data.ontology,
                    req,
                    &params,
                    ExecMode::Sequential,
                )?;
                let solve_score = result.best.as_ref().map(|p| p.score);
                let optimal = solve_score
                    .is_some_and(|s| (s - oracle.score).abs() <= OPTIMALITY_TOLERANCE);
                let iterations_to_first_optimum = result
                    .per_iteration_best
                    .iter()
                    .position(|b| {
                        b.is_some_and(|s| (s - oracle.score).abs() <= OPTIMALITY_TOLERANCE)
                    })
                    .map(|ix| ix as u32 + 1);
                rows.push(OptimalityRow {
                    instance: i,
                    instance_seed: gen.seed,
                    solve_seed: params.seed,
                    oracle_score: oracle.score,
                    solve_score,
                    optimal,
                    iterations_to_first_optimum,
                });
            }
            Ok(rows)
        });

    let mut rows = Vec::with_capacity(n_instances * n_seeds);
    for r in per_instance {
        rows.extend(r?);
    }
    let trials = rows.len();
    let optimal_count = rows.iter().filter(|r| r.optimal).count();
    Ok(OptimalityReport {
        n_instances,
        n_seeds,
        trials,
        optimal_fraction: if trials == 0 {
            0.0
        } else {
            optimal_count as f64 / trials as f64
        },
        mean_iterations_to_first_optimum: mean_defined(
            rows.iter()
                .map(|r| r.iterations_to_first_optimum.map(f64::from)),
        ),
        rows,
    })
}
