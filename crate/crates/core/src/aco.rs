//! Ant-colony search for the best-scoring valid composition.
//!
//! One ant is placed on every retrieved initial service. Each iteration,
//! every ant walks the semantic network: at each step the candidate set is
//! the unvisited out-neighbors invokable from the concepts accumulated so
//! far, and the ant picks among them with probability proportional to
//! `τ^α · η^β`, where `η` blends the edge's coverage weight with the target
//! service's normalized QoS utility. A lone candidate is taken outright.
//! Walks end on goal satisfaction, on a dead end, or at the path-length
//! cap. After every iteration pheromone evaporates globally and each
//! goal-satisfying ant deposits `Q·score` along its path.
//!
//! If a whole round of iterations produces no valid path, the retrieval
//! threshold is relaxed by `retry_delta`, pheromone resets, and the search
//! repeats up to `max_retries` times.
//!
//! Ant random streams are derived from `(seed, retry, iteration, ant)`, so
//! results are bit-identical whether walks run sequentially or in
//! parallel.

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bits::BitSet;
use crate::cluster::ClusterTree;
use crate::exec::{map_indexed, ExecMode};
use crate::network::SemanticNetwork;
use crate::ontology::{ConceptId, Ontology, OntologyError};
use crate::registry::{QosStats, Registry, ServiceDescription, ServiceId};

/// Soft normalization constant for summed response time in the score.
pub const RT_SOFT_MS: f64 = 1000.0;
/// Soft normalization constant for summed cost in the score.
pub const COST_SOFT: f64 = 100.0;
/// Lower bound applied after evaporation so pheromone stays positive.
pub const TAU_FLOOR: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum AcoError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error(transparent)]
    Ontology(#[from] OntologyError),
    #[error("registry is empty")]
    EmptyRegistry,
    #[error("request must name at least one required concept")]
    EmptyRequired,
    #[error("service {0} is not a node of the semantic network")]
    NotInNetwork(ServiceId),
    #[error("service {0} is missing from the registry")]
    UnknownService(ServiceId),
    #[error("no edge between consecutive services {from} and {to}")]
    MissingEdge { from: ServiceId, to: ServiceId },
    #[error("service {0} repeats in the path")]
    RepeatedService(ServiceId),
    #[error("composition path is empty")]
    EmptyPath,
    #[error("pheromone table does not match the network edge set")]
    PheromoneMismatch,
}

/// A typed client request: concepts the client can supply and concepts the
/// composition must produce.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Request {
    pub provided: BTreeSet<ConceptId>,
    pub required: BTreeSet<ConceptId>,
}

impl Request {
    pub fn validate(&self, ontology: &Ontology) -> Result<(), AcoError> {
        if self.required.is_empty() {
            return Err(AcoError::EmptyRequired);
        }
        for c in self.provided.iter().chain(&self.required) {
            if !ontology.contains(c) {
                return Err(OntologyError::UnknownConcept(c.clone()).into());
            }
        }
        Ok(())
    }
}

/// Score weights; normalized to sum 1 before use.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Weights {
    pub similarity: f64,
    pub response_time: f64,
    pub cost: f64,
    pub availability: f64,
    pub reliability: f64,
}

impl Default for Weights {
    fn default() -> Self {
        Weights {
            similarity: 0.2,
            response_time: 0.2,
            cost: 0.2,
            availability: 0.2,
            reliability: 0.2,
        }
    }
}

impl Weights {
    pub fn normalized(self) -> Result<Weights, AcoError> {
        let parts = [
            self.similarity,
            self.response_time,
            self.cost,
            self.availability,
            self.reliability,
        ];
        if parts.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(AcoError::InvalidParams(
                "score weights must be finite and non-negative".into(),
            ));
        }
        let sum: f64 = parts.iter().sum();
        if sum <= 0.0 {
            return Err(AcoError::InvalidParams(
                "score weights must not all be zero".into(),
            ));
        }
        Ok(Weights {
            similarity: self.similarity / sum,
            response_time: self.response_time / sum,
            cost: self.cost / sum,
            availability: self.availability / sum,
            reliability: self.reliability / sum,
        })
    }
}

/// Solver parameters. Defaults follow the standard ant-system scheme.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AcoParams {
    /// Iterations per retry round. Zero is allowed and solves nothing.
    pub n_iterations: u32,
    /// Pheromone exponent α.
    pub alpha: f64,
    /// Heuristic exponent β.
    pub beta: f64,
    /// Evaporation rate ρ in (0, 1).
    pub rho: f64,
    /// Deposit scale Q.
    pub deposit_scale: f64,
    /// Initial pheromone τ0.
    pub tau0: f64,
    pub max_path_len: usize,
    pub weights: Weights,
    /// Output→input match threshold shared by edges, invokability and the
    /// goal test.
    pub theta_match: f64,
    /// Initial retrieval threshold; relaxed by `retry_delta` per retry.
    pub theta_retrieval: f64,
    pub retry_delta: f64,
    pub max_retries: u32,
    /// Beam width for cluster-tree retrieval.
    pub beam_width: usize,
    pub seed: u64,
}

impl Default for AcoParams {
    fn default() -> Self {
        AcoParams {
            n_iterations: 100,
            alpha: 1.0,
            beta: 2.0,
            rho: 0.1,
            deposit_scale: 1.0,
            tau0: 1.0,
            max_path_len: 10,
            weights: Weights::default(),
            theta_match: 0.7,
            theta_retrieval: 0.7,
            retry_delta: 0.1,
            max_retries: 3,
            beam_width: 3,
            seed: 0,
        }
    }
}

impl AcoParams {
    /// Validates ranges and normalizes the score weights.
    pub fn validated(mut self) -> Result<Self, AcoError> {
        let err = |msg: &str| Err(AcoError::InvalidParams(msg.into()));
        if !self.alpha.is_finite() || self.alpha < 0.0 {
            return err("alpha must be finite and non-negative");
        }
        if !self.beta.is_finite() || self.beta < 0.0 {
            return err("beta must be finite and non-negative");
        }
        if !(self.rho > 0.0 && self.rho < 1.0) {
            return err("rho must lie in (0, 1)");
        }
        if !(self.deposit_scale > 0.0 && self.deposit_scale.is_finite()) {
            return err("deposit scale must be positive");
        }
        if !(self.tau0 > 0.0 && self.tau0.is_finite()) {
            return err("tau0 must be positive");
        }
        if self.max_path_len == 0 {
            return err("max_path_len must be at least 1");
        }
        if !(self.theta_match > 0.0 && self.theta_match <= 1.0) {
            return err("theta_match must lie in (0, 1]");
        }
        if !(0.0..=1.0).contains(&self.theta_retrieval) {
            return err("theta_retrieval must lie in [0, 1]");
        }
        if !self.retry_delta.is_finite() || self.retry_delta < 0.0 {
            return err("retry_delta must be finite and non-negative");
        }
        if self.beam_width == 0 {
            return err("beam_width must be at least 1");
        }
        self.weights = self.weights.normalized()?;
        Ok(self)
    }
}

/// Per-edge pheromone, defined exactly on the network's edge set.
#[derive(Debug, Clone, PartialEq)]
pub struct PheromoneTable {
    tau: BTreeMap<(ServiceId, ServiceId), f64>,
}

impl PheromoneTable {
    pub fn uniform(net: &SemanticNetwork, tau0: f64) -> Self {
        PheromoneTable {
            tau: net
                .edges()
                .map(|(from, to, _)| ((from.clone(), to.clone()), tau0))
                .collect(),
        }
    }

    pub fn get(&self, from: &ServiceId, to: &ServiceId) -> Option<f64> {
        self.tau.get(&(from.clone(), to.clone())).copied()
    }

    pub fn get_mut(&mut self, from: &ServiceId, to: &ServiceId) -> Option<&mut f64> {
        self.tau.get_mut(&(from.clone(), to.clone()))
    }

    pub fn len(&self) -> usize {
        self.tau.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tau.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&(ServiceId, ServiceId), &f64)> {
        self.tau.iter()
    }
}

/// QoS aggregated along a composition: sums for response time and cost,
/// products for availability and reliability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathQos {
    pub rt_sum_ms: f64,
    pub cost_sum: f64,
    pub availability_product: f64,
    pub reliability_product: f64,
}

/// An ordered service composition with its aggregate QoS and scalar score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompositionPath {
    pub services: Vec<ServiceId>,
    pub qos: PathQos,
    /// Mean traversed-edge weight; 1 for single-service paths.
    pub mean_edge_sim: f64,
    pub score: f64,
}

impl CompositionPath {
    /// Builds a path from an ordered id sequence, checking that the
    /// services exist, do not repeat, and are linked by network edges.
    pub fn assemble(
        net: &SemanticNetwork,
        registry: &Registry,
        services: Vec<ServiceId>,
        weights: &Weights,
    ) -> Result<Self, AcoError> {
        if services.is_empty() {
            return Err(AcoError::EmptyPath);
        }
        let mut seen = BTreeSet::new();
        let mut qos = PathQos {
            rt_sum_ms: 0.0,
            cost_sum: 0.0,
            availability_product: 1.0,
            reliability_product: 1.0,
        };
        for id in &services {
            if !seen.insert(id.clone()) {
                return Err(AcoError::RepeatedService(id.clone()));
            }
            let svc = registry
                .get(id)
                .ok_or_else(|| AcoError::UnknownService(id.clone()))?;
            qos.rt_sum_ms += svc.qos.response_time_ms;
            qos.cost_sum += svc.qos.cost;
            qos.availability_product *= svc.qos.availability;
            qos.reliability_product *= svc.qos.reliability;
        }
        let mean_edge_sim = if services.len() == 1 {
            1.0
        } else {
            let mut sum = 0.0;
            for pair in services.windows(2) {
                let info = net.edge(&pair[0], &pair[1]).ok_or_else(|| {
                    AcoError::MissingEdge {
                        from: pair[0].clone(),
                        to: pair[1].clone(),
                    }
                })?;
                sum += info.weight;
            }
            sum / (services.len() - 1) as f64
        };
        let score = score_aggregates(mean_edge_sim, &qos, weights);
        Ok(CompositionPath {
            services,
            qos,
            mean_edge_sim,
            score,
        })
    }
}

pub(crate) fn score_aggregates(mean_edge_sim: f64, qos: &PathQos, w: &Weights) -> f64 {
    w.similarity * mean_edge_sim
        + w.availability * qos.availability_product
        + w.reliability * qos.reliability_product
        + w.response_time * (1.0 / (1.0 + qos.rt_sum_ms / RT_SOFT_MS))
        + w.cost * (1.0 / (1.0 + qos.cost_sum / COST_SOFT))
}

/// Recomputes a path's score from its stored aggregates.
pub fn score_path(path: &CompositionPath, weights: &Weights) -> f64 {
    score_aggregates(path.mean_edge_sim, &path.qos, weights)
}

/// True iff every input of `svc` is matched by some available concept at
/// `theta_match` or better; vacuously true for input-less services.
pub fn invokable(
    ontology: &Ontology,
    svc: &ServiceDescription,
    available: &BTreeSet<ConceptId>,
    theta_match: f64,
) -> bool {
    svc.inputs.iter().all(|input| {
        available.iter().any(|c| {
            ontology
                .similarity(c, input)
                .expect("available concepts resolve in the ontology")
                >= theta_match
        })
    })
}

/// Simulates the composition from the request's provided concepts: every
/// service must be invokable in order, and every required concept must be
/// matched at the end.
pub fn path_valid(
    ontology: &Ontology,
    path: &[&ServiceDescription],
    req: &Request,
    theta_match: f64,
) -> bool {
    let mut available = req.provided.clone();
    for svc in path {
        if !invokable(ontology, svc, &available, theta_match) {
            return false;
        }
        available.extend(svc.outputs.iter().cloned());
    }
    req.required.iter().all(|goal| {
        available.iter().any(|c| {
            ontology
                .similarity(c, goal)
                .expect("request concepts resolve in the ontology")
                >= theta_match
        })
    })
}

// ---------------------------------------------------------------------------
// Compiled engine: concept universe as bit masks, adjacency by index.

struct CompiledEdge {
    to: usize,
    tau_ix: usize,
    weight: f64,
    eta_pow: f64,
}

pub(crate) struct Engine<'a> {
    net: &'a SemanticNetwork,
    registry: &'a Registry,
    params: AcoParams,
    ids: Vec<&'a ServiceId>,
    inputs: Vec<Vec<usize>>,
    out_mask: Vec<BitSet>,
    matchers: Vec<BitSet>,
    provided_mask: BitSet,
    required: Vec<usize>,
    adj: Vec<Vec<CompiledEdge>>,
    pub(crate) n_edges: usize,
}

impl<'a> Engine<'a> {
    pub(crate) fn build(
        net: &'a SemanticNetwork,
        registry: &'a Registry,
        ontology: &Ontology,
        req: &Request,
        params: &AcoParams,
    ) -> Result<Self, AcoError> {
        let params = params.clone().validated()?;
        if registry.is_empty() {
            return Err(AcoError::EmptyRegistry);
        }
        req.validate(ontology)?;

        let services = registry.services();
        let n = services.len();
        let ids: Vec<&ServiceId> = services.iter().map(|s| &s.id).collect();

        // Concept universe: everything any service or the request mentions.
        let mut universe: BTreeSet<&ConceptId> = BTreeSet::new();
        for svc in services {
            universe.extend(svc.inputs.iter());
            universe.extend(svc.outputs.iter());
        }
        universe.extend(req.provided.iter());
        universe.extend(req.required.iter());
        let universe: Vec<&ConceptId> = universe.into_iter().collect();
        let concept_ix: BTreeMap<&ConceptId, usize> = universe
            .iter()
            .enumerate()
            .map(|(ix, c)| (*c, ix))
            .collect();
        let u = universe.len();

        // matchers[c] = concepts that satisfy an input (or goal) typed c.
        let mut matchers = Vec::with_capacity(u);
        for &target in &universe {
            let mut mask = BitSet::new(u);
            for (j, &candidate) in universe.iter().enumerate() {
                let sim = ontology
                    .similarity(candidate, target)
                    .expect("universe concepts resolve in the ontology");
                if sim >= params.theta_match {
                    mask.insert(j);
                }
            }
            matchers.push(mask);
        }

        let inputs: Vec<Vec<usize>> = services
            .iter()
            .map(|s| s.inputs.iter().map(|c| concept_ix[c]).collect())
            .collect();
        let out_mask: Vec<BitSet> = services
            .iter()
            .map(|s| {
                let mut mask = BitSet::new(u);
                for c in &s.outputs {
                    mask.insert(concept_ix[c]);
                }
                mask
            })
            .collect();
        let mut provided_mask = BitSet::new(u);
        for c in &req.provided {
            provided_mask.insert(concept_ix[c]);
        }
        let required: Vec<usize> = req.required.iter().map(|c| concept_ix[c]).collect();

        let stats = QosStats::from_registry(registry).map_err(|_| AcoError::EmptyRegistry)?;
        let utility: Vec<f64> = services.iter().map(|s| stats.utility(&s.qos)).collect();

        let mut adj: Vec<Vec<CompiledEdge>> = (0..n).map(|_| Vec::new()).collect();
        let mut n_edges = 0;
        for (from, to, info) in net.edges() {
            let from_ix = registry
                .position(from)
                .ok_or_else(|| AcoError::UnknownService(from.clone()))?;
            let to_ix = registry
                .position(to)
                .ok_or_else(|| AcoError::UnknownService(to.clone()))?;
            let eta = 0.5 * info.weight + 0.5 * utility[to_ix];
            adj[from_ix].push(CompiledEdge {
                to: to_ix,
                tau_ix: n_edges,
                weight: info.weight,
                eta_pow: eta.powf(params.beta),
            });
            n_edges += 1;
        }

        Ok(Engine {
            net,
            registry,
            params,
            ids,
            inputs,
            out_mask,
            matchers,
            provided_mask,
            required,
            adj,
            n_edges,
        })
    }

    pub(crate) fn service_count(&self) -> usize {
        self.ids.len()
    }

    pub(crate) fn id_of(&self, ix: usize) -> &ServiceId {
        self.ids[ix]
    }

    fn index_of(&self, id: &ServiceId) -> Result<usize, AcoError> {
        self.registry
            .position(id)
            .ok_or_else(|| AcoError::UnknownService(id.clone()))
    }

    pub(crate) fn invokable_ix(&self, svc: usize, available: &BitSet) -> bool {
        self.inputs[svc]
            .iter()
            .all(|&input| self.matchers[input].intersects(available))
    }

    pub(crate) fn goal_met(&self, available: &BitSet) -> bool {
        self.required
            .iter()
            .all(|&goal| self.matchers[goal].intersects(available))
    }

    pub(crate) fn provided_mask(&self) -> &BitSet {
        &self.provided_mask
    }

    pub(crate) fn out_mask(&self, svc: usize) -> &BitSet {
        &self.out_mask[svc]
    }

    pub(crate) fn neighbors(&self, svc: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.adj[svc].iter().map(|e| (e.to, e.weight))
    }

    fn tau_ix(&self, from: usize, to: usize) -> usize {
        self.adj[from]
            .iter()
            .find(|e| e.to == to)
            .expect("deposits follow traversed edges")
            .tau_ix
    }

    pub(crate) fn qos_of(&self, ix: usize) -> &crate::registry::QosVector {
        &self.registry.services()[ix].qos
    }

    /// One probabilistic walk; `Some(path)` iff the goal was satisfied.
    fn walk<R: Rng>(&self, tau: &[f64], start: usize, rng: &mut R) -> Option<Vec<usize>> {
        if !self.invokable_ix(start, &self.provided_mask) {
            return None;
        }
        let n = self.ids.len();
        let mut available = self.provided_mask.clone();
        let mut visited = vec![false; n];
        let mut path = vec![start];
        visited[start] = true;
        available.union_with(&self.out_mask[start]);
        if self.goal_met(&available) {
            return Some(path);
        }
        let mut weights: Vec<f64> = Vec::new();
        let mut candidates: Vec<&CompiledEdge> = Vec::new();
        loop {
            if path.len() >= self.params.max_path_len {
                return None;
            }
            let cur = *path.last().expect("path starts non-empty");
            candidates.clear();
            candidates.extend(
                self.adj[cur]
                    .iter()
                    .filter(|e| !visited[e.to] && self.invokable_ix(e.to, &available)),
            );
            let chosen = match candidates.len() {
                0 => return None,
                1 => candidates[0],
                _ => {
                    weights.clear();
                    let mut total = 0.0;
                    for e in &candidates {
                        let t = tau[e.tau_ix];
                        let tp = if self.params.alpha == 1.0 {
                            t
                        } else {
                            t.powf(self.params.alpha)
                        };
                        let w = tp * e.eta_pow;
                        weights.push(w);
                        total += w;
                    }
                    if total > 0.0 && total.is_finite() {
                        let draw = rng.random::<f64>() * total;
                        let mut acc = 0.0;
                        let mut pick = candidates.len() - 1;
                        for (i, w) in weights.iter().enumerate() {
                            acc += w;
                            if draw < acc {
                                pick = i;
                                break;
                            }
                        }
                        candidates[pick]
                    } else {
                        candidates[rng.random_range(0..candidates.len())]
                    }
                }
            };
            path.push(chosen.to);
            visited[chosen.to] = true;
            available.union_with(&self.out_mask[chosen.to]);
            if self.goal_met(&available) {
                return Some(path);
            }
        }
    }

    fn assemble(&self, path_ixs: &[usize]) -> CompositionPath {
        let services = path_ixs.iter().map(|&ix| self.ids[ix].clone()).collect();
        CompositionPath::assemble(self.net, self.registry, services, &self.params.weights)
            .expect("walk paths follow existing edges over known services")
    }
}

/// RNG stream for one ant: the master seed keys the cipher, and the
/// (retry, iteration, ant) triple selects a dedicated stream, so ant
/// scheduling cannot perturb the draws.
fn ant_rng(seed: u64, retry: u32, iteration: u32, ant: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let stream =
        (u64::from(retry) << 56) | (u64::from(iteration & 0x00FF_FFFF) << 32) | (ant as u64);
    rng.set_stream(stream);
    rng
}

/// One probabilistic ant walk over the public structures.
///
/// `pheromone` must be defined on exactly the network's edge set. Returns
/// `Ok(None)` when the walk ends without satisfying the request.
#[allow(clippy::too_many_arguments)]
pub fn ant_walk<R: Rng>(
    net: &SemanticNetwork,
    registry: &Registry,
    ontology: &Ontology,
    pheromone: &PheromoneTable,
    start: &ServiceId,
    req: &Request,
    params: &AcoParams,
    rng: &mut R,
) -> Result<Option<CompositionPath>, AcoError> {
    if !net.contains_node(start) {
        return Err(AcoError::NotInNetwork(start.clone()));
    }
    let engine = Engine::build(net, registry, ontology, req, params)?;
    if pheromone.len() != engine.n_edges {
        return Err(AcoError::PheromoneMismatch);
    }
    let mut tau = vec![0.0; engine.n_edges];
    let mut edge_ix = 0;
    for (from, to, _) in net.edges() {
        tau[edge_ix] = pheromone
            .get(from, to)
            .ok_or(AcoError::PheromoneMismatch)?;
        edge_ix += 1;
    }
    let start_ix = engine.index_of(start)?;
    Ok(engine
        .walk(&tau, start_ix, rng)
        .map(|ixs| engine.assemble(&ixs)))
}

/// Outcome of [`solve`].
#[derive(Debug, Clone, PartialEq)]
pub struct CompositionResult {
    pub best: Option<CompositionPath>,
    /// Retry rounds consumed: 0 when the first round succeeds, up to
    /// `max_retries` when every round fails.
    pub retries_used: u32,
    /// Iterations actually executed across all rounds; rounds with no
    /// retrieved ants execute none.
    pub iterations_run: u32,
    /// Ant count of the last executed round (one ant per initial service).
    pub ants_per_iteration: usize,
    /// Best goal-satisfying score of each executed iteration.
    pub per_iteration_best: Vec<Option<f64>>,
}

fn better_path(candidate: &CompositionPath, incumbent: Option<&CompositionPath>) -> bool {
    match incumbent {
        None => true,
        Some(cur) => {
            candidate.score > cur.score
                || (candidate.score == cur.score
                    && (candidate.services.len() < cur.services.len()
                        || (candidate.services.len() == cur.services.len()
                            && candidate.services < cur.services)))
        }
    }
}

/// Full composition pipeline: retrieve initial services, iterate ant
/// walks with pheromone update, and relax the retrieval threshold when a
/// round finds nothing.
pub fn solve(
    net: &SemanticNetwork,
    tree: &ClusterTree,
    registry: &Registry,
    ontology: &Ontology,
    req: &Request,
    params: &AcoParams,
    mode: ExecMode,
) -> Result<CompositionResult, AcoError> {
    let params = params.clone().validated()?;
    let engine = Engine::build(net, registry, ontology, req, &params)?;

    let mut best: Option<CompositionPath> = None;
    let mut per_iteration_best = Vec::new();
    let mut iterations_run = 0u32;
    let mut ants_per_iteration = 0usize;
    let mut retries_used = 0u32;

    for retry in 0..=params.max_retries {
        retries_used = retry;
        let theta = (params.theta_retrieval - f64::from(retry) * params.retry_delta).max(0.0);
        let retrieval = tree.find_initial_services(ontology, req, theta, params.beam_width);
        let ants: Vec<usize> = retrieval
            .ranked
            .iter()
            .map(|id| engine.index_of(id))
            .collect::<Result<_, _>>()?;
        ants_per_iteration = ants.len();

        if !ants.is_empty() {
            let mut tau = vec![params.tau0; engine.n_edges];
            for iteration in 0..params.n_iterations {
                let walks = map_indexed(mode, ants.len(), |a| {
                    let mut rng = ant_rng(params.seed, retry, iteration, a);
                    engine
                        .walk(&tau, ants[a], &mut rng)
                        .map(|ixs| (ixs.clone(), engine.assemble(&ixs)))
                });
                iterations_run += 1;
                for t in tau.iter_mut() {
                    *t = (*t * (1.0 - params.rho)).max(TAU_FLOOR);
                }
                let mut iteration_best: Option<f64> = None;
                for (ixs, path) in walks.into_iter().flatten() {
                    for pair in ixs.windows(2) {
                        tau[engine.tau_ix(pair[0], pair[1])] +=
                            params.deposit_scale * path.score;
                    }
                    if iteration_best.is_none_or(|b| path.score > b) {
                        iteration_best = Some(path.score);
                    }
                    if better_path(&path, best.as_ref()) {
                        best = Some(path);
                    }
                }
                per_iteration_best.push(iteration_best);
            }
        }
        if best.is_some() {
            break;
        }
    }

    Ok(CompositionResult {
        best,
        retries_used,
        iterations_run,
        ants_per_iteration,
        per_iteration_best,
    })
}
