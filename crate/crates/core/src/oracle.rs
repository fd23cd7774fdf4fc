//! Exhaustive composition oracle for desk-scale instances.
//!
//! Enumerates every simple network path that starts from a service
//! invokable on the request's provided concepts, pruning branches whose
//! next service is not invokable, and returns the valid path with the
//! highest score (ties: shorter path, then lexicographic id sequence).
//! The node-count guard keeps accidental factorial blowups out of test
//! runs; pass `force` to search larger networks anyway.

use thiserror::Error;

use crate::aco::{score_aggregates, AcoError, AcoParams, CompositionPath, Engine, PathQos, Request, Weights};
use crate::bits::BitSet;
use crate::network::SemanticNetwork;
use crate::ontology::Ontology;
use crate::registry::{Registry, ServiceId};

/// Largest network the oracle searches without `force`.
pub const DEFAULT_NODE_GUARD: usize = 14;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error(
        "network has {nodes} nodes, above the exhaustive-search guard of {guard}; \
         rerun with force to search anyway"
    )]
    GuardExceeded { nodes: usize, guard: usize },
    #[error(transparent)]
    Aco(#[from] AcoError),
}

struct Frame {
    qos: PathQos,
    edge_weight_sum: f64,
}

struct Search<'e, 'a> {
    engine: &'e Engine<'a>,
    weights: Weights,
    max_path_len: usize,
    path: Vec<usize>,
    visited: Vec<bool>,
    best: Option<(f64, Vec<usize>)>,
}

impl Search<'_, '_> {
    fn candidate(&mut self, score: f64) {
        let better = match &self.best {
            None => true,
            Some((best_score, best_path)) => {
                score > *best_score
                    || (score == *best_score
                        && (self.path.len() < best_path.len()
                            || (self.path.len() == best_path.len()
                                && self.id_seq_less(&self.path, best_path))))
            }
        };
        if better {
            self.best = Some((score, self.path.clone()));
        }
    }

    fn id_seq_less(&self, a: &[usize], b: &[usize]) -> bool {
        let ids = |ixs: &[usize]| -> Vec<&ServiceId> {
            ixs.iter().map(|&ix| self.engine.id_of(ix)).collect()
        };
        ids(a) < ids(b)
    }

    fn dfs(&mut self, current: usize, available: &BitSet, frame: Frame) {
        if self.engine.goal_met(available) {
            let mean_edge_sim = if self.path.len() == 1 {
                1.0
            } else {
                frame.edge_weight_sum / (self.path.len() - 1) as f64
            };
            let score = score_aggregates(mean_edge_sim, &frame.qos, &self.weights);
            self.candidate(score);
        }
        if self.path.len() >= self.max_path_len {
            return;
        }
        let neighbors: Vec<(usize, f64)> = self.engine.neighbors(current).collect();
        for (next, edge_weight) in neighbors {
            if self.visited[next] || !self.engine.invokable_ix(next, available) {
                continue;
            }
            let qos = self.engine.qos_of(next);
            let next_frame = Frame {
                qos: PathQos {
                    rt_sum_ms: frame.qos.rt_sum_ms + qos.response_time_ms,
                    cost_sum: frame.qos.cost_sum + qos.cost,
                    availability_product: frame.qos.availability_product * qos.availability,
                    reliability_product: frame.qos.reliability_product * qos.reliability,
                },
                edge_weight_sum: frame.edge_weight_sum + edge_weight,
            };
            let mut next_available = available.clone();
            next_available.union_with(self.engine.out_mask(next));
            self.visited[next] = true;
            self.path.push(next);
            self.dfs(next, &next_available, next_frame);
            self.path.pop();
            self.visited[next] = false;
        }
    }
}

/// Best valid composition by exhaustive enumeration, or `None` when no
/// simple path within `max_path_len` satisfies the request.
#[allow(clippy::too_many_arguments)]
pub fn exhaustive_best(
    net: &SemanticNetwork,
    registry: &Registry,
    ontology: &Ontology,
    req: &Request,
    theta_match: f64,
    max_path_len: usize,
    weights: &Weights,
    force: bool,
) -> Result<Option<CompositionPath>, OracleError> {
    if net.node_count() > DEFAULT_NODE_GUARD && !force {
        return Err(OracleError::GuardExceeded {
            nodes: net.node_count(),
            guard: DEFAULT_NODE_GUARD,
        });
    }
    let params = AcoParams {
        theta_match,
        max_path_len,
        weights: *weights,
        ..AcoParams::default()
    };
    let engine = Engine::build(net, registry, ontology, req, &params)?;
    let weights = weights.normalized()?;
    let n = engine.service_count();

    let mut search = Search {
        engine: &engine,
        weights,
        max_path_len,
        path: Vec::new(),
        visited: vec![false; n],
        best: None,
    };

    for start in 0..n {
        if !engine.invokable_ix(start, engine.provided_mask()) {
            continue;
        }
        let qos = engine.qos_of(start);
        let frame = Frame {
            qos: PathQos {
                rt_sum_ms: qos.response_time_ms,
                cost_sum: qos.cost,
                availability_product: qos.availability,
                reliability_product: qos.reliability,
            },
            edge_weight_sum: 0.0,
        };
        let mut available = engine.provided_mask().clone();
        available.union_with(engine.out_mask(start));
        search.visited[start] = true;
        search.path.push(start);
        search.dfs(start, &available, frame);
        search.path.pop();
        search.visited[start] = false;
    }

    let best = search.best.map(|(_, ixs)| {
        let services: Vec<ServiceId> = ixs.iter().map(|&ix| engine.id_of(ix).clone()).collect();
        CompositionPath::assemble(net, registry, services, &weights)
            .expect("oracle paths follow existing edges over known services")
    });
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aco::{path_valid, solve};
    use crate::cluster::ClusterTree;
    use crate::eval::{generate_dataset, GenParams};
    use crate::exec::ExecMode;
    use crate::fixtures;
    use crate::registry::ServiceDescription;

    fn build(
        ont: &Ontology,
        reg: &Registry,
        theta: f64,
    ) -> SemanticNetwork {
        SemanticNetwork::build(reg, ont, theta, ExecMode::Sequential)
    }

    #[test]
    fn chain_oracle_finds_the_unique_path() {
        let (ont, reg, req) = fixtures::chain();
        let net = build(&ont, &reg, 0.7);
        let best = exhaustive_best(&net, &reg, &ont, &req, 0.7, 10, &Weights::default(), false)
            .unwrap()
            .unwrap();
        let ids: Vec<&str> = best.services.iter().map(ServiceId::as_str).collect();
        assert_eq!(ids, ["A", "B", "C"]);
    }

    #[test]
    fn diamond_oracle_prefers_dominating_branch() {
        let (ont, reg, req) = fixtures::diamond();
        let net = build(&ont, &reg, 0.7);
        let best = exhaustive_best(&net, &reg, &ont, &req, 0.7, 10, &Weights::default(), false)
            .unwrap()
            .unwrap();
        let ids: Vec<&str> = best.services.iter().map(ServiceId::as_str).collect();
        assert_eq!(ids, ["A", "B", "D"]);
    }

    #[test]
    fn unreachable_goal_returns_none() {
        let (ont, reg, _) = fixtures::chain();
        let net = build(&ont, &reg, 0.7);
        let req = Request {
            provided: ["Start"].iter().map(|c| (*c).into()).collect(),
            required: ["Isolated"].iter().map(|c| (*c).into()).collect(),
        };
        let best =
            exhaustive_best(&net, &reg, &ont, &req, 0.7, 10, &Weights::default(), false).unwrap();
        assert!(best.is_none());
    }

    #[test]
    fn guard_blocks_large_networks_unless_forced() {
        let (ont, reg) = fixtures::two_families(8);
        let net = build(&ont, &reg, 0.7);
        let req = Request {
            provided: ["Car"].iter().map(|c| (*c).into()).collect(),
            required: ["Truck"].iter().map(|c| (*c).into()).collect(),
        };
        let err = exhaustive_best(&net, &reg, &ont, &req, 0.7, 4, &Weights::default(), false)
            .unwrap_err();
        assert!(matches!(err, OracleError::GuardExceeded { .. }));
        assert!(
            exhaustive_best(&net, &reg, &ont, &req, 0.7, 4, &Weights::default(), true).is_ok()
        );
    }

    /// Independent reference enumerator: tries every ordered arrangement
    /// of every service subset (up to the length cap) and keeps the best
    /// edge-connected valid one, using only public building blocks.
    fn naive_best(
        net: &SemanticNetwork,
        reg: &Registry,
        ont: &Ontology,
        req: &Request,
        theta: f64,
        max_len: usize,
        weights: &Weights,
    ) -> Option<CompositionPath> {
        fn extend(
            prefix: &mut Vec<ServiceId>,
            used: &mut Vec<bool>,
            best: &mut Option<CompositionPath>,
            net: &SemanticNetwork,
            reg: &Registry,
            ont: &Ontology,
            req: &Request,
            theta: f64,
            max_len: usize,
            weights: &Weights,
        ) {
            if !prefix.is_empty() {
                let edges_ok = prefix
                    .windows(2)
                    .all(|pair| net.edge(&pair[0], &pair[1]).is_some());
                if edges_ok {
                    let refs: Vec<&ServiceDescription> =
                        prefix.iter().map(|id| reg.get(id).unwrap()).collect();
                    if path_valid(ont, &refs, req, theta) {
                        let candidate =
                            CompositionPath::assemble(net, reg, prefix.clone(), weights).unwrap();
                        let replace = match best {
                            None => true,
                            Some(cur) => {
                                candidate.score > cur.score
                                    || (candidate.score == cur.score
                                        && (candidate.services.len() < cur.services.len()
                                            || (candidate.services.len() == cur.services.len()
                                                && candidate.services < cur.services)))
                            }
                        };
                        if replace {
                            *best = Some(candidate);
                        }
                    }
                }
            }
            if prefix.len() >= max_len {
                return;
            }
            for ix in 0..reg.len() {
                if used[ix] {
                    continue;
                }
                used[ix] = true;
                prefix.push(reg.services()[ix].id.clone());
                extend(prefix, used, best, net, reg, ont, req, theta, max_len, weights);
                prefix.pop();
                used[ix] = false;
            }
        }
        let mut best = None;
        let mut used = vec![false; reg.len()];
        extend(
            &mut Vec::new(),
            &mut used,
            &mut best,
            net,
            reg,
            ont,
            req,
            theta,
            max_len,
            weights,
        );
        best
    }

    #[test]
    fn agrees_with_naive_enumerator_on_random_instances() {
        let weights = Weights::default();
        for seed in 0..50u64 {
            let gen = GenParams {
                n_services: 8,
                n_concepts: 12,
                seed,
                ..GenParams::default()
            };
            let data = generate_dataset(&gen).unwrap();
            let net = build(&data.ontology, &data.registry, 0.7);
            let req = &data.requests[0];
            let fast = exhaustive_best(
                &net,
                &data.registry,
                &data.ontology,
                req,
                0.7,
                5,
                &weights,
                false,
            )
            .unwrap();
            let slow = naive_best(&net, &data.registry, &data.ontology, req, 0.7, 5, &weights);
            match (&fast, &slow) {
                (Some(f), Some(s)) => {
                    assert_eq!(f.services, s.services, "seed {seed}");
                    assert_eq!(f.score.to_bits(), s.score.to_bits(), "seed {seed}");
                }
                (None, None) => {}
                _ => panic!("seed {seed}: oracle {fast:?} vs naive {slow:?}"),
            }
        }
    }

    #[test]
    fn oracle_dominates_solver_on_random_instances() {
        for seed in 0..10u64 {
            let gen = GenParams {
                n_services: 10,
                n_concepts: 14,
                seed: 100 + seed,
                ..GenParams::default()
            };
            let data = generate_dataset(&gen).unwrap();
            let params = AcoParams {
                n_iterations: 30,
                seed,
                ..AcoParams::default()
            };
            let net = build(&data.ontology, &data.registry, params.theta_match);
            let tree =
                ClusterTree::build(&data.registry, &data.ontology, 10, ExecMode::Sequential)
                    .unwrap();
            let req = &data.requests[0];
            let oracle = exhaustive_best(
                &net,
                &data.registry,
                &data.ontology,
                req,
                params.theta_match,
                params.max_path_len,
                &params.weights,
                false,
            )
            .unwrap()
            .expect("planted request is solvable");
            let solved = solve(
                &net,
                &tree,
                &data.registry,
                &data.ontology,
                req,
                &params,
                ExecMode::Sequential,
            )
            .unwrap();
            if let Some(best) = solved.best {
                assert!(
                    oracle.score >= best.score,
                    "seed {seed}: solver {} beat oracle {}",
                    best.score,
                    oracle.score
                );
            }
        }
    }
}
