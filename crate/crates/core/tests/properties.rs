//! Property tests for the structural invariants: similarity axioms against
//! a brute-force reference, incremental/batch graph equality, threshold
//! monotonicity, QoS normalization invariance, cluster-tree consistency
//! under churn, and the retrieval metrics against direct set arithmetic.

use std::collections::BTreeSet;

use proptest::prelude::*;

use wsc_core::aco::Request;
use wsc_core::cluster::{invokability_score, ClusterTree, Signature};
use wsc_core::eval::{generate_dataset, linear_scan, precision, recall, GenParams};
use wsc_core::exec::ExecMode;
use wsc_core::network::SemanticNetwork;
use wsc_core::ontology::{ConceptId, Ontology};
use wsc_core::registry::{QosVector, Registry, ServiceId};

// --------------------------------------------------------------------------
// Random taxonomy: node i (1-based name "k{i}") gets parent among 0..i,
// where slot 0 stands for the virtual root.

fn taxonomy_strategy(max: usize) -> impl Strategy<Value = Vec<Option<usize>>> {
    (2..max).prop_flat_map(|n| {
        proptest::collection::vec(any::<usize>(), n).prop_map(|raw| {
            raw.iter()
                .enumerate()
                .map(|(i, r)| if i == 0 { None } else { Some(r % (i + 1)) }.filter(|p| *p > 0))
                .collect()
        })
    })
}

fn build_ontology(parents: &[Option<usize>]) -> Ontology {
    let entries: Vec<(String, Option<String>)> = parents
        .iter()
        .enumerate()
        .map(|(i, p)| (format!("k{}", i + 1), p.map(|p| format!("k{p}"))))
        .collect();
    Ontology::from_entries(&entries).expect("generated taxonomy is a tree")
}

/// Independent Wu–Palmer: ancestor chains intersected by hand.
/// Node indices are 1-based; 0 is the virtual root.
fn brute_force_similarity(parents: &[Option<usize>], a: usize, b: usize) -> f64 {
    let chain = |mut x: usize| {
        let mut out = vec![x];
        while x != 0 {
            x = parents[x - 1].unwrap_or(0);
            out.push(x);
        }
        out
    };
    let depth = |x: usize| chain(x).len();
    let ca = chain(a);
    let cb: BTreeSet<usize> = chain(b).into_iter().collect();
    let lca = *ca
        .iter()
        .find(|x| cb.contains(x))
        .expect("chains share the virtual root");
    if lca == 0 {
        return 0.0;
    }
    2.0 * depth(lca) as f64 / (depth(a) + depth(b)) as f64
}

proptest! {
    #[test]
    fn wu_palmer_matches_brute_force(parents in taxonomy_strategy(40)) {
        let ont = build_ontology(&parents);
        let n = parents.len();
        for a in 1..=n {
            for b in a..=n {
                let ca = ConceptId::new(format!("k{a}"));
                let cb = ConceptId::new(format!("k{b}"));
                let fast = ont.similarity(&ca, &cb).unwrap();
                let reference = brute_force_similarity(&parents, a, b);
                prop_assert!((fast - reference).abs() < 1e-12);
                // symmetry and range
                prop_assert_eq!(
                    fast.to_bits(),
                    ont.similarity(&cb, &ca).unwrap().to_bits()
                );
                prop_assert!((0.0..=1.0).contains(&fast));
                if a == b {
                    prop_assert_eq!(fast, 1.0);
                }
            }
        }
    }

    #[test]
    fn similarity_decreases_down_a_branch(parents in taxonomy_strategy(40)) {
        let ont = build_ontology(&parents);
        let n = parents.len();
        // for every node, walking its ancestor chain away from any fixed
        // ancestor must not increase similarity
        for d in 1..=n {
            let mut chain = vec![d];
            let mut cur = d;
            while let Some(p) = parents[cur - 1] {
                chain.push(p);
                cur = p;
            }
            for (i, &ancestor) in chain.iter().enumerate().skip(1) {
                let a = ConceptId::new(format!("k{ancestor}"));
                let mut prev = f64::INFINITY;
                // descend from the ancestor back toward d
                for &mid in chain[..=i].iter().rev() {
                    let m = ConceptId::new(format!("k{mid}"));
                    let s = ont.similarity(&a, &m).unwrap();
                    prop_assert!(s <= prev + 1e-15);
                    prev = s;
                }
            }
        }
    }

    #[test]
    fn incremental_and_batch_network_agree(
        gen_seed in 0u64..500,
        order in Just(()).prop_flat_map(|()| proptest::sample::subsequence((0..12).collect::<Vec<usize>>(), 12).prop_shuffle()),
    ) {
        let data = generate_dataset(&GenParams {
            n_services: 12,
            n_concepts: 14,
            seed: gen_seed,
            ..GenParams::default()
        })
        .unwrap();
        let batch = SemanticNetwork::build(&data.registry, &data.ontology, 0.7, ExecMode::Sequential);
        let mut reg = Registry::new(data.registry.ontology_ref());
        let mut net = SemanticNetwork::build(&reg, &data.ontology, 0.7, ExecMode::Sequential);
        for &ix in &order {
            let svc = data.registry.services()[ix].clone();
            let id = svc.id.clone();
            reg.publish(svc, &data.ontology).unwrap();
            net.add_service_edges(&data.ontology, &reg, &id).unwrap();
        }
        prop_assert_eq!(net, batch);
    }

    #[test]
    fn raising_the_match_threshold_never_adds_edges(
        gen_seed in 0u64..500,
        lo in 0.4f64..0.9,
        delta in 0.0f64..0.3,
    ) {
        let data = generate_dataset(&GenParams {
            n_services: 15,
            n_concepts: 16,
            seed: gen_seed,
            ..GenParams::default()
        })
        .unwrap();
        let hi = (lo + delta).min(1.0);
        let loose = SemanticNetwork::build(&data.registry, &data.ontology, lo, ExecMode::Sequential);
        let strict = SemanticNetwork::build(&data.registry, &data.ontology, hi, ExecMode::Sequential);
        for (from, to, info) in strict.edges() {
            let wide = loose.edge(from, to);
            prop_assert!(wide.is_some(), "edge {from}->{to} lost at looser threshold");
            // weight bounds hold everywhere
            prop_assert!(info.weight > 0.0 && info.weight <= 1.0);
            prop_assert!(!info.provided.is_empty());
        }
    }

    #[test]
    fn qos_utility_invariant_under_affine_rescaling(
        gen_seed in 0u64..200,
        scale in 0.1f64..10.0,
        shift in 0.0f64..100.0,
    ) {
        let data = generate_dataset(&GenParams {
            n_services: 10,
            n_concepts: 12,
            seed: gen_seed,
            ..GenParams::default()
        })
        .unwrap();
        let rescaled_reg = {
            let mut reg = Registry::new("x");
            for svc in data.registry.services() {
                let mut svc = svc.clone();
                svc.qos = QosVector {
                    response_time_ms: scale * svc.qos.response_time_ms + shift,
                    ..svc.qos
                };
                reg.publish(svc, &data.ontology).unwrap();
            }
            reg
        };
        for svc in data.registry.services() {
            let before = data.registry.qos_utility(&svc.id).unwrap();
            let after = rescaled_reg.qos_utility(&svc.id).unwrap();
            prop_assert!((before - after).abs() < 1e-9);
        }
    }

    #[test]
    fn max_utility_service_is_pareto_undominated(gen_seed in 0u64..300) {
        let data = generate_dataset(&GenParams {
            n_services: 12,
            n_concepts: 12,
            seed: gen_seed,
            ..GenParams::default()
        })
        .unwrap();
        let reg = &data.registry;
        let utilities: Vec<f64> = reg
            .services()
            .iter()
            .map(|s| reg.qos_utility(&s.id).unwrap())
            .collect();
        let best = utilities.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let dominates = |a: &QosVector, b: &QosVector| {
            let ge = a.response_time_ms <= b.response_time_ms
                && a.cost <= b.cost
                && a.availability >= b.availability
                && a.reliability >= b.reliability;
            let strict = a.response_time_ms < b.response_time_ms
                || a.cost < b.cost
                || a.availability > b.availability
                || a.reliability > b.reliability;
            ge && strict
        };
        for (ix, u) in utilities.iter().enumerate() {
            if *u == best {
                let argmax = &reg.services()[ix];
                for other in reg.services() {
                    prop_assert!(
                        !dominates(&other.qos, &argmax.qos),
                        "{} dominates the utility argmax {}",
                        other.id,
                        argmax.id
                    );
                }
            }
        }
    }

    #[test]
    fn precision_recall_match_direct_set_arithmetic(
        a in proptest::collection::btree_set(0u16..40, 0..20),
        b in proptest::collection::btree_set(0u16..40, 0..20),
    ) {
        let to_ids = |s: &BTreeSet<u16>| -> BTreeSet<ServiceId> {
            s.iter().map(|v| ServiceId::new(format!("s{v}"))).collect()
        };
        let (sa, sb) = (to_ids(&a), to_ids(&b));
        let inter = a.intersection(&b).count() as f64;
        match precision(&sa, &sb) {
            None => prop_assert!(b.is_empty()),
            Some(p) => prop_assert_eq!(p, inter / b.len() as f64),
        }
        match recall(&sa, &sb) {
            None => prop_assert!(a.is_empty()),
            Some(r) => prop_assert_eq!(r, inter / a.len() as f64),
        }
    }

    #[test]
    fn cluster_tree_survives_churn(
        gen_seed in 0u64..200,
        leaf_cap in 1usize..6,
        split in 4usize..20,
    ) {
        let data = generate_dataset(&GenParams {
            n_services: 24,
            n_concepts: 18,
            seed: gen_seed,
            ..GenParams::default()
        })
        .unwrap();
        let services = data.registry.services();
        let split = split.min(services.len() - 1);
        let mut reg = Registry::new("x");
        for svc in &services[..split] {
            reg.publish(svc.clone(), &data.ontology).unwrap();
        }
        let mut tree = ClusterTree::build(&reg, &data.ontology, leaf_cap, ExecMode::Sequential).unwrap();
        for svc in &services[split..] {
            tree.insert_service(&data.ontology, svc).unwrap();
            tree.verify_consistency().unwrap();
        }
        let total: usize = tree.leaf_memberships().iter().map(Vec::len).sum();
        prop_assert_eq!(total, services.len());
    }

    #[test]
    fn retrieval_is_sound_and_bounded(
        gen_seed in 0u64..200,
        theta in 0.0f64..1.0,
        k in 1usize..6,
    ) {
        let data = generate_dataset(&GenParams {
            n_services: 30,
            n_concepts: 20,
            seed: gen_seed,
            ..GenParams::default()
        })
        .unwrap();
        let tree = ClusterTree::build(&data.registry, &data.ontology, 4, ExecMode::Sequential).unwrap();
        for req in &data.requests {
            let r = tree.find_initial_services(&data.ontology, req, theta, k);
            for id in &r.ranked {
                let sig = Signature::of_service(data.registry.get(id).unwrap());
                prop_assert!(invokability_score(&data.ontology, &sig, req) >= theta);
            }
            let n_leaves = tree.leaf_memberships().len();
            prop_assert!(r.comparisons <= data.registry.len() + 2 * n_leaves);
            // every retrieved service also shows up in the linear scan
            let linear: BTreeSet<ServiceId> =
                linear_scan(&data.registry, &data.ontology, req, theta)
                    .ranked
                    .into_iter()
                    .collect();
            for id in &r.ranked {
                prop_assert!(linear.contains(id));
            }
        }
    }
}

/// Beam-width monotonicity over a spread of generated datasets: growing
/// the beam may add results but never loses one.
#[test]
fn beam_width_monotone_on_generated_datasets() {
    for seed in 0..30u64 {
        let data = generate_dataset(&GenParams {
            n_services: 40,
            n_concepts: 24,
            seed,
            ..GenParams::default()
        })
        .unwrap();
        let tree =
            ClusterTree::build(&data.registry, &data.ontology, 3, ExecMode::Sequential).unwrap();
        for req in &data.requests {
            let mut prev: Option<BTreeSet<ServiceId>> = None;
            for k in 1..=8 {
                let got: BTreeSet<ServiceId> = tree
                    .find_initial_services(&data.ontology, req, 0.5, k)
                    .ranked
                    .into_iter()
                    .collect();
                if let Some(prev) = &prev {
                    assert!(
                        prev.is_subset(&got),
                        "seed {seed}: beam {k} lost results present at {}",
                        k - 1
                    );
                }
                prev = Some(got);
            }
        }
    }
}

/// A request served entirely by one concept family never retrieves
/// services of another family.
#[test]
fn cross_family_retrieval_is_empty() {
    let (ont, reg) = wsc_core::fixtures::two_families(12);
    let tree = ClusterTree::build(&reg, &ont, 4, ExecMode::Sequential).unwrap();
    let req = Request {
        provided: [ConceptId::new("Dog")].into_iter().collect(),
        required: [ConceptId::new("Cat")].into_iter().collect(),
    };
    let r = tree.find_initial_services(&ont, &req, 0.5, 4);
    assert!(!r.ranked.is_empty());
    assert!(r.ranked.iter().all(|id| id.as_str().starts_with('a')));
}
