//! Hierarchical cluster tree over services.
//!
//! Services are clustered bottom-up (complete linkage over one minus
//! signature similarity) into a dendrogram, which is cut into leaf clusters
//! of at most `leaf_cap` services. Publication inserts incrementally along
//! the most-similar path, locally re-splitting any leaf that outgrows
//! `2·leaf_cap`. Retrieval descends from the root with a beam of width `k`,
//! scoring cluster signatures against the request and finally ranking the
//! services of the surviving leaf clusters by input invokability; an
//! instrumented comparison counter backs the benchmark reports.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;
use thiserror::Error;

use crate::aco::Request;
use crate::exec::{map_indexed, ExecMode};
use crate::ontology::{ConceptId, Ontology, SimTable};
use crate::registry::{Registry, ServiceDescription, ServiceId};

#[derive(Debug, Error)]
pub enum ClusterError {
    #[error("cannot build a cluster tree over an empty registry")]
    EmptyRegistry,
    #[error("leaf capacity must be at least 1")]
    InvalidLeafCap,
    #[error("service {0} is already clustered")]
    DuplicateService(ServiceId),
}

/// Concept-frequency representative of a service or cluster.
///
/// A leaf service counts each of its input/output concepts once; an
/// internal node's signature is the entry-wise sum of its children's.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Signature {
    pub in_freq: BTreeMap<ConceptId, u64>,
    pub out_freq: BTreeMap<ConceptId, u64>,
}

impl Signature {
    pub fn of_service(svc: &ServiceDescription) -> Self {
        Signature {
            in_freq: svc.inputs.iter().map(|c| (c.clone(), 1)).collect(),
            out_freq: svc.outputs.iter().map(|c| (c.clone(), 1)).collect(),
        }
    }

    /// Request signature: provided concepts feed the input side, required
    /// concepts the output side.
    pub fn of_request(req: &Request) -> Self {
        Signature {
            in_freq: req.provided.iter().map(|c| (c.clone(), 1)).collect(),
            out_freq: req.required.iter().map(|c| (c.clone(), 1)).collect(),
        }
    }

    pub fn add(&mut self, other: &Signature) {
        for (c, w) in &other.in_freq {
            *self.in_freq.entry(c.clone()).or_insert(0) += w;
        }
        for (c, w) in &other.out_freq {
            *self.out_freq.entry(c.clone()).or_insert(0) += w;
        }
    }
}

/// Symmetric frequency-weighted coverage of one concept-frequency side
/// against another. Two empty sides are perfectly covered; exactly one
/// empty side is not covered at all.
fn side_coverage(
    ontology: &Ontology,
    p: &BTreeMap<ConceptId, u64>,
    q: &BTreeMap<ConceptId, u64>,
) -> f64 {
    match (p.is_empty(), q.is_empty()) {
        (true, true) => return 1.0,
        (true, false) | (false, true) => return 0.0,
        _ => {}
    }
    let best = |c: &ConceptId, side: &BTreeMap<ConceptId, u64>| {
        side.keys()
            .map(|d| {
                ontology
                    .similarity(c, d)
                    .expect("signatures reference known concepts")
            })
            .fold(0.0_f64, f64::max)
    };
    let mut num_p = 0.0;
    let mut den_p = 0.0;
    for (c, w) in p {
        num_p += *w as f64 * best(c, q);
        den_p += *w as f64;
    }
    let mut num_q = 0.0;
    let mut den_q = 0.0;
    for (d, v) in q {
        num_q += *v as f64 * best(d, p);
        den_q += *v as f64;
    }
    (num_p + num_q) / (den_p + den_q)
}

/// Similarity of two signatures in [0, 1]: the mean of input-side and
/// output-side coverage.
pub fn signature_similarity(ontology: &Ontology, p: &Signature, q: &Signature) -> f64 {
    (side_coverage(ontology, &p.in_freq, &q.in_freq)
        + side_coverage(ontology, &p.out_freq, &q.out_freq))
        / 2.0
}

// Index-resolved signature for the batch distance matrix.
struct IxSig {
    ins: Vec<(usize, f64)>,
    outs: Vec<(usize, f64)>,
}

impl IxSig {
    fn resolve(ontology: &Ontology, sig: &Signature) -> Self {
        let conv = |m: &BTreeMap<ConceptId, u64>| {
            m.iter()
                .map(|(c, w)| {
                    (
                        ontology
                            .node_ix(c)
                            .expect("signatures reference known concepts"),
                        *w as f64,
                    )
                })
                .collect()
        };
        IxSig {
            ins: conv(&sig.in_freq),
            outs: conv(&sig.out_freq),
        }
    }
}

fn side_coverage_ix(table: &SimTable, p: &[(usize, f64)], q: &[(usize, f64)]) -> f64 {
    match (p.is_empty(), q.is_empty()) {
        (true, true) => return 1.0,
        (true, false) | (false, true) => return 0.0,
        _ => {}
    }
    let best = |c: usize, side: &[(usize, f64)]| {
        side.iter()
            .map(|&(d, _)| table.get(c, d))
            .fold(0.0_f64, f64::max)
    };
    let mut num_p = 0.0;
    let mut den_p = 0.0;
    for &(c, w) in p {
        num_p += w * best(c, q);
        den_p += w;
    }
    let mut num_q = 0.0;
    let mut den_q = 0.0;
    for &(d, v) in q {
        num_q += v * best(d, p);
        den_q += v;
    }
    (num_p + num_q) / (den_p + den_q)
}

fn signature_similarity_ix(table: &SimTable, p: &IxSig, q: &IxSig) -> f64 {
    (side_coverage_ix(table, &p.ins, &q.ins) + side_coverage_ix(table, &p.outs, &q.outs)) / 2.0
}

enum Dendro {
    Leaf(usize),
    Branch {
        left: Box<Dendro>,
        right: Box<Dendro>,
        n_leaves: usize,
    },
}

impl Dendro {
    fn n_leaves(&self) -> usize {
        match self {
            Dendro::Leaf(_) => 1,
            Dendro::Branch { n_leaves, .. } => *n_leaves,
        }
    }

    fn collect_leaves(&self, out: &mut Vec<usize>) {
        match self {
            Dendro::Leaf(ix) => out.push(*ix),
            Dendro::Branch { left, right, .. } => {
                left.collect_leaves(out);
                right.collect_leaves(out);
            }
        }
    }
}

/// Complete-linkage agglomeration over a dense distance matrix. Equal
/// distances merge in lexicographic order of the involved clusters'
/// smallest service ids.
fn agglomerate(n: usize, mut dist: Vec<f64>, ids: &[&ServiceId]) -> Dendro {
    debug_assert_eq!(dist.len(), n * n);
    let mut alive: Vec<bool> = vec![true; n];
    let mut nodes: Vec<Option<Dendro>> = (0..n).map(|i| Some(Dendro::Leaf(i))).collect();
    let mut min_id: Vec<&ServiceId> = ids.to_vec();

    for _ in 1..n {
        let mut best: Option<(f64, (&ServiceId, &ServiceId), usize, usize)> = None;
        for a in 0..n {
            if !alive[a] {
                continue;
            }
            for b in (a + 1)..n {
                if !alive[b] {
                    continue;
                }
                let d = dist[a * n + b];
                let key = if min_id[a] <= min_id[b] {
                    (min_id[a], min_id[b])
                } else {
                    (min_id[b], min_id[a])
                };
                let better = match &best {
                    None => true,
                    Some((bd, bkey, _, _)) => d < *bd || (d == *bd && key < *bkey),
                };
                if better {
                    best = Some((d, key, a, b));
                }
            }
        }
        let (_, _, a, b) = best.expect("at least one live pair remains");
        let left = nodes[a].take().expect("slot a is live");
        let right = nodes[b].take().expect("slot b is live");
        let n_leaves = left.n_leaves() + right.n_leaves();
        nodes[a] = Some(Dendro::Branch {
            left: Box::new(left),
            right: Box::new(right),
            n_leaves,
        });
        alive[b] = false;
        if min_id[b] < min_id[a] {
            min_id[a] = min_id[b];
        }
        for k in 0..n {
            if k == a || !alive[k] {
                continue;
            }
            let d = dist[a * n + k].max(dist[b * n + k]);
            dist[a * n + k] = d;
            dist[k * n + a] = d;
        }
    }

    let root_ix = alive.iter().position(|&a| a).expect("one live slot remains");
    nodes[root_ix].take().expect("root slot is live")
}

enum Node {
    Internal {
        sig: Signature,
        n_services: usize,
        min_id: ServiceId,
        children: Vec<Node>,
    },
    Leaf {
        sig: Signature,
        min_id: ServiceId,
        members: Vec<(ServiceId, Signature)>,
    },
}

impl Node {
    fn sig(&self) -> &Signature {
        match self {
            Node::Internal { sig, .. } | Node::Leaf { sig, .. } => sig,
        }
    }

    fn n_services(&self) -> usize {
        match self {
            Node::Internal { n_services, .. } => *n_services,
            Node::Leaf { members, .. } => members.len(),
        }
    }

    fn min_id(&self) -> &ServiceId {
        match self {
            Node::Internal { min_id, .. } | Node::Leaf { min_id, .. } => min_id,
        }
    }

    fn is_leaf(&self) -> bool {
        matches!(self, Node::Leaf { .. })
    }
}

/// Cuts a dendrogram into the cluster-tree form: maximal subtrees holding
/// at most `leaf_cap` services become leaf clusters.
fn cut(dendro: &Dendro, items: &[(ServiceId, Signature)], leaf_cap: usize) -> Node {
    if dendro.n_leaves() <= leaf_cap {
        let mut leaf_ixs = Vec::new();
        dendro.collect_leaves(&mut leaf_ixs);
        let mut members: Vec<(ServiceId, Signature)> = leaf_ixs
            .into_iter()
            .map(|ix| items[ix].clone())
            .collect();
        members.sort_by(|a, b| a.0.cmp(&b.0));
        let mut sig = Signature::default();
        for (_, msig) in &members {
            sig.add(msig);
        }
        let min_id = members[0].0.clone();
        return Node::Leaf {
            sig,
            min_id,
            members,
        };
    }
    match dendro {
        Dendro::Leaf(_) => unreachable!("single leaf always fits leaf_cap >= 1"),
        Dendro::Branch { left, right, .. } => {
            let children = vec![
                cut(left, items, leaf_cap),
                cut(right, items, leaf_cap),
            ];
            let mut sig = Signature::default();
            for ch in &children {
                sig.add(ch.sig());
            }
            let n_services = children.iter().map(Node::n_services).sum();
            let min_id = children
                .iter()
                .map(|c| c.min_id())
                .min()
                .expect("branch has children")
                .clone();
            Node::Internal {
                sig,
                n_services,
                min_id,
                children,
            }
        }
    }
}

fn tree_from_items(
    ontology: &Ontology,
    items: Vec<(ServiceId, Signature)>,
    leaf_cap: usize,
) -> Node {
    let n = items.len();
    let mut dist = vec![0.0; n * n];
    for a in 0..n {
        for b in (a + 1)..n {
            let d = 1.0 - signature_similarity(ontology, &items[a].1, &items[b].1);
            dist[a * n + b] = d;
            dist[b * n + a] = d;
        }
    }
    let ids: Vec<&ServiceId> = items.iter().map(|(id, _)| id).collect();
    let dendro = agglomerate(n, dist, &ids);
    cut(&dendro, &items, leaf_cap)
}

/// Ranked retrieval output plus the instrumented comparison count.
#[derive(Debug, Clone, PartialEq)]
pub struct Retrieval {
    /// Services scoring at least the retrieval threshold, best first
    /// (ties by id).
    pub ranked: Vec<ServiceId>,
    /// Cluster-node scorings plus leaf-service scorings performed.
    pub comparisons: usize,
}

#[derive(Serialize)]
struct NodeDump<'a> {
    n_services: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    children: Option<Vec<NodeDump<'a>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    services: Option<Vec<&'a ServiceId>>,
}

#[derive(Serialize)]
struct TreeDump<'a> {
    leaf_cap: usize,
    n_services: usize,
    root: NodeDump<'a>,
}

/// Agglomerative cluster tree with incremental insertion and beam
/// retrieval.
pub struct ClusterTree {
    leaf_cap: usize,
    root: Node,
    ids: BTreeSet<ServiceId>,
}

impl ClusterTree {
    /// Clusters the whole registry. `leaf_cap` bounds leaf-cluster size at
    /// build time (insertions may grow a leaf up to twice that).
    pub fn build(
        registry: &Registry,
        ontology: &Ontology,
        leaf_cap: usize,
        mode: ExecMode,
    ) -> Result<Self, ClusterError> {
        if leaf_cap == 0 {
            return Err(ClusterError::InvalidLeafCap);
        }
        if registry.is_empty() {
            return Err(ClusterError::EmptyRegistry);
        }
        let services = registry.services();
        let n = services.len();
        let items: Vec<(ServiceId, Signature)> = services
            .iter()
            .map(|s| (s.id.clone(), Signature::of_service(s)))
            .collect();

        // Dense distance matrix through the cached similarity table; rows
        // are independent.
        let table = ontology.sim_table();
        let ixsigs: Vec<IxSig> = items
            .iter()
            .map(|(_, sig)| IxSig::resolve(ontology, sig))
            .collect();
        let rows = map_indexed(mode, n, |a| {
            let mut row = vec![0.0; n];
            for (b, other) in ixsigs.iter().enumerate() {
                if a != b {
                    row[b] = 1.0 - signature_similarity_ix(&table, &ixsigs[a], other);
                }
            }
            row
        });
        let mut dist = vec![0.0; n * n];
        for (a, row) in rows.into_iter().enumerate() {
            dist[a * n..(a + 1) * n].copy_from_slice(&row);
        }

        let ids_ref: Vec<&ServiceId> = items.iter().map(|(id, _)| id).collect();
        let dendro = agglomerate(n, dist, &ids_ref);
        let root = cut(&dendro, &items, leaf_cap);
        let ids = items.into_iter().map(|(id, _)| id).collect();
        Ok(ClusterTree {
            leaf_cap,
            root,
            ids,
        })
    }

    pub fn leaf_cap(&self) -> usize {
        self.leaf_cap
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn contains(&self, id: &ServiceId) -> bool {
        self.ids.contains(id)
    }

    /// Inserts a published service: descend along the most-similar child,
    /// update signatures on the path, and locally re-split the reached
    /// leaf if it now exceeds twice the leaf capacity.
    pub fn insert_service(
        &mut self,
        ontology: &Ontology,
        svc: &ServiceDescription,
    ) -> Result<(), ClusterError> {
        if self.ids.contains(&svc.id) {
            return Err(ClusterError::DuplicateService(svc.id.clone()));
        }
        let sig = Signature::of_service(svc);
        insert_rec(&mut self.root, ontology, &svc.id, &sig, self.leaf_cap);
        self.ids.insert(svc.id.clone());
        Ok(())
    }

    /// Beam descent: keep the `beam_width` request-most-similar cluster
    /// nodes per level; rank the surviving leaves' services by mean best
    /// input match against the request's provided concepts (input-less
    /// services rank 1) and return those at or above `theta_retrieval`.
    pub fn find_initial_services(
        &self,
        ontology: &Ontology,
        req: &Request,
        theta_retrieval: f64,
        beam_width: usize,
    ) -> Retrieval {
        let k = beam_width.max(1);
        let req_sig = Signature::of_request(req);
        let mut comparisons = 0usize;

        let mut frontier: Vec<(f64, &Node)> = vec![(1.0, &self.root)];
        while frontier.iter().any(|(_, n)| !n.is_leaf()) {
            let mut candidates: Vec<(f64, &Node)> = Vec::new();
            for (score, node) in frontier {
                match node {
                    Node::Leaf { .. } => candidates.push((score, node)),
                    Node::Internal { children, .. } => {
                        for child in children {
                            comparisons += 1;
                            let s = signature_similarity(ontology, child.sig(), &req_sig);
                            candidates.push((s, child));
                        }
                    }
                }
            }
            candidates.sort_by(|a, b| {
                b.0.total_cmp(&a.0).then_with(|| a.1.min_id().cmp(b.1.min_id()))
            });
            candidates.truncate(k);
            frontier = candidates;
        }

        let mut scored: Vec<(f64, &ServiceId)> = Vec::new();
        for (_, node) in &frontier {
            if let Node::Leaf { members, .. } = node {
                for (id, msig) in members {
                    comparisons += 1;
                    scored.push((invokability_score(ontology, msig, req), id));
                }
            }
        }
        scored.retain(|(s, _)| *s >= theta_retrieval);
        scored.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| a.1.cmp(b.1)));
        Retrieval {
            ranked: scored.into_iter().map(|(_, id)| id.clone()).collect(),
            comparisons,
        }
    }

    /// Service ids of every leaf cluster, in tree order.
    pub fn leaf_memberships(&self) -> Vec<Vec<&ServiceId>> {
        let mut out = Vec::new();
        collect_leaves(&self.root, &mut out);
        out
    }

    /// Recomputes every structural invariant: leaf sizes within
    /// `1..=2·leaf_cap`, signatures equal to the sum of their descendants,
    /// and leaves partitioning the inserted id set.
    pub fn verify_consistency(&self) -> Result<(), String> {
        let mut seen = BTreeSet::new();
        verify_node(&self.root, self.leaf_cap, &mut seen)?;
        if seen != self.ids {
            return Err("leaf membership does not partition the service id set".into());
        }
        Ok(())
    }

    /// Inspection document: nested cluster structure with leaf membership.
    pub fn to_dump_json(&self) -> String {
        fn dump(node: &Node) -> NodeDump<'_> {
            match node {
                Node::Internal { children, .. } => NodeDump {
                    n_services: node.n_services(),
                    children: Some(children.iter().map(dump).collect()),
                    services: None,
                },
                Node::Leaf { members, .. } => NodeDump {
                    n_services: members.len(),
                    children: None,
                    services: Some(members.iter().map(|(id, _)| id).collect()),
                },
            }
        }
        let doc = TreeDump {
            leaf_cap: self.leaf_cap,
            n_services: self.ids.len(),
            root: dump(&self.root),
        };
        let mut out = serde_json::to_string_pretty(&doc).expect("tree dump serialization");
        out.push('\n');
        out
    }
}

/// Mean best-match similarity of a service's inputs against the request's
/// provided concepts; 1 for input-less services. This is the score leaf
/// retrieval and the linear-scan baseline rank by.
pub fn invokability_score(ontology: &Ontology, sig: &Signature, req: &Request) -> f64 {
    if sig.in_freq.is_empty() {
        return 1.0;
    }
    let mut sum = 0.0;
    for input in sig.in_freq.keys() {
        let best = req
            .provided
            .iter()
            .map(|c| {
                ontology
                    .similarity(c, input)
                    .expect("validated request references known concepts")
            })
            .fold(0.0_f64, f64::max);
        sum += best;
    }
    sum / sig.in_freq.len() as f64
}

fn insert_rec(
    node: &mut Node,
    ontology: &Ontology,
    id: &ServiceId,
    sig: &Signature,
    leaf_cap: usize,
) {
    match node {
        Node::Leaf {
            sig: node_sig,
            min_id,
            members,
        } => {
            node_sig.add(sig);
            if id < min_id {
                *min_id = id.clone();
            }
            let pos = members
                .binary_search_by(|(mid, _)| mid.cmp(id))
                .expect_err("duplicate ids are rejected before descent");
            members.insert(pos, (id.clone(), sig.clone()));
            if members.len() > 2 * leaf_cap {
                let items = std::mem::take(members);
                *node = tree_from_items(ontology, items, leaf_cap);
            }
        }
        Node::Internal {
            sig: node_sig,
            n_services,
            min_id,
            children,
        } => {
            node_sig.add(sig);
            *n_services += 1;
            if id < min_id {
                *min_id = id.clone();
            }
            let mut best_ix = 0;
            let mut best_score = f64::NEG_INFINITY;
            for (ix, child) in children.iter().enumerate() {
                let s = signature_similarity(ontology, child.sig(), sig);
                let better = s > best_score
                    || (s == best_score && {
                        let cur = &children[best_ix];
                        child.n_services() < cur.n_services()
                            || (child.n_services() == cur.n_services()
                                && child.min_id() < cur.min_id())
                    });
                if better {
                    best_ix = ix;
                    best_score = s;
                }
            }
            insert_rec(&mut children[best_ix], ontology, id, sig, leaf_cap);
        }
    }
}

fn collect_leaves<'a>(node: &'a Node, out: &mut Vec<Vec<&'a ServiceId>>) {
    match node {
        Node::Leaf { members, .. } => {
            out.push(members.iter().map(|(id, _)| id).collect());
        }
        Node::Internal { children, .. } => {
            for child in children {
                collect_leaves(child, out);
            }
        }
    }
}

fn verify_node(
    node: &Node,
    leaf_cap: usize,
    seen: &mut BTreeSet<ServiceId>,
) -> Result<Signature, String> {
    match node {
        Node::Leaf {
            sig,
            min_id,
            members,
        } => {
            if members.is_empty() || members.len() > 2 * leaf_cap {
                return Err(format!(
                    "leaf size {} outside 1..={}",
                    members.len(),
                    2 * leaf_cap
                ));
            }
            let mut expected = Signature::default();
            for (id, msig) in members {
                if !seen.insert(id.clone()) {
                    return Err(format!("service {id} appears in more than one leaf"));
                }
                expected.add(msig);
            }
            if &expected != sig {
                return Err(format!("leaf signature mismatch at {min_id}"));
            }
            if min_id != &members[0].0 {
                return Err(format!("leaf min id {min_id} is not the smallest member"));
            }
            Ok(expected)
        }
        Node::Internal {
            sig,
            n_services,
            min_id,
            children,
        } => {
            if children.len() < 2 {
                return Err("internal node with fewer than two children".into());
            }
            let mut expected = Signature::default();
            let mut count = 0;
            for child in children {
                expected.add(&verify_node(child, leaf_cap, seen)?);
                count += child.n_services();
            }
            if &expected != sig {
                return Err(format!("internal signature mismatch at {min_id}"));
            }
            if count != *n_services {
                return Err(format!(
                    "internal count mismatch at {min_id}: {count} != {n_services}"
                ));
            }
            if Some(min_id) != children.iter().map(Node::min_id).min() {
                return Err(format!("internal min id {min_id} is not minimal"));
            }
            Ok(expected)
        }
    }
}
