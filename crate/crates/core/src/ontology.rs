//! Concept taxonomy and Wu–Palmer semantic similarity.
//!
//! Every match decision in the engine (graph edges, cluster signatures,
//! invokability, goal tests) bottoms out in [`Ontology::similarity`], which
//! scores two concepts by the depth of their lowest common ancestor:
//! `2·depth(lca) / (depth(a) + depth(b))`, with a hard zero whenever the
//! only common ancestor is the virtual root.
//!
//! The taxonomy is a single-inheritance tree. Documents never name the
//! virtual root; it is inserted automatically and every concept without an
//! explicit parent hangs off it.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Name of the auto-inserted virtual root. Reserved: documents may
/// reference it as a parent but must not declare it.
pub const VIRTUAL_ROOT: &str = "Thing";

/// Case-sensitive identifier of a taxonomy concept.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ConceptId(String);

impl ConceptId {
    pub fn new(id: impl Into<String>) -> Self {
        ConceptId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for ConceptId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(&self.0, f)
    }
}

impl fmt::Debug for ConceptId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

impl From<&str> for ConceptId {
    fn from(s: &str) -> Self {
        ConceptId(s.to_owned())
    }
}

#[derive(Debug, Error)]
pub enum OntologyError {
    #[error("invalid concept id {0:?}: ids must be non-empty and contain no whitespace")]
    InvalidId(String),
    #[error("concept id {0:?} is reserved for the virtual root")]
    ReservedId(String),
    #[error("duplicate concept id {0}")]
    DuplicateConcept(ConceptId),
    #[error("concept {concept} references unknown parent {parent}")]
    UnknownParent { concept: ConceptId, parent: String },
    #[error("cycle detected through concept {0}")]
    CycleDetected(ConceptId),
    #[error("unknown concept {0}")]
    UnknownConcept(ConceptId),
    #[error("malformed ontology document: {0}")]
    Parse(String),
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct OntologyDoc {
    concepts: Vec<ConceptEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConceptEntry {
    id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    parent: Option<String>,
}

#[derive(Debug, Clone)]
struct ConceptNode {
    id: ConceptId,
    parent: usize,
    depth: u32,
}

/// Rooted single-inheritance concept taxonomy. Immutable after load.
#[derive(Debug, Clone)]
pub struct Ontology {
    nodes: Vec<ConceptNode>,
    index: HashMap<String, usize>,
}

const ROOT_IX: usize = 0;

impl Ontology {
    /// Builds a taxonomy from `(id, optional parent id)` pairs. Parents may
    /// be declared in any order; a missing parent means the virtual root.
    pub fn from_entries<S: AsRef<str>>(
        entries: &[(S, Option<S>)],
    ) -> Result<Self, OntologyError> {
        let root_id = ConceptId::new(VIRTUAL_ROOT);
        let mut nodes = vec![ConceptNode {
            id: root_id.clone(),
            parent: ROOT_IX,
            depth: 1,
        }];
        let mut index = HashMap::new();
        index.insert(VIRTUAL_ROOT.to_owned(), ROOT_IX);

        for (id, _) in entries {
            let id = id.as_ref();
            if id.is_empty() || id.contains(char::is_whitespace) {
                return Err(OntologyError::InvalidId(id.to_owned()));
            }
            if id == VIRTUAL_ROOT {
                return Err(OntologyError::ReservedId(id.to_owned()));
            }
            let ix = nodes.len();
            if index.insert(id.to_owned(), ix).is_some() {
                return Err(OntologyError::DuplicateConcept(ConceptId::new(id)));
            }
            nodes.push(ConceptNode {
                id: ConceptId::new(id),
                parent: ROOT_IX,
                depth: 0,
            });
        }

        for (entry_ix, (id, parent)) in entries.iter().enumerate() {
            if let Some(parent) = parent {
                let parent = parent.as_ref();
                let parent_ix = *index.get(parent).ok_or_else(|| {
                    OntologyError::UnknownParent {
                        concept: ConceptId::new(id.as_ref()),
                        parent: parent.to_owned(),
                    }
                })?;
                nodes[entry_ix + 1].parent = parent_ix;
            }
        }

        // Depth resolution doubles as cycle detection: a chain longer than
        // the node count cannot reach the root.
        let n = nodes.len();
        for start in 1..n {
            if nodes[start].depth != 0 {
                continue;
            }
            let mut chain = Vec::new();
            let mut cur = start;
            while nodes[cur].depth == 0 {
                if chain.len() > n {
                    return Err(OntologyError::CycleDetected(nodes[start].id.clone()));
                }
                chain.push(cur);
                cur = nodes[cur].parent;
            }
            let mut depth = nodes[cur].depth;
            for &ix in chain.iter().rev() {
                depth += 1;
                nodes[ix].depth = depth;
            }
        }

        Ok(Ontology { nodes, index })
    }

    /// Parses the ontology document: `{"concepts": [{"id", "parent"?}]}`.
    pub fn from_json(text: &str) -> Result<Self, OntologyError> {
        let doc: OntologyDoc =
            serde_json::from_str(text).map_err(|e| OntologyError::Parse(e.to_string()))?;
        let entries: Vec<(String, Option<String>)> = doc
            .concepts
            .into_iter()
            .map(|c| (c.id, c.parent))
            .collect();
        Ontology::from_entries(&entries)
    }

    /// Serializes back to the normalized document form (virtual root
    /// omitted, concepts in insertion order, root parents implicit).
    pub fn to_json(&self) -> String {
        let concepts = self
            .nodes
            .iter()
            .skip(1)
            .map(|node| ConceptEntry {
                id: node.id.as_str().to_owned(),
                parent: (node.parent != ROOT_IX)
                    .then(|| self.nodes[node.parent].id.as_str().to_owned()),
            })
            .collect();
        let mut out = serde_json::to_string_pretty(&OntologyDoc { concepts })
            .expect("ontology document serialization");
        out.push('\n');
        out
    }

    pub fn root(&self) -> &ConceptId {
        &self.nodes[ROOT_IX].id
    }

    /// Number of concepts including the virtual root.
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        false // the virtual root is always present
    }

    pub fn contains(&self, id: &ConceptId) -> bool {
        self.index.contains_key(id.as_str())
    }

    /// User concepts in insertion order (virtual root excluded).
    pub fn concepts(&self) -> impl Iterator<Item = &ConceptId> {
        self.nodes.iter().skip(1).map(|n| &n.id)
    }

    fn ix(&self, id: &ConceptId) -> Result<usize, OntologyError> {
        self.index
            .get(id.as_str())
            .copied()
            .ok_or_else(|| OntologyError::UnknownConcept(id.clone()))
    }

    pub(crate) fn node_ix(&self, id: &ConceptId) -> Option<usize> {
        self.index.get(id.as_str()).copied()
    }

    /// Depth of a concept; the virtual root has depth 1.
    pub fn depth(&self, id: &ConceptId) -> Result<u32, OntologyError> {
        Ok(self.nodes[self.ix(id)?].depth)
    }

    fn lca_ix(&self, mut a: usize, mut b: usize) -> usize {
        while self.nodes[a].depth > self.nodes[b].depth {
            a = self.nodes[a].parent;
        }
        while self.nodes[b].depth > self.nodes[a].depth {
            b = self.nodes[b].parent;
        }
        while a != b {
            a = self.nodes[a].parent;
            b = self.nodes[b].parent;
        }
        a
    }

    /// Lowest common ancestor of two concepts.
    pub fn lca(&self, a: &ConceptId, b: &ConceptId) -> Result<&ConceptId, OntologyError> {
        Ok(&self.nodes[self.lca_ix(self.ix(a)?, self.ix(b)?)].id)
    }

    /// Wu–Palmer similarity in [0, 1]; zero when the lowest common
    /// ancestor is the virtual root, one iff `a == b` (root excluded).
    pub fn similarity(&self, a: &ConceptId, b: &ConceptId) -> Result<f64, OntologyError> {
        let ia = self.ix(a)?;
        let ib = self.ix(b)?;
        Ok(self.similarity_ix(ia, ib))
    }

    fn similarity_ix(&self, ia: usize, ib: usize) -> f64 {
        let lca = self.lca_ix(ia, ib);
        if lca == ROOT_IX {
            return 0.0;
        }
        let lca_depth = f64::from(self.nodes[lca].depth);
        2.0 * lca_depth / f64::from(self.nodes[ia].depth + self.nodes[ib].depth)
    }

    /// Dense all-pairs similarity table for hot loops.
    pub(crate) fn sim_table(&self) -> SimTable {
        let n = self.nodes.len();
        let mut vals = vec![0.0; n * n];
        for a in 0..n {
            for b in a..n {
                let s = self.similarity_ix(a, b);
                vals[a * n + b] = s;
                vals[b * n + a] = s;
            }
        }
        SimTable { n, vals }
    }
}

/// Precomputed concept-pair similarities indexed by internal node index.
pub(crate) struct SimTable {
    n: usize,
    vals: Vec<f64>,
}

impl SimTable {
    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.vals[a * self.n + b]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn entry(id: &str, parent: Option<&str>) -> (String, Option<String>) {
        (id.to_owned(), parent.map(str::to_owned))
    }

    /// Thing→Vehicle→{Car,Truck}; Thing→Animal.
    fn small() -> Ontology {
        Ontology::from_entries(&[
            entry("Vehicle", None),
            entry("Car", Some("Vehicle")),
            entry("Truck", Some("Vehicle")),
            entry("Animal", None),
        ])
        .unwrap()
    }

    #[test]
    fn builds_and_assigns_depths() {
        let ont = Ontology::from_json(
            r#"{"concepts": [{"id": "Vehicle"}, {"id": "Car", "parent": "Vehicle"}]}"#,
        )
        .unwrap();
        assert_eq!(ont.len(), 3);
        assert_eq!(ont.depth(&"Thing".into()).unwrap(), 1);
        assert_eq!(ont.depth(&"Vehicle".into()).unwrap(), 2);
        assert_eq!(ont.depth(&"Car".into()).unwrap(), 3);
        assert_eq!(
            ont.lca(&"Car".into(), &"Vehicle".into()).unwrap(),
            &ConceptId::new("Vehicle")
        );
    }

    #[test]
    fn forward_parent_references_resolve() {
        let ont =
            Ontology::from_entries(&[entry("Car", Some("Vehicle")), entry("Vehicle", None)])
                .unwrap();
        assert_eq!(ont.depth(&"Car".into()).unwrap(), 3);
    }

    #[test]
    fn empty_document_is_root_only() {
        let ont = Ontology::from_json(r#"{"concepts": []}"#).unwrap();
        assert_eq!(ont.len(), 1);
        assert_eq!(ont.root(), &ConceptId::new("Thing"));
    }

    #[test]
    fn cycle_is_rejected() {
        let err = Ontology::from_entries(&[entry("A", Some("B")), entry("B", Some("A"))])
            .unwrap_err();
        assert!(matches!(err, OntologyError::CycleDetected(_)));
        let err = Ontology::from_entries(&[entry("A", Some("A"))]).unwrap_err();
        assert!(matches!(err, OntologyError::CycleDetected(_)));
    }

    #[test]
    fn duplicate_unknown_parent_and_reserved_ids_are_rejected() {
        assert!(matches!(
            Ontology::from_entries(&[entry("A", None), entry("A", None)]),
            Err(OntologyError::DuplicateConcept(_))
        ));
        assert!(matches!(
            Ontology::from_entries(&[entry("A", Some("Nope"))]),
            Err(OntologyError::UnknownParent { .. })
        ));
        assert!(matches!(
            Ontology::from_entries(&[entry("Thing", None)]),
            Err(OntologyError::ReservedId(_))
        ));
        // Referencing the root explicitly is fine, declaring it is not.
        let ont = Ontology::from_entries(&[entry("A", Some("Thing"))]).unwrap();
        assert_eq!(ont.depth(&"A".into()).unwrap(), 2);
    }

    #[test]
    fn wu_palmer_hand_values() {
        let ont = small();
        let sim = |a: &str, b: &str| ont.similarity(&a.into(), &b.into()).unwrap();
        assert_eq!(sim("Car", "Car"), 1.0);
        assert!((sim("Car", "Truck") - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(sim("Car", "Animal"), 0.0);
        assert!((sim("Car", "Vehicle") - 0.8).abs() < 1e-12);
        assert_eq!(sim("Car", "Truck"), sim("Truck", "Car"));
    }

    #[test]
    fn unknown_concept_errors() {
        let ont = small();
        assert!(matches!(
            ont.similarity(&"Car".into(), &"Boat".into()),
            Err(OntologyError::UnknownConcept(_))
        ));
    }

    #[test]
    fn json_round_trip_is_stable() {
        let ont = small();
        let text = ont.to_json();
        let again = Ontology::from_json(&text).unwrap();
        assert_eq!(again.to_json(), text);
    }

    #[test]
    fn sim_table_matches_direct_similarity() {
        let ont = small();
        let table = ont.sim_table();
        let ids: Vec<ConceptId> = ont.concepts().cloned().collect();
        for a in &ids {
            for b in &ids {
                let direct = ont.similarity(a, b).unwrap();
                let cached = table.get(ont.node_ix(a).unwrap(), ont.node_ix(b).unwrap());
                assert_eq!(direct.to_bits(), cached.to_bits());
            }
        }
    }
}
