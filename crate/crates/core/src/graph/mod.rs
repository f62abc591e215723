//! Semantic network: typed, attributed nodes and typed directed edges,
//! validated against an [`Ontology`].

mod ontology;
mod snapshot;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use ontology::{load_ontology, Ontology, OntologyError, VerbDecl};
pub use snapshot::SnapshotError;

use crate::value::{CmpOp, Value, ValueKind};

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub String);

impl NodeId {
    pub fn new(id: impl Into<String>) -> Self {
        NodeId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for NodeId {
    fn from(s: &str) -> Self {
        NodeId(s.to_string())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SemanticNode {
    pub id: NodeId,
    pub entity_type: String,
    pub attributes: BTreeMap<String, Value>,
}

impl SemanticNode {
    pub fn new(id: impl Into<String>, entity_type: impl Into<String>) -> Self {
        SemanticNode {
            id: NodeId(id.into()),
            entity_type: entity_type.into(),
            attributes: BTreeMap::new(),
        }
    }

    pub fn with(mut self, attr: impl Into<String>, value: impl Into<Value>) -> Self {
        self.attributes.insert(attr.into(), value.into());
        self
    }

    pub fn get(&self, attr: &str) -> Option<&Value> {
        self.attributes.get(attr)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SemanticEdge {
    pub from: NodeId,
    pub verb: String,
    pub to: NodeId,
}

impl SemanticEdge {
    pub fn new(verb: impl Into<String>, from: impl Into<NodeId>, to: impl Into<NodeId>) -> Self {
        SemanticEdge {
            from: from.into(),
            verb: verb.into(),
            to: to.into(),
        }
    }
}

impl From<String> for NodeId {
    fn from(s: String) -> Self {
        NodeId(s)
    }
}

/// One `attr op value` constraint of a node query.
#[derive(Clone, Debug, PartialEq)]
pub struct AttrPredicate {
    pub attr: String,
    pub op: CmpOp,
    pub value: Value,
}

impl AttrPredicate {
    pub fn new(attr: impl Into<String>, op: CmpOp, value: impl Into<Value>) -> Self {
        AttrPredicate {
            attr: attr.into(),
            op,
            value: value.into(),
        }
    }

    /// A missing attribute or an incomparable kind never matches.
    pub fn holds(&self, node: &SemanticNode) -> bool {
        node.get(&self.attr)
            .and_then(|v| self.op.eval(v, &self.value))
            .unwrap_or(false)
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum GraphError {
    #[error("unknown entity type `{0}`")]
    UnknownEntity(String),
    #[error("entity `{entity}` has no attribute `{attr}`")]
    UnknownAttribute { entity: String, attr: String },
    #[error("attribute `{entity}.{attr}` expects {expected}, got {found}")]
    KindMismatch {
        entity: String,
        attr: String,
        expected: ValueKind,
        found: &'static str,
    },
    #[error("unknown verb `{0}`")]
    UnknownVerb(String),
    #[error("verb `{verb}` connects {expected_from} -> {expected_to}, got {from} -> {to}")]
    EndpointType {
        verb: String,
        expected_from: String,
        expected_to: String,
        from: String,
        to: String,
    },
    #[error("edge endpoint `{0}` does not exist")]
    DanglingEndpoint(NodeId),
    #[error("node `{id}` is a {have}, cannot be re-typed as {want}")]
    Retype {
        id: NodeId,
        have: String,
        want: String,
    },
}

/// In-memory semantic network. Mutations go through `&mut self`; readers
/// that need isolation take a [`Graph::snapshot`].
#[derive(Clone, Debug)]
pub struct Graph {
    ontology: Arc<Ontology>,
    nodes: BTreeMap<NodeId, SemanticNode>,
    by_type: BTreeMap<String, BTreeSet<NodeId>>,
    edges: BTreeSet<SemanticEdge>,
    incoming: BTreeSet<(NodeId, String, NodeId)>,
    version: u64,
}

/// Graphs compare by content; the version counter is ignored.
impl PartialEq for Graph {
    fn eq(&self, other: &Self) -> bool {
        self.nodes == other.nodes && self.edges == other.edges
    }
}

impl Graph {
    pub fn new(ontology: Arc<Ontology>) -> Self {
        Graph {
            ontology,
            nodes: BTreeMap::new(),
            by_type: BTreeMap::new(),
            edges: BTreeSet::new(),
            incoming: BTreeSet::new(),
            version: 0,
        }
    }

    pub fn ontology(&self) -> &Arc<Ontology> {
        &self.ontology
    }

    pub fn version(&self) -> u64 {
        self.version
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn snapshot(&self) -> Graph {
        self.clone()
    }

    pub fn node(&self, id: &NodeId) -> Option<&SemanticNode> {
        self.nodes.get(id)
    }

    pub fn nodes(&self) -> impl Iterator<Item = &SemanticNode> {
        self.nodes.values()
    }

    pub fn edges(&self) -> impl Iterator<Item = &SemanticEdge> {
        self.edges.iter()
    }

    pub fn validate_node(&self, node: &SemanticNode) -> Result<(), GraphError> {
        if !self.ontology.has_entity(&node.entity_type) {
            return Err(GraphError::UnknownEntity(node.entity_type.clone()));
        }
        for (attr, value) in &node.attributes {
            let kind = self
                .ontology
                .attribute_kind(&node.entity_type, attr)
                .ok_or_else(|| GraphError::UnknownAttribute {
                    entity: node.entity_type.clone(),
                    attr: attr.clone(),
                })?;
            if !value.conforms_to(kind) {
                return Err(GraphError::KindMismatch {
                    entity: node.entity_type.clone(),
                    attr: attr.clone(),
                    expected: kind,
                    found: value.kind_name(),
                });
            }
        }
        Ok(())
    }

    /// Inserts the node, or replaces the attributes of the node with the same
    /// id. Re-typing an existing node is rejected.
    pub fn upsert_node(&mut self, node: SemanticNode) -> Result<NodeId, GraphError> {
        self.validate_node(&node)?;
        let id = node.id.clone();
        if let Some(existing) = self.nodes.get_mut(&id) {
            if existing.entity_type != node.entity_type {
                return Err(GraphError::Retype {
                    id,
                    have: existing.entity_type.clone(),
                    want: node.entity_type,
                });
            }
            if existing.attributes != node.attributes {
                existing.attributes = node.attributes;
            }
        } else {
            self.by_type
                .entry(node.entity_type.clone())
                .or_default()
                .insert(id.clone());
            self.nodes.insert(id.clone(), node);
        }
        self.version += 1;
        Ok(id)
    }

    /// Sets one attribute on an existing node.
    pub fn set_attribute(
        &mut self,
        id: &NodeId,
        attr: &str,
        value: Value,
    ) -> Result<(), GraphError> {
        let node = self
            .nodes
            .get(id)
            .ok_or_else(|| GraphError::DanglingEndpoint(id.clone()))?;
        let mut updated = node.clone();
        updated.attributes.insert(attr.to_string(), value);
        self.upsert_node(updated).map(|_| ())
    }

    /// Removes the node and every edge touching it.
    pub fn remove_node(&mut self, id: &NodeId) -> bool {
        let Some(node) = self.nodes.remove(id) else {
            return false;
        };
        if let Some(set) = self.by_type.get_mut(&node.entity_type) {
            set.remove(id);
        }
        let outgoing: Vec<SemanticEdge> = self.outgoing(id).cloned().collect();
        let incoming: Vec<SemanticEdge> = self.incoming_edges(id).collect();
        for e in outgoing.into_iter().chain(incoming) {
            self.remove_edge(&e);
        }
        self.version += 1;
        true
    }

    pub fn add_edge(&mut self, edge: SemanticEdge) -> Result<bool, GraphError> {
        let decl = self
            .ontology
            .verbs
            .get(&edge.verb)
            .ok_or_else(|| GraphError::UnknownVerb(edge.verb.clone()))?;
        let from = self
            .nodes
            .get(&edge.from)
            .ok_or_else(|| GraphError::DanglingEndpoint(edge.from.clone()))?;
        let to = self
            .nodes
            .get(&edge.to)
            .ok_or_else(|| GraphError::DanglingEndpoint(edge.to.clone()))?;
        if from.entity_type != decl.from || to.entity_type != decl.to {
            return Err(GraphError::EndpointType {
                verb: edge.verb.clone(),
                expected_from: decl.from.clone(),
                expected_to: decl.to.clone(),
                from: from.entity_type.clone(),
                to: to.entity_type.clone(),
            });
        }
        self.incoming
            .insert((edge.to.clone(), edge.verb.clone(), edge.from.clone()));
        let inserted = self.edges.insert(edge);
        if inserted {
            self.version += 1;
        }
        Ok(inserted)
    }

    pub fn remove_edge(&mut self, edge: &SemanticEdge) -> bool {
        let removed = self.edges.remove(edge);
        if removed {
            self.incoming
                .remove(&(edge.to.clone(), edge.verb.clone(), edge.from.clone()));
            self.version += 1;
        }
        removed
    }

    pub fn has_edge(&self, verb: &str, from: &NodeId, to: &NodeId) -> bool {
        self.outgoing(from).any(|e| e.verb == verb && &e.to == to)
    }

    pub fn outgoing<'a>(&'a self, from: &NodeId) -> impl Iterator<Item = &'a SemanticEdge> + 'a {
        let start = SemanticEdge {
            from: from.clone(),
            verb: String::new(),
            to: NodeId(String::new()),
        };
        let from = from.clone();
        self.edges
            .range(start..)
            .take_while(move |e| e.from == from)
    }

    pub fn incoming_edges<'a>(&'a self, to: &NodeId) -> impl Iterator<Item = SemanticEdge> + 'a {
        let start = (to.clone(), String::new(), NodeId(String::new()));
        let to = to.clone();
        self.incoming
            .range(start..)
            .take_while(move |(t, _, _)| *t == to)
            .map(|(t, verb, from)| SemanticEdge {
                from: from.clone(),
                verb: verb.clone(),
                to: t.clone(),
            })
    }

    pub fn ids_of_type(&self, entity_type: &str) -> impl Iterator<Item = &NodeId> {
        self.by_type.get(entity_type).into_iter().flatten()
    }

    /// Nodes of `entity_type` satisfying every predicate, sorted by id.
    pub fn query_nodes(
        &self,
        entity_type: &str,
        predicates: &[AttrPredicate],
    ) -> Result<Vec<&SemanticNode>, GraphError> {
        if !self.ontology.has_entity(entity_type) {
            return Err(GraphError::UnknownEntity(entity_type.to_string()));
        }
        Ok(self
            .ids_of_type(entity_type)
            .map(|id| &self.nodes[id])
            .filter(|n| predicates.iter().all(|p| p.holds(n)))
            .collect())
    }

    /// Full re-validation of every node and edge against the ontology.
    pub fn validate(&self) -> Result<(), GraphError> {
        for node in self.nodes.values() {
            self.validate_node(node)?;
        }
        for e in &self.edges {
            let decl = self
                .ontology
                .verbs
                .get(&e.verb)
                .ok_or_else(|| GraphError::UnknownVerb(e.verb.clone()))?;
            for (id, want) in [(&e.from, &decl.from), (&e.to, &decl.to)] {
                let n = self
                    .nodes
                    .get(id)
                    .ok_or_else(|| GraphError::DanglingEndpoint(id.clone()))?;
                if &n.entity_type != want {
                    return Err(GraphError::EndpointType {
                        verb: e.verb.clone(),
                        expected_from: decl.from.clone(),
                        expected_to: decl.to.clone(),
                        from: self
                            .nodes
                            .get(&e.from)
                            .map(|n| n.entity_type.clone())
                            .unwrap_or_default(),
                        to: self
                            .nodes
                            .get(&e.to)
                            .map(|n| n.entity_type.clone())
                            .unwrap_or_default(),
                    });
                }
            }
        }
        Ok(())
    }
}
