//! JSON Lines import/export: every node (sorted by id), then every edge.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{Graph, GraphError, NodeId, Ontology, SemanticEdge, SemanticNode};
use crate::value::Value;

#[derive(Debug, Error)]
pub enum SnapshotError {
    #[error("line {line}: {source}")]
    Json {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error("line {line}: {source}")]
    Graph {
        line: usize,
        #[source]
        source: GraphError,
    },
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum Record {
    Node {
        id: NodeId,
        #[serde(rename = "type")]
        entity_type: String,
        attributes: BTreeMap<String, Value>,
    },
    Edge {
        verb: String,
        from: NodeId,
        to: NodeId,
    },
}

impl Graph {
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for n in self.nodes.values() {
            let rec = Record::Node {
                id: n.id.clone(),
                entity_type: n.entity_type.clone(),
                attributes: n.attributes.clone(),
            };
            out.push_str(&serde_json::to_string(&rec).expect("node serializes"));
            out.push('\n');
        }
        for e in &self.edges {
            let rec = Record::Edge {
                verb: e.verb.clone(),
                from: e.from.clone(),
                to: e.to.clone(),
            };
            out.push_str(&serde_json::to_string(&rec).expect("edge serializes"));
            out.push('\n');
        }
        out
    }

    /// Rebuilds a graph from [`Graph::to_jsonl`] output, validating every record.
    pub fn from_jsonl(ontology: Arc<Ontology>, text: &str) -> Result<Graph, SnapshotError> {
        let mut g = Graph::new(ontology);
        for (i, line) in text.lines().enumerate() {
            let line_no = i + 1;
            if line.trim().is_empty() {
                continue;
            }
            let rec: Record = serde_json::from_str(line).map_err(|source| SnapshotError::Json {
                line: line_no,
                source,
            })?;
            let res = match rec {
                Record::Node {
                    id,
                    entity_type,
                    attributes,
                } => g
                    .upsert_node(SemanticNode {
                        id,
                        entity_type,
                        attributes,
                    })
                    .map(|_| ()),
                Record::Edge { verb, from, to } => {
                    g.add_edge(SemanticEdge { from, verb, to }).map(|_| ())
                }
            };
            res.map_err(|source| SnapshotError::Graph {
                line: line_no,
                source,
            })?;
        }
        Ok(g)
    }
}
