//! ON/WHEN evaluation and conflict-set formation.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::Issue;
use crate::graph::{AttrPredicate, Graph, GraphError, NodeId, SemanticNode};
use crate::ki::{Expr, KnowledgeItem, MatchClause, Operand, Piece, RelDir};
use crate::value::{CmpOp, Value};

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("rule `{rule}`: cannot apply `{op}` to {lhs} and {rhs}")]
    IncompatibleKinds {
        rule: String,
        op: CmpOp,
        lhs: &'static str,
        rhs: &'static str,
    },
    #[error("rule `{rule}`: {source}")]
    Graph {
        rule: String,
        #[source]
        source: GraphError,
    },
}

/// Variable assignments produced by matching a rule's ON block.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Binding {
    pub nodes: BTreeMap<String, NodeId>,
    pub values: BTreeMap<String, Value>,
}

impl Binding {
    /// Stable text form used to order bindings.
    pub fn key(&self) -> String {
        serde_json::to_string(self).expect("binding serializes")
    }

    pub fn lookup(&self, var: &str) -> Option<Value> {
        if let Some(v) = self.values.get(var) {
            return Some(v.clone());
        }
        self.nodes.get(var).map(|id| Value::Str(id.0.clone()))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Candidate {
    /// Index into the knowledge base.
    pub ki: usize,
    pub ki_id: String,
    pub binding: Binding,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConflictSet {
    pub turn: u32,
    pub cluster: Option<usize>,
    /// Sorted by rule id, then by binding key.
    pub candidates: Vec<Candidate>,
}

impl ConflictSet {
    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }

    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    /// Distinct rule ids, in candidate order. These are the learner's actions.
    pub fn actions(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for c in &self.candidates {
            if out.last() != Some(&c.ki_id) {
                out.push(c.ki_id.clone());
            }
        }
        out
    }

    /// First candidate (in deterministic order) of the given action.
    pub fn first_of(&self, action: &str) -> Option<&Candidate> {
        self.candidates.iter().find(|c| c.ki_id == action)
    }
}

pub(crate) struct Ctx<'a> {
    pub graph: &'a Graph,
    pub issue: &'a BTreeMap<String, Value>,
    pub binding: &'a Binding,
}

impl Ctx<'_> {
    /// `None` when the operand refers to something absent (an unset issue
    /// attribute, a node attribute the node lacks).
    pub fn operand(&self, op: &Operand) -> Option<Value> {
        match op {
            Operand::Lit(v) => Some(v.clone()),
            Operand::Var(v) => self.binding.lookup(v),
            Operand::VarAttr(v, a) => self.node_attr(v, a),
            Operand::Issue(a) => self.issue.get(a).cloned(),
            Operand::List(items) => items
                .iter()
                .map(|i| self.operand(i))
                .collect::<Option<Vec<_>>>()
                .map(Value::List),
            Operand::Template(pieces) => {
                let mut s = String::new();
                for p in pieces {
                    match p {
                        Piece::Text(t) => s.push_str(t),
                        Piece::Var(v) => s.push_str(&self.binding.lookup(v)?.render()),
                        Piece::VarAttr(v, a) => s.push_str(&self.node_attr(v, a)?.render()),
                        Piece::Issue(a) => s.push_str(&self.issue.get(a)?.render()),
                    }
                }
                Some(Value::Str(s))
            }
        }
    }

    fn node_attr(&self, var: &str, attr: &str) -> Option<Value> {
        let id = self.binding.nodes.get(var)?;
        self.graph.node(id)?.get(attr).cloned()
    }

    pub fn expr(&self, e: &Expr, rule: &str) -> Result<bool, EvalError> {
        Ok(match e {
            Expr::Const(b) => *b,
            Expr::Exists(a) => self.issue.contains_key(a),
            Expr::Not(inner) => !self.expr(inner, rule)?,
            Expr::And(items) => {
                for i in items {
                    if !self.expr(i, rule)? {
                        return Ok(false);
                    }
                }
                true
            }
            Expr::Or(items) => {
                for i in items {
                    if self.expr(i, rule)? {
                        return Ok(true);
                    }
                }
                false
            }
            Expr::Cmp(a, op, b) => {
                let (Some(l), Some(r)) = (self.operand(a), self.operand(b)) else {
                    return Ok(false);
                };
                op.eval(&l, &r)
                    .ok_or_else(|| EvalError::IncompatibleKinds {
                        rule: rule.to_string(),
                        op: *op,
                        lhs: l.kind_name(),
                        rhs: r.kind_name(),
                    })?
            }
        })
    }
}

/// Every `(rule, binding)` whose ON block matches the graph and whose WHEN
/// condition holds, in deterministic order.
pub fn match_rules(
    kb: &[KnowledgeItem],
    graph: &Graph,
    issue: &Issue,
) -> Result<Vec<Candidate>, EvalError> {
    let mut out = Vec::new();
    for (idx, ki) in kb.iter().enumerate() {
        let id = ki.id();
        for binding in match_on(ki, graph)? {
            let ctx = Ctx {
                graph,
                issue: issue.attributes(),
                binding: &binding,
            };
            if ctx.expr(&ki.when, &ki.name)? {
                out.push((id.clone(), binding.key(), idx, binding));
            }
        }
    }
    out.sort_by(|a, b| (&a.0, &a.1, a.2).cmp(&(&b.0, &b.1, b.2)));
    Ok(out
        .into_iter()
        .map(|(ki_id, _, ki, binding)| Candidate { ki, ki_id, binding })
        .collect())
}

/// All complete bindings of the rule's ON block.
pub fn match_on(ki: &KnowledgeItem, graph: &Graph) -> Result<Vec<Binding>, EvalError> {
    let mut out = Vec::new();
    extend(ki, 0, Binding::default(), graph, &mut out)?;
    Ok(out)
}

fn extend(
    ki: &KnowledgeItem,
    i: usize,
    binding: Binding,
    graph: &Graph,
    out: &mut Vec<Binding>,
) -> Result<(), EvalError> {
    let Some(clause) = ki.on.get(i) else {
        out.push(binding);
        return Ok(());
    };
    // constraints whose right side is already known become query predicates
    let mut preds = Vec::new();
    for c in &clause.constraints {
        let value = match &c.rhs {
            Operand::Lit(v) => Some(v.clone()),
            Operand::Var(v) => binding.lookup(v),
            _ => None,
        };
        if let Some(value) = value {
            preds.push(AttrPredicate {
                attr: c.attr.clone(),
                op: c.op,
                value,
            });
        }
    }
    let nodes = graph
        .query_nodes(&clause.entity, &preds)
        .map_err(|source| EvalError::Graph {
            rule: ki.name.clone(),
            source,
        })?;
    for node in nodes {
        if let Some(b) = bind_node(clause, node, &binding, graph) {
            extend(ki, i + 1, b, graph, out)?;
        }
    }
    Ok(())
}

/// Binds `node` to the clause's variable; `None` if any constraint or
/// relation fails.
pub(crate) fn bind_node(
    clause: &MatchClause,
    node: &SemanticNode,
    binding: &Binding,
    graph: &Graph,
) -> Option<Binding> {
    let mut b = binding.clone();
    b.nodes.insert(clause.var.clone(), node.id.clone());
    for c in &clause.constraints {
        let have = node.get(&c.attr)?;
        match &c.rhs {
            Operand::Var(v) if b.lookup(v).is_none() => {
                b.values.insert(v.clone(), have.clone());
            }
            rhs => {
                let want = match rhs {
                    Operand::Lit(v) => v.clone(),
                    Operand::Var(v) => b.lookup(v)?,
                    _ => return None,
                };
                if c.op.eval(have, &want) != Some(true) {
                    return None;
                }
            }
        }
    }
    for r in &clause.relations {
        let other = b.nodes.get(&r.var)?;
        let ok = match r.dir {
            RelDir::To => graph.has_edge(&r.verb, &node.id, other),
            RelDir::From => graph.has_edge(&r.verb, other, &node.id),
        };
        if !ok {
            return None;
        }
    }
    Some(b)
}

/// Re-checks that a binding still satisfies the rule against the current
/// graph and issue.
pub fn binding_holds(
    ki: &KnowledgeItem,
    binding: &Binding,
    graph: &Graph,
    issue: &Issue,
) -> Result<bool, EvalError> {
    let mut rebuilt = Binding::default();
    for clause in &ki.on {
        let Some(node) = binding.nodes.get(&clause.var).and_then(|id| graph.node(id)) else {
            return Ok(false);
        };
        if node.entity_type != clause.entity {
            return Ok(false);
        }
        match bind_node(clause, node, &rebuilt, graph) {
            Some(b) => rebuilt = b,
            None => return Ok(false),
        }
    }
    if rebuilt != *binding {
        return Ok(false);
    }
    let ctx = Ctx {
        graph,
        issue: issue.attributes(),
        binding,
    };
    ctx.expr(&ki.when, &ki.name)
}
