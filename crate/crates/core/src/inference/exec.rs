//! Transactional execution of a rule's DO program.

use std::collections::BTreeMap;

use thiserror::Error;

use super::matcher::{binding_holds, Binding, Ctx, EvalError};
use super::Issue;
use crate::graph::{Graph, GraphError, NodeId};
use crate::ki::{Action, KnowledgeItem};
use crate::value::Value;

#[derive(Debug, Error, PartialEq)]
pub enum HandlerError {
    #[error("action handler `{0}` is not configured")]
    NotConfigured(String),
    #[error("handler `{handler}` rejected `{command}`: {reason}")]
    Rejected {
        handler: String,
        command: String,
        reason: String,
    },
    #[error("handler `{handler}` transport failure: {reason}")]
    Transport { handler: String, reason: String },
}

/// Named action handlers. `check` must not have side effects; `dispatch`
/// is only called for commands that passed `check`.
pub trait HandlerSet {
    fn check(&self, handler: &str, command: &str) -> Result<(), HandlerError>;
    fn dispatch(&mut self, handler: &str, command: &str) -> Result<(), HandlerError>;
}

pub trait ActionHandler: Send {
    fn check(&self, command: &str) -> Result<(), String>;
    fn dispatch(&mut self, command: &str) -> Result<(), String>;
}

/// A map of boxed handlers keyed by name.
#[derive(Default)]
pub struct HandlerRegistry {
    handlers: BTreeMap<String, Box<dyn ActionHandler>>,
}

impl HandlerRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn register(&mut self, name: impl Into<String>, handler: Box<dyn ActionHandler>) {
        self.handlers.insert(name.into(), handler);
    }
}

impl HandlerSet for HandlerRegistry {
    fn check(&self, handler: &str, command: &str) -> Result<(), HandlerError> {
        let h = self
            .handlers
            .get(handler)
            .ok_or_else(|| HandlerError::NotConfigured(handler.to_string()))?;
        h.check(command).map_err(|reason| HandlerError::Rejected {
            handler: handler.to_string(),
            command: command.to_string(),
            reason,
        })
    }

    fn dispatch(&mut self, handler: &str, command: &str) -> Result<(), HandlerError> {
        let h = self
            .handlers
            .get_mut(handler)
            .ok_or_else(|| HandlerError::NotConfigured(handler.to_string()))?;
        h.dispatch(command)
            .map_err(|reason| HandlerError::Transport {
                handler: handler.to_string(),
                reason,
            })
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ExecError {
    #[error("rule `{0}` no longer matches the current graph and issue")]
    Stale(String),
    #[error("rule `{rule}`: cannot evaluate `{what}` (unbound or missing value)")]
    Interpolation { rule: String, what: String },
    #[error(transparent)]
    Handler(#[from] HandlerError),
    #[error("rule `{rule}`: {source}")]
    Graph {
        rule: String,
        #[source]
        source: GraphError,
    },
    #[error(transparent)]
    Eval(#[from] EvalError),
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ExecutionEffect {
    pub issue_changes: usize,
    pub graph_changes: usize,
    /// `(handler, command text)` in dispatch order.
    pub commands: Vec<(String, String)>,
}

/// Runs the DO program. Everything is evaluated against staged copies
/// first; the issue, the graph and the handlers are only touched once the
/// whole program has been validated.
pub fn execute(
    ki: &KnowledgeItem,
    binding: &Binding,
    graph: &mut Graph,
    issue: &mut Issue,
    handlers: &mut dyn HandlerSet,
    turn: u32,
) -> Result<ExecutionEffect, ExecError> {
    if !binding_holds(ki, binding, graph, issue)? {
        return Err(ExecError::Stale(ki.id()));
    }
    let mut staged = issue.attributes().clone();
    let mut graph_sets: Vec<(NodeId, String, Value)> = Vec::new();
    let mut effect = ExecutionEffect::default();

    for action in &ki.actions {
        let ctx = Ctx {
            graph,
            issue: &staged,
            binding,
        };
        let missing = |what: String| ExecError::Interpolation {
            rule: ki.name.clone(),
            what,
        };
        match action {
            Action::IssueSet { attr, value } => {
                let v = ctx
                    .operand(value)
                    .ok_or_else(|| missing(format!("issue.set {attr}")))?;
                staged.insert(attr.clone(), v);
                effect.issue_changes += 1;
            }
            Action::IssueUnset { attr } => {
                staged.remove(attr);
                effect.issue_changes += 1;
            }
            Action::GraphSet { var, attr, value } => {
                let v = ctx
                    .operand(value)
                    .ok_or_else(|| missing(format!("graph.set ${var}.{attr}")))?;
                let id = binding
                    .nodes
                    .get(var)
                    .cloned()
                    .ok_or_else(|| missing(format!("${var}")))?;
                let mut probe = graph
                    .node(&id)
                    .cloned()
                    .ok_or_else(|| missing(format!("${var}")))?;
                probe.attributes.insert(attr.clone(), v.clone());
                graph
                    .validate_node(&probe)
                    .map_err(|source| ExecError::Graph {
                        rule: ki.name.clone(),
                        source,
                    })?;
                graph_sets.push((id, attr.clone(), v));
            }
            Action::Handler { name, command } => {
                let text = match ctx.operand(command) {
                    Some(Value::Str(s)) => s,
                    Some(other) => other.render(),
                    None => return Err(missing(format!("handler {name} command"))),
                };
                handlers.check(name, &text)?;
                effect.commands.push((name.clone(), text));
            }
        }
    }

    for (id, attr, v) in graph_sets {
        graph
            .set_attribute(&id, &attr, v)
            .map_err(|source| ExecError::Graph {
                rule: ki.name.clone(),
                source,
            })?;
        effect.graph_changes += 1;
    }
    issue.replace_attributes(staged);
    issue.record(turn, ki.id());
    for (name, text) in &effect.commands {
        handlers.dispatch(name, text)?;
    }
    Ok(effect)
}
