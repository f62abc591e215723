//! Knowledge Item rule language.
//!
//! A rule has four blocks:
//!
//! ```text
//! ki found-city {
//!     description = "found a city on the destination tile"
//! }
//! on {
//!     match Unit as $u { kind == "settler", x == $x, y == $y }
//!     match Tile as $t { x == $x, y == $y } related via locatedOn from $u
//! }
//! when {
//!     issue.Destination == [$x, $y] and not exists issue.Hold
//! }
//! do {
//!     handler microciv "unit ${u.id}; press b"
//!     issue.unset Destination
//! }
//! ```
//!
//! `match` constraints bind a fresh `$var` the first time it appears on the
//! right of `==`; any other use of a variable must refer to an earlier
//! binding. `as $u` binds the node itself. WHEN only sees the Issue and
//! ON bindings. DO runs `issue.set`, `issue.unset`, `graph.set` and
//! `handler <name> <command>` statements; strings interpolate `${x}`,
//! `${u.attr}` and `${issue.attr}`.

mod lexer;
mod pack;
mod parser;
mod print;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use pack::{load_pack_dir, parse_pack, COMMON_PACK_DIR};
pub use parser::{parse_ki, parse_rules};

use crate::value::{CmpOp, Value};

#[derive(Debug, Error, PartialEq)]
pub enum KiError {
    #[error("{block} block, line {line}:{column}: {message}")]
    Syntax {
        block: &'static str,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("rule `{rule}`: unbound variable `${var}`")]
    UnboundVariable { rule: String, var: String },
    #[error("rule `{rule}`: {message}")]
    Invalid { rule: String, message: String },
    #[error("rule `{rule}`: do block is empty")]
    EmptyDo { rule: String },
    #[error("duplicate rule name `{name}` in pack `{pack}`")]
    DuplicateName { name: String, pack: String },
    #[error("{file}: {source}")]
    InFile {
        file: String,
        #[source]
        source: Box<KiError>,
    },
    #[error("{0}")]
    Io(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Piece {
    Text(String),
    Var(String),
    VarAttr(String, String),
    Issue(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Operand {
    Lit(Value),
    /// `$x`; for a node variable this is the node id.
    Var(String),
    /// `$u.attr`
    VarAttr(String, String),
    /// `issue.attr`
    Issue(String),
    /// A list with at least one non-literal element.
    List(Vec<Operand>),
    /// A string with at least one `${...}` interpolation.
    Template(Vec<Piece>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Expr {
    Const(bool),
    Cmp(Operand, CmpOp, Operand),
    Exists(String),
    Not(Box<Expr>),
    And(Vec<Expr>),
    Or(Vec<Expr>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    pub attr: String,
    pub op: CmpOp,
    pub rhs: Operand,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum RelDir {
    /// edge from this node to the other
    To,
    /// edge from the other node to this one
    From,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Relation {
    pub verb: String,
    pub dir: RelDir,
    pub var: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatchClause {
    pub entity: String,
    pub var: String,
    pub constraints: Vec<Constraint>,
    pub relations: Vec<Relation>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Action {
    IssueSet {
        attr: String,
        value: Operand,
    },
    IssueUnset {
        attr: String,
    },
    GraphSet {
        var: String,
        attr: String,
        value: Operand,
    },
    Handler {
        name: String,
        command: Operand,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KnowledgeItem {
    pub name: String,
    pub expert_tag: String,
    pub meta: BTreeMap<String, Value>,
    pub on: Vec<MatchClause>,
    pub when: Expr,
    pub actions: Vec<Action>,
}

impl KnowledgeItem {
    /// The action identifier used by the learner: `expert_tag/name`.
    pub fn id(&self) -> String {
        format!("{}/{}", self.expert_tag, self.name)
    }

    pub fn to_source(&self) -> String {
        print::print_rule(self)
    }

    /// Static checks: non-empty ON and DO, every variable bound before use.
    pub fn check(&self) -> Result<(), KiError> {
        let rule = self.name.clone();
        if self.on.is_empty() {
            return Err(KiError::Invalid {
                rule,
                message: "on block must match at least one entity".into(),
            });
        }
        if self.actions.is_empty() {
            return Err(KiError::EmptyDo { rule });
        }
        let scope = self.scope()?;
        let unbound = |var: &str| KiError::UnboundVariable {
            rule: self.name.clone(),
            var: var.to_string(),
        };
        let not_node = |var: &str| KiError::Invalid {
            rule: self.name.clone(),
            message: format!("`${var}` is not a node variable"),
        };
        let mut err = None;
        let mut visit = |op: &Operand| {
            if err.is_some() {
                return;
            }
            op.walk_vars(&mut |var, attr| {
                if err.is_some() {
                    return;
                }
                if !scope.values.contains(var) && !scope.nodes.contains(var) {
                    err = Some(unbound(var));
                } else if attr && !scope.nodes.contains(var) {
                    err = Some(not_node(var));
                }
            });
        };
        self.when.walk_operands(&mut visit);
        for a in &self.actions {
            match a {
                Action::IssueSet { value, .. } => visit(value),
                Action::IssueUnset { .. } => {}
                Action::GraphSet { var, value, .. } => {
                    visit(&Operand::VarAttr(var.clone(), String::new()));
                    visit(value);
                }
                Action::Handler { command, .. } => visit(command),
            }
        }
        match err {
            Some(e) => Err(e),
            None => Ok(()),
        }
    }

    /// Variables bound by the ON block, checking binding order on the way.
    pub fn scope(&self) -> Result<Scope, KiError> {
        let mut scope = Scope::default();
        for clause in &self.on {
            let fresh = |scope: &Scope, var: &str| {
                !scope.values.contains(var) && !scope.nodes.contains(var)
            };
            if !fresh(&scope, &clause.var) {
                return Err(KiError::Invalid {
                    rule: self.name.clone(),
                    message: format!("`${}` bound twice", clause.var),
                });
            }
            if clause.var == "issue" {
                return Err(KiError::Invalid {
                    rule: self.name.clone(),
                    message: "`$issue` is reserved".into(),
                });
            }
            scope.nodes.insert(clause.var.clone());
            for c in &clause.constraints {
                match &c.rhs {
                    Operand::Var(v) if fresh(&scope, v) => {
                        if c.op != CmpOp::Eq {
                            return Err(KiError::UnboundVariable {
                                rule: self.name.clone(),
                                var: v.clone(),
                            });
                        }
                        if v == "issue" {
                            return Err(KiError::Invalid {
                                rule: self.name.clone(),
                                message: "`$issue` is reserved".into(),
                            });
                        }
                        scope.values.insert(v.clone());
                    }
                    Operand::Var(_) | Operand::Lit(_) => {}
                    _ => {
                        return Err(KiError::Invalid {
                            rule: self.name.clone(),
                            message: "match constraints compare against a literal or a variable"
                                .into(),
                        })
                    }
                }
            }
            for r in &clause.relations {
                if !scope.nodes.contains(&r.var) || r.var == clause.var {
                    return Err(KiError::UnboundVariable {
                        rule: self.name.clone(),
                        var: r.var.clone(),
                    });
                }
            }
        }
        Ok(scope)
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Scope {
    pub nodes: BTreeSet<String>,
    pub values: BTreeSet<String>,
}

impl Operand {
    /// Calls `f(var, has_attr)` for every variable reference.
    pub fn walk_vars(&self, f: &mut dyn FnMut(&str, bool)) {
        match self {
            Operand::Lit(_) | Operand::Issue(_) => {}
            Operand::Var(v) => f(v, false),
            Operand::VarAttr(v, _) => f(v, true),
            Operand::List(items) => items.iter().for_each(|i| i.walk_vars(f)),
            Operand::Template(pieces) => {
                for p in pieces {
                    match p {
                        Piece::Var(v) => f(v, false),
                        Piece::VarAttr(v, _) => f(v, true),
                        Piece::Text(_) | Piece::Issue(_) => {}
                    }
                }
            }
        }
    }

    fn references_graph(&self) -> bool {
        let mut any = false;
        self.walk_vars(&mut |_, attr| any |= attr);
        any
    }
}

impl Expr {
    pub fn walk_operands(&self, f: &mut dyn FnMut(&Operand)) {
        match self {
            Expr::Const(_) | Expr::Exists(_) => {}
            Expr::Cmp(a, _, b) => {
                f(a);
                f(b);
            }
            Expr::Not(e) => e.walk_operands(f),
            Expr::And(es) | Expr::Or(es) => es.iter().for_each(|e| e.walk_operands(f)),
        }
    }

    /// True when the condition reads node attributes through `$var.attr`
    /// rather than only the Issue and ON-bound scalars.
    pub fn reads_node_attributes(&self) -> bool {
        let mut any = false;
        self.walk_operands(&mut |o| any |= o.references_graph());
        any
    }
}

#[cfg(test)]
mod tests;
