use std::fmt::Write;

use super::{Action, Expr, KnowledgeItem, Operand, Piece, RelDir};
use crate::value::Value;

pub(crate) fn print_rule(ki: &KnowledgeItem) -> String {
    let mut s = String::new();
    writeln!(s, "ki {} {{", ki.name).unwrap();
    for (k, v) in &ki.meta {
        writeln!(s, "    {k} = {v}").unwrap();
    }
    s.push_str("}\non {\n");
    for m in &ki.on {
        write!(s, "    match {} as ${} {{", m.entity, m.var).unwrap();
        for (i, c) in m.constraints.iter().enumerate() {
            let sep = if i == 0 { " " } else { ", " };
            write!(s, "{sep}{} {} {}", c.attr, c.op, operand(&c.rhs)).unwrap();
        }
        s.push_str(if m.constraints.is_empty() { "}" } else { " }" });
        for r in &m.relations {
            let dir = match r.dir {
                RelDir::To => "to",
                RelDir::From => "from",
            };
            write!(s, " related via {} {dir} ${}", r.verb, r.var).unwrap();
        }
        s.push('\n');
    }
    s.push_str("}\nwhen {\n");
    if ki.when != Expr::Const(true) {
        writeln!(s, "    {}", expr(&ki.when)).unwrap();
    }
    s.push_str("}\ndo {\n");
    for a in &ki.actions {
        let line = match a {
            Action::IssueSet { attr, value } => format!("issue.set {attr} = {}", operand(value)),
            Action::IssueUnset { attr } => format!("issue.unset {attr}"),
            Action::GraphSet { var, attr, value } => {
                format!("graph.set ${var}.{attr} = {}", operand(value))
            }
            Action::Handler { name, command } => format!("handler {name} {}", operand(command)),
        };
        writeln!(s, "    {line}").unwrap();
    }
    s.push_str("}\n");
    s
}

pub(crate) fn operand(op: &Operand) -> String {
    match op {
        Operand::Lit(v) => v.to_string(),
        Operand::Var(v) => format!("${v}"),
        Operand::VarAttr(v, a) => format!("${v}.{a}"),
        Operand::Issue(a) => format!("issue.{a}"),
        Operand::List(items) => {
            let inner: Vec<String> = items.iter().map(operand).collect();
            format!("[{}]", inner.join(", "))
        }
        Operand::Template(pieces) => {
            let mut s = String::from("\"");
            for p in pieces {
                match p {
                    Piece::Text(t) => {
                        // reuse literal escaping, minus the surrounding quotes
                        let lit = Value::Str(t.clone()).to_string();
                        s.push_str(&lit[1..lit.len() - 1]);
                    }
                    Piece::Var(v) => write!(s, "${{{v}}}").unwrap(),
                    Piece::VarAttr(v, a) => write!(s, "${{{v}.{a}}}").unwrap(),
                    Piece::Issue(a) => write!(s, "${{issue.{a}}}").unwrap(),
                }
            }
            s.push('"');
            s
        }
    }
}

pub(crate) fn expr(e: &Expr) -> String {
    match e {
        Expr::Const(b) => b.to_string(),
        Expr::Cmp(a, op, b) => format!("{} {op} {}", operand(a), operand(b)),
        Expr::Exists(a) => format!("exists issue.{a}"),
        Expr::Not(inner) => format!("not {}", nested(inner)),
        Expr::And(items) => items.iter().map(nested).collect::<Vec<_>>().join(" and "),
        Expr::Or(items) => items
            .iter()
            .map(|i| match i {
                Expr::And(_) => expr(i),
                _ => nested(i),
            })
            .collect::<Vec<_>>()
            .join(" or "),
    }
}

fn nested(e: &Expr) -> String {
    match e {
        Expr::And(_) | Expr::Or(_) => format!("({})", expr(e)),
        _ => expr(e),
    }
}
