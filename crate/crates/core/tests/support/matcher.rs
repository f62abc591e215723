//! Random matcher instances and an exhaustive-enumeration oracle.

use std::collections::BTreeMap;
use std::sync::Arc;

use kbrl::graph::{load_ontology, Graph, NodeId, SemanticEdge, SemanticNode};
use kbrl::inference::{match_rules, Issue};
use kbrl::ki::{parse_ki, Expr, KnowledgeItem, Operand, RelDir};
use kbrl::value::{CmpOp, Value};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const ONTOLOGY: &str = r#"
@prefix : <https://example.org/oracle#> .
:A a kb:Entity .
:B a kb:Entity .
:p a kb:Attribute ; kb:domain :A, :B ; kb:range xsd:integer .
:q a kb:Attribute ; kb:domain :A, :B ; kb:range xsd:integer .
:s a kb:Attribute ; kb:domain :A, :B ; kb:range xsd:string .
:r a kb:Verb ; kb:domain :A ; kb:range :B .
:t a kb:Verb ; kb:domain :B ; kb:range :A .
:u a kb:Verb ; kb:domain :A ; kb:range :A .
"#;

const STRS: [&str; 3] = ["a", "b", "c"];
const ISSUE_ATTRS: [&str; 3] = ["X", "Y", "Z"];

pub fn random_graph(rng: &mut ChaCha8Rng) -> Graph {
    let mut g = Graph::new(Arc::new(load_ontology(ONTOLOGY).unwrap()));
    let n = rng.gen_range(1..=30);
    let mut ids: Vec<(String, &str)> = Vec::new();
    for i in 0..n {
        let ty = if rng.gen_bool(0.5) { "A" } else { "B" };
        let mut node = SemanticNode::new(format!("n{i}"), ty);
        if rng.gen_bool(0.85) {
            node = node.with("p", rng.gen_range(0..4i64));
        }
        if rng.gen_bool(0.7) {
            node = node.with("q", rng.gen_range(0..4i64));
        }
        if rng.gen_bool(0.7) {
            node = node.with("s", *STRS.choose(rng).unwrap());
        }
        g.upsert_node(node).unwrap();
        ids.push((format!("n{i}"), ty));
    }
    let edges = rng.gen_range(0..=2 * n);
    for _ in 0..edges {
        let (a, ta) = ids.choose(rng).unwrap().clone();
        let (b, tb) = ids.choose(rng).unwrap().clone();
        let verb = match (ta, tb) {
            ("A", "B") => "r",
            ("B", "A") => "t",
            ("A", "A") => "u",
            _ => continue,
        };
        g.add_edge(SemanticEdge::new(verb, NodeId::new(a), NodeId::new(b)))
            .unwrap();
    }
    g
}

struct RuleGen<'a> {
    rng: &'a mut ChaCha8Rng,
    ints: Vec<String>,
    strs: Vec<String>,
    nodes: Vec<(String, &'static str)>,
}

impl RuleGen<'_> {
    fn int_op(&mut self) -> &'static str {
        ["==", "!=", "<", "<=", ">", ">="][self.rng.gen_range(0..6)]
    }

    fn int_operand(&mut self) -> String {
        match self.rng.gen_range(0..4) {
            0 if !self.ints.is_empty() => format!("${}", self.ints.choose(self.rng).unwrap()),
            1 => {
                let (v, _) = self.nodes.choose(self.rng).unwrap().clone();
                format!("${v}.{}", if self.rng.gen() { "p" } else { "q" })
            }
            2 => format!("issue.{}", ISSUE_ATTRS.choose(self.rng).unwrap()),
            _ => self.rng.gen_range(0..4).to_string(),
        }
    }

    fn str_operand(&mut self) -> String {
        match self.rng.gen_range(0..3) {
            0 if !self.strs.is_empty() => format!("${}", self.strs.choose(self.rng).unwrap()),
            1 => format!("${}.s", self.nodes.choose(self.rng).unwrap().0),
            _ => format!("\"{}\"", STRS.choose(self.rng).unwrap()),
        }
    }

    fn expr(&mut self, depth: u32) -> String {
        if depth >= 2 || self.rng.gen_bool(0.5) {
            return match self.rng.gen_range(0..6) {
                0 => format!("exists issue.{}", ISSUE_ATTRS.choose(self.rng).unwrap()),
                1 => format!("{} == {}", self.str_operand(), self.str_operand()),
                2 => format!("{} in [0, 2]", self.int_operand()),
                _ => {
                    let op = self.int_op();
                    format!("{} {op} {}", self.int_operand(), self.int_operand())
                }
            };
        }
        match self.rng.gen_range(0..3) {
            0 => format!("not ({})", self.expr(depth + 1)),
            1 => format!("({}) and ({})", self.expr(depth + 1), self.expr(depth + 1)),
            _ => format!("({}) or ({})", self.expr(depth + 1), self.expr(depth + 1)),
        }
    }

    fn rule(&mut self, name: &str) -> String {
        let mut on = String::new();
        for i in 0..self.rng.gen_range(1..=3) {
            let var = format!("m{i}");
            let ty = if self.rng.gen_bool(0.5) { "A" } else { "B" };
            let mut cons = Vec::new();
            for _ in 0..self.rng.gen_range(0..3) {
                match self.rng.gen_range(0..5) {
                    0 => {
                        let v = format!("i{}", self.ints.len());
                        cons.push(format!(
                            "{} == ${v}",
                            if self.rng.gen() { "p" } else { "q" }
                        ));
                        self.ints.push(v);
                    }
                    1 => {
                        let v = format!("s{}", self.strs.len());
                        cons.push(format!("s == ${v}"));
                        self.strs.push(v);
                    }
                    2 if !self.ints.is_empty() => {
                        let v = self.ints.choose(self.rng).unwrap().clone();
                        let op = self.int_op();
                        cons.push(format!("p {op} ${v}"));
                    }
                    3 => cons.push(format!("s != \"{}\"", STRS.choose(self.rng).unwrap())),
                    _ => {
                        let op = self.int_op();
                        cons.push(format!("q {op} {}", self.rng.gen_range(0..4)));
                    }
                }
            }
            let mut line = format!("match {ty} as ${var} {{ {} }}", cons.join(", "));
            if !self.nodes.is_empty() && self.rng.gen_bool(0.6) {
                let (other, _) = self.nodes.choose(self.rng).unwrap().clone();
                let verb = ["r", "t", "u"][self.rng.gen_range(0..3)];
                let dir = if self.rng.gen() { "to" } else { "from" };
                line += &format!(" related via {verb} {dir} ${other}");
            }
            on += &line;
            on.push('\n');
            self.nodes.push((var, ty));
        }
        let when = if self.rng.gen_bool(0.8) {
            self.expr(0)
        } else {
            String::new()
        };
        format!("ki {name} {{}}\non {{\n{on}}}\nwhen {{ {when} }}\ndo {{ issue.set Done = 1 }}\n")
    }
}

pub fn random_kb(rng: &mut ChaCha8Rng) -> Vec<KnowledgeItem> {
    let n = rng.gen_range(1..=10);
    (0..n)
        .map(|i| {
            let src = RuleGen {
                rng,
                ints: Vec::new(),
                strs: Vec::new(),
                nodes: Vec::new(),
            }
            .rule(&format!("rule{i}"));
            let mut ki = parse_ki(&src).unwrap_or_else(|e| panic!("{e}\n{src}"));
            ki.expert_tag = ["", "x", "y"][i % 3].to_string();
            ki
        })
        .collect()
}

pub fn random_issue(rng: &mut ChaCha8Rng) -> Issue {
    let mut attrs = BTreeMap::new();
    attrs.insert("StartPlaying".to_string(), Value::Bool(true));
    for a in ISSUE_ATTRS {
        if rng.gen_bool(0.6) {
            attrs.insert(a.to_string(), Value::Int(rng.gen_range(0..4)));
        }
    }
    Issue::with_attributes(attrs).unwrap()
}

// ---- oracle ------------------------------------------------------------

#[derive(Clone, Default, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Assignment {
    pub nodes: BTreeMap<String, String>,
    pub values: BTreeMap<String, OVal>,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum OVal {
    Int(i64),
    Str(String),
    List(Vec<OVal>),
}

pub fn oval(v: &Value) -> OVal {
    match v {
        Value::Int(i) => OVal::Int(*i),
        Value::Str(s) => OVal::Str(s.clone()),
        Value::List(xs) => OVal::List(xs.iter().map(oval).collect()),
        other => panic!("unexpected value {other:?}"),
    }
}

fn ocmp(op: CmpOp, l: &OVal, r: &OVal) -> bool {
    if op == CmpOp::In {
        let OVal::List(items) = r else {
            panic!("in needs a list")
        };
        return items.contains(l);
    }
    let ord = match (l, r) {
        (OVal::Int(a), OVal::Int(b)) => a.cmp(b),
        (OVal::Str(a), OVal::Str(b)) => a.cmp(b),
        _ => panic!("kinds differ: {l:?} {r:?}"),
    };
    match op {
        CmpOp::Eq => ord.is_eq(),
        CmpOp::Ne => ord.is_ne(),
        CmpOp::Lt => ord.is_lt(),
        CmpOp::Le => ord.is_le(),
        CmpOp::Gt => ord.is_gt(),
        CmpOp::Ge => ord.is_ge(),
        CmpOp::In => unreachable!(),
    }
}

fn node_attr(g: &Graph, id: &str, attr: &str) -> Option<OVal> {
    g.node(&NodeId::new(id))?.get(attr).map(oval)
}

fn operand(g: &Graph, issue: &Issue, a: &Assignment, op: &Operand) -> Option<OVal> {
    match op {
        Operand::Lit(v) => Some(oval(v)),
        Operand::Var(v) => a
            .values
            .get(v)
            .cloned()
            .or_else(|| a.nodes.get(v).map(|id| OVal::Str(id.clone()))),
        Operand::VarAttr(v, attr) => node_attr(g, a.nodes.get(v)?, attr),
        Operand::Issue(attr) => issue.get(attr).map(oval),
        Operand::List(items) => items
            .iter()
            .map(|i| operand(g, issue, a, i))
            .collect::<Option<Vec<_>>>()
            .map(OVal::List),
        Operand::Template(_) => panic!("no templates in oracle rules"),
    }
}

fn holds(g: &Graph, issue: &Issue, a: &Assignment, e: &Expr) -> bool {
    match e {
        Expr::Const(b) => *b,
        Expr::Exists(attr) => issue.get(attr).is_some(),
        Expr::Not(x) => !holds(g, issue, a, x),
        Expr::And(xs) => xs.iter().all(|x| holds(g, issue, a, x)),
        Expr::Or(xs) => xs.iter().any(|x| holds(g, issue, a, x)),
        Expr::Cmp(l, op, r) => match (operand(g, issue, a, l), operand(g, issue, a, r)) {
            (Some(l), Some(r)) => ocmp(*op, &l, &r),
            _ => false,
        },
    }
}

/// Every tuple of same-typed nodes, checked clause by clause.
pub fn oracle(kb: &[KnowledgeItem], g: &Graph, issue: &Issue) -> Vec<(String, Assignment)> {
    let mut out = Vec::new();
    for ki in kb {
        let pools: Vec<Vec<String>> = ki
            .on
            .iter()
            .map(|c| {
                g.nodes()
                    .filter(|n| n.entity_type == c.entity)
                    .map(|n| n.id.0.clone())
                    .collect()
            })
            .collect();
        let mut idx = vec![0usize; pools.len()];
        if pools.iter().any(|p| p.is_empty()) {
            continue;
        }
        loop {
            if let Some(a) = assign(ki, g, &pools, &idx) {
                if holds(g, issue, &a, &ki.when) {
                    out.push((ki.id(), a));
                }
            }
            // odometer
            let mut k = 0;
            loop {
                if k == idx.len() {
                    break;
                }
                idx[k] += 1;
                if idx[k] < pools[k].len() {
                    break;
                }
                idx[k] = 0;
                k += 1;
            }
            if k == idx.len() {
                break;
            }
        }
    }
    out.sort();
    out
}

fn assign(
    ki: &KnowledgeItem,
    g: &Graph,
    pools: &[Vec<String>],
    idx: &[usize],
) -> Option<Assignment> {
    let mut a = Assignment::default();
    for (ci, clause) in ki.on.iter().enumerate() {
        let id = pools[ci][idx[ci]].clone();
        a.nodes.insert(clause.var.clone(), id.clone());
        for c in &clause.constraints {
            let have = node_attr(g, &id, &c.attr)?;
            match &c.rhs {
                Operand::Var(v) if !a.values.contains_key(v) && !a.nodes.contains_key(v) => {
                    a.values.insert(v.clone(), have);
                }
                Operand::Var(v) => {
                    let want = a
                        .values
                        .get(v)
                        .cloned()
                        .or_else(|| a.nodes.get(v).map(|n| OVal::Str(n.clone())))?;
                    if !ocmp(c.op, &have, &want) {
                        return None;
                    }
                }
                Operand::Lit(v) => {
                    if !ocmp(c.op, &have, &oval(v)) {
                        return None;
                    }
                }
                other => panic!("unexpected constraint operand {other:?}"),
            }
        }
        for r in &clause.relations {
            let other = a.nodes.get(&r.var)?;
            let (from, to) = match r.dir {
                RelDir::To => (&id, other),
                RelDir::From => (other, &id),
            };
            if !g.has_edge(
                &r.verb,
                &NodeId::new(from.clone()),
                &NodeId::new(to.clone()),
            ) {
                return None;
            }
        }
    }
    Some(a)
}

/// Conflict set of `match_rules` in the oracle's terms, sorted.
pub fn engine_set(kb: &[KnowledgeItem], g: &Graph, issue: &Issue) -> Vec<(String, Assignment)> {
    let mut got: Vec<(String, Assignment)> = match_rules(kb, g, issue)
        .unwrap()
        .into_iter()
        .map(|c| {
            let a = Assignment {
                nodes: c
                    .binding
                    .nodes
                    .iter()
                    .map(|(k, v)| (k.clone(), v.0.clone()))
                    .collect(),
                values: c
                    .binding
                    .values
                    .iter()
                    .map(|(k, v)| (k.clone(), oval(v)))
                    .collect(),
            };
            (c.ki_id, a)
        })
        .collect();
    got.sort();
    got
}

/// Instance `seed`: graph, rule base and issue.
pub fn instance(seed: u64) -> (Graph, Vec<KnowledgeItem>, Issue) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = random_graph(&mut rng);
    let kb = random_kb(&mut rng);
    let issue = random_issue(&mut rng);
    (g, kb, issue)
}
