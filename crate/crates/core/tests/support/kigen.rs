//! Random but grammatical rule source for parser round-trip checks.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Writes random but valid rule source.
pub struct Gen {
    rng: ChaCha8Rng,
    /// Node variables of the match clauses so far.
    nodes: Vec<String>,
    /// Value variables bound by `attr == $x`.
    values: Vec<String>,
}

const ENTITIES: [&str; 5] = ["Unit", "City", "Tile", "Player", "Settlers"];
const ATTRS: [&str; 7] = ["x", "y", "hp", "kind", "owner", "pop", "site_rank"];
const ISSUES: [&str; 5] = ["Destination", "Mode", "FocusTurn", "Settler", "A"];
const VERBS: [&str; 4] = ["locatedOn", "guards", "builtOn", "threatens"];
const OPS: [&str; 7] = ["==", "!=", "<", "<=", ">", ">=", "in"];

impl Gen {
    pub fn new(seed: u64) -> Self {
        Gen {
            rng: ChaCha8Rng::seed_from_u64(seed),
            nodes: Vec::new(),
            values: Vec::new(),
        }
    }

    fn pick<'a>(&mut self, xs: &[&'a str]) -> &'a str {
        xs.choose(&mut self.rng).unwrap()
    }

    fn ident(&mut self) -> String {
        let len = self.rng.gen_range(1..8);
        let mut s = String::from("r");
        for _ in 0..len {
            let c = b"abcdefghijklmnopqrstuvwxyz0123456789-_"[self.rng.gen_range(0..38)] as char;
            s.push(c);
        }
        s
    }

    fn string(&mut self) -> String {
        let parts = ["a", "b c", "\\\"", "\\\\", "\\$", "\\n", "x1", " ", "é"];
        let n = self.rng.gen_range(0..4);
        let body: String = (0..n)
            .map(|_| *parts.choose(&mut self.rng).unwrap())
            .collect();
        format!("\"{body}\"")
    }

    fn scalar(&mut self) -> String {
        match self.rng.gen_range(0..5) {
            0 => self.rng.gen_range(-50i64..50).to_string(),
            1 => format!("{:?}", self.rng.gen_range(-40i64..40) as f64 / 4.0),
            2 => if self.rng.gen() { "true" } else { "false" }.to_string(),
            _ => self.string(),
        }
    }

    fn literal(&mut self, depth: u32) -> String {
        if depth < 2 && self.rng.gen_bool(0.15) {
            let n = self.rng.gen_range(0..4);
            let items: Vec<String> = (0..n).map(|_| self.literal(depth + 1)).collect();
            format!("[{}]", items.join(", "))
        } else {
            self.scalar()
        }
    }

    /// Operand usable in WHEN and DO.
    fn operand(&mut self, depth: u32) -> String {
        match self.rng.gen_range(0..6) {
            0 if !self.values.is_empty() => {
                format!("${}", self.values.clone().choose(&mut self.rng).unwrap())
            }
            1 if !self.nodes.is_empty() => {
                let v = self.nodes.clone().choose(&mut self.rng).unwrap().clone();
                format!("${v}.{}", self.pick(&ATTRS))
            }
            2 => format!("issue.{}", self.pick(&ISSUES)),
            3 if depth < 2 => {
                let n = self.rng.gen_range(1..4);
                let items: Vec<String> = (0..n).map(|_| self.operand(depth + 1)).collect();
                format!("[{}]", items.join(", "))
            }
            4 => self.template(),
            _ => self.literal(depth),
        }
    }

    fn template(&mut self) -> String {
        let mut s = String::from("\"");
        for _ in 0..self.rng.gen_range(1..4) {
            match self.rng.gen_range(0..4) {
                0 if !self.values.is_empty() => {
                    let v = self.values.clone().choose(&mut self.rng).unwrap().clone();
                    s += &format!("${{{v}}}");
                }
                1 if !self.nodes.is_empty() => {
                    let v = self.nodes.clone().choose(&mut self.rng).unwrap().clone();
                    s += &format!("${{{v}.{}}}", self.pick(&ATTRS));
                }
                2 => s += &format!("${{issue.{}}}", self.pick(&ISSUES)),
                _ => s += self.pick(&["unit ", "; ", "press b", "\\$", ","]),
            }
        }
        s.push('"');
        s
    }

    fn expr(&mut self, depth: u32) -> String {
        let leaf = depth >= 3 || self.rng.gen_bool(0.4);
        if leaf {
            return match self.rng.gen_range(0..5) {
                0 => format!("exists issue.{}", self.pick(&ISSUES)),
                1 => if self.rng.gen() { "true" } else { "false" }.to_string(),
                _ => {
                    let op = self.pick(&OPS);
                    format!("{} {op} {}", self.operand(0), self.operand(0))
                }
            };
        }
        match self.rng.gen_range(0..4) {
            0 => format!("not {}", self.paren(depth)),
            1 => format!("({})", self.expr(depth + 1)),
            k => {
                let word = if k == 2 { "and" } else { "or" };
                let n = self.rng.gen_range(2..4);
                let parts: Vec<String> = (0..n).map(|_| self.paren(depth)).collect();
                parts.join(&format!(" {word} "))
            }
        }
    }

    fn paren(&mut self, depth: u32) -> String {
        format!("({})", self.expr(depth + 1))
    }

    pub fn rule(&mut self) -> String {
        self.nodes.clear();
        self.values.clear();
        let name = self.ident();
        let mut out = format!("ki {name} {{\n");
        let mut keys: Vec<String> = (0..self.rng.gen_range(0..3))
            .map(|_| self.ident())
            .collect();
        keys.sort();
        keys.dedup();
        for k in keys {
            let v = self.literal(0);
            out += &format!("    {k} = {v}\n");
        }
        out += "}\non {\n";
        let clauses = self.rng.gen_range(1..4);
        for i in 0..clauses {
            let var = format!("n{i}");
            let entity = self.pick(&ENTITIES);
            let mut cons = Vec::new();
            for _ in 0..self.rng.gen_range(0..4) {
                let attr = self.pick(&ATTRS);
                if self.rng.gen_bool(0.4) {
                    let v = format!("v{}", self.values.len());
                    cons.push(format!("{attr} == ${v}"));
                    self.values.push(v);
                } else if !self.values.is_empty() && self.rng.gen_bool(0.3) {
                    let v = self.values.clone().choose(&mut self.rng).unwrap().clone();
                    let op = self.pick(&OPS[..6]);
                    cons.push(format!("{attr} {op} ${v}"));
                } else {
                    let op = self.pick(&OPS);
                    let lit = self.literal(0);
                    cons.push(format!("{attr} {op} {lit}"));
                }
            }
            let mut line = format!("    match {entity} as ${var} {{ {} }}", cons.join(", "));
            if !self.nodes.is_empty() && self.rng.gen_bool(0.5) {
                let other = self.nodes.clone().choose(&mut self.rng).unwrap().clone();
                let dir = if self.rng.gen() { "to" } else { "from" };
                line += &format!(" related via {} {dir} ${other}", self.pick(&VERBS));
            }
            out += &line;
            out.push('\n');
            self.nodes.push(var);
        }
        out += "}\nwhen {\n";
        if self.rng.gen_bool(0.85) {
            out += &format!("    {}\n", self.expr(0));
        }
        out += "}\ndo {\n";
        for _ in 0..self.rng.gen_range(1..4) {
            let line = match self.rng.gen_range(0..4) {
                0 => format!("issue.set {} = {}", self.pick(&ISSUES), self.operand(0)),
                1 => format!("issue.unset {}", self.pick(&ISSUES)),
                2 => {
                    let v = self.nodes.clone().choose(&mut self.rng).unwrap().clone();
                    format!("graph.set ${v}.{} = {}", self.pick(&ATTRS), self.operand(0))
                }
                _ => format!("handler microciv {}", self.template()),
            };
            out += &format!("    {line}\n");
        }
        out += "}\n";
        out
    }
}
