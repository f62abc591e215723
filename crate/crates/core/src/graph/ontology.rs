//! Ontology schema and the Turtle subset it is written in.
//!
//! Accepted grammar:
//!
//! ```text
//! document   := ( directive | statement )*
//! directive  := "@prefix" PNAME_NS IRIREF "."
//! statement  := name predicate-list "."
//! predicate-list := verb object ( "," object )* ( ";" verb object ( "," object )* )* ";"?
//! verb       := "a" | name
//! ```
//!
//! Subjects are typed with `a kb:Entity`, `a kb:Verb` or `a kb:Attribute`.
//! Verbs take exactly one `kb:domain` and one `kb:range` entity. Attributes
//! take one or more `kb:domain` entities and either `kb:range xsd:<kind>` or
//! `kb:listOf xsd:<kind>`. `rdfs:domain`/`rdfs:range` are accepted as
//! aliases. The `kb`, `xsd` and `rdfs` prefixes are built in; any other
//! prefix must be declared. Names written with the empty prefix (`:Tile`)
//! are stored bare (`Tile`); other prefixes stay in the name (`civ:Tile`).

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::value::{ScalarKind, ValueKind};

#[derive(Debug, Error, PartialEq)]
pub enum OntologyError {
    #[error("syntax error at {line}:{column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("line {line}: reference to undeclared entity type `{name}`")]
    UndeclaredType { name: String, line: usize },
    #[error("line {line}: {message}")]
    Invalid { message: String, line: usize },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VerbDecl {
    pub from: String,
    pub to: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Ontology {
    pub entities: BTreeSet<String>,
    pub verbs: BTreeMap<String, VerbDecl>,
    pub attributes: BTreeMap<(String, String), ValueKind>,
}

impl Ontology {
    pub fn has_entity(&self, name: &str) -> bool {
        self.entities.contains(name)
    }

    pub fn attribute_kind(&self, entity: &str, attr: &str) -> Option<ValueKind> {
        self.attributes
            .get(&(entity.to_string(), attr.to_string()))
            .copied()
    }

    pub fn attributes_of<'a>(
        &'a self,
        entity: &'a str,
    ) -> impl Iterator<Item = (&'a str, ValueKind)> + 'a {
        self.attributes
            .iter()
            .filter(move |((e, _), _)| e == entity)
            .map(|((_, a), k)| (a.as_str(), *k))
    }

    /// Re-checks the structural invariants; `load_ontology` output always passes.
    pub fn validate(&self) -> Result<(), OntologyError> {
        for (name, v) in &self.verbs {
            for t in [&v.from, &v.to] {
                if !self.entities.contains(t) {
                    return Err(OntologyError::UndeclaredType {
                        name: format!("{t} (verb {name})"),
                        line: 0,
                    });
                }
            }
        }
        for (e, _) in self.attributes.keys() {
            if !self.entities.contains(e) {
                return Err(OntologyError::UndeclaredType {
                    name: e.clone(),
                    line: 0,
                });
            }
        }
        Ok(())
    }
}

pub fn load_ontology(text: &str) -> Result<Ontology, OntologyError> {
    let tokens = lex(text)?;
    let statements = Parser { tokens, pos: 0 }.document()?;
    build(statements)
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Prefix,
    Iri,
    Name { prefix: String, local: String },
    A,
    Dot,
    Semi,
    Comma,
    Eof,
}

#[derive(Clone, Debug)]
struct Token {
    tok: Tok,
    line: usize,
    column: usize,
}

fn syntax(line: usize, column: usize, message: impl Into<String>) -> OntologyError {
    OntologyError::Syntax {
        line,
        column,
        message: message.into(),
    }
}

fn is_name_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_' || c == '-'
}

fn lex(text: &str) -> Result<Vec<Token>, OntologyError> {
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line_no = lineno + 1;
        let chars: Vec<char> = line.chars().collect();
        let mut i = 0;
        while i < chars.len() {
            let c = chars[i];
            let col = i + 1;
            let push = |out: &mut Vec<Token>, tok| {
                out.push(Token {
                    tok,
                    line: line_no,
                    column: col,
                })
            };
            match c {
                c if c.is_whitespace() => i += 1,
                '#' => break,
                '.' => {
                    push(&mut out, Tok::Dot);
                    i += 1;
                }
                ';' => {
                    push(&mut out, Tok::Semi);
                    i += 1;
                }
                ',' => {
                    push(&mut out, Tok::Comma);
                    i += 1;
                }
                '<' => {
                    let end = chars[i..]
                        .iter()
                        .position(|&c| c == '>')
                        .ok_or_else(|| syntax(line_no, col, "unterminated IRI"))?;
                    push(&mut out, Tok::Iri);
                    i += end + 1;
                }
                '@' => {
                    let start = i + 1;
                    let mut j = start;
                    while j < chars.len() && chars[j].is_alphabetic() {
                        j += 1;
                    }
                    let word: String = chars[start..j].iter().collect();
                    if word != "prefix" {
                        return Err(syntax(
                            line_no,
                            col,
                            format!("unsupported directive @{word}"),
                        ));
                    }
                    push(&mut out, Tok::Prefix);
                    i = j;
                }
                c if is_name_char(c) || c == ':' => {
                    let start = i;
                    let mut j = i;
                    while j < chars.len() && is_name_char(chars[j]) {
                        j += 1;
                    }
                    let prefix: String = chars[start..j].iter().collect();
                    if j < chars.len() && chars[j] == ':' {
                        j += 1;
                        let lstart = j;
                        while j < chars.len() && is_name_char(chars[j]) {
                            j += 1;
                        }
                        let local: String = chars[lstart..j].iter().collect();
                        push(&mut out, Tok::Name { prefix, local });
                    } else if prefix == "a" {
                        push(&mut out, Tok::A);
                    } else {
                        return Err(syntax(
                            line_no,
                            col,
                            format!("expected prefixed name, found `{prefix}`"),
                        ));
                    }
                    i = j;
                }
                '[' | '_' => return Err(syntax(line_no, col, "blank nodes are not supported")),
                '"' => return Err(syntax(line_no, col, "literals are not supported")),
                other => {
                    return Err(syntax(
                        line_no,
                        col,
                        format!("unexpected character `{other}`"),
                    ))
                }
            }
        }
    }
    let last_line = text.lines().count().max(1);
    out.push(Token {
        tok: Tok::Eof,
        line: last_line,
        column: 1,
    });
    Ok(out)
}

/// A predicate with its objects and source line.
type Predicate = (Tok, Vec<(String, String)>, usize);

struct Statement {
    subject: (String, String),
    line: usize,
    predicates: Vec<Predicate>,
}

enum Item {
    Prefix(String),
    Statement(Statement),
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos]
    }

    fn next(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<Token, OntologyError> {
        let t = self.next();
        if t.tok == want {
            Ok(t)
        } else {
            Err(syntax(t.line, t.column, format!("expected {what}")))
        }
    }

    fn name(&mut self) -> Result<(String, String), OntologyError> {
        let t = self.next();
        match t.tok {
            Tok::Name { prefix, local } => Ok((prefix, local)),
            _ => Err(syntax(t.line, t.column, "expected prefixed name")),
        }
    }

    fn document(mut self) -> Result<Vec<Item>, OntologyError> {
        let mut items = Vec::new();
        loop {
            let t = self.peek().clone();
            match t.tok {
                Tok::Eof => return Ok(items),
                Tok::Prefix => {
                    self.next();
                    let (p, local) = self.name()?;
                    if !local.is_empty() {
                        return Err(syntax(
                            t.line,
                            t.column,
                            "prefix declaration must end with `:`",
                        ));
                    }
                    self.expect(Tok::Iri, "IRI")?;
                    self.expect(Tok::Dot, "`.`")?;
                    items.push(Item::Prefix(p));
                }
                Tok::Name { .. } => {
                    let subject = self.name()?;
                    let mut predicates = Vec::new();
                    loop {
                        let vt = self.next();
                        let verb = match vt.tok {
                            Tok::A => Tok::A,
                            Tok::Name { .. } => vt.tok.clone(),
                            _ => return Err(syntax(vt.line, vt.column, "expected predicate")),
                        };
                        let mut objects = vec![self.name()?];
                        while self.peek().tok == Tok::Comma {
                            self.next();
                            objects.push(self.name()?);
                        }
                        predicates.push((verb, objects, vt.line));
                        match self.peek().tok {
                            Tok::Semi => {
                                self.next();
                                if self.peek().tok == Tok::Dot {
                                    self.next();
                                    break;
                                }
                            }
                            Tok::Dot => {
                                self.next();
                                break;
                            }
                            _ => {
                                let p = self.peek();
                                return Err(syntax(p.line, p.column, "expected `;` or `.`"));
                            }
                        }
                    }
                    items.push(Item::Statement(Statement {
                        subject,
                        line: t.line,
                        predicates,
                    }));
                }
                _ => return Err(syntax(t.line, t.column, "expected statement or @prefix")),
            }
        }
    }
}

const BUILTIN_PREFIXES: [&str; 3] = ["kb", "xsd", "rdfs"];

#[derive(Clone, Copy, PartialEq, Debug)]
enum Role {
    Entity,
    Verb,
    Attribute,
}

#[derive(Default)]
struct Decl {
    role: Option<Role>,
    domains: Vec<(String, usize)>,
    range: Option<(String, usize)>,
    list_of: Option<(String, usize)>,
    line: usize,
}

fn build(items: Vec<Item>) -> Result<Ontology, OntologyError> {
    let mut prefixes: BTreeSet<String> = BUILTIN_PREFIXES.iter().map(|s| s.to_string()).collect();
    let mut decls: BTreeMap<String, Decl> = BTreeMap::new();
    let mut order: Vec<String> = Vec::new();

    let resolve = |prefixes: &BTreeSet<String>, (p, l): &(String, String), line: usize| {
        if !prefixes.contains(p) {
            return Err(OntologyError::Invalid {
                message: format!("undeclared prefix `{p}:`"),
                line,
            });
        }
        Ok(if p.is_empty() {
            l.clone()
        } else {
            format!("{p}:{l}")
        })
    };

    for item in items {
        let st = match item {
            Item::Prefix(p) => {
                prefixes.insert(p);
                continue;
            }
            Item::Statement(st) => st,
        };
        let subject = resolve(&prefixes, &st.subject, st.line)?;
        if !decls.contains_key(&subject) {
            order.push(subject.clone());
        }
        let decl = decls.entry(subject.clone()).or_insert_with(|| Decl {
            line: st.line,
            ..Decl::default()
        });
        for (verb, objects, line) in st.predicates {
            let pred = match &verb {
                Tok::A => "a".to_string(),
                Tok::Name { prefix, local } => format!("{prefix}:{local}"),
                _ => unreachable!(),
            };
            for obj in objects {
                let obj_full = format!("{}:{}", obj.0, obj.1);
                match pred.as_str() {
                    "a" => {
                        let role = match obj_full.as_str() {
                            "kb:Entity" => Role::Entity,
                            "kb:Verb" => Role::Verb,
                            "kb:Attribute" => Role::Attribute,
                            other => {
                                return Err(OntologyError::Invalid {
                                    message: format!("unknown type `{other}` for `{subject}`"),
                                    line,
                                })
                            }
                        };
                        if let Some(prev) = decl.role {
                            if prev != role {
                                return Err(OntologyError::Invalid {
                                    message: format!(
                                        "`{subject}` declared as both {prev:?} and {role:?}"
                                    ),
                                    line,
                                });
                            }
                        }
                        decl.role = Some(role);
                    }
                    "kb:domain" | "rdfs:domain" => {
                        decl.domains.push((resolve(&prefixes, &obj, line)?, line));
                    }
                    "kb:range" | "rdfs:range" => {
                        if decl.range.is_some() {
                            return Err(OntologyError::Invalid {
                                message: format!("`{subject}` has more than one range"),
                                line,
                            });
                        }
                        let r = if obj.0 == "xsd" {
                            obj_full
                        } else {
                            resolve(&prefixes, &obj, line)?
                        };
                        decl.range = Some((r, line));
                    }
                    "kb:listOf" => {
                        if obj.0 != "xsd" {
                            return Err(OntologyError::Invalid {
                                message: "kb:listOf takes an xsd scalar type".into(),
                                line,
                            });
                        }
                        decl.list_of = Some((obj_full, line));
                    }
                    "rdfs:subClassOf" | "kb:subClassOf" => {
                        return Err(OntologyError::Invalid {
                            message: "entity hierarchies are not supported; the ontology is flat"
                                .into(),
                            line,
                        })
                    }
                    other => {
                        return Err(OntologyError::Invalid {
                            message: format!("unsupported predicate `{other}`"),
                            line,
                        })
                    }
                }
            }
        }
    }

    let mut ont = Ontology::default();
    for name in &order {
        let d = &decls[name];
        if d.role.is_none() {
            return Err(OntologyError::Invalid {
                message: format!("`{name}` is never typed with `a`"),
                line: d.line,
            });
        }
        if d.role == Some(Role::Entity) {
            if !d.domains.is_empty() || d.range.is_some() || d.list_of.is_some() {
                return Err(OntologyError::Invalid {
                    message: format!("entity `{name}` cannot carry domain/range"),
                    line: d.line,
                });
            }
            ont.entities.insert(name.clone());
        }
    }
    let check_entity = |ont: &Ontology, name: &str, line: usize| {
        if ont.entities.contains(name) {
            Ok(())
        } else {
            Err(OntologyError::UndeclaredType {
                name: name.to_string(),
                line,
            })
        }
    };
    for name in &order {
        let d = &decls[name];
        match d.role {
            Some(Role::Verb) => {
                let (from, fline) = match d.domains.as_slice() {
                    [one] => one.clone(),
                    _ => {
                        return Err(OntologyError::Invalid {
                            message: format!("verb `{name}` needs exactly one domain"),
                            line: d.line,
                        })
                    }
                };
                let (to, tline) = d.range.clone().ok_or_else(|| OntologyError::Invalid {
                    message: format!("verb `{name}` needs a range"),
                    line: d.line,
                })?;
                check_entity(&ont, &from, fline)?;
                check_entity(&ont, &to, tline)?;
                ont.verbs.insert(name.clone(), VerbDecl { from, to });
            }
            Some(Role::Attribute) => {
                let kind = match (&d.range, &d.list_of) {
                    (Some((r, line)), None) => ValueKind::Scalar(xsd_kind(r, *line)?),
                    (None, Some((r, line))) => ValueKind::List(xsd_kind(r, *line)?),
                    _ => {
                        return Err(OntologyError::Invalid {
                            message: format!(
                                "attribute `{name}` needs exactly one of kb:range or kb:listOf"
                            ),
                            line: d.line,
                        })
                    }
                };
                if d.domains.is_empty() {
                    return Err(OntologyError::Invalid {
                        message: format!("attribute `{name}` has no domain"),
                        line: d.line,
                    });
                }
                for (owner, line) in &d.domains {
                    check_entity(&ont, owner, *line)?;
                    ont.attributes.insert((owner.clone(), name.clone()), kind);
                }
            }
            _ => {}
        }
    }
    Ok(ont)
}

fn xsd_kind(name: &str, line: usize) -> Result<ScalarKind, OntologyError> {
    Ok(match name {
        "xsd:string" => ScalarKind::String,
        "xsd:integer" | "xsd:int" | "xsd:long" => ScalarKind::Integer,
        "xsd:float" | "xsd:double" | "xsd:decimal" => ScalarKind::Float,
        "xsd:boolean" => ScalarKind::Boolean,
        other => {
            return Err(OntologyError::Invalid {
                message: format!("unsupported attribute kind `{other}`"),
                line,
            })
        }
    })
}
