use std::collections::BTreeMap;

use super::lexer::{lex, Tok, Token};
use super::{
    Action, Constraint, Expr, KiError, KnowledgeItem, MatchClause, Operand, Piece, RelDir, Relation,
};
use crate::value::{CmpOp, Value};

/// Parses a source holding exactly one rule.
pub fn parse_ki(text: &str) -> Result<KnowledgeItem, KiError> {
    let mut rules = parse_rules(text)?;
    match rules.len() {
        1 => Ok(rules.pop().unwrap()),
        n => Err(KiError::Syntax {
            block: "ki",
            line: 1,
            column: 1,
            message: format!("expected exactly one rule, found {n}"),
        }),
    }
}

/// Parses every rule in a source. Rules get an empty expert tag.
pub fn parse_rules(text: &str) -> Result<Vec<KnowledgeItem>, KiError> {
    let tokens = lex(text).map_err(|e| KiError::Syntax {
        block: "ki",
        line: e.line,
        column: e.column,
        message: e.message,
    })?;
    let mut p = Parser {
        tokens,
        pos: 0,
        block: "ki",
    };
    let mut rules = Vec::new();
    while p.peek().tok != Tok::Eof {
        let rule = p.rule()?;
        rule.check()?;
        rules.push(rule);
    }
    Ok(rules)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    block: &'static str,
}

type PResult<T> = Result<T, KiError>;

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos]
    }

    fn peek_at(&self, n: usize) -> &Tok {
        &self.tokens[(self.pos + n).min(self.tokens.len() - 1)].tok
    }

    fn bump(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn error_at(&self, t: &Token, message: impl Into<String>) -> KiError {
        KiError::Syntax {
            block: self.block,
            line: t.line,
            column: t.column,
            message: message.into(),
        }
    }

    fn error(&self, message: impl Into<String>) -> KiError {
        self.error_at(self.peek(), message)
    }

    fn is_kw(&self, kw: &str) -> bool {
        matches!(&self.peek().tok, Tok::Ident(s) if s == kw)
    }

    fn keyword(&mut self, kw: &str) -> PResult<()> {
        if self.is_kw(kw) {
            self.bump();
            Ok(())
        } else {
            Err(self.error(format!("expected `{kw}`")))
        }
    }

    fn expect(&mut self, tok: Tok, what: &str) -> PResult<()> {
        if self.peek().tok == tok {
            self.bump();
            Ok(())
        } else {
            Err(self.error(format!("expected {what}")))
        }
    }

    fn ident(&mut self, what: &str) -> PResult<String> {
        match &self.peek().tok {
            Tok::Ident(s) => {
                let s = s.clone();
                self.bump();
                Ok(s)
            }
            _ => Err(self.error(format!("expected {what}"))),
        }
    }

    fn var(&mut self) -> PResult<String> {
        match &self.peek().tok {
            Tok::Var(s) => {
                let s = s.clone();
                self.bump();
                Ok(s)
            }
            _ => Err(self.error("expected `$variable`")),
        }
    }

    fn rule(&mut self) -> PResult<KnowledgeItem> {
        self.block = "ki";
        self.keyword("ki")?;
        let name_tok = self.peek().clone();
        let name = self.ident("rule name")?;
        if name.contains('/') {
            return Err(self.error_at(&name_tok, "rule names cannot contain `/`"));
        }
        self.expect(Tok::LBrace, "`{`")?;
        let mut meta = BTreeMap::new();
        while self.peek().tok != Tok::RBrace {
            let key = self.ident("metadata key")?;
            self.expect(Tok::Assign, "`=`")?;
            let t = self.peek().clone();
            let value = match self.operand()? {
                Operand::Lit(v) => v,
                _ => return Err(self.error_at(&t, "metadata values must be literals")),
            };
            meta.insert(key, value);
        }
        self.bump();

        self.block = "on";
        self.keyword("on")?;
        self.expect(Tok::LBrace, "`{`")?;
        let mut on = Vec::new();
        while self.peek().tok != Tok::RBrace {
            on.push(self.match_clause()?);
        }
        self.bump();

        self.block = "when";
        self.keyword("when")?;
        self.expect(Tok::LBrace, "`{`")?;
        let when = if self.peek().tok == Tok::RBrace {
            Expr::Const(true)
        } else {
            self.expr()?
        };
        self.expect(Tok::RBrace, "`}`")?;

        self.block = "do";
        self.keyword("do")?;
        self.expect(Tok::LBrace, "`{`")?;
        let mut actions = Vec::new();
        while self.peek().tok != Tok::RBrace {
            actions.push(self.action()?);
        }
        self.bump();

        Ok(KnowledgeItem {
            name,
            expert_tag: String::new(),
            meta,
            on,
            when,
            actions,
        })
    }

    fn match_clause(&mut self) -> PResult<MatchClause> {
        self.keyword("match")?;
        let entity = self.ident("entity type")?;
        self.keyword("as")?;
        let var = self.var()?;
        self.expect(Tok::LBrace, "`{`")?;
        let mut constraints = Vec::new();
        while self.peek().tok != Tok::RBrace {
            let attr = self.ident("attribute name")?;
            let op = self
                .cmp_op()
                .ok_or_else(|| self.error("expected comparison operator"))?;
            let t = self.peek().clone();
            let rhs = self.operand()?;
            if !matches!(rhs, Operand::Lit(_) | Operand::Var(_)) {
                return Err(self.error_at(
                    &t,
                    "match constraints compare against a literal or a `$variable`",
                ));
            }
            constraints.push(Constraint { attr, op, rhs });
            if self.peek().tok == Tok::Comma {
                self.bump();
            } else if self.peek().tok != Tok::RBrace {
                return Err(self.error("expected `,` or `}`"));
            }
        }
        self.bump();
        let mut relations = Vec::new();
        while self.is_kw("related") {
            self.bump();
            self.keyword("via")?;
            let verb = self.ident("verb name")?;
            let dir = if self.is_kw("to") {
                RelDir::To
            } else if self.is_kw("from") {
                RelDir::From
            } else {
                return Err(self.error("expected `to` or `from`"));
            };
            self.bump();
            let var = self.var()?;
            relations.push(Relation { verb, dir, var });
        }
        Ok(MatchClause {
            entity,
            var,
            constraints,
            relations,
        })
    }

    fn cmp_op(&mut self) -> Option<CmpOp> {
        let op = match &self.peek().tok {
            Tok::Op("==") => CmpOp::Eq,
            Tok::Op("!=") => CmpOp::Ne,
            Tok::Op("<") => CmpOp::Lt,
            Tok::Op("<=") => CmpOp::Le,
            Tok::Op(">") => CmpOp::Gt,
            Tok::Op(">=") => CmpOp::Ge,
            Tok::Ident(s) if s == "in" => CmpOp::In,
            _ => return None,
        };
        self.bump();
        Some(op)
    }

    fn expr(&mut self) -> PResult<Expr> {
        let mut items = vec![self.and_expr()?];
        while self.is_kw("or") {
            self.bump();
            items.push(self.and_expr()?);
        }
        Ok(if items.len() == 1 {
            items.pop().unwrap()
        } else {
            Expr::Or(items)
        })
    }

    fn and_expr(&mut self) -> PResult<Expr> {
        let mut items = vec![self.unary()?];
        while self.is_kw("and") {
            self.bump();
            items.push(self.unary()?);
        }
        Ok(if items.len() == 1 {
            items.pop().unwrap()
        } else {
            Expr::And(items)
        })
    }

    fn unary(&mut self) -> PResult<Expr> {
        if self.is_kw("not") {
            self.bump();
            return Ok(Expr::Not(Box::new(self.unary()?)));
        }
        if self.peek().tok == Tok::LParen {
            self.bump();
            let e = self.expr()?;
            self.expect(Tok::RParen, "`)`")?;
            return Ok(e);
        }
        if self.is_kw("exists") {
            self.bump();
            self.keyword("issue")?;
            self.expect(Tok::Dot, "`.`")?;
            return Ok(Expr::Exists(self.ident("issue attribute")?));
        }
        let lhs = self.operand()?;
        match self.cmp_op() {
            Some(op) => Ok(Expr::Cmp(lhs, op, self.operand()?)),
            None => match lhs {
                Operand::Lit(Value::Bool(b)) => Ok(Expr::Const(b)),
                _ => Err(self.error("expected comparison operator")),
            },
        }
    }

    fn operand(&mut self) -> PResult<Operand> {
        let t = self.peek().clone();
        match t.tok {
            Tok::Var(v) => {
                self.bump();
                if self.peek().tok == Tok::Dot {
                    self.bump();
                    let attr = self.ident("attribute name")?;
                    Ok(Operand::VarAttr(v, attr))
                } else {
                    Ok(Operand::Var(v))
                }
            }
            Tok::Int(i) => {
                self.bump();
                Ok(Operand::Lit(Value::Int(i)))
            }
            Tok::Float(x) => {
                self.bump();
                Ok(Operand::Lit(Value::Float(x)))
            }
            Tok::Str(pieces) => {
                self.bump();
                Ok(match pieces.as_slice() {
                    [Piece::Text(s)] => Operand::Lit(Value::Str(s.clone())),
                    _ => Operand::Template(pieces),
                })
            }
            Tok::LBracket => {
                self.bump();
                let mut items = Vec::new();
                while self.peek().tok != Tok::RBracket {
                    items.push(self.operand()?);
                    if self.peek().tok == Tok::Comma {
                        self.bump();
                    } else if self.peek().tok != Tok::RBracket {
                        return Err(self.error("expected `,` or `]`"));
                    }
                }
                self.bump();
                if items.iter().all(|i| matches!(i, Operand::Lit(_))) {
                    let values = items
                        .into_iter()
                        .map(|i| match i {
                            Operand::Lit(v) => v,
                            _ => unreachable!(),
                        })
                        .collect();
                    Ok(Operand::Lit(Value::List(values)))
                } else {
                    Ok(Operand::List(items))
                }
            }
            Tok::Ident(ref s) if s == "true" || s == "false" => {
                self.bump();
                Ok(Operand::Lit(Value::Bool(s == "true")))
            }
            Tok::Ident(ref s) if s == "issue" && *self.peek_at(1) == Tok::Dot => {
                self.bump();
                self.bump();
                Ok(Operand::Issue(self.ident("issue attribute")?))
            }
            _ => Err(self.error_at(&t, "expected a value, `$variable` or `issue.<attr>`")),
        }
    }

    fn action(&mut self) -> PResult<Action> {
        let t = self.peek().clone();
        let head = self.ident("statement")?;
        match head.as_str() {
            "issue" => {
                self.expect(Tok::Dot, "`.`")?;
                let op = self.ident("`set` or `unset`")?;
                let attr = self.ident("issue attribute")?;
                match op.as_str() {
                    "set" => {
                        self.expect(Tok::Assign, "`=`")?;
                        Ok(Action::IssueSet {
                            attr,
                            value: self.operand()?,
                        })
                    }
                    "unset" => Ok(Action::IssueUnset { attr }),
                    _ => Err(self.error_at(&t, format!("unknown issue operation `{op}`"))),
                }
            }
            "graph" => {
                self.expect(Tok::Dot, "`.`")?;
                self.keyword("set")?;
                let var = self.var()?;
                self.expect(Tok::Dot, "`.`")?;
                let attr = self.ident("attribute name")?;
                self.expect(Tok::Assign, "`=`")?;
                Ok(Action::GraphSet {
                    var,
                    attr,
                    value: self.operand()?,
                })
            }
            "handler" => {
                let name = self.ident("handler name")?;
                Ok(Action::Handler {
                    name,
                    command: self.operand()?,
                })
            }
            other => Err(self.error_at(&t, format!("unknown statement `{other}`"))),
        }
    }
}
