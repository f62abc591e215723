use super::Piece;

#[derive(Clone, Debug, PartialEq)]
pub(crate) enum Tok {
    Ident(String),
    Var(String),
    Str(Vec<Piece>),
    Int(i64),
    Float(f64),
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    LParen,
    RParen,
    Comma,
    Dot,
    Assign,
    Op(&'static str),
    Eof,
}

#[derive(Clone, Debug)]
pub(crate) struct Token {
    pub tok: Tok,
    pub line: usize,
    pub column: usize,
}

#[derive(Debug)]
pub(crate) struct LexError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

pub(crate) fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

pub(crate) fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | ':' | '/')
}

pub(crate) fn lex(src: &str) -> Result<Vec<Token>, LexError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    let err = |line, column, message: String| LexError {
        line,
        column,
        message,
    };

    while i < chars.len() {
        let c = chars[i];
        let (tl, tc) = (line, col);
        let mut push = |tok| {
            out.push(Token {
                tok,
                line: tl,
                column: tc,
            })
        };
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '#' {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let two: String = chars[i..(i + 2).min(chars.len())].iter().collect();
        let single = match c {
            '{' => Some(Tok::LBrace),
            '}' => Some(Tok::RBrace),
            '[' => Some(Tok::LBracket),
            ']' => Some(Tok::RBracket),
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            ',' => Some(Tok::Comma),
            '.' => Some(Tok::Dot),
            _ => None,
        };
        if let Some(t) = single {
            push(t);
            i += 1;
            col += 1;
            continue;
        }
        if let Some(op) = ["==", "!=", "<=", ">="].into_iter().find(|op| *op == two) {
            push(Tok::Op(op));
            i += 2;
            col += 2;
            continue;
        }
        match c {
            '<' | '>' => {
                push(Tok::Op(if c == '<' { "<" } else { ">" }));
                i += 1;
                col += 1;
            }
            '=' => {
                push(Tok::Assign);
                i += 1;
                col += 1;
            }
            '$' => {
                let start = i + 1;
                let mut j = start;
                if j >= chars.len() || !is_ident_start(chars[j]) {
                    return Err(err(tl, tc, "expected variable name after `$`".into()));
                }
                while j < chars.len() && is_var_char(chars[j]) {
                    j += 1;
                }
                push(Tok::Var(chars[start..j].iter().collect()));
                col += j - i;
                i = j;
            }
            '"' => {
                let (pieces, consumed, newlines, last_col) = lex_string(&chars[i..], tl, tc)?;
                push(Tok::Str(pieces));
                i += consumed;
                if newlines > 0 {
                    line += newlines;
                    col = last_col;
                } else {
                    col += consumed;
                }
            }
            c if c.is_ascii_digit()
                || (c == '-' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) =>
            {
                let start = i;
                let mut j = i + 1;
                let mut is_float = false;
                while j < chars.len() && chars[j].is_ascii_digit() {
                    j += 1;
                }
                if j + 1 < chars.len() && chars[j] == '.' && chars[j + 1].is_ascii_digit() {
                    is_float = true;
                    j += 1;
                    while j < chars.len() && chars[j].is_ascii_digit() {
                        j += 1;
                    }
                }
                if j < chars.len() && (chars[j] == 'e' || chars[j] == 'E') {
                    let mut k = j + 1;
                    if k < chars.len() && (chars[k] == '+' || chars[k] == '-') {
                        k += 1;
                    }
                    if k < chars.len() && chars[k].is_ascii_digit() {
                        is_float = true;
                        j = k;
                        while j < chars.len() && chars[j].is_ascii_digit() {
                            j += 1;
                        }
                    }
                }
                if j < chars.len() && is_ident_char(chars[j]) && chars[j] != '-' {
                    return Err(err(tl, tc, "malformed number".into()));
                }
                let text: String = chars[start..j].iter().collect();
                let tok = if is_float {
                    Tok::Float(
                        text.parse()
                            .map_err(|_| err(tl, tc, format!("bad float `{text}`")))?,
                    )
                } else {
                    Tok::Int(
                        text.parse()
                            .map_err(|_| err(tl, tc, format!("bad integer `{text}`")))?,
                    )
                };
                push(tok);
                col += j - i;
                i = j;
            }
            c if is_ident_start(c) => {
                let start = i;
                let mut j = i;
                while j < chars.len() && is_ident_char(chars[j]) {
                    j += 1;
                }
                push(Tok::Ident(chars[start..j].iter().collect()));
                col += j - i;
                i = j;
            }
            other => return Err(err(tl, tc, format!("unexpected character `{other}`"))),
        }
    }
    out.push(Token {
        tok: Tok::Eof,
        line,
        column: col,
    });
    Ok(out)
}

/// Variable names: no `:` or `/`, so `$u.attr` splits cleanly.
pub(crate) fn is_var_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

/// Lexes a string literal starting at `chars[0] == '"'`. Returns the pieces,
/// characters consumed, newlines crossed and the column after the literal.
fn lex_string(
    chars: &[char],
    line: usize,
    col: usize,
) -> Result<(Vec<Piece>, usize, usize, usize), LexError> {
    let mut pieces = Vec::new();
    let mut text = String::new();
    let mut i = 1;
    let mut newlines = 0;
    let mut cur_col = col + 1;
    let err = |message: &str| LexError {
        line,
        column: col,
        message: message.to_string(),
    };
    loop {
        let Some(&c) = chars.get(i) else {
            return Err(err("unterminated string"));
        };
        match c {
            '"' => {
                i += 1;
                cur_col += 1;
                break;
            }
            '\\' => {
                let esc = chars.get(i + 1).ok_or_else(|| err("unterminated escape"))?;
                text.push(match esc {
                    '"' => '"',
                    '\\' => '\\',
                    'n' => '\n',
                    't' => '\t',
                    '$' => '$',
                    _ => return Err(err("unknown escape")),
                });
                i += 2;
                cur_col += 2;
            }
            '$' if chars.get(i + 1) == Some(&'{') => {
                let close = chars[i..]
                    .iter()
                    .position(|&c| c == '}')
                    .ok_or_else(|| err("unterminated interpolation"))?;
                let inner: String = chars[i + 2..i + close].iter().collect();
                let piece = interpolation(&inner).ok_or_else(|| err("bad interpolation"))?;
                if !text.is_empty() {
                    pieces.push(Piece::Text(std::mem::take(&mut text)));
                }
                pieces.push(piece);
                cur_col += close + 1;
                i += close + 1;
            }
            '\n' => {
                text.push('\n');
                newlines += 1;
                cur_col = 1;
                i += 1;
            }
            c => {
                text.push(c);
                i += 1;
                cur_col += 1;
            }
        }
    }
    if !text.is_empty() || pieces.is_empty() {
        pieces.push(Piece::Text(text));
    }
    Ok((pieces, i, newlines, cur_col))
}

fn interpolation(inner: &str) -> Option<Piece> {
    let inner = inner.trim();
    let valid = |s: &str| {
        let mut cs = s.chars();
        cs.next().is_some_and(is_ident_start) && cs.all(is_var_char)
    };
    let valid_attr = |s: &str| {
        let mut cs = s.chars();
        cs.next().is_some_and(is_ident_start) && cs.all(is_ident_char)
    };
    match inner.split_once('.') {
        None if valid(inner) && inner != "issue" => Some(Piece::Var(inner.to_string())),
        Some(("issue", attr)) if valid_attr(attr) => Some(Piece::Issue(attr.to_string())),
        Some((var, attr)) if valid(var) && valid_attr(attr) => {
            Some(Piece::VarAttr(var.to_string(), attr.to_string()))
        }
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<Tok> {
        lex(s).unwrap().into_iter().map(|t| t.tok).collect()
    }

    #[test]
    fn basic_tokens() {
        assert_eq!(
            toks("match civ:Settlers as $u { x == -3, y >= 2.5 }"),
            vec![
                Tok::Ident("match".into()),
                Tok::Ident("civ:Settlers".into()),
                Tok::Ident("as".into()),
                Tok::Var("u".into()),
                Tok::LBrace,
                Tok::Ident("x".into()),
                Tok::Op("=="),
                Tok::Int(-3),
                Tok::Comma,
                Tok::Ident("y".into()),
                Tok::Op(">="),
                Tok::Float(2.5),
                Tok::RBrace,
                Tok::Eof
            ]
        );
    }

    #[test]
    fn var_attr_splits_on_dot() {
        assert_eq!(
            toks("$u.hp"),
            vec![
                Tok::Var("u".into()),
                Tok::Dot,
                Tok::Ident("hp".into()),
                Tok::Eof
            ]
        );
    }

    #[test]
    fn templates() {
        assert_eq!(
            toks(r#""unit ${u.id}; press b""#),
            vec![
                Tok::Str(vec![
                    Piece::Text("unit ".into()),
                    Piece::VarAttr("u".into(), "id".into()),
                    Piece::Text("; press b".into())
                ]),
                Tok::Eof
            ]
        );
        assert_eq!(
            toks(r#""""#),
            vec![Tok::Str(vec![Piece::Text(String::new())]), Tok::Eof]
        );
        assert_eq!(
            toks(r#""cost \$5 ${issue.Goal}""#),
            vec![
                Tok::Str(vec![
                    Piece::Text("cost $5 ".into()),
                    Piece::Issue("Goal".into())
                ]),
                Tok::Eof
            ]
        );
    }

    #[test]
    fn exponent_floats() {
        assert_eq!(
            toks("1e-7 2.5E3"),
            vec![Tok::Float(1e-7), Tok::Float(2500.0), Tok::Eof]
        );
    }

    #[test]
    fn positions_cross_lines() {
        let t = lex("on {\n  match").unwrap();
        assert_eq!((t[2].line, t[2].column), (2, 3));
    }

    #[test]
    fn errors() {
        assert!(lex("\"open").is_err());
        assert!(lex("$ x").is_err());
        assert!(lex("@").is_err());
        assert!(lex("\"${1x}\"").is_err());
    }
}
