//! Turtle output and input.
//!
//! Output is one statement per line in sorted triple order, after the prefix
//! directives. Input accepts `@prefix`/`PREFIX`, IRIs, prefixed names, `a`,
//! quoted string literals with an optional datatype, bare numbers and booleans,
//! and the `;` and `,` abbreviations. Blank nodes, collections, language tags
//! and `@base` are not supported.

use std::fmt::Write;

use super::{Term, Triple, TripleSet, RDF_TYPE, XSD_STRING};
use crate::vocab::XSD_NS;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("turtle syntax error at line {line}: {message}")]
pub struct TurtleError {
    pub line: usize,
    pub message: String,
}

/// Writes `graph` as Turtle using `prefixes` to shorten IRIs where the local
/// part is a plain name.
pub fn write_turtle(graph: &TripleSet, prefixes: &[(String, String)]) -> String {
    let mut out = String::new();
    for (p, ns) in prefixes {
        let _ = writeln!(out, "@prefix {p}: <{ns}> .");
    }
    for t in graph.iter() {
        let predicate = if t.predicate == RDF_TYPE {
            "a".to_string()
        } else {
            iri_token(&t.predicate, prefixes)
        };
        let object = match &t.object {
            Term::Iri(i) => iri_token(i, prefixes),
            Term::Literal { lexical, datatype } if datatype == XSD_STRING => quote(lexical),
            Term::Literal { lexical, datatype } => {
                format!("{}^^{}", quote(lexical), iri_token(datatype, prefixes))
            }
        };
        let _ = writeln!(out, "{} {} {} .", iri_token(&t.subject, prefixes), predicate, object);
    }
    out
}

fn iri_token(iri: &str, prefixes: &[(String, String)]) -> String {
    prefixes
        .iter()
        .filter_map(|(p, ns)| {
            let local = iri.strip_prefix(ns.as_str())?;
            is_plain_local(local).then(|| format!("{p}:{local}"))
        })
        .next()
        .unwrap_or_else(|| format!("<{iri}>"))
}

fn is_plain_local(local: &str) -> bool {
    let mut chars = local.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphanumeric() || c == '_' => {}
        _ => return false,
    }
    local.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
}

fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    IriRef(String),
    PName(String, String),
    Str(String),
    Number(String, &'static str),
    Boolean(bool),
    A,
    PrefixAt,
    PrefixSparql,
    DataType,
    LangTag,
    Dot,
    Semicolon,
    Comma,
}

struct Lexer<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: usize,
}

impl<'a> Lexer<'a> {
    fn err(&self, message: impl Into<String>) -> TurtleError {
        TurtleError {
            line: self.line,
            message: message.into(),
        }
    }

    fn skip_space(&mut self) {
        while let Some(&c) = self.chars.peek() {
            if c == '\n' {
                self.line += 1;
                self.chars.next();
            } else if c.is_whitespace() {
                self.chars.next();
            } else if c == '#' {
                while let Some(&c) = self.chars.peek() {
                    if c == '\n' {
                        break;
                    }
                    self.chars.next();
                }
            } else {
                break;
            }
        }
    }

    fn tokens(mut self) -> Result<Vec<(Token, usize)>, TurtleError> {
        let mut out = Vec::new();
        loop {
            self.skip_space();
            let Some(&c) = self.chars.peek() else {
                return Ok(out);
            };
            let line = self.line;
            let token = match c {
                '<' => {
                    self.chars.next();
                    let mut iri = String::new();
                    loop {
                        match self.chars.next() {
                            Some('>') => break,
                            Some(c) if c.is_whitespace() => return Err(self.err("whitespace in IRI")),
                            Some(c) => iri.push(c),
                            None => return Err(self.err("unterminated IRI")),
                        }
                    }
                    Token::IriRef(iri)
                }
                '"' | '\'' => Token::Str(self.string(c)?),
                '.' => {
                    self.chars.next();
                    Token::Dot
                }
                ';' => {
                    self.chars.next();
                    Token::Semicolon
                }
                ',' => {
                    self.chars.next();
                    Token::Comma
                }
                '^' => {
                    self.chars.next();
                    if self.chars.next() != Some('^') {
                        return Err(self.err("expected ^^"));
                    }
                    Token::DataType
                }
                '@' => {
                    self.chars.next();
                    let word = self.word();
                    if word == "prefix" {
                        Token::PrefixAt
                    } else if word.is_empty() {
                        return Err(self.err("empty directive"));
                    } else if word == "base" {
                        return Err(self.err("@base is not supported"));
                    } else {
                        Token::LangTag
                    }
                }
                c if c.is_ascii_digit() || c == '+' || c == '-' => self.number(),
                _ => {
                    let word = self.word();
                    if word.is_empty() {
                        return Err(self.err(format!("unexpected character {c:?}")));
                    }
                    // A statement-ending dot can be glued to a prefixed name.
                    let trimmed = word.trim_end_matches('.');
                    let dots = word.len() - trimmed.len();
                    let tok = match trimmed {
                        "a" => Token::A,
                        "true" => Token::Boolean(true),
                        "false" => Token::Boolean(false),
                        w if w.eq_ignore_ascii_case("prefix") => Token::PrefixSparql,
                        w => match w.split_once(':') {
                            Some((p, l)) => Token::PName(p.to_string(), l.to_string()),
                            None => return Err(self.err(format!("unexpected word {w:?}"))),
                        },
                    };
                    out.push((tok, line));
                    for _ in 0..dots {
                        out.push((Token::Dot, line));
                    }
                    continue;
                }
            };
            if token == Token::LangTag {
                return Err(self.err("language-tagged literals are not supported"));
            }
            out.push((token, line));
        }
    }

    fn word(&mut self) -> String {
        let mut w = String::new();
        while let Some(&c) = self.chars.peek() {
            if c.is_alphanumeric() || matches!(c, '_' | '-' | ':' | '.') {
                w.push(c);
                self.chars.next();
            } else {
                break;
            }
        }
        w
    }

    fn number(&mut self) -> Token {
        let mut n = String::new();
        if let Some(&c) = self.chars.peek() {
            if c == '+' || c == '-' {
                n.push(c);
                self.chars.next();
            }
        }
        let mut kind = "integer";
        while let Some(&c) = self.chars.peek() {
            if c.is_ascii_digit() {
                n.push(c);
            } else if c == '.' {
                // Only a decimal point if a digit follows.
                let mut ahead = self.chars.clone();
                ahead.next();
                if !matches!(ahead.peek(), Some(d) if d.is_ascii_digit()) {
                    break;
                }
                kind = "decimal";
                n.push(c);
            } else if c == 'e' || c == 'E' {
                kind = "double";
                n.push(c);
                self.chars.next();
                if let Some(&s) = self.chars.peek() {
                    if s == '+' || s == '-' {
                        n.push(s);
                        self.chars.next();
                    }
                }
                continue;
            } else {
                break;
            }
            self.chars.next();
        }
        Token::Number(n, kind)
    }

    fn string(&mut self, quote: char) -> Result<String, TurtleError> {
        self.chars.next();
        let mut s = String::new();
        loop {
            match self.chars.next() {
                Some(c) if c == quote => return Ok(s),
                Some('\\') => match self.chars.next() {
                    Some('n') => s.push('\n'),
                    Some('r') => s.push('\r'),
                    Some('t') => s.push('\t'),
                    Some('"') => s.push('"'),
                    Some('\'') => s.push('\''),
                    Some('\\') => s.push('\\'),
                    other => return Err(self.err(format!("bad escape {other:?}"))),
                },
                Some('\n') | None => return Err(self.err("unterminated string")),
                Some(c) => s.push(c),
            }
        }
    }
}

struct Parser {
    tokens: Vec<(Token, usize)>,
    pos: usize,
    prefixes: Vec<(String, String)>,
}

impl Parser {
    fn line(&self) -> usize {
        self.tokens
            .get(self.pos.min(self.tokens.len().saturating_sub(1)))
            .map(|t| t.1)
            .unwrap_or(1)
    }

    fn err(&self, message: impl Into<String>) -> TurtleError {
        TurtleError {
            line: self.line(),
            message: message.into(),
        }
    }

    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos).map(|t| &t.0)
    }

    fn next(&mut self) -> Result<Token, TurtleError> {
        let tok = self
            .tokens
            .get(self.pos)
            .map(|t| t.0.clone())
            .ok_or_else(|| self.err("unexpected end of input"))?;
        self.pos += 1;
        Ok(tok)
    }

    fn expect(&mut self, want: Token) -> Result<(), TurtleError> {
        let got = self.next()?;
        if got == want {
            Ok(())
        } else {
            Err(self.err(format!("expected {want:?}, found {got:?}")))
        }
    }

    fn resolve(&self, prefix: &str, local: &str) -> Result<String, TurtleError> {
        self.prefixes
            .iter()
            .rev()
            .find(|(p, _)| p == prefix)
            .map(|(_, ns)| format!("{ns}{local}"))
            .ok_or_else(|| self.err(format!("undeclared prefix {prefix:?}")))
    }

    fn iri(&mut self) -> Result<String, TurtleError> {
        match self.next()? {
            Token::IriRef(i) => Ok(i),
            Token::PName(p, l) => self.resolve(&p, &l),
            other => Err(self.err(format!("expected an IRI, found {other:?}"))),
        }
    }

    fn prefix_decl(&mut self) -> Result<(), TurtleError> {
        let (prefix, local) = match self.next()? {
            Token::PName(p, l) => (p, l),
            other => return Err(self.err(format!("expected prefix name, found {other:?}"))),
        };
        if !local.is_empty() {
            return Err(self.err("prefix name must end with ':'"));
        }
        let ns = match self.next()? {
            Token::IriRef(i) => i,
            other => return Err(self.err(format!("expected namespace IRI, found {other:?}"))),
        };
        self.prefixes.push((prefix, ns));
        Ok(())
    }

    fn object(&mut self) -> Result<Term, TurtleError> {
        match self.next()? {
            Token::IriRef(i) => Ok(Term::Iri(i)),
            Token::PName(p, l) => Ok(Term::Iri(self.resolve(&p, &l)?)),
            Token::Str(s) => {
                if self.peek() == Some(&Token::DataType) {
                    self.pos += 1;
                    let datatype = self.iri()?;
                    Ok(Term::Literal { lexical: s, datatype })
                } else {
                    Ok(Term::string(s))
                }
            }
            Token::Number(n, kind) => Ok(Term::Literal {
                lexical: n,
                datatype: format!("{XSD_NS}{kind}"),
            }),
            Token::Boolean(b) => Ok(Term::Literal {
                lexical: b.to_string(),
                datatype: format!("{XSD_NS}boolean"),
            }),
            other => Err(self.err(format!("expected an object, found {other:?}"))),
        }
    }

    fn statement(&mut self, graph: &mut TripleSet) -> Result<(), TurtleError> {
        let subject = self.iri()?;
        loop {
            let predicate = if self.peek() == Some(&Token::A) {
                self.pos += 1;
                RDF_TYPE.to_string()
            } else {
                self.iri()?
            };
            loop {
                let object = self.object()?;
                graph.insert(Triple::new(subject.clone(), predicate.clone(), object));
                if self.peek() == Some(&Token::Comma) {
                    self.pos += 1;
                } else {
                    break;
                }
            }
            match self.next()? {
                Token::Dot => return Ok(()),
                Token::Semicolon => {
                    while self.peek() == Some(&Token::Semicolon) {
                        self.pos += 1;
                    }
                    if self.peek() == Some(&Token::Dot) {
                        self.pos += 1;
                        return Ok(());
                    }
                }
                other => return Err(self.err(format!("expected '.' or ';', found {other:?}"))),
            }
        }
    }
}

pub fn parse_turtle(text: &str) -> Result<TripleSet, TurtleError> {
    let lexer = Lexer {
        chars: text.chars().peekable(),
        line: 1,
    };
    let mut parser = Parser {
        tokens: lexer.tokens()?,
        pos: 0,
        prefixes: Vec::new(),
    };
    let mut graph = TripleSet::new();
    while let Some(tok) = parser.peek() {
        match tok {
            Token::PrefixAt => {
                parser.pos += 1;
                parser.prefix_decl()?;
                parser.expect(Token::Dot)?;
            }
            Token::PrefixSparql => {
                parser.pos += 1;
                parser.prefix_decl()?;
            }
            _ => parser.statement(&mut graph)?,
        }
    }
    Ok(graph)
}
