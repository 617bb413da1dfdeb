//! Line-based script format.
//!
//! ```text
//! # comment
//! sig f/2 w=1 p=3
//! sig a/0 w=1 p=1
//! ord kbo
//! eq e1: f(x,y) = f(y,x)
//! del e1
//! query q1: x:=a, y:=f(a,a)
//! expect q1: {e1}
//! ```
//!
//! Names not declared with `sig` are variables.

use std::collections::HashSet;
use std::fmt;

use thiserror::Error;

use crate::ordering::OrderKind;
use crate::terms::{RawTerm, Signature, TermError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("line {line}, column {column}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Command {
    Sig {
        name: String,
        arity: usize,
        weight: Option<u32>,
        precedence: u32,
    },
    Ord(OrderKind),
    Eq {
        id: String,
        lhs: RawTerm,
        rhs: RawTerm,
    },
    Del(String),
    Query {
        id: String,
        bindings: Vec<(String, RawTerm)>,
    },
    Expect {
        query: String,
        ids: Vec<String>,
    },
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Command::Sig {
                name,
                arity,
                weight,
                precedence,
            } => {
                write!(f, "sig {name}/{arity}")?;
                if let Some(w) = weight {
                    write!(f, " w={w}")?;
                }
                write!(f, " p={precedence}")
            }
            Command::Ord(kind) => write!(f, "ord {kind}"),
            Command::Eq { id, lhs, rhs } => write!(f, "eq {id}: {lhs} = {rhs}"),
            Command::Del(id) => write!(f, "del {id}"),
            Command::Query { id, bindings } => {
                write!(f, "query {id}:")?;
                for (i, (v, t)) in bindings.iter().enumerate() {
                    let sep = if i == 0 { " " } else { ", " };
                    write!(f, "{sep}{v}:={t}")?;
                }
                Ok(())
            }
            Command::Expect { query, ids } => write!(f, "expect {query}: {{{}}}", ids.join(",")),
        }
    }
}

/// A validated script.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Script {
    commands: Vec<Command>,
}

impl Script {
    /// Validates a command list as if it had been parsed line by line.
    pub fn from_commands(commands: Vec<Command>) -> Result<Self, ParseError> {
        let lines: Vec<(usize, Command)> = commands.into_iter().enumerate().map(|(i, c)| (i + 1, c)).collect();
        validate(&lines)?;
        Ok(Self {
            commands: lines.into_iter().map(|(_, c)| c).collect(),
        })
    }

    pub fn commands(&self) -> &[Command] {
        &self.commands
    }

    pub fn order(&self) -> OrderKind {
        self.commands
            .iter()
            .find_map(|c| match c {
                Command::Ord(k) => Some(*k),
                _ => None,
            })
            .expect("validated script has an ord line")
    }

    /// Signature declared by the `sig` lines. Missing weights default to 1.
    pub fn signature(&self) -> Result<Signature, TermError> {
        build_signature(self.commands.iter())
    }

    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.order() == OrderKind::Lpo {
            for c in &self.commands {
                if let Command::Sig {
                    name, weight: Some(_), ..
                } = c
                {
                    out.push(format!("weight of `{name}` is ignored under lpo"));
                }
            }
        }
        out
    }
}

impl fmt::Display for Script {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.commands {
            writeln!(f, "{c}")?;
        }
        Ok(())
    }
}

fn build_signature<'a>(commands: impl Iterator<Item = &'a Command>) -> Result<Signature, TermError> {
    Signature::new(commands.filter_map(|c| match c {
        Command::Sig {
            name,
            arity,
            weight,
            precedence,
        } => Some((name.clone(), *arity, weight.unwrap_or(1), *precedence)),
        _ => None,
    }))
}

struct Cursor<'a> {
    text: &'a str,
    pos: usize,
    line: usize,
}

impl<'a> Cursor<'a> {
    fn err<T>(&self, message: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError {
            line: self.line,
            column: self.text[..self.pos].chars().count() + 1,
            message: message.into(),
        })
    }

    fn skip_ws(&mut self) {
        let rest = &self.text[self.pos..];
        self.pos += rest.len() - rest.trim_start().len();
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.text[self.pos..].chars().next()
    }

    fn eat(&mut self, s: &str) -> bool {
        self.skip_ws();
        if self.text[self.pos..].starts_with(s) {
            self.pos += s.len();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, s: &str) -> Result<(), ParseError> {
        if self.eat(s) {
            Ok(())
        } else {
            self.err(format!("expected `{s}`"))
        }
    }

    fn ident(&mut self) -> Result<String, ParseError> {
        self.skip_ws();
        let rest = &self.text[self.pos..];
        let len = rest
            .find(|c: char| !(c.is_ascii_alphanumeric() || c == '_'))
            .unwrap_or(rest.len());
        if len == 0 {
            return self.err("expected an identifier");
        }
        self.pos += len;
        Ok(rest[..len].to_string())
    }

    fn number<T: std::str::FromStr>(&mut self) -> Result<T, ParseError> {
        self.skip_ws();
        let rest = &self.text[self.pos..];
        let len = rest.find(|c: char| !c.is_ascii_digit()).unwrap_or(rest.len());
        match rest[..len].parse() {
            Ok(n) => {
                self.pos += len;
                Ok(n)
            }
            Err(_) => self.err("expected a number"),
        }
    }

    fn term(&mut self) -> Result<RawTerm, ParseError> {
        let head = self.ident()?;
        let mut args = Vec::new();
        if self.eat("(") {
            loop {
                args.push(self.term()?);
                if self.eat(")") {
                    break;
                }
                self.expect(",")?;
            }
        }
        Ok(RawTerm { head, args })
    }

    fn end(&mut self) -> Result<(), ParseError> {
        match self.peek() {
            None => Ok(()),
            Some(c) => self.err(format!("unexpected `{c}`")),
        }
    }
}

/// Parses a single term such as `f(g(x),a)`.
pub fn parse_term(text: &str) -> Result<RawTerm, ParseError> {
    let mut cur = Cursor { text, pos: 0, line: 1 };
    let t = cur.term()?;
    cur.end()?;
    Ok(t)
}

fn parse_line(cur: &mut Cursor<'_>) -> Result<Command, ParseError> {
    let keyword = cur.ident()?;
    let cmd = match keyword.as_str() {
        "sig" => {
            let name = cur.ident()?;
            cur.expect("/")?;
            let arity = cur.number()?;
            let mut weight = None;
            if cur.eat("w") {
                cur.expect("=")?;
                weight = Some(cur.number()?);
            }
            cur.expect("p")?;
            cur.expect("=")?;
            let precedence = cur.number()?;
            Command::Sig {
                name,
                arity,
                weight,
                precedence,
            }
        }
        "ord" => match cur.ident()?.as_str() {
            "kbo" => Command::Ord(OrderKind::Kbo),
            "lpo" => Command::Ord(OrderKind::Lpo),
            other => return cur.err(format!("unknown order `{other}`")),
        },
        "eq" => {
            let id = cur.ident()?;
            cur.expect(":")?;
            let lhs = cur.term()?;
            cur.expect("=")?;
            let rhs = cur.term()?;
            Command::Eq { id, lhs, rhs }
        }
        "del" => Command::Del(cur.ident()?),
        "query" => {
            let id = cur.ident()?;
            cur.expect(":")?;
            let mut bindings = Vec::new();
            if cur.peek().is_some() {
                loop {
                    let v = cur.ident()?;
                    cur.expect(":=")?;
                    bindings.push((v, cur.term()?));
                    if !cur.eat(",") {
                        break;
                    }
                }
            }
            Command::Query { id, bindings }
        }
        "expect" => {
            let query = cur.ident()?;
            cur.expect(":")?;
            cur.expect("{")?;
            let mut ids = Vec::new();
            if !cur.eat("}") {
                loop {
                    ids.push(cur.ident()?);
                    if cur.eat("}") {
                        break;
                    }
                    cur.expect(",")?;
                }
            }
            Command::Expect { query, ids }
        }
        other => return cur.err(format!("unknown command `{other}`")),
    };
    cur.end()?;
    Ok(cmd)
}

pub fn parse_script(text: &str) -> Result<Script, ParseError> {
    let mut lines = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let content = raw.split('#').next().unwrap_or("");
        if content.trim().is_empty() {
            continue;
        }
        let mut cur = Cursor {
            text: content,
            pos: 0,
            line: i + 1,
        };
        lines.push((i + 1, parse_line(&mut cur)?));
    }
    validate(&lines)?;
    Ok(Script {
        commands: lines.into_iter().map(|(_, c)| c).collect(),
    })
}

fn fail<T>(line: usize, message: impl Into<String>) -> Result<T, ParseError> {
    Err(ParseError {
        line,
        column: 1,
        message: message.into(),
    })
}

fn check_term(sig: &Signature, t: &RawTerm, line: usize) -> Result<(), ParseError> {
    match sig.lookup(&t.head) {
        Some(f) => {
            let arity = sig.symbol(f).arity;
            if arity != t.args.len() {
                let e = TermError::ArityMismatch {
                    name: t.head.clone(),
                    expected: arity,
                    got: t.args.len(),
                };
                return fail(line, e.to_string());
            }
        }
        None if !t.args.is_empty() => {
            return fail(line, TermError::UnknownSymbol(t.head.clone()).to_string());
        }
        None => {}
    }
    t.args.iter().try_for_each(|a| check_term(sig, a, line))
}

fn validate(lines: &[(usize, Command)]) -> Result<(), ParseError> {
    let mut order_seen = false;
    let mut sig: Option<Signature> = None;
    let mut eq_ids = HashSet::new();
    let mut query_ids = HashSet::new();
    let last_line = lines.last().map_or(1, |(l, _)| *l);
    for (line, cmd) in lines {
        let line = *line;
        let term_bearing = matches!(cmd, Command::Eq { .. } | Command::Query { .. });
        if term_bearing && sig.is_none() {
            let built = build_signature(lines.iter().map(|(_, c)| c).take_while(|c| {
                !matches!(c, Command::Eq { .. } | Command::Query { .. })
            }));
            sig = Some(built.or_else(|e| fail(line, e.to_string()))?);
        }
        match cmd {
            Command::Sig { .. } if sig.is_some() => {
                return fail(line, "sig lines must precede equalities and queries");
            }
            Command::Sig { .. } => {}
            Command::Ord(_) if order_seen => return fail(line, "duplicate ord line"),
            Command::Ord(_) => order_seen = true,
            Command::Eq { id, lhs, rhs } => {
                let sig = sig.as_ref().expect("built above");
                check_term(sig, lhs, line)?;
                check_term(sig, rhs, line)?;
                if !eq_ids.insert(id.clone()) {
                    return fail(line, format!("duplicate equality id `{id}`"));
                }
            }
            Command::Del(id) if !eq_ids.contains(id) => {
                return fail(line, format!("unknown equality `{id}`"));
            }
            Command::Del(_) => {}
            Command::Query { id, bindings } => {
                let sig = sig.as_ref().expect("built above");
                let mut seen = HashSet::new();
                for (v, t) in bindings {
                    if sig.lookup(v).is_some() {
                        return fail(line, format!("`{v}` is a symbol, not a variable"));
                    }
                    if !seen.insert(v) {
                        return fail(line, format!("`{v}` bound twice"));
                    }
                    check_term(sig, t, line)?;
                }
                if !query_ids.insert(id.clone()) {
                    return fail(line, format!("duplicate query id `{id}`"));
                }
            }
            Command::Expect { query, ids } => {
                if !query_ids.contains(query) {
                    return fail(line, format!("unknown query `{query}`"));
                }
                if let Some(id) = ids.iter().find(|id| !eq_ids.contains(*id)) {
                    return fail(line, format!("unknown equality `{id}`"));
                }
            }
        }
    }
    if !order_seen {
        return fail(last_line, "missing ord line");
    }
    if sig.is_none() {
        build_signature(lines.iter().map(|(_, c)| c)).or_else(|e| fail(last_line, e.to_string()))?;
    }
    Ok(())
}
