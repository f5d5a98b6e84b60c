//! Hand-written lexer and recursive-descent parser for `.tes` sources and
//! native fact files.

use std::collections::BTreeMap;

use crate::model::{AllenRelation, Fact, Name, PredKind, PredicateDecl, Value};
use crate::term::{NumFn, Sort, Term};

use super::ast::{Atom, Boundary, CompareOp, Head, Literal, Rule, Tes};
use super::{validate, SpecError};

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Tok {
    Ident(String),
    Num(u64),
    Str(String),
    LParen,
    RParen,
    LBrack,
    RBrack,
    Comma,
    Dot,
    If,
    Slash,
    Star,
    Lt,
    Le,
    Ne,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Num(n) => format!("`{n}`"),
            Tok::Str(s) => format!("{s:?}"),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::LBrack => "`[`".into(),
            Tok::RBrack => "`]`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Dot => "`.`".into(),
            Tok::If => "`:-`".into(),
            Tok::Slash => "`/`".into(),
            Tok::Star => "`*`".into(),
            Tok::Lt => "`<`".into(),
            Tok::Le => "`<=`".into(),
            Tok::Ne => "`!=`".into(),
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Token {
    tok: Tok,
    line: usize,
    col: usize,
}

fn lex(src: &str) -> Result<Vec<Token>, SpecError> {
    let mut out = Vec::new();
    let mut chars = src.chars().peekable();
    let (mut line, mut col) = (1usize, 1usize);
    let err = |line, col, message: String| SpecError::Parse { line, col, message };

    while let Some(&c) = chars.peek() {
        let (tl, tc) = (line, col);
        let mut bump = |chars: &mut std::iter::Peekable<std::str::Chars>| {
            let c = chars.next();
            if c == Some('\n') {
                line += 1;
                col = 1;
            } else {
                col += 1;
            }
            c
        };
        if c.is_whitespace() {
            bump(&mut chars);
            continue;
        }
        if c == '#' {
            while chars.peek().is_some_and(|&c| c != '\n') {
                bump(&mut chars);
            }
            continue;
        }
        let tok = if c.is_ascii_digit() {
            let mut s = String::new();
            while let Some(&d) = chars.peek().filter(|d| d.is_ascii_digit()) {
                s.push(d);
                bump(&mut chars);
            }
            Tok::Num(
                s.parse()
                    .map_err(|_| err(tl, tc, format!("number {s} is too large")))?,
            )
        } else if c.is_alphabetic() || c == '_' {
            let mut s = String::new();
            while let Some(&d) = chars
                .peek()
                .filter(|d| d.is_alphanumeric() || **d == '_' || **d == '\'')
            {
                s.push(d);
                bump(&mut chars);
            }
            Tok::Ident(s)
        } else if c == '"' {
            bump(&mut chars);
            let mut s = String::new();
            loop {
                match bump(&mut chars) {
                    None => return Err(err(tl, tc, "unterminated string".into())),
                    Some('"') => break,
                    Some('\\') => match bump(&mut chars) {
                        Some(e @ ('"' | '\\')) => s.push(e),
                        Some('n') => s.push('\n'),
                        _ => return Err(err(tl, tc, "bad escape in string".into())),
                    },
                    Some(ch) => s.push(ch),
                }
            }
            Tok::Str(s)
        } else {
            bump(&mut chars);
            match c {
                '(' => Tok::LParen,
                ')' => Tok::RParen,
                '[' => Tok::LBrack,
                ']' => Tok::RBrack,
                ',' => Tok::Comma,
                '.' => Tok::Dot,
                '/' => Tok::Slash,
                '*' => Tok::Star,
                ':' if chars.peek() == Some(&'-') => {
                    bump(&mut chars);
                    Tok::If
                }
                '<' if chars.peek() == Some(&'=') => {
                    bump(&mut chars);
                    Tok::Le
                }
                '<' => Tok::Lt,
                '!' if chars.peek() == Some(&'=') => {
                    bump(&mut chars);
                    Tok::Ne
                }
                other => return Err(err(tl, tc, format!("unexpected character {other:?}"))),
            }
        };
        out.push(Token {
            tok,
            line: tl,
            col: tc,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone)]
enum RawTerm {
    Name(String),
    Str(String),
    Num(u64),
    Star,
    Call(String, Vec<RawTerm>),
    Interval(Box<RawTerm>, Box<RawTerm>),
}

#[derive(Debug)]
enum RawLit {
    Atom { negated: bool, term: RawTerm },
    Compare(RawTerm, CompareOp, RawTerm),
}

#[derive(Debug)]
enum RawHead {
    Simple { keyword: String, args: Vec<RawTerm> },
    Meta(RawTerm),
    Constraint,
}

#[derive(Debug)]
enum RawStmt {
    Decl {
        kind: PredKind,
        items: Vec<(String, usize)>,
        line: usize,
    },
    Rule {
        head: RawHead,
        body: Vec<RawLit>,
        line: usize,
    },
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    eof: (usize, usize),
}

impl Parser {
    fn new(src: &str) -> Result<Self, SpecError> {
        let lines = src.split('\n').count();
        let last_col = src.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
        Ok(Parser {
            toks: lex(src)?,
            pos: 0,
            eof: (lines, last_col),
        })
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.tok)
    }

    fn at_end(&self) -> bool {
        self.pos >= self.toks.len()
    }

    fn here(&self) -> (usize, usize) {
        self.toks
            .get(self.pos)
            .map_or(self.eof, |t| (t.line, t.col))
    }

    fn error<T>(&self, message: impl Into<String>) -> Result<T, SpecError> {
        let (line, col) = self.here();
        Err(SpecError::Parse {
            line,
            col,
            message: message.into(),
        })
    }

    fn unexpected<T>(&self, wanted: &str) -> Result<T, SpecError> {
        match self.peek() {
            Some(t) => self.error(format!("expected {wanted}, found {}", t.describe())),
            None => self.error(format!("expected {wanted}, found end of input")),
        }
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek() == Some(tok) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, tok: Tok) -> Result<(), SpecError> {
        if self.eat(&tok) {
            Ok(())
        } else {
            self.unexpected(&tok.describe())
        }
    }

    fn ident(&mut self) -> Result<String, SpecError> {
        match self.peek() {
            Some(Tok::Ident(s)) => {
                let s = s.clone();
                self.pos += 1;
                Ok(s)
            }
            _ => self.unexpected("an identifier"),
        }
    }

    fn number(&mut self) -> Result<u64, SpecError> {
        match self.peek() {
            Some(Tok::Num(n)) => {
                let n = *n;
                self.pos += 1;
                Ok(n)
            }
            _ => self.unexpected("a number"),
        }
    }

    fn term(&mut self) -> Result<RawTerm, SpecError> {
        match self.peek().cloned() {
            Some(Tok::Num(n)) => {
                self.pos += 1;
                Ok(RawTerm::Num(n))
            }
            Some(Tok::Str(s)) => {
                self.pos += 1;
                Ok(RawTerm::Str(s))
            }
            Some(Tok::Star) => {
                self.pos += 1;
                Ok(RawTerm::Star)
            }
            Some(Tok::LBrack) => {
                self.pos += 1;
                let lo = self.term()?;
                self.expect(Tok::Comma)?;
                let hi = self.term()?;
                self.expect(Tok::RBrack)?;
                Ok(RawTerm::Interval(Box::new(lo), Box::new(hi)))
            }
            Some(Tok::Ident(name)) => {
                self.pos += 1;
                if self.eat(&Tok::LParen) {
                    let args = self.term_list(Tok::RParen)?;
                    Ok(RawTerm::Call(name, args))
                } else {
                    Ok(RawTerm::Name(name))
                }
            }
            _ => self.unexpected("a term"),
        }
    }

    /// Comma-separated terms up to and including `close`.
    fn term_list(&mut self, close: Tok) -> Result<Vec<RawTerm>, SpecError> {
        let mut args = Vec::new();
        if self.eat(&close) {
            return Ok(args);
        }
        loop {
            args.push(self.term()?);
            if self.eat(&close) {
                return Ok(args);
            }
            self.expect(Tok::Comma)?;
        }
    }

    fn literal(&mut self) -> Result<RawLit, SpecError> {
        if self.peek() == Some(&Tok::Ident("not".into())) {
            self.pos += 1;
            let term = self.term()?;
            if matches!(self.peek(), Some(Tok::Lt | Tok::Le | Tok::Ne)) {
                return self.error("negation applies to atoms, not comparisons");
            }
            return Ok(RawLit::Atom {
                negated: true,
                term,
            });
        }
        let lhs = self.term()?;
        let op = match self.peek() {
            Some(Tok::Lt) => CompareOp::Lt,
            Some(Tok::Le) => CompareOp::Le,
            Some(Tok::Ne) => CompareOp::Ne,
            _ => {
                return Ok(RawLit::Atom {
                    negated: false,
                    term: lhs,
                })
            }
        };
        self.pos += 1;
        let rhs = self.term()?;
        Ok(RawLit::Compare(lhs, op, rhs))
    }

    fn body(&mut self) -> Result<Vec<RawLit>, SpecError> {
        let mut body = vec![self.literal()?];
        while self.eat(&Tok::Comma) {
            body.push(self.literal()?);
        }
        Ok(body)
    }

    fn statement(&mut self) -> Result<RawStmt, SpecError> {
        let (line, _) = self.here();
        let keyword = self.ident()?;
        match keyword.as_str() {
            "decl" => {
                let kind = match self.ident()?.as_str() {
                    "atemporal" => PredKind::Atemporal,
                    "observation" => PredKind::Observation,
                    "persistent" => PredKind::PersistentSimple,
                    "nonpersistent" => PredKind::NonPersistentSimple,
                    "meta" => PredKind::Meta,
                    other => {
                        self.pos -= 1;
                        return self.error(format!(
                            "unknown predicate kind `{other}` (expected atemporal, \
                             observation, persistent, nonpersistent or meta)"
                        ));
                    }
                };
                let mut items = Vec::new();
                loop {
                    let name = self.ident()?;
                    self.expect(Tok::Slash)?;
                    let arity = self.number()?;
                    items.push((name, arity as usize));
                    if !self.eat(&Tok::Comma) {
                        break;
                    }
                }
                self.expect(Tok::Dot)?;
                Ok(RawStmt::Decl { kind, items, line })
            }
            "constraint" => {
                self.expect(Tok::If)?;
                let body = self.body()?;
                self.expect(Tok::Dot)?;
                Ok(RawStmt::Rule {
                    head: RawHead::Constraint,
                    body,
                    line,
                })
            }
            "meta" => {
                let head = self.term()?;
                let body = self.optional_body()?;
                Ok(RawStmt::Rule {
                    head: RawHead::Meta(head),
                    body,
                    line,
                })
            }
            "exists" | "exists_pers" | "ends" | "window" => {
                self.expect(Tok::LParen)?;
                let args = self.term_list(Tok::RParen)?;
                let body = self.optional_body()?;
                Ok(RawStmt::Rule {
                    head: RawHead::Simple { keyword, args },
                    body,
                    line,
                })
            }
            _ => {
                self.pos -= 1;
                self.error(format!(
                    "expected decl, exists, exists_pers, ends, window, meta or constraint, \
                     found `{keyword}`"
                ))
            }
        }
    }

    fn optional_body(&mut self) -> Result<Vec<RawLit>, SpecError> {
        let body = if self.eat(&Tok::If) {
            self.body()?
        } else {
            Vec::new()
        };
        self.expect(Tok::Dot)?;
        Ok(body)
    }
}

fn is_builtin_name(name: &str) -> bool {
    AllenRelation::from_name(name).is_some() || name == "start" || name == "end"
}

struct Resolver<'a> {
    decls: &'a BTreeMap<Name, PredicateDecl>,
    line: usize,
}

impl Resolver<'_> {
    fn invalid<T>(&self, message: impl Into<String>) -> Result<T, SpecError> {
        Err(SpecError::Invalid {
            line: self.line,
            message: message.into(),
        })
    }

    fn decl(&self, name: &str) -> Result<&PredicateDecl, SpecError> {
        self.decls
            .get(&Name::new(name))
            .ok_or_else(|| SpecError::UndeclaredPredicate {
                name: Name::new(name),
                line: self.line,
            })
    }

    fn arity_error<T>(&self, pred: &Name, expected: String, found: usize) -> Result<T, SpecError> {
        Err(SpecError::ArityMismatch {
            pred: pred.clone(),
            expected,
            found,
            line: self.line,
        })
    }

    fn term(&self, raw: &RawTerm) -> Result<Term, SpecError> {
        Ok(match raw {
            RawTerm::Name(s) if s == "_" => Term::Wildcard,
            RawTerm::Name(s) if s.starts_with(|c: char| c.is_uppercase() || c == '_') => {
                Term::var(s, Sort::Data)
            }
            RawTerm::Name(s) | RawTerm::Str(s) => Term::Sym(Name::new(s)),
            RawTerm::Num(n) => Term::Nat(*n),
            RawTerm::Star => Term::Star,
            RawTerm::Interval(lo, hi) => Term::interval(self.term(lo)?, self.term(hi)?),
            RawTerm::Call(name, args) => {
                let args = args
                    .iter()
                    .map(|a| self.term(a))
                    .collect::<Result<Vec<_>, _>>()?;
                if let Some(f) = NumFn::from_name(name) {
                    let ok = match f {
                        NumFn::Plus | NumFn::Minus => args.len() == 2,
                        NumFn::Min | NumFn::Max => !args.is_empty(),
                    };
                    if !ok {
                        return self.invalid(format!("wrong number of arguments to {name}"));
                    }
                    Term::Fn(f, args)
                } else if name == "inter" {
                    if args.is_empty() {
                        return self.invalid("inter needs at least one interval");
                    }
                    Term::Inter(args)
                } else {
                    return self.invalid(format!("`{name}(...)` cannot be used as a term"));
                }
            }
        })
    }

    fn terms(&self, raws: &[RawTerm]) -> Result<Vec<Term>, SpecError> {
        raws.iter().map(|r| self.term(r)).collect()
    }

    /// `R(args)` or bare `R` naming an event of the given kinds.
    fn event_key(
        &self,
        raw: &RawTerm,
        allowed: &[PredKind],
        what: &str,
    ) -> Result<(Name, Vec<Term>), SpecError> {
        let (name, args): (&str, &[RawTerm]) = match raw {
            RawTerm::Call(n, a) => (n, a),
            RawTerm::Name(n) => (n, &[]),
            _ => return self.invalid(format!("expected {what}")),
        };
        let decl = self.decl(name)?;
        if !allowed.contains(&decl.kind) {
            return self.invalid(format!(
                "{name} is declared {}; expected {what}",
                decl.kind.keyword()
            ));
        }
        if args.len() != decl.arity {
            return self.arity_error(&decl.name, decl.arity.to_string(), args.len());
        }
        Ok((decl.name.clone(), self.terms(args)?))
    }

    fn atom(&self, raw: &RawTerm) -> Result<Atom, SpecError> {
        let (name, raw_args): (&str, &[RawTerm]) = match raw {
            RawTerm::Call(n, a) => (n, a),
            RawTerm::Name(n) => (n, &[]),
            _ => return self.invalid("expected an atom"),
        };
        let Some(decl) = self.decls.get(&Name::new(name)) else {
            if let Some(rel) = AllenRelation::from_name(name) {
                let [lhs, rhs] = raw_args else {
                    return self.invalid(format!("{name} takes two intervals"));
                };
                return Ok(Atom::Allen {
                    rel,
                    lhs: self.term(lhs)?,
                    rhs: self.term(rhs)?,
                });
            }
            if name == "start" || name == "end" {
                let [event, time] = raw_args else {
                    return self.invalid(format!("{name} takes an event and a timepoint"));
                };
                let (pred, args) = self.event_key(
                    event,
                    &[
                        PredKind::PersistentSimple,
                        PredKind::NonPersistentSimple,
                        PredKind::Meta,
                    ],
                    "an event predicate",
                )?;
                let which = if name == "start" {
                    Boundary::Start
                } else {
                    Boundary::End
                };
                return Ok(Atom::Boundary {
                    which,
                    pred,
                    args,
                    time: self.term(time)?,
                });
            }
            return Err(SpecError::UndeclaredPredicate {
                name: Name::new(name),
                line: self.line,
            });
        };
        let pred = decl.name.clone();
        let mut args = self.terms(raw_args)?;
        let k = decl.arity;
        let n = args.len();
        Ok(match decl.kind {
            PredKind::Atemporal if n == k => Atom::Atemporal { pred, args },
            PredKind::Atemporal => return self.arity_error(&pred, k.to_string(), n),
            PredKind::Observation if n == k + 1 => {
                let time = args.pop().expect("n > 0");
                Atom::Observation { pred, args, time }
            }
            PredKind::Observation => return self.arity_error(&pred, (k + 1).to_string(), n),
            _ if n == k + 1 => {
                let interval = args.pop().expect("n > 0");
                Atom::Event {
                    pred,
                    args,
                    interval,
                }
            }
            _ if n == k + 2 => {
                let level = args.pop().expect("n > 1");
                let interval = args.pop().expect("n > 1");
                Atom::Annotated {
                    pred,
                    args,
                    interval,
                    level,
                }
            }
            _ => return self.arity_error(&pred, format!("{} or {}", k + 1, k + 2), n),
        })
    }

    fn literal(&self, raw: &RawLit) -> Result<Literal, SpecError> {
        match raw {
            RawLit::Compare(l, op, r) => Ok(Literal::pos(Atom::Compare {
                lhs: self.term(l)?,
                op: *op,
                rhs: self.term(r)?,
            })),
            RawLit::Atom { negated, term } => {
                let atom = self.atom(term)?;
                if *negated && !atom.is_relational() {
                    return self.invalid("negation applies only to relational atoms");
                }
                Ok(Literal {
                    atom,
                    negated: *negated,
                })
            }
        }
    }

    fn level(&self, raw: &RawTerm) -> Result<u32, SpecError> {
        match raw {
            RawTerm::Num(n) if *n >= 1 && *n <= u64::from(u32::MAX) => Ok(*n as u32),
            _ => self.invalid("simple-event rule levels are positive integer literals"),
        }
    }

    fn head(&self, raw: &RawHead) -> Result<Head, SpecError> {
        let simple = [PredKind::PersistentSimple, PredKind::NonPersistentSimple];
        match raw {
            RawHead::Constraint => Ok(Head::Bottom),
            RawHead::Meta(t) => {
                let RawTerm::Call(name, raw_args) = t else {
                    return self.invalid("meta rule heads take the form P(args, interval, level)");
                };
                let decl = self.decl(name)?;
                if decl.kind != PredKind::Meta {
                    return self.invalid(format!(
                        "{name} is declared {}, not meta",
                        decl.kind.keyword()
                    ));
                }
                if raw_args.len() != decl.arity + 2 {
                    return self.arity_error(
                        &decl.name,
                        (decl.arity + 2).to_string(),
                        raw_args.len(),
                    );
                }
                let mut args = self.terms(raw_args)?;
                let level = args.pop().expect("arity + 2");
                let interval = args.pop().expect("arity + 2");
                Ok(Head::Meta {
                    pred: decl.name.clone(),
                    args,
                    interval,
                    level,
                })
            }
            RawHead::Simple { keyword, args } => match (keyword.as_str(), args.as_slice()) {
                ("exists", [ev, t, l]) => {
                    let (pred, args) = self.event_key(
                        ev,
                        &[PredKind::NonPersistentSimple],
                        "a nonpersistent event (use exists_pers for persistent events)",
                    )?;
                    Ok(Head::Exists {
                        pred,
                        args,
                        time: self.term(t)?,
                        level: self.level(l)?,
                        persistent: false,
                    })
                }
                ("exists_pers", [ev, t, l]) => {
                    let (pred, args) =
                        self.event_key(ev, &[PredKind::PersistentSimple], "a persistent event")?;
                    Ok(Head::Exists {
                        pred,
                        args,
                        time: self.term(t)?,
                        level: self.level(l)?,
                        persistent: true,
                    })
                }
                ("ends", [ev, t, l]) => {
                    let (pred, args) = self.event_key(ev, &simple, "a simple event")?;
                    Ok(Head::Ends {
                        pred,
                        args,
                        time: self.term(t)?,
                        level: self.level(l)?,
                    })
                }
                ("window", [ev, w]) => {
                    if let RawTerm::Call(n, _) | RawTerm::Name(n) = ev {
                        if let Some(d) = self.decls.get(&Name::new(n)) {
                            if d.kind == PredKind::PersistentSimple {
                                return self.invalid(format!(
                                    "{n} is persistent; persistent events take no window"
                                ));
                            }
                        }
                    }
                    let (pred, args) = self.event_key(
                        ev,
                        &[PredKind::NonPersistentSimple],
                        "a nonpersistent event",
                    )?;
                    Ok(Head::Window {
                        pred,
                        args,
                        width: self.term(w)?,
                    })
                }
                (kw, _) => {
                    let shape = if kw == "window" {
                        "window(Event, width)"
                    } else {
                        "(Event, time, level)"
                    };
                    self.invalid(format!("{kw} takes the form {shape}"))
                }
            },
        }
    }
}

fn collect_decls(stmts: &[RawStmt]) -> Result<BTreeMap<Name, PredicateDecl>, SpecError> {
    let mut decls = BTreeMap::new();
    for stmt in stmts {
        let RawStmt::Decl { kind, items, line } = stmt else {
            continue;
        };
        for (name, arity) in items {
            if is_builtin_name(name) {
                return Err(SpecError::Invalid {
                    line: *line,
                    message: format!("`{name}` is a built-in and cannot be declared"),
                });
            }
            let name = Name::new(name);
            let decl = PredicateDecl {
                name: name.clone(),
                arity: *arity,
                kind: *kind,
            };
            if decls.insert(name.clone(), decl).is_some() {
                return Err(SpecError::DuplicateDeclaration { name, line: *line });
            }
        }
    }
    Ok(decls)
}

/// Parses and validates a temporal event specification.
pub fn parse_tes(src: &str) -> Result<Tes, SpecError> {
    let mut p = Parser::new(src)?;
    let mut stmts = Vec::new();
    while !p.at_end() {
        stmts.push(p.statement()?);
    }
    let decls = collect_decls(&stmts)?;
    let mut rules = Vec::new();
    for stmt in &stmts {
        let RawStmt::Rule { head, body, line } = stmt else {
            continue;
        };
        let r = Resolver {
            decls: &decls,
            line: *line,
        };
        rules.push(Rule {
            head: r.head(head)?,
            body: body
                .iter()
                .map(|l| r.literal(l))
                .collect::<Result<_, _>>()?,
            line: *line,
        });
    }
    validate::build(decls, rules)
}

fn fact_value(raw: &RawTerm) -> Option<Value> {
    match raw {
        RawTerm::Name(s) | RawTerm::Str(s) => Some(Value::sym(s)),
        RawTerm::Num(n) => Some(Value::Nat(*n)),
        _ => None,
    }
}

/// Parses a native fact file: `atemporal P(c, ...).` and `obs P(c, ..., t).`
/// lines. Bare identifiers are always constants here.
pub fn parse_facts(src: &str, tes: &Tes) -> Result<Vec<Fact>, SpecError> {
    let mut p = Parser::new(src)?;
    let mut out = Vec::new();
    while !p.at_end() {
        let (line, col) = p.here();
        let keyword = p.ident()?;
        let want = match keyword.as_str() {
            "atemporal" => PredKind::Atemporal,
            "obs" => PredKind::Observation,
            _ => {
                return Err(SpecError::Parse {
                    line,
                    col,
                    message: format!("expected `atemporal` or `obs`, found `{keyword}`"),
                })
            }
        };
        let name = p.ident()?;
        let raw_args = if p.eat(&Tok::LParen) {
            p.term_list(Tok::RParen)?
        } else {
            Vec::new()
        };
        p.expect(Tok::Dot)?;
        let decl = tes
            .decl(&name)
            .ok_or_else(|| SpecError::UndeclaredPredicate {
                name: Name::new(&name),
                line,
            })?;
        if decl.kind != want {
            return Err(SpecError::Invalid {
                line,
                message: format!("{name} is declared {}", decl.kind.keyword()),
            });
        }
        let mut args = raw_args
            .iter()
            .map(fact_value)
            .collect::<Option<Vec<_>>>()
            .ok_or_else(|| SpecError::Invalid {
                line,
                message: "fact arguments are constants or naturals".into(),
            })?;
        let expected = decl.arity + usize::from(want == PredKind::Observation);
        if args.len() != expected {
            return Err(SpecError::ArityMismatch {
                pred: decl.name.clone(),
                expected: expected.to_string(),
                found: args.len(),
                line,
            });
        }
        let pred = decl.name.clone();
        out.push(if want == PredKind::Observation {
            let Some(Value::Nat(time)) = args.pop() else {
                return Err(SpecError::Invalid {
                    line,
                    message: "the last argument of an observation is a natural timepoint".into(),
                });
            };
            Fact::Observation { pred, args, time }
        } else {
            Fact::Atemporal { pred, args }
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse_err(src: &str) -> SpecError {
        parse_tes(src).expect_err("should fail")
    }

    #[test]
    fn lexes_operators_and_comments() {
        let toks = lex("a :- X <= 3, Y != \"b c\". # tail\n*").unwrap();
        let kinds: Vec<Tok> = toks.into_iter().map(|t| t.tok).collect();
        assert_eq!(
            kinds,
            vec![
                Tok::Ident("a".into()),
                Tok::If,
                Tok::Ident("X".into()),
                Tok::Le,
                Tok::Num(3),
                Tok::Comma,
                Tok::Ident("Y".into()),
                Tok::Ne,
                Tok::Str("b c".into()),
                Tok::Dot,
                Tok::Star,
            ]
        );
    }

    #[test]
    fn parse_error_has_position() {
        match parse_err("decl atemporal P/1.\nexists(P(X) 1).") {
            SpecError::Parse { line, col, .. } => assert_eq!((line, col), (2, 13)),
            e => panic!("unexpected {e:?}"),
        }
        match parse_err("decl atemporal P/1.\nexists(P(X), 1, 1)") {
            SpecError::Parse { line, .. } => assert_eq!(line, 2),
            e => panic!("unexpected {e:?}"),
        }
    }

    #[test]
    fn duplicate_and_undeclared() {
        assert!(matches!(
            parse_err("decl atemporal P/1.\ndecl meta P/1."),
            SpecError::DuplicateDeclaration { line: 2, .. }
        ));
        assert!(matches!(
            parse_err("decl nonpersistent E/0.\nexists(E, T, 1) :- Obs(T).\nwindow(E, 1)."),
            SpecError::UndeclaredPredicate { line: 2, .. }
        ));
    }

    #[test]
    fn arity_mismatch() {
        let src = "decl observation O/1.\ndecl nonpersistent E/0.\n\
                   exists(E, T, 1) :- O(T).\nwindow(E, 1).";
        assert!(matches!(
            parse_err(src),
            SpecError::ArityMismatch { found: 1, line: 3, .. }
        ));
    }

    #[test]
    fn exists_keyword_must_match_persistence() {
        let src = "decl observation O/0.\ndecl persistent E/0.\nexists(E, T, 1) :- O(T).";
        assert!(matches!(parse_err(src), SpecError::Invalid { line: 3, .. }));
        let src = "decl observation O/0.\ndecl persistent E/0.\nwindow(E, 3).";
        assert!(matches!(parse_err(src), SpecError::Invalid { line: 3, .. }));
    }

    #[test]
    fn builtin_names_are_reserved() {
        assert!(matches!(
            parse_err("decl atemporal before/2."),
            SpecError::Invalid { .. }
        ));
    }

    #[test]
    fn fact_file() {
        let tes = parse_tes("decl atemporal AB/1.\ndecl observation Adm/2.").unwrap();
        let facts = parse_facts("# x\natemporal AB(amox).\nobs Adm(P1, \"Amox 500\", 5).", &tes)
            .unwrap();
        assert_eq!(
            facts,
            vec![
                Fact::Atemporal {
                    pred: Name::new("AB"),
                    args: vec![Value::sym("amox")],
                },
                Fact::Observation {
                    pred: Name::new("Adm"),
                    args: vec![Value::sym("P1"), Value::sym("Amox 500")],
                    time: 5,
                },
            ]
        );
        assert!(parse_facts("obs Adm(p, d, x).", &tes).is_err());
        assert!(parse_facts("obs AB(amox).", &tes).is_err());
        assert!(matches!(
            parse_facts("atemporal Nope(a).", &tes),
            Err(SpecError::UndeclaredPredicate { line: 1, .. })
        ));
    }
}
