use std::collections::BTreeMap;
use std::fmt;

use crate::model::{AllenRelation, Level, Name, PredKind, PredicateDecl};
use crate::term::{write_list, Term, Var};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CompareOp {
    Ne,
    Lt,
    Le,
}

impl CompareOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CompareOp::Ne => "!=",
            CompareOp::Lt => "<",
            CompareOp::Le => "<=",
        }
    }
}

/// `start(R(d), t)` / `end(R(d), t)` helpers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Boundary {
    Start,
    End,
}

impl Boundary {
    pub fn name(self) -> &'static str {
        match self {
            Boundary::Start => "start",
            Boundary::End => "end",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Atom {
    Atemporal {
        pred: Name,
        args: Vec<Term>,
    },
    Observation {
        pred: Name,
        args: Vec<Term>,
        time: Term,
    },
    Event {
        pred: Name,
        args: Vec<Term>,
        interval: Term,
    },
    Annotated {
        pred: Name,
        args: Vec<Term>,
        interval: Term,
        level: Term,
    },
    Compare {
        lhs: Term,
        op: CompareOp,
        rhs: Term,
    },
    Allen {
        rel: AllenRelation,
        lhs: Term,
        rhs: Term,
    },
    Boundary {
        which: Boundary,
        pred: Name,
        args: Vec<Term>,
        time: Term,
    },
}

impl Atom {
    /// Predicate of a relational atom (including the event inside start/end).
    pub fn pred(&self) -> Option<&Name> {
        match self {
            Atom::Atemporal { pred, .. }
            | Atom::Observation { pred, .. }
            | Atom::Event { pred, .. }
            | Atom::Annotated { pred, .. }
            | Atom::Boundary { pred, .. } => Some(pred),
            Atom::Compare { .. } | Atom::Allen { .. } => None,
        }
    }

    pub fn is_relational(&self) -> bool {
        matches!(
            self,
            Atom::Atemporal { .. }
                | Atom::Observation { .. }
                | Atom::Event { .. }
                | Atom::Annotated { .. }
        )
    }

    pub fn is_event(&self) -> bool {
        matches!(self, Atom::Event { .. } | Atom::Annotated { .. })
    }

    /// Every term of the atom in argument order.
    pub fn terms(&self) -> Vec<&Term> {
        match self {
            Atom::Atemporal { args, .. } => args.iter().collect(),
            Atom::Observation { args, time, .. } => args.iter().chain([time]).collect(),
            Atom::Event { args, interval, .. } => args.iter().chain([interval]).collect(),
            Atom::Annotated {
                args,
                interval,
                level,
                ..
            } => args.iter().chain([interval, level]).collect(),
            Atom::Compare { lhs, rhs, .. } | Atom::Allen { lhs, rhs, .. } => vec![lhs, rhs],
            Atom::Boundary { args, time, .. } => args.iter().chain([time]).collect(),
        }
    }

    pub fn vars(&self) -> Vec<&Var> {
        self.terms().into_iter().flat_map(Term::vars).collect()
    }

    /// Variables a positive occurrence of this atom binds by matching: plain
    /// variable arguments and the endpoints of literal `[lo, hi]` intervals.
    pub fn binding_vars(&self) -> Vec<&Var> {
        if !self.is_relational() {
            return Vec::new();
        }
        let mut out = Vec::new();
        for t in self.terms() {
            match t {
                Term::Var(v) => out.push(v),
                Term::Interval(lo, hi) => {
                    for e in [lo.as_ref(), hi.as_ref()] {
                        if let Term::Var(v) = e {
                            out.push(v);
                        }
                    }
                }
                _ => {}
            }
        }
        out
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn rel(f: &mut fmt::Formatter<'_>, pred: &Name, terms: &[&Term]) -> fmt::Result {
            write!(f, "{pred}(")?;
            write_list(f, terms)?;
            f.write_str(")")
        }
        match self {
            Atom::Compare { lhs, op, rhs } => write!(f, "{lhs} {} {rhs}", op.symbol()),
            Atom::Allen { rel, lhs, rhs } => write!(f, "{rel}({lhs}, {rhs})"),
            Atom::Boundary {
                which,
                pred,
                args,
                time,
            } => {
                write!(f, "{}(", which.name())?;
                write_event_key(f, pred, args)?;
                write!(f, ", {time})")
            }
            Atom::Atemporal { pred, args } if args.is_empty() => write!(f, "{pred}()"),
            other => rel(f, other.pred().expect("relational"), &other.terms()),
        }
    }
}

fn write_event_key(f: &mut fmt::Formatter<'_>, pred: &Name, args: &[Term]) -> fmt::Result {
    if args.is_empty() {
        write!(f, "{pred}")
    } else {
        write!(f, "{pred}(")?;
        write_list(f, args)?;
        f.write_str(")")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Literal {
    pub atom: Atom,
    pub negated: bool,
}

impl Literal {
    pub fn pos(atom: Atom) -> Self {
        Literal {
            atom,
            negated: false,
        }
    }

    pub fn neg(atom: Atom) -> Self {
        Literal {
            atom,
            negated: true,
        }
    }

    /// Argument positions filled by the anonymous variable `_`.
    pub fn wildcard_positions(&self) -> Vec<usize> {
        self.atom
            .terms()
            .iter()
            .enumerate()
            .filter(|(_, t)| t.has_wildcard())
            .map(|(i, _)| i)
            .collect()
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.negated {
            f.write_str("not ")?;
        }
        write!(f, "{}", self.atom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RuleKind {
    Existence,
    Termination,
    Window,
    MetaEvent,
    Constraint,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Head {
    /// `exists(R(u), t, l)`; `persistent` marks the `exists_pers` form.
    Exists {
        pred: Name,
        args: Vec<Term>,
        time: Term,
        level: Level,
        persistent: bool,
    },
    Ends {
        pred: Name,
        args: Vec<Term>,
        time: Term,
        level: Level,
    },
    Window {
        pred: Name,
        args: Vec<Term>,
        width: Term,
    },
    Meta {
        pred: Name,
        args: Vec<Term>,
        interval: Term,
        level: Term,
    },
    /// Constraint head.
    Bottom,
}

impl Head {
    pub fn kind(&self) -> RuleKind {
        match self {
            Head::Exists { .. } => RuleKind::Existence,
            Head::Ends { .. } => RuleKind::Termination,
            Head::Window { .. } => RuleKind::Window,
            Head::Meta { .. } => RuleKind::MetaEvent,
            Head::Bottom => RuleKind::Constraint,
        }
    }

    pub fn pred(&self) -> Option<&Name> {
        match self {
            Head::Exists { pred, .. }
            | Head::Ends { pred, .. }
            | Head::Window { pred, .. }
            | Head::Meta { pred, .. } => Some(pred),
            Head::Bottom => None,
        }
    }

    pub fn args(&self) -> &[Term] {
        match self {
            Head::Exists { args, .. }
            | Head::Ends { args, .. }
            | Head::Window { args, .. }
            | Head::Meta { args, .. } => args,
            Head::Bottom => &[],
        }
    }

    pub fn terms(&self) -> Vec<&Term> {
        let mut out: Vec<&Term> = self.args().iter().collect();
        match self {
            Head::Exists { time, .. } | Head::Ends { time, .. } => out.push(time),
            Head::Window { width, .. } => out.push(width),
            Head::Meta {
                interval, level, ..
            } => {
                out.push(interval);
                out.push(level);
            }
            Head::Bottom => {}
        }
        out
    }
}

impl fmt::Display for Head {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Head::Exists {
                pred,
                args,
                time,
                level,
                persistent,
            } => {
                let kw = if *persistent { "exists_pers" } else { "exists" };
                write!(f, "{kw}(")?;
                write_event_key(f, pred, args)?;
                write!(f, ", {time}, {level})")
            }
            Head::Ends {
                pred,
                args,
                time,
                level,
            } => {
                f.write_str("ends(")?;
                write_event_key(f, pred, args)?;
                write!(f, ", {time}, {level})")
            }
            Head::Window { pred, args, width } => {
                f.write_str("window(")?;
                write_event_key(f, pred, args)?;
                write!(f, ", {width})")
            }
            Head::Meta {
                pred,
                args,
                interval,
                level,
            } => {
                write!(f, "meta {pred}(")?;
                for a in args {
                    write!(f, "{a}, ")?;
                }
                write!(f, "{interval}, {level})")
            }
            Head::Bottom => f.write_str("constraint"),
        }
    }
}

/// A rule with its source line. Equality ignores the line.
#[derive(Debug, Clone, Eq)]
pub struct Rule {
    pub head: Head,
    pub body: Vec<Literal>,
    pub line: usize,
}

impl PartialEq for Rule {
    fn eq(&self, other: &Self) -> bool {
        self.head == other.head && self.body == other.body
    }
}

impl Rule {
    pub fn kind(&self) -> RuleKind {
        self.head.kind()
    }

    /// All named variables in head and body, deduplicated, in first-seen order.
    pub fn vars(&self) -> Vec<&Var> {
        let mut seen: Vec<&Var> = Vec::new();
        let head = self.head.terms().into_iter().flat_map(Term::vars);
        let body = self.body.iter().flat_map(|l| l.atom.vars());
        for v in head.chain(body) {
            if !seen.iter().any(|s| s.name == v.name) {
                seen.push(v);
            }
        }
        seen
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.head)?;
        if !self.body.is_empty() || self.head == Head::Bottom {
            f.write_str(" :- ")?;
            write_list(f, &self.body)?;
        }
        f.write_str(".")
    }
}

/// A validated temporal event specification.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Tes {
    pub(crate) decls: BTreeMap<Name, PredicateDecl>,
    pub(crate) simple_rules: Vec<Rule>,
    pub(crate) meta_rules: Vec<Rule>,
    pub(crate) strata: Vec<Vec<Name>>,
    pub(crate) constraints: Vec<Rule>,
}

impl Tes {
    pub fn decls(&self) -> impl Iterator<Item = &PredicateDecl> {
        self.decls.values()
    }

    pub fn decl(&self, name: &str) -> Option<&PredicateDecl> {
        self.decls.get(&Name::new(name))
    }

    pub fn kind_of(&self, name: &Name) -> Option<PredKind> {
        self.decls.get(name).map(|d| d.kind)
    }

    /// Existence, termination and window rules.
    pub fn simple_rules(&self) -> &[Rule] {
        &self.simple_rules
    }

    pub fn rules_for<'a>(&'a self, pred: &'a str) -> impl Iterator<Item = &'a Rule> + 'a {
        self.simple_rules
            .iter()
            .chain(&self.meta_rules)
            .filter(move |r| r.head.pred().is_some_and(|p| p.as_str() == pred))
    }

    pub fn meta_rules(&self) -> &[Rule] {
        &self.meta_rules
    }

    /// Meta predicates grouped into strata, lowest first.
    pub fn strata(&self) -> &[Vec<Name>] {
        &self.strata
    }

    pub fn constraints(&self) -> &[Rule] {
        &self.constraints
    }

    pub fn simple_event_preds(&self) -> impl Iterator<Item = &PredicateDecl> {
        self.decls.values().filter(|d| d.kind.is_simple_event())
    }

    /// True iff a meta rule or domain constraint negates an event atom.
    pub fn has_negated_event_atoms(&self) -> bool {
        self.meta_rules
            .iter()
            .chain(&self.constraints)
            .flat_map(|r| &r.body)
            .any(|l| l.negated && l.atom.is_event())
    }

    /// Adding simple events can only add meta events and constraint
    /// violations. Requires no negated event atoms and no `start`/`end`
    /// helpers, whose answers change as facts are added.
    pub fn is_monotone(&self) -> bool {
        !self.has_negated_event_atoms()
            && !self
                .meta_rules
                .iter()
                .chain(&self.constraints)
                .flat_map(|r| &r.body)
                .any(|l| matches!(l.atom, Atom::Boundary { .. }))
    }

    /// Every termination rule carries confidence 1.
    pub fn terminations_all_level_one(&self) -> bool {
        self.simple_rules
            .iter()
            .all(|r| !matches!(r.head, Head::Ends { level, .. } if level != 1))
    }
}

impl fmt::Display for Tes {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for kind in [
            PredKind::Atemporal,
            PredKind::Observation,
            PredKind::PersistentSimple,
            PredKind::NonPersistentSimple,
            PredKind::Meta,
        ] {
            for d in self.decls.values().filter(|d| d.kind == kind) {
                writeln!(f, "decl {} {}/{}.", kind.keyword(), d.name, d.arity)?;
            }
        }
        for r in self
            .simple_rules
            .iter()
            .chain(&self.meta_rules)
            .chain(&self.constraints)
        {
            writeln!(f, "{r}")?;
        }
        Ok(())
    }
}
