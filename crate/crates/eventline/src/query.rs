//! Conjunctive queries with negation over indexed fact relations, and the
//! grounding of simple-event rules into exists/ends/window facts.

use std::collections::{BTreeSet, HashMap, HashSet};

use thiserror::Error;

use crate::lang::{Atom, Boundary, CompareOp, Head, Literal, Rule, RuleKind, Tes};
use crate::model::{
    compare_numeric, AllenRelation, Dataset, End, EventFact, EventKey, Interval, Level,
    Name, PredKind, Timepoint, Value,
};
use crate::term::{NumFn, Sort, Term};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("sort error: {0}")]
    Sort(String),
    #[error("variable {0} does not occur in the body")]
    UnknownVariable(Name),
    #[error("event atoms in a body evaluated without event facts")]
    EventsRequired,
    #[error("meta rule for {pred} computed confidence {value}; levels start at 1")]
    LevelOverflow { pred: Name, value: String },
}

#[derive(Debug, Clone, Default)]
pub(crate) struct Relation {
    rows: Vec<Vec<Value>>,
    set: HashSet<Vec<Value>>,
    index: Vec<HashMap<Value, Vec<usize>>>,
}

impl Relation {
    pub(crate) fn insert(&mut self, row: Vec<Value>) -> bool {
        if self.set.contains(&row) {
            return false;
        }
        if self.index.len() < row.len() {
            self.index.resize_with(row.len(), HashMap::new);
        }
        let id = self.rows.len();
        for (pos, v) in row.iter().enumerate() {
            self.index[pos].entry(v.clone()).or_default().push(id);
        }
        self.set.insert(row.clone());
        self.rows.push(row);
        true
    }

    pub(crate) fn contains(&self, row: &[Value]) -> bool {
        self.set.contains(row)
    }

    pub(crate) fn rows(&self) -> &[Vec<Value>] {
        &self.rows
    }

    pub(crate) fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    fn lookup(&self, pos: usize, v: &Value) -> &[usize] {
        self.index
            .get(pos)
            .and_then(|m| m.get(v))
            .map_or(&[], Vec::as_slice)
    }
}

/// Relations keyed by predicate. Event relations hold `args ++ [interval, level]`.
#[derive(Debug, Clone, Default)]
pub(crate) struct FactStore {
    rels: HashMap<Name, Relation>,
}

impl FactStore {
    pub(crate) fn from_dataset(d: &Dataset) -> Self {
        let mut s = FactStore::default();
        for f in d.facts() {
            s.insert(f.pred(), f.tuple());
        }
        s
    }

    pub(crate) fn from_events<'a>(facts: impl IntoIterator<Item = &'a EventFact>) -> Self {
        let mut s = FactStore::default();
        for f in facts {
            s.insert(&f.pred, f.tuple());
        }
        s
    }

    pub(crate) fn insert(&mut self, pred: &Name, row: Vec<Value>) -> bool {
        self.rels.entry(pred.clone()).or_default().insert(row)
    }

    pub(crate) fn get(&self, pred: &Name) -> Option<&Relation> {
        self.rels.get(pred)
    }

    pub(crate) fn relations(&self) -> impl Iterator<Item = (&Name, &Relation)> {
        self.rels.iter()
    }
}

/// Read-only union of up to three stores.
#[derive(Clone, Copy)]
pub(crate) struct View<'a> {
    layers: [Option<&'a FactStore>; 3],
}

impl<'a> View<'a> {
    pub(crate) fn new(layers: &[&'a FactStore]) -> Self {
        assert!(layers.len() <= 3);
        let mut v = View { layers: [None; 3] };
        for (slot, l) in v.layers.iter_mut().zip(layers) {
            *slot = Some(l);
        }
        v
    }

    fn relations(&self, pred: &'a Name) -> impl Iterator<Item = &'a Relation> + 'a {
        let layers = self.layers;
        layers.into_iter().flatten().filter_map(move |l| l.get(pred))
    }
}

#[derive(Debug, Clone, PartialEq)]
enum CTerm {
    Const(Value),
    Var(usize),
    Wild,
    Fn(NumFn, Vec<CTerm>),
    Interval(Box<CTerm>, Box<CTerm>),
    Inter(Vec<CTerm>),
}

impl CTerm {
    fn is_computed(&self) -> bool {
        matches!(self, CTerm::Fn(..) | CTerm::Inter(..))
    }

    fn vars(&self, out: &mut Vec<usize>) {
        match self {
            CTerm::Var(i) => out.push(*i),
            CTerm::Fn(_, a) | CTerm::Inter(a) => a.iter().for_each(|t| t.vars(out)),
            CTerm::Interval(lo, hi) => {
                lo.vars(out);
                hi.vars(out);
            }
            _ => {}
        }
    }

    /// Variables a match against a row binds.
    fn binding_vars(&self, out: &mut Vec<usize>) {
        match self {
            CTerm::Var(i) => out.push(*i),
            CTerm::Interval(lo, hi) => {
                lo.binding_vars(out);
                hi.binding_vars(out);
            }
            _ => {}
        }
    }
}

#[derive(Debug, Clone)]
enum CLit {
    Rel {
        pred: Name,
        pattern: Vec<CTerm>,
        negated: bool,
    },
    Compare(CTerm, CompareOp, CTerm),
    Allen(AllenRelation, CTerm, CTerm),
    Boundary {
        which: Boundary,
        pred: Name,
        args: Vec<CTerm>,
        time: CTerm,
    },
}

impl CLit {
    fn vars(&self) -> Vec<usize> {
        let mut out = Vec::new();
        match self {
            CLit::Rel { pattern, .. } => pattern.iter().for_each(|t| t.vars(&mut out)),
            CLit::Compare(a, _, b) | CLit::Allen(_, a, b) => {
                a.vars(&mut out);
                b.vars(&mut out);
            }
            CLit::Boundary { args, time, .. } => {
                args.iter().for_each(|t| t.vars(&mut out));
                time.vars(&mut out);
            }
        }
        out
    }

    fn is_generator(&self) -> bool {
        matches!(self, CLit::Rel { negated: false, .. })
    }
}

struct Compiler {
    names: Vec<Name>,
    sorts: Vec<Sort>,
}

impl Compiler {
    fn slot(&mut self, name: &Name, sort: Sort) -> usize {
        if let Some(i) = self.names.iter().position(|n| n == name) {
            return i;
        }
        self.names.push(name.clone());
        self.sorts.push(sort);
        self.names.len() - 1
    }

    fn term(&mut self, t: &Term) -> CTerm {
        match t {
            Term::Sym(s) => CTerm::Const(Value::Sym(s.clone())),
            Term::Nat(n) => CTerm::Const(Value::Nat(*n)),
            Term::Star => CTerm::Const(Value::Star),
            Term::Wildcard => CTerm::Wild,
            Term::Var(v) => CTerm::Var(self.slot(&v.name, v.sort)),
            Term::Fn(f, args) => CTerm::Fn(*f, args.iter().map(|a| self.term(a)).collect()),
            Term::Interval(lo, hi) => {
                let (lo, hi) = (self.term(lo), self.term(hi));
                match (lo, hi) {
                    (CTerm::Const(Value::Nat(s)), CTerm::Const(e)) if e.as_numeric().is_some() => {
                        match Interval::new(s, e.as_numeric().expect("numeric")) {
                            Ok(iv) => CTerm::Const(Value::Interval(iv)),
                            Err(_) => CTerm::Interval(
                                Box::new(CTerm::Const(Value::Nat(s))),
                                Box::new(CTerm::Const(e)),
                            ),
                        }
                    }
                    (lo, hi) => CTerm::Interval(Box::new(lo), Box::new(hi)),
                }
            }
            Term::Inter(args) => CTerm::Inter(args.iter().map(|a| self.term(a)).collect()),
        }
    }

    fn terms(&mut self, ts: &[Term]) -> Vec<CTerm> {
        ts.iter().map(|t| self.term(t)).collect()
    }

    fn literal(&mut self, lit: &Literal) -> CLit {
        let rel = |c: &mut Self, pred: &Name, terms: Vec<&Term>| CLit::Rel {
            pred: pred.clone(),
            pattern: terms.into_iter().map(|t| c.term(t)).collect(),
            negated: lit.negated,
        };
        match &lit.atom {
            a @ (Atom::Atemporal { pred, .. }
            | Atom::Observation { pred, .. }
            | Atom::Event { pred, .. }
            | Atom::Annotated { pred, .. }) => rel(self, pred, a.terms()),
            Atom::Compare { lhs, op, rhs } => CLit::Compare(self.term(lhs), *op, self.term(rhs)),
            Atom::Allen { rel, lhs, rhs } => CLit::Allen(*rel, self.term(lhs), self.term(rhs)),
            Atom::Boundary {
                which,
                pred,
                args,
                time,
            } => CLit::Boundary {
                which: *which,
                pred: pred.clone(),
                args: self.terms(args),
                time: self.term(time),
            },
        }
    }
}

/// A compiled rule body: literals over numbered variable slots.
#[derive(Debug, Clone)]
pub(crate) struct Body {
    names: Vec<Name>,
    sorts: Vec<Sort>,
    lits: Vec<CLit>,
    /// Evaluation order when no literal is delta-restricted.
    plan: Vec<usize>,
}

pub(crate) type Env = Vec<Option<Value>>;

/// Evaluation order: positive relational literals chosen greedily by how many
/// positions are already bound, each filter as soon as its variables are bound.
/// Negated literals come after every generator that binds their variables.
fn make_plan(lits: &[CLit], first: Option<usize>) -> Vec<usize> {
    let mut bound: HashSet<usize> = HashSet::new();
    let mut done = vec![false; lits.len()];
    let mut plan = Vec::with_capacity(lits.len());
    let bind = |i: usize, bound: &mut HashSet<usize>| {
        if let CLit::Rel { pattern, .. } = &lits[i] {
            let mut vs = Vec::new();
            pattern.iter().for_each(|t| t.binding_vars(&mut vs));
            bound.extend(vs);
        }
    };
    if let Some(f) = first {
        plan.push(f);
        done[f] = true;
        bind(f, &mut bound);
    }
    loop {
        let mut progressed = false;
        for i in 0..lits.len() {
            if !done[i] && !lits[i].is_generator() && lits[i].vars().iter().all(|v| bound.contains(v)) {
                plan.push(i);
                done[i] = true;
                progressed = true;
            }
        }
        let best = (0..lits.len())
            .filter(|&i| !done[i] && lits[i].is_generator())
            .max_by_key(|&i| {
                let CLit::Rel { pattern, .. } = &lits[i] else {
                    unreachable!()
                };
                let fixed = pattern
                    .iter()
                    .filter(|t| {
                        let mut vs = Vec::new();
                        t.vars(&mut vs);
                        matches!(t, CTerm::Const(_)) || (!vs.is_empty() && vs.iter().all(|v| bound.contains(v)))
                    })
                    .count();
                (fixed, std::cmp::Reverse(i))
            });
        match best {
            Some(i) => {
                plan.push(i);
                done[i] = true;
                bind(i, &mut bound);
            }
            None if !progressed => break,
            None => {}
        }
    }
    // Anything left has unbound variables; safety rules this out, but keep
    // the literal so evaluation reports it instead of dropping it.
    plan.extend((0..lits.len()).filter(|&i| !done[i]));
    plan
}

fn sort_err(msg: String) -> EvalError {
    EvalError::Sort(msg)
}

fn eval(t: &CTerm, env: &Env) -> Result<Option<Value>, EvalError> {
    match t {
        CTerm::Const(v) => Ok(Some(v.clone())),
        CTerm::Var(i) => env[*i]
            .clone()
            .map(Some)
            .ok_or_else(|| sort_err("unbound variable during evaluation".into())),
        CTerm::Wild => Err(sort_err("`_` cannot be evaluated".into())),
        CTerm::Fn(f, args) => {
            let mut ends = Vec::with_capacity(args.len());
            for a in args {
                let v = eval(a, env)?.ok_or_else(|| sort_err("interval in numeric position".into()))?;
                ends.push(
                    v.as_numeric()
                        .ok_or_else(|| sort_err(format!("{v} is not numeric ({})", f.name())))?,
                );
            }
            Ok(f.apply(&ends).map(Value::from_end))
        }
        CTerm::Interval(lo, hi) => {
            let lo = eval(lo, env)?;
            let hi = eval(hi, env)?;
            let (Some(Value::Nat(s)), Some(e)) = (&lo, &hi) else {
                return Err(sort_err(format!(
                    "interval start must be a natural, got {}",
                    lo.map_or("nothing".into(), |v| v.to_string())
                )));
            };
            let e = e
                .as_numeric()
                .ok_or_else(|| sort_err(format!("interval end must be numeric, got {e}")))?;
            Ok(Interval::new(*s, e).ok().map(Value::Interval))
        }
        CTerm::Inter(args) => {
            let mut acc: Option<Interval> = None;
            for a in args {
                let iv = match eval(a, env)? {
                    None => return Ok(None),
                    Some(Value::Interval(iv)) => iv,
                    Some(v) => return Err(sort_err(format!("inter expects intervals, got {v}"))),
                };
                acc = match acc {
                    None => Some(iv),
                    Some(prev) => match prev.intersect(&iv) {
                        Some(x) => Some(x),
                        None => return Ok(None),
                    },
                };
            }
            Ok(acc.map(Value::Interval))
        }
    }
}


fn bind(t: &CTerm, v: &Value, env: &mut Env, sorts: &[Sort], trail: &mut Vec<usize>) -> bool {
    match t {
        CTerm::Const(c) => c == v,
        CTerm::Wild => true,
        CTerm::Var(i) => match &env[*i] {
            Some(b) => b == v,
            None => {
                if !sorts[*i].admits(v) {
                    return false;
                }
                env[*i] = Some(v.clone());
                trail.push(*i);
                true
            }
        },
        CTerm::Interval(lo, hi) => match v {
            Value::Interval(iv) => {
                bind(lo, &Value::Nat(iv.start()), env, sorts, trail)
                    && bind(hi, &Value::from_end(iv.end()), env, sorts, trail)
            }
            _ => false,
        },
        CTerm::Fn(..) | CTerm::Inter(..) => true,
    }
}

/// Computed subterms, checked once the rest of the row is bound.
fn check(t: &CTerm, v: &Value, env: &Env) -> Result<bool, EvalError> {
    match t {
        CTerm::Interval(lo, hi) => match v {
            Value::Interval(iv) => Ok(check(lo, &Value::Nat(iv.start()), env)?
                && check(hi, &Value::from_end(iv.end()), env)?),
            _ => Ok(false),
        },
        t if t.is_computed() => Ok(eval(t, env)?.as_ref() == Some(v)),
        _ => Ok(true),
    }
}

fn match_row(
    pattern: &[CTerm],
    row: &[Value],
    env: &mut Env,
    sorts: &[Sort],
    trail: &mut Vec<usize>,
) -> Result<bool, EvalError> {
    if row.len() < pattern.len() {
        return Ok(false);
    }
    for (t, v) in pattern.iter().zip(row) {
        if !bind(t, v, env, sorts, trail) {
            return Ok(false);
        }
    }
    for (t, v) in pattern.iter().zip(row) {
        if !check(t, v, env)? {
            return Ok(false);
        }
    }
    Ok(true)
}

fn undo(env: &mut Env, trail: &mut Vec<usize>) {
    for i in trail.drain(..) {
        env[i] = None;
    }
}

/// Value of a term if it is already fixed without computation.
fn ground_value(t: &CTerm, env: &Env) -> Option<Value> {
    match t {
        CTerm::Const(v) => Some(v.clone()),
        CTerm::Var(i) => env[*i].clone(),
        CTerm::Interval(lo, hi) => {
            let s = match ground_value(lo, env)? {
                Value::Nat(s) => s,
                _ => return None,
            };
            let e = ground_value(hi, env)?.as_numeric()?;
            Interval::new(s, e).ok().map(Value::Interval)
        }
        _ => None,
    }
}

/// Row ids of `rel` worth trying for `pattern` under `env`.
fn candidates<'r>(rel: &'r Relation, pattern: &[CTerm], env: &Env) -> Option<&'r [usize]> {
    pattern
        .iter()
        .enumerate()
        .find_map(|(p, t)| ground_value(t, env).map(|v| rel.lookup(p, &v)))
}

fn for_each_match(
    rel: &Relation,
    pattern: &[CTerm],
    env: &mut Env,
    sorts: &[Sort],
    f: &mut dyn FnMut(&mut Env, &[Value]) -> Result<bool, EvalError>,
) -> Result<bool, EvalError> {
    let mut trail = Vec::new();
    let mut visit = |row: &[Value], env: &mut Env| -> Result<bool, EvalError> {
        let ok = match_row(pattern, row, env, sorts, &mut trail)?;
        let go_on = if ok { f(env, row)? } else { true };
        undo(env, &mut trail);
        Ok(go_on)
    };
    match candidates(rel, pattern, env) {
        Some(ids) => {
            for &id in ids {
                if !visit(&rel.rows[id], env)? {
                    return Ok(false);
                }
            }
        }
        None => {
            for row in &rel.rows {
                if !visit(row, env)? {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}

impl Body {
    fn new(c: Compiler, lits: Vec<CLit>) -> Self {
        let plan = make_plan(&lits, None);
        Body {
            names: c.names,
            sorts: c.sorts,
            lits,
            plan,
        }
    }

    pub(crate) fn slot_of(&self, name: &Name) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub(crate) fn new_env(&self) -> Env {
        vec![None; self.names.len()]
    }

    /// Indices and predicates of positive relational literals.
    pub(crate) fn positive_preds(&self) -> impl Iterator<Item = (usize, &Name)> {
        self.lits.iter().enumerate().filter_map(|(i, l)| match l {
            CLit::Rel {
                pred,
                negated: false,
                ..
            } => Some((i, pred)),
            _ => None,
        })
    }

    /// Enumerates every satisfying assignment. With `delta = Some((i, rel))`
    /// literal `i` ranges over `rel` only (semi-naive evaluation).
    pub(crate) fn solve(
        &self,
        view: View<'_>,
        delta: Option<(usize, &Relation)>,
        emit: &mut dyn FnMut(&Env) -> Result<(), EvalError>,
    ) -> Result<(), EvalError> {
        let plan = match delta {
            Some((i, _)) => make_plan(&self.lits, Some(i)),
            None => self.plan.clone(),
        };
        let mut env = self.new_env();
        self.step(&plan, 0, &mut env, view, delta, emit)
    }

    fn step(
        &self,
        plan: &[usize],
        k: usize,
        env: &mut Env,
        view: View<'_>,
        delta: Option<(usize, &Relation)>,
        emit: &mut dyn FnMut(&Env) -> Result<(), EvalError>,
    ) -> Result<(), EvalError> {
        let Some(&li) = plan.get(k) else {
            return emit(env);
        };
        match &self.lits[li] {
            CLit::Rel {
                pred,
                pattern,
                negated: false,
            } => {
                let mut next = |env: &mut Env, _: &[Value]| {
                    self.step(plan, k + 1, env, view, delta, emit)?;
                    Ok(true)
                };
                match delta {
                    Some((d, rel)) if d == li => {
                        for_each_match(rel, pattern, env, &self.sorts, &mut next)?;
                    }
                    _ => {
                        for rel in view.relations(pred) {
                            for_each_match(rel, pattern, env, &self.sorts, &mut next)?;
                        }
                    }
                }
                Ok(())
            }
            CLit::Rel {
                pred,
                pattern,
                negated: true,
            } => {
                let mut found = false;
                for rel in view.relations(pred) {
                    let mut stop = |_: &mut Env, _: &[Value]| {
                        found = true;
                        Ok(false)
                    };
                    for_each_match(rel, pattern, env, &self.sorts, &mut stop)?;
                    if found {
                        return Ok(());
                    }
                }
                self.step(plan, k + 1, env, view, delta, emit)
            }
            lit => {
                if self.filter(lit, env, view)? {
                    self.step(plan, k + 1, env, view, delta, emit)
                } else {
                    Ok(())
                }
            }
        }
    }

    fn filter(&self, lit: &CLit, env: &mut Env, view: View<'_>) -> Result<bool, EvalError> {
        match lit {
            CLit::Compare(a, op, b) => {
                let (a, b) = (eval(a, env)?, eval(b, env)?);
                Ok(match op {
                    CompareOp::Ne => a != b,
                    CompareOp::Lt | CompareOp::Le => {
                        let ord = a.zip(b).and_then(|(a, b)| compare_numeric(&a, &b));
                        match (op, ord) {
                            (CompareOp::Lt, Some(o)) => o.is_lt(),
                            (CompareOp::Le, Some(o)) => o.is_le(),
                            _ => false,
                        }
                    }
                })
            }
            CLit::Allen(rel, a, b) => match (eval(a, env)?, eval(b, env)?) {
                (Some(Value::Interval(a)), Some(Value::Interval(b))) => {
                    Ok(AllenRelation::between(&a, &b) == *rel)
                }
                (None, _) | (_, None) => Ok(false),
                (a, b) => Err(sort_err(format!(
                    "{rel} expects intervals, got {} and {}",
                    a.expect("some"),
                    b.expect("some")
                ))),
            },
            CLit::Boundary {
                which,
                pred,
                args,
                time,
            } => {
                let mut pattern = args.clone();
                pattern.push(CTerm::Wild);
                let pos = args.len();
                let mut best: Option<End> = None;
                for rel in view.relations(pred) {
                    let mut take = |_: &mut Env, row: &[Value]| {
                        if let Value::Interval(iv) = &row[pos] {
                            let x = match which {
                                Boundary::Start => End::At(iv.start()),
                                Boundary::End => iv.end(),
                            };
                            best = Some(match (best, which) {
                                (None, _) => x,
                                (Some(b), Boundary::Start) => b.min(x),
                                (Some(b), Boundary::End) => b.max(x),
                            });
                        }
                        Ok(true)
                    };
                    for_each_match(rel, &pattern, env, &self.sorts, &mut take)?;
                }
                let t = eval(time, env)?.and_then(|v| v.as_numeric());
                Ok(best.is_some() && best == t)
            }
            CLit::Rel { .. } => unreachable!("relational literals are generators or negations"),
        }
    }
}

/// A rule with its head terms compiled against the body's variable slots.
#[derive(Debug, Clone)]
pub(crate) struct CompiledRule {
    pub(crate) rule: Rule,
    pub(crate) body: Body,
    head: Vec<CTerm>,
}

impl CompiledRule {
    pub(crate) fn new(rule: &Rule) -> Self {
        let mut c = Compiler {
            names: Vec::new(),
            sorts: Vec::new(),
        };
        let lits: Vec<CLit> = rule.body.iter().map(|l| c.literal(l)).collect();
        let head = rule.head.terms().into_iter().map(|t| c.term(t)).collect();
        CompiledRule {
            rule: rule.clone(),
            body: Body::new(c, lits),
            head,
        }
    }

    /// Evaluated head terms; `None` when an interval term is empty.
    pub(crate) fn head_values(&self, env: &Env) -> Result<Option<Vec<Value>>, EvalError> {
        self.head.iter().map(|t| eval(t, env)).collect()
    }
}

fn store_needs_events(body: &[Literal]) -> bool {
    body.iter()
        .any(|l| l.atom.is_event() || matches!(l.atom, Atom::Boundary { .. }))
}

/// All bindings of `out_vars` that satisfy `body` over the dataset and, when
/// given, the annotated event facts. Unannotated event atoms match any level.
pub fn eval_body(
    body: &[Literal],
    out_vars: &[Name],
    dataset: &Dataset,
    events: Option<&[EventFact]>,
) -> Result<BTreeSet<Vec<Value>>, EvalError> {
    if events.is_none() && store_needs_events(body) {
        return Err(EvalError::EventsRequired);
    }
    let rule = Rule {
        head: Head::Bottom,
        body: body.to_vec(),
        line: 0,
    };
    let compiled = CompiledRule::new(&rule);
    let slots = out_vars
        .iter()
        .map(|v| {
            compiled
                .body
                .slot_of(v)
                .ok_or_else(|| EvalError::UnknownVariable(v.clone()))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let base = FactStore::from_dataset(dataset);
    let ev = FactStore::from_events(events.unwrap_or(&[]));
    let mut out = BTreeSet::new();
    compiled.body.solve(View::new(&[&base, &ev]), None, &mut |env| {
        out.insert(
            slots
                .iter()
                .map(|&s| env[s].clone().expect("safe body binds outputs"))
                .collect(),
        );
        Ok(())
    })?;
    Ok(out)
}

/// Π_SE(D): ground exists, ends and window facts.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AuxFactStore {
    pub exists: BTreeSet<(EventKey, Timepoint, Level)>,
    pub ends: BTreeSet<(EventKey, Timepoint, Level)>,
    pub windows: BTreeSet<(EventKey, u64)>,
    persistent: BTreeSet<Name>,
}

impl AuxFactStore {
    pub fn new(persistent: impl IntoIterator<Item = Name>) -> Self {
        AuxFactStore {
            persistent: persistent.into_iter().collect(),
            ..Self::default()
        }
    }

    pub fn is_persistent(&self, pred: &Name) -> bool {
        self.persistent.contains(pred)
    }

    /// Ground events with at least one existence fact.
    pub fn keys(&self) -> BTreeSet<&EventKey> {
        self.exists.iter().map(|(k, _, _)| k).collect()
    }

    pub fn windows_for(&self, key: &EventKey) -> Vec<u64> {
        self.windows
            .iter()
            .filter(|(k, _)| k == key)
            .map(|(_, w)| *w)
            .collect()
    }

    fn points<'a>(
        set: &'a BTreeSet<(EventKey, Timepoint, Level)>,
        key: &'a EventKey,
    ) -> impl Iterator<Item = (Timepoint, Level)> + 'a {
        set.range((key.clone(), 0, 0)..)
            .take_while(move |(k, _, _)| k == key)
            .map(|(_, t, l)| (*t, *l))
    }
}

fn expect_nat(v: &Value, what: &str) -> Result<u64, EvalError> {
    match v {
        Value::Nat(n) => Ok(*n),
        other => Err(sort_err(format!("{what} must be a natural, got {other}"))),
    }
}

/// Grounds every existence, termination and window rule over `d`.
pub fn ground_simple_heads(tes: &Tes, d: &Dataset) -> Result<AuxFactStore, EvalError> {
    let mut store = AuxFactStore::new(
        tes.decls()
            .filter(|p| p.kind == PredKind::PersistentSimple)
            .map(|p| p.name.clone()),
    );
    let base = FactStore::from_dataset(d);
    for rule in tes.simple_rules() {
        let c = CompiledRule::new(rule);
        let pred = rule.head.pred().expect("simple rules have a head predicate");
        let k = rule.head.args().len();
        c.body.solve(View::new(&[&base]), None, &mut |env| {
            let Some(vals) = c.head_values(env)? else {
                return Ok(());
            };
            let key = EventKey {
                pred: pred.clone(),
                args: vals[..k].to_vec(),
            };
            match (&rule.head, rule.kind()) {
                (Head::Exists { level, .. }, RuleKind::Existence) => {
                    store
                        .exists
                        .insert((key, expect_nat(&vals[k], "existence time")?, *level));
                }
                (Head::Ends { level, .. }, RuleKind::Termination) => {
                    store
                        .ends
                        .insert((key, expect_nat(&vals[k], "termination time")?, *level));
                }
                _ => {
                    store
                        .windows
                        .insert((key, expect_nat(&vals[k], "window")?));
                }
            }
            Ok(())
        })?;
    }
    Ok(store)
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum InvalidSpec {
    #[error("no window fact for existing event {0}")]
    MissingWindow(EventKey),
    #[error("event {0} has several windows {1:?}")]
    AmbiguousWindow(EventKey, Vec<u64>),
    #[error("event {0} has window 0")]
    ZeroWindow(EventKey),
}

/// Every existing nonpersistent event needs exactly one positive window.
pub fn check_validity(store: &AuxFactStore) -> Result<(), InvalidSpec> {
    for key in store.keys() {
        if store.is_persistent(&key.pred) {
            continue;
        }
        match store.windows_for(key).as_slice() {
            [] => return Err(InvalidSpec::MissingWindow(key.clone())),
            [0] => return Err(InvalidSpec::ZeroWindow(key.clone())),
            [_] => {}
            ws => return Err(InvalidSpec::AmbiguousWindow(key.clone(), ws.to_vec())),
        }
    }
    Ok(())
}

/// Cumulative existence and termination timepoints per confidence level:
/// level ℓ holds every point asserted at some level ℓ' ≤ ℓ.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LevelTimepoints {
    t_exists: Vec<BTreeSet<Timepoint>>,
    t_ends: Vec<BTreeSet<Timepoint>>,
}

impl LevelTimepoints {
    pub fn from_points(
        exists: impl IntoIterator<Item = (Timepoint, Level)>,
        ends: impl IntoIterator<Item = (Timepoint, Level)>,
    ) -> Self {
        let exists: Vec<_> = exists.into_iter().collect();
        let ends: Vec<_> = ends.into_iter().collect();
        let max = exists.iter().chain(&ends).map(|&(_, l)| l).max().unwrap_or(0);
        let cumulative = |pts: &[(Timepoint, Level)]| {
            (1..=max)
                .map(|lvl| {
                    pts.iter()
                        .filter(|&&(_, l)| l <= lvl)
                        .map(|&(t, _)| t)
                        .collect()
                })
                .collect()
        };
        LevelTimepoints {
            t_exists: cumulative(&exists),
            t_ends: cumulative(&ends),
        }
    }

    pub fn max_level(&self) -> Level {
        self.t_exists.len() as Level
    }

    /// T_∃ at `level`; levels above the maximum repeat the top set.
    pub fn exists_at(&self, level: Level) -> &BTreeSet<Timepoint> {
        Self::at(&self.t_exists, level)
    }

    pub fn ends_at(&self, level: Level) -> &BTreeSet<Timepoint> {
        Self::at(&self.t_ends, level)
    }

    fn at(v: &[BTreeSet<Timepoint>], level: Level) -> &BTreeSet<Timepoint> {
        static EMPTY: BTreeSet<Timepoint> = BTreeSet::new();
        assert!(level >= 1, "confidence levels start at 1");
        v.get(level as usize - 1).or(v.last()).unwrap_or(&EMPTY)
    }
}

pub fn level_timepoints(store: &AuxFactStore, key: &EventKey) -> LevelTimepoints {
    LevelTimepoints::from_points(
        AuxFactStore::points(&store.exists, key),
        AuxFactStore::points(&store.ends, key),
    )
}
