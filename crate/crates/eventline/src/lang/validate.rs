//! Static checks run after parsing: body shapes, sort inference, safety,
//! window coverage and stratification.

use std::collections::{BTreeMap, BTreeSet};

use petgraph::algo::tarjan_scc;
use petgraph::graphmap::DiGraphMap;

use crate::model::{Name, PredKind, PredicateDecl};
use crate::term::{NumFn, Sort, Term};

use super::ast::{Atom, CompareOp, Head, Literal, Rule, RuleKind, Tes};
use super::SpecError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Slot {
    Data,
    Num(Sort),
    Interval,
    /// Either side of `!=`.
    Any,
}

struct SortInference<'a> {
    rule: &'a Rule,
    sorts: BTreeMap<Name, Sort>,
    /// `inter(...)` is accepted in the current position.
    allow_inter: bool,
}

impl SortInference<'_> {
    fn invalid(&self, message: String) -> SpecError {
        SpecError::Invalid {
            line: self.rule.line,
            message,
        }
    }

    fn constrain(&mut self, name: &Name, sort: Sort) -> Result<(), SpecError> {
        let met = match self.sorts.get(name) {
            None => Some(sort),
            Some(prev) => prev.meet(sort),
        };
        match met {
            Some(s) => {
                self.sorts.insert(name.clone(), s);
                Ok(())
            }
            None => Err(SpecError::SortConflict {
                variable: name.clone(),
                line: self.rule.line,
                message: format!(
                    "used both as {} and as {sort}",
                    self.sorts.get(name).expect("conflict needs a previous sort")
                ),
            }),
        }
    }

    fn require(&mut self, term: &Term, slot: Slot) -> Result<(), SpecError> {
        let mismatch = |what: &str| format!("`{term}` cannot be used as {what}");
        match (slot, term) {
            (_, Term::Wildcard) => Ok(()),
            (Slot::Any, Term::Var(_) | Term::Sym(_) | Term::Nat(_) | Term::Star) => Ok(()),
            (Slot::Any, Term::Fn(..)) => self.require(term, Slot::Num(Sort::NatOrStar)),
            (Slot::Any, _) => self.require(term, Slot::Interval),
            (Slot::Data, Term::Var(v)) => self.constrain(&v.name, Sort::Data),
            (Slot::Data, Term::Sym(_) | Term::Nat(_)) => Ok(()),
            (Slot::Data, _) => Err(self.invalid(mismatch("a data argument"))),
            (Slot::Num(s), Term::Var(v)) => self.constrain(&v.name, s),
            (Slot::Num(Sort::PosNat), Term::Nat(0)) => {
                Err(self.invalid(mismatch("a positive natural")))
            }
            (Slot::Num(_), Term::Nat(_)) => Ok(()),
            (Slot::Num(Sort::NatOrStar), Term::Star) => Ok(()),
            (Slot::Num(_), Term::Fn(_, args)) => args
                .iter()
                .try_for_each(|a| self.require(a, Slot::Num(Sort::NatOrStar))),
            (Slot::Num(s), _) => Err(self.invalid(mismatch(&format!("a {s}")))),
            (Slot::Interval, Term::Interval(lo, hi)) => {
                let saved = std::mem::replace(&mut self.allow_inter, false);
                self.require(lo, Slot::Num(Sort::Nat))?;
                self.require(hi, Slot::Num(Sort::NatOrStar))?;
                self.allow_inter = saved;
                Ok(())
            }
            (Slot::Interval, Term::Inter(args)) if self.allow_inter => {
                args.iter().try_for_each(|a| self.require(a, Slot::Interval))
            }
            (Slot::Interval, Term::Inter(_)) => Err(self.invalid(format!(
                "`{term}`: inter(...) is allowed only in meta heads and interval relations"
            ))),
            (Slot::Interval, _) => Err(self.invalid(mismatch("an interval"))),
        }
    }

    fn atom(&mut self, atom: &Atom) -> Result<(), SpecError> {
        self.allow_inter = false;
        match atom {
            Atom::Atemporal { args, .. } => self.data(args),
            Atom::Observation { args, time, .. } => {
                self.data(args)?;
                self.require(time, Slot::Num(Sort::Nat))
            }
            Atom::Event { args, interval, .. } => {
                self.data(args)?;
                self.require(interval, Slot::Interval)
            }
            Atom::Annotated {
                args,
                interval,
                level,
                ..
            } => {
                self.data(args)?;
                self.require(interval, Slot::Interval)?;
                self.require(level, Slot::Num(Sort::PosNat))
            }
            Atom::Compare { lhs, op, rhs } => {
                let slot = if *op == CompareOp::Ne {
                    Slot::Any
                } else {
                    Slot::Num(Sort::NatOrStar)
                };
                self.require(lhs, slot)?;
                self.require(rhs, slot)
            }
            Atom::Allen { lhs, rhs, .. } => {
                self.allow_inter = true;
                self.require(lhs, Slot::Interval)?;
                self.allow_inter = true;
                self.require(rhs, Slot::Interval)
            }
            Atom::Boundary { args, time, .. } => {
                self.data(args)?;
                self.require(time, Slot::Num(Sort::NatOrStar))
            }
        }
    }

    fn data(&mut self, args: &[Term]) -> Result<(), SpecError> {
        args.iter().try_for_each(|a| self.require(a, Slot::Data))
    }

    fn head(&mut self, head: &Head) -> Result<(), SpecError> {
        if head.terms().iter().any(|t| t.has_wildcard()) {
            return Err(self.invalid("`_` cannot appear in a rule head".into()));
        }
        self.data(head.args())?;
        match head {
            Head::Exists { time, .. } | Head::Ends { time, .. } => {
                self.require(time, Slot::Num(Sort::Nat))
            }
            Head::Window { width, .. } => self.require(width, Slot::Num(Sort::PosNat)),
            Head::Meta {
                interval, level, ..
            } => {
                if !head_interval_ok(interval) {
                    return Err(self.invalid(format!(
                        "meta head interval `{interval}` must be [lo, hi] over variables, \
                         naturals and `*`, or inter(...) of such intervals"
                    )));
                }
                self.allow_inter = true;
                self.require(interval, Slot::Interval)?;
                self.require(level, Slot::Num(Sort::PosNat))
            }
            Head::Bottom => Ok(()),
        }
    }
}

fn head_interval_ok(t: &Term) -> bool {
    match t {
        Term::Interval(lo, hi) => {
            matches!(lo.as_ref(), Term::Var(_) | Term::Nat(_))
                && matches!(hi.as_ref(), Term::Var(_) | Term::Nat(_) | Term::Star)
        }
        Term::Inter(args) => args.iter().all(head_interval_ok),
        _ => false,
    }
}

fn rewrite_vars(term: &mut Term, sorts: &BTreeMap<Name, Sort>) {
    match term {
        Term::Var(v) => v.sort = sorts.get(&v.name).copied().unwrap_or(Sort::Data),
        Term::Fn(_, args) | Term::Inter(args) => {
            args.iter_mut().for_each(|a| rewrite_vars(a, sorts))
        }
        Term::Interval(lo, hi) => {
            rewrite_vars(lo, sorts);
            rewrite_vars(hi, sorts);
        }
        _ => {}
    }
}

fn atom_terms_mut(atom: &mut Atom) -> Vec<&mut Term> {
    match atom {
        Atom::Atemporal { args, .. } => args.iter_mut().collect(),
        Atom::Observation { args, time, .. } => args.iter_mut().chain([time]).collect(),
        Atom::Event { args, interval, .. } => args.iter_mut().chain([interval]).collect(),
        Atom::Annotated {
            args,
            interval,
            level,
            ..
        } => args.iter_mut().chain([interval, level]).collect(),
        Atom::Compare { lhs, rhs, .. } | Atom::Allen { lhs, rhs, .. } => vec![lhs, rhs],
        Atom::Boundary { args, time, .. } => args.iter_mut().chain([time]).collect(),
    }
}

fn head_terms_mut(head: &mut Head) -> Vec<&mut Term> {
    match head {
        Head::Exists { args, time, .. } | Head::Ends { args, time, .. } => {
            args.iter_mut().chain([time]).collect()
        }
        Head::Window { args, width, .. } => args.iter_mut().chain([width]).collect(),
        Head::Meta {
            args,
            interval,
            level,
            ..
        } => args.iter_mut().chain([interval, level]).collect(),
        Head::Bottom => Vec::new(),
    }
}

fn infer_sorts(rule: &mut Rule) -> Result<(), SpecError> {
    let mut inf = SortInference {
        rule,
        sorts: BTreeMap::new(),
        allow_inter: false,
    };
    inf.head(&rule.head)?;
    for lit in &rule.body {
        inf.atom(&lit.atom)?;
    }
    let sorts = inf.sorts;
    for t in head_terms_mut(&mut rule.head) {
        rewrite_vars(t, &sorts);
    }
    for lit in &mut rule.body {
        for t in atom_terms_mut(&mut lit.atom) {
            rewrite_vars(t, &sorts);
        }
    }
    Ok(())
}

fn check_body_shape(rule: &Rule) -> Result<(), SpecError> {
    let invalid = |message: &str| SpecError::Invalid {
        line: rule.line,
        message: message.to_string(),
    };
    for Literal { atom, .. } in &rule.body {
        match rule.kind() {
            RuleKind::Existence | RuleKind::Termination | RuleKind::Window => {
                if !matches!(
                    atom,
                    Atom::Atemporal { .. } | Atom::Observation { .. } | Atom::Compare { .. }
                ) {
                    return Err(invalid(
                        "simple-event rule bodies use only atemporal, observation and \
                         comparison atoms",
                    ));
                }
            }
            RuleKind::Constraint => {
                if matches!(atom, Atom::Annotated { .. }) {
                    return Err(invalid("constraint bodies use unannotated event atoms"));
                }
            }
            RuleKind::MetaEvent => {}
        }
    }
    Ok(())
}

/// Every variable must occur in a positive relational body atom as a plain
/// argument or as a literal interval endpoint.
fn check_safety(rule: &Rule) -> Result<(), SpecError> {
    let bound: BTreeSet<&Name> = rule
        .body
        .iter()
        .filter(|l| !l.negated)
        .flat_map(|l| l.atom.binding_vars())
        .map(|v| &v.name)
        .collect();
    match rule.vars().into_iter().find(|v| !bound.contains(&v.name)) {
        Some(v) => Err(SpecError::SafetyViolation {
            rule: rule.to_string(),
            variable: v.name.clone(),
            line: rule.line,
        }),
        None => Ok(()),
    }
}

fn has_plus(t: &Term) -> bool {
    match t {
        Term::Fn(f, args) => *f == NumFn::Plus || args.iter().any(has_plus),
        _ => false,
    }
}

pub(super) fn build(
    decls: BTreeMap<Name, PredicateDecl>,
    rules: Vec<Rule>,
) -> Result<Tes, SpecError> {
    let mut tes = Tes {
        decls,
        ..Tes::default()
    };
    for mut rule in rules {
        check_body_shape(&rule)?;
        infer_sorts(&mut rule)?;
        check_safety(&rule)?;
        match rule.kind() {
            RuleKind::Existence | RuleKind::Termination | RuleKind::Window => {
                tes.simple_rules.push(rule)
            }
            RuleKind::MetaEvent => tes.meta_rules.push(rule),
            RuleKind::Constraint => tes.constraints.push(rule),
        }
    }

    for d in tes.decls.values() {
        if d.kind != PredKind::NonPersistentSimple {
            continue;
        }
        let kinds: BTreeSet<RuleKind> = tes
            .simple_rules
            .iter()
            .filter(|r| r.head.pred() == Some(&d.name))
            .map(Rule::kind)
            .collect();
        if kinds.contains(&RuleKind::Existence) && !kinds.contains(&RuleKind::Window) {
            return Err(SpecError::MissingWindowRule(d.name.clone()));
        }
    }

    tes.strata = stratify(&tes.meta_rules)?;
    let stratum: BTreeMap<&Name, usize> = tes
        .strata
        .iter()
        .enumerate()
        .flat_map(|(i, s)| s.iter().map(move |p| (p, i)))
        .collect();
    for rule in &tes.meta_rules {
        let Head::Meta { pred, level, .. } = &rule.head else {
            continue;
        };
        let recursive = rule.body.iter().any(|l| {
            !l.negated
                && l.atom.is_event()
                && l.atom
                    .pred()
                    .is_some_and(|p| stratum.get(p) == stratum.get(pred))
        });
        if recursive && has_plus(level) {
            return Err(SpecError::Invalid {
                line: rule.line,
                message: "plus(...) in the level of a recursive meta rule can grow without bound"
                    .into(),
            });
        }
    }
    Ok(tes)
}

/// Orders the meta predicates defined by `rules` into strata: strongly
/// connected components of the dependency graph, lowest first. Negated body
/// atoms and `start`/`end` lookups are negative dependencies and may not lie
/// inside a component.
pub fn stratify(rules: &[Rule]) -> Result<Vec<Vec<Name>>, SpecError> {
    let heads: BTreeSet<&Name> = rules
        .iter()
        .filter(|r| r.kind() == RuleKind::MetaEvent)
        .filter_map(|r| r.head.pred())
        .collect();
    let mut g: DiGraphMap<&str, bool> = DiGraphMap::new();
    for h in &heads {
        g.add_node(h.as_str());
    }
    for r in rules {
        let Some(head) = r.head.pred().filter(|h| heads.contains(h)) else {
            continue;
        };
        for lit in &r.body {
            let (pred, negative) = match &lit.atom {
                Atom::Event { pred, .. } | Atom::Annotated { pred, .. } => (pred, lit.negated),
                Atom::Boundary { pred, .. } => (pred, true),
                _ => continue,
            };
            if !heads.contains(pred) {
                continue;
            }
            let prev = g
                .edge_weight(pred.as_str(), head.as_str())
                .copied()
                .unwrap_or(false);
            g.add_edge(pred.as_str(), head.as_str(), prev || negative);
        }
    }

    let mut comps: Vec<Vec<&str>> = tarjan_scc(&g);
    for c in &mut comps {
        c.sort_unstable();
    }
    let comp_of: BTreeMap<&str, usize> = comps
        .iter()
        .enumerate()
        .flat_map(|(i, c)| c.iter().map(move |p| (*p, i)))
        .collect();

    let mut succ: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); comps.len()];
    let mut indeg = vec![0usize; comps.len()];
    for (a, b, &negative) in g.all_edges() {
        let (ca, cb) = (comp_of[a], comp_of[b]);
        if ca == cb {
            if negative {
                return Err(SpecError::NotStratified(
                    comps[ca].iter().map(|p| Name::new(p)).collect(),
                ));
            }
        } else if succ[ca].insert(cb) {
            indeg[cb] += 1;
        }
    }

    let mut ready: BTreeSet<(&str, usize)> = (0..comps.len())
        .filter(|&i| indeg[i] == 0)
        .map(|i| (comps[i][0], i))
        .collect();
    let mut strata = Vec::with_capacity(comps.len());
    while let Some(first) = ready.pop_first() {
        let i = first.1;
        strata.push(comps[i].iter().map(|p| Name::new(p)).collect());
        for &j in &succ[i] {
            indeg[j] -= 1;
            if indeg[j] == 0 {
                ready.insert((comps[j][0], j));
            }
        }
    }
    Ok(strata)
}
