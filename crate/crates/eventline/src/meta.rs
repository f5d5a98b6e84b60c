//! Meta-event inference: the stratified model of the meta rules over a
//! dataset and a set of simple events.

use std::collections::HashMap;

use crate::lang::{Head, Tes};
use crate::model::{AllenRelation, Dataset, End, EventFact, EventSet, Level, Name, Value};
use crate::query::{CompiledRule, EvalError, FactStore, Relation, View};

/// Meta facts are annotated event facts over meta predicates.
pub type MetaEventSet = EventSet;

/// Meta rules compiled once and grouped by stratum.
#[derive(Debug, Clone)]
pub(crate) struct MetaProgram {
    strata: Vec<Vec<CompiledRule>>,
    stratum_of: HashMap<Name, usize>,
}

impl MetaProgram {
    pub(crate) fn new(tes: &Tes) -> Self {
        let stratum_of: HashMap<Name, usize> = tes
            .strata()
            .iter()
            .enumerate()
            .flat_map(|(i, preds)| preds.iter().map(move |p| (p.clone(), i)))
            .collect();
        let mut strata = vec![Vec::new(); tes.strata().len()];
        for rule in tes.meta_rules() {
            let pred = rule.head.pred().expect("meta rules have a head predicate");
            strata[stratum_of[pred]].push(CompiledRule::new(rule));
        }
        MetaProgram { strata, stratum_of }
    }

    pub(crate) fn is_empty(&self) -> bool {
        self.strata.iter().all(Vec::is_empty)
    }

    /// Saturates stratum by stratum; returns the derived meta facts as a store.
    pub(crate) fn run(&self, base: &FactStore, simple: &FactStore) -> Result<FactStore, EvalError> {
        let mut derived = FactStore::default();
        for (i, rules) in self.strata.iter().enumerate() {
            let mut delta = FactStore::default();
            for rule in rules {
                let found = fire(rule, View::new(&[base, simple, &derived]), None)?;
                for (pred, row) in found {
                    if !derived.get(&pred).is_some_and(|r| r.contains(&row)) {
                        delta.insert(&pred, row);
                    }
                }
            }
            while delta.relations().any(|(_, r)| !r.is_empty()) {
                for (pred, rel) in delta.relations() {
                    for row in rel.rows() {
                        derived.insert(pred, row.clone());
                    }
                }
                let mut next = FactStore::default();
                for rule in rules {
                    let recursive: Vec<(usize, &Name)> = rule
                        .body
                        .positive_preds()
                        .filter(|(_, p)| self.stratum_of.get(*p) == Some(&i))
                        .collect();
                    for (lit, pred) in recursive {
                        let Some(rel) = delta.get(pred) else { continue };
                        let found = fire(rule, View::new(&[base, simple, &derived]), Some((lit, rel)))?;
                        for (pred, row) in found {
                            if !derived.get(&pred).is_some_and(|r| r.contains(&row)) {
                                next.insert(&pred, row);
                            }
                        }
                    }
                }
                delta = next;
            }
        }
        Ok(derived)
    }
}

fn fire(
    rule: &CompiledRule,
    view: View<'_>,
    delta: Option<(usize, &Relation)>,
) -> Result<Vec<(Name, Vec<Value>)>, EvalError> {
    let Head::Meta { pred, .. } = &rule.rule.head else {
        unreachable!("meta program holds meta rules only")
    };
    let mut out = Vec::new();
    rule.body.solve(view, delta, &mut |env| {
        let Some(vals) = rule.head_values(env)? else {
            return Ok(());
        };
        match vals.last() {
            Some(Value::Nat(n)) if *n >= 1 && *n <= u64::from(Level::MAX) => {}
            Some(v) => {
                return Err(EvalError::LevelOverflow {
                    pred: pred.clone(),
                    value: v.to_string(),
                })
            }
            None => unreachable!("meta heads carry a level"),
        }
        if !matches!(vals[vals.len() - 2], Value::Interval(_)) {
            return Err(EvalError::Sort(format!(
                "head interval of {pred} evaluated to {}",
                vals[vals.len() - 2]
            )));
        }
        out.push((pred.clone(), vals));
        Ok(())
    })?;
    Ok(out)
}

pub(crate) fn store_to_events(store: &FactStore) -> EventSet {
    let mut out = EventSet::new();
    for (pred, rel) in store.relations() {
        for row in rel.rows() {
            let n = row.len();
            let (Value::Interval(iv), Value::Nat(l)) = (&row[n - 2], &row[n - 1]) else {
                unreachable!("event rows end with interval and level")
            };
            out.insert(EventFact {
                pred: pred.clone(),
                args: row[..n - 2].to_vec(),
                interval: *iv,
                level: *l as Level,
            });
        }
    }
    out
}

/// ME(D, S, Σ).
pub fn infer_meta(d: &Dataset, s: &EventSet, tes: &Tes) -> Result<MetaEventSet, EvalError> {
    let program = MetaProgram::new(tes);
    if program.is_empty() {
        return Ok(EventSet::new());
    }
    let base = FactStore::from_dataset(d);
    let simple = FactStore::from_events(s);
    Ok(store_to_events(&program.run(&base, &simple)?))
}

/// Evaluates a ground temporal built-in. Allen relations take two intervals;
/// `start`/`end` take the event predicate, its data arguments and a
/// timepoint. Returns `None` for unknown names or ill-sorted arguments.
pub fn builtin_eval(name: &str, args: &[Value], s: &EventSet) -> Option<bool> {
    if let Some(rel) = AllenRelation::from_name(name) {
        return match args {
            [Value::Interval(a), Value::Interval(b)] => Some(AllenRelation::between(a, b) == rel),
            _ => None,
        };
    }
    let start = match name {
        "start" => true,
        "end" => false,
        _ => return None,
    };
    let (Value::Sym(pred), rest) = args.split_first()? else {
        return None;
    };
    let (t, data) = rest.split_last()?;
    let t = t.as_numeric()?;
    let bounds = s
        .iter()
        .filter(|f| &f.pred == pred && f.args == data)
        .map(|f| if start { End::At(f.interval.start()) } else { f.interval.end() });
    let best = if start { bounds.min() } else { bounds.max() };
    Some(best == Some(t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::parse_tes;
    use crate::model::Interval;

    const GEST_DIAB: &str = "
        decl meta Preg/1, HyperGlyc/1, PreDiab/1, PreDiabAtOnset/1, GestDiab/1.
        meta PreDiabAtOnset(P, [T3, T4], L) :-
            PreDiab(P, [T1, T2], L), HyperGlyc(P, [T3, T4], L2), T1 <= T3, T3 <= T2.
        meta GestDiab(P, inter([T1, T2], [T3, T4]), min(L1, L2)) :-
            Preg(P, [T1, T2], L1), HyperGlyc(P, [T3, T4], L2),
            not PreDiabAtOnset(P, [T3, T4], _).
    ";

    fn ev(pred: &str, arg: &str, a: u64, b: u64, l: Level) -> EventFact {
        EventFact::new(pred, vec![Value::sym(arg)], Interval::closed(a, b), l)
    }

    #[test]
    fn gestational_diabetes() {
        let tes = parse_tes(GEST_DIAB).unwrap();
        let s: EventSet = [ev("Preg", "p", 0, 9, 1), ev("HyperGlyc", "p", 3, 5, 1)]
            .into_iter()
            .collect();
        let me = infer_meta(&Dataset::new(), &s, &tes).unwrap();
        assert_eq!(me.into_vec(), vec![ev("GestDiab", "p", 3, 5, 1)]);
    }

    #[test]
    fn prediabetes_at_onset_blocks() {
        let tes = parse_tes(GEST_DIAB).unwrap();
        let s: EventSet = [
            ev("Preg", "p", 0, 9, 1),
            ev("HyperGlyc", "p", 3, 5, 1),
            ev("PreDiab", "p", 0, 4, 1),
        ]
        .into_iter()
        .collect();
        let me = infer_meta(&Dataset::new(), &s, &tes).unwrap();
        assert_eq!(me.into_vec(), vec![ev("PreDiabAtOnset", "p", 3, 5, 1)]);
    }

    #[test]
    fn empty_program() {
        let tes = parse_tes("decl persistent E/0.").unwrap();
        let s: EventSet = [EventFact::new("E", vec![], Interval::point(1), 1)].into_iter().collect();
        assert!(infer_meta(&Dataset::new(), &s, &tes).unwrap().is_empty());
    }

    #[test]
    fn recursion_follows_chain() {
        let tes = parse_tes(
            "decl atemporal Next/2, First/1.\ndecl meta Sat/1, Q/0.\n\
             meta Sat(Z, [T, T2], 1) :- Q([T, T2]), First(Z).\n\
             meta Sat(Z, [T, T2], 1) :- Sat(Y, [T, T2]), Next(Y, Z).",
        )
        .unwrap();
        let d = crate::lang::parse_facts(
            "atemporal First(c1).\natemporal Next(c1, c2).\natemporal Next(c2, c3).",
            &tes,
        )
        .unwrap()
        .into_iter()
        .collect();
        let s: EventSet = [EventFact::new("Q", vec![], Interval::ongoing(0), 1)].into_iter().collect();
        let me = infer_meta(&d, &s, &tes).unwrap();
        let names: Vec<String> = me.iter().map(|f| f.args[0].to_string()).collect();
        assert_eq!(names, ["c1", "c2", "c3"]);
    }

    #[test]
    fn level_arithmetic_below_one_is_an_error() {
        let tes = parse_tes(
            "decl meta M/0, N/0.\nmeta M([T, T2], minus(L, 1)) :- N([T, T2], L).",
        )
        .unwrap();
        let s: EventSet = [EventFact::new("N", vec![], Interval::point(1), 1)].into_iter().collect();
        assert!(matches!(
            infer_meta(&Dataset::new(), &s, &tes),
            Err(EvalError::LevelOverflow { .. })
        ));
    }

    #[test]
    fn builtins() {
        let contains = builtin_eval(
            "contains",
            &[Value::Interval(Interval::closed(1, 7)), Value::Interval(Interval::closed(2, 5))],
            &EventSet::new(),
        );
        assert_eq!(contains, Some(true));
        let meets = builtin_eval(
            "meets",
            &[Value::Interval(Interval::closed(1, 3)), Value::Interval(Interval::closed(3, 6))],
            &EventSet::new(),
        );
        assert_eq!(meets, Some(true));
        let s: EventSet = [
            EventFact::new("E", vec![], Interval::closed(2, 4), 1),
            EventFact::new("E", vec![], Interval::point(9), 1),
        ]
        .into_iter()
        .collect();
        assert_eq!(builtin_eval("start", &[Value::sym("E"), Value::Nat(2)], &s), Some(true));
        assert_eq!(builtin_eval("start", &[Value::sym("E"), Value::Nat(9)], &s), Some(false));
        assert_eq!(builtin_eval("end", &[Value::sym("E"), Value::Nat(9)], &s), Some(true));
    }
}
