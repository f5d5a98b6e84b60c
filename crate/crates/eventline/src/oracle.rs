//! Brute-force reference implementations and 3SAT instance encoders, used
//! to cross-check the engine.

use std::collections::HashMap;

use thiserror::Error;

use crate::error::Error;
use crate::lang::{parse_tes, Tes};
use crate::meta::infer_meta;
use crate::model::{Dataset, EventFact, EventSet, Fact, Level, Name, Value};
use crate::repair::{Checker, Mode, RepairSet};
use crate::simple::infer_all_simple;

/// Largest fact set the subset enumerations accept.
pub const BRUTE_LIMIT: usize = 18;

/// Subsets of a fact list as bitmasks over its positions.
struct Subsets<'a> {
    facts: Vec<&'a EventFact>,
    consistent: Vec<u32>,
}

impl<'a> Subsets<'a> {
    fn new(s: &'a EventSet, d: &Dataset, tes: &Tes) -> Result<Self, Error> {
        let facts: Vec<&EventFact> = s.iter().collect();
        if facts.len() > BRUTE_LIMIT {
            return Err(Error::TooLarge(facts.len()));
        }
        let checker = Checker::new(d, tes);
        let mut consistent = Vec::new();
        for mask in 0u32..1 << facts.len() {
            if checker.consistent(&Self::pick(&facts, mask))? {
                consistent.push(mask);
            }
        }
        Ok(Subsets { facts, consistent })
    }

    fn pick(facts: &[&'a EventFact], mask: u32) -> Vec<&'a EventFact> {
        (0..facts.len()).filter(|i| mask >> i & 1 == 1).map(|i| facts[i]).collect()
    }

    fn to_set(&self, mask: u32) -> EventSet {
        Self::pick(&self.facts, mask).into_iter().cloned().collect()
    }

    fn level_mask(&self, l: Level) -> u32 {
        (0..self.facts.len())
            .filter(|&i| self.facts[i].level == l)
            .fold(0, |m, i| m | 1 << i)
    }
}

fn strict_subset(a: u32, b: u32) -> bool {
    a & !b == 0 && a != b
}

/// Every subset of `s`, kept when consistent with no consistent strict superset.
pub fn brute_repairs(s: &EventSet, d: &Dataset, tes: &Tes) -> Result<RepairSet, Error> {
    let sub = Subsets::new(s, d, tes)?;
    let maximal = sub
        .consistent
        .iter()
        .filter(|&&r| !sub.consistent.iter().any(|&u| strict_subset(r, u)))
        .map(|&r| sub.to_set(r))
        .collect();
    Ok(RepairSet::new(maximal, true, usize::MAX))
}

/// Consistent subsets R with no consistent U and level k such that U and R
/// agree below k and R's level-k facts are a strict subset of U's.
pub fn brute_preferred_repairs(s: &EventSet, d: &Dataset, tes: &Tes) -> Result<RepairSet, Error> {
    let sub = Subsets::new(s, d, tes)?;
    let n = s.iter().map(|f| f.level).max().unwrap_or(0);
    // For each k: the level-k parts of consistent sets, grouped by their
    // facts below k.
    let mut below = 0u32;
    let mut by_level = Vec::new();
    for k in 1..=n {
        let at = sub.level_mask(k);
        let mut groups: HashMap<u32, Vec<u32>> = HashMap::new();
        for &u in &sub.consistent {
            groups.entry(u & below).or_default().push(u & at);
        }
        for parts in groups.values_mut() {
            parts.sort_unstable();
            parts.dedup();
        }
        by_level.push((below, at, groups));
        below |= at;
    }
    let beaten = |r: u32| {
        by_level.iter().any(|(below, at, groups)| {
            groups
                .get(&(r & below))
                .is_some_and(|parts| parts.iter().any(|&p| strict_subset(r & at, p)))
        })
    };
    let preferred = sub
        .consistent
        .iter()
        .filter(|&&r| !beaten(r))
        .map(|&r| sub.to_set(r))
        .collect();
    Ok(RepairSet::new(preferred, true, usize::MAX))
}

/// All timelines of the given kind as fact sets, from the brute-force repairs.
pub fn brute_timelines(d: &Dataset, tes: &Tes, kind: Mode) -> Result<Vec<EventSet>, Error> {
    let se = infer_all_simple(d, tes)?;
    let parts = match kind {
        Mode::Naive => vec![se],
        Mode::Consistent => brute_repairs(&se, d, tes)?.repairs,
        Mode::Preferred => brute_preferred_repairs(&se, d, tes)?.repairs,
        Mode::Cautious => {
            let reps = brute_repairs(&se, d, tes)?.repairs;
            let mut it = reps.into_iter();
            let first = it.next().unwrap_or_default();
            vec![it.fold(first, |acc, r| acc.intersection(&r))]
        }
    };
    parts
        .into_iter()
        .map(|p| {
            let meta = infer_meta(d, &p, tes)?;
            Ok(p.union(&meta))
        })
        .collect()
}

/// Recognition by comparison against every brute-force timeline.
pub fn brute_recognize(candidate: &EventSet, d: &Dataset, tes: &Tes, kind: Mode) -> Result<bool, Error> {
    Ok(brute_timelines(d, tes, kind)?.contains(candidate))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Lit {
    /// Index into [`Cnf3::variables`].
    pub var: usize,
    pub positive: bool,
}

/// A 3CNF formula.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cnf3 {
    pub variables: Vec<String>,
    pub clauses: Vec<[Lit; 3]>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DimacsError {
    #[error("missing `p cnf` header")]
    MissingHeader,
    #[error("line {0}: malformed header")]
    BadHeader(usize),
    #[error("line {line}: bad literal `{token}`")]
    BadLiteral { line: usize, token: String },
    #[error("line {line}: variable {var} outside 1..={max}")]
    VariableOutOfRange { line: usize, var: u64, max: usize },
    #[error("clause {index} has {width} literals, expected 3")]
    ClauseWidth { index: usize, width: usize },
    #[error("header declares {declared} clauses, found {found}")]
    ClauseCount { declared: usize, found: usize },
}

impl Cnf3 {
    /// Formula over variables `v1..vk`.
    pub fn new(k: usize, clauses: Vec<[Lit; 3]>) -> Self {
        Cnf3 {
            variables: (1..=k).map(|i| format!("v{i}")).collect(),
            clauses,
        }
    }

    /// Reads the `p cnf V C` format; `c` lines are comments and every
    /// clause ends with `0`.
    pub fn parse_dimacs(src: &str) -> Result<Cnf3, DimacsError> {
        let mut header = None;
        let mut clauses = Vec::new();
        let mut current = Vec::new();
        for (no, line) in src.lines().enumerate() {
            let line_no = no + 1;
            let line = line.trim();
            if line.is_empty() || line.starts_with('c') || line.starts_with('%') {
                continue;
            }
            if line.starts_with('p') {
                let parts: Vec<&str> = line.split_whitespace().collect();
                let parsed = match parts.as_slice() {
                    ["p", "cnf", v, c] => v.parse::<usize>().ok().zip(c.parse::<usize>().ok()),
                    _ => None,
                };
                header = Some(parsed.ok_or(DimacsError::BadHeader(line_no))?);
                continue;
            }
            let (k, _) = header.ok_or(DimacsError::MissingHeader)?;
            for token in line.split_whitespace() {
                let n: i64 = token.parse().map_err(|_| DimacsError::BadLiteral {
                    line: line_no,
                    token: token.to_string(),
                })?;
                if n == 0 {
                    clauses.push(std::mem::take(&mut current));
                    continue;
                }
                let var = n.unsigned_abs();
                if var as usize > k {
                    return Err(DimacsError::VariableOutOfRange { line: line_no, var, max: k });
                }
                current.push(Lit {
                    var: var as usize - 1,
                    positive: n > 0,
                });
            }
        }
        let (k, declared) = header.ok_or(DimacsError::MissingHeader)?;
        if !current.is_empty() {
            clauses.push(current);
        }
        if clauses.len() != declared {
            return Err(DimacsError::ClauseCount {
                declared,
                found: clauses.len(),
            });
        }
        let clauses = clauses
            .into_iter()
            .enumerate()
            .map(|(index, c)| {
                let width = c.len();
                <[Lit; 3]>::try_from(c).map_err(|_| DimacsError::ClauseWidth { index, width })
            })
            .collect::<Result<_, _>>()?;
        Ok(Cnf3::new(k, clauses))
    }

    /// Truth-table satisfiability.
    pub fn is_satisfiable(&self) -> bool {
        let k = self.variables.len();
        assert!(k < 32, "truth tables only for small formulas");
        (0u32..1 << k).any(|mu| {
            self.clauses
                .iter()
                .all(|c| c.iter().any(|l| (mu >> l.var & 1 == 1) == l.positive))
        })
    }

    fn clause_args(&self, c: &[Lit; 3]) -> Vec<Value> {
        c.iter()
            .flat_map(|l| {
                [
                    Value::sym(&self.variables[l.var]),
                    Value::Nat(u64::from(l.positive)),
                ]
            })
            .collect()
    }

    fn var_facts(&self) -> impl Iterator<Item = Fact> + '_ {
        self.variables.iter().map(|v| Fact::Observation {
            pred: Name::new("Var"),
            args: vec![Value::sym(v)],
            time: 0,
        })
    }
}

const VALUE_RULES: &str = "
exists_pers(Q, T, 1) :- Var(X, T).
exists_pers(Value(X, 1), T, 1) :- Var(X, T).
exists_pers(Value(X, 0), T, 1) :- Var(X, T).
constraint :- Value(X, 1, [T, T2]), Value(X, 0, [T, T2]).
";

const CONSISTENT_TES: &str = "
decl observation Var/1.
decl atemporal Clause/6.
decl persistent Q/0, Value/2.
constraint :- Var(X, T), Q([T, T2]), not Value(X, 1, [T, T2]), not Value(X, 0, [T, T2]).
constraint :- Clause(X1, Y1, X2, Y2, X3, Y3), Q([T, T2]),
    not Value(X1, Y1, [T, T2]), not Value(X2, Y2, [T, T2]), not Value(X3, Y3, [T, T2]).
";

/// Dataset and specification whose timeline `{Q([0,*],1)}` is consistent
/// iff the formula is unsatisfiable. The constraints negate event atoms.
pub fn encode_3sat_consistent(phi: &Cnf3) -> (Dataset, Tes) {
    let tes = parse_tes(&format!("{CONSISTENT_TES}{VALUE_RULES}")).expect("fixed specification");
    let clauses = phi.clauses.iter().map(|c| Fact::Atemporal {
        pred: Name::new("Clause"),
        args: phi.clause_args(c),
    });
    (phi.var_facts().chain(clauses).collect(), tes)
}

fn cautious_tes() -> String {
    let mut src = String::from(
        "
decl observation Var/1.
decl atemporal Clause/7, First/1, Next/2, Last/1.
decl persistent Q/0, Value/2.
decl meta Sat/1.
constraint :- Q([T, T2]), Last(Z), Sat(Z, [T, T2]).
",
    );
    for j in 1..=3 {
        src.push_str(&format!(
            "meta Sat(Z, [T, T2], 1) :- Q([T, T2]), First(Z),
    Clause(Z, X1, Y1, X2, Y2, X3, Y3), Value(X{j}, Y{j}, [T, T2]).
meta Sat(Z2, [T, T2], 1) :- Sat(Z, [T, T2]), Q([T, T2]), Next(Z, Z2),
    Clause(Z2, X1, Y1, X2, Y2, X3, Y3), Value(X{j}, Y{j}, [T, T2]).
"
        ));
    }
    src.push_str(VALUE_RULES);
    src
}

/// Negation-free variant whose cautious timeline is `{Q([0,*],1)}` iff the
/// formula is unsatisfiable: clauses are chained and a recursive meta event
/// walks the chain.
pub fn encode_3sat_cautious(phi: &Cnf3) -> (Dataset, Tes) {
    let tes = parse_tes(&cautious_tes()).expect("fixed specification");
    let id = |i: usize| Value::sym(&format!("c{}", i + 1));
    let atemporal = |pred: &str, args: Vec<Value>| Fact::Atemporal {
        pred: Name::new(pred),
        args,
    };
    let mut facts: Vec<Fact> = phi.var_facts().collect();
    for (i, c) in phi.clauses.iter().enumerate() {
        let mut args = vec![id(i)];
        args.extend(phi.clause_args(c));
        facts.push(atemporal("Clause", args));
        if i + 1 < phi.clauses.len() {
            facts.push(atemporal("Next", vec![id(i), id(i + 1)]));
        }
    }
    if let Some(last) = phi.clauses.len().checked_sub(1) {
        facts.push(atemporal("First", vec![id(0)]));
        facts.push(atemporal("Last", vec![id(last)]));
    }
    (facts.into_iter().collect(), tes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Interval;
    use crate::repair::{is_consistent, repairs};

    fn lit(v: usize, positive: bool) -> Lit {
        Lit { var: v - 1, positive }
    }

    fn q() -> EventFact {
        EventFact::new("Q", vec![], Interval::ongoing(0), 1)
    }

    #[test]
    fn consistent_encoding_dataset() {
        let phi = Cnf3::new(3, vec![[lit(1, true), lit(2, true), lit(3, false)]]);
        let (d, _) = encode_3sat_consistent(&phi);
        let clause = Fact::Atemporal {
            pred: Name::new("Clause"),
            args: vec![
                Value::sym("v1"),
                Value::Nat(1),
                Value::sym("v2"),
                Value::Nat(1),
                Value::sym("v3"),
                Value::Nat(0),
            ],
        };
        assert!(d.contains(&clause));
        assert_eq!(d.by_pred("Var").len(), 3);
        assert_eq!(d.len(), 4);
    }

    #[test]
    fn no_clauses_gives_only_variables() {
        let (d, _) = encode_3sat_consistent(&Cnf3::new(2, vec![]));
        assert_eq!(d.len(), 2);
        assert_eq!(d.by_pred("Var").len(), 2);
    }

    #[test]
    fn inferred_simple_events_of_the_gadget() {
        let phi = Cnf3::new(2, vec![[lit(1, true), lit(2, true), lit(2, false)]]);
        let (d, tes) = encode_3sat_consistent(&phi);
        let se = infer_all_simple(&d, &tes).unwrap();
        assert_eq!(se.len(), 5);
        assert!(se.contains(&q()));
        assert!(se.iter().all(|f| f.interval == Interval::ongoing(0) && f.level == 1));
    }

    #[test]
    fn satisfiable_formula_has_repair_without_q() {
        let phi = Cnf3::new(3, vec![[lit(1, true), lit(2, false), lit(3, true)]]);
        let (d, tes) = encode_3sat_consistent(&phi);
        let se = infer_all_simple(&d, &tes).unwrap();
        let brute = brute_repairs(&se, &d, &tes).unwrap();
        assert!(brute.repairs.iter().any(|r| !r.contains(&q())));
        assert_eq!(repairs(&se, &d, &tes, 10_000).unwrap().repairs, brute.repairs);
    }

    #[test]
    fn q_alone_violates_the_assignment_constraint() {
        // {Q} leaves every variable without a value, so it is never
        // consistent; satisfiability instead shows up as Q belonging to some
        // repair.
        let all_signs: Vec<[Lit; 3]> = (0..8u8)
            .map(|m| [lit(1, m & 1 == 1), lit(2, m & 2 == 2), lit(3, m & 4 == 4)])
            .collect();
        for phi in [Cnf3::new(3, all_signs), Cnf3::new(3, vec![[lit(1, true), lit(2, true), lit(3, true)]])] {
            let (d, tes) = encode_3sat_consistent(&phi);
            let only_q: EventSet = [q()].into_iter().collect();
            assert!(!is_consistent(&only_q, &d, &tes).unwrap());
            let se = infer_all_simple(&d, &tes).unwrap();
            let reps = brute_repairs(&se, &d, &tes).unwrap().repairs;
            assert_eq!(reps.iter().any(|r| r.contains(&q())), phi.is_satisfiable());
        }
    }

    #[test]
    fn cautious_encoding_chains_clauses() {
        let phi = Cnf3::new(
            3,
            vec![
                [lit(1, true), lit(2, true), lit(3, true)],
                [lit(1, false), lit(2, true), lit(3, true)],
            ],
        );
        let (d, _) = encode_3sat_cautious(&phi);
        let at = |p: &str, a: &[&str]| Fact::Atemporal {
            pred: Name::new(p),
            args: a.iter().map(|s| Value::sym(s)).collect(),
        };
        assert!(d.contains(&at("Next", &["c1", "c2"])));
        assert!(d.contains(&at("First", &["c1"])));
        assert!(d.contains(&at("Last", &["c2"])));
    }

    #[test]
    fn unsatisfiable_cautious_core_is_q() {
        let mut clauses = Vec::new();
        for mask in 0..8u8 {
            clauses.push([
                lit(1, mask & 1 == 1),
                lit(2, mask & 2 == 2),
                lit(3, mask & 4 == 4),
            ]);
        }
        let phi = Cnf3::new(3, clauses);
        assert!(!phi.is_satisfiable());
        let (d, tes) = encode_3sat_cautious(&phi);
        let core = brute_timelines(&d, &tes, Mode::Cautious).unwrap();
        assert_eq!(core, vec![[q()].into_iter().collect::<EventSet>()]);
    }

    #[test]
    fn dimacs_reader() {
        let phi = Cnf3::parse_dimacs("c demo\np cnf 3 2\n1 -2 3 0\n-1 2\n3 0\n").unwrap();
        assert_eq!(phi.variables, ["v1", "v2", "v3"]);
        assert_eq!(phi.clauses[0], [lit(1, true), lit(2, false), lit(3, true)]);
        assert_eq!(phi.clauses[1], [lit(1, false), lit(2, true), lit(3, true)]);
        assert_eq!(Cnf3::parse_dimacs("1 2 3 0"), Err(DimacsError::MissingHeader));
        assert!(matches!(
            Cnf3::parse_dimacs("p cnf 3 1\n1 2 0"),
            Err(DimacsError::ClauseWidth { index: 0, width: 2 })
        ));
        assert!(matches!(
            Cnf3::parse_dimacs("p cnf 2 1\n1 2 3 0"),
            Err(DimacsError::VariableOutOfRange { var: 3, .. })
        ));
    }

    #[test]
    fn brute_force_rejects_large_inputs() {
        let s: EventSet = (0..19)
            .map(|i| EventFact::new("E", vec![], Interval::point(i * 10), 1))
            .collect();
        assert_eq!(
            brute_repairs(&s, &Dataset::new(), &Tes::default()),
            Err(Error::TooLarge(19))
        );
    }

    #[test]
    fn empty_set_has_the_empty_repair() {
        let r = brute_repairs(&EventSet::new(), &Dataset::new(), &Tes::default()).unwrap();
        assert_eq!(r.repairs, vec![EventSet::new()]);
    }
}
