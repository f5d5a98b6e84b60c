//! Consistency checking, repairs, preferred repairs, the cautious core and
//! the four timeline semantics, plus timeline recognition.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use fixedbitset::FixedBitSet;
use itertools::Itertools;

use crate::error::Error;
use crate::lang::Tes;
use crate::meta::{store_to_events, MetaProgram};
use crate::model::{Dataset, End, EventFact, EventSet, Interval, Level};
use crate::query::{CompiledRule, EvalError, FactStore, View};
use crate::simple::infer_all_simple;

/// Default bound on candidate subsets examined by the enumerations.
pub const DEFAULT_CAP: usize = 10_000;

/// Whether two facts of the same ground event violate a temporal constraint:
/// equal starts with different ends, equal ends with different starts, or
/// one interval starting strictly inside the other.
pub fn temporal_conflict(a: &EventFact, b: &EventFact) -> bool {
    if !a.same_key(b) || a.interval == b.interval {
        return false;
    }
    let (i, j) = (a.interval, b.interval);
    let inside = |x: Interval, y: Interval| x.start() < y.start() && End::At(y.start()) < x.end();
    i.start() == j.start() || i.end() == j.end() || inside(i, j) || inside(j, i)
}

/// Compiled meta rules and domain constraints over a fixed dataset.
pub(crate) struct Checker {
    base: FactStore,
    program: MetaProgram,
    constraints: Vec<CompiledRule>,
}

impl Checker {
    pub(crate) fn new(d: &Dataset, tes: &Tes) -> Self {
        Checker {
            base: FactStore::from_dataset(d),
            program: MetaProgram::new(tes),
            constraints: tes.constraints().iter().map(CompiledRule::new).collect(),
        }
    }

    pub(crate) fn meta(&self, s: &EventSet) -> Result<EventSet, EvalError> {
        if self.program.is_empty() {
            return Ok(EventSet::new());
        }
        let simple = FactStore::from_events(s);
        Ok(store_to_events(&self.program.run(&self.base, &simple)?))
    }

    pub(crate) fn consistent(&self, facts: &[&EventFact]) -> Result<bool, EvalError> {
        let mut sorted = facts.to_vec();
        sorted.sort();
        for group in sorted.chunk_by(|a, b| a.same_key(b)) {
            for (i, a) in group.iter().enumerate() {
                if group[i + 1..].iter().any(|b| temporal_conflict(a, b)) {
                    return Ok(false);
                }
            }
        }
        if self.constraints.is_empty() {
            return Ok(true);
        }
        let simple = FactStore::from_events(facts.iter().copied());
        let derived = if self.program.is_empty() {
            FactStore::default()
        } else {
            self.program.run(&self.base, &simple)?
        };
        let view = View::new(&[&self.base, &simple, &derived]);
        let mut violated = false;
        for c in &self.constraints {
            c.body.solve(view, None, &mut |_| {
                violated = true;
                Ok(())
            })?;
            if violated {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

/// Σ-consistency of `s` over `d`.
pub fn is_consistent(s: &EventSet, d: &Dataset, tes: &Tes) -> Result<bool, Error> {
    let facts: Vec<&EventFact> = s.iter().collect();
    Ok(Checker::new(d, tes).consistent(&facts)?)
}

/// Repairs found by an enumeration; `exhaustive` is false when the cap cut
/// the search short.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RepairSet {
    pub repairs: Vec<EventSet>,
    pub exhaustive: bool,
    pub cap: usize,
}

impl RepairSet {
    pub(crate) fn new(mut repairs: Vec<EventSet>, exhaustive: bool, cap: usize) -> Self {
        repairs.sort();
        repairs.dedup();
        RepairSet {
            repairs,
            exhaustive,
            cap,
        }
    }

    pub fn require_exhaustive(self) -> Result<Self, Error> {
        if self.exhaustive {
            Ok(self)
        } else {
            Err(Error::CapExceeded { cap: self.cap })
        }
    }
}

enum Halt {
    Cap,
    Eval(EvalError),
}

impl From<EvalError> for Halt {
    fn from(e: EvalError) -> Self {
        Halt::Eval(e)
    }
}

/// Subsets of a fixed universe, with memoized consistency checks counted
/// against the cap.
struct Search<'a> {
    checker: &'a Checker,
    universe: Vec<&'a EventFact>,
    memo: HashMap<FixedBitSet, bool>,
    cap: usize,
}

impl<'a> Search<'a> {
    fn new(checker: &'a Checker, universe: &'a EventSet, cap: usize) -> Self {
        Search {
            checker,
            universe: universe.iter().collect(),
            memo: HashMap::new(),
            cap,
        }
    }

    fn len(&self) -> usize {
        self.universe.len()
    }

    fn empty(&self) -> FixedBitSet {
        FixedBitSet::with_capacity(self.len())
    }

    fn full(&self) -> FixedBitSet {
        let mut b = self.empty();
        b.insert_range(..);
        b
    }

    fn check(&mut self, set: &FixedBitSet) -> Result<bool, Halt> {
        if let Some(&ok) = self.memo.get(set) {
            return Ok(ok);
        }
        if self.memo.len() >= self.cap {
            return Err(Halt::Cap);
        }
        let facts: Vec<&EventFact> = set.ones().map(|i| self.universe[i]).collect();
        let ok = self.checker.consistent(&facts)?;
        self.memo.insert(set.clone(), ok);
        Ok(ok)
    }

    fn to_set(&self, bits: &FixedBitSet) -> EventSet {
        bits.ones().map(|i| self.universe[i].clone()).collect()
    }

    fn with(&self, bits: &FixedBitSet, i: usize) -> FixedBitSet {
        let mut b = bits.clone();
        b.insert(i);
        b
    }

    /// Include/exclude backtracking, valid when consistency is monotone:
    /// a consistent set is maximal iff no single excluded fact can be added.
    fn grow(
        &mut self,
        i: usize,
        current: FixedBitSet,
        excluded: &mut Vec<usize>,
        out: &mut Vec<FixedBitSet>,
    ) -> Result<(), Halt> {
        if i == self.len() {
            for &j in excluded.iter() {
                if self.check(&self.with(&current, j))? {
                    return Ok(());
                }
            }
            out.push(current);
            return Ok(());
        }
        let with = self.with(&current, i);
        if !self.check(&with)? {
            return self.grow(i + 1, current, excluded, out);
        }
        let mut rest = with.clone();
        rest.insert_range(i + 1..);
        let blockable = !self.check(&rest)?;
        self.grow(i + 1, with, excluded, out)?;
        if blockable {
            excluded.push(i);
            let r = self.grow(i + 1, current, excluded, out);
            excluded.pop();
            r?;
        }
        Ok(())
    }

    /// Largest-first subset search: a consistent set not inside a repair
    /// found so far is itself a repair.
    fn largest_first(&mut self, out: &mut Vec<FixedBitSet>) -> Result<(), Halt> {
        let n = self.len();
        for size in (0..=n).rev() {
            for combo in (0..n).combinations(size) {
                let mut bits = self.empty();
                combo.iter().for_each(|&i| bits.insert(i));
                if out.iter().any(|r| bits.is_subset(r)) {
                    continue;
                }
                if self.check(&bits)? {
                    out.push(bits);
                }
            }
        }
        Ok(())
    }
}

fn finish(
    search: &Search<'_>,
    result: Result<(), Halt>,
    found: Vec<FixedBitSet>,
) -> Result<RepairSet, Error> {
    let exhaustive = match result {
        Ok(()) => true,
        Err(Halt::Cap) => false,
        Err(Halt::Eval(e)) => return Err(e.into()),
    };
    let repairs = found.iter().map(|b| search.to_set(b)).collect();
    Ok(RepairSet::new(repairs, exhaustive, search.cap))
}

/// All inclusion-maximal consistent subsets of `s`.
pub fn repairs(s: &EventSet, d: &Dataset, tes: &Tes, cap: usize) -> Result<RepairSet, Error> {
    if tes.constraints().is_empty() {
        return Ok(pairwise_repairs(s, cap));
    }
    let checker = Checker::new(d, tes);
    let mut search = Search::new(&checker, s, cap);
    let mut found = Vec::new();
    let full = search.full();
    let result = match search.check(&full) {
        Ok(true) => {
            found.push(full);
            Ok(())
        }
        Ok(false) if tes.is_monotone() => {
            let empty = search.empty();
            search.grow(0, empty, &mut Vec::new(), &mut found)
        }
        Ok(false) => search.largest_first(&mut found),
        Err(h) => Err(h),
    };
    finish(&search, result, found)
}

/// Conflict graph of the temporal constraints: one adjacency set per fact.
fn conflict_graph(facts: &[&EventFact]) -> Vec<FixedBitSet> {
    let n = facts.len();
    let mut adj = vec![FixedBitSet::with_capacity(n); n];
    let mut by_key: BTreeMap<_, Vec<usize>> = BTreeMap::new();
    for (i, f) in facts.iter().enumerate() {
        by_key.entry((&f.pred, &f.args)).or_default().push(i);
    }
    for group in by_key.values() {
        for (a, &i) in group.iter().enumerate() {
            for &j in &group[a + 1..] {
                if temporal_conflict(facts[i], facts[j]) {
                    adj[i].insert(j);
                    adj[j].insert(i);
                }
            }
        }
    }
    adj
}

fn components(adj: &[FixedBitSet]) -> Vec<Vec<usize>> {
    let mut seen = FixedBitSet::with_capacity(adj.len());
    let mut out = Vec::new();
    for start in 0..adj.len() {
        if seen.contains(start) {
            continue;
        }
        seen.insert(start);
        let mut comp = vec![start];
        let mut k = 0;
        while k < comp.len() {
            for j in adj[comp[k]].ones() {
                if !seen.contains(j) {
                    seen.insert(j);
                    comp.push(j);
                }
            }
            k += 1;
        }
        comp.sort_unstable();
        out.push(comp);
    }
    out
}

/// Maximal independent sets by Bron-Kerbosch with pivoting on the
/// complement graph. Returns false when the budget runs out.
fn independent_sets(
    adj: &[FixedBitSet],
    r: &mut Vec<usize>,
    mut p: FixedBitSet,
    mut x: FixedBitSet,
    budget: &mut usize,
    out: &mut Vec<Vec<usize>>,
) -> bool {
    if *budget == 0 {
        return false;
    }
    *budget -= 1;
    if p.is_clear() && x.is_clear() {
        out.push(r.clone());
        return true;
    }
    let closed = |v: usize| {
        let mut b = adj[v].clone();
        b.insert(v);
        b
    };
    let pivot = p
        .ones()
        .chain(x.ones())
        .min_by_key(|&u| p.intersection(&closed(u)).count())
        .expect("p or x is non-empty");
    let branch: Vec<usize> = p.intersection(&closed(pivot)).collect();
    for v in branch {
        let mut non = closed(v);
        non.toggle_range(..);
        r.push(v);
        let (mut p2, mut x2) = (p.clone(), x.clone());
        p2.intersect_with(&non);
        x2.intersect_with(&non);
        let ok = independent_sets(adj, r, p2, x2, budget, out);
        r.pop();
        if !ok {
            return false;
        }
        p.set(v, false);
        x.insert(v);
    }
    true
}

/// Without domain constraints consistency is pairwise, so repairs are the
/// maximal independent sets of the conflict graph, combined across
/// connected components.
fn pairwise_repairs(s: &EventSet, cap: usize) -> RepairSet {
    let facts: Vec<&EventFact> = s.iter().collect();
    let n = facts.len();
    let adj = conflict_graph(&facts);
    let mut budget = cap;
    let mut fixed = Vec::new();
    let mut choices: Vec<Vec<Vec<usize>>> = Vec::new();
    for comp in components(&adj) {
        if comp.len() == 1 {
            fixed.extend(comp);
            continue;
        }
        let mut p = FixedBitSet::with_capacity(n);
        comp.iter().for_each(|&i| p.insert(i));
        let mut sets = Vec::new();
        let ok = independent_sets(
            &adj,
            &mut Vec::new(),
            p,
            FixedBitSet::with_capacity(n),
            &mut budget,
            &mut sets,
        );
        if !ok {
            return RepairSet::new(Vec::new(), false, cap);
        }
        choices.push(sets);
    }
    let mut repairs = Vec::new();
    let mut exhaustive = true;
    let combos = choices.iter().map(|c| c.iter()).multi_cartesian_product();
    let combos: Box<dyn Iterator<Item = Vec<&Vec<usize>>>> = if choices.is_empty() {
        Box::new(std::iter::once(Vec::new()))
    } else {
        Box::new(combos)
    };
    for combo in combos {
        if repairs.len() >= cap {
            exhaustive = false;
            break;
        }
        let members = fixed.iter().chain(combo.into_iter().flatten());
        repairs.push(members.map(|&i| facts[i].clone()).collect());
    }
    RepairSet::new(repairs, exhaustive, cap)
}

fn by_level(s: &EventSet) -> BTreeMap<Level, BTreeSet<&EventFact>> {
    let mut out: BTreeMap<Level, BTreeSet<&EventFact>> = BTreeMap::new();
    for f in s.iter() {
        out.entry(f.level).or_default().insert(f);
    }
    out
}

/// `u` improves on `r`: equal below some level k and a strict superset at k.
pub(crate) fn improves(u: &EventSet, r: &EventSet) -> bool {
    let (lu, lr) = (by_level(u), by_level(r));
    let levels: BTreeSet<Level> = lu.keys().chain(lr.keys()).copied().collect();
    let empty = BTreeSet::new();
    for k in levels {
        let (uk, rk) = (lu.get(&k).unwrap_or(&empty), lr.get(&k).unwrap_or(&empty));
        if uk != rk {
            return rk.is_subset(uk);
        }
    }
    false
}

/// Repairs not improved on by any other repair. A consistent set improving
/// on a repair extends to a repair that improves on it too, so comparing
/// repairs with each other suffices.
pub fn preferred_repairs(
    s: &EventSet,
    d: &Dataset,
    tes: &Tes,
    cap: usize,
) -> Result<RepairSet, Error> {
    let all = repairs(s, d, tes, cap)?;
    let preferred = all
        .repairs
        .iter()
        .filter(|r| !all.repairs.iter().any(|u| improves(u, r)))
        .cloned()
        .collect();
    Ok(RepairSet::new(preferred, all.exhaustive, cap))
}

/// Whether the greedy level-by-level construction applies: no domain
/// constraints and every termination rule at confidence 1.
pub fn greedy_guard(tes: &Tes) -> Result<(), Error> {
    if !tes.constraints().is_empty() {
        return Err(Error::GuardViolated("DomainConstraintsPresent".into()));
    }
    if !tes.terminations_all_level_one() {
        return Err(Error::GuardViolated("TerminationLevelAboveOne".into()));
    }
    Ok(())
}

/// The unique preferred repair under [`greedy_guard`]: keep the best level
/// whole, then admit facts level by level unless they conflict with a fact
/// already kept.
pub fn greedy_preferred(s: &EventSet, tes: &Tes) -> Result<EventSet, Error> {
    greedy_guard(tes)?;
    let mut kept = EventSet::new();
    let mut levels = by_level(s).into_iter();
    if let Some((_, first)) = levels.next() {
        kept.extend(first.into_iter().cloned());
    }
    for (_, facts) in levels {
        for f in facts {
            if !kept.iter().any(|k| temporal_conflict(k, f)) {
                kept.insert(f.clone());
            }
        }
    }
    Ok(kept)
}

/// Intersection of all repairs; empty when there are none.
pub fn cautious_core(s: &EventSet, d: &Dataset, tes: &Tes, cap: usize) -> Result<EventSet, Error> {
    if tes.constraints().is_empty() {
        let facts: Vec<&EventFact> = s.iter().collect();
        let adj = conflict_graph(&facts);
        return Ok(facts
            .iter()
            .zip(&adj)
            .filter(|(_, a)| a.is_clear())
            .map(|(f, _)| (*f).clone())
            .collect());
    }
    let all = repairs(s, d, tes, cap)?.require_exhaustive()?;
    let mut it = all.repairs.into_iter();
    let first = it.next().unwrap_or_default();
    Ok(it.fold(first, |acc, r| acc.intersection(&r)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Mode {
    Naive,
    Consistent,
    Preferred,
    Cautious,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Naive => "naive",
            Mode::Consistent => "consistent",
            Mode::Preferred => "preferred",
            Mode::Cautious => "cautious",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Simple events chosen by a semantics plus the meta events they induce.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Timeline {
    pub mode: Mode,
    pub simple: EventSet,
    pub meta: EventSet,
}

impl Timeline {
    pub fn facts(&self) -> EventSet {
        self.simple.union(&self.meta)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Timelines {
    pub timelines: Vec<Timeline>,
    pub exhaustive: bool,
}

/// The timelines of `d` under `mode`.
pub fn timeline(d: &Dataset, tes: &Tes, mode: Mode, cap: usize) -> Result<Timelines, Error> {
    let se = infer_all_simple(d, tes)?;
    let (simple_parts, exhaustive) = match mode {
        Mode::Naive => (vec![se], true),
        Mode::Consistent => {
            let r = repairs(&se, d, tes, cap)?;
            (r.repairs, r.exhaustive)
        }
        Mode::Preferred if greedy_guard(tes).is_ok() => (vec![greedy_preferred(&se, tes)?], true),
        Mode::Preferred => {
            let r = preferred_repairs(&se, d, tes, cap)?;
            (r.repairs, r.exhaustive)
        }
        Mode::Cautious => (vec![cautious_core(&se, d, tes, cap)?], true),
    };
    let checker = Checker::new(d, tes);
    let timelines = simple_parts
        .into_iter()
        .map(|simple| {
            let meta = checker.meta(&simple)?;
            Ok(Timeline { mode, simple, meta })
        })
        .collect::<Result<_, EvalError>>()?;
    Ok(Timelines {
        timelines,
        exhaustive,
    })
}

/// Whether `candidate` (simple and meta facts together) is a timeline of
/// the given kind.
pub fn recognize_timeline(
    candidate: &EventSet,
    d: &Dataset,
    tes: &Tes,
    kind: Mode,
    cap: usize,
) -> Result<bool, Error> {
    let se = infer_all_simple(d, tes)?;
    let checker = Checker::new(d, tes);
    let s_se = candidate.intersection(&se);
    if *candidate != s_se.union(&checker.meta(&s_se)?) {
        return Ok(false);
    }
    match kind {
        Mode::Naive => return Ok(s_se == se),
        Mode::Cautious => return Ok(s_se == cautious_core(&se, d, tes, cap)?),
        Mode::Consistent | Mode::Preferred => {}
    }
    if !checker.consistent(&facts(&s_se))? {
        return Ok(false);
    }
    let rest = se.difference(&s_se);
    if tes.is_monotone() {
        for sigma in rest.iter() {
            let mut ext = facts(&s_se);
            ext.push(sigma);
            if checker.consistent(&ext)? {
                return Ok(false);
            }
        }
        if kind == Mode::Preferred {
            // Monotonicity lets the witness keep only the levels up to σ's.
            for sigma in rest.iter() {
                let mut ext: Vec<&EventFact> =
                    s_se.iter().filter(|f| f.level <= sigma.level).collect();
                ext.push(sigma);
                if checker.consistent(&ext)? {
                    return Ok(false);
                }
            }
        }
        return Ok(true);
    }
    let mut search = Search::new(&checker, &se, cap);
    let member: Vec<bool> = search.universe.iter().map(|f| s_se.contains(f)).collect();
    let outcome = match kind {
        Mode::Consistent => superset_witness(&mut search, &member),
        _ => improving_witness(&mut search, &member),
    };
    match outcome {
        Ok(found) => Ok(!found),
        Err(Halt::Cap) => Err(Error::CapExceeded { cap }),
        Err(Halt::Eval(e)) => Err(e.into()),
    }
}

fn facts(s: &EventSet) -> Vec<&EventFact> {
    s.iter().collect()
}

/// Searches for a consistent strict superset of the members.
fn superset_witness(search: &mut Search<'_>, member: &[bool]) -> Result<bool, Halt> {
    let mut base = search.empty();
    (0..member.len()).filter(|&i| member[i]).for_each(|i| base.insert(i));
    let pool: Vec<usize> = (0..member.len()).filter(|&i| !member[i]).collect();
    for size in 1..=pool.len() {
        for extra in pool.iter().combinations(size) {
            let mut bits = base.clone();
            extra.into_iter().for_each(|&i| bits.insert(i));
            if search.check(&bits)? {
                return Ok(true);
            }
        }
    }
    Ok(false)
}

/// Searches for a consistent set that agrees with the members below some
/// level k and strictly extends them at k.
fn improving_witness(search: &mut Search<'_>, member: &[bool]) -> Result<bool, Halt> {
    let levels: BTreeSet<Level> = search.universe.iter().map(|f| f.level).collect();
    for k in levels {
        let lvl = |i: usize| search.universe[i].level;
        let mut base = search.empty();
        (0..member.len())
            .filter(|&i| member[i] && lvl(i) <= k)
            .for_each(|i| base.insert(i));
        let at_k: Vec<usize> = (0..member.len()).filter(|&i| !member[i] && lvl(i) == k).collect();
        let above: Vec<usize> = (0..member.len()).filter(|&i| lvl(i) > k).collect();
        for a in 1..=at_k.len() {
            for extra in at_k.iter().combinations(a) {
                for b in 0..=above.len() {
                    for more in above.iter().combinations(b) {
                        let mut bits = base.clone();
                        extra.iter().chain(&more).for_each(|&&i| bits.insert(i));
                        if search.check(&bits)? {
                            return Ok(true);
                        }
                    }
                }
            }
        }
    }
    Ok(false)
}
