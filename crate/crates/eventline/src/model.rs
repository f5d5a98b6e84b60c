//! Vocabulary shared by every stage of the engine: predicate names, ground
//! values, intervals, facts and the interval algebra.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

/// Timepoints are dimensionless natural-number ticks (epoch seconds when
/// ingested from calendar data).
pub type Timepoint = u64;

/// Confidence level. 1 is the most reliable level; larger is weaker.
pub type Level = u32;

/// Interned-ish predicate or symbol name. Cheap to clone, ordered by content.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Name(Arc<str>);

impl Name {
    pub fn new(s: &str) -> Self {
        Name(Arc::from(s))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl From<&str> for Name {
    fn from(s: &str) -> Self {
        Name::new(s)
    }
}

impl From<String> for Name {
    fn from(s: String) -> Self {
        Name(Arc::from(s))
    }
}

impl fmt::Debug for Name {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Display for Name {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Upper endpoint of an interval. `Ongoing` sorts after every finite point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum End {
    At(Timepoint),
    Ongoing,
}

impl End {
    pub fn finite(self) -> Option<Timepoint> {
        match self {
            End::At(t) => Some(t),
            End::Ongoing => None,
        }
    }

    pub fn is_ongoing(self) -> bool {
        matches!(self, End::Ongoing)
    }
}

impl fmt::Display for End {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            End::At(t) => write!(f, "{t}"),
            End::Ongoing => f.write_str("*"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("invalid interval [{start},{end}]: start exceeds end")]
pub struct InvalidInterval {
    pub start: Timepoint,
    pub end: Timepoint,
}

/// Closed interval `[start, end]`; `end` may be ongoing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Interval {
    start: Timepoint,
    end: End,
}

impl Interval {
    pub fn new(start: Timepoint, end: End) -> Result<Self, InvalidInterval> {
        match end {
            End::At(e) if start > e => Err(InvalidInterval { start, end: e }),
            _ => Ok(Interval { start, end }),
        }
    }

    /// Finite interval. Panics if `start > end`; for literals in tests and encoders.
    pub fn closed(start: Timepoint, end: Timepoint) -> Self {
        Interval::new(start, End::At(end)).expect("start <= end")
    }

    pub fn ongoing(start: Timepoint) -> Self {
        Interval {
            start,
            end: End::Ongoing,
        }
    }

    pub fn point(t: Timepoint) -> Self {
        Interval::closed(t, t)
    }

    pub fn start(&self) -> Timepoint {
        self.start
    }

    pub fn end(&self) -> End {
        self.end
    }

    /// `[max(starts), min(ends)]`, or `None` when the intervals are disjoint.
    pub fn intersect(&self, other: &Interval) -> Option<Interval> {
        let start = self.start.max(other.start);
        let end = self.end.min(other.end);
        Interval::new(start, end).ok()
    }

    /// Union of two intervals that overlap or are adjacent on the integer
    /// timeline (`[1,3]` and `[4,6]` give `[1,6]`). Disjoint pairs with a gap
    /// have no single-interval union and yield `None`.
    pub fn union(&self, other: &Interval) -> Option<Interval> {
        let (first, second) = if self.start <= other.start {
            (self, other)
        } else {
            (other, self)
        };
        let touches = match first.end {
            End::Ongoing => true,
            End::At(e) => second.start <= e.saturating_add(1),
        };
        touches.then(|| Interval {
            start: first.start,
            end: first.end.max(second.end),
        })
    }

    pub fn contains_point(&self, t: Timepoint) -> bool {
        self.start <= t && End::At(t) <= self.end
    }

    /// `self` includes `other` (not necessarily strictly).
    pub fn covers(&self, other: &Interval) -> bool {
        self.start <= other.start && other.end <= self.end
    }

    pub fn relation_to(&self, other: &Interval) -> AllenRelation {
        AllenRelation::between(self, other)
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{},{}]", self.start, self.end)
    }
}

/// The thirteen qualitative relations between two intervals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AllenRelation {
    Before,
    Meets,
    Overlaps,
    Starts,
    During,
    Finishes,
    Equals,
    After,
    MetBy,
    OverlappedBy,
    StartedBy,
    Contains,
    FinishedBy,
}

impl AllenRelation {
    pub const ALL: [AllenRelation; 13] = [
        AllenRelation::Before,
        AllenRelation::Meets,
        AllenRelation::Overlaps,
        AllenRelation::Starts,
        AllenRelation::During,
        AllenRelation::Finishes,
        AllenRelation::Equals,
        AllenRelation::After,
        AllenRelation::MetBy,
        AllenRelation::OverlappedBy,
        AllenRelation::StartedBy,
        AllenRelation::Contains,
        AllenRelation::FinishedBy,
    ];

    /// Classifies the pair. Ongoing ends behave as +infinity. Degenerate
    /// (single-point) intervals are resolved by the order of the checks below,
    /// which keeps `between(b, a) == between(a, b).inverse()`.
    pub fn between(a: &Interval, b: &Interval) -> AllenRelation {
        use AllenRelation::*;
        let (a_start, b_start) = (End::At(a.start), End::At(b.start));
        if a.start == b.start && a.end == b.end {
            return Equals;
        }
        if a.end < b_start {
            return Before;
        }
        if b.end < a_start {
            return After;
        }
        if a.end == b_start {
            return Meets;
        }
        if b.end == a_start {
            return MetBy;
        }
        if a.start == b.start {
            return if a.end < b.end { Starts } else { StartedBy };
        }
        if a.end == b.end {
            return if a.start > b.start { Finishes } else { FinishedBy };
        }
        match (a.start < b.start, a.end < b.end) {
            (true, true) => Overlaps,
            (true, false) => Contains,
            (false, true) => During,
            (false, false) => OverlappedBy,
        }
    }

    pub fn inverse(self) -> AllenRelation {
        use AllenRelation::*;
        match self {
            Before => After,
            Meets => MetBy,
            Overlaps => OverlappedBy,
            Starts => StartedBy,
            During => Contains,
            Finishes => FinishedBy,
            Equals => Equals,
            After => Before,
            MetBy => Meets,
            OverlappedBy => Overlaps,
            StartedBy => Starts,
            Contains => During,
            FinishedBy => Finishes,
        }
    }

    pub fn name(self) -> &'static str {
        use AllenRelation::*;
        match self {
            Before => "before",
            Meets => "meets",
            Overlaps => "overlaps",
            Starts => "starts",
            During => "during",
            Finishes => "finishes",
            Equals => "equals",
            After => "after",
            MetBy => "met_by",
            OverlappedBy => "overlapped_by",
            StartedBy => "started_by",
            Contains => "contains",
            FinishedBy => "finished_by",
        }
    }

    pub fn from_name(name: &str) -> Option<AllenRelation> {
        AllenRelation::ALL.into_iter().find(|r| r.name() == name)
    }
}

impl fmt::Display for AllenRelation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A ground value: data constant, natural number, the ongoing marker, or an
/// interval.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Value {
    Sym(Name),
    Nat(u64),
    Star,
    Interval(Interval),
}

impl Value {
    pub fn sym(s: &str) -> Value {
        Value::Sym(Name::new(s))
    }

    /// Numeric view with `*` as +infinity; `None` for non-numeric values.
    pub fn as_numeric(&self) -> Option<End> {
        match self {
            Value::Nat(n) => Some(End::At(*n)),
            Value::Star => Some(End::Ongoing),
            _ => None,
        }
    }

    pub fn from_end(end: End) -> Value {
        match end {
            End::At(t) => Value::Nat(t),
            End::Ongoing => Value::Star,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Sym(s) => {
                let plain = s
                    .as_str()
                    .chars()
                    .next()
                    .is_some_and(|c| c.is_ascii_lowercase())
                    && s.as_str()
                        .chars()
                        .all(|c| c.is_ascii_alphanumeric() || c == '_');
                if plain {
                    write!(f, "{s}")
                } else {
                    write!(f, "{:?}", s.as_str())
                }
            }
            Value::Nat(n) => write!(f, "{n}"),
            Value::Star => f.write_str("*"),
            Value::Interval(i) => write!(f, "{i}"),
        }
    }
}

/// Predicate categories. Names are unique across all of them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PredKind {
    Atemporal,
    Observation,
    PersistentSimple,
    NonPersistentSimple,
    Meta,
}

impl PredKind {
    pub fn is_simple_event(self) -> bool {
        matches!(
            self,
            PredKind::PersistentSimple | PredKind::NonPersistentSimple
        )
    }

    pub fn is_event(self) -> bool {
        self.is_simple_event() || self == PredKind::Meta
    }

    pub fn keyword(self) -> &'static str {
        match self {
            PredKind::Atemporal => "atemporal",
            PredKind::Observation => "observation",
            PredKind::PersistentSimple => "persistent",
            PredKind::NonPersistentSimple => "nonpersistent",
            PredKind::Meta => "meta",
        }
    }
}

/// `arity` counts the atemporal arguments only.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PredicateDecl {
    pub name: Name,
    pub arity: usize,
    pub kind: PredKind,
}

/// Ground atoms. Datasets only ever hold the first two variants.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Fact {
    Atemporal {
        pred: Name,
        args: Vec<Value>,
    },
    Observation {
        pred: Name,
        args: Vec<Value>,
        time: Timepoint,
    },
    Event {
        pred: Name,
        args: Vec<Value>,
        interval: Interval,
    },
}

impl Fact {
    pub fn pred(&self) -> &Name {
        match self {
            Fact::Atemporal { pred, .. }
            | Fact::Observation { pred, .. }
            | Fact::Event { pred, .. } => pred,
        }
    }

    pub fn args(&self) -> &[Value] {
        match self {
            Fact::Atemporal { args, .. }
            | Fact::Observation { args, .. }
            | Fact::Event { args, .. } => args,
        }
    }

    /// Flattened tuple as stored in relations: args, then the trailing
    /// timepoint or interval.
    pub fn tuple(&self) -> Vec<Value> {
        let mut t = self.args().to_vec();
        match self {
            Fact::Atemporal { .. } => {}
            Fact::Observation { time, .. } => t.push(Value::Nat(*time)),
            Fact::Event { interval, .. } => t.push(Value::Interval(*interval)),
        }
        t
    }
}

impl fmt::Display for Fact {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.pred())?;
        let mut first = true;
        for a in self.args() {
            if !first {
                f.write_str(", ")?;
            }
            first = false;
            write!(f, "{a}")?;
        }
        let tail = match self {
            Fact::Atemporal { .. } => None,
            Fact::Observation { time, .. } => Some(time.to_string()),
            Fact::Event { interval, .. } => Some(interval.to_string()),
        };
        if let Some(tail) = tail {
            if !first {
                f.write_str(", ")?;
            }
            f.write_str(&tail)?;
        }
        f.write_str(")")
    }
}

/// Event predicate applied to ground data arguments, e.g. `ABTh(p1, amox)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EventKey {
    pub pred: Name,
    pub args: Vec<Value>,
}

impl fmt::Display for EventKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.pred)?;
        if !self.args.is_empty() {
            f.write_str("(")?;
            for (i, a) in self.args.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                write!(f, "{a}")?;
            }
            f.write_str(")")?;
        }
        Ok(())
    }
}

/// Confidence-annotated event fact `R(d, [t1,t2], level)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EventFact {
    pub pred: Name,
    pub args: Vec<Value>,
    pub interval: Interval,
    pub level: Level,
}

impl EventFact {
    pub fn new(pred: &str, args: Vec<Value>, interval: Interval, level: Level) -> Self {
        assert!(level >= 1, "confidence levels start at 1");
        EventFact {
            pred: Name::new(pred),
            args,
            interval,
            level,
        }
    }

    pub fn key(&self) -> EventKey {
        EventKey {
            pred: self.pred.clone(),
            args: self.args.clone(),
        }
    }

    pub fn same_key(&self, other: &EventFact) -> bool {
        self.pred == other.pred && self.args == other.args
    }

    /// Relation tuple: args, interval, level.
    pub fn tuple(&self) -> Vec<Value> {
        let mut t = self.args.clone();
        t.push(Value::Interval(self.interval));
        t.push(Value::Nat(u64::from(self.level)));
        t
    }

    pub fn unannotated(&self) -> Fact {
        Fact::Event {
            pred: self.pred.clone(),
            args: self.args.clone(),
            interval: self.interval,
        }
    }
}

impl fmt::Display for EventFact {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.pred)?;
        for a in &self.args {
            write!(f, "{a}, ")?;
        }
        write!(f, "{}, {})", self.interval, self.level)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("datasets hold only atemporal and observation facts, got event fact {0}")]
pub struct EventFactInDataset(pub String);

/// Finite set of atemporal and observation facts, indexed by predicate.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Dataset {
    facts: BTreeSet<Fact>,
    by_pred: BTreeMap<Name, Vec<Fact>>,
}

impl Dataset {
    pub fn new() -> Self {
        Self::default()
    }

    /// Returns `Ok(false)` when the fact was already present.
    pub fn insert(&mut self, fact: Fact) -> Result<bool, EventFactInDataset> {
        if let Fact::Event { .. } = fact {
            return Err(EventFactInDataset(fact.to_string()));
        }
        if !self.facts.insert(fact.clone()) {
            return Ok(false);
        }
        self.by_pred
            .entry(fact.pred().clone())
            .or_default()
            .push(fact);
        Ok(true)
    }

    pub fn facts(&self) -> impl Iterator<Item = &Fact> {
        self.facts.iter()
    }

    pub fn by_pred(&self, pred: &str) -> &[Fact] {
        self.by_pred
            .get(&Name::new(pred))
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    pub fn predicates(&self) -> impl Iterator<Item = &Name> {
        self.by_pred.keys()
    }

    pub fn len(&self) -> usize {
        self.facts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.facts.is_empty()
    }

    pub fn contains(&self, fact: &Fact) -> bool {
        self.facts.contains(fact)
    }
}

impl FromIterator<Fact> for Dataset {
    /// Panics on event facts; use [`Dataset::insert`] for fallible building.
    fn from_iter<I: IntoIterator<Item = Fact>>(iter: I) -> Self {
        let mut d = Dataset::new();
        for f in iter {
            d.insert(f).expect("dataset fact");
        }
        d
    }
}

/// Numeric comparison with `*` as +infinity; `None` if either side is not numeric.
pub fn compare_numeric(a: &Value, b: &Value) -> Option<Ordering> {
    Some(a.as_numeric()?.cmp(&b.as_numeric()?))
}

/// A set of confidence-annotated event facts: an SE or ME set, a repair, or
/// the simple part of a timeline.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EventSet(BTreeSet<EventFact>);

impl EventSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, f: EventFact) -> bool {
        self.0.insert(f)
    }

    pub fn remove(&mut self, f: &EventFact) -> bool {
        self.0.remove(f)
    }

    pub fn contains(&self, f: &EventFact) -> bool {
        self.0.contains(f)
    }

    pub fn iter(&self) -> impl Iterator<Item = &EventFact> {
        self.0.iter()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_subset(&self, other: &EventSet) -> bool {
        self.0.is_subset(&other.0)
    }

    pub fn union(&self, other: &EventSet) -> EventSet {
        EventSet(self.0.union(&other.0).cloned().collect())
    }

    pub fn intersection(&self, other: &EventSet) -> EventSet {
        EventSet(self.0.intersection(&other.0).cloned().collect())
    }

    pub fn difference(&self, other: &EventSet) -> EventSet {
        EventSet(self.0.difference(&other.0).cloned().collect())
    }

    /// Facts with confidence exactly `level` (S_ℓ).
    pub fn at_level(&self, level: Level) -> EventSet {
        self.0.iter().filter(|f| f.level == level).cloned().collect()
    }

    /// Facts with confidence at most `level`.
    pub fn up_to_level(&self, level: Level) -> EventSet {
        self.0.iter().filter(|f| f.level <= level).cloned().collect()
    }

    pub fn levels(&self) -> BTreeSet<Level> {
        self.0.iter().map(|f| f.level).collect()
    }

    pub fn by_key(&self) -> BTreeMap<EventKey, Vec<&EventFact>> {
        let mut m: BTreeMap<EventKey, Vec<&EventFact>> = BTreeMap::new();
        for f in &self.0 {
            m.entry(f.key()).or_default().push(f);
        }
        m
    }

    /// S⁻: the facts with confidence levels dropped.
    pub fn unannotated(&self) -> BTreeSet<Fact> {
        self.0.iter().map(EventFact::unannotated).collect()
    }

    pub fn into_vec(self) -> Vec<EventFact> {
        self.0.into_iter().collect()
    }
}

impl FromIterator<EventFact> for EventSet {
    fn from_iter<I: IntoIterator<Item = EventFact>>(iter: I) -> Self {
        EventSet(iter.into_iter().collect())
    }
}

impl Extend<EventFact> for EventSet {
    fn extend<I: IntoIterator<Item = EventFact>>(&mut self, iter: I) {
        self.0.extend(iter)
    }
}

impl IntoIterator for EventSet {
    type Item = EventFact;
    type IntoIter = std::collections::btree_set::IntoIter<EventFact>;

    fn into_iter(self) -> Self::IntoIter {
        self.0.into_iter()
    }
}

impl<'a> IntoIterator for &'a EventSet {
    type Item = &'a EventFact;
    type IntoIter = std::collections::btree_set::Iter<'a, EventFact>;

    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn iv(s: u64, e: u64) -> Interval {
        Interval::closed(s, e)
    }

    #[test]
    fn interval_construction() {
        assert_eq!(Interval::new(2, End::At(4)).unwrap().to_string(), "[2,4]");
        assert_eq!(Interval::new(9, End::Ongoing).unwrap().to_string(), "[9,*]");
        assert_eq!(
            Interval::new(5, End::At(3)),
            Err(InvalidInterval { start: 5, end: 3 })
        );
    }

    #[test]
    fn intersection_examples() {
        assert_eq!(iv(1, 7).intersect(&Interval::ongoing(5)), Some(iv(5, 7)));
        assert_eq!(iv(1, 7).intersect(&iv(1, 7)), Some(iv(1, 7)));
        assert_eq!(iv(1, 4).intersect(&iv(6, 9)), None);
        assert_eq!(
            Interval::ongoing(3).intersect(&Interval::ongoing(8)),
            Some(Interval::ongoing(8))
        );
    }

    #[test]
    fn union_only_for_touching_intervals() {
        assert_eq!(iv(1, 3).union(&iv(2, 6)), Some(iv(1, 6)));
        assert_eq!(iv(4, 6).union(&iv(1, 3)), Some(iv(1, 6)));
        assert_eq!(iv(1, 3).union(&iv(5, 6)), None);
        assert_eq!(
            iv(1, 3).union(&Interval::ongoing(2)),
            Some(Interval::ongoing(1))
        );
    }

    #[test]
    fn allen_examples() {
        use AllenRelation::*;
        assert_eq!(iv(1, 2).relation_to(&iv(3, 4)), Before);
        assert_eq!(iv(1, 7).relation_to(&iv(2, 5)), Contains);
        assert_eq!(
            Interval::ongoing(9).relation_to(&Interval::ongoing(9)),
            Equals
        );
        assert_eq!(iv(1, 3).relation_to(&iv(3, 6)), Meets);
        assert_eq!(iv(1, 3).relation_to(&iv(1, 6)), Starts);
        assert_eq!(iv(4, 6).relation_to(&iv(1, 6)), Finishes);
        assert_eq!(iv(2, 5).relation_to(&iv(4, 9)), Overlaps);
        assert_eq!(Interval::ongoing(2).relation_to(&Interval::ongoing(5)), FinishedBy);
        assert_eq!(iv(3, 4).relation_to(&Interval::ongoing(1)), During);
    }

    #[test]
    fn ongoing_is_greater_than_every_finite_point() {
        assert!(End::At(u64::MAX) < End::Ongoing);
        assert_eq!(End::Ongoing, End::Ongoing);
    }

    fn arb_interval() -> impl Strategy<Value = Interval> {
        (0u64..20, prop::option::of(0u64..20)).prop_map(|(a, b)| match b {
            None => Interval::ongoing(a),
            Some(b) => Interval::closed(a.min(b), a.max(b)),
        })
    }

    proptest! {
        #[test]
        fn intersect_commutative(a in arb_interval(), b in arb_interval()) {
            prop_assert_eq!(a.intersect(&b), b.intersect(&a));
        }

        #[test]
        fn intersect_idempotent(a in arb_interval()) {
            prop_assert_eq!(a.intersect(&a), Some(a));
        }

        #[test]
        fn intersect_associative(a in arb_interval(), b in arb_interval(), c in arb_interval()) {
            let left = a.intersect(&b).and_then(|ab| ab.intersect(&c));
            let right = b.intersect(&c).and_then(|bc| a.intersect(&bc));
            prop_assert_eq!(left, right);
        }

        #[test]
        fn allen_inverse_and_exclusive(a in arb_interval(), b in arb_interval()) {
            let r = AllenRelation::between(&a, &b);
            prop_assert_eq!(AllenRelation::between(&b, &a), r.inverse());
            prop_assert_eq!(r.inverse().inverse(), r);
        }

        #[test]
        fn finite_points_precede_ongoing(t in any::<u64>()) {
            prop_assert!(End::At(t) < End::Ongoing);
        }
    }
}
