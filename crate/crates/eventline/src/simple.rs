//! Maximal confidence-annotated intervals for simple events.

use std::collections::BTreeSet;

use rayon::prelude::*;

use crate::error::Error;
use crate::lang::Tes;
use crate::model::{Dataset, End, EventFact, EventSet, Interval, Level, Timepoint};
use crate::query::{check_validity, ground_simple_heads, level_timepoints, LevelTimepoints};

/// Interval candidate of the constructive procedure; `closed` marks the
/// termination-closed ones, which only grow leftwards.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CandidateInterval {
    pub interval: Interval,
    pub level: Level,
    pub closed_by_termination: bool,
}

fn first_at_or_after(set: &BTreeSet<Timepoint>, t: Timepoint) -> Option<Timepoint> {
    set.range(t..).next().copied()
}

fn any_in(set: &BTreeSet<Timepoint>, lo: Timepoint, hi_excl: Timepoint) -> bool {
    lo < hi_excl && set.range(lo..hi_excl).next().is_some()
}

/// Drops intervals strictly contained in another one of the set.
fn keep_maximal(cands: BTreeSet<Interval>) -> Vec<Interval> {
    let mut v: Vec<Interval> = cands.into_iter().collect();
    v.sort_by(|a, b| a.start().cmp(&b.start()).then(b.end().cmp(&a.end())));
    let mut out = Vec::new();
    let mut max_end: Option<End> = None;
    for iv in v {
        if max_end.is_none_or(|m| m < iv.end()) {
            out.push(iv);
        }
        max_end = max_end.max(Some(iv.end()));
    }
    out
}

/// Level-`level` intervals for a nonpersistent event before duplicate removal.
fn expand_level(exists: &BTreeSet<Timepoint>, ends: &BTreeSet<Timepoint>, w: u64) -> Vec<Interval> {
    let mut open: BTreeSet<(Timepoint, Timepoint)> = BTreeSet::new();
    let mut closed: BTreeSet<(Timepoint, Timepoint)> = BTreeSet::new();
    let mut work: Vec<(Timepoint, Timepoint, bool)> = Vec::new();
    for &t in exists {
        let c = ends.contains(&t);
        work.push((t, t, c));
    }
    while let Some((t1, t2, c)) = work.pop() {
        let set = if c { &mut closed } else { &mut open };
        if !set.insert((t1, t2)) {
            continue;
        }
        // Leftwards: the farthest existence point within the window that is
        // not separated from t1 by a termination.
        let left = exists
            .range(t1.saturating_sub(w)..t1)
            .find(|&&s| !any_in(ends, s, t1));
        if let Some(&s) = left {
            work.push((s, t2, c));
        }
        if c {
            continue;
        }
        // Rightwards: the farthest existence point within the window.
        let right = exists
            .range(t2 + 1..=t2.saturating_add(w))
            .rev()
            .find(|&&s| !any_in(ends, t2, s));
        if let Some(&s) = right {
            work.push((t1, s, false));
        }
        if let Some(te) = first_at_or_after(ends, t2) {
            if te - t2 <= w {
                work.push((t1, te, true));
            }
        }
    }
    let all: BTreeSet<Interval> = open
        .into_iter()
        .chain(closed)
        .map(|(a, b)| Interval::closed(a, b))
        .collect();
    let mut out = keep_maximal(all);
    // A lone point that both starts and ends the event only counts when no
    // further termination follows within the window, or some other existence
    // point lies within the window on either side.
    out.retain(|iv| {
        let t = iv.start();
        if iv.end() != End::At(t) || !ends.contains(&t) {
            return true;
        }
        let neighbour = exists
            .range(t.saturating_sub(w)..=t.saturating_add(w))
            .any(|&s| s != t);
        neighbour || !any_in(ends, t + 1, t.saturating_add(w) + 1)
    });
    out
}

fn drop_lower_duplicates(per_level: Vec<(Level, Vec<Interval>)>) -> BTreeSet<(Interval, Level)> {
    let mut seen: BTreeSet<Interval> = BTreeSet::new();
    let mut out = BTreeSet::new();
    for (level, ivs) in per_level {
        out.extend(ivs.iter().filter(|iv| !seen.contains(iv)).map(|iv| (*iv, level)));
        seen.extend(ivs);
    }
    out
}

/// Intervals of a nonpersistent event with window `w`, by iterative
/// expansion from the existence points of each level.
pub fn infer_nonpersistent(tp: &LevelTimepoints, w: u64) -> BTreeSet<(Interval, Level)> {
    assert!(w >= 1, "windows are positive");
    let per_level = (1..=tp.max_level())
        .map(|l| (l, expand_level(tp.exists_at(l), tp.ends_at(l), w)))
        .collect();
    drop_lower_duplicates(per_level)
}

/// Intervals of a persistent event: from each existence point to the first
/// termination at or after it, or ongoing.
pub fn infer_persistent(tp: &LevelTimepoints) -> BTreeSet<(Interval, Level)> {
    let per_level = (1..=tp.max_level())
        .map(|l| {
            let ends = tp.ends_at(l);
            let cands = tp
                .exists_at(l)
                .iter()
                .map(|&t| match first_at_or_after(ends, t) {
                    Some(te) => Interval::closed(t, te),
                    None => Interval::ongoing(t),
                })
                .collect();
            (l, keep_maximal(cands))
        })
        .collect();
    drop_lower_duplicates(per_level)
}

/// Which inference definition an interval is checked against.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Persistence {
    Persistent,
    NonPersistent { window: u64 },
}

/// Direct, item-by-item check of an interval against the inference
/// definitions. Slow; meant as a test oracle.
pub fn oracle_check_interval(
    kind: Persistence,
    tp: &LevelTimepoints,
    interval: Interval,
    level: Level,
) -> bool {
    if level == 0 {
        return false;
    }
    let holds = match kind {
        Persistence::Persistent => check_persistent(tp, interval, level),
        Persistence::NonPersistent { window } => check_nonpersistent(tp, interval, level, window),
    };
    holds && (1..level).all(|l| !oracle_check_interval(kind, tp, interval, l))
}

fn check_persistent(tp: &LevelTimepoints, iv: Interval, level: Level) -> bool {
    let (e, x) = (tp.exists_at(level), tp.ends_at(level));
    let t1 = iv.start();
    if !e.contains(&t1) {
        return false;
    }
    if let End::At(t2) = iv.end() {
        if !x.contains(&t2) {
            return false;
        }
    }
    let earlier_cut = e
        .iter()
        .filter(|&&s| s < t1)
        .all(|&s| x.iter().any(|&te| s <= te && te < t1));
    if !earlier_cut {
        return false;
    }
    match iv.end() {
        End::At(t2) => !x.iter().any(|&s| t1 <= s && s < t2),
        End::Ongoing => !x.iter().any(|&s| t1 <= s),
    }
}

fn check_nonpersistent(tp: &LevelTimepoints, iv: Interval, level: Level, w: u64) -> bool {
    let (e, x) = (tp.exists_at(level), tp.ends_at(level));
    let w = i128::from(w);
    let t1 = iv.start();
    let End::At(t2) = iv.end() else {
        // Item 5 needs t2 to be a chain point and item 6 a termination point.
        return false;
    };
    if !e.contains(&t1) {
        return false;
    }
    // Item 3.
    if x.iter().any(|&s| t1 <= s && s < t2) {
        return false;
    }
    // Item 4.
    let ok_left = e
        .iter()
        .filter(|&&s| i128::from(t1) - w <= i128::from(s) && s < t1)
        .all(|&s| x.iter().any(|&te| s <= te && te < t1));
    if !ok_left {
        return false;
    }
    // Item 2: chain end points reachable from t1 with steps t' - t <= w.
    let mut reach: BTreeSet<Timepoint> = BTreeSet::from([t1]);
    let mut frontier = vec![t1];
    while let Some(a) = frontier.pop() {
        for &b in e {
            if i128::from(b) - i128::from(a) <= w && reach.insert(b) {
                frontier.push(b);
            }
        }
    }
    // Items 5 and 6 for some chain.
    reach.iter().any(|&tn| {
        if t2 == tn {
            !e.iter()
                .chain(x)
                .any(|&s| tn < s && i128::from(s) <= i128::from(tn) + w)
        } else {
            x.contains(&t2) && i128::from(t2) - i128::from(tn) <= w
        }
    })
}

/// SE(D, Σ): every maximal annotated interval of every simple event.
pub fn infer_all_simple(d: &Dataset, tes: &Tes) -> Result<EventSet, Error> {
    let store = ground_simple_heads(tes, d)?;
    check_validity(&store)?;
    let keys: Vec<_> = store.keys().into_iter().collect();
    let per_key: Vec<Vec<EventFact>> = keys
        .par_iter()
        .map(|key| {
            let tp = level_timepoints(&store, key);
            let ivs = if store.is_persistent(&key.pred) {
                infer_persistent(&tp)
            } else {
                let w = store.windows_for(key)[0];
                infer_nonpersistent(&tp, w)
            };
            ivs.into_iter()
                .map(|(iv, l)| EventFact {
                    pred: key.pred.clone(),
                    args: key.args.clone(),
                    interval: iv,
                    level: l,
                })
                .collect()
        })
        .collect();
    Ok(per_key.into_iter().flatten().collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fig1() -> LevelTimepoints {
        LevelTimepoints::from_points(
            [(2, 1), (4, 1), (9, 1), (1, 2), (5, 2), (6, 2), (10, 2)],
            [(7, 1), (8, 1)],
        )
    }

    fn set(items: &[(Interval, Level)]) -> BTreeSet<(Interval, Level)> {
        items.iter().copied().collect()
    }

    #[test]
    fn running_example_nonpersistent() {
        assert_eq!(
            infer_nonpersistent(&fig1(), 2),
            set(&[
                (Interval::closed(2, 4), 1),
                (Interval::closed(9, 9), 1),
                (Interval::closed(1, 7), 2),
                (Interval::closed(9, 10), 2),
            ])
        );
    }

    #[test]
    fn running_example_persistent() {
        assert_eq!(
            infer_persistent(&fig1()),
            set(&[
                (Interval::closed(2, 7), 1),
                (Interval::ongoing(9), 1),
                (Interval::closed(1, 7), 2),
            ])
        );
    }

    #[test]
    fn small_cases() {
        let single = LevelTimepoints::from_points([(5, 1)], []);
        assert_eq!(infer_nonpersistent(&single, 3), set(&[(Interval::point(5), 1)]));
        let gap = LevelTimepoints::from_points([(0, 1), (3, 1)], []);
        assert_eq!(
            infer_nonpersistent(&gap, 2),
            set(&[(Interval::point(0), 1), (Interval::point(3), 1)])
        );
        let same = LevelTimepoints::from_points([(5, 1)], [(5, 1)]);
        assert_eq!(infer_persistent(&same), set(&[(Interval::point(5), 1)]));
        let open = LevelTimepoints::from_points([(3, 1)], []);
        assert_eq!(infer_persistent(&open), set(&[(Interval::ongoing(3), 1)]));
    }

    #[test]
    fn oracle_on_running_example() {
        let np = Persistence::NonPersistent { window: 2 };
        assert!(oracle_check_interval(np, &fig1(), Interval::closed(2, 4), 1));
        assert!(!oracle_check_interval(np, &fig1(), Interval::closed(9, 9), 2));
        assert!(oracle_check_interval(np, &fig1(), Interval::closed(9, 10), 2));
        assert!(!oracle_check_interval(
            Persistence::Persistent,
            &fig1(),
            Interval::closed(1, 7),
            1
        ));
        assert!(!oracle_check_interval(
            Persistence::Persistent,
            &fig1(),
            Interval::ongoing(9),
            2
        ));
    }

    #[test]
    fn termination_closes_interval_within_window() {
        // 4 is the last existence point; the termination at 6 is within reach.
        let tp = LevelTimepoints::from_points([(1, 1), (4, 1)], [(6, 1)]);
        assert_eq!(infer_nonpersistent(&tp, 3), set(&[(Interval::closed(1, 6), 1)]));
        assert_eq!(infer_nonpersistent(&tp, 1), set(&[(Interval::point(1), 1), (Interval::point(4), 1)]));
    }

    use proptest::prelude::*;

    fn oracle_set(kind: Persistence, tp: &LevelTimepoints) -> BTreeSet<(Interval, Level)> {
        let pts: BTreeSet<Timepoint> = tp
            .exists_at(tp.max_level().max(1))
            .union(tp.ends_at(tp.max_level().max(1)))
            .copied()
            .collect();
        let mut out = BTreeSet::new();
        for l in 1..=tp.max_level() {
            for &a in &pts {
                let ends = pts.iter().filter(|&&b| b >= a).map(|&b| End::At(b));
                for end in ends.chain([End::Ongoing]) {
                    let iv = Interval::new(a, end).unwrap();
                    if oracle_check_interval(kind, tp, iv, l) {
                        out.insert((iv, l));
                    }
                }
            }
        }
        out
    }

    fn arb_tp() -> impl Strategy<Value = LevelTimepoints> {
        let pt = (0u64..20, 1u32..=3);
        (
            proptest::collection::vec(pt.clone(), 0..10),
            proptest::collection::vec(pt, 0..4),
        )
            .prop_map(|(e, x)| LevelTimepoints::from_points(e, x))
    }

    proptest! {
        #[test]
        fn nonpersistent_matches_definition(tp in arb_tp(), w in 1u64..=3) {
            let kind = Persistence::NonPersistent { window: w };
            prop_assert_eq!(infer_nonpersistent(&tp, w), oracle_set(kind, &tp));
        }

        #[test]
        fn persistent_matches_definition(tp in arb_tp()) {
            prop_assert_eq!(infer_persistent(&tp), oracle_set(Persistence::Persistent, &tp));
        }
    }
}
