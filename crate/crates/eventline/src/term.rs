//! Rule terms and their evaluation under a variable binding.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::model::{End, Interval, Name, Value};

/// Value domain a variable ranges over. Inferred from the argument slots the
/// variable occupies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sort {
    /// Data constants (symbols and naturals).
    Data,
    /// Natural numbers (timepoints, interval starts).
    Nat,
    /// Positive naturals (confidence levels, windows).
    PosNat,
    /// Naturals or `*` (interval upper endpoints).
    NatOrStar,
}

impl Sort {
    pub fn admits(self, v: &Value) -> bool {
        match (self, v) {
            (Sort::Data, Value::Sym(_) | Value::Nat(_)) => true,
            (Sort::Nat, Value::Nat(_)) => true,
            (Sort::PosNat, Value::Nat(n)) => *n >= 1,
            (Sort::NatOrStar, Value::Nat(_) | Value::Star) => true,
            _ => false,
        }
    }

    pub fn is_numeric(self) -> bool {
        self != Sort::Data
    }

    /// Meet of two slot requirements; `None` when a variable would need to be
    /// both a data constant and a number.
    pub fn meet(self, other: Sort) -> Option<Sort> {
        use Sort::*;
        match (self, other) {
            (a, b) if a == b => Some(a),
            (Data, _) | (_, Data) => None,
            (PosNat, _) | (_, PosNat) => Some(PosNat),
            (Nat, NatOrStar) | (NatOrStar, Nat) => Some(Nat),
            _ => unreachable!(),
        }
    }
}

impl fmt::Display for Sort {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Sort::Data => "data",
            Sort::Nat => "natural",
            Sort::PosNat => "positive natural",
            Sort::NatOrStar => "natural or *",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NumFn {
    Min,
    Max,
    Plus,
    Minus,
}

impl NumFn {
    pub fn name(self) -> &'static str {
        match self {
            NumFn::Min => "min",
            NumFn::Max => "max",
            NumFn::Plus => "plus",
            NumFn::Minus => "minus",
        }
    }

    pub fn from_name(s: &str) -> Option<NumFn> {
        match s {
            "min" => Some(NumFn::Min),
            "max" => Some(NumFn::Max),
            "plus" => Some(NumFn::Plus),
            "minus" => Some(NumFn::Minus),
            _ => None,
        }
    }

    /// Applies the function to numeric operands (`Ongoing` = +infinity).
    /// Subtraction clamps at 0; `* - n = *` and `n - * = 0`.
    pub fn apply(self, args: &[End]) -> Option<End> {
        let (first, rest) = args.split_first()?;
        let mut acc = *first;
        for &x in rest {
            acc = match self {
                NumFn::Min => acc.min(x),
                NumFn::Max => acc.max(x),
                NumFn::Plus => match (acc, x) {
                    (End::At(a), End::At(b)) => End::At(a.saturating_add(b)),
                    _ => End::Ongoing,
                },
                NumFn::Minus => match (acc, x) {
                    (End::At(a), End::At(b)) => End::At(a.saturating_sub(b)),
                    (End::Ongoing, _) => End::Ongoing,
                    (End::At(_), End::Ongoing) => End::At(0),
                },
            };
        }
        Some(acc)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var {
    pub name: Name,
    pub sort: Sort,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Sym(Name),
    Nat(u64),
    /// The ongoing marker `*`.
    Star,
    /// Anonymous variable `_`; every occurrence is distinct.
    Wildcard,
    Var(Var),
    Fn(NumFn, Vec<Term>),
    Interval(Box<Term>, Box<Term>),
    /// Interval intersection `inter(i1, i2, ...)`.
    Inter(Vec<Term>),
}

impl Term {
    pub fn var(name: &str, sort: Sort) -> Term {
        Term::Var(Var {
            name: Name::new(name),
            sort,
        })
    }

    pub fn interval(lo: Term, hi: Term) -> Term {
        Term::Interval(Box::new(lo), Box::new(hi))
    }

    /// Named variables, in order of first occurrence (with repeats).
    pub fn vars(&self) -> Vec<&Var> {
        let mut out = Vec::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars<'a>(&'a self, out: &mut Vec<&'a Var>) {
        match self {
            Term::Var(v) => out.push(v),
            Term::Fn(_, args) | Term::Inter(args) => {
                args.iter().for_each(|a| a.collect_vars(out));
            }
            Term::Interval(lo, hi) => {
                lo.collect_vars(out);
                hi.collect_vars(out);
            }
            _ => {}
        }
    }

    pub fn is_ground(&self) -> bool {
        self.vars().is_empty() && !self.has_wildcard()
    }

    pub fn has_wildcard(&self) -> bool {
        match self {
            Term::Wildcard => true,
            Term::Fn(_, args) | Term::Inter(args) => args.iter().any(Term::has_wildcard),
            Term::Interval(lo, hi) => lo.has_wildcard() || hi.has_wildcard(),
            _ => false,
        }
    }

    /// Terms that are computed rather than matched: function applications and
    /// intersections. Their variables never get bound by matching.
    pub fn is_computed(&self) -> bool {
        matches!(self, Term::Fn(..) | Term::Inter(..))
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Sym(s) => write!(f, "{}", Value::Sym(s.clone())),
            Term::Nat(n) => write!(f, "{n}"),
            Term::Star => f.write_str("*"),
            Term::Wildcard => f.write_str("_"),
            Term::Var(v) => write!(f, "{}", v.name),
            Term::Fn(func, args) => {
                write!(f, "{}(", func.name())?;
                write_list(f, args)?;
                f.write_str(")")
            }
            Term::Interval(lo, hi) => write!(f, "[{lo}, {hi}]"),
            Term::Inter(args) => {
                f.write_str("inter(")?;
                write_list(f, args)?;
                f.write_str(")")
            }
        }
    }
}

pub(crate) fn write_list<T: fmt::Display>(f: &mut fmt::Formatter<'_>, items: &[T]) -> fmt::Result {
    for (i, t) in items.iter().enumerate() {
        if i > 0 {
            f.write_str(", ")?;
        }
        write!(f, "{t}")?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TermError {
    #[error("sort error in `{term}`: expected {expected}")]
    SortError { term: String, expected: String },
    #[error("unbound variable {0}")]
    UnboundVariable(Name),
}

pub type Binding = BTreeMap<Name, Value>;

/// Evaluates a term to a ground value. `Ok(None)` is the empty interval: an
/// intersection of disjoint intervals, or `[lo,hi]` with `lo > hi`.
pub fn eval_term(term: &Term, binding: &Binding) -> Result<Option<Value>, TermError> {
    eval_with(term, &|v: &Var| binding.get(&v.name).cloned())
}

pub(crate) fn eval_with(
    term: &Term,
    lookup: &dyn Fn(&Var) -> Option<Value>,
) -> Result<Option<Value>, TermError> {
    let sort_err = |expected: &str| TermError::SortError {
        term: term.to_string(),
        expected: expected.to_string(),
    };
    match term {
        Term::Sym(s) => Ok(Some(Value::Sym(s.clone()))),
        Term::Nat(n) => Ok(Some(Value::Nat(*n))),
        Term::Star => Ok(Some(Value::Star)),
        Term::Wildcard => Err(TermError::UnboundVariable(Name::new("_"))),
        Term::Var(v) => {
            let val = lookup(v).ok_or_else(|| TermError::UnboundVariable(v.name.clone()))?;
            if v.sort.admits(&val) {
                Ok(Some(val))
            } else {
                Err(sort_err(&v.sort.to_string()))
            }
        }
        Term::Fn(func, args) => {
            let mut nums = Vec::with_capacity(args.len());
            for a in args {
                let val = eval_with(a, lookup)?.ok_or_else(|| sort_err("numeric argument"))?;
                nums.push(val.as_numeric().ok_or_else(|| sort_err("numeric argument"))?);
            }
            let out = func.apply(&nums).ok_or_else(|| sort_err("at least one argument"))?;
            Ok(Some(Value::from_end(out)))
        }
        Term::Interval(lo, hi) => {
            let lo = match eval_with(lo, lookup)?.ok_or_else(|| sort_err("natural"))? {
                Value::Nat(n) => n,
                _ => return Err(sort_err("natural lower endpoint")),
            };
            let hi = eval_with(hi, lookup)?
                .and_then(|v| v.as_numeric())
                .ok_or_else(|| sort_err("natural or * upper endpoint"))?;
            Ok(Interval::new(lo, hi).ok().map(Value::Interval))
        }
        Term::Inter(args) => {
            let mut acc: Option<Interval> = None;
            for (i, a) in args.iter().enumerate() {
                let iv = match eval_with(a, lookup)? {
                    None => return Ok(None),
                    Some(Value::Interval(iv)) => iv,
                    Some(_) => return Err(sort_err("interval argument")),
                };
                acc = if i == 0 {
                    Some(iv)
                } else {
                    match acc.and_then(|x| x.intersect(&iv)) {
                        None => return Ok(None),
                        some => some,
                    }
                };
            }
            acc.map(|iv| Some(Value::Interval(iv)))
                .ok_or_else(|| sort_err("at least one interval"))
        }
    }
}
