use std::cmp::Ordering;
use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::value::Value;

/// A bound of a range predicate. `None` on either side means unbounded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Range {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lo: Option<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hi: Option<Value>,
    #[serde(default = "yes")]
    pub lo_inclusive: bool,
    #[serde(default = "yes")]
    pub hi_inclusive: bool,
}

fn yes() -> bool {
    true
}

impl Range {
    pub fn closed(lo: impl Into<Value>, hi: impl Into<Value>) -> Self {
        Range { lo: Some(lo.into()), hi: Some(hi.into()), lo_inclusive: true, hi_inclusive: true }
    }

    pub fn at_least(lo: impl Into<Value>) -> Self {
        Range { lo: Some(lo.into()), hi: None, lo_inclusive: true, hi_inclusive: true }
    }

    pub fn greater_than(lo: impl Into<Value>) -> Self {
        Range { lo: Some(lo.into()), hi: None, lo_inclusive: false, hi_inclusive: true }
    }

    pub fn at_most(hi: impl Into<Value>) -> Self {
        Range { lo: None, hi: Some(hi.into()), lo_inclusive: true, hi_inclusive: true }
    }

    pub fn less_than(hi: impl Into<Value>) -> Self {
        Range { lo: None, hi: Some(hi.into()), lo_inclusive: true, hi_inclusive: false }
    }

    pub fn contains(&self, v: &Value) -> bool {
        if let Some(lo) = &self.lo {
            match v.cmp_same_type(lo) {
                Some(Ordering::Greater) => {}
                Some(Ordering::Equal) if self.lo_inclusive => {}
                _ => return false,
            }
        }
        if let Some(hi) = &self.hi {
            match v.cmp_same_type(hi) {
                Some(Ordering::Less) => {}
                Some(Ordering::Equal) if self.hi_inclusive => {}
                _ => return false,
            }
        }
        // An unbounded range still requires a present value.
        !v.is_null() && !matches!(v, Value::Number(n) if n.is_nan())
    }

    /// Tighter of two ranges, or `None` when bound types are incompatible
    /// (no value can satisfy both).
    fn intersect(&self, other: &Range) -> Option<Range> {
        let (lo, lo_inclusive) =
            tighter((&self.lo, self.lo_inclusive), (&other.lo, other.lo_inclusive), Ordering::Greater)?;
        let lo = lo.clone();
        let (hi, hi_inclusive) =
            tighter((&self.hi, self.hi_inclusive), (&other.hi, other.hi_inclusive), Ordering::Less)?;
        let hi = hi.clone();
        if let (Some(l), Some(h)) = (&lo, &hi) {
            l.cmp_same_type(h)?;
        }
        Some(Range { lo, hi, lo_inclusive, hi_inclusive })
    }
}

/// Picks the bound that is further in direction `toward`.
fn tighter<'a>(
    a: (&'a Option<Value>, bool),
    b: (&'a Option<Value>, bool),
    toward: Ordering,
) -> Option<(&'a Option<Value>, bool)> {
    match (a.0, b.0) {
        (None, _) => Some(b),
        (_, None) => Some(a),
        (Some(x), Some(y)) => match x.cmp_same_type(y)? {
            Ordering::Equal => Some((a.0, a.1 && b.1)),
            o if o == toward => Some(a),
            _ => Some(b),
        },
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Predicate {
    In(Vec<Value>),
    Range(Range),
}

impl Predicate {
    pub fn eq(v: impl Into<Value>) -> Self {
        Predicate::In(vec![v.into()])
    }

    pub fn matches(&self, v: &Value) -> bool {
        match self {
            Predicate::In(set) => set.iter().any(|s| v.matches(s)),
            Predicate::Range(r) => r.contains(v),
        }
    }

    /// Conjunction of two predicates on the same column.
    pub fn and(&self, other: &Predicate) -> Predicate {
        match (self, other) {
            (Predicate::In(a), _) => {
                Predicate::In(a.iter().filter(|v| other.matches(v)).cloned().collect())
            }
            (_, Predicate::In(b)) => {
                Predicate::In(b.iter().filter(|v| self.matches(v)).cloned().collect())
            }
            (Predicate::Range(a), Predicate::Range(b)) => match a.intersect(b) {
                Some(r) => Predicate::Range(r),
                None => Predicate::In(Vec::new()),
            },
        }
    }
}

/// One predicate bound to a qualified column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnPredicate {
    pub table: String,
    pub column: String,
    #[serde(flatten)]
    pub predicate: Predicate,
}

/// The active set of column predicates. At most one predicate per
/// `(table, column)`; adding another on the same column conjoins them.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(from = "FilterWire", into = "FilterWire")]
pub struct FilterContext {
    predicates: BTreeMap<(String, String), Predicate>,
}

#[derive(Serialize, Deserialize)]
struct FilterWire {
    #[serde(default)]
    predicates: Vec<ColumnPredicate>,
}

impl From<FilterWire> for FilterContext {
    fn from(w: FilterWire) -> Self {
        let mut ctx = FilterContext::default();
        for p in w.predicates {
            ctx.add(p);
        }
        ctx
    }
}

impl From<FilterContext> for FilterWire {
    fn from(c: FilterContext) -> Self {
        FilterWire { predicates: c.predicates().collect() }
    }
}

impl FilterContext {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn is_empty(&self) -> bool {
        self.predicates.is_empty()
    }

    pub fn len(&self) -> usize {
        self.predicates.len()
    }

    pub fn add(&mut self, p: ColumnPredicate) {
        let key = (p.table, p.column);
        let merged = match self.predicates.get(&key) {
            Some(existing) => existing.and(&p.predicate),
            None => p.predicate,
        };
        self.predicates.insert(key, merged);
    }

    pub fn with(mut self, table: &str, column: &str, predicate: Predicate) -> Self {
        self.add(ColumnPredicate { table: table.into(), column: column.into(), predicate });
        self
    }

    pub fn get(&self, table: &str, column: &str) -> Option<&Predicate> {
        self.predicates.get(&(table.to_string(), column.to_string()))
    }

    pub fn predicates(&self) -> impl Iterator<Item = ColumnPredicate> + '_ {
        self.predicates.iter().map(|((t, c), p)| ColumnPredicate {
            table: t.clone(),
            column: c.clone(),
            predicate: p.clone(),
        })
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str, &Predicate)> {
        self.predicates.iter().map(|((t, c), p)| (t.as_str(), c.as_str(), p))
    }

    pub fn intersect(&self, other: &FilterContext) -> FilterContext {
        let mut out = self.clone();
        for p in other.predicates() {
            out.add(p);
        }
        out
    }
}
