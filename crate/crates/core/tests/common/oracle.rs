//! Brute-force reference implementations used to check the engine.
//!
//! Everything here works row by row on `Value`s obtained through
//! `ColumnHandle::value`, with its own predicate and aggregation logic, so it
//! shares no evaluation code with the engine under test.

#![allow(dead_code)]

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::Rng;
use storeboard_core::measure::{AggFunc, BinOp, CompareOp, MeasureCatalog, MeasureExpr};
use storeboard_core::model::{FilterContext, Predicate, Range, StarSchema};
use storeboard_core::query::{BinMode, BinSpec, Direction, GroupQuery, QueryResult, ResultRow};
use storeboard_core::Value;

fn cmp(a: &Value, b: &Value) -> Option<std::cmp::Ordering> {
    match (a, b) {
        (Value::Number(x), Value::Number(y)) => x.partial_cmp(y),
        (Value::Text(x), Value::Text(y)) => Some(x.cmp(y)),
        _ => None,
    }
}

fn equal(a: &Value, b: &Value) -> bool {
    cmp(a, b) == Some(std::cmp::Ordering::Equal)
}

pub fn range_holds(r: &Range, v: &Value) -> bool {
    use std::cmp::Ordering::*;
    if v.is_null() {
        return false;
    }
    let lo_ok = match &r.lo {
        None => true,
        Some(lo) => matches!((cmp(v, lo), r.lo_inclusive), (Some(Greater), _) | (Some(Equal), true)),
    };
    let hi_ok = match &r.hi {
        None => true,
        Some(hi) => matches!((cmp(v, hi), r.hi_inclusive), (Some(Less), _) | (Some(Equal), true)),
    };
    lo_ok && hi_ok
}

pub fn predicate_holds(p: &Predicate, v: &Value) -> bool {
    match p {
        Predicate::In(set) => set.iter().any(|s| equal(s, v)),
        Predicate::Range(r) => range_holds(r, v),
    }
}

/// Fact rows satisfying every predicate, by full scan.
pub fn rows(schema: &StarSchema, ctx: &FilterContext) -> Vec<usize> {
    (0..schema.row_count())
        .filter(|&r| {
            ctx.iter().all(|(t, c, p)| predicate_holds(p, &schema.column(t, c).unwrap().value(r)))
        })
        .collect()
}

fn condition_holds(op: CompareOp, values: &[Value], v: &Value) -> bool {
    use std::cmp::Ordering::*;
    if v.is_null() {
        return false;
    }
    let c = || cmp(v, &values[0]);
    match op {
        CompareOp::In | CompareOp::Eq => values.iter().any(|x| equal(x, v)),
        CompareOp::Lt => c() == Some(Less),
        CompareOp::Le => matches!(c(), Some(Less | Equal)),
        CompareOp::Gt => c() == Some(Greater),
        CompareOp::Ge => matches!(c(), Some(Greater | Equal)),
    }
}

/// Evaluates `expr` over exactly `rows` (ascending). `None` = undefined.
pub fn measure(schema: &StarSchema, catalog: &MeasureCatalog, expr: &MeasureExpr, rows: &[usize]) -> Option<f64> {
    match expr {
        MeasureExpr::Number(n) => Some(*n),
        MeasureExpr::MeasureRef(name) => measure(schema, catalog, catalog.get(name).unwrap().expr(), rows),
        MeasureExpr::Agg { func, column } => {
            let h = schema.resolve(column).unwrap();
            let vals: Vec<Value> = rows.iter().map(|&r| h.value(r)).filter(|v| !v.is_null()).collect();
            let nums: Vec<f64> = vals.iter().filter_map(Value::as_f64).collect();
            match func {
                AggFunc::Sum => Some(nums.iter().fold(0.0, |a, x| a + x)),
                AggFunc::Count => Some(vals.len() as f64),
                AggFunc::DistinctCount => {
                    let set: BTreeSet<String> = vals
                        .iter()
                        .map(|v| match v {
                            Value::Number(x) if *x == 0.0 => "n:0".to_string(),
                            Value::Number(x) => format!("n:{x:?}"),
                            other => format!("t:{other}"),
                        })
                        .collect();
                    Some(set.len() as f64)
                }
                AggFunc::Min => nums.iter().copied().reduce(f64::min),
                AggFunc::Max => nums.iter().copied().reduce(f64::max),
                AggFunc::Average => {
                    (!nums.is_empty()).then(|| nums.iter().fold(0.0, |a, x| a + x) / nums.len() as f64)
                }
            }
        }
        MeasureExpr::Divide { numerator, denominator, alternate } => {
            let n = measure(schema, catalog, numerator, rows);
            let d = measure(schema, catalog, denominator, rows);
            let alt = measure(schema, catalog, alternate, rows);
            match d {
                Some(x) if x == 0.0 => alt,
                Some(x) => n.map(|n| n / x),
                None => None,
            }
        }
        MeasureExpr::Binary { op, left, right } => {
            let l = measure(schema, catalog, left, rows)?;
            let r = measure(schema, catalog, right, rows)?;
            Some(match op {
                BinOp::Add => l + r,
                BinOp::Sub => l - r,
                BinOp::Mul => l * r,
                BinOp::Div => l / r,
            })
        }
        MeasureExpr::Neg(e) => measure(schema, catalog, e, rows).map(|x| -x),
        MeasureExpr::Calculate { inner, conditions } => {
            let kept: Vec<usize> = rows
                .iter()
                .copied()
                .filter(|&r| {
                    conditions.iter().all(|c| {
                        condition_holds(c.op, &c.values, &schema.resolve(&c.column).unwrap().value(r))
                    })
                })
                .collect();
            measure(schema, catalog, inner, &kept)
        }
    }
}

fn key_cmp(a: &[Value], b: &[Value]) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b) {
        let o = x.total_cmp(y);
        if o.is_ne() {
            return o;
        }
    }
    std::cmp::Ordering::Equal
}

/// Bin lower edge for `x`, found by scanning edges outward from zero.
fn hand_bin(width: f64, origin: f64, x: f64) -> f64 {
    let mut i: i64 = 0;
    while BinSpec::edge(width, origin, i) > x {
        i -= 1;
    }
    while BinSpec::edge(width, origin, i + 1) <= x {
        i += 1;
    }
    BinSpec::edge(width, origin, i)
}

/// Nested-loop evaluation of a whole `GroupQuery`.
pub fn query(schema: &StarSchema, catalog: &MeasureCatalog, q: &GroupQuery) -> QueryResult {
    let selected = rows(schema, &q.filters);
    let eval = |rs: &[usize]| -> Vec<Option<f64>> {
        q.measures.iter().map(|m| measure(schema, catalog, &MeasureExpr::measure(m), rs)).collect()
    };
    let total = eval(&selected);
    let mut columns = Vec::new();
    if let Some(b) = &q.bin {
        columns.push(format!("{}[{}]", b.table, b.column));
    }
    columns.extend(q.group_by.iter().map(|g| format!("{}[{}]", g.table, g.column)));

    let key_of = |r: usize| -> Vec<Value> {
        let mut k = Vec::new();
        if let Some(b) = &q.bin {
            let v = schema.column(&b.table, &b.column).unwrap().value(r);
            k.push(match (b.mode, v.as_f64()) {
                (_, None) => Value::Null,
                (BinMode::DistinctValues, Some(x)) => Value::Number(x),
                (BinMode::FixedWidth { width, origin }, Some(x)) => Value::Number(hand_bin(width, origin, x)),
            });
        }
        for g in &q.group_by {
            k.push(schema.column(&g.table, &g.column).unwrap().value(r));
        }
        k
    };

    let mut rows_out = if q.is_scalar() {
        vec![ResultRow { keys: Vec::new(), values: total.clone() }]
    } else {
        let mut groups: Vec<(Vec<Value>, Vec<usize>)> = Vec::new();
        for &r in &selected {
            let k = key_of(r);
            match groups.iter_mut().find(|(gk, _)| key_cmp(gk, &k).is_eq()) {
                Some((_, rs)) => rs.push(r),
                None => groups.push((k, vec![r])),
            }
        }
        groups.sort_by(|a, b| key_cmp(&a.0, &b.0));
        groups.into_iter().map(|(keys, rs)| ResultRow { keys, values: eval(&rs) }).collect()
    };

    if let Some(o) = &q.order_by {
        let mi = q.measures.iter().position(|m| *m == o.measure).unwrap();
        // Insertion sort with an explicit comparator.
        let before = |a: &ResultRow, b: &ResultRow| -> bool {
            match (a.values[mi], b.values[mi]) {
                (Some(x), Some(y)) if x != y => (x < y) == (o.direction == Direction::Asc),
                (Some(_), None) => true,
                (None, Some(_)) => false,
                _ => key_cmp(&a.keys, &b.keys).is_lt(),
            }
        };
        let mut sorted: Vec<ResultRow> = Vec::new();
        for row in rows_out {
            let at = sorted.iter().position(|s| before(&row, s)).unwrap_or(sorted.len());
            sorted.insert(at, row);
        }
        rows_out = sorted;
    }
    if let Some(n) = q.limit {
        rows_out.truncate(n);
    }
    QueryResult { columns, measures: q.measures.clone(), rows: rows_out, total }
}

/// Catalog exercising every aggregate, on top of the built-in measures.
pub fn test_catalog() -> MeasureCatalog {
    let mut c = MeasureCatalog::builtin();
    for (name, src) in [
        ("Lines", "COUNT(Sales)"),
        ("Customers", "DISTINCTCOUNT(CustomerID)"),
        ("Min Discount", "MIN(Discount)"),
        ("Max Profit", "MAX(Profit)"),
        ("Avg Sales", "AVERAGE(Sales)"),
        ("APAC Furniture Sales", r#"CALCULATE([Total Sales], Market = "APAC", Category IN {"Furniture"})"#),
        ("Deep Discount Margin", "CALCULATE([Profit Margin %], Discount >= 0.3)"),
        ("Net", "-[Total Loss] + [Total Profit] * 2 - 1 / [Lines]"),
    ] {
        c.register(name, src).unwrap();
    }
    c
}

const GROUP_COLUMNS: [(&str, &str); 9] = [
    ("Product", "Category"),
    ("Product", "SubCategory"),
    ("Geography", "Market"),
    ("ShipMode", "ShipMode"),
    ("Customer", "Segment"),
    ("Orders", "Discount"),
    ("Date", "Year"),
    ("Orders", "Quantity"),
    ("Orders", "OrderPriority"),
];

fn pick<'a, T>(rng: &mut impl Rng, xs: &'a [T]) -> &'a T {
    xs.choose(rng).unwrap()
}

pub fn random_filters(rng: &mut impl Rng) -> FilterContext {
    let mut ctx = FilterContext::new();
    let markets = ["APAC", "EU", "US", "LATAM", "EMEA", "Africa", "Canada"];
    for _ in 0..rng.gen_range(0..3) {
        ctx = match rng.gen_range(0..6) {
            0 => {
                let n = rng.gen_range(1..4);
                let set = markets.choose_multiple(rng, n).map(|m| Value::text(*m)).collect();
                ctx.with("Geography", "Market", Predicate::In(set))
            }
            1 => ctx.with("Orders", "Discount", Predicate::Range(Range::closed(rng.gen_range(0..3) as f64 / 10.0, rng.gen_range(2..6) as f64 / 10.0))),
            2 => ctx.with("Product", "Category", Predicate::eq(*pick(rng, &["Furniture", "Technology", "Office Supplies"]))),
            3 => ctx.with("Orders", "Profit", Predicate::Range(Range::less_than(rng.gen_range(-50.0..100.0)))),
            4 => ctx.with("Date", "Year", Predicate::Range(Range::at_least(rng.gen_range(2011..=2014) as f64))),
            _ => ctx.with("ShipMode", "ShipMode", Predicate::eq(*pick(rng, &["First Class", "Same Day", "Standard Class"]))),
        };
    }
    ctx
}

/// A random grouped, binned or top-N query over the test catalog.
pub fn random_query(rng: &mut impl Rng, catalog: &MeasureCatalog) -> GroupQuery {
    let names: Vec<&str> = catalog.names().collect();
    let n_measures = rng.gen_range(1..=3);
    let mut q = GroupQuery::new(&names.choose_multiple(rng, n_measures).copied().collect::<Vec<_>>());
    for _ in 0..rng.gen_range(0..=2) {
        let (t, c) = *pick(rng, &GROUP_COLUMNS);
        if !q.group_by.iter().any(|g| g.table == t && g.column == c) {
            q = q.group_by(t, c);
        }
    }
    match rng.gen_range(0..3) {
        0 => {}
        1 => q = q.bin("Orders", "Discount", BinMode::DistinctValues),
        _ => {
            let width = *pick(rng, &[0.05, 0.1, 0.25, 1.0]);
            let (t, c) = *pick(rng, &[("Orders", "Discount"), ("Orders", "Sales"), ("Orders", "Profit")]);
            let width = if c == "Discount" { width } else { width * 1000.0 };
            q = q.bin(t, c, BinMode::FixedWidth { width, origin: *pick(rng, &[0.0, 0.05, -100.0]) });
        }
    }
    if rng.gen_bool(0.5) {
        let m = q.measures[rng.gen_range(0..q.measures.len())].clone();
        q = q.order_by(&m, if rng.gen_bool(0.5) { Direction::Asc } else { Direction::Desc });
        q = q.limit(rng.gen_range(0..6));
    } else if rng.gen_bool(0.2) {
        q = q.limit(rng.gen_range(0..4));
    }
    q.filter(random_filters(rng))
}

/// Field-by-field comparison that treats results as bit-identical values.
pub fn same_result(a: &QueryResult, b: &QueryResult) -> Result<(), String> {
    let bits = |v: &[Option<f64>]| v.iter().map(|x| x.map(f64::to_bits)).collect::<Vec<_>>();
    if a.columns != b.columns || a.measures != b.measures {
        return Err("column or measure labels differ".into());
    }
    if bits(&a.total) != bits(&b.total) {
        return Err(format!("totals differ: {:?} vs {:?}", a.total, b.total));
    }
    if a.rows.len() != b.rows.len() {
        return Err(format!("row counts differ: {} vs {}", a.rows.len(), b.rows.len()));
    }
    for (i, (x, y)) in a.rows.iter().zip(&b.rows).enumerate() {
        if key_cmp(&x.keys, &y.keys).is_ne() || x.keys.len() != y.keys.len() {
            return Err(format!("row {i} keys differ: {:?} vs {:?}", x.keys, y.keys));
        }
        if bits(&x.values) != bits(&y.values) {
            return Err(format!("row {i} ({:?}) values differ: {:?} vs {:?}", x.keys, x.values, y.values));
        }
    }
    Ok(())
}
