//! Grouped measure evaluation.
//!
//! Every expression is evaluated for all groups at once: aggregates make a
//! single pass over the selected fact rows (ascending) and scatter into
//! per-group accumulators. A scalar evaluation is the one-group case. A
//! `None` cell means the value is undefined for that group (MIN, MAX or
//! AVERAGE over no rows) and propagates through arithmetic.

use std::collections::HashSet;

use super::ast::{AggFunc, BinOp, CompareOp, Condition, MeasureExpr};
use super::{MeasureCatalog, MeasureError};
use crate::model::{ColumnPredicate, FilterContext, Predicate, Range, RowSelection, StarSchema};

/// Marks fact rows that belong to no group.
pub const NO_GROUP: u32 = u32::MAX;

/// Assignment of fact rows to `groups` dense group ids.
#[derive(Debug, Clone, Copy)]
pub struct Grouping<'a> {
    pub groups: usize,
    /// Group id per fact row; `None` puts every row in group 0.
    pub group_of_row: Option<&'a [u32]>,
}

impl Grouping<'_> {
    pub const SCALAR: Grouping<'static> = Grouping { groups: 1, group_of_row: None };

    #[inline]
    fn group(&self, row: usize) -> Option<usize> {
        match self.group_of_row {
            None => Some(0),
            Some(g) => match g[row] {
                NO_GROUP => None,
                id => Some(id as usize),
            },
        }
    }
}

pub struct Evaluator<'a> {
    schema: &'a StarSchema,
    catalog: &'a MeasureCatalog,
}

impl<'a> Evaluator<'a> {
    pub fn new(schema: &'a StarSchema, catalog: &'a MeasureCatalog) -> Self {
        Evaluator { schema, catalog }
    }

    /// Evaluates the named catalog measure per group.
    pub fn measure(
        &self,
        name: &str,
        sel: &RowSelection,
        grouping: Grouping<'_>,
    ) -> Result<Vec<Option<f64>>, MeasureError> {
        self.grouped(&MeasureExpr::MeasureRef(name.to_string()), sel, grouping)
    }

    pub fn grouped(
        &self,
        expr: &MeasureExpr,
        sel: &RowSelection,
        grouping: Grouping<'_>,
    ) -> Result<Vec<Option<f64>>, MeasureError> {
        self.eval(expr, sel, grouping, &mut Vec::new())
    }

    pub fn scalar(&self, expr: &MeasureExpr, sel: &RowSelection) -> Result<Option<f64>, MeasureError> {
        Ok(self.grouped(expr, sel, Grouping::SCALAR)?[0])
    }

    fn eval(
        &self,
        expr: &MeasureExpr,
        sel: &RowSelection,
        g: Grouping<'_>,
        stack: &mut Vec<String>,
    ) -> Result<Vec<Option<f64>>, MeasureError> {
        Ok(match expr {
            MeasureExpr::Number(n) => vec![Some(*n); g.groups],
            MeasureExpr::Agg { func, column } => self.aggregate(*func, column, sel, g)?,
            MeasureExpr::MeasureRef(name) => {
                if stack.iter().any(|s| s == name) {
                    let mut cycle = stack.clone();
                    cycle.push(name.clone());
                    return Err(MeasureError::CycleDetected(cycle));
                }
                let entry = self.catalog.get(name).ok_or_else(|| MeasureError::UnknownMeasure(name.clone()))?;
                stack.push(name.clone());
                let out = self.eval(entry.expr(), sel, g, stack);
                stack.pop();
                out?
            }
            MeasureExpr::Divide { numerator, denominator, alternate } => {
                let n = self.eval(numerator, sel, g, stack)?;
                let d = self.eval(denominator, sel, g, stack)?;
                let alt = self.eval(alternate, sel, g, stack)?;
                (0..g.groups)
                    .map(|i| match d[i] {
                        Some(x) if x == 0.0 => alt[i],
                        Some(x) => n[i].map(|n| n / x),
                        None => None,
                    })
                    .collect()
            }
            MeasureExpr::Binary { op, left, right } => {
                let l = self.eval(left, sel, g, stack)?;
                let r = self.eval(right, sel, g, stack)?;
                l.into_iter()
                    .zip(r)
                    .map(|(a, b)| Some(apply(*op, a?, b?)))
                    .collect()
            }
            MeasureExpr::Neg(inner) => self.eval(inner, sel, g, stack)?.into_iter().map(|v| v.map(|x| -x)).collect(),
            MeasureExpr::Calculate { inner, conditions } => {
                let ctx = conditions_context(self.schema, conditions)?;
                let narrowed = sel.intersection(&self.schema.resolve_rows(&ctx)?);
                self.eval(inner, &narrowed, g, stack)?
            }
        })
    }

    fn aggregate(
        &self,
        func: AggFunc,
        column: &crate::model::ColumnRef,
        sel: &RowSelection,
        g: Grouping<'_>,
    ) -> Result<Vec<Option<f64>>, MeasureError> {
        let h = self.schema.resolve(column)?;
        if func.numeric() && !h.kind().is_numeric() {
            return Err(MeasureError::TypeMismatch { func: func.name(), column: column.to_string() });
        }
        let n = g.groups;
        let rows = sel.iter().filter_map(|r| g.group(r).map(|gi| (r, gi)));
        Ok(match func {
            AggFunc::Sum => {
                let mut acc = vec![0.0; n];
                for (r, gi) in rows {
                    if let Some(x) = h.number(r) {
                        acc[gi] += x;
                    }
                }
                acc.into_iter().map(Some).collect()
            }
            AggFunc::Count => {
                let mut acc = vec![0usize; n];
                for (r, gi) in rows {
                    if h.atom(r).is_some() {
                        acc[gi] += 1;
                    }
                }
                acc.into_iter().map(|c| Some(c as f64)).collect()
            }
            AggFunc::DistinctCount => {
                let mut seen: Vec<HashSet<u64>> = vec![HashSet::new(); n];
                for (r, gi) in rows {
                    if let Some(a) = h.atom(r) {
                        seen[gi].insert(a);
                    }
                }
                seen.into_iter().map(|s| Some(s.len() as f64)).collect()
            }
            AggFunc::Min | AggFunc::Max => {
                let mut acc: Vec<Option<f64>> = vec![None; n];
                let better = |x: f64, cur: f64| if func == AggFunc::Min { x < cur } else { x > cur };
                for (r, gi) in rows {
                    if let Some(x) = h.number(r) {
                        match acc[gi] {
                            Some(cur) if !better(x, cur) => {}
                            _ => acc[gi] = Some(x),
                        }
                    }
                }
                acc
            }
            AggFunc::Average => {
                let mut sum = vec![0.0; n];
                let mut count = vec![0usize; n];
                for (r, gi) in rows {
                    if let Some(x) = h.number(r) {
                        sum[gi] += x;
                        count[gi] += 1;
                    }
                }
                sum.into_iter().zip(count).map(|(s, c)| (c > 0).then(|| s / c as f64)).collect()
            }
        })
    }
}

fn apply(op: BinOp, a: f64, b: f64) -> f64 {
    match op {
        BinOp::Add => a + b,
        BinOp::Sub => a - b,
        BinOp::Mul => a * b,
        BinOp::Div => a / b,
    }
}

fn condition_predicate(c: &Condition) -> Predicate {
    let one = || c.values.first().cloned().unwrap_or(crate::Value::Null);
    match c.op {
        CompareOp::Eq => Predicate::In(vec![one()]),
        CompareOp::In => Predicate::In(c.values.clone()),
        CompareOp::Lt => Predicate::Range(Range::less_than(one())),
        CompareOp::Le => Predicate::Range(Range::at_most(one())),
        CompareOp::Gt => Predicate::Range(Range::greater_than(one())),
        CompareOp::Ge => Predicate::Range(Range::at_least(one())),
    }
}

/// The filter context expressed by a list of `CALCULATE` conditions.
pub fn conditions_context(schema: &StarSchema, conditions: &[Condition]) -> Result<FilterContext, MeasureError> {
    let mut ctx = FilterContext::new();
    for c in conditions {
        let h = schema.resolve(&c.column)?;
        ctx.add(ColumnPredicate {
            table: h.table.to_string(),
            column: h.column.name.clone(),
            predicate: condition_predicate(c),
        });
    }
    Ok(ctx)
}

/// Evaluates `expr` under `ctx`. Undefined results (an empty MIN, MAX or
/// AVERAGE) are reported as [`MeasureError::EmptyAggregation`].
pub fn evaluate(
    expr: &MeasureExpr,
    schema: &StarSchema,
    ctx: &FilterContext,
    catalog: &MeasureCatalog,
) -> Result<f64, MeasureError> {
    let sel = schema.resolve_rows(ctx)?;
    Evaluator::new(schema, catalog)
        .scalar(expr, &sel)?
        .ok_or(MeasureError::EmptyAggregation { func: first_partial_agg(expr) })
}

fn first_partial_agg(expr: &MeasureExpr) -> &'static str {
    let mut name = "aggregate";
    let mut found = false;
    let mut visit = |e: &MeasureExpr| {
        if let MeasureExpr::Agg { func: f @ (AggFunc::Min | AggFunc::Max | AggFunc::Average), .. } = e {
            if !found {
                name = f.name();
                found = true;
            }
        }
    };
    walk(expr, &mut visit);
    name
}

fn walk(e: &MeasureExpr, f: &mut impl FnMut(&MeasureExpr)) {
    f(e);
    match e {
        MeasureExpr::Divide { numerator, denominator, alternate } => {
            walk(numerator, f);
            walk(denominator, f);
            walk(alternate, f);
        }
        MeasureExpr::Binary { left, right, .. } => {
            walk(left, f);
            walk(right, f);
        }
        MeasureExpr::Neg(i) | MeasureExpr::Calculate { inner: i, .. } => walk(i, f),
        _ => {}
    }
}
