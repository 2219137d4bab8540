use std::fmt;

use serde::{Deserialize, Serialize};

use crate::model::ColumnRef;
use crate::value::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum AggFunc {
    Sum,
    Count,
    DistinctCount,
    Min,
    Max,
    Average,
}

impl AggFunc {
    pub const ALL: [AggFunc; 6] =
        [AggFunc::Sum, AggFunc::Count, AggFunc::DistinctCount, AggFunc::Min, AggFunc::Max, AggFunc::Average];

    pub fn name(self) -> &'static str {
        match self {
            AggFunc::Sum => "SUM",
            AggFunc::Count => "COUNT",
            AggFunc::DistinctCount => "DISTINCTCOUNT",
            AggFunc::Min => "MIN",
            AggFunc::Max => "MAX",
            AggFunc::Average => "AVERAGE",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        AggFunc::ALL.into_iter().find(|f| f.name().eq_ignore_ascii_case(name))
    }

    /// Whether the function needs numeric input.
    pub fn numeric(self) -> bool {
        !matches!(self, AggFunc::Count | AggFunc::DistinctCount)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
        }
    }

    pub(crate) fn precedence(self) -> u8 {
        match self {
            BinOp::Add | BinOp::Sub => 1,
            BinOp::Mul | BinOp::Div => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CompareOp {
    Eq,
    Lt,
    Le,
    Gt,
    Ge,
    In,
}

impl CompareOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CompareOp::Eq => "=",
            CompareOp::Lt => "<",
            CompareOp::Le => "<=",
            CompareOp::Gt => ">",
            CompareOp::Ge => ">=",
            CompareOp::In => "IN",
        }
    }
}

/// A `CALCULATE` filter argument such as `Profit < 0` or
/// `Market IN {"APAC", "EU"}`. Non-`IN` conditions carry exactly one value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Condition {
    pub column: ColumnRef,
    pub op: CompareOp,
    pub values: Vec<Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum MeasureExpr {
    Number(f64),
    Agg { func: AggFunc, column: ColumnRef },
    MeasureRef(String),
    /// `DIVIDE(numerator, denominator, alternate)`; yields the alternate when
    /// the denominator evaluates to zero.
    Divide { numerator: Box<MeasureExpr>, denominator: Box<MeasureExpr>, alternate: Box<MeasureExpr> },
    Binary { op: BinOp, left: Box<MeasureExpr>, right: Box<MeasureExpr> },
    Neg(Box<MeasureExpr>),
    Calculate { inner: Box<MeasureExpr>, conditions: Vec<Condition> },
}

impl MeasureExpr {
    pub fn agg(func: AggFunc, column: &str) -> Self {
        MeasureExpr::Agg { func, column: ColumnRef::bare(column) }
    }

    pub fn measure(name: &str) -> Self {
        MeasureExpr::MeasureRef(name.to_string())
    }

    pub fn divide(n: MeasureExpr, d: MeasureExpr, alt: MeasureExpr) -> Self {
        MeasureExpr::Divide { numerator: Box::new(n), denominator: Box::new(d), alternate: Box::new(alt) }
    }

    pub fn binary(op: BinOp, l: MeasureExpr, r: MeasureExpr) -> Self {
        MeasureExpr::Binary { op, left: Box::new(l), right: Box::new(r) }
    }

    /// Names of measures referenced directly by this expression.
    pub fn measure_refs(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.walk(&mut |e| {
            if let MeasureExpr::MeasureRef(n) = e {
                out.push(n.as_str());
            }
        });
        out
    }

    /// Columns aggregated or filtered by this expression.
    pub fn column_refs(&self) -> Vec<&ColumnRef> {
        let mut out = Vec::new();
        self.walk(&mut |e| match e {
            MeasureExpr::Agg { column, .. } => out.push(column),
            MeasureExpr::Calculate { conditions, .. } => out.extend(conditions.iter().map(|c| &c.column)),
            _ => {}
        });
        out
    }

    fn walk<'a>(&'a self, f: &mut impl FnMut(&'a MeasureExpr)) {
        f(self);
        match self {
            MeasureExpr::Number(_) | MeasureExpr::Agg { .. } | MeasureExpr::MeasureRef(_) => {}
            MeasureExpr::Divide { numerator, denominator, alternate } => {
                numerator.walk(f);
                denominator.walk(f);
                alternate.walk(f);
            }
            MeasureExpr::Binary { left, right, .. } => {
                left.walk(f);
                right.walk(f);
            }
            MeasureExpr::Neg(e) => e.walk(f),
            MeasureExpr::Calculate { inner, .. } => inner.walk(f),
        }
    }
}

impl fmt::Display for MeasureExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&super::printer::print(self))
    }
}
