use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::value::Value;

/// Sentinel dictionary code for a missing categorical value.
pub const MISSING_CODE: u32 = u32::MAX;
/// Sentinel for a missing integer.
pub const MISSING_INT: i64 = i64::MIN;
/// Sentinel for a missing date.
pub const MISSING_DATE: i32 = i32::MIN;

/// Logical kind of a column, shared by ingest specs and stored columns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnKind {
    Text,
    Categorical,
    Money,
    Fraction,
    Integer,
    Date,
}

impl ColumnKind {
    pub fn is_numeric(self) -> bool {
        matches!(self, ColumnKind::Money | ColumnKind::Fraction | ColumnKind::Integer)
    }

    pub fn tag(self) -> u8 {
        match self {
            ColumnKind::Text => 0,
            ColumnKind::Categorical => 1,
            ColumnKind::Money => 2,
            ColumnKind::Fraction => 3,
            ColumnKind::Integer => 4,
            ColumnKind::Date => 5,
        }
    }

    pub fn from_tag(tag: u8) -> Option<Self> {
        Some(match tag {
            0 => ColumnKind::Text,
            1 => ColumnKind::Categorical,
            2 => ColumnKind::Money,
            3 => ColumnKind::Fraction,
            4 => ColumnKind::Integer,
            5 => ColumnKind::Date,
            _ => return None,
        })
    }
}

/// Physical storage. Text and categorical columns are dictionary encoded
/// with dense codes in first-seen order.
#[derive(Debug, Clone, PartialEq)]
pub enum ColumnData {
    Dictionary { dict: Vec<String>, codes: Vec<u32> },
    Float(Vec<f64>),
    Int(Vec<i64>),
    /// Days since 0001-01-01 (proleptic Gregorian, day 1 = CE day 1).
    Date(Vec<i32>),
}

impl ColumnData {
    pub fn len(&self) -> usize {
        match self {
            ColumnData::Dictionary { codes, .. } => codes.len(),
            ColumnData::Float(v) => v.len(),
            ColumnData::Int(v) => v.len(),
            ColumnData::Date(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Column {
    pub name: String,
    pub kind: ColumnKind,
    pub data: ColumnData,
}

impl Column {
    pub fn new(name: impl Into<String>, kind: ColumnKind, data: ColumnData) -> Self {
        Column { name: name.into(), kind, data }
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn is_missing(&self, row: usize) -> bool {
        match &self.data {
            ColumnData::Dictionary { codes, .. } => codes[row] == MISSING_CODE,
            ColumnData::Float(v) => v[row].is_nan(),
            ColumnData::Int(v) => v[row] == MISSING_INT,
            ColumnData::Date(v) => v[row] == MISSING_DATE,
        }
    }

    /// Numeric view of a row, if the column is numeric and the value present.
    #[inline]
    pub fn number(&self, row: usize) -> Option<f64> {
        match &self.data {
            ColumnData::Float(v) => {
                let x = v[row];
                (!x.is_nan()).then_some(x)
            }
            ColumnData::Int(v) => (v[row] != MISSING_INT).then_some(v[row] as f64),
            _ => None,
        }
    }

    /// Identity of the value at `row` as a 64-bit atom, for grouping and
    /// distinct counting. `None` when missing.
    #[inline]
    pub fn atom(&self, row: usize) -> Option<u64> {
        match &self.data {
            ColumnData::Dictionary { codes, .. } => {
                let c = codes[row];
                (c != MISSING_CODE).then_some(c as u64)
            }
            ColumnData::Float(v) => {
                let x = v[row];
                if x.is_nan() {
                    None
                } else if x == 0.0 {
                    Some(0.0f64.to_bits())
                } else {
                    Some(x.to_bits())
                }
            }
            ColumnData::Int(v) => (v[row] != MISSING_INT).then_some(v[row] as u64),
            ColumnData::Date(v) => (v[row] != MISSING_DATE).then_some(v[row] as u32 as u64),
        }
    }

    pub fn value(&self, row: usize) -> Value {
        match &self.data {
            ColumnData::Dictionary { dict, codes } => match codes[row] {
                MISSING_CODE => Value::Null,
                c => Value::Text(dict[c as usize].clone()),
            },
            ColumnData::Float(v) => {
                if v[row].is_nan() {
                    Value::Null
                } else {
                    Value::Number(v[row])
                }
            }
            ColumnData::Int(v) => match v[row] {
                MISSING_INT => Value::Null,
                x => Value::Number(x as f64),
            },
            ColumnData::Date(v) => match v[row] {
                MISSING_DATE => Value::Null,
                d => Value::Text(format_date(d)),
            },
        }
    }
}

pub fn date_to_days(d: NaiveDate) -> i32 {
    d.num_days_from_ce()
}

pub fn days_to_date(days: i32) -> Option<NaiveDate> {
    NaiveDate::from_num_days_from_ce_opt(days)
}

pub fn format_date(days: i32) -> String {
    days_to_date(days)
        .map(|d| d.format("%Y-%m-%d").to_string())
        .unwrap_or_default()
}

/// Incrementally builds a dictionary-encoded column.
#[derive(Debug, Default)]
pub struct DictionaryBuilder {
    dict: Vec<String>,
    index: std::collections::HashMap<String, u32>,
    codes: Vec<u32>,
}

impl DictionaryBuilder {
    pub fn with_capacity(rows: usize) -> Self {
        DictionaryBuilder { codes: Vec::with_capacity(rows), ..Default::default() }
    }

    pub fn push(&mut self, value: Option<&str>) {
        let code = match value {
            None => MISSING_CODE,
            Some(s) => match self.index.get(s) {
                Some(&c) => c,
                None => {
                    let c = self.dict.len() as u32;
                    self.dict.push(s.to_string());
                    self.index.insert(s.to_string(), c);
                    c
                }
            },
        };
        self.codes.push(code);
    }

    pub fn finish(self) -> ColumnData {
        ColumnData::Dictionary { dict: self.dict, codes: self.codes }
    }
}
