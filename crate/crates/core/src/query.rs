//! Grouped, binned and top-N measure queries.

use std::cmp::Ordering;
use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::measure::{Evaluator, Grouping, MeasureCatalog, MeasureError, NO_GROUP};
use crate::model::{ColumnHandle, FilterContext, ModelError, StarSchema};
use crate::value::Value;

#[derive(Debug, thiserror::Error)]
pub enum QueryError {
    #[error(transparent)]
    Measure(#[from] MeasureError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("invalid bin: {0}")]
    InvalidBin(String),
    #[error("invalid query: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GroupColumn {
    pub table: String,
    pub column: String,
}

impl GroupColumn {
    pub fn new(table: &str, column: &str) -> Self {
        GroupColumn { table: table.to_string(), column: column.to_string() }
    }

    fn label(&self) -> String {
        format!("{}[{}]", self.table, self.column)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum BinMode {
    DistinctValues,
    /// Bins `[origin + i*width, origin + (i+1)*width)`.
    FixedWidth { width: f64, origin: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinSpec {
    pub table: String,
    pub column: String,
    #[serde(flatten)]
    pub mode: BinMode,
}

impl BinSpec {
    /// Lower edge of bin `i` in fixed-width mode.
    /// Edges are snapped to six significant digits below the width, so
    /// `edge(0.05, 0, 3)` is `0.15` rather than `0.15000000000000002`.
    pub fn edge(width: f64, origin: f64, i: i64) -> f64 {
        let raw = origin + i as f64 * width;
        let p = 6 - width.log10().floor() as i32;
        if p > 0 {
            let s = 10f64.powi(p);
            (raw * s).round() / s
        } else {
            let q = 10f64.powi(-p);
            (raw / q).round() * q
        }
    }

    /// Index of the fixed-width bin holding `x` (lower-inclusive, upper-exclusive).
    pub fn bin_index(width: f64, origin: f64, x: f64) -> i64 {
        let mut i = ((x - origin) / width).floor() as i64;
        while Self::edge(width, origin, i) > x {
            i -= 1;
        }
        while Self::edge(width, origin, i + 1) <= x {
            i += 1;
        }
        i
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    #[default]
    Asc,
    Desc,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderBy {
    pub measure: String,
    #[serde(default)]
    pub direction: Direction,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct GroupQuery {
    #[serde(default)]
    pub group_by: Vec<GroupColumn>,
    pub measures: Vec<String>,
    #[serde(default)]
    pub filters: FilterContext,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bin: Option<BinSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub order_by: Option<OrderBy>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub limit: Option<usize>,
}

impl GroupQuery {
    pub fn new(measures: &[&str]) -> Self {
        GroupQuery { measures: measures.iter().map(|s| s.to_string()).collect(), ..Default::default() }
    }

    pub fn group_by(mut self, table: &str, column: &str) -> Self {
        self.group_by.push(GroupColumn::new(table, column));
        self
    }

    pub fn filter(mut self, filters: FilterContext) -> Self {
        self.filters = filters;
        self
    }

    pub fn bin(mut self, table: &str, column: &str, mode: BinMode) -> Self {
        self.bin = Some(BinSpec { table: table.to_string(), column: column.to_string(), mode });
        self
    }

    pub fn order_by(mut self, measure: &str, direction: Direction) -> Self {
        self.order_by = Some(OrderBy { measure: measure.to_string(), direction });
        self
    }

    pub fn limit(mut self, n: usize) -> Self {
        self.limit = Some(n);
        self
    }

    pub fn is_scalar(&self) -> bool {
        self.group_by.is_empty() && self.bin.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub keys: Vec<Value>,
    /// One cell per requested measure; `None` where the measure is undefined.
    pub values: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryResult {
    /// Labels of the key columns; a bin column comes first.
    pub columns: Vec<String>,
    pub measures: Vec<String>,
    pub rows: Vec<ResultRow>,
    /// The measures under the query filters without grouping.
    pub total: Vec<Option<f64>>,
}

impl QueryResult {
    pub fn measure_index(&self, name: &str) -> Option<usize> {
        self.measures.iter().position(|m| m == name)
    }

    /// Row whose first key equals `key`.
    pub fn row(&self, key: &Value) -> Option<&ResultRow> {
        self.rows.iter().find(|r| r.keys.first() == Some(key))
    }

    pub fn value(&self, key: &Value, measure: &str) -> Option<f64> {
        self.row(key)?.values[self.measure_index(measure)?]
    }
}

enum KeySource<'a> {
    Column(ColumnHandle<'a>),
    Distinct(ColumnHandle<'a>),
    Fixed { handle: ColumnHandle<'a>, width: f64, origin: f64 },
}

impl KeySource<'_> {
    fn atom(&self, row: usize) -> Option<u64> {
        match self {
            KeySource::Column(h) => h.atom(row),
            KeySource::Distinct(h) => h.number(row).map(|x| if x == 0.0 { 0 } else { x.to_bits() }),
            KeySource::Fixed { handle, width, origin } => {
                handle.number(row).map(|x| BinSpec::bin_index(*width, *origin, x) as u64)
            }
        }
    }

    fn value(&self, atom: Option<u64>) -> Value {
        let Some(a) = atom else { return Value::Null };
        match self {
            KeySource::Column(h) => h.atom_value(a),
            KeySource::Distinct(_) => Value::Number(f64::from_bits(a)),
            KeySource::Fixed { width, origin, .. } => Value::Number(BinSpec::edge(*width, *origin, a as i64)),
        }
    }
}

fn compare_keys(a: &[Value], b: &[Value]) -> Ordering {
    a.iter().zip(b).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(Ordering::Equal)
}

fn bin_source<'a>(schema: &'a StarSchema, bin: &BinSpec) -> Result<KeySource<'a>, QueryError> {
    let handle = schema.column(&bin.table, &bin.column)?;
    if !handle.kind().is_numeric() {
        return Err(QueryError::InvalidBin(format!("{}[{}] is not numeric", bin.table, bin.column)));
    }
    Ok(match bin.mode {
        BinMode::DistinctValues => KeySource::Distinct(handle),
        BinMode::FixedWidth { width, origin } => {
            if !(width > 0.0 && width.is_finite() && origin.is_finite()) {
                return Err(QueryError::InvalidBin(format!("width must be positive and finite, got {width}")));
            }
            KeySource::Fixed { handle, width, origin }
        }
    })
}

/// Runs a grouped (or scalar) query. Groups are the distinct key tuples of
/// the selected rows, sorted ascending by key; `order_by` and `limit` are
/// applied last.
pub fn run(schema: &StarSchema, catalog: &MeasureCatalog, q: &GroupQuery) -> Result<QueryResult, QueryError> {
    for m in q.measures.iter().chain(q.order_by.as_ref().map(|o| &o.measure)) {
        if !catalog.contains(m) {
            return Err(MeasureError::UnknownMeasure(m.clone()).into());
        }
    }
    if let Some(o) = &q.order_by {
        if !q.measures.contains(&o.measure) {
            return Err(QueryError::Invalid(format!("order_by measure [{}] is not among the query measures", o.measure)));
        }
    }

    let mut sources = Vec::new();
    let mut columns = Vec::new();
    if let Some(bin) = &q.bin {
        sources.push(bin_source(schema, bin)?);
        columns.push(format!("{}[{}]", bin.table, bin.column));
    }
    for g in &q.group_by {
        sources.push(KeySource::Column(schema.column(&g.table, &g.column)?));
        columns.push(g.label());
    }

    let sel = schema.resolve_rows(&q.filters)?;
    let eval = Evaluator::new(schema, catalog);
    let mut total = Vec::with_capacity(q.measures.len());
    for m in &q.measures {
        total.push(eval.measure(m, &sel, Grouping::SCALAR)?[0]);
    }

    if sources.is_empty() {
        let rows = vec![ResultRow { keys: Vec::new(), values: total.clone() }];
        let rows = match q.limit {
            Some(n) => rows.into_iter().take(n).collect(),
            None => rows,
        };
        return Ok(QueryResult { columns, measures: q.measures.clone(), rows, total });
    }

    // Assign provisional group ids in first-seen order.
    let mut ids: HashMap<Vec<Option<u64>>, u32> = HashMap::new();
    let mut atoms: Vec<Vec<Option<u64>>> = Vec::new();
    let mut group_of_row = vec![NO_GROUP; schema.row_count()];
    let mut buf: Vec<Option<u64>> = Vec::with_capacity(sources.len());
    for r in sel.iter() {
        buf.clear();
        buf.extend(sources.iter().map(|s| s.atom(r)));
        let id = match ids.get(buf.as_slice()) {
            Some(&id) => id,
            None => {
                let id = atoms.len() as u32;
                ids.insert(buf.clone(), id);
                atoms.push(buf.clone());
                id
            }
        };
        group_of_row[r] = id;
    }

    // Renumber groups in key order.
    let keys: Vec<Vec<Value>> = atoms
        .iter()
        .map(|a| a.iter().zip(&sources).map(|(atom, s)| s.value(*atom)).collect())
        .collect();
    let mut order: Vec<usize> = (0..keys.len()).collect();
    order.sort_by(|&a, &b| compare_keys(&keys[a], &keys[b]));
    let mut rank = vec![0u32; keys.len()];
    for (pos, &g) in order.iter().enumerate() {
        rank[g] = pos as u32;
    }
    for g in group_of_row.iter_mut().filter(|g| **g != NO_GROUP) {
        *g = rank[*g as usize];
    }

    let grouping = Grouping { groups: keys.len(), group_of_row: Some(&group_of_row) };
    let mut cells = Vec::with_capacity(q.measures.len());
    for m in &q.measures {
        cells.push(eval.measure(m, &sel, grouping)?);
    }
    let mut keys_sorted: Vec<Option<Vec<Value>>> = vec![None; keys.len()];
    for (g, k) in keys.into_iter().enumerate() {
        keys_sorted[rank[g] as usize] = Some(k);
    }
    let mut rows: Vec<ResultRow> = keys_sorted
        .into_iter()
        .enumerate()
        .map(|(g, k)| ResultRow { keys: k.unwrap(), values: cells.iter().map(|c| c[g]).collect() })
        .collect();

    if let Some(o) = &q.order_by {
        let mi = q.measures.iter().position(|m| *m == o.measure).unwrap();
        rows.sort_by(|a, b| {
            let by_value = match (a.values[mi], b.values[mi]) {
                (Some(x), Some(y)) => match o.direction {
                    Direction::Asc => x.total_cmp(&y),
                    Direction::Desc => y.total_cmp(&x),
                },
                (Some(_), None) => Ordering::Less,
                (None, Some(_)) => Ordering::Greater,
                (None, None) => Ordering::Equal,
            };
            by_value.then_with(|| compare_keys(&a.keys, &b.keys))
        });
    }
    if let Some(n) = q.limit {
        rows.truncate(n);
    }
    Ok(QueryResult { columns, measures: q.measures.clone(), rows, total })
}

/// [`run`] for a query that must carry a bin.
pub fn run_binned(schema: &StarSchema, catalog: &MeasureCatalog, q: &GroupQuery) -> Result<QueryResult, QueryError> {
    if q.bin.is_none() {
        return Err(QueryError::Invalid("run_binned needs a bin".into()));
    }
    run(schema, catalog, q)
}

/// [`run`] for a query that must carry `order_by` and `limit`.
pub fn top_n(schema: &StarSchema, catalog: &MeasureCatalog, q: &GroupQuery) -> Result<QueryResult, QueryError> {
    if q.order_by.is_none() || q.limit.is_none() {
        return Err(QueryError::Invalid("top_n needs order_by and limit".into()));
    }
    run(schema, catalog, q)
}
