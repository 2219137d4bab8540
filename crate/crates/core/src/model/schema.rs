use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::column::{Column, ColumnData, ColumnKind};
use super::filter::{FilterContext, Predicate};
use super::selection::RowSelection;
use super::table::ColumnTable;
use super::ModelError;
use crate::value::Value;

/// Fact column → dimension key column.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Relationship {
    pub fact_column: String,
    pub dimension: String,
    pub key_column: String,
}

/// Where the `ShippingPayment` fact column came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PaymentSource {
    /// Read from a `Shipping Payment` column in the source file.
    Column,
    /// Synthesized from a per-ship-mode fee table.
    FeeTable { calibrated: bool },
}

/// Provenance carried alongside the data (and persisted in snapshots).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemaMeta {
    pub source: String,
    pub rejected_rows: usize,
    pub encoding_fallbacks: usize,
    pub payment_source: PaymentSource,
}

impl Default for SchemaMeta {
    fn default() -> Self {
        SchemaMeta {
            source: String::new(),
            rejected_rows: 0,
            encoding_fallbacks: 0,
            payment_source: PaymentSource::Column,
        }
    }
}

/// A possibly-unqualified column reference, as written by users.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ColumnRef {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub table: Option<String>,
    pub column: String,
}

impl ColumnRef {
    pub fn bare(column: impl Into<String>) -> Self {
        ColumnRef { table: None, column: column.into() }
    }

    pub fn qualified(table: impl Into<String>, column: impl Into<String>) -> Self {
        ColumnRef { table: Some(table.into()), column: column.into() }
    }
}

impl fmt::Display for ColumnRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.table {
            Some(t) => write!(f, "{t}[{}]", self.column),
            None => f.write_str(&self.column),
        }
    }
}

/// A column reachable from fact rows: either a fact column or a dimension
/// column reached through its relationship.
#[derive(Clone, Copy)]
pub struct ColumnHandle<'a> {
    pub table: &'a str,
    pub column: &'a Column,
    fk: Option<&'a [u32]>,
}

impl<'a> ColumnHandle<'a> {
    #[inline]
    fn own_row(&self, fact_row: usize) -> usize {
        match self.fk {
            Some(fk) => fk[fact_row] as usize,
            None => fact_row,
        }
    }

    #[inline]
    pub fn number(&self, fact_row: usize) -> Option<f64> {
        self.column.number(self.own_row(fact_row))
    }

    #[inline]
    pub fn atom(&self, fact_row: usize) -> Option<u64> {
        self.column.atom(self.own_row(fact_row))
    }

    pub fn value(&self, fact_row: usize) -> Value {
        self.column.value(self.own_row(fact_row))
    }

    pub fn kind(&self) -> ColumnKind {
        self.column.kind
    }

    pub fn is_dimension(&self) -> bool {
        self.fk.is_some()
    }

    /// Maps an atom produced by this column back to its value.
    pub fn atom_value(&self, atom: u64) -> Value {
        match &self.column.data {
            ColumnData::Dictionary { dict, .. } => Value::Text(dict[atom as usize].clone()),
            ColumnData::Float(_) => Value::Number(f64::from_bits(atom)),
            ColumnData::Int(_) => Value::Number(atom as i64 as f64),
            ColumnData::Date(_) => Value::Text(super::column::format_date(atom as u32 as i32)),
        }
    }

    /// Selection of fact rows whose value satisfies `pred`.
    pub fn select(&self, pred: &Predicate, fact_rows: usize) -> RowSelection {
        let own = own_mask(self.column, pred);
        match self.fk {
            Some(fk) => RowSelection::from_fn(fact_rows, |r| own[fk[r] as usize]),
            None => RowSelection::from_fn(fact_rows, |r| own[r]),
        }
    }
}

/// Per-row match mask over the column's own table.
fn own_mask(col: &Column, pred: &Predicate) -> Vec<bool> {
    match &col.data {
        ColumnData::Dictionary { dict, codes } => {
            let entry: Vec<bool> = dict.iter().map(|s| pred.matches(&Value::Text(s.clone()))).collect();
            codes
                .iter()
                .map(|&c| c != super::column::MISSING_CODE && entry[c as usize])
                .collect()
        }
        ColumnData::Float(_) | ColumnData::Int(_) => (0..col.len())
            .map(|r| col.number(r).is_some_and(|x| pred.matches(&Value::Number(x))))
            .collect(),
        ColumnData::Date(days) => {
            let mut memo: HashMap<i32, bool> = HashMap::new();
            days.iter()
                .enumerate()
                .map(|(r, d)| *memo.entry(*d).or_insert_with(|| pred.matches(&col.value(r))))
                .collect()
        }
    }
}

/// Immutable star schema: one fact table plus keyed dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct StarSchema {
    fact: ColumnTable,
    dimensions: Vec<ColumnTable>,
    relationships: Vec<Relationship>,
    meta: SchemaMeta,
    /// For each relationship, the dimension row of every fact row.
    fk_rows: Vec<Vec<u32>>,
}

impl StarSchema {
    pub fn new(
        fact: ColumnTable,
        dimensions: Vec<ColumnTable>,
        relationships: Vec<Relationship>,
        meta: SchemaMeta,
    ) -> Result<Self, ModelError> {
        let mut fk_rows = Vec::with_capacity(relationships.len());
        for rel in &relationships {
            let fact_col = fact.column(&rel.fact_column).ok_or_else(|| ModelError::UnknownColumn {
                table: fact.name().to_string(),
                column: rel.fact_column.clone(),
            })?;
            let dim = dimensions
                .iter()
                .find(|d| d.name() == rel.dimension)
                .ok_or_else(|| ModelError::UnknownTable(rel.dimension.clone()))?;
            let key = dim.column(&rel.key_column).ok_or_else(|| ModelError::UnknownColumn {
                table: dim.name().to_string(),
                column: rel.key_column.clone(),
            })?;
            if dim.key_column() != Some(rel.key_column.as_str()) {
                return Err(ModelError::BadRelationship(format!(
                    "{}[{}] is not the key of {}",
                    rel.dimension, rel.key_column, rel.dimension
                )));
            }
            let index: HashMap<u64, u32> =
                (0..key.len()).filter_map(|r| key.atom(r).map(|a| (a, r as u32))).collect();
            let mut rows = Vec::with_capacity(fact.row_count());
            for r in 0..fact.row_count() {
                let hit = fact_col.atom(r).and_then(|a| index.get(&a).copied());
                match hit {
                    Some(d) => rows.push(d),
                    None => {
                        return Err(ModelError::DanglingKey {
                            dimension: rel.dimension.clone(),
                            value: fact_col.value(r).to_string(),
                            row: r,
                        })
                    }
                }
            }
            fk_rows.push(rows);
        }
        Ok(StarSchema { fact, dimensions, relationships, meta, fk_rows })
    }

    pub fn fact(&self) -> &ColumnTable {
        &self.fact
    }

    pub fn dimensions(&self) -> &[ColumnTable] {
        &self.dimensions
    }

    pub fn dimension(&self, name: &str) -> Option<&ColumnTable> {
        self.dimensions.iter().find(|d| d.name() == name)
    }

    pub fn relationships(&self) -> &[Relationship] {
        &self.relationships
    }

    pub fn meta(&self) -> &SchemaMeta {
        &self.meta
    }

    pub fn row_count(&self) -> usize {
        self.fact.row_count()
    }

    /// Fact first, then dimensions in declaration order.
    pub fn tables(&self) -> impl Iterator<Item = &ColumnTable> {
        std::iter::once(&self.fact).chain(self.dimensions.iter())
    }

    /// Handle for a qualified `(table, column)`.
    pub fn column(&self, table: &str, column: &str) -> Result<ColumnHandle<'_>, ModelError> {
        let unknown = || ModelError::UnknownColumn { table: table.to_string(), column: column.to_string() };
        if table == self.fact.name() {
            let c = self.fact.column(column).ok_or_else(unknown)?;
            return Ok(ColumnHandle { table: self.fact.name(), column: c, fk: None });
        }
        let (i, rel) = self
            .relationships
            .iter()
            .enumerate()
            .find(|(_, r)| r.dimension == table)
            .ok_or_else(unknown)?;
        let dim = self.dimension(&rel.dimension).ok_or_else(unknown)?;
        let c = dim.column(column).ok_or_else(unknown)?;
        Ok(ColumnHandle { table: dim.name(), column: c, fk: Some(&self.fk_rows[i]) })
    }

    /// Resolves a possibly-bare reference: fact columns win, then the unique
    /// dimension holding the column.
    pub fn resolve(&self, r: &ColumnRef) -> Result<ColumnHandle<'_>, ModelError> {
        if let Some(t) = &r.table {
            return self.column(t, &r.column);
        }
        if self.fact.column(&r.column).is_some() {
            return self.column(self.fact.name(), &r.column);
        }
        let hits: Vec<&str> = self
            .relationships
            .iter()
            .filter(|rel| self.dimension(&rel.dimension).is_some_and(|d| d.column(&r.column).is_some()))
            .map(|rel| rel.dimension.as_str())
            .collect();
        match hits.as_slice() {
            [one] => self.column(one, &r.column),
            [] => Err(ModelError::UnknownColumn { table: self.fact.name().to_string(), column: r.column.clone() }),
            many => Err(ModelError::AmbiguousColumn {
                column: r.column.clone(),
                tables: many.iter().map(|s| s.to_string()).collect(),
            }),
        }
    }

    pub fn all_rows(&self) -> RowSelection {
        RowSelection::all(self.row_count())
    }

    /// Fact rows satisfying every predicate of `ctx`.
    pub fn resolve_rows(&self, ctx: &FilterContext) -> Result<RowSelection, ModelError> {
        let mut sel = self.all_rows();
        for (table, column, pred) in ctx.iter() {
            let handle = self.column(table, column)?;
            sel.intersect_with(&handle.select(pred, self.row_count()));
        }
        Ok(sel)
    }
}
