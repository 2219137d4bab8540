//! Columnar star-schema storage and filter-context resolution.
//!
//! The fact table sits at order-line grain. Dimension tables are keyed by
//! dense surrogate keys, and every fact row carries one foreign key per
//! dimension. Predicates on dimension columns are evaluated once per
//! dimension row and propagated to fact rows through the foreign key, so a
//! filter costs one pass over the fact table regardless of where it lives.

mod column;
mod filter;
mod schema;
mod selection;
mod table;

pub use column::{
    date_to_days, days_to_date, format_date, Column, ColumnData, ColumnKind, DictionaryBuilder,
    MISSING_CODE, MISSING_DATE, MISSING_INT,
};
pub use filter::{ColumnPredicate, FilterContext, Predicate, Range};
pub use schema::{ColumnHandle, ColumnRef, PaymentSource, Relationship, SchemaMeta, StarSchema};
pub use selection::RowSelection;
pub use table::ColumnTable;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ModelError {
    #[error("unknown column {table}[{column}]")]
    UnknownColumn { table: String, column: String },

    #[error("unknown table {0}")]
    UnknownTable(String),

    #[error("column {column} is ambiguous across tables {tables:?}; qualify it as Table[{column}]")]
    AmbiguousColumn { column: String, tables: Vec<String> },

    #[error("column {table}[{column}] has {actual} rows, expected {expected}")]
    LengthMismatch { table: String, column: String, expected: usize, actual: usize },

    #[error("duplicate column {table}[{column}]")]
    DuplicateColumn { table: String, column: String },

    #[error("duplicate key {value} in {table}[{column}]")]
    DuplicateKey { table: String, column: String, value: String },

    #[error("fact row {row} references {value} which is absent from dimension {dimension}")]
    DanglingKey { dimension: String, value: String, row: usize },

    #[error("invalid relationship: {0}")]
    BadRelationship(String),
}
