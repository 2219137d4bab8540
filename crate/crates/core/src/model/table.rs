use std::collections::HashSet;

use super::column::Column;
use super::ModelError;

/// A named set of equal-length columns, optionally keyed.
#[derive(Debug, Clone, PartialEq)]
pub struct ColumnTable {
    name: String,
    columns: Vec<Column>,
    key_column: Option<String>,
    rows: usize,
}

impl ColumnTable {
    pub fn new(
        name: impl Into<String>,
        columns: Vec<Column>,
        key_column: Option<String>,
    ) -> Result<Self, ModelError> {
        let name = name.into();
        let rows = columns.first().map_or(0, Column::len);
        let mut seen = HashSet::new();
        for c in &columns {
            if c.len() != rows {
                return Err(ModelError::LengthMismatch {
                    table: name.clone(),
                    column: c.name.clone(),
                    expected: rows,
                    actual: c.len(),
                });
            }
            if !seen.insert(c.name.as_str()) {
                return Err(ModelError::DuplicateColumn { table: name.clone(), column: c.name.clone() });
            }
        }
        if let Some(key) = &key_column {
            let col = columns
                .iter()
                .find(|c| &c.name == key)
                .ok_or_else(|| ModelError::UnknownColumn { table: name.clone(), column: key.clone() })?;
            let mut keys = HashSet::with_capacity(rows);
            for r in 0..rows {
                let atom = col.atom(r).ok_or_else(|| ModelError::DuplicateKey {
                    table: name.clone(),
                    column: key.clone(),
                    value: "(missing)".into(),
                })?;
                if !keys.insert(atom) {
                    return Err(ModelError::DuplicateKey {
                        table: name.clone(),
                        column: key.clone(),
                        value: col.value(r).to_string(),
                    });
                }
            }
        }
        Ok(ColumnTable { name, columns, key_column, rows })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn row_count(&self) -> usize {
        self.rows
    }

    pub fn key_column(&self) -> Option<&str> {
        self.key_column.as_deref()
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn column(&self, name: &str) -> Option<&Column> {
        self.columns.iter().find(|c| c.name == name)
    }
}
