//! CSV ingestion and star-schema construction.

mod dates;
mod fees;
mod star;

use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

pub use dates::{vote as vote_date_format, DateFormat};
pub use fees::{FeeTable, ShipFee};
pub use star::{build_star_schema, tables, FACT_TABLE};

use crate::model::{ColumnKind, ModelError};

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("file not found or unreadable: {}", .0.display())]
    FileNotFound(PathBuf),

    #[error("missing mandatory column {0}")]
    MissingColumn(String),

    #[error("{rejected} of {total} data rows rejected (limit {limit}); wrong file or dataset variant?")]
    TooManyBadRows { rejected: usize, total: usize, limit: usize },

    #[error("malformed CSV: {0}")]
    Csv(String),

    #[error("bad configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Model(#[from] ModelError),
}

/// One expected source column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnSpec {
    pub source_name: String,
    pub canonical_name: String,
    pub kind: ColumnKind,
    pub required: bool,
}

impl ColumnSpec {
    pub fn new(source: &str, canonical: &str, kind: ColumnKind, required: bool) -> Self {
        ColumnSpec {
            source_name: source.into(),
            canonical_name: canonical.into(),
            kind,
            required,
        }
    }
}

/// The Global Superstore column layout.
pub fn default_columns() -> Vec<ColumnSpec> {
    use ColumnKind::*;
    let req = |s, c, k| ColumnSpec::new(s, c, k, true);
    let opt = |s, c, k| ColumnSpec::new(s, c, k, false);
    vec![
        req("Order ID", "OrderID", Text),
        req("Order Date", "OrderDate", Date),
        req("Ship Date", "ShipDate", Date),
        req("Ship Mode", "ShipMode", Categorical),
        req("Customer ID", "CustomerID", Text),
        req("Customer Name", "CustomerName", Text),
        req("Segment", "Segment", Categorical),
        req("City", "City", Text),
        req("Country", "Country", Categorical),
        req("Market", "Market", Categorical),
        req("Region", "Region", Categorical),
        req("Product ID", "ProductID", Text),
        req("Category", "Category", Categorical),
        req("Sub-Category", "SubCategory", Categorical),
        req("Product Name", "ProductName", Text),
        req("Sales", "Sales", Money),
        req("Quantity", "Quantity", Integer),
        req("Discount", "Discount", Fraction),
        req("Profit", "Profit", Money),
        req("Shipping Cost", "ShippingCost", Money),
        opt("Shipping Payment", "ShippingPayment", Money),
        opt("Order Priority", "OrderPriority", Categorical),
        opt("Postal Code", "PostalCode", Text),
    ]
}

/// A parsed cell.
#[derive(Debug, Clone, PartialEq)]
pub enum RawValue {
    Missing,
    Text(String),
    Number(f64),
    Integer(i64),
    Date(NaiveDate),
}

impl RawValue {
    pub fn as_str(&self) -> Option<&str> {
        match self {
            RawValue::Text(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            RawValue::Number(x) => Some(*x),
            RawValue::Integer(i) => Some(*i as f64),
            _ => None,
        }
    }

    pub fn as_date(&self) -> Option<NaiveDate> {
        match self {
            RawValue::Date(d) => Some(*d),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RejectedRow {
    /// 1-based line number in the source file.
    pub line: u64,
    pub reason: String,
}

/// Parsed rows, with cells aligned to `columns` (the recognized subset of
/// the requested spec, in spec order).
#[derive(Debug, Clone, PartialEq)]
pub struct RawDataset {
    pub source_path: String,
    pub columns: Vec<ColumnSpec>,
    pub rows: Vec<Vec<RawValue>>,
    pub row_count: usize,
    pub rejected: Vec<RejectedRow>,
    pub encoding_fallbacks: usize,
}

impl RawDataset {
    pub fn column_index(&self, canonical: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.canonical_name == canonical)
    }

    pub fn has_column(&self, canonical: &str) -> bool {
        self.column_index(canonical).is_some()
    }

    pub fn get(&self, row: usize, canonical: &str) -> Option<&RawValue> {
        self.column_index(canonical).map(|i| &self.rows[row][i])
    }
}

/// Header comparison ignores case, whitespace, hyphens and underscores.
fn normalize_header(h: &str) -> String {
    h.chars()
        .filter(|c| !c.is_whitespace() && *c != '-' && *c != '_')
        .flat_map(char::to_lowercase)
        .collect()
}

/// Rejected rows tolerated before the file is deemed the wrong one: 1% of
/// data rows, but never fewer than one.
pub fn reject_limit(total: usize) -> usize {
    (total / 100).max(1)
}

pub fn load_csv(path: &Path, spec: &[ColumnSpec]) -> Result<RawDataset, IngestError> {
    let bytes = std::fs::read(path).map_err(|_| IngestError::FileNotFound(path.to_path_buf()))?;
    load_csv_bytes(&bytes, &path.display().to_string(), spec)
}

/// Decodes UTF-8 with lossy replacement, counting replaced bytes.
fn decode(bytes: &[u8]) -> (String, usize) {
    let bytes = bytes.strip_prefix(b"\xEF\xBB\xBF").unwrap_or(bytes);
    let mut out = String::with_capacity(bytes.len());
    let mut replaced = 0;
    for chunk in bytes.utf8_chunks() {
        out.push_str(chunk.valid());
        if !chunk.invalid().is_empty() {
            replaced += chunk.invalid().len();
            out.push(char::REPLACEMENT_CHARACTER);
        }
    }
    (out, replaced)
}

fn parse_number(s: &str) -> Option<f64> {
    let cleaned: String = s.chars().filter(|c| !matches!(c, '$' | ',' | ' ')).collect();
    cleaned.parse::<f64>().ok().filter(|x| x.is_finite())
}

fn parse_fraction(s: &str) -> Option<f64> {
    let t = s.trim();
    let x = match t.strip_suffix('%') {
        Some(p) => p.trim().parse::<f64>().ok()? / 100.0,
        None => t.parse::<f64>().ok()?,
    };
    (x.is_finite() && (0.0..=1.0).contains(&x)).then_some(x)
}

pub fn load_csv_bytes(bytes: &[u8], source: &str, spec: &[ColumnSpec]) -> Result<RawDataset, IngestError> {
    let (text, encoding_fallbacks) = decode(bytes);
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(text.as_bytes());
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| IngestError::Csv(e.to_string()))?
        .iter()
        .map(normalize_header)
        .collect();
    let width = headers.len();

    // (spec index, source field index) for every recognized column.
    let mut mapping: Vec<(usize, usize)> = Vec::new();
    for (si, cs) in spec.iter().enumerate() {
        let want = [normalize_header(&cs.source_name), normalize_header(&cs.canonical_name)];
        match headers.iter().position(|h| want.contains(h)) {
            Some(fi) => mapping.push((si, fi)),
            None if cs.required => return Err(IngestError::MissingColumn(cs.canonical_name.clone())),
            None => {}
        }
    }

    let mut records = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| IngestError::Csv(e.to_string()))?;
        let line = rec.position().map_or(0, |p| p.line());
        records.push((line, rec));
    }

    // Lock a format per date column from the leading values.
    let formats: Vec<Option<DateFormat>> = mapping
        .iter()
        .map(|&(si, fi)| {
            (spec[si].kind == ColumnKind::Date)
                .then(|| dates::vote(records.iter().filter_map(|(_, r)| r.get(fi))))
                .flatten()
        })
        .collect();

    let mut rows = Vec::with_capacity(records.len());
    let mut rejected = Vec::new();
    'rows: for (line, rec) in &records {
        if rec.len() != width {
            rejected.push(RejectedRow {
                line: *line,
                reason: format!("expected {width} fields, found {}", rec.len()),
            });
            continue;
        }
        let mut row = Vec::with_capacity(mapping.len());
        for (m, &(si, fi)) in mapping.iter().enumerate() {
            let cs = &spec[si];
            let raw = rec.get(fi).unwrap_or("").trim();
            if raw.is_empty() {
                if cs.required {
                    rejected.push(RejectedRow { line: *line, reason: format!("{} is empty", cs.canonical_name) });
                    continue 'rows;
                }
                row.push(RawValue::Missing);
                continue;
            }
            let parsed = match cs.kind {
                ColumnKind::Text | ColumnKind::Categorical => Some(RawValue::Text(raw.to_string())),
                ColumnKind::Money => parse_number(raw).map(RawValue::Number),
                ColumnKind::Fraction => parse_fraction(raw).map(RawValue::Number),
                ColumnKind::Integer => raw.parse::<i64>().ok().map(RawValue::Integer),
                ColumnKind::Date => formats[m].and_then(|f| f.parse(raw)).map(RawValue::Date),
            };
            match parsed {
                Some(v) => row.push(v),
                None if cs.required => {
                    rejected.push(RejectedRow {
                        line: *line,
                        reason: format!("unparseable {} {raw:?}", cs.canonical_name),
                    });
                    continue 'rows;
                }
                None => row.push(RawValue::Missing),
            }
        }
        rows.push(row);
    }

    let total = records.len();
    let limit = reject_limit(total);
    if rejected.len() > limit {
        return Err(IngestError::TooManyBadRows { rejected: rejected.len(), total, limit });
    }

    Ok(RawDataset {
        source_path: source.to_string(),
        columns: mapping.iter().map(|&(si, _)| spec[si].clone()).collect(),
        row_count: rows.len(),
        rows,
        rejected,
        encoding_fallbacks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEADER: &str = "Row ID,Order ID,Order Date,Ship Date,Ship Mode,Customer ID,Customer Name,Segment,City,State,Country,Postal Code,Market,Region,Product ID,Category,Sub-Category,Product Name,Sales,Quantity,Discount,Profit,Shipping Cost,Order Priority";

    fn line(i: usize, date: &str) -> String {
        format!(
            "{i},O-{i},{date},05-01-2012,First Class,C-1,Ann Lee,Consumer,Paris,IDF,France,,EU,Central,P-{i},Furniture,Tables,\"Table, oak\",100.5,2,0.1,10.25,4.5,High"
        )
    }

    #[test]
    fn header_only_yields_empty_dataset() {
        let ds = load_csv_bytes(HEADER.as_bytes(), "mem", &default_columns()).unwrap();
        assert_eq!(ds.row_count, 0);
        assert!(ds.rejected.is_empty());
    }

    #[test]
    fn one_malformed_date_in_ten_rows() {
        let mut text = String::from(HEADER);
        for i in 0..10 {
            let date = if i == 6 { "31-13-2012" } else { "03-01-2012" };
            text.push('\n');
            text.push_str(&line(i, date));
        }
        let ds = load_csv_bytes(text.as_bytes(), "mem", &default_columns()).unwrap();
        assert_eq!(ds.row_count, 9);
        assert_eq!(ds.rejected.len(), 1);
        assert_eq!(ds.rejected[0].line, 8);
        assert!(ds.rejected[0].reason.contains("OrderDate"));
    }

    #[test]
    fn too_many_bad_rows() {
        let mut text = String::from(HEADER);
        for i in 0..10 {
            let date = if i < 2 { "nope" } else { "03-01-2012" };
            text.push('\n');
            text.push_str(&line(i, date));
        }
        let err = load_csv_bytes(text.as_bytes(), "mem", &default_columns()).unwrap_err();
        assert!(matches!(err, IngestError::TooManyBadRows { rejected: 2, total: 10, limit: 1 }));
    }

    #[test]
    fn headers_match_loosely() {
        let text = HEADER.replace("Sub-Category", " sub_category ").replace("Order ID", "ORDERID");
        let ds = load_csv_bytes(text.as_bytes(), "mem", &default_columns()).unwrap();
        assert!(ds.has_column("SubCategory"));
        assert!(ds.has_column("OrderID"));
        assert!(!ds.has_column("ShippingPayment"));
        assert!(ds.has_column("PostalCode"));
    }

    #[test]
    fn missing_mandatory_column() {
        let text = HEADER.replace(",Profit,", ",Margin,");
        let err = load_csv_bytes(text.as_bytes(), "mem", &default_columns()).unwrap_err();
        assert!(matches!(err, IngestError::MissingColumn(c) if c == "Profit"));
    }

    #[test]
    fn values_are_typed() {
        let text = format!("{HEADER}\n{}", line(1, "03-01-2012"));
        let ds = load_csv_bytes(text.as_bytes(), "mem", &default_columns()).unwrap();
        assert_eq!(ds.get(0, "Sales"), Some(&RawValue::Number(100.5)));
        assert_eq!(ds.get(0, "Quantity"), Some(&RawValue::Integer(2)));
        assert_eq!(ds.get(0, "ProductName"), Some(&RawValue::Text("Table, oak".into())));
        assert_eq!(ds.get(0, "PostalCode"), Some(&RawValue::Missing));
        assert_eq!(ds.get(0, "OrderDate").and_then(RawValue::as_date), NaiveDate::from_ymd_opt(2012, 1, 3));
    }

    #[test]
    fn lossy_decoding_counts_replacements() {
        let mut bytes = format!("{HEADER}\n").into_bytes();
        bytes.extend(line(1, "03-01-2012").replace("Ann Lee", "Ann L\u{1}e").into_bytes());
        let pos = bytes.iter().position(|&b| b == 1).unwrap();
        bytes[pos] = 0xE9; // Windows-1252 'é'
        let ds = load_csv_bytes(&bytes, "mem", &default_columns()).unwrap();
        assert_eq!(ds.encoding_fallbacks, 1);
        assert_eq!(ds.get(0, "CustomerName"), Some(&RawValue::Text("Ann L\u{FFFD}e".into())));
    }

    #[test]
    fn fractions_out_of_range_reject() {
        assert_eq!(parse_fraction("20%"), Some(0.2));
        assert_eq!(parse_fraction("1.5"), None);
        assert_eq!(parse_number("$1,234.50"), Some(1234.5));
        assert_eq!(parse_number("inf"), None);
    }

    #[test]
    fn missing_file() {
        let err = load_csv(Path::new("/definitely/not/here.csv"), &default_columns()).unwrap_err();
        assert!(matches!(err, IngestError::FileNotFound(_)));
    }
}
