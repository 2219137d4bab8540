//! `SBRD` binary columnar snapshots.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! magic        b"SBRD"
//! version      u16
//! reserved     u16
//! meta_len     u32, then meta_len bytes of JSON (provenance + relationships)
//! table_count  u32
//! directory    per table: name, row_count u64, key_column (empty = none), column_count u32,
//!              per column: name, kind u8, encoding u8, offset u64, byte_len u64
//! data         column payloads; offsets are relative to the start of this section
//! ```
//!
//! Strings are `u32` byte length + UTF-8. Column payloads by encoding:
//! dictionary = `u32` entry count, entries, then one `u32` code per row;
//! float = `f64` per row; int = `i64` per row; date = `i32` per row.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::model::{Column, ColumnData, ColumnKind, ColumnTable, ModelError, Relationship, SchemaMeta, StarSchema};

pub const MAGIC: &[u8; 4] = b"SBRD";
pub const FORMAT_VERSION: u16 = 1;

const ENC_DICTIONARY: u8 = 0;
const ENC_FLOAT: u8 = 1;
const ENC_INT: u8 = 2;
const ENC_DATE: u8 = 3;

#[derive(Debug, thiserror::Error)]
pub enum SnapshotError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("not a snapshot (bad magic bytes)")]
    BadMagic,
    #[error("unsupported snapshot version {0}")]
    UnsupportedVersion(u16),
    #[error("corrupt snapshot: {0}")]
    Corrupt(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Serialize, Deserialize)]
struct Meta {
    meta: SchemaMeta,
    relationships: Vec<Relationship>,
}

struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    fn u8(&mut self, v: u8) {
        self.buf.push(v);
    }
    fn u16(&mut self, v: u16) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
    fn u32(&mut self, v: u32) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
    fn u64(&mut self, v: u64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
    fn str(&mut self, s: &str) {
        self.u32(s.len() as u32);
        self.buf.extend_from_slice(s.as_bytes());
    }
}

fn encode_column(c: &Column, out: &mut Vec<u8>) -> u8 {
    match &c.data {
        ColumnData::Dictionary { dict, codes } => {
            out.extend_from_slice(&(dict.len() as u32).to_le_bytes());
            for s in dict {
                out.extend_from_slice(&(s.len() as u32).to_le_bytes());
                out.extend_from_slice(s.as_bytes());
            }
            for c in codes {
                out.extend_from_slice(&c.to_le_bytes());
            }
            ENC_DICTIONARY
        }
        ColumnData::Float(v) => {
            for x in v {
                out.extend_from_slice(&x.to_le_bytes());
            }
            ENC_FLOAT
        }
        ColumnData::Int(v) => {
            for x in v {
                out.extend_from_slice(&x.to_le_bytes());
            }
            ENC_INT
        }
        ColumnData::Date(v) => {
            for x in v {
                out.extend_from_slice(&x.to_le_bytes());
            }
            ENC_DATE
        }
    }
}

pub fn to_bytes(schema: &StarSchema) -> Vec<u8> {
    let mut data = Vec::new();
    let mut dir = Writer { buf: Vec::new() };
    let tables: Vec<&ColumnTable> = schema.tables().collect();
    dir.u32(tables.len() as u32);
    for t in &tables {
        dir.str(t.name());
        dir.u64(t.row_count() as u64);
        dir.str(t.key_column().unwrap_or(""));
        dir.u32(t.columns().len() as u32);
        for c in t.columns() {
            let offset = data.len() as u64;
            let enc = encode_column(c, &mut data);
            dir.str(&c.name);
            dir.u8(c.kind.tag());
            dir.u8(enc);
            dir.u64(offset);
            dir.u64(data.len() as u64 - offset);
        }
    }
    let meta = serde_json::to_vec(&Meta {
        meta: schema.meta().clone(),
        relationships: schema.relationships().to_vec(),
    })
    .expect("meta serializes");

    let mut w = Writer { buf: Vec::with_capacity(16 + meta.len() + dir.buf.len() + data.len()) };
    w.buf.extend_from_slice(MAGIC);
    w.u16(FORMAT_VERSION);
    w.u16(0);
    w.u32(meta.len() as u32);
    w.buf.extend_from_slice(&meta);
    w.buf.extend_from_slice(&dir.buf);
    w.buf.extend_from_slice(&data);
    w.buf
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], SnapshotError> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len());
        let end = end.ok_or_else(|| SnapshotError::Corrupt(format!("truncated at byte {}", self.pos)))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }
    fn u8(&mut self) -> Result<u8, SnapshotError> {
        Ok(self.take(1)?[0])
    }
    fn u16(&mut self) -> Result<u16, SnapshotError> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }
    fn u32(&mut self) -> Result<u32, SnapshotError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn u64(&mut self) -> Result<u64, SnapshotError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn str(&mut self) -> Result<String, SnapshotError> {
        let n = self.u32()? as usize;
        String::from_utf8(self.take(n)?.to_vec()).map_err(|_| SnapshotError::Corrupt("invalid utf-8".into()))
    }
}

fn fixed<const N: usize, T>(bytes: &[u8], rows: usize, f: fn([u8; N]) -> T) -> Result<Vec<T>, SnapshotError> {
    if bytes.len() != rows * N {
        return Err(SnapshotError::Corrupt(format!("column payload {} bytes, expected {}", bytes.len(), rows * N)));
    }
    Ok(bytes.chunks_exact(N).map(|c| f(c.try_into().unwrap())).collect())
}

fn decode_column(enc: u8, bytes: &[u8], rows: usize) -> Result<ColumnData, SnapshotError> {
    Ok(match enc {
        ENC_DICTIONARY => {
            let mut r = Reader { buf: bytes, pos: 0 };
            let n = r.u32()? as usize;
            let mut dict = Vec::with_capacity(n);
            for _ in 0..n {
                dict.push(r.str()?);
            }
            let codes = fixed(&bytes[r.pos..], rows, u32::from_le_bytes)?;
            if codes.iter().any(|&c| c != crate::model::MISSING_CODE && c as usize >= n) {
                return Err(SnapshotError::Corrupt("dictionary code out of range".into()));
            }
            ColumnData::Dictionary { dict, codes }
        }
        ENC_FLOAT => ColumnData::Float(fixed(bytes, rows, f64::from_le_bytes)?),
        ENC_INT => ColumnData::Int(fixed(bytes, rows, i64::from_le_bytes)?),
        ENC_DATE => ColumnData::Date(fixed(bytes, rows, i32::from_le_bytes)?),
        other => return Err(SnapshotError::Corrupt(format!("unknown encoding {other}"))),
    })
}

pub fn from_bytes(buf: &[u8]) -> Result<StarSchema, SnapshotError> {
    let mut r = Reader { buf, pos: 0 };
    if r.take(4).map_err(|_| SnapshotError::BadMagic)? != MAGIC {
        return Err(SnapshotError::BadMagic);
    }
    let version = r.u16()?;
    if version != FORMAT_VERSION {
        return Err(SnapshotError::UnsupportedVersion(version));
    }
    r.u16()?;
    let meta_len = r.u32()? as usize;
    let meta: Meta = serde_json::from_slice(r.take(meta_len)?)
        .map_err(|e| SnapshotError::Corrupt(format!("metadata: {e}")))?;

    struct Entry {
        name: String,
        kind: ColumnKind,
        enc: u8,
        offset: usize,
        len: usize,
    }
    let table_count = r.u32()?;
    let mut directory = Vec::new();
    for _ in 0..table_count {
        let name = r.str()?;
        let rows = r.u64()? as usize;
        let key = r.str()?;
        let ncols = r.u32()?;
        let mut cols = Vec::new();
        for _ in 0..ncols {
            let cname = r.str()?;
            let kind = ColumnKind::from_tag(r.u8()?)
                .ok_or_else(|| SnapshotError::Corrupt("unknown column kind".into()))?;
            let enc = r.u8()?;
            let offset = r.u64()? as usize;
            let len = r.u64()? as usize;
            cols.push(Entry { name: cname, kind, enc, offset, len });
        }
        directory.push((name, rows, key, cols));
    }
    let data = &buf[r.pos..];

    let mut tables = Vec::with_capacity(directory.len());
    for (name, rows, key, cols) in directory {
        let mut columns = Vec::with_capacity(cols.len());
        for e in cols {
            let bytes = data
                .get(e.offset..e.offset.saturating_add(e.len))
                .ok_or_else(|| SnapshotError::Corrupt(format!("column {name}[{}] out of bounds", e.name)))?;
            columns.push(Column::new(e.name, e.kind, decode_column(e.enc, bytes, rows)?));
        }
        let key = (!key.is_empty()).then_some(key);
        tables.push(ColumnTable::new(name, columns, key)?);
    }
    let mut tables = tables.into_iter();
    let fact = tables.next().ok_or_else(|| SnapshotError::Corrupt("no fact table".into()))?;
    Ok(StarSchema::new(fact, tables.collect(), meta.relationships, meta.meta)?)
}

pub fn save(schema: &StarSchema, path: &Path) -> Result<(), SnapshotError> {
    std::fs::write(path, to_bytes(schema))?;
    Ok(())
}

pub fn load(path: &Path) -> Result<StarSchema, SnapshotError> {
    from_bytes(&std::fs::read(path)?)
}

/// SHA-256 of the snapshot encoding, hex encoded.
pub fn fingerprint(schema: &StarSchema) -> String {
    hex::encode(Sha256::digest(to_bytes(schema)))
}
