use std::collections::HashSet;

use indexmap::IndexMap;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::ast::MeasureExpr;
use super::{parse, MeasureError};

/// The seven built-in measures, in catalog order.
pub const BUILTIN_MEASURES: [(&str, &str); 7] = [
    ("Total Sales", "SUM(Sales)"),
    ("Total Profit", "SUM(Profit)"),
    ("Total Orders", "DISTINCTCOUNT(OrderID)"),
    ("Profit Margin %", "DIVIDE(SUM(Profit), SUM(Sales), 0)"),
    ("Avg Profit per Order", "DIVIDE([Total Profit], [Total Orders], 0)"),
    ("Shipping Subsidy", "SUM(ShippingCost) - SUM(ShippingPayment)"),
    ("Total Loss", "CALCULATE(SUM(Profit), Profit < 0)"),
];

const V1: &[&str] = &["Total Sales", "Total Orders"];
const V2: &[&str] = &["Total Sales", "Total Profit", "Total Orders", "Profit Margin %", "Avg Profit per Order"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CatalogEntry {
    pub name: String,
    /// Source text as registered.
    pub expression: String,
    #[serde(skip)]
    pub expr: Option<MeasureExpr>,
}

impl CatalogEntry {
    pub fn expr(&self) -> &MeasureExpr {
        self.expr.as_ref().expect("catalog entries are parsed on registration")
    }
}

/// Named measures in registration order. References to measures not yet
/// registered are allowed; reference cycles are rejected on registration.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MeasureCatalog {
    entries: IndexMap<String, CatalogEntry>,
}

impl MeasureCatalog {
    pub fn new() -> Self {
        Self::default()
    }

    /// The full seven-measure catalog.
    pub fn builtin() -> Self {
        let mut c = MeasureCatalog::new();
        for (name, src) in BUILTIN_MEASURES {
            c.register(name, src).expect("builtin measures are valid");
        }
        c
    }

    /// The built-in subset used by a dashboard version (`v1`..`v4`).
    pub fn for_version(version: &str) -> Option<Self> {
        let all = Self::builtin();
        match version.to_ascii_lowercase().as_str() {
            "v1" => Some(all.subset(V1)),
            "v2" | "v3" => Some(all.subset(V2)),
            "v4" => Some(all),
            _ => None,
        }
    }

    pub fn register(&mut self, name: &str, source: &str) -> Result<&CatalogEntry, MeasureError> {
        if self.entries.contains_key(name) {
            return Err(MeasureError::DuplicateMeasure(name.to_string()));
        }
        let expr = parse(source)?;
        let entry = CatalogEntry { name: name.to_string(), expression: source.to_string(), expr: Some(expr) };
        self.entries.insert(name.to_string(), entry);
        if let Some(cycle) = self.find_cycle(name) {
            self.entries.shift_remove(name);
            return Err(MeasureError::CycleDetected(cycle));
        }
        Ok(&self.entries[name])
    }

    fn find_cycle(&self, start: &str) -> Option<Vec<String>> {
        fn dfs(c: &MeasureCatalog, name: &str, path: &mut Vec<String>, done: &mut HashSet<String>) -> bool {
            if let Some(i) = path.iter().position(|p| p == name) {
                path.drain(..i);
                path.push(name.to_string());
                return true;
            }
            if done.contains(name) {
                return false;
            }
            let Some(e) = c.get(name) else { return false };
            path.push(name.to_string());
            for r in e.expr().measure_refs() {
                if dfs(c, r, path, done) {
                    return true;
                }
            }
            path.pop();
            done.insert(name.to_string());
            false
        }
        let mut path = Vec::new();
        dfs(self, start, &mut path, &mut HashSet::new()).then_some(path)
    }

    pub fn get(&self, name: &str) -> Option<&CatalogEntry> {
        self.entries.get(name)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.entries.contains_key(name)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn entries(&self) -> impl Iterator<Item = &CatalogEntry> {
        self.entries.values()
    }

    /// Entries named in `names`, in catalog order. Unknown names are skipped.
    pub fn subset(&self, names: &[&str]) -> Self {
        MeasureCatalog {
            entries: self
                .entries
                .iter()
                .filter(|(k, _)| names.contains(&k.as_str()))
                .map(|(k, v)| (k.clone(), v.clone()))
                .collect(),
        }
    }

    /// Measure references that do not resolve within this catalog, as
    /// `(referencing measure, missing name)` pairs.
    pub fn dangling_refs(&self) -> Vec<(String, String)> {
        let mut out = Vec::new();
        for e in self.entries.values() {
            for r in e.expr().measure_refs() {
                if !self.contains(r) {
                    out.push((e.name.clone(), r.to_string()));
                }
            }
        }
        out
    }
}

impl Serialize for MeasureCatalog {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(self.entries.values())
    }
}

impl<'de> Deserialize<'de> for MeasureCatalog {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw = Vec::<CatalogEntry>::deserialize(d)?;
        let mut c = MeasureCatalog::new();
        for e in raw {
            c.register(&e.name, &e.expression).map_err(serde::de::Error::custom)?;
        }
        Ok(c)
    }
}
