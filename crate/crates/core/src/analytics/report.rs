use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{
    category_margins, discount_threshold, loyalty_concentration, market_matrix, shipping_subsidy, subcategory_losses,
    AnalyticsConfig, SUPER_LOYAL, TOTAL_ORDERS, TOTAL_SALES,
};
use crate::measure::{Evaluator, MeasureCatalog, MeasureExpr};
use crate::model::{PaymentSource, StarSchema};

/// Number of order lines in the official Global Superstore file.
pub const OFFICIAL_ROWS: usize = 51_290;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FindingStatus {
    Match,
    Mismatch,
    NotComparable,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Unit {
    Usd,
    /// A fraction such as a margin or a share.
    Ratio,
    Count,
    /// 1 for yes, 0 for no.
    Flag,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Finding {
    pub id: String,
    pub description: String,
    pub value: Option<f64>,
    pub unit: Unit,
    pub expected: Option<f64>,
    pub tolerance: Option<f64>,
    pub status: FindingStatus,
    /// Why the finding is not comparable, when it is not.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Expectation {
    pub expected: f64,
    pub tolerance: f64,
}

/// Expected values plus the conditions under which they apply.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct Expectations {
    /// When set, findings are only comparable on a dataset with exactly this
    /// many fact rows.
    #[serde(default)]
    pub dataset_rows: Option<usize>,
    /// When set, shipping and loyalty findings are only comparable with a
    /// calibrated fee table and loyalty threshold.
    #[serde(default)]
    pub require_calibration: bool,
    #[serde(default)]
    pub findings: BTreeMap<String, Expectation>,
}

const fn exp(expected: f64, tolerance: f64) -> Expectation {
    Expectation { expected, tolerance }
}

impl Expectations {
    /// The published figures.
    pub fn published() -> Self {
        let findings = [
            ("kpi.total_sales", exp(12.64e6, 12.64e6 * 0.005)),
            ("kpi.orders", exp(25_035.0, 0.0)),
            ("kpi.customers", exp(1_590.0, 0.0)),
            ("kpi.skus", exp(10_292.0, 0.0)),
            ("margin.overall", exp(0.116, 0.003)),
            ("margin.furniture", exp(0.0694, 0.002)),
            ("margin.office_supplies", exp(0.1317, 0.002)),
            ("margin.technology", exp(0.1399, 0.002)),
            ("market.apac.sales", exp(3.59e6, 3.59e6 * 0.01)),
            ("market.apac.margin", exp(0.125, 0.003)),
            ("market.emea.sales", exp(2.94e6, 2.94e6 * 0.01)),
            ("market.emea.margin", exp(0.068, 0.003)),
            ("market.apac_margin_advantage", exp(0.84, 0.10)),
            ("discount.threshold", exp(0.20, 1e-9)),
            ("discount.levels_above_20pct_not_negative", exp(0.0, 0.0)),
            ("shipping.total_subsidy", exp(1.35e6, 1.35e6 * 0.01)),
            ("shipping.first_class_subsidy", exp(0.47e6, 0.47e6 * 0.01)),
            ("shipping.worst_mode_is_first_class", exp(1.0, 0.0)),
            ("shipping.modes_at_loss", exp(4.0, 0.0)),
            ("subcategory.tables.loss_share", exp(0.44, 0.05)),
            ("subcategory.tables.sku_share", exp(0.23, 0.03)),
            ("loyalty.super_loyal.customer_share", exp(0.55, 0.05)),
            ("loyalty.super_loyal.profit_share", exp(0.92, 0.05)),
            ("loyalty.super_loyal.customers", exp(879.0, 80.0)),
        ];
        Expectations {
            dataset_rows: Some(OFFICIAL_ROWS),
            require_calibration: true,
            findings: findings.into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetFingerprint {
    pub source: String,
    pub rows: usize,
    pub orders: f64,
    pub customers: f64,
    pub skus: f64,
    /// SHA-256 of the snapshot encoding.
    pub checksum: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FindingsReport {
    pub fingerprint: DatasetFingerprint,
    pub findings: Vec<Finding>,
    pub generated_at: String,
}

#[derive(Clone, Copy, PartialEq)]
enum Gate {
    Dataset,
    Shipping,
    Loyalty,
}

struct Draft {
    id: &'static str,
    description: &'static str,
    unit: Unit,
    value: Result<f64, String>,
    gate: Gate,
}

fn draft(id: &'static str, description: &'static str, unit: Unit, gate: Gate, value: Result<f64, String>) -> Draft {
    Draft { id, description, unit, value, gate }
}

fn missing(what: &str) -> String {
    format!("{what} not present in the data")
}

/// Runs every diagnostic and compares against the published figures.
pub fn build_findings_report(
    schema: &StarSchema,
    catalog: &MeasureCatalog,
    config: &AnalyticsConfig,
) -> FindingsReport {
    build_findings_report_with(schema, catalog, config, &Expectations::published())
}

pub fn build_findings_report_with(
    schema: &StarSchema,
    catalog: &MeasureCatalog,
    config: &AnalyticsConfig,
    expectations: &Expectations,
) -> FindingsReport {
    let mut c = catalog.clone();
    for (name, src) in [
        ("__customers", "DISTINCTCOUNT(Customer[CustomerID])"),
        ("__skus", "DISTINCTCOUNT(Product[ProductID])"),
    ] {
        if !c.contains(name) {
            c.register(name, src).expect("valid measure");
        }
    }
    let ev = Evaluator::new(schema, &c);
    let all = schema.all_rows();
    let kpi = |name: &str| -> Result<f64, String> {
        ev.scalar(&MeasureExpr::measure(name), &all)
            .map_err(|e| e.to_string())?
            .ok_or_else(|| format!("{name} is undefined"))
    };
    let orders = kpi(TOTAL_ORDERS);
    let customers = kpi("__customers");
    let skus = kpi("__skus");

    use Gate::*;
    use Unit::*;
    let mut drafts = vec![
        draft("kpi.total_sales", "Total sales", Usd, Dataset, kpi(TOTAL_SALES)),
        draft("kpi.orders", "Distinct orders", Count, Dataset, orders.clone()),
        draft("kpi.customers", "Distinct customers", Count, Dataset, customers.clone()),
        draft("kpi.skus", "Distinct product SKUs", Count, Dataset, skus.clone()),
    ];

    match category_margins(schema, &c) {
        Ok(m) => {
            let cat = |name: &str| m.get(name).ok_or_else(|| missing(name));
            drafts.extend([
                draft("margin.overall", "Overall profit margin", Ratio, Dataset, Ok(m.overall)),
                draft("margin.furniture", "Furniture profit margin", Ratio, Dataset, cat("Furniture")),
                draft("margin.office_supplies", "Office Supplies profit margin", Ratio, Dataset, cat("Office Supplies")),
                draft("margin.technology", "Technology profit margin", Ratio, Dataset, cat("Technology")),
            ]);
        }
        Err(e) => {
            for (id, d) in [
                ("margin.overall", "Overall profit margin"),
                ("margin.furniture", "Furniture profit margin"),
                ("margin.office_supplies", "Office Supplies profit margin"),
                ("margin.technology", "Technology profit margin"),
            ] {
                drafts.push(draft(id, d, Ratio, Dataset, Err(e.to_string())));
            }
        }
    }

    let markets = market_matrix(schema, &c).map_err(|e| e.to_string());
    let market = |name: &str| -> Result<super::MarketRow, String> {
        let rows = markets.as_ref().map_err(Clone::clone)?;
        rows.iter().find(|r| r.market == name).cloned().ok_or_else(|| missing(name))
    };
    let (apac, emea) = (market("APAC"), market("EMEA"));
    let advantage = match (&apac, &emea) {
        (Ok(a), Ok(e)) if e.margin != 0.0 => Ok(a.margin / e.margin - 1.0),
        (Ok(_), Ok(_)) => Err("EMEA margin is zero".to_string()),
        (Err(e), _) | (_, Err(e)) => Err(e.clone()),
    };
    drafts.extend([
        draft("market.apac.sales", "APAC sales", Usd, Dataset, apac.clone().map(|m| m.sales)),
        draft("market.apac.margin", "APAC profit margin", Ratio, Dataset, apac.map(|m| m.margin)),
        draft("market.emea.sales", "EMEA sales", Usd, Dataset, emea.clone().map(|m| m.sales)),
        draft("market.emea.margin", "EMEA profit margin", Ratio, Dataset, emea.map(|m| m.margin)),
        draft(
            "market.apac_margin_advantage",
            "APAC margin relative to EMEA, minus one",
            Ratio,
            Dataset,
            advantage,
        ),
    ]);

    let discount = discount_threshold(schema, &c).map_err(|e| e.to_string());
    drafts.push(draft(
        "discount.threshold",
        "Highest discount level with non-negative profit per order at every level up to it",
        Ratio,
        Dataset,
        discount
            .as_ref()
            .map_err(Clone::clone)
            .and_then(|d| d.threshold.ok_or_else(|| "lowest discount level already loses money".to_string())),
    ));
    drafts.push(draft(
        "discount.levels_above_20pct_not_negative",
        "Discount levels above 20% whose average profit per order is not negative",
        Count,
        Dataset,
        discount.as_ref().map_err(Clone::clone).map(|d| {
            d.series.iter().filter(|l| l.discount > 0.20 && !(l.avg_profit_per_order < 0.0)).count() as f64
        }),
    ));

    let shipping = shipping_subsidy(schema, &c).map_err(|e| e.to_string());
    let ship = |f: &dyn Fn(&super::ShippingReport) -> Result<f64, String>| shipping.as_ref().map_err(Clone::clone).and_then(f);
    drafts.extend([
        draft("shipping.total_subsidy", "Unrecovered shipping cost, all modes", Usd, Shipping, ship(&|s| Ok(s.total))),
        draft(
            "shipping.first_class_subsidy",
            "Unrecovered shipping cost, First Class",
            Usd,
            Shipping,
            ship(&|s| s.modes.iter().find(|m| m.mode == "First Class").map(|m| m.subsidy).ok_or_else(|| missing("First Class"))),
        ),
        draft(
            "shipping.worst_mode_is_first_class",
            "First Class carries the largest subsidy (1 = yes)",
            Flag,
            Shipping,
            ship(&|s| Ok(f64::from(u8::from(s.worst.as_deref() == Some("First Class"))))),
        ),
        draft(
            "shipping.modes_at_loss",
            "Ship modes with a positive subsidy",
            Count,
            Shipping,
            ship(&|s| Ok(s.modes.iter().filter(|m| m.subsidy > 0.0).count() as f64)),
        ),
    ]);

    let tables = subcategory_losses(schema, &c, "Furniture")
        .map_err(|e| e.to_string())
        .and_then(|rows| rows.into_iter().find(|r| r.sub_category == "Tables").ok_or_else(|| missing("Tables")));
    drafts.extend([
        draft(
            "subcategory.tables.loss_share",
            "Tables share of Furniture sub-category net losses",
            Ratio,
            Dataset,
            tables.clone().and_then(|t| t.loss_share.ok_or_else(|| "no Furniture sub-category loses money".to_string())),
        ),
        draft(
            "subcategory.tables.sku_share",
            "Tables share of Furniture SKUs",
            Ratio,
            Dataset,
            tables.map(|t| t.sku_share),
        ),
    ]);

    let loyal = loyalty_concentration(schema, &c, &config.segmentation())
        .map_err(|e| e.to_string())
        .and_then(|s| s.into_iter().find(|s| s.segment == SUPER_LOYAL).ok_or_else(|| missing(SUPER_LOYAL)));
    drafts.extend([
        draft(
            "loyalty.super_loyal.customer_share",
            "Super Loyal share of customers",
            Ratio,
            Loyalty,
            loyal.clone().map(|s| s.customer_share),
        ),
        draft(
            "loyalty.super_loyal.profit_share",
            "Super Loyal share of total profit",
            Ratio,
            Loyalty,
            loyal.clone().and_then(|s| s.profit_share.ok_or_else(|| "total profit is zero".to_string())),
        ),
        draft(
            "loyalty.super_loyal.customers",
            "Super Loyal customers",
            Count,
            Loyalty,
            loyal.map(|s| s.customers as f64),
        ),
    ]);

    let rows = schema.row_count();
    let dataset_note = if rows == 0 {
        Some("dataset is empty".to_string())
    } else {
        expectations
            .dataset_rows
            .filter(|&n| n != rows)
            .map(|n| format!("dataset variant differs: {rows} order lines, expected {n}"))
    };
    let fees_calibrated = matches!(schema.meta().payment_source, PaymentSource::FeeTable { calibrated: true });
    let gate_note = |gate: Gate| -> Option<String> {
        if let Some(n) = &dataset_note {
            return Some(n.clone());
        }
        if !expectations.require_calibration {
            return None;
        }
        match gate {
            Gate::Shipping if !fees_calibrated => Some(match schema.meta().payment_source {
                PaymentSource::Column => "shipping payments come from the source file, not the calibrated fee table".into(),
                _ => "shipping fee table is not calibrated".into(),
            }),
            Gate::Loyalty if !config.loyalty.calibrated => Some("loyalty threshold is not calibrated".into()),
            _ => None,
        }
    };

    let findings = drafts
        .into_iter()
        .map(|d| {
            let e = expectations.findings.get(d.id);
            let (value, mut note) = match d.value {
                Ok(v) if rows > 0 => (Some(v), None),
                Ok(_) => (None, None),
                Err(msg) => (None, Some(msg)),
            };
            if note.is_none() {
                note = gate_note(d.gate);
            }
            if note.is_none() && e.is_none() {
                note = Some("no expected value".into());
            }
            let status = match (value, e, &note) {
                (Some(v), Some(e), None) if (v - e.expected).abs() <= e.tolerance => FindingStatus::Match,
                (Some(_), Some(_), None) => FindingStatus::Mismatch,
                _ => FindingStatus::NotComparable,
            };
            Finding {
                id: d.id.to_string(),
                description: d.description.to_string(),
                value,
                unit: d.unit,
                expected: e.map(|e| e.expected),
                tolerance: e.map(|e| e.tolerance),
                status,
                note,
            }
        })
        .collect();

    FindingsReport {
        fingerprint: DatasetFingerprint {
            source: schema.meta().source.clone(),
            rows,
            orders: orders.unwrap_or(0.0),
            customers: customers.unwrap_or(0.0),
            skus: skus.unwrap_or(0.0),
            checksum: crate::snapshot::fingerprint(schema),
        },
        findings,
        generated_at: now_rfc3339(),
    }
}

fn now_rfc3339() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
}

fn group_thousands(int_part: &str) -> String {
    let (sign, digits) = int_part.strip_prefix('-').map_or(("", int_part), |d| ("-", d));
    let mut out = String::new();
    for (i, ch) in digits.chars().enumerate() {
        if i > 0 && (digits.len() - i) % 3 == 0 {
            out.push(',');
        }
        out.push(ch);
    }
    format!("{sign}{out}")
}

/// Presentation formatting: money to cents (half away from zero), ratios as
/// percentages.
pub fn format_value(unit: Unit, v: f64) -> String {
    match unit {
        Unit::Usd => {
            let cents = (v * 100.0).round() / 100.0;
            let s = format!("{cents:.2}");
            let (int, frac) = s.split_once('.').unwrap_or((&s, "00"));
            format!("${}.{frac}", group_thousands(int))
        }
        Unit::Ratio => format!("{:.2}%", v * 100.0),
        Unit::Count => group_thousands(&format!("{v:.0}")),
        Unit::Flag => if v != 0.0 { "yes" } else { "no" }.to_string(),
    }
}

impl FindingsReport {
    pub fn get(&self, id: &str) -> Option<&Finding> {
        self.findings.iter().find(|f| f.id == id)
    }

    pub fn count(&self, status: FindingStatus) -> usize {
        self.findings.iter().filter(|f| f.status == status).count()
    }

    pub fn mismatches(&self) -> Vec<&Finding> {
        self.findings.iter().filter(|f| f.status == FindingStatus::Mismatch).collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_text(&self) -> String {
        let fp = &self.fingerprint;
        let mut out = String::new();
        writeln!(out, "Findings for {}", if fp.source.is_empty() { "(unnamed dataset)" } else { &fp.source }).unwrap();
        writeln!(
            out,
            "  {} order lines, {} orders, {} customers, {} SKUs",
            group_thousands(&fp.rows.to_string()),
            format_value(Unit::Count, fp.orders),
            format_value(Unit::Count, fp.customers),
            format_value(Unit::Count, fp.skus)
        )
        .unwrap();
        writeln!(out, "  sha256 {}", fp.checksum).unwrap();
        writeln!(out, "  generated {}", self.generated_at).unwrap();
        writeln!(out).unwrap();

        let cells: Vec<[String; 5]> = self
            .findings
            .iter()
            .map(|f| {
                let fmt = |v: Option<f64>| v.map_or("-".to_string(), |v| format_value(f.unit, v));
                let tol = match (f.unit, f.tolerance) {
                    (_, None) => "-".to_string(),
                    (Unit::Ratio, Some(t)) => format!("±{:.2}pp", t * 100.0),
                    (u, Some(t)) => format!("±{}", format_value(u, t)),
                };
                let status = match f.status {
                    FindingStatus::Match => "match",
                    FindingStatus::Mismatch => "MISMATCH",
                    FindingStatus::NotComparable => "not-comparable",
                };
                [f.id.clone(), fmt(f.value), fmt(f.expected), tol, status.to_string()]
            })
            .collect();
        let header = ["finding", "value", "expected", "tolerance", "status"];
        let mut width = header.map(|h| h.chars().count());
        for row in &cells {
            for (w, c) in width.iter_mut().zip(row) {
                *w = (*w).max(c.chars().count());
            }
        }
        let line = |out: &mut String, row: [&str; 5]| {
            let mut s = String::new();
            for (i, c) in row.iter().enumerate() {
                let pad = width[i] - c.chars().count();
                if i == 0 || i == 4 {
                    s.push_str(c);
                    s.push_str(&" ".repeat(pad));
                } else {
                    s.push_str(&" ".repeat(pad));
                    s.push_str(c);
                }
                if i < 4 {
                    s.push_str("  ");
                }
            }
            writeln!(out, "{}", s.trim_end()).unwrap();
        };
        line(&mut out, header);
        for row in &cells {
            line(&mut out, [&row[0], &row[1], &row[2], &row[3], &row[4]]);
        }
        writeln!(out).unwrap();
        writeln!(
            out,
            "{} match, {} mismatch, {} not comparable",
            self.count(FindingStatus::Match),
            self.count(FindingStatus::Mismatch),
            self.count(FindingStatus::NotComparable)
        )
        .unwrap();
        let mut notes: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
        for f in &self.findings {
            if let Some(n) = &f.note {
                notes.entry(n).or_default().push(&f.id);
            }
        }
        for (note, ids) in notes {
            writeln!(out, "  note: {note} ({})", ids.join(", ")).unwrap();
        }
        out
    }
}
