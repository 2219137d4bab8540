//! Profitability diagnostics: category and market margins, the discount
//! threshold, shipping subsidies, sub-category losses and loyalty
//! concentration, plus the findings report that checks them against the
//! published figures.

mod calibrate;
mod config;
mod report;

use serde::{Deserialize, Serialize};

pub use calibrate::{calibrate_fee_table, calibrate_loyalty, CalibrationError, FeeTargets, LoyaltyCalibration};
pub use config::{AnalyticsConfig, LoyaltyConfig};
pub use report::{
    build_findings_report, build_findings_report_with, DatasetFingerprint, Expectation, Expectations, Finding,
    FindingStatus, FindingsReport, Unit,
};

use crate::ingest::{tables, FACT_TABLE};
use crate::measure::MeasureCatalog;
use crate::model::{FilterContext, Predicate, StarSchema};
use crate::query::{self, BinMode, GroupQuery, QueryError};
use crate::value::Value;

pub const TOTAL_SALES: &str = "Total Sales";
pub const TOTAL_PROFIT: &str = "Total Profit";
pub const TOTAL_ORDERS: &str = "Total Orders";
pub const PROFIT_MARGIN: &str = "Profit Margin %";
pub const AVG_PROFIT_PER_ORDER: &str = "Avg Profit per Order";
pub const SHIPPING_SUBSIDY: &str = "Shipping Subsidy";

#[derive(Debug, thiserror::Error)]
pub enum AnalyticsError {
    #[error(transparent)]
    Query(#[from] QueryError),
    #[error("fewer than two distinct discount levels")]
    NoDiscountVariation,
    #[error("unknown category {0:?}")]
    UnknownCategory(String),
}

type Result<T> = std::result::Result<T, AnalyticsError>;

fn text_key(v: &Value) -> String {
    v.as_str().map_or_else(|| v.to_string(), str::to_string)
}

fn cell(row: &query::ResultRow, i: usize) -> f64 {
    row.values[i].unwrap_or(f64::NAN)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryMargins {
    pub overall: f64,
    /// `(category, margin)` in ascending category order.
    pub by_category: Vec<(String, f64)>,
}

impl CategoryMargins {
    pub fn get(&self, category: &str) -> Option<f64> {
        self.by_category.iter().find(|(c, _)| c == category).map(|(_, m)| *m)
    }
}

pub fn category_margins(schema: &StarSchema, catalog: &MeasureCatalog) -> Result<CategoryMargins> {
    let q = GroupQuery::new(&[PROFIT_MARGIN]).group_by(tables::PRODUCT, "Category");
    let r = query::run(schema, catalog, &q)?;
    Ok(CategoryMargins {
        overall: r.total[0].unwrap_or(f64::NAN),
        by_category: r.rows.iter().map(|row| (text_key(&row.keys[0]), cell(row, 0))).collect(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarketRow {
    pub market: String,
    pub sales: f64,
    pub profit: f64,
    pub margin: f64,
    pub order_count: f64,
}

/// One row per market: the bubble-chart dataset.
pub fn market_matrix(schema: &StarSchema, catalog: &MeasureCatalog) -> Result<Vec<MarketRow>> {
    let q = GroupQuery::new(&[TOTAL_SALES, TOTAL_PROFIT, PROFIT_MARGIN, TOTAL_ORDERS]).group_by(tables::GEOGRAPHY, "Market");
    let r = query::run(schema, catalog, &q)?;
    Ok(r.rows
        .iter()
        .map(|row| MarketRow {
            market: text_key(&row.keys[0]),
            sales: cell(row, 0),
            profit: cell(row, 1),
            margin: cell(row, 2),
            order_count: cell(row, 3),
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscountLevel {
    pub discount: f64,
    pub total_sales: f64,
    pub avg_profit_per_order: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscountAnalysis {
    /// Ascending by discount.
    pub series: Vec<DiscountLevel>,
    /// Largest level `d` such that every level up to and including `d` has
    /// non-negative average profit per order; `None` if the lowest level is
    /// already negative.
    pub threshold: Option<f64>,
}

pub fn discount_threshold(schema: &StarSchema, catalog: &MeasureCatalog) -> Result<DiscountAnalysis> {
    let q = GroupQuery::new(&[TOTAL_SALES, AVG_PROFIT_PER_ORDER]).bin(FACT_TABLE, "Discount", BinMode::DistinctValues);
    let r = query::run_binned(schema, catalog, &q)?;
    let series: Vec<DiscountLevel> = r
        .rows
        .iter()
        .filter_map(|row| {
            Some(DiscountLevel {
                discount: row.keys[0].as_f64()?,
                total_sales: cell(row, 0),
                avg_profit_per_order: cell(row, 1),
            })
        })
        .collect();
    if series.len() < 2 {
        return Err(AnalyticsError::NoDiscountVariation);
    }
    let threshold = series
        .iter()
        .take_while(|l| l.avg_profit_per_order >= 0.0)
        .last()
        .map(|l| l.discount);
    Ok(DiscountAnalysis { series, threshold })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeSubsidy {
    pub mode: String,
    pub subsidy: f64,
    /// Distinct orders shipped with this mode.
    pub shipments: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShippingReport {
    pub modes: Vec<ModeSubsidy>,
    pub total: f64,
    /// Mode with the largest subsidy.
    pub worst: Option<String>,
}

pub fn shipping_subsidy(schema: &StarSchema, catalog: &MeasureCatalog) -> Result<ShippingReport> {
    let q = GroupQuery::new(&[SHIPPING_SUBSIDY, TOTAL_ORDERS]).group_by(tables::SHIP_MODE, "ShipMode");
    let r = query::run(schema, catalog, &q)?;
    let modes: Vec<ModeSubsidy> = r
        .rows
        .iter()
        .map(|row| ModeSubsidy { mode: text_key(&row.keys[0]), subsidy: cell(row, 0), shipments: cell(row, 1) })
        .collect();
    let worst = modes
        .iter()
        .max_by(|a, b| a.subsidy.total_cmp(&b.subsidy).then_with(|| b.mode.cmp(&a.mode)))
        .map(|m| m.mode.clone());
    Ok(ShippingReport { total: r.total[0].unwrap_or(f64::NAN), modes, worst })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubcategoryLoss {
    pub sub_category: String,
    pub net_profit: f64,
    /// Share of the category's summed sub-category net losses; `None` when
    /// no sub-category loses money.
    pub loss_share: Option<f64>,
    pub sku_share: f64,
}

pub fn subcategory_losses(
    schema: &StarSchema,
    catalog: &MeasureCatalog,
    category: &str,
) -> Result<Vec<SubcategoryLoss>> {
    let mut c = catalog.clone();
    if !c.contains("__skus") {
        c.register("__skus", "DISTINCTCOUNT(Product[ProductID])").expect("valid measure");
    }
    let ctx = FilterContext::new().with(tables::PRODUCT, "Category", Predicate::eq(category));
    let q = GroupQuery::new(&[TOTAL_PROFIT, "__skus"]).group_by(tables::PRODUCT, "SubCategory").filter(ctx);
    let r = query::run(schema, &c, &q)?;
    if r.rows.is_empty() {
        return Err(AnalyticsError::UnknownCategory(category.to_string()));
    }
    let total_skus = r.total[1].unwrap_or(0.0);
    let total_loss: f64 = r.rows.iter().map(|row| (-cell(row, 0)).max(0.0)).sum();
    Ok(r.rows
        .iter()
        .map(|row| {
            let net = cell(row, 0);
            SubcategoryLoss {
                sub_category: text_key(&row.keys[0]),
                net_profit: net,
                loss_share: (total_loss > 0.0).then(|| (-net).max(0.0) / total_loss),
                sku_share: cell(row, 1) / total_skus,
            }
        })
        .collect())
}

/// Customers are segmented by their distinct order count: the first tier
/// whose `min_orders` they reach, tiers checked in order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentationRule {
    pub tiers: Vec<(String, u32)>,
}

pub const SUPER_LOYAL: &str = "Super Loyal";

impl SegmentationRule {
    /// `Super Loyal` at `min_orders` or more, everyone else `Other`.
    pub fn super_loyal(min_orders: u32) -> Self {
        SegmentationRule { tiers: vec![(SUPER_LOYAL.to_string(), min_orders), ("Other".to_string(), 0)] }
    }

    fn segment_of(&self, orders: f64) -> Option<usize> {
        self.tiers.iter().position(|(_, min)| orders >= *min as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentShare {
    pub segment: String,
    pub customers: usize,
    pub customer_share: f64,
    pub profit: f64,
    /// `None` when total profit is zero.
    pub profit_share: Option<f64>,
    /// No customer fell into this segment.
    pub empty: bool,
}

pub fn loyalty_concentration(
    schema: &StarSchema,
    catalog: &MeasureCatalog,
    rule: &SegmentationRule,
) -> Result<Vec<SegmentShare>> {
    let per_customer = customer_orders_and_profit(schema, catalog)?;
    Ok(segment_shares(&per_customer, rule))
}

/// `(distinct orders, profit)` per customer.
pub(crate) fn customer_orders_and_profit(schema: &StarSchema, catalog: &MeasureCatalog) -> Result<Vec<(f64, f64)>> {
    let q = GroupQuery::new(&[TOTAL_ORDERS, TOTAL_PROFIT]).group_by(tables::CUSTOMER, "CustomerID");
    let r = query::run(schema, catalog, &q)?;
    Ok(r.rows.iter().map(|row| (cell(row, 0), cell(row, 1))).collect())
}

pub(crate) fn segment_shares(per_customer: &[(f64, f64)], rule: &SegmentationRule) -> Vec<SegmentShare> {
    let mut customers = vec![0usize; rule.tiers.len()];
    let mut profit = vec![0.0; rule.tiers.len()];
    for &(orders, p) in per_customer {
        if let Some(s) = rule.segment_of(orders) {
            customers[s] += 1;
            profit[s] += p;
        }
    }
    let n: usize = customers.iter().sum();
    let total: f64 = profit.iter().sum();
    rule.tiers
        .iter()
        .enumerate()
        .map(|(i, (name, _))| SegmentShare {
            segment: name.clone(),
            customers: customers[i],
            customer_share: if n == 0 { 0.0 } else { customers[i] as f64 / n as f64 },
            profit: profit[i],
            profit_share: (total != 0.0).then(|| profit[i] / total),
            empty: customers[i] == 0,
        })
        .collect()
}
