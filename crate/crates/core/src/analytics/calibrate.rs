//! Fitting the two free parameters the findings depend on: the shipping fee
//! schedule (the public file has no payment column) and the Super Loyal
//! order-count threshold (the segment is never defined).

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{customer_orders_and_profit, segment_shares, AnalyticsError, LoyaltyConfig, SegmentationRule};
use crate::ingest::{tables, FeeTable, ShipFee};
use crate::measure::MeasureCatalog;
use crate::query::{self, GroupQuery};

#[derive(Debug, thiserror::Error)]
pub enum CalibrationError {
    #[error(transparent)]
    Analytics(#[from] AnalyticsError),
    #[error("ship mode {0:?} does not occur in the data")]
    MissingMode(String),
    #[error("{mode}: shipping cost {cost:.2} is below the target subsidy {target:.2}; no non-negative fee reaches it")]
    Infeasible { mode: String, cost: f64, target: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeeTargets {
    pub total: f64,
    pub worst_mode: String,
    pub worst_mode_subsidy: f64,
}

impl Default for FeeTargets {
    fn default() -> Self {
        FeeTargets { total: 1.35e6, worst_mode: "First Class".into(), worst_mode_subsidy: 0.47e6 }
    }
}

/// Flat per-line fees that make the subsidy total `targets.total`, with
/// `targets.worst_mode` at `targets.worst_mode_subsidy` and the remainder
/// split across the other modes in proportion to their shipping cost.
pub fn calibrate_fee_table(
    schema: &crate::model::StarSchema,
    catalog: &MeasureCatalog,
    targets: &FeeTargets,
) -> Result<FeeTable, CalibrationError> {
    let mut c = catalog.clone();
    c.register("__cost", "SUM(ShippingCost)").expect("valid measure");
    c.register("__lines", "COUNT(ShippingCost)").expect("valid measure");
    let q = GroupQuery::new(&["__cost", "__lines"]).group_by(tables::SHIP_MODE, "ShipMode");
    let r = query::run(schema, &c, &q).map_err(AnalyticsError::from)?;
    let modes: Vec<(String, f64, f64)> = r
        .rows
        .iter()
        .map(|row| (row.keys[0].to_string(), row.values[0].unwrap_or(0.0), row.values[1].unwrap_or(0.0)))
        .collect();
    if !modes.iter().any(|(m, ..)| *m == targets.worst_mode) {
        return Err(CalibrationError::MissingMode(targets.worst_mode.clone()));
    }
    let other_cost: f64 = modes.iter().filter(|(m, ..)| *m != targets.worst_mode).map(|(_, cost, _)| cost).sum();
    let rest = targets.total - targets.worst_mode_subsidy;
    let mut table = BTreeMap::new();
    for (mode, cost, lines) in &modes {
        let target = if *mode == targets.worst_mode {
            targets.worst_mode_subsidy
        } else if other_cost > 0.0 {
            rest * cost / other_cost
        } else {
            0.0
        };
        let flat_fee = if *lines > 0.0 { (cost - target) / lines } else { 0.0 };
        if flat_fee < 0.0 {
            return Err(CalibrationError::Infeasible { mode: mode.clone(), cost: *cost, target });
        }
        table.insert(mode.clone(), ShipFee { flat_fee, per_unit_fee: 0.0 });
    }
    Ok(FeeTable { calibrated: true, modes: table })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoyaltyCalibration {
    pub config: LoyaltyConfig,
    pub customer_share: f64,
    pub profit_share: f64,
    /// Both shares within `tolerance` of their targets.
    pub within_tolerance: bool,
}

/// Searches every order-count threshold for the one closest to the target
/// shares (worst of the two deviations, in tolerance units). The result is
/// marked calibrated only if both shares land within `tolerance`.
pub fn calibrate_loyalty(
    schema: &crate::model::StarSchema,
    catalog: &MeasureCatalog,
    customer_share: f64,
    profit_share: f64,
    tolerance: f64,
) -> Result<LoyaltyCalibration, CalibrationError> {
    let per_customer = customer_orders_and_profit(schema, catalog)?;
    let max_orders = per_customer.iter().map(|(o, _)| *o as u32).max().unwrap_or(1).max(1);
    let mut best: Option<(f64, u32, f64, f64)> = None;
    for t in 1..=max_orders {
        let s = &segment_shares(&per_customer, &SegmentationRule::super_loyal(t))[0];
        let ps = s.profit_share.unwrap_or(f64::NAN);
        let score = ((s.customer_share - customer_share).abs()).max((ps - profit_share).abs()) / tolerance;
        if !score.is_nan() && best.is_none_or(|(b, ..)| score < b) {
            best = Some((score, t, s.customer_share, ps));
        }
    }
    let (score, t, cs, ps) = best.unwrap_or((f64::INFINITY, 1, 0.0, f64::NAN));
    let within = score <= 1.0;
    Ok(LoyaltyCalibration {
        config: LoyaltyConfig { super_loyal_min_orders: t, calibrated: within },
        customer_share: cs,
        profit_share: ps,
        within_tolerance: within,
    })
}
