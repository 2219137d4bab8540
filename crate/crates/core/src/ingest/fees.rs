use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::IngestError;

/// Shipping fee recovered per order line for one ship mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct ShipFee {
    pub flat_fee: f64,
    pub per_unit_fee: f64,
}

/// Ship mode → fee schedule, used to synthesize `ShippingPayment` when the
/// source file has no payment column.
///
/// `calibrated` records whether the table was fitted against the official
/// dataset; shipping findings are only comparable when it is.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct FeeTable {
    #[serde(default)]
    pub calibrated: bool,
    #[serde(default)]
    pub modes: BTreeMap<String, ShipFee>,
}

const DEFAULT_TOML: &str = include_str!("../../../../config/shipping_fees.toml");

impl FeeTable {
    /// The fee table committed under `config/shipping_fees.toml`.
    pub fn repo_default() -> Self {
        toml::from_str(DEFAULT_TOML).expect("bundled fee table parses")
    }

    pub fn from_toml(s: &str) -> Result<Self, IngestError> {
        toml::from_str(s).map_err(|e| IngestError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, IngestError> {
        let text = std::fs::read_to_string(path).map_err(|_| IngestError::FileNotFound(path.to_path_buf()))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("fee table serializes")
    }

    /// Payment recovered for one line. Modes absent from the table recover nothing.
    pub fn payment(&self, ship_mode: &str, quantity: f64) -> f64 {
        self.modes
            .get(ship_mode)
            .map_or(0.0, |f| f.flat_fee + f.per_unit_fee * quantity)
    }
}
