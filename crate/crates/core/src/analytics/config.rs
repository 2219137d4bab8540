use std::path::Path;

use serde::{Deserialize, Serialize};

use super::SegmentationRule;

const DEFAULT_TOML: &str = include_str!("../../../../config/analytics.toml");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoyaltyConfig {
    pub super_loyal_min_orders: u32,
    /// Whether the threshold was fitted against the official dataset.
    #[serde(default)]
    pub calibrated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyticsConfig {
    pub loyalty: LoyaltyConfig,
}

impl Default for AnalyticsConfig {
    fn default() -> Self {
        Self::repo_default()
    }
}

impl AnalyticsConfig {
    /// The configuration committed under `config/analytics.toml`.
    pub fn repo_default() -> Self {
        toml::from_str(DEFAULT_TOML).expect("bundled analytics config parses")
    }

    pub fn from_toml(s: &str) -> Result<Self, String> {
        toml::from_str(s).map_err(|e| e.to_string())
    }

    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("analytics config serializes")
    }

    pub fn segmentation(&self) -> SegmentationRule {
        SegmentationRule::super_loyal(self.loyalty.super_loyal_min_orders)
    }
}
