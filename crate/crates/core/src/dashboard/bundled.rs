//! The four dashboard versions shipped under `dashboards/`.

use super::DashboardSpec;

pub const BUNDLED_IDS: [&str; 4] = ["v1", "v2", "v3", "v4"];

const SOURCES: [&str; 4] = [
    include_str!("../../../../dashboards/v1.json"),
    include_str!("../../../../dashboards/v2.json"),
    include_str!("../../../../dashboards/v3.json"),
    include_str!("../../../../dashboards/v4.json"),
];

pub fn bundled_spec(id: &str) -> Option<DashboardSpec> {
    let i = BUNDLED_IDS.iter().position(|b| *b == id)?;
    Some(DashboardSpec::from_json(SOURCES[i]).expect("bundled spec parses"))
}

/// Every bundled spec, keyed by id.
pub fn bundled() -> Vec<(String, DashboardSpec)> {
    BUNDLED_IDS.iter().map(|id| (id.to_string(), bundled_spec(id).expect("bundled id"))).collect()
}
