//! Declarative dashboard specs and the narrative lint.
//!
//! A [`DashboardSpec`] is a JSON document describing sections of visuals,
//! each visual backed by a [`GroupQuery`]. [`lint`] scores a spec against
//! six storytelling elements; [`validate`] checks it against a schema;
//! [`diff_versions`] renders the structural changes between two specs.

mod bundled;
mod diff;
mod geometry;
mod lint;
mod validate;

use std::path::Path;

use serde::{Deserialize, Serialize};

pub use bundled::{bundled, bundled_spec, BUNDLED_IDS};
pub use diff::{diff_versions, Change, VersionDiff};
pub use geometry::{union_area, whitespace_ratio};
pub use lint::{lint, Element, ElementScores, Gap, NarrativeScore, Structural};
pub use validate::{validate, validate_structure, Violation};

use crate::measure::{MeasureCatalog, MeasureExpr};
use crate::query::GroupQuery;
use crate::value::Value;

#[derive(Debug, thiserror::Error)]
pub enum SpecError {
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
    #[error("invalid dashboard spec: {0}")]
    Parse(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DashboardSpec {
    pub version_label: String,
    pub title: String,
    pub canvas: Canvas,
    pub sections: Vec<Section>,
    pub catalog: MeasureCatalog,
    #[serde(default)]
    pub narrative: NarrativeMeta,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Canvas {
    pub width: f64,
    pub height: f64,
}

impl Default for Canvas {
    fn default() -> Self {
        Canvas { width: 1000.0, height: 750.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Purpose {
    KpiOverview,
    CategoryBreakdown,
    MarketComparison,
    DiscountAnalysis,
    ShippingDiagnostics,
    CustomerAnalysis,
    Other,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Section {
    pub heading: String,
    pub purpose: Purpose,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub question: Option<String>,
    pub visuals: Vec<Visual>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VisualKind {
    KpiCard,
    Bar,
    Waterfall,
    Bubble,
    DualAxis,
    StackedBar,
    Donut,
    Table,
}

impl VisualKind {
    /// Visuals whose purpose is to set quantities against each other.
    pub fn is_comparison(self) -> bool {
        matches!(self, VisualKind::Bubble | VisualKind::DualAxis | VisualKind::StackedBar)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Layout {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Visual {
    pub kind: VisualKind,
    pub query: GroupQuery,
    pub layout: Layout,
    #[serde(default)]
    pub annotations: Vec<Annotation>,
    #[serde(default)]
    pub color_rules: Vec<ColorRule>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub emphasis: Option<EmphasisRule>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AnnotationKind {
    Label,
    Callout,
    Question,
    Interpretation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Layer {
    #[default]
    Always,
    ExpertToggle,
}

/// Position relative to the visual's box, both coordinates in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Anchor {
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Annotation {
    pub text: String,
    pub kind: AnnotationKind,
    pub anchor: Anchor,
    #[serde(default)]
    pub layer: Layer,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ColorRole {
    LossRed,
    ProfitGreen,
    PrimaryBlue,
    SecondaryGrey,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Sign {
    Negative,
    NonNegative,
    Positive,
}

impl Sign {
    pub fn matches(self, x: f64) -> bool {
        match self {
            Sign::Negative => x < 0.0,
            Sign::NonNegative => x >= 0.0,
            Sign::Positive => x > 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ColorPredicate {
    /// The named measure's value for the datum has this sign.
    MeasureSign { measure: String, sign: Sign },
    /// The datum's group key is one of `values`.
    CategoryMatch { values: Vec<Value> },
    Always,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColorRule {
    pub when: ColorPredicate,
    pub color: ColorRole,
}

impl ColorRule {
    pub fn matches(&self, key: &Value, value_of: impl Fn(&str) -> Option<f64>) -> bool {
        match &self.when {
            ColorPredicate::MeasureSign { measure, sign } => value_of(measure).is_some_and(|x| sign.matches(x)),
            ColorPredicate::CategoryMatch { values } => values.contains(key),
            ColorPredicate::Always => true,
        }
    }
}

/// Color of one datum: the first rule that matches, if any.
pub fn resolve_color(rules: &[ColorRule], key: &Value, value_of: impl Fn(&str) -> Option<f64>) -> Option<ColorRole> {
    rules.iter().find(|r| r.matches(key, &value_of)).map(|r| r.color)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EmphasisStyle {
    BorderHighlight,
    DimOthers,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmphasisRule {
    pub target: Value,
    pub style: EmphasisStyle,
    pub rationale: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hook {
    pub headline_measures: [String; 2],
    pub tension_text: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct NarrativeMeta {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hook: Option<Hook>,
    #[serde(default)]
    pub declared_flow: Vec<Purpose>,
    #[serde(default)]
    pub questions: Vec<String>,
}

impl DashboardSpec {
    pub fn from_json(text: &str) -> Result<Self, SpecError> {
        serde_json::from_str(text).map_err(|e| SpecError::Parse(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, SpecError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| SpecError::Io { path: path.display().to_string(), message: e.to_string() })?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("spec serializes")
    }

    pub fn visuals(&self) -> impl Iterator<Item = &Visual> {
        self.sections.iter().flat_map(|s| s.visuals.iter())
    }

    pub fn annotations(&self) -> impl Iterator<Item = &Annotation> {
        self.visuals().flat_map(|v| v.annotations.iter())
    }

    pub fn annotation_count(&self) -> usize {
        self.annotations().count()
    }

    /// Whether `measure` depends, directly or through other measures, on the
    /// fact column `Profit`: its sign then reads as loss versus profit.
    pub fn is_profit_signed(&self, measure: &str) -> bool {
        fn walk(c: &MeasureCatalog, e: &MeasureExpr, depth: usize) -> bool {
            match e {
                MeasureExpr::Agg { column, .. } => column.column == "Profit",
                MeasureExpr::MeasureRef(name) => {
                    depth < 32 && c.get(name).is_some_and(|entry| walk(c, entry.expr(), depth + 1))
                }
                MeasureExpr::Number(_) => false,
                MeasureExpr::Divide { numerator, denominator, alternate } => {
                    walk(c, numerator, depth) || walk(c, denominator, depth) || walk(c, alternate, depth)
                }
                MeasureExpr::Binary { left, right, .. } => walk(c, left, depth) || walk(c, right, depth),
                MeasureExpr::Neg(inner) | MeasureExpr::Calculate { inner, .. } => walk(c, inner, depth),
            }
        }
        walk(&self.catalog, &MeasureExpr::measure(measure), 0)
    }
}

/// Reads every `*.json` file in `dir` as a spec keyed by file stem, sorted
/// by id.
pub fn load_dir(dir: &Path) -> Result<Vec<(String, DashboardSpec)>, SpecError> {
    let io = |e: std::io::Error| SpecError::Io { path: dir.display().to_string(), message: e.to_string() };
    let mut out = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(io)? {
        let path = entry.map_err(io)?.path();
        if path.extension().is_some_and(|e| e == "json") {
            let id = path.file_stem().and_then(|s| s.to_str()).unwrap_or_default().to_string();
            let spec = DashboardSpec::load(&path)
                .map_err(|e| SpecError::Parse(format!("{}: {e}", path.display())))?;
            out.push((id, spec));
        }
    }
    out.sort_by(|a, b| a.0.cmp(&b.0));
    Ok(out)
}
