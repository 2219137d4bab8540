use serde::{Deserialize, Serialize};

use super::{lint, whitespace_ratio, DashboardSpec, Purpose};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "change", rename_all = "kebab-case")]
pub enum Change {
    MeasureAdded { measure: String },
    MeasureRemoved { measure: String },
    SectionAdded { heading: String, purpose: Purpose },
    SectionRemoved { heading: String, purpose: Purpose },
    VisualCount { from: usize, to: usize },
    AnnotationCount { from: usize, to: usize },
    ColorCoverage { from: f64, to: f64 },
    Whitespace { from: f64, to: f64 },
    /// Reading order of section purposes.
    Flow { from: Vec<Purpose>, to: Vec<Purpose> },
    Hook { from: Option<[String; 2]>, to: Option<[String; 2]> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VersionDiff {
    pub from: String,
    pub to: String,
    pub changes: Vec<Change>,
}

impl VersionDiff {
    pub fn is_empty(&self) -> bool {
        self.changes.is_empty()
    }

    /// Measures added minus measures removed.
    pub fn measure_delta(&self) -> i64 {
        self.changes
            .iter()
            .map(|c| match c {
                Change::MeasureAdded { .. } => 1,
                Change::MeasureRemoved { .. } => -1,
                _ => 0,
            })
            .sum()
    }

    pub fn annotation_delta(&self) -> i64 {
        self.changes
            .iter()
            .find_map(|c| match c {
                Change::AnnotationCount { from, to } => Some(*to as i64 - *from as i64),
                _ => None,
            })
            .unwrap_or(0)
    }
}

/// Structural changes from `a` to `b`, in a fixed order: measures,
/// sections, then the scalar metrics that moved.
pub fn diff_versions(a: &DashboardSpec, b: &DashboardSpec) -> VersionDiff {
    let mut changes = Vec::new();
    for m in b.catalog.names().filter(|m| !a.catalog.contains(m)) {
        changes.push(Change::MeasureAdded { measure: m.to_string() });
    }
    for m in a.catalog.names().filter(|m| !b.catalog.contains(m)) {
        changes.push(Change::MeasureRemoved { measure: m.to_string() });
    }

    let has = |spec: &DashboardSpec, heading: &str, purpose: Purpose| {
        spec.sections.iter().any(|s| s.heading == heading && s.purpose == purpose)
    };
    for s in b.sections.iter().filter(|s| !has(a, &s.heading, s.purpose)) {
        changes.push(Change::SectionAdded { heading: s.heading.clone(), purpose: s.purpose });
    }
    for s in a.sections.iter().filter(|s| !has(b, &s.heading, s.purpose)) {
        changes.push(Change::SectionRemoved { heading: s.heading.clone(), purpose: s.purpose });
    }

    let (va, vb) = (a.visuals().count(), b.visuals().count());
    if va != vb {
        changes.push(Change::VisualCount { from: va, to: vb });
    }
    let (na, nb) = (a.annotation_count(), b.annotation_count());
    if na != nb {
        changes.push(Change::AnnotationCount { from: na, to: nb });
    }
    let (ca, cb) = (lint(a).structural.semantic_color_coverage, lint(b).structural.semantic_color_coverage);
    if ca != cb {
        changes.push(Change::ColorCoverage { from: ca, to: cb });
    }
    let (wa, wb) = (whitespace_ratio(a), whitespace_ratio(b));
    if wa != wb {
        changes.push(Change::Whitespace { from: wa, to: wb });
    }
    let flow = |s: &DashboardSpec| s.sections.iter().map(|s| s.purpose).collect::<Vec<_>>();
    let (fa, fb) = (flow(a), flow(b));
    if fa != fb {
        changes.push(Change::Flow { from: fa, to: fb });
    }
    let hook = |s: &DashboardSpec| s.narrative.hook.as_ref().map(|h| h.headline_measures.clone());
    let (ha, hb) = (hook(a), hook(b));
    if ha != hb {
        changes.push(Change::Hook { from: ha, to: hb });
    }
    VersionDiff { from: a.version_label.clone(), to: b.version_label.clone(), changes }
}
