use serde::{Deserialize, Serialize};

use super::{ColorPredicate, DashboardSpec, VisualKind};
use crate::measure::MeasureCatalog;
use crate::model::StarSchema;
use crate::query;

/// One broken invariant, located by a JSON-style path into the spec.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub path: String,
    pub message: String,
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

/// Checks that need no data: shape, layout, measure references.
pub fn validate_structure(spec: &DashboardSpec) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut bad = |path: String, message: String| out.push(Violation { path, message });
    let (cw, ch) = (spec.canvas.width, spec.canvas.height);

    if !(cw > 0.0 && ch > 0.0) {
        bad("canvas".into(), format!("canvas must have positive size, got {cw}x{ch}"));
    }
    if spec.sections.is_empty() {
        bad("sections".into(), "a dashboard needs at least one section".into());
    }
    for (name, missing) in spec.catalog.dangling_refs() {
        bad("catalog".into(), format!("measure [{name}] references unknown measure [{missing}]"));
    }
    if let Some(h) = &spec.narrative.hook {
        let [a, b] = &h.headline_measures;
        if a == b {
            bad("narrative.hook".into(), format!("hook measures must differ, both are [{a}]"));
        }
        for m in [a, b] {
            if !spec.catalog.contains(m) {
                bad("narrative.hook".into(), format!("unknown measure [{m}]"));
            }
        }
    }

    for (si, section) in spec.sections.iter().enumerate() {
        if section.visuals.is_empty() {
            bad(format!("sections[{si}]"), format!("section {:?} has no visuals", section.heading));
        }
        for (vi, v) in section.visuals.iter().enumerate() {
            let at = format!("sections[{si}].visuals[{vi}]");
            let l = v.layout;
            if !(l.w > 0.0 && l.h > 0.0) {
                bad(format!("{at}.layout"), "layout box must have positive size".into());
            }
            if l.x < 0.0 || l.y < 0.0 || l.x + l.w > cw || l.y + l.h > ch {
                bad(format!("{at}.layout"), format!("box ({}, {}, {}, {}) leaves the {cw}x{ch} canvas", l.x, l.y, l.w, l.h));
            }
            let measures = &v.query.measures;
            if measures.is_empty() {
                bad(format!("{at}.query"), "a visual needs at least one measure".into());
            }
            for m in measures.iter().chain(v.query.order_by.as_ref().map(|o| &o.measure)) {
                if !spec.catalog.contains(m) {
                    bad(format!("{at}.query"), format!("unknown measure [{m}]"));
                }
            }
            match v.kind {
                VisualKind::DualAxis if measures.len() != 2 => {
                    bad(format!("{at}.kind"), format!("dual-axis visual needs exactly 2 measures, has {}", measures.len()))
                }
                VisualKind::Bubble if measures.len() < 3 => {
                    bad(format!("{at}.kind"), format!("bubble visual needs at least 3 measures, has {}", measures.len()))
                }
                _ => {}
            }
            for (ai, a) in v.annotations.iter().enumerate() {
                if a.text.trim().is_empty() {
                    bad(format!("{at}.annotations[{ai}]"), "annotation text is empty".into());
                }
                if !(0.0..=1.0).contains(&a.anchor.x) || !(0.0..=1.0).contains(&a.anchor.y) {
                    bad(format!("{at}.annotations[{ai}].anchor"), "anchor must lie within the visual".into());
                }
            }
            for (ri, r) in v.color_rules.iter().enumerate() {
                if let ColorPredicate::MeasureSign { measure, .. } = &r.when {
                    if !measures.contains(measure) {
                        bad(format!("{at}.color_rules[{ri}]"), format!("rule tests [{measure}], which the visual does not show"));
                    }
                }
            }
            if v.emphasis.is_some() && v.query.group_by.is_empty() && v.query.bin.is_none() {
                bad(format!("{at}.emphasis"), "emphasis needs a grouped visual".into());
            }
        }
    }
    out
}

/// Structural checks plus: every query runs against `schema`, every
/// emphasis target is among its visual's groups, and no spec measure
/// redefines a measure of the same name in `reference`.
pub fn validate(spec: &DashboardSpec, schema: &StarSchema, reference: &MeasureCatalog) -> Vec<Violation> {
    let mut out = validate_structure(spec);
    for e in spec.catalog.entries() {
        if let Some(r) = reference.get(&e.name) {
            if r.expr() != e.expr() {
                out.push(Violation {
                    path: "catalog".into(),
                    message: format!("[{}] is defined as {} here but {} in the model", e.name, e.expression, r.expression),
                });
            }
        }
    }
    for (si, section) in spec.sections.iter().enumerate() {
        for (vi, v) in section.visuals.iter().enumerate() {
            let at = format!("sections[{si}].visuals[{vi}]");
            match query::run(schema, &spec.catalog, &v.query) {
                Err(e) => out.push(Violation { path: format!("{at}.query"), message: e.to_string() }),
                Ok(result) => {
                    if let Some(em) = &v.emphasis {
                        if !result.rows.iter().any(|r| r.keys.first() == Some(&em.target)) {
                            out.push(Violation {
                                path: format!("{at}.emphasis"),
                                message: format!("target {} is not among the visual's groups", em.target),
                            });
                        }
                    }
                }
            }
        }
    }
    out
}
