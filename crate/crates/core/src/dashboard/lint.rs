//! Mechanical scoring of the six narrative elements.
//!
//! Thresholds: 18 authored annotations score full marks on the annotation
//! element; whitespace scores 0 at 15% and 1 at 35%, linear between.
//! Questioning and comparison elements use coverage fractions.

use serde::{Deserialize, Serialize};

use super::{geometry::whitespace_ratio, AnnotationKind, ColorPredicate, ColorRole, DashboardSpec, Purpose, Visual};

pub const ANNOTATIONS_FOR_FULL_SCORE: usize = 18;
pub const WHITESPACE_FLOOR: f64 = 0.15;
pub const WHITESPACE_TARGET: f64 = 0.35;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Element {
    Hook,
    ProgressiveFocus,
    IterativeQuestioning,
    AnnotationsSecondVoice,
    QuantifiedComparisons,
    PacingHierarchy,
}

impl Element {
    pub const ALL: [Element; 6] = [
        Element::Hook,
        Element::ProgressiveFocus,
        Element::IterativeQuestioning,
        Element::AnnotationsSecondVoice,
        Element::QuantifiedComparisons,
        Element::PacingHierarchy,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Element::Hook => "hook",
            Element::ProgressiveFocus => "progressive-focus",
            Element::IterativeQuestioning => "iterative-questioning",
            Element::AnnotationsSecondVoice => "annotations-second-voice",
            Element::QuantifiedComparisons => "quantified-comparisons",
            Element::PacingHierarchy => "pacing-hierarchy",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ElementScores {
    pub hook: f64,
    pub progressive_focus: f64,
    pub iterative_questioning: f64,
    pub annotations_second_voice: f64,
    pub quantified_comparisons: f64,
    pub pacing_hierarchy: f64,
}

impl ElementScores {
    pub fn get(&self, e: Element) -> f64 {
        match e {
            Element::Hook => self.hook,
            Element::ProgressiveFocus => self.progressive_focus,
            Element::IterativeQuestioning => self.iterative_questioning,
            Element::AnnotationsSecondVoice => self.annotations_second_voice,
            Element::QuantifiedComparisons => self.quantified_comparisons,
            Element::PacingHierarchy => self.pacing_hierarchy,
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (Element, f64)> + '_ {
        Element::ALL.into_iter().map(|e| (e, self.get(e)))
    }

    pub fn all_full(&self) -> bool {
        self.iter().all(|(_, s)| s == 1.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Gap {
    pub element: Element,
    pub description: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Structural {
    pub annotation_count: usize,
    pub whitespace_ratio: f64,
    /// Over visuals showing a profit-signed measure: half a point for a
    /// loss-red sign rule, half for a profit-green one, averaged.
    pub semantic_color_coverage: f64,
    pub measure_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NarrativeScore {
    pub scores: ElementScores,
    pub gaps: Vec<Gap>,
    pub structural: Structural,
}

impl NarrativeScore {
    pub fn passes(&self) -> bool {
        self.scores.all_full()
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (e, s) in self.scores.iter() {
            out.push_str(&format!("{:<26} {s:.2}\n", e.name()));
        }
        let st = &self.structural;
        out.push_str(&format!(
            "\nmeasures {}  annotations {}  whitespace {:.1}%  semantic color {:.0}%\n",
            st.measure_count,
            st.annotation_count,
            st.whitespace_ratio * 100.0,
            st.semantic_color_coverage * 100.0
        ));
        if !self.gaps.is_empty() {
            out.push_str("\ngaps:\n");
            for g in &self.gaps {
                out.push_str(&format!("  {}: {}\n", g.element.name(), g.description));
            }
        }
        out
    }
}

fn hook(spec: &DashboardSpec) -> (f64, Option<String>) {
    let Some(h) = &spec.narrative.hook else {
        return (0.0, Some("no opening hook declared".into()));
    };
    let [a, b] = &h.headline_measures;
    if a == b {
        return (0.0, Some("hook pairs a measure with itself".into()));
    }
    let in_kpi = |m: &str| {
        spec.sections
            .iter()
            .filter(|s| s.purpose == Purpose::KpiOverview)
            .flat_map(|s| &s.visuals)
            .any(|v| v.query.measures.iter().any(|q| q == m))
    };
    let missing: Vec<&str> = [a, b].into_iter().filter(|m| !in_kpi(m)).map(String::as_str).collect();
    if missing.is_empty() {
        (1.0, None)
    } else {
        (0.0, Some(format!("hook measure(s) {} not shown in a KPI overview section", missing.join(", "))))
    }
}

fn lcs<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let mut prev = vec![0; b.len() + 1];
    for x in a {
        let mut cur = vec![0; b.len() + 1];
        for (j, y) in b.iter().enumerate() {
            cur[j + 1] = if x == y { prev[j] + 1 } else { prev[j + 1].max(cur[j]) };
        }
        prev = cur;
    }
    prev[b.len()]
}

fn progressive_focus(spec: &DashboardSpec) -> (f64, Option<String>) {
    let flow = &spec.narrative.declared_flow;
    if flow.is_empty() {
        return (0.0, Some("no reading order declared".into()));
    }
    if spec.sections.first().map(|s| s.purpose) != Some(Purpose::KpiOverview) {
        return (0.0, Some("first section is not a KPI overview".into()));
    }
    let order: Vec<Purpose> = spec.sections.iter().map(|s| s.purpose).collect();
    let realized = lcs(flow, &order);
    let score = realized as f64 / flow.len() as f64;
    let gap = (realized < flow.len())
        .then(|| format!("only {realized} of {} declared steps appear in section order", flow.len()));
    (score, gap)
}

fn iterative_questioning(spec: &DashboardSpec) -> (f64, Option<String>) {
    let analytical: Vec<_> = spec.sections.iter().filter(|s| s.purpose != Purpose::KpiOverview).collect();
    if analytical.is_empty() {
        return (0.0, Some("no analytical sections to question".into()));
    }
    let asked = analytical
        .iter()
        .filter(|s| {
            s.question.as_deref().is_some_and(|q| !q.trim().is_empty())
                || s.visuals.iter().flat_map(|v| &v.annotations).any(|a| a.kind == AnnotationKind::Question)
        })
        .count();
    let score = (2.0 * asked as f64 / analytical.len() as f64).min(1.0);
    let gap = (score < 1.0).then(|| {
        format!("{asked} of {} analytical sections pose a question; at least half should", analytical.len())
    });
    (score, gap)
}

fn annotations(spec: &DashboardSpec) -> (f64, Option<String>) {
    let n = spec.annotation_count();
    let score = (n as f64 / ANNOTATIONS_FOR_FULL_SCORE as f64).min(1.0);
    let gap = (n < ANNOTATIONS_FOR_FULL_SCORE)
        .then(|| format!("{n} annotations; interpretive commentary needs {ANNOTATIONS_FOR_FULL_SCORE}"));
    (score, gap)
}

fn labels_values(v: &Visual) -> bool {
    v.annotations
        .iter()
        .any(|a| a.kind != AnnotationKind::Question && a.text.chars().any(|c| c.is_ascii_digit()))
}

fn quantified_comparisons(spec: &DashboardSpec) -> (f64, Option<String>) {
    let comparisons: Vec<&Visual> = spec.visuals().filter(|v| v.kind.is_comparison()).collect();
    if comparisons.is_empty() {
        return (0.0, Some("no comparison visual (bubble, dual-axis or stacked bar)".into()));
    }
    let labelled = comparisons.iter().filter(|v| labels_values(v)).count();
    let score = labelled as f64 / comparisons.len() as f64;
    let gap = (labelled < comparisons.len())
        .then(|| format!("{} of {} comparison visuals label no concrete values", comparisons.len() - labelled, comparisons.len()));
    (score, gap)
}

fn pacing(ratio: f64) -> (f64, Option<String>) {
    let score = ((ratio - WHITESPACE_FLOOR) / (WHITESPACE_TARGET - WHITESPACE_FLOOR)).clamp(0.0, 1.0);
    let gap = (score < 1.0).then(|| {
        format!("{:.1}% whitespace; a clear hierarchy needs {:.0}%", ratio * 100.0, WHITESPACE_TARGET * 100.0)
    });
    (score, gap)
}

fn semantic_color_coverage(spec: &DashboardSpec) -> f64 {
    let signed: Vec<&Visual> = spec
        .visuals()
        .filter(|v| v.query.measures.iter().any(|m| spec.is_profit_signed(m)))
        .collect();
    if signed.is_empty() {
        return 0.0;
    }
    let has = |v: &Visual, role: ColorRole| {
        v.color_rules.iter().any(|r| r.color == role && matches!(r.when, ColorPredicate::MeasureSign { .. }))
    };
    let credit: f64 = signed
        .iter()
        .map(|v| (u8::from(has(v, ColorRole::LossRed)) + u8::from(has(v, ColorRole::ProfitGreen))) as f64 / 2.0)
        .sum();
    credit / signed.len() as f64
}

pub fn lint(spec: &DashboardSpec) -> NarrativeScore {
    let ratio = whitespace_ratio(spec);
    let results = [
        (Element::Hook, hook(spec)),
        (Element::ProgressiveFocus, progressive_focus(spec)),
        (Element::IterativeQuestioning, iterative_questioning(spec)),
        (Element::AnnotationsSecondVoice, annotations(spec)),
        (Element::QuantifiedComparisons, quantified_comparisons(spec)),
        (Element::PacingHierarchy, pacing(ratio)),
    ];
    let s = |i: usize| results[i].1 .0;
    let scores = ElementScores {
        hook: s(0),
        progressive_focus: s(1),
        iterative_questioning: s(2),
        annotations_second_voice: s(3),
        quantified_comparisons: s(4),
        pacing_hierarchy: s(5),
    };
    let gaps = results
        .into_iter()
        .filter_map(|(element, (_, gap))| gap.map(|description| Gap { element, description }))
        .collect();
    NarrativeScore {
        scores,
        gaps,
        structural: Structural {
            annotation_count: spec.annotation_count(),
            whitespace_ratio: ratio,
            semantic_color_coverage: semantic_color_coverage(spec),
            measure_count: spec.catalog.len(),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lcs_counts_ordered_matches() {
        assert_eq!(lcs(&[1, 2, 3, 4], &[1, 3, 2, 4]), 3);
        assert_eq!(lcs(&[1, 2], &[]), 0);
        assert_eq!(lcs(&[5], &[1, 5, 5]), 1);
    }

    #[test]
    fn pacing_is_linear_between_thresholds() {
        assert_eq!(pacing(0.15).0, 0.0);
        assert_eq!(pacing(0.05).0, 0.0);
        assert!((pacing(0.25).0 - 0.5).abs() < 1e-12);
        assert_eq!(pacing(0.5).0, 1.0);
        assert!(pacing(0.5).1.is_none());
    }
}
