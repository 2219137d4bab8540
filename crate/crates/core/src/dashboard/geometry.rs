use super::{DashboardSpec, Layout};

/// Exact area of the union of axis-aligned boxes, clipped to
/// `[0, width] × [0, height]`.
///
/// Coordinate compression: the distinct x edges cut the plane into strips;
/// in each strip the covered length along y is the union of the intervals
/// of the boxes spanning it.
pub fn union_area(boxes: &[Layout], width: f64, height: f64) -> f64 {
    let clipped: Vec<(f64, f64, f64, f64)> = boxes
        .iter()
        .map(|b| (b.x.max(0.0), (b.x + b.w).min(width), b.y.max(0.0), (b.y + b.h).min(height)))
        .filter(|(x0, x1, y0, y1)| x1 > x0 && y1 > y0)
        .collect();
    let mut xs: Vec<f64> = clipped.iter().flat_map(|b| [b.0, b.1]).collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();

    let mut area = 0.0;
    for strip in xs.windows(2) {
        let (a, b) = (strip[0], strip[1]);
        let mut spans: Vec<(f64, f64)> =
            clipped.iter().filter(|r| r.0 <= a && r.1 >= b).map(|r| (r.2, r.3)).collect();
        if spans.is_empty() {
            continue;
        }
        spans.sort_by(|p, q| p.0.total_cmp(&q.0));
        let mut covered = 0.0;
        let (mut lo, mut hi) = spans[0];
        for &(s, e) in &spans[1..] {
            if s > hi {
                covered += hi - lo;
                (lo, hi) = (s, e);
            } else {
                hi = hi.max(e);
            }
        }
        covered += hi - lo;
        area += covered * (b - a);
    }
    area
}

/// `1 − (area covered by visuals) / (canvas area)`.
pub fn whitespace_ratio(spec: &DashboardSpec) -> f64 {
    let (w, h) = (spec.canvas.width, spec.canvas.height);
    let canvas = w * h;
    if canvas <= 0.0 {
        return 0.0;
    }
    let boxes: Vec<Layout> = spec.visuals().map(|v| v.layout).collect();
    (canvas - union_area(&boxes, w, h)) / canvas
}
