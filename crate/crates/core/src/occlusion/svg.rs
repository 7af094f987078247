use std::fmt::Write;

use super::support::matches;
use super::{DenseCurve, OcclusionParams, OcclusionRecord};
use crate::curve_graph::{CameraView, CurveDrawing};
use crate::geom::Point2;
use crate::hypothesis::{Status, SurfaceHypothesis};
use crate::mesh::edge_faces;

fn color(status: Status) -> &'static str {
    match status {
        Status::Formed => "#999999",
        Status::Confirmed => "#1f5fbf",
        Status::Rejected => "#c0392b",
        Status::Unverifiable => "#d4a017",
        Status::Hidden | Status::Redundant => "#bbbbbb",
    }
}

fn line(s: &mut String, a: &Point2, b: &Point2, stroke: &str, width: f64) {
    let _ = writeln!(
        s,
        r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{stroke}" stroke-width="{width}"/>"#,
        a.x, a.y, b.x, b.y
    );
}

/// SVG overlay for one view: drawing curves, hypothesis outlines coloured by
/// status, hidden stretches from `records`, and the edges that matched them.
pub fn overlay_svg(
    view: &CameraView,
    hyps: &[SurfaceHypothesis],
    drawing: &CurveDrawing,
    records: &[OcclusionRecord],
    params: &OcclusionParams,
) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#,
        w = view.width,
        h = view.height
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    for e in &view.edges {
        let d = Point2::new(e.orientation.cos(), e.orientation.sin()) - Point2::origin();
        line(&mut s, &(e.position - d * 0.5), &(e.position + d * 0.5), "#dddddd", 0.5);
    }
    for f in &drawing.fragments {
        let px: Vec<Option<Point2>> = f.points.iter().map(|p| view.project(p)).collect();
        for w in px.windows(2) {
            if let [Some(a), Some(b)] = w {
                line(&mut s, a, b, "#333333", 1.0);
            }
        }
    }
    for h in hyps {
        for ((a, b), fs) in edge_faces(&h.mesh.faces) {
            if fs.len() != 1 {
                continue;
            }
            if let (Some(pa), Some(pb)) = (view.project(&h.mesh.vertices[a]), view.project(&h.mesh.vertices[b])) {
                line(&mut s, &pa, &pb, color(h.status), 1.5);
            }
        }
    }
    let m = params.edge_match();
    for r in records.iter().filter(|r| r.view == view.id) {
        let Some(f) = drawing.fragment(r.curve) else {
            continue;
        };
        let dense = DenseCurve::new(f, view);
        for i in 1..dense.len() {
            let (Some(a), Some(b)) = (dense.pixels[i - 1], dense.pixels[i]) else {
                continue;
            };
            let mid = 0.5 * (dense.s_px[i - 1] + dense.s_px[i]);
            if !r.pixel_intervals.iter().any(|&(lo, hi)| mid >= lo && mid <= hi) {
                continue;
            }
            line(&mut s, &a, &b, "#e74c3c", 3.0);
            let d = b - a;
            let theta = d.y.atan2(d.x);
            for e in view.edges.iter().filter(|e| matches(e, &a, theta, &m)) {
                let _ = writeln!(
                    s,
                    r##"<circle cx="{:.2}" cy="{:.2}" r="1" fill="#27ae60"/>"##,
                    e.position.x, e.position.y
                );
            }
        }
    }
    s.push_str("</svg>\n");
    s
}
