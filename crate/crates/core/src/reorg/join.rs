use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::cocirc::{cocircularity, junction_continuity};
use crate::curve_graph::{CurveDrawing, CurveFragment, End, Endpoint, NODE_TOLERANCE};
use crate::geom::{Point3, Vec3};

/// A straight bridge inserted across a gap.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bridge {
    pub from: Endpoint,
    pub to: Endpoint,
    pub from_point: [f64; 3],
    pub to_point: [f64; 3],
    pub cocircularity: f64,
}

impl Bridge {
    pub fn length(&self) -> f64 {
        (Point3::from(self.to_point) - Point3::from(self.from_point)).norm()
    }

    pub fn midpoint(&self) -> Point3 {
        nalgebra::center(&Point3::from(self.from_point), &Point3::from(self.to_point))
    }
}

/// A merge of two fragment ends at a shared junction node.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JunctionMerge {
    pub a: Endpoint,
    pub b: Endpoint,
    pub point: [f64; 3],
    pub continuity: f64,
}

/// Travel directions across a link from `a` (leaving) to `b` (entering).
fn link_tangents(fa: &CurveFragment, a: End, fb: &CurveFragment, b: End) -> (Vec3, Vec3) {
    (fa.outward_tangent(a), -fb.outward_tangent(b))
}

/// Concatenates fragments along `links` (pairs of endpoints, each endpoint used at most once).
///
/// Chains take the smallest id among their members and start from their
/// lowest-id terminal fragment. Chains that close on themselves become closed
/// fragments. Coincident junction points are emitted once; gaps become straight
/// bridge segments implicitly.
pub(crate) fn join_links(drawing: &CurveDrawing, links: &[(Endpoint, Endpoint)]) -> CurveDrawing {
    if links.is_empty() {
        return drawing.clone();
    }
    let mut partner: BTreeMap<Endpoint, Endpoint> = BTreeMap::new();
    for &(a, b) in links {
        partner.insert(a, b);
        partner.insert(b, a);
    }
    let by_id: BTreeMap<u64, &CurveFragment> = drawing.fragments.iter().map(|f| (f.id, f)).collect();
    let mut visited: BTreeSet<u64> = BTreeSet::new();
    let mut out: Vec<CurveFragment> = Vec::new();

    let append = |pts: &mut Vec<Point3>, frag: &CurveFragment, enter: End| {
        let mut seq = frag.points.clone();
        if enter == End::End {
            seq.reverse();
        }
        let skip = matches!(pts.last(), Some(last) if (seq[0] - last).norm() <= NODE_TOLERANCE);
        pts.extend(seq.into_iter().skip(usize::from(skip)));
    };

    let linked = |id: u64, end: End| partner.contains_key(&Endpoint { fragment: id, end });

    for f in &drawing.fragments {
        if f.closed || visited.contains(&f.id) {
            continue;
        }
        let start_free = !linked(f.id, End::Start);
        let end_free = !linked(f.id, End::End);
        if !start_free && !end_free {
            continue;
        }
        if start_free && end_free {
            visited.insert(f.id);
            out.push(f.clone());
            continue;
        }
        let mut enter = if start_free { End::Start } else { End::End };
        let mut current = f.id;
        let mut pts = Vec::new();
        let mut min_id = f.id;
        loop {
            visited.insert(current);
            min_id = min_id.min(current);
            append(&mut pts, by_id[&current], enter);
            let exit = Endpoint {
                fragment: current,
                end: enter.other(),
            };
            match partner.get(&exit) {
                Some(next) if !visited.contains(&next.fragment) => {
                    current = next.fragment;
                    enter = next.end;
                }
                _ => break,
            }
        }
        out.push(CurveFragment::new(min_id, pts, false));
    }

    // Remaining open fragments belong to cycles.
    for f in &drawing.fragments {
        if f.closed || visited.contains(&f.id) {
            continue;
        }
        let mut pts = Vec::new();
        let mut current = f.id;
        let mut enter = End::Start;
        let mut min_id = f.id;
        loop {
            visited.insert(current);
            min_id = min_id.min(current);
            append(&mut pts, by_id[&current], enter);
            let exit = Endpoint {
                fragment: current,
                end: enter.other(),
            };
            let next = partner[&exit];
            if visited.contains(&next.fragment) {
                break;
            }
            current = next.fragment;
            enter = next.end;
        }
        if pts.len() > 1 && (pts[0] - pts[pts.len() - 1]).norm() <= NODE_TOLERANCE {
            pts.pop();
        }
        let closed = pts.len() >= 3;
        out.push(CurveFragment::new(min_id, pts, closed));
    }

    out.extend(drawing.fragments.iter().filter(|f| f.closed).cloned());
    out.sort_by_key(|f| f.id);
    CurveDrawing::from_fragments(out)
}

/// Merges the two fragment ends meeting at each degree-2 junction when their
/// tangents continue within `tau_cocirc`; repeats until nothing changes.
pub fn merge_at_junctions(drawing: &CurveDrawing, tau_cocirc: f64) -> (CurveDrawing, Vec<JunctionMerge>) {
    let mut current = CurveDrawing::from_fragments(drawing.fragments.clone());
    let mut merges = Vec::new();
    loop {
        let mut links = Vec::new();
        for node in current.nodes.iter().filter(|n| n.degree() == 2) {
            let (a, b) = (node.incident[0], node.incident[1]);
            let fa = current.fragment(a.fragment).expect("node references a fragment");
            let fb = current.fragment(b.fragment).expect("node references a fragment");
            let (t1, t2) = link_tangents(fa, a.end, fb, b.end);
            let continuity = junction_continuity(&t1, &t2);
            if continuity < tau_cocirc {
                links.push((a, b));
                merges.push(JunctionMerge {
                    a,
                    b,
                    point: node.point.coords.into(),
                    continuity,
                });
            }
        }
        if links.is_empty() {
            return (current, merges);
        }
        current = join_links(&current, &links);
    }
}

/// Bridges endpoint gaps shorter than `tau_dist` whose co-circularity is below `tau_cocirc`.
///
/// Candidates are endpoints of distinct open fragments separated by more than
/// the junction tolerance. They are accepted greedily by ascending
/// co-circularity (ties by endpoint order), each endpoint at most once.
pub fn bridge_gaps(drawing: &CurveDrawing, tau_dist: f64, tau_cocirc: f64) -> (CurveDrawing, Vec<Bridge>) {
    let mut ends: Vec<(Endpoint, Point3)> = Vec::new();
    for f in drawing.fragments.iter().filter(|f| !f.closed) {
        for end in [End::Start, End::End] {
            ends.push((Endpoint { fragment: f.id, end }, f.endpoint(end)));
        }
    }
    let by_id: BTreeMap<u64, &CurveFragment> = drawing.fragments.iter().map(|f| (f.id, f)).collect();
    let mut candidates: Vec<(f64, Endpoint, Endpoint)> = Vec::new();
    for i in 0..ends.len() {
        for j in i + 1..ends.len() {
            let (ea, pa) = ends[i];
            let (eb, pb) = ends[j];
            if ea.fragment == eb.fragment {
                continue;
            }
            let d = (pb - pa).norm();
            if d <= NODE_TOLERANCE || d >= tau_dist {
                continue;
            }
            let (t1, t2) = link_tangents(by_id[&ea.fragment], ea.end, by_id[&eb.fragment], eb.end);
            let Ok(cc) = cocircularity(&pa, &t1, &pb, &t2) else {
                continue;
            };
            if cc < tau_cocirc {
                candidates.push((cc, ea, eb));
            }
        }
    }
    candidates.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));
    let mut used: BTreeSet<Endpoint> = BTreeSet::new();
    let mut links = Vec::new();
    let mut bridges = Vec::new();
    for (cc, a, b) in candidates {
        if used.contains(&a) || used.contains(&b) {
            continue;
        }
        used.insert(a);
        used.insert(b);
        links.push((a, b));
        bridges.push(Bridge {
            from: a,
            to: b,
            from_point: by_id[&a.fragment].endpoint(a.end).coords.into(),
            to_point: by_id[&b.fragment].endpoint(b.end).coords.into(),
            cocircularity: cc,
        });
    }
    (join_links(drawing, &links), bridges)
}
