use std::cmp::Ordering;

use crate::bvh::Aabb;
use crate::curve_graph::{CurveDrawing, CurveFragment};
use crate::geom::{point_polyline_distance, Point3};

/// Outcome of one overlap removal.
#[derive(Clone, Debug, Default, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct DedupEvent {
    /// Fragment that lost samples.
    pub shorter: u64,
    /// Fragment it overlapped.
    pub longer: u64,
    pub removed_samples: usize,
    /// Ids of the surviving pieces (empty when the fragment vanished).
    pub pieces: Vec<u64>,
}

fn longer_first(a: &CurveFragment, b: &CurveFragment) -> Ordering {
    b.arclength().total_cmp(&a.arclength()).then(a.id.cmp(&b.id))
}

/// Sample mask of `f` lying within `eps` of `other`.
///
/// An open endpoint whose neighbour survives is kept: it is a junction
/// shared with `other`, not an overlap.
pub(crate) fn overlap_mask(f: &CurveFragment, other: &CurveFragment, eps: f64) -> Vec<bool> {
    let n = f.points.len();
    let bounds = Aabb::from_points(other.points.iter()).expanded(eps);
    let mut mask: Vec<bool> = f
        .points
        .iter()
        .map(|p| bounds.contains(p) && point_polyline_distance(p, &other.points, other.closed) <= eps)
        .collect();
    if !f.closed && n >= 2 {
        if mask[0] && !mask[1] {
            mask[0] = false;
        }
        if mask[n - 1] && !mask[n - 2] {
            mask[n - 1] = false;
        }
    }
    mask
}

/// Splits `f` into the maximal runs of unmasked samples; runs with fewer than 2 points vanish.
fn split_runs(f: &CurveFragment, mask: &[bool]) -> Vec<Vec<Point3>> {
    let n = f.points.len();
    let mut runs: Vec<Vec<Point3>> = Vec::new();
    if f.closed {
        let Some(first_cut) = mask.iter().position(|&m| m) else {
            return vec![f.points.clone()];
        };
        let mut current: Vec<Point3> = Vec::new();
        for k in 1..=n {
            let i = (first_cut + k) % n;
            if mask[i] {
                if !current.is_empty() {
                    runs.push(std::mem::take(&mut current));
                }
            } else {
                current.push(f.points[i]);
            }
        }
        if !current.is_empty() {
            runs.push(current);
        }
    } else {
        let mut current: Vec<Point3> = Vec::new();
        for (i, p) in f.points.iter().enumerate() {
            if mask[i] {
                if !current.is_empty() {
                    runs.push(std::mem::take(&mut current));
                }
            } else {
                current.push(*p);
            }
        }
        if !current.is_empty() {
            runs.push(current);
        }
    }
    runs.retain(|r| r.len() >= 2);
    runs
}

/// Removes overlapping stretches: samples of the shorter fragment of each pair lying within
/// `overlap_eps` of the longer one are deleted and the remainder split into pieces.
///
/// Length ties go to the lower id. The first piece keeps the original id; later
/// pieces get fresh ids. Passes repeat until nothing changes.
pub fn dedup_overlaps(drawing: &CurveDrawing, overlap_eps: f64) -> (CurveDrawing, Vec<DedupEvent>) {
    let mut fragments = drawing.fragments.clone();
    let mut next_id = drawing.next_id();
    let mut events = Vec::new();
    if overlap_eps <= 0.0 {
        return (drawing.clone(), events);
    }
    loop {
        fragments.sort_by(longer_first);
        let mut kept: Vec<CurveFragment> = Vec::with_capacity(fragments.len());
        let mut deferred: Vec<CurveFragment> = Vec::new();
        let mut changed = false;
        for f in &fragments {
            let mut current = f.clone();
            let mut alive = true;
            for other in &kept {
                let mask = overlap_mask(&current, other, overlap_eps);
                let removed = mask.iter().filter(|&&m| m).count();
                if removed == 0 {
                    continue;
                }
                changed = true;
                let runs = split_runs(&current, &mask);
                let mut pieces = Vec::new();
                let mut rest = Vec::new();
                for (k, pts) in runs.into_iter().enumerate() {
                    let id = if k == 0 {
                        current.id
                    } else {
                        next_id += 1;
                        next_id - 1
                    };
                    pieces.push(id);
                    rest.push(CurveFragment::new(id, pts, false));
                }
                events.push(DedupEvent {
                    shorter: current.id,
                    longer: other.id,
                    removed_samples: removed,
                    pieces,
                });
                // Later pieces are checked in the next pass; the first continues here.
                let mut iter = rest.into_iter();
                match iter.next() {
                    Some(first) => current = first,
                    None => {
                        alive = false;
                    }
                }
                deferred.extend(iter);
                if !alive {
                    break;
                }
            }
            if alive {
                kept.push(current);
            }
        }
        kept.append(&mut deferred);
        fragments = kept;
        if !changed {
            break;
        }
    }
    fragments.sort_by_key(|f| f.id);
    (CurveDrawing::from_fragments(fragments), events)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(id: u64, x0: f64, x1: f64, y: f64, n: usize) -> CurveFragment {
        CurveFragment::new(
            id,
            (0..n)
                .map(|i| Point3::new(x0 + (x1 - x0) * i as f64 / (n - 1) as f64, y, 0.0))
                .collect(),
            false,
        )
    }

    #[test]
    fn identical_duplicate_vanishes() {
        let d = CurveDrawing::from_fragments(vec![line(3, 0.0, 1.0, 0.0, 11), line(7, 0.0, 1.0, 0.0, 11)]);
        let (out, events) = dedup_overlaps(&d, 0.005);
        assert_eq!(out.fragments.len(), 1);
        assert_eq!(out.fragments[0].id, 3);
        assert_eq!(out.fragments[0], d.fragments[0]);
        assert_eq!(events.len(), 1);
        assert!(events[0].pieces.is_empty());
    }

    #[test]
    fn disjoint_fragments_untouched() {
        let d = CurveDrawing::from_fragments(vec![line(0, 0.0, 1.0, 0.0, 11), line(1, 0.0, 1.0, 0.5, 11)]);
        let (out, events) = dedup_overlaps(&d, 0.005);
        assert_eq!(out, d);
        assert!(events.is_empty());
    }

    #[test]
    fn middle_overlap_splits_shorter() {
        // The longer fragment runs along x in [0.3, 0.6] and then turns away.
        let mut pts = line(0, 0.3, 0.6, 0.0, 31).points;
        pts.extend((1..=10).map(|i| Point3::new(0.6, i as f64 * 0.1, 0.0)));
        let long = CurveFragment::new(0, pts, false);
        let short = line(1, 0.0, 0.9, 0.002, 10);
        let d = CurveDrawing::from_fragments(vec![long.clone(), short]);
        let (out, _) = dedup_overlaps(&d, 0.005);
        // Samples at x = 0.3, 0.4, 0.5, 0.6 are removed.
        assert_eq!(out.fragments.len(), 3);
        let pieces: Vec<usize> = out
            .fragments
            .iter()
            .filter(|f| f.id != 0)
            .map(|f| f.points.len())
            .collect();
        assert_eq!(pieces, vec![3, 3]);
        assert_eq!(out.fragment(0), Some(&long));
    }

    #[test]
    fn junction_endpoints_survive() {
        let a = line(0, 0.0, 1.0, 0.0, 11);
        let b = CurveFragment::new(
            1,
            (0..5).map(|i| Point3::new(1.0, i as f64 * 0.1, 0.0)).collect(),
            false,
        );
        let d = CurveDrawing::from_fragments(vec![a, b]);
        let (out, events) = dedup_overlaps(&d, 0.005);
        assert_eq!(out, d);
        assert!(events.is_empty());
    }
}
