use std::collections::{BTreeMap, BTreeSet};

use delaunator::{triangulate, Point};

use crate::curve_graph::{project_curve, CameraView, CurveDrawing};
use crate::geom::Point2;

/// Unordered fragment pair, smaller id first.
pub type FragmentPair = (u64, u64);

fn pair(a: u64, b: u64) -> FragmentPair {
    (a.min(b), a.max(b))
}

/// Bucket grid over pixel samples for radius queries.
struct Grid {
    cell: f64,
    origin: Point2,
    buckets: BTreeMap<(i64, i64), Vec<usize>>,
}

impl Grid {
    fn new(pts: &[Point2]) -> Grid {
        let (mut lo, mut hi) = (pts[0], pts[0]);
        for p in pts {
            lo = Point2::new(lo.x.min(p.x), lo.y.min(p.y));
            hi = Point2::new(hi.x.max(p.x), hi.y.max(p.y));
        }
        let extent = (hi - lo).norm().max(1e-9);
        let cell = extent / (pts.len() as f64).sqrt().max(1.0);
        let mut grid = Grid {
            cell,
            origin: lo,
            buckets: BTreeMap::new(),
        };
        for (i, p) in pts.iter().enumerate() {
            grid.buckets.entry(grid.key(p)).or_default().push(i);
        }
        grid
    }

    fn key(&self, p: &Point2) -> (i64, i64) {
        (
            ((p.x - self.origin.x) / self.cell).floor() as i64,
            ((p.y - self.origin.y) / self.cell).floor() as i64,
        )
    }

    /// Whether any sample accepted by `accept` lies strictly within `r` of `c`.
    fn any_within(&self, pts: &[Point2], c: &Point2, r: f64, accept: impl Fn(usize) -> bool) -> bool {
        let (x0, y0) = self.key(&Point2::new(c.x - r, c.y - r));
        let (x1, y1) = self.key(&Point2::new(c.x + r, c.y + r));
        if (x1 - x0 + 1) * (y1 - y0 + 1) > self.buckets.len() as i64 {
            return self
                .buckets
                .values()
                .flatten()
                .any(|&i| accept(i) && (pts[i] - c).norm() < r);
        }
        for x in x0..=x1 {
            for y in y0..=y1 {
                if let Some(b) = self.buckets.get(&(x, y)) {
                    if b.iter().any(|&i| accept(i) && (pts[i] - c).norm() < r) {
                        return true;
                    }
                }
            }
        }
        false
    }
}

/// Neighbour pairs in one view.
fn neighbors_in_view(pts: &[Point2], owner: &[u64], view_id: u64) -> BTreeSet<FragmentPair> {
    let mut out = BTreeSet::new();
    if pts.len() < 2 || owner.iter().all(|&o| o == owner[0]) {
        return out;
    }
    let input: Vec<Point> = pts.iter().map(|p| Point { x: p.x, y: p.y }).collect();
    let tri = triangulate(&input);
    if tri.triangles.is_empty() {
        log::warn!("view {view_id}: projected samples are collinear, using nearest neighbours");
        for i in 0..pts.len() {
            let nearest = (0..pts.len()).filter(|&j| owner[j] != owner[i]).min_by(|&a, &b| {
                (pts[a] - pts[i])
                    .norm()
                    .total_cmp(&(pts[b] - pts[i]).norm())
                    .then(a.cmp(&b))
            });
            if let Some(j) = nearest {
                out.insert(pair(owner[i], owner[j]));
            }
        }
        return out;
    }
    let grid = Grid::new(pts);
    for t in tri.triangles.chunks_exact(3) {
        for k in 0..3 {
            let (a, b) = (t[k], t[(k + 1) % 3]);
            let (fa, fb) = (owner[a], owner[b]);
            if fa == fb || out.contains(&pair(fa, fb)) {
                continue;
            }
            let mid = nalgebra::center(&pts[a], &pts[b]);
            let r = (pts[a] - mid).norm();
            let vetoed = grid.any_within(pts, &mid, r, |i| owner[i] != fa && owner[i] != fb);
            if !vetoed {
                out.insert(pair(fa, fb));
            }
        }
    }
    out
}

/// Fragments whose projections are Delaunay neighbours in at least one view.
///
/// A Delaunay edge joining samples of two fragments makes them neighbours
/// unless a sample of a third fragment lies closer to the edge midpoint than
/// the edge's endpoints do.
pub fn view_topology_neighbors(drawing: &CurveDrawing, views: &[CameraView]) -> BTreeSet<FragmentPair> {
    let mut out = BTreeSet::new();
    for view in views {
        let mut pts = Vec::new();
        let mut owner = Vec::new();
        for f in &drawing.fragments {
            if let Ok(pc) = project_curve(f, view) {
                owner.extend(std::iter::repeat_n(f.id, pc.pixels.len()));
                pts.extend(pc.pixels);
            }
        }
        out.extend(neighbors_in_view(&pts, &owner, view.id));
    }
    out
}
