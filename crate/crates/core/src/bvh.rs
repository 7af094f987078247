//! Bounding volume hierarchy over tagged triangles.
//!
//! Segment queries use the watertight ray/triangle test of Woop, Benthin and
//! Wald (JCGT 2013), so a segment passing exactly through a shared edge or
//! vertex reports a hit on at least one of the adjacent triangles.

use crate::geom::{closest_point_on_triangle, Point3, Vec3};
use crate::mesh::TriMesh;

const LEAF_SIZE: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Aabb {
    pub min: Point3,
    pub max: Point3,
}

impl Aabb {
    pub fn empty() -> Self {
        Aabb {
            min: Point3::new(f64::INFINITY, f64::INFINITY, f64::INFINITY),
            max: Point3::new(f64::NEG_INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY),
        }
    }

    pub fn from_points<'a>(pts: impl IntoIterator<Item = &'a Point3>) -> Self {
        let mut b = Aabb::empty();
        for p in pts {
            b.grow(p);
        }
        b
    }

    pub fn grow(&mut self, p: &Point3) {
        self.min = self.min.inf(p);
        self.max = self.max.sup(p);
    }

    pub fn union(&self, o: &Aabb) -> Aabb {
        Aabb {
            min: self.min.inf(&o.min),
            max: self.max.sup(&o.max),
        }
    }

    pub fn expanded(&self, r: f64) -> Aabb {
        let d = Vec3::repeat(r);
        Aabb {
            min: self.min - d,
            max: self.max + d,
        }
    }

    pub fn overlaps(&self, o: &Aabb) -> bool {
        (0..3).all(|k| self.min[k] <= o.max[k] && o.min[k] <= self.max[k])
    }

    pub fn contains(&self, p: &Point3) -> bool {
        (0..3).all(|k| self.min[k] <= p[k] && p[k] <= self.max[k])
    }

    pub fn diagonal(&self) -> f64 {
        (self.max - self.min).norm()
    }

    pub fn center(&self) -> Point3 {
        nalgebra::center(&self.min, &self.max)
    }

    /// Squared distance from `p` to the box (0 inside).
    pub fn distance_squared(&self, p: &Point3) -> f64 {
        (0..3)
            .map(|k| {
                let d = (self.min[k] - p[k]).max(p[k] - self.max[k]).max(0.0);
                d * d
            })
            .sum()
    }

    /// Whether the segment `origin + t * dir`, `t` in `[0, 1]`, touches the box.
    fn hit_by_segment(&self, origin: &Point3, inv_dir: &Vec3) -> bool {
        let mut t0: f64 = 0.0;
        let mut t1: f64 = 1.0;
        for k in 0..3 {
            if inv_dir[k].is_infinite() {
                // Parallel to the slab: inside it or never.
                if origin[k] < self.min[k] || origin[k] > self.max[k] {
                    return false;
                }
                continue;
            }
            let a = (self.min[k] - origin[k]) * inv_dir[k];
            let b = (self.max[k] - origin[k]) * inv_dir[k];
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            t0 = t0.max(lo);
            t1 = t1.min(hi);
            if t0 > t1 * (1.0 + 4.0 * f64::EPSILON) {
                return false;
            }
        }
        true
    }
}

#[derive(Clone, Copy, Debug)]
struct Node {
    bounds: Aabb,
    /// Leaf: first index into `order`. Internal: index of the left child (right is `start + 1`).
    start: u32,
    /// Number of triangles for a leaf, 0 for an internal node.
    count: u32,
}

/// Precomputed shear constants for the watertight test.
struct Ray {
    origin: Point3,
    kx: usize,
    ky: usize,
    kz: usize,
    sx: f64,
    sy: f64,
    sz: f64,
}

impl Ray {
    fn new(origin: Point3, dir: Vec3) -> Option<Ray> {
        let abs = dir.abs();
        let kz = if abs.x >= abs.y && abs.x >= abs.z {
            0
        } else if abs.y >= abs.z {
            1
        } else {
            2
        };
        if dir[kz] == 0.0 {
            return None;
        }
        let mut kx = (kz + 1) % 3;
        let mut ky = (kx + 1) % 3;
        if dir[kz] < 0.0 {
            std::mem::swap(&mut kx, &mut ky);
        }
        Some(Ray {
            origin,
            kx,
            ky,
            kz,
            sx: dir[kx] / dir[kz],
            sy: dir[ky] / dir[kz],
            sz: 1.0 / dir[kz],
        })
    }

    /// Ray parameter of the hit (in units of `dir`), or `None`.
    fn intersect(&self, tri: &[Point3; 3]) -> Option<f64> {
        let a = tri[0] - self.origin;
        let b = tri[1] - self.origin;
        let c = tri[2] - self.origin;
        let (kx, ky, kz) = (self.kx, self.ky, self.kz);
        let ax = a[kx] - self.sx * a[kz];
        let ay = a[ky] - self.sy * a[kz];
        let bx = b[kx] - self.sx * b[kz];
        let by = b[ky] - self.sy * b[kz];
        let cx = c[kx] - self.sx * c[kz];
        let cy = c[ky] - self.sy * c[kz];
        let u = cx * by - cy * bx;
        let v = ax * cy - ay * cx;
        let w = bx * ay - by * ax;
        if (u < 0.0 || v < 0.0 || w < 0.0) && (u > 0.0 || v > 0.0 || w > 0.0) {
            return None;
        }
        let det = u + v + w;
        if det == 0.0 {
            return None;
        }
        let t = (u * self.sz * a[kz] + v * self.sz * b[kz] + w * self.sz * c[kz]) / det;
        t.is_finite().then_some(t)
    }
}

/// Parameter `t` in `[0, 1]` at which the segment `from -> to` crosses the triangle, if it does.
pub fn segment_triangle(from: &Point3, to: &Point3, tri: &[Point3; 3]) -> Option<f64> {
    let ray = Ray::new(*from, to - from)?;
    ray.intersect(tri).filter(|t| (0.0..=1.0).contains(t))
}

/// Static BVH over triangles, each carrying a caller-defined tag.
#[derive(Clone, Debug)]
pub struct TriangleBvh {
    nodes: Vec<Node>,
    order: Vec<u32>,
    triangles: Vec<[Point3; 3]>,
    tags: Vec<u32>,
}

impl TriangleBvh {
    pub fn new(triangles: Vec<[Point3; 3]>, tags: Vec<u32>) -> Self {
        assert_eq!(triangles.len(), tags.len());
        let mut bvh = TriangleBvh {
            nodes: Vec::new(),
            order: (0..triangles.len() as u32).collect(),
            triangles,
            tags,
        };
        if bvh.triangles.is_empty() {
            return bvh;
        }
        let bounds: Vec<Aabb> = bvh.triangles.iter().map(|t| Aabb::from_points(t.iter())).collect();
        let centroids: Vec<Point3> = bounds.iter().map(|b| b.center()).collect();
        bvh.nodes.push(Node {
            bounds: Aabb::empty(),
            start: 0,
            count: 0,
        });
        let n = bvh.triangles.len();
        bvh.build(0, 0, n, &bounds, &centroids);
        bvh
    }

    pub fn from_mesh(mesh: &TriMesh, tag: u32) -> Self {
        let tris: Vec<[Point3; 3]> = (0..mesh.faces.len()).map(|i| mesh.triangle(i)).collect();
        let tags = vec![tag; tris.len()];
        TriangleBvh::new(tris, tags)
    }

    /// Builds over several meshes, tagging triangles with the mesh index.
    pub fn from_meshes<'a>(meshes: impl IntoIterator<Item = &'a TriMesh>) -> Self {
        let mut tris = Vec::new();
        let mut tags = Vec::new();
        for (k, m) in meshes.into_iter().enumerate() {
            for i in 0..m.faces.len() {
                tris.push(m.triangle(i));
                tags.push(k as u32);
            }
        }
        TriangleBvh::new(tris, tags)
    }

    fn build(&mut self, node: usize, start: usize, end: usize, bounds: &[Aabb], centroids: &[Point3]) {
        let mut b = Aabb::empty();
        let mut cb = Aabb::empty();
        for &i in &self.order[start..end] {
            b = b.union(&bounds[i as usize]);
            cb.grow(&centroids[i as usize]);
        }
        self.nodes[node].bounds = b;
        let count = end - start;
        let extent = cb.max - cb.min;
        let axis = extent.imax();
        if count <= LEAF_SIZE || extent[axis] <= 0.0 {
            self.nodes[node].start = start as u32;
            self.nodes[node].count = count as u32;
            return;
        }
        let mid = start + count / 2;
        self.order[start..end].select_nth_unstable_by(mid - start, |&a, &b| {
            centroids[a as usize][axis]
                .total_cmp(&centroids[b as usize][axis])
                .then(a.cmp(&b))
        });
        let left = self.nodes.len();
        for _ in 0..2 {
            self.nodes.push(Node {
                bounds: Aabb::empty(),
                start: 0,
                count: 0,
            });
        }
        self.nodes[node].start = left as u32;
        self.nodes[node].count = 0;
        self.build(left, start, mid, bounds, centroids);
        self.build(left + 1, mid, end, bounds, centroids);
    }

    pub fn len(&self) -> usize {
        self.triangles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }

    pub fn triangle(&self, i: usize) -> &[Point3; 3] {
        &self.triangles[i]
    }

    pub fn tag(&self, i: usize) -> u32 {
        self.tags[i]
    }

    pub fn bounds(&self) -> Aabb {
        self.nodes.first().map(|n| n.bounds).unwrap_or_else(Aabb::empty)
    }

    /// Calls `hit(triangle, t)` for every crossing of the segment `from -> to`
    /// with `t` strictly inside `(eps, 1 - eps)`.
    pub fn segment_hits(&self, from: &Point3, to: &Point3, eps: f64, mut hit: impl FnMut(usize, f64)) {
        let dir = to - from;
        let Some(ray) = Ray::new(*from, dir) else {
            return;
        };
        if self.nodes.is_empty() {
            return;
        }
        let inv = Vec3::new(1.0 / dir.x, 1.0 / dir.y, 1.0 / dir.z);
        let mut stack = vec![0usize];
        while let Some(ni) = stack.pop() {
            let node = &self.nodes[ni];
            if !node.bounds.hit_by_segment(from, &inv) {
                continue;
            }
            if node.count > 0 {
                let s = node.start as usize;
                for &ti in &self.order[s..s + node.count as usize] {
                    let ti = ti as usize;
                    if let Some(t) = ray.intersect(&self.triangles[ti]) {
                        if t > eps && t < 1.0 - eps {
                            hit(ti, t);
                        }
                    }
                }
            } else {
                stack.push(node.start as usize + 1);
                stack.push(node.start as usize);
            }
        }
    }

    /// Whether any triangle accepted by `filter` crosses the segment within `(eps, 1 - eps)`.
    pub fn segment_blocked(&self, from: &Point3, to: &Point3, eps: f64, filter: impl Fn(u32) -> bool) -> bool {
        let dir = to - from;
        let Some(ray) = Ray::new(*from, dir) else {
            return false;
        };
        if self.nodes.is_empty() {
            return false;
        }
        let inv = Vec3::new(1.0 / dir.x, 1.0 / dir.y, 1.0 / dir.z);
        let mut stack = vec![0usize];
        while let Some(ni) = stack.pop() {
            let node = &self.nodes[ni];
            if !node.bounds.hit_by_segment(from, &inv) {
                continue;
            }
            if node.count > 0 {
                let s = node.start as usize;
                for &ti in &self.order[s..s + node.count as usize] {
                    let ti = ti as usize;
                    if !filter(self.tags[ti]) {
                        continue;
                    }
                    if let Some(t) = ray.intersect(&self.triangles[ti]) {
                        if t > eps && t < 1.0 - eps {
                            return true;
                        }
                    }
                }
            } else {
                stack.push(node.start as usize + 1);
                stack.push(node.start as usize);
            }
        }
        false
    }

    /// Closest triangle accepted by `filter` within `max_dist`, as `(distance, triangle)`.
    pub fn nearest(&self, p: &Point3, max_dist: f64, filter: impl Fn(u32) -> bool) -> Option<(f64, usize)> {
        if self.nodes.is_empty() {
            return None;
        }
        let mut best = max_dist * max_dist;
        let mut found: Option<usize> = None;
        let mut stack = vec![(0usize, self.nodes[0].bounds.distance_squared(p))];
        while let Some((ni, d2)) = stack.pop() {
            if d2 > best {
                continue;
            }
            let node = &self.nodes[ni];
            if node.count > 0 {
                let s = node.start as usize;
                for &ti in &self.order[s..s + node.count as usize] {
                    let ti = ti as usize;
                    if !filter(self.tags[ti]) {
                        continue;
                    }
                    let [a, b, c] = &self.triangles[ti];
                    let q = closest_point_on_triangle(p, a, b, c);
                    let dd = (p - q).norm_squared();
                    if dd <= best {
                        best = dd;
                        found = Some(ti);
                    }
                }
            } else {
                let l = node.start as usize;
                let dl = self.nodes[l].bounds.distance_squared(p);
                let dr = self.nodes[l + 1].bounds.distance_squared(p);
                // Push the farther child first so the nearer one is explored first.
                if dl <= dr {
                    stack.push((l + 1, dr));
                    stack.push((l, dl));
                } else {
                    stack.push((l, dl));
                    stack.push((l + 1, dr));
                }
            }
        }
        found.map(|ti| (best.sqrt(), ti))
    }

    /// Distance to the closest triangle accepted by `filter`, or infinity.
    pub fn distance(&self, p: &Point3, filter: impl Fn(u32) -> bool) -> f64 {
        self.nearest(p, f64::INFINITY, filter).map_or(f64::INFINITY, |(d, _)| d)
    }

    /// Calls `visit(triangle)` for every triangle whose box overlaps `query`.
    pub fn query_aabb(&self, query: &Aabb, mut visit: impl FnMut(usize)) {
        if self.nodes.is_empty() {
            return;
        }
        let mut stack = vec![0usize];
        while let Some(ni) = stack.pop() {
            let node = &self.nodes[ni];
            if !node.bounds.overlaps(query) {
                continue;
            }
            if node.count > 0 {
                let s = node.start as usize;
                for &ti in &self.order[s..s + node.count as usize] {
                    if Aabb::from_points(self.triangles[ti as usize].iter()).overlaps(query) {
                        visit(ti as usize);
                    }
                }
            } else {
                stack.push(node.start as usize + 1);
                stack.push(node.start as usize);
            }
        }
    }
}
