use crate::bvh::{segment_triangle, Aabb, TriangleBvh};
use crate::geom::{Point2, Point3};
use crate::mesh::{TriMesh, MIN_TRIANGLE_AREA};

fn coplanar(a: &[Point3; 3], b: &[Point3; 3]) -> bool {
    let n = (a[1] - a[0]).cross(&(a[2] - a[0]));
    let len = n.norm();
    if len == 0.0 {
        return false;
    }
    let scale = (a[1] - a[0]).norm().max((a[2] - a[0]).norm()).max((b[1] - b[0]).norm());
    b.iter()
        .all(|p| (n.dot(&(p - a[0])) / len).abs() <= 1e-12 * scale.max(1.0))
}

fn orient(a: &Point2, b: &Point2, c: &Point2) -> f64 {
    (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)
}

fn segments_cross(p1: &Point2, p2: &Point2, q1: &Point2, q2: &Point2) -> bool {
    let d1 = orient(q1, q2, p1);
    let d2 = orient(q1, q2, p2);
    let d3 = orient(p1, p2, q1);
    let d4 = orient(p1, p2, q2);
    d1 * d2 < 0.0 && d3 * d4 < 0.0
}

fn inside(p: &Point2, t: &[Point2; 3]) -> bool {
    let s = [
        orient(&t[0], &t[1], p),
        orient(&t[1], &t[2], p),
        orient(&t[2], &t[0], p),
    ];
    s.iter().all(|&v| v > 0.0) || s.iter().all(|&v| v < 0.0)
}

fn coplanar_overlap(a: &[Point3; 3], b: &[Point3; 3]) -> bool {
    let n = (a[1] - a[0]).cross(&(a[2] - a[0]));
    let axis = n.iamax();
    let drop = |p: &Point3| match axis {
        0 => Point2::new(p.y, p.z),
        1 => Point2::new(p.z, p.x),
        _ => Point2::new(p.x, p.y),
    };
    let ta = [drop(&a[0]), drop(&a[1]), drop(&a[2])];
    let tb = [drop(&b[0]), drop(&b[1]), drop(&b[2])];
    for i in 0..3 {
        for j in 0..3 {
            if segments_cross(&ta[i], &ta[(i + 1) % 3], &tb[j], &tb[(j + 1) % 3]) {
                return true;
            }
        }
    }
    ta.iter().any(|p| inside(p, &tb)) || tb.iter().any(|p| inside(p, &ta))
}

/// Whether two triangles share any point (touching counts in the transversal case).
pub fn triangles_intersect(a: &[Point3; 3], b: &[Point3; 3]) -> bool {
    if coplanar(a, b) {
        return coplanar_overlap(a, b);
    }
    (0..3).any(|i| segment_triangle(&a[i], &a[(i + 1) % 3], b).is_some())
        || (0..3).any(|i| segment_triangle(&b[i], &b[(i + 1) % 3], a).is_some())
}

/// Degeneracy scan: any face with area below [`MIN_TRIANGLE_AREA`], or any two
/// faces without a common vertex that intersect.
pub fn is_degenerate(mesh: &TriMesh) -> bool {
    if (0..mesh.faces.len()).any(|fi| mesh.face_area(fi) < MIN_TRIANGLE_AREA) {
        return true;
    }
    let bvh = TriangleBvh::from_mesh(mesh, 0);
    // Coincident vertex positions count as shared.
    let key = |i: usize| {
        let p = mesh.vertices[i];
        (p.x.to_bits(), p.y.to_bits(), p.z.to_bits())
    };
    for (fi, f) in mesh.faces.iter().enumerate() {
        let tri = mesh.triangle(fi);
        let bounds = Aabb::from_points(tri.iter());
        let fk = [key(f[0]), key(f[1]), key(f[2])];
        let mut hit = false;
        bvh.query_aabb(&bounds, |ti| {
            if hit || ti <= fi {
                return;
            }
            let g = mesh.faces[ti];
            if g.iter().any(|&v| f.contains(&v) || fk.contains(&key(v))) {
                return;
            }
            if triangles_intersect(&tri, bvh.triangle(ti)) {
                hit = true;
            }
        });
        if hit {
            return true;
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{grid, icosphere};

    #[test]
    fn crossing_triangles() {
        let a = [
            Point3::new(0.0, 0.0, 0.0),
            Point3::new(1.0, 0.0, 0.0),
            Point3::new(0.0, 1.0, 0.0),
        ];
        let b = [
            Point3::new(0.2, 0.2, -1.0),
            Point3::new(0.2, 0.2, 1.0),
            Point3::new(0.3, 0.5, 0.0),
        ];
        assert!(triangles_intersect(&a, &b));
        let far = [
            Point3::new(5.0, 0.0, -1.0),
            Point3::new(5.0, 0.0, 1.0),
            Point3::new(5.0, 1.0, 0.0),
        ];
        assert!(!triangles_intersect(&a, &far));
    }

    #[test]
    fn coplanar_overlap_detected() {
        let a = [
            Point3::new(0.0, 0.0, 0.0),
            Point3::new(1.0, 0.0, 0.0),
            Point3::new(0.0, 1.0, 0.0),
        ];
        let b = [
            Point3::new(0.2, 0.2, 0.0),
            Point3::new(2.0, 0.2, 0.0),
            Point3::new(0.2, 2.0, 0.0),
        ];
        assert!(triangles_intersect(&a, &b));
        let c = [
            Point3::new(2.0, 2.0, 0.0),
            Point3::new(3.0, 2.0, 0.0),
            Point3::new(2.0, 3.0, 0.0),
        ];
        assert!(!triangles_intersect(&a, &c));
    }

    #[test]
    fn clean_meshes_are_not_degenerate() {
        assert!(!is_degenerate(&grid(4, 3, 1.0, 1.0).triangulate()));
        assert!(!is_degenerate(&icosphere(1.0, 2)));
    }

    #[test]
    fn folded_strip_is_degenerate() {
        let mut g = grid(4, 1, 1.0, 0.2);
        // Fold the last column back over the first.
        for v in g.vertices.iter_mut() {
            if v.x > 0.9 {
                v.x = 0.1;
                v.z = 0.0;
            }
        }
        assert!(is_degenerate(&g.triangulate()));
    }
}
