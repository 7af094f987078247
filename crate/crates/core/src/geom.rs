//! Small geometric kernels shared by every stage.

pub type Point3 = nalgebra::Point3<f64>;
pub type Vec3 = nalgebra::Vector3<f64>;
pub type Point2 = nalgebra::Point2<f64>;
pub type Vec2 = nalgebra::Vector2<f64>;

/// Closest point to `p` on the segment `[a, b]`.
pub fn closest_point_on_segment(p: &Point3, a: &Point3, b: &Point3) -> Point3 {
    let ab = b - a;
    let len2 = ab.norm_squared();
    if len2 <= f64::MIN_POSITIVE {
        return *a;
    }
    let t = ((p - a).dot(&ab) / len2).clamp(0.0, 1.0);
    a + ab * t
}

pub fn point_segment_distance(p: &Point3, a: &Point3, b: &Point3) -> f64 {
    (p - closest_point_on_segment(p, a, b)).norm()
}

pub fn point_segment_distance_2d(p: &Point2, a: &Point2, b: &Point2) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_squared();
    if len2 <= f64::MIN_POSITIVE {
        return (p - a).norm();
    }
    let t = ((p - a).dot(&ab) / len2).clamp(0.0, 1.0);
    (p - (a + ab * t)).norm()
}

/// Distance from `p` to a polyline; `closed` adds the last-to-first segment.
pub fn point_polyline_distance(p: &Point3, pts: &[Point3], closed: bool) -> f64 {
    match pts.len() {
        0 => f64::INFINITY,
        1 => (p - pts[0]).norm(),
        n => {
            let mut best = f64::INFINITY;
            for w in pts.windows(2) {
                best = best.min(point_segment_distance(p, &w[0], &w[1]));
            }
            if closed && n > 2 {
                best = best.min(point_segment_distance(p, &pts[n - 1], &pts[0]));
            }
            best
        }
    }
}

/// Closest point on triangle `abc` (Ericson, Real-Time Collision Detection 5.1.5).
pub fn closest_point_on_triangle(p: &Point3, a: &Point3, b: &Point3, c: &Point3) -> Point3 {
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;
    let d1 = ab.dot(&ap);
    let d2 = ac.dot(&ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return *a;
    }
    let bp = p - b;
    let d3 = ab.dot(&bp);
    let d4 = ac.dot(&bp);
    if d3 >= 0.0 && d4 <= d3 {
        return *b;
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        let v = d1 / (d1 - d3);
        return a + ab * v;
    }
    let cp = p - c;
    let d5 = ab.dot(&cp);
    let d6 = ac.dot(&cp);
    if d6 >= 0.0 && d5 <= d6 {
        return *c;
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        let w = d2 / (d2 - d6);
        return a + ac * w;
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        let w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return b + (c - b) * w;
    }
    let denom = 1.0 / (va + vb + vc);
    let v = vb * denom;
    let w = vc * denom;
    a + ab * v + ac * w
}

pub fn point_triangle_distance(p: &Point3, a: &Point3, b: &Point3, c: &Point3) -> f64 {
    (p - closest_point_on_triangle(p, a, b, c)).norm()
}

pub fn triangle_area(a: &Point3, b: &Point3, c: &Point3) -> f64 {
    0.5 * (b - a).cross(&(c - a)).norm()
}

/// Unsigned angle between two vectors in `[0, pi]`, robust near 0 and pi.
pub fn angle_between(u: &Vec3, v: &Vec3) -> f64 {
    u.cross(v).norm().atan2(u.dot(v))
}

/// Wrap an undirected line orientation into `[0, pi)`.
pub fn normalize_orientation(theta: f64) -> f64 {
    let pi = std::f64::consts::PI;
    let mut t = theta.rem_euclid(pi);
    if t >= pi {
        t -= pi;
    }
    t
}

/// Difference between two undirected orientations, in `[0, pi/2]`.
pub fn orientation_difference(a: f64, b: f64) -> f64 {
    let pi = std::f64::consts::PI;
    let d = (a - b).rem_euclid(pi);
    d.min(pi - d)
}

/// Cumulative arclength of a polyline, starting at 0.
pub fn cumulative_lengths(pts: &[Point3]) -> Vec<f64> {
    let mut out = Vec::with_capacity(pts.len());
    let mut acc = 0.0;
    out.push(0.0);
    for w in pts.windows(2) {
        acc += (w[1] - w[0]).norm();
        out.push(acc);
    }
    if pts.is_empty() {
        out.clear();
    }
    out
}

/// Point at arclength `s` along an open polyline with precomputed cumulative lengths.
pub fn point_at_arclength(pts: &[Point3], cum: &[f64], s: f64) -> Point3 {
    let n = pts.len();
    if s <= 0.0 {
        return pts[0];
    }
    if s >= cum[n - 1] {
        return pts[n - 1];
    }
    let i = match cum.binary_search_by(|c| c.partial_cmp(&s).unwrap()) {
        Ok(i) => return pts[i],
        Err(i) => i - 1,
    };
    let seg = cum[i + 1] - cum[i];
    let t = if seg > 0.0 { (s - cum[i]) / seg } else { 0.0 };
    pts[i] + (pts[i + 1] - pts[i]) * t
}

/// Uniformly resample an open polyline to exactly `n >= 2` points; endpoints kept exactly.
pub fn resample_open(pts: &[Point3], n: usize) -> Vec<Point3> {
    assert!(n >= 2 && pts.len() >= 2);
    let cum = cumulative_lengths(pts);
    let total = cum[pts.len() - 1];
    let mut out = Vec::with_capacity(n);
    out.push(pts[0]);
    for k in 1..n - 1 {
        let s = total * k as f64 / (n - 1) as f64;
        out.push(point_at_arclength(pts, &cum, s));
    }
    out.push(pts[pts.len() - 1]);
    out
}

/// Uniformly resample a closed polygon to `n` points starting at `pts[0]`.
pub fn resample_closed(pts: &[Point3], n: usize) -> Vec<Point3> {
    let mut ring = pts.to_vec();
    ring.push(pts[0]);
    let cum = cumulative_lengths(&ring);
    let total = cum[ring.len() - 1];
    (0..n)
        .map(|k| point_at_arclength(&ring, &cum, total * k as f64 / n as f64))
        .collect()
}
