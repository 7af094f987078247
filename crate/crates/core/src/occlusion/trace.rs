use crate::bvh::{segment_triangle, TriangleBvh};
use crate::curve_graph::{CameraView, CurveFragment};
use crate::geom::{point_triangle_distance, Point2, Point3};
use crate::hypothesis::SurfaceHypothesis;

/// Relative ray parameter margin at both ends of a camera ray.
pub const RAY_EPS: f64 = 1e-6;

/// A fragment sampled densely enough that consecutive samples project at
/// most one pixel apart.
#[derive(Clone, Debug)]
pub struct DenseCurve {
    pub points: Vec<Point3>,
    /// 3D arclength of each sample (m).
    pub s: Vec<f64>,
    /// Pixel position, `None` behind the camera.
    pub pixels: Vec<Option<Point2>>,
    /// Cumulative pixel arclength over consecutive projected samples.
    pub s_px: Vec<f64>,
}

const MAX_SPLITS: usize = 4096;

impl DenseCurve {
    pub fn new(fragment: &CurveFragment, view: &CameraView) -> DenseCurve {
        let mut pts = fragment.points.clone();
        if fragment.closed {
            pts.push(pts[0]);
        }
        let mut out = DenseCurve {
            points: Vec::new(),
            s: Vec::new(),
            pixels: Vec::new(),
            s_px: Vec::new(),
        };
        let mut s = 0.0;
        let push = |out: &mut DenseCurve, p: Point3, s: f64| {
            let px = view.project(&p);
            let prev = out.pixels.last().copied().flatten();
            let step = match (prev, px) {
                (Some(a), Some(b)) => (b - a).norm(),
                _ => 0.0,
            };
            let acc = out.s_px.last().copied().unwrap_or(0.0) + step;
            out.points.push(p);
            out.s.push(s);
            out.pixels.push(px);
            out.s_px.push(acc);
        };
        push(&mut out, pts[0], 0.0);
        for w in pts.windows(2) {
            let (a, b) = (w[0], w[1]);
            let len = (b - a).norm();
            let n = match (view.project(&a), view.project(&b)) {
                (Some(pa), Some(pb)) => ((pb - pa).norm().ceil() as usize).clamp(1, MAX_SPLITS),
                _ => 1,
            };
            for k in 1..=n {
                let t = k as f64 / n as f64;
                push(&mut out, a + (b - a) * t, s + len * t);
            }
            s += len;
        }
        out
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Whether sample `i` projects inside the image.
    pub fn observable(&self, i: usize, view: &CameraView) -> bool {
        self.pixels[i].is_some_and(|p| view.in_image(&p))
    }
}

/// Ray tracer over the triangles of a set of hypotheses.
pub struct RayTracer {
    bvh: TriangleBvh,
}

impl RayTracer {
    /// Triangles are tagged with the position of their hypothesis in `hyps`.
    pub fn new<'a>(hyps: impl IntoIterator<Item = &'a SurfaceHypothesis>) -> RayTracer {
        RayTracer {
            bvh: TriangleBvh::from_meshes(hyps.into_iter().map(|h| &h.tri)),
        }
    }

    pub fn bvh(&self) -> &TriangleBvh {
        &self.bvh
    }

    /// Hypothesis indices crossed by the ray from `eye` to `target`, sorted and unique.
    ///
    /// Hits within `contact` metres of the target count as contact, not
    /// occlusion, and a hypothesis passing within `contact` of the target never
    /// occludes it: the sample lies on that surface.
    pub fn occluders(&self, eye: &Point3, target: &Point3, contact: f64) -> Vec<u32> {
        let hi = upper_limit(eye, target, contact);
        let mut out = Vec::new();
        self.bvh.segment_hits(eye, target, RAY_EPS, |ti, t| {
            if t < hi {
                out.push(self.bvh.tag(ti));
            }
        });
        out.sort_unstable();
        out.dedup();
        out.retain(|&tag| !self.touches(target, contact, tag));
        out
    }

    /// Whether a ray is blocked by any hypothesis accepted by `filter`.
    pub fn blocked(&self, eye: &Point3, target: &Point3, contact: f64, filter: impl Fn(u32) -> bool) -> bool {
        let hi = upper_limit(eye, target, contact);
        let mut tags = Vec::new();
        self.bvh.segment_hits(eye, target, RAY_EPS, |ti, t| {
            let tag = self.bvh.tag(ti);
            if t < hi && filter(tag) && !tags.contains(&tag) {
                tags.push(tag);
            }
        });
        tags.iter().any(|&tag| !self.touches(target, contact, tag))
    }

    /// Same as [`RayTracer::occluders`] by scanning every triangle.
    pub fn occluders_linear(&self, eye: &Point3, target: &Point3, contact: f64) -> Vec<u32> {
        let hi = upper_limit(eye, target, contact);
        let mut out: Vec<u32> = (0..self.bvh.len())
            .filter(|&ti| segment_triangle(eye, target, self.bvh.triangle(ti)).is_some_and(|t| t > RAY_EPS && t < hi))
            .map(|ti| self.bvh.tag(ti))
            .collect();
        out.sort_unstable();
        out.dedup();
        out.retain(|&tag| {
            !(0..self.bvh.len()).any(|ti| {
                let [a, b, c] = self.bvh.triangle(ti);
                self.bvh.tag(ti) == tag && point_triangle_distance(target, a, b, c) <= contact
            })
        });
        out
    }

    fn touches(&self, p: &Point3, contact: f64, tag: u32) -> bool {
        contact > 0.0 && self.bvh.nearest(p, contact, |t| t == tag).is_some()
    }
}

fn upper_limit(eye: &Point3, target: &Point3, contact: f64) -> f64 {
    let len = (target - eye).norm();
    let contact_t = if len > 0.0 { contact / len } else { 0.0 };
    1.0 - RAY_EPS.max(contact_t)
}

/// Converts per-sample occlusion flags into padded intervals over `coord`.
///
/// Each maximal run is widened by half the spacing to the neighbouring
/// samples and clamped to the coordinate range.
pub fn runs_to_intervals(flags: &[bool], coord: &[f64]) -> Vec<(f64, f64)> {
    let n = flags.len();
    let mut out = Vec::new();
    let mut i = 0;
    while i < n {
        if !flags[i] {
            i += 1;
            continue;
        }
        let start = i;
        while i + 1 < n && flags[i + 1] {
            i += 1;
        }
        let a = if start > 0 {
            0.5 * (coord[start - 1] + coord[start])
        } else {
            coord[0]
        };
        let b = if i + 1 < n {
            0.5 * (coord[i] + coord[i + 1])
        } else {
            coord[n - 1]
        };
        if b > a {
            out.push((a, b));
        }
        i += 1;
    }
    out
}

/// Arclength intervals (m) of `curve` hidden from `view` by `hyp`.
///
/// A hypothesis never occludes its own source fragments.
pub fn occluded_intervals(
    curve: &CurveFragment,
    hyp: &SurfaceHypothesis,
    view: &CameraView,
    contact: f64,
) -> Vec<(f64, f64)> {
    if hyp.has_source(curve.id) {
        return Vec::new();
    }
    let tracer = RayTracer::new([hyp]);
    let dense = DenseCurve::new(curve, view);
    let flags: Vec<bool> = (0..dense.len())
        .map(|i| {
            dense.observable(i, view)
                && !tracer
                    .occluders(&view.camera_center, &dense.points[i], contact)
                    .is_empty()
        })
        .collect();
    runs_to_intervals(&flags, &dense.s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn runs_are_padded_and_clamped() {
        let coord = [0.0, 1.0, 2.0, 3.0, 4.0];
        assert_eq!(
            runs_to_intervals(&[false, true, true, false, false], &coord),
            vec![(0.5, 2.5)]
        );
        assert_eq!(
            runs_to_intervals(&[true, false, false, false, true], &coord),
            vec![(0.0, 0.5), (3.5, 4.0)]
        );
        assert!(runs_to_intervals(&[false; 5], &coord).is_empty());
    }
}
