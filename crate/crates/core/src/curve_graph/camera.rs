use nalgebra::{Matrix3, Matrix3x4, Vector4};

use super::CurveFragment;
use crate::error::{Error, Result};
use crate::geom::{normalize_orientation, Point2, Point3, Vec3};

/// An oriented image edge. Orientation is an undirected line angle in `[0, pi)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EdgeElement {
    pub position: Point2,
    pub orientation: f64,
    pub strength: f64,
}

impl EdgeElement {
    pub fn new(position: Point2, orientation: f64, strength: f64) -> Self {
        EdgeElement {
            position,
            orientation: normalize_orientation(orientation),
            strength: strength.max(0.0),
        }
    }
}

/// A calibrated pinhole view with its edge map.
#[derive(Clone, Debug, PartialEq)]
pub struct CameraView {
    pub id: u64,
    pub projection: Matrix3x4<f64>,
    pub width: u32,
    pub height: u32,
    pub camera_center: Point3,
    pub edges: Vec<EdgeElement>,
    depth_sign: f64,
}

impl CameraView {
    /// Builds a view from a 3x4 projection; the center is recovered as the right null vector.
    pub fn new(id: u64, projection: Matrix3x4<f64>, width: u32, height: u32, edges: Vec<EdgeElement>) -> Result<Self> {
        let bad = |reason: &str| Error::InvalidCamera {
            id,
            reason: reason.to_string(),
        };
        if projection.iter().any(|v| !v.is_finite()) {
            return Err(bad("projection has non-finite entries"));
        }
        let m: Matrix3<f64> = projection.fixed_view::<3, 3>(0, 0).into_owned();
        let det = m.determinant();
        let scale = m.norm().powi(3).max(f64::MIN_POSITIVE);
        if det.abs() <= 1e-14 * scale {
            return Err(bad("left 3x3 block is singular"));
        }
        let p4 = projection.column(3).into_owned();
        let inv = m.try_inverse().ok_or_else(|| bad("left 3x3 block is singular"))?;
        let c = -(inv * p4);
        let camera_center = Point3::from(c);
        let residual = projection * Vector4::new(c.x, c.y, c.z, 1.0);
        let rel = residual.norm() / (projection.norm() * (1.0 + c.norm()));
        if rel > 1e-8 {
            return Err(bad("camera center is not a null vector of the projection"));
        }
        Ok(CameraView {
            id,
            projection,
            width,
            height,
            camera_center,
            edges,
            depth_sign: det.signum(),
        })
    }

    /// Pinhole camera at `eye` looking at `target`, square pixels, principal point at the image center.
    pub fn look_at(
        id: u64,
        eye: Point3,
        target: Point3,
        up: Vec3,
        focal_px: f64,
        width: u32,
        height: u32,
    ) -> Result<Self> {
        let forward = (target - eye).normalize();
        let right = forward.cross(&up);
        if right.norm() < 1e-12 {
            return Err(Error::InvalidCamera {
                id,
                reason: "up vector is parallel to the viewing direction".into(),
            });
        }
        let right = right.normalize();
        // Image y grows downward.
        let down = forward.cross(&right);
        let rot = Matrix3::from_rows(&[right.transpose(), down.transpose(), forward.transpose()]);
        let t = -(rot * eye.coords);
        let k = Matrix3::new(
            focal_px,
            0.0,
            width as f64 / 2.0,
            0.0,
            focal_px,
            height as f64 / 2.0,
            0.0,
            0.0,
            1.0,
        );
        let mut rt = Matrix3x4::zeros();
        rt.fixed_view_mut::<3, 3>(0, 0).copy_from(&rot);
        rt.set_column(3, &t);
        CameraView::new(id, k * rt, width, height, Vec::new())
    }

    /// Signed depth along the principal axis, in the units of the projection's third row.
    pub fn depth(&self, x: &Point3) -> f64 {
        let w = self
            .projection
            .row(2)
            .dot(&Vector4::new(x.x, x.y, x.z, 1.0).transpose());
        w * self.depth_sign
    }

    /// Pixel position of a world point, or `None` if it is not in front of the camera.
    pub fn project(&self, x: &Point3) -> Option<Point2> {
        let h = self.projection * Vector4::new(x.x, x.y, x.z, 1.0);
        if h.z * self.depth_sign <= 0.0 {
            return None;
        }
        let p = Point2::new(h.x / h.z, h.y / h.z);
        if p.x.is_finite() && p.y.is_finite() {
            Some(p)
        } else {
            None
        }
    }

    pub fn in_image(&self, p: &Point2) -> bool {
        p.x >= 0.0 && p.y >= 0.0 && p.x < self.width as f64 && p.y < self.height as f64
    }

    /// Same view with the edge map replaced.
    pub fn with_edges(mut self, edges: Vec<EdgeElement>) -> Self {
        self.edges = edges;
        self
    }
}

/// Image projection of a fragment.
#[derive(Clone, Debug, PartialEq)]
pub struct ProjectedCurve {
    /// Pixel position of each retained sample.
    pub pixels: Vec<Point2>,
    /// 3D arclength of each retained sample along the fragment.
    pub s: Vec<f64>,
    /// Index of each retained sample in the fragment.
    pub indices: Vec<usize>,
    /// Indices of samples dropped for lying behind the camera.
    pub clipped: Vec<usize>,
}

impl ProjectedCurve {
    /// Cumulative pixel arclength of the retained samples.
    pub fn pixel_arclength(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.pixels.len());
        let mut acc = 0.0;
        for (i, p) in self.pixels.iter().enumerate() {
            if i > 0 {
                acc += (p - self.pixels[i - 1]).norm();
            }
            out.push(acc);
        }
        out
    }
}

/// Projects every sample of `fragment` into `view`, clipping samples with non-positive depth.
pub fn project_curve(fragment: &CurveFragment, view: &CameraView) -> Result<ProjectedCurve> {
    let cum = fragment.cumulative();
    let mut out = ProjectedCurve {
        pixels: Vec::new(),
        s: Vec::new(),
        indices: Vec::new(),
        clipped: Vec::new(),
    };
    for (i, x) in fragment.points.iter().enumerate() {
        match view.project(x) {
            Some(p) => {
                out.pixels.push(p);
                out.s.push(cum[i]);
                out.indices.push(i);
            }
            None => out.clipped.push(i),
        }
    }
    if out.pixels.is_empty() {
        return Err(Error::EmptyProjection {
            fragment: fragment.id,
            view: view.id,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn canonical() -> CameraView {
        CameraView::new(0, Matrix3x4::identity(), 640, 480, Vec::new()).unwrap()
    }

    #[test]
    fn optical_axis_projects_to_origin() {
        let v = canonical();
        let p = v.project(&Point3::new(0.0, 0.0, 5.0)).unwrap();
        assert_eq!(p, Point2::new(0.0, 0.0));
        assert_eq!(v.camera_center, Point3::origin());
    }

    #[test]
    fn straddling_segment_is_clipped() {
        let v = canonical();
        let f = CurveFragment::new(
            9,
            vec![
                Point3::new(0.0, 0.0, -1.0),
                Point3::new(0.1, 0.0, 0.0),
                Point3::new(0.2, 0.0, 1.0),
                Point3::new(0.3, 0.0, 2.0),
            ],
            false,
        );
        let pc = project_curve(&f, &v).unwrap();
        assert_eq!(pc.indices, vec![2, 3]);
        assert_eq!(pc.clipped, vec![0, 1]);
        assert!(pc.pixels.iter().all(|p| p.x.is_finite()));
    }

    #[test]
    fn all_behind_is_empty_projection() {
        let v = canonical();
        let f = CurveFragment::new(2, vec![Point3::new(0.0, 0.0, -1.0), Point3::new(0.0, 1.0, -2.0)], false);
        assert!(matches!(
            project_curve(&f, &v),
            Err(Error::EmptyProjection { fragment: 2, view: 0 })
        ));
    }

    #[test]
    fn look_at_center_matches_eye() {
        let eye = Point3::new(3.0, -4.0, 2.0);
        let v = CameraView::look_at(1, eye, Point3::origin(), Vec3::z(), 500.0, 640, 480).unwrap();
        assert!((v.camera_center - eye).norm() < 1e-12);
        let p = v.project(&Point3::origin()).unwrap();
        assert!((p - Point2::new(320.0, 240.0)).norm() < 1e-9);
        assert!(v.depth(&Point3::origin()) > 0.0);
        let behind = eye + (eye - Point3::origin());
        assert!(v.project(&behind).is_none());
    }

    #[test]
    fn singular_projection_rejected() {
        let mut p = Matrix3x4::zeros();
        p[(0, 0)] = 1.0;
        assert!(CameraView::new(5, p, 10, 10, Vec::new()).is_err());
    }
}
