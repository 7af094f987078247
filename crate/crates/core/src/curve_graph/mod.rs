//! Data model for 3D curve drawings, calibrated views and their edge maps.
//!
//! A [`CurveDrawing`] is a graph whose links are polyline [`CurveFragment`]s
//! and whose [`Node`]s are junctions where fragment endpoints meet. Junctions
//! are recovered by clustering endpoints within [`NODE_TOLERANCE`].
//!
//! World units are meters throughout.

mod camera;
mod io;

pub use camera::{project_curve, CameraView, EdgeElement, ProjectedCurve};
pub use io::{
    drawing_to_json, load_cameras, load_drawing, load_edges_csv, parse_drawing, save_cameras, save_drawing,
    save_edges_csv,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{cumulative_lengths, Point3, Vec3};

/// Endpoints closer than this are the same junction.
pub const NODE_TOLERANCE: f64 = 1e-6;

/// Consecutive samples of a fragment must be further apart than this.
pub const MIN_SEPARATION: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct CurveFragment {
    pub id: u64,
    pub points: Vec<Point3>,
    pub closed: bool,
}

/// Which end of an open fragment.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum End {
    Start,
    End,
}

impl End {
    pub fn other(self) -> End {
        match self {
            End::Start => End::End,
            End::End => End::Start,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Endpoint {
    pub fragment: u64,
    pub end: End,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Node {
    pub point: Point3,
    pub incident: Vec<Endpoint>,
}

impl Node {
    pub fn degree(&self) -> usize {
        self.incident.len()
    }
}

impl CurveFragment {
    pub fn new(id: u64, points: Vec<Point3>, closed: bool) -> Self {
        CurveFragment { id, points, closed }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Sum of segment lengths, including the closing segment of closed curves.
    pub fn arclength(&self) -> f64 {
        let mut total: f64 = self.points.windows(2).map(|w| (w[1] - w[0]).norm()).sum();
        if self.closed && self.points.len() > 2 {
            total += (self.points[0] - self.points[self.points.len() - 1]).norm();
        }
        total
    }

    /// Cumulative arclength at each sample (closing segment excluded).
    pub fn cumulative(&self) -> Vec<f64> {
        cumulative_lengths(&self.points)
    }

    pub fn endpoint(&self, end: End) -> Point3 {
        match end {
            End::Start => self.points[0],
            End::End => self.points[self.points.len() - 1],
        }
    }

    /// Unit tangent pointing out of the fragment at `end`, from the last three samples.
    pub fn outward_tangent(&self, end: End) -> Vec3 {
        let n = self.points.len();
        let k = n.min(3) - 1;
        let v = match end {
            End::Start => self.points[0] - self.points[k],
            End::End => self.points[n - 1] - self.points[n - 1 - k],
        };
        let norm = v.norm();
        if norm > 0.0 {
            v / norm
        } else {
            Vec3::zeros()
        }
    }

    /// Points ordered so that `end` comes last.
    pub fn points_ending_at(&self, end: End) -> Vec<Point3> {
        let mut pts = self.points.clone();
        if end == End::Start {
            pts.reverse();
        }
        pts
    }

    pub fn reversed(&self) -> CurveFragment {
        let mut pts = self.points.clone();
        pts.reverse();
        CurveFragment::new(self.id, pts, self.closed)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |reason: String| Err(Error::InvalidFragment { id: self.id, reason });
        if self.points.len() < 2 {
            return fail(format!("{} point(s); at least 2 are required", self.points.len()));
        }
        if self.closed && self.points.len() < 3 {
            return fail("closed fragment needs at least 3 points".into());
        }
        for (i, p) in self.points.iter().enumerate() {
            if !(p.x.is_finite() && p.y.is_finite() && p.z.is_finite()) {
                return fail(format!("point {i} is not finite"));
            }
        }
        for (i, w) in self.points.windows(2).enumerate() {
            if (w[1] - w[0]).norm() <= MIN_SEPARATION {
                return fail(format!("points {i} and {} coincide", i + 1));
            }
        }
        if self.closed && (self.points[0] - self.points[self.points.len() - 1]).norm() <= MIN_SEPARATION {
            return fail("closed fragment repeats its first point at the end".into());
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct CurveDrawing {
    pub fragments: Vec<CurveFragment>,
    pub nodes: Vec<Node>,
}

impl CurveDrawing {
    /// Builds a drawing and reconstructs junction nodes by endpoint clustering.
    pub fn from_fragments(fragments: Vec<CurveFragment>) -> Self {
        let nodes = cluster_nodes(&fragments);
        CurveDrawing { fragments, nodes }
    }

    /// Recomputes `nodes` from the current fragments.
    pub fn rebuild_nodes(&mut self) {
        self.nodes = cluster_nodes(&self.fragments);
    }

    pub fn fragment(&self, id: u64) -> Option<&CurveFragment> {
        self.fragments.iter().find(|f| f.id == id)
    }

    pub fn next_id(&self) -> u64 {
        self.fragments.iter().map(|f| f.id + 1).max().unwrap_or(0)
    }

    pub fn validate(&self) -> Result<()> {
        let mut ids = std::collections::BTreeSet::new();
        for f in &self.fragments {
            f.validate()?;
            if !ids.insert(f.id) {
                return Err(Error::InvalidDrawing(format!("duplicate fragment id {}", f.id)));
            }
        }
        for (k, node) in self.nodes.iter().enumerate() {
            for e in &node.incident {
                let f = self.fragment(e.fragment).ok_or_else(|| {
                    Error::InvalidDrawing(format!("node {k} references unknown fragment {}", e.fragment))
                })?;
                if f.closed {
                    return Err(Error::InvalidDrawing(format!(
                        "node {k} references closed fragment {}",
                        f.id
                    )));
                }
                let d = (f.endpoint(e.end) - node.point).norm();
                if d > NODE_TOLERANCE {
                    return Err(Error::InvalidFragment {
                        id: f.id,
                        reason: format!("endpoint is {d:e} m from node {k}"),
                    });
                }
            }
        }
        Ok(())
    }
}

/// Groups open-fragment endpoints lying within [`NODE_TOLERANCE`] (single linkage).
/// Only clusters of two or more endpoints become nodes.
fn cluster_nodes(fragments: &[CurveFragment]) -> Vec<Node> {
    let mut ends: Vec<(Endpoint, Point3)> = Vec::new();
    for f in fragments.iter().filter(|f| !f.closed && f.points.len() >= 2) {
        for end in [End::Start, End::End] {
            ends.push((Endpoint { fragment: f.id, end }, f.endpoint(end)));
        }
    }
    // Sort along x so the neighbour search can stop early.
    let mut order: Vec<usize> = (0..ends.len()).collect();
    order.sort_by(|&a, &b| ends[a].1.x.total_cmp(&ends[b].1.x).then(ends[a].0.cmp(&ends[b].0)));
    let mut parent: Vec<usize> = (0..ends.len()).collect();
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for (oi, &i) in order.iter().enumerate() {
        for &j in &order[oi + 1..] {
            if ends[j].1.x - ends[i].1.x > NODE_TOLERANCE {
                break;
            }
            if (ends[j].1 - ends[i].1).norm() <= NODE_TOLERANCE {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[ri.max(rj)] = ri.min(rj);
                }
            }
        }
    }
    let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for i in 0..ends.len() {
        let r = find(&mut parent, i);
        groups.entry(r).or_default().push(i);
    }
    let mut nodes: Vec<Node> = groups
        .into_values()
        .filter(|g| g.len() >= 2)
        .map(|g| {
            let mut incident: Vec<Endpoint> = g.iter().map(|&i| ends[i].0).collect();
            incident.sort();
            let first = incident[0];
            let point = g.iter().find(|&&i| ends[i].0 == first).map(|&i| ends[i].1).unwrap();
            Node { point, incident }
        })
        .collect();
    nodes.sort_by(|a, b| a.incident[0].cmp(&b.incident[0]));
    nodes
}
