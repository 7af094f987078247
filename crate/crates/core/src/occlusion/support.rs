use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::curve_graph::{CameraView, EdgeElement};
use crate::geom::{orientation_difference, Point2, Vec2};

/// How matched edges contribute to the support density.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PhiWeighting {
    /// Each matching edge counts 1.
    #[default]
    Count,
    /// Each matching edge counts its strength.
    Strength,
}

/// Matching tolerances for edge support.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EdgeMatch {
    pub tau_loc: f64,
    pub tau_theta: f64,
    pub weighting: PhiWeighting,
}

/// Bucket grid over an edge map with cell size `tau_loc`.
pub struct EdgeIndex<'a> {
    edges: &'a [EdgeElement],
    cell: f64,
    buckets: HashMap<(i64, i64), Vec<u32>>,
}

impl<'a> EdgeIndex<'a> {
    pub fn new(edges: &'a [EdgeElement], tau_loc: f64) -> Self {
        let cell = tau_loc.max(1e-6);
        let mut buckets: HashMap<(i64, i64), Vec<u32>> = HashMap::new();
        for (i, e) in edges.iter().enumerate() {
            buckets.entry(key(&e.position, cell)).or_default().push(i as u32);
        }
        EdgeIndex { edges, cell, buckets }
    }

    /// Support density at `p` for a curve with line orientation `theta`.
    pub fn phi(&self, p: &Point2, theta: f64, m: &EdgeMatch) -> f64 {
        let mut acc = 0.0;
        self.visit(p, p, m.tau_loc, |e| {
            if matches(e, p, theta, m) {
                acc += weight(e, m);
            }
        });
        acc
    }

    /// Integral of the support density over pixel arclength `[a, b]` of the
    /// polyline `gamma`: every matching edge contributes the length of curve
    /// inside its `tau_loc` disc.
    pub fn support(&self, gamma: &[Point2], cum: &[f64], interval: (f64, f64), m: &EdgeMatch) -> f64 {
        self.support_unless(gamma, cum, interval, m, |_, _| false)
    }

    /// Same as [`EdgeIndex::support`], skipping pieces of at most 1 px whose
    /// midpoint and orientation satisfy `skip`.
    pub(crate) fn support_unless(
        &self,
        gamma: &[Point2],
        cum: &[f64],
        (a, b): (f64, f64),
        m: &EdgeMatch,
        skip: impl Fn(&Point2, f64) -> bool,
    ) -> f64 {
        if gamma.len() < 2 || b <= a {
            return 0.0;
        }
        let mut total = 0.0;
        for j in 0..gamma.len() - 1 {
            let (s0, s1) = (cum[j].max(a), cum[j + 1].min(b));
            let len = cum[j + 1] - cum[j];
            if s1 <= s0 || len <= 0.0 {
                continue;
            }
            let dir = (gamma[j + 1] - gamma[j]) / len;
            let theta = dir.y.atan2(dir.x);
            let n = ((s1 - s0).ceil() as usize).max(1);
            let h = (s1 - s0) / n as f64;
            for k in 0..n {
                let p0 = gamma[j] + dir * (s0 + h * k as f64 - cum[j]);
                let p1 = p0 + dir * h;
                if skip(&nalgebra::center(&p0, &p1), theta) {
                    continue;
                }
                self.visit(&p0, &p1, m.tau_loc, |e| {
                    if orientation_difference(e.orientation, theta) < m.tau_theta {
                        total += weight(e, m) * chord(&p0, &dir, h, &e.position, m.tau_loc);
                    }
                });
            }
        }
        total
    }

    /// Calls `f` on every edge in the cells within `r` of the box spanned by `p0` and `p1`.
    fn visit(&self, p0: &Point2, p1: &Point2, r: f64, mut f: impl FnMut(&EdgeElement)) {
        let lo = key(&Point2::new(p0.x.min(p1.x) - r, p0.y.min(p1.y) - r), self.cell);
        let hi = key(&Point2::new(p0.x.max(p1.x) + r, p0.y.max(p1.y) + r), self.cell);
        for x in lo.0..=hi.0 {
            for y in lo.1..=hi.1 {
                if let Some(b) = self.buckets.get(&(x, y)) {
                    for &i in b {
                        f(&self.edges[i as usize]);
                    }
                }
            }
        }
    }
}

/// Length of the segment `p0 + t dir`, `t` in `[0, len]`, inside the disc of radius `r` around `c`.
fn chord(p0: &Point2, dir: &Vec2, len: f64, c: &Point2, r: f64) -> f64 {
    let w = p0 - c;
    let b = dir.dot(&w);
    let disc = b * b - (w.norm_squared() - r * r);
    if disc <= 0.0 {
        return 0.0;
    }
    let root = disc.sqrt();
    ((-b + root).min(len) - (-b - root).max(0.0)).max(0.0)
}

fn key(p: &Point2, cell: f64) -> (i64, i64) {
    ((p.x / cell).floor() as i64, (p.y / cell).floor() as i64)
}

pub(crate) fn matches(e: &EdgeElement, p: &Point2, theta: f64, m: &EdgeMatch) -> bool {
    (e.position - p).norm() <= m.tau_loc && orientation_difference(e.orientation, theta) < m.tau_theta
}

pub(crate) fn weight(e: &EdgeElement, m: &EdgeMatch) -> f64 {
    match m.weighting {
        PhiWeighting::Count => 1.0,
        PhiWeighting::Strength => e.strength,
    }
}

/// Cumulative pixel arclength of a polyline.
pub fn polyline_cumulative(gamma: &[Point2]) -> Vec<f64> {
    let mut out = Vec::with_capacity(gamma.len());
    let mut acc = 0.0;
    for (i, p) in gamma.iter().enumerate() {
        if i > 0 {
            acc += (p - gamma[i - 1]).norm();
        }
        out.push(acc);
    }
    out
}

/// Edge support `E` of the pixel-arclength interval `[a, b]` of `gamma` in `view`.
pub fn edge_support(view: &CameraView, gamma: &[Point2], interval: (f64, f64), m: &EdgeMatch) -> f64 {
    let index = EdgeIndex::new(&view.edges, m.tau_loc);
    index.support(gamma, &polyline_cumulative(gamma), interval, m)
}
