//! Surface hypotheses: candidate fragment pairs and closed loops lofted into
//! patches, with the endpoint pairing chosen by Gaussian curvature.

mod io;
mod topology;

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use io::{load_hypotheses, save_hypotheses, HypothesisMeta};
pub use topology::{view_topology_neighbors, FragmentPair};

use crate::curve_graph::{CameraView, CurveDrawing, CurveFragment};
use crate::error::{Error, Result};
use crate::geom::point_polyline_distance;
use crate::loft::{loft_closed, loft_pair, LoftParams, LoftResult, Pairing};
use crate::mesh::{QuadMesh, TriMesh};

/// How the view-topology gate combines with the proximity gate.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TopologyMode {
    /// Proximity or view adjacency.
    #[default]
    Or,
    /// View adjacency alone.
    Only,
    /// Proximity alone.
    Off,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HypothesisParams {
    pub tau_length: f64,
    pub tau_alpha: f64,
    #[serde(rename = "tau_G")]
    pub tau_g: f64,
    pub topology_mode: TopologyMode,
}

impl Default for HypothesisParams {
    fn default() -> Self {
        HypothesisParams {
            tau_length: 0.03,
            tau_alpha: 0.18,
            tau_g: 1.0,
            topology_mode: TopologyMode::Or,
        }
    }
}

impl HypothesisParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("tau_length", self.tau_length),
            ("tau_alpha", self.tau_alpha),
            ("tau_G", self.tau_g),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParams(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

/// Lifecycle of a hypothesis. Transitions only move forward.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Formed,
    Confirmed,
    Rejected,
    Unverifiable,
    /// Not visible in any view behind the other patches.
    Hidden,
    Redundant,
}

impl Status {
    pub fn name(self) -> &'static str {
        match self {
            Status::Formed => "formed",
            Status::Confirmed => "confirmed",
            Status::Rejected => "rejected",
            Status::Unverifiable => "unverifiable",
            Status::Hidden => "hidden",
            Status::Redundant => "redundant",
        }
    }

    /// Still a candidate surface.
    pub fn is_live(self) -> bool {
        matches!(self, Status::Formed | Status::Confirmed | Status::Unverifiable)
    }

    fn can_become(self, next: Status) -> bool {
        use Status::*;
        match self {
            Formed => next != Formed,
            Confirmed | Unverifiable => matches!(next, Hidden | Redundant),
            Rejected | Hidden | Redundant => false,
        }
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Status {
    type Err = Error;

    fn from_str(s: &str) -> Result<Status> {
        Ok(match s {
            "formed" => Status::Formed,
            "confirmed" => Status::Confirmed,
            "rejected" => Status::Rejected,
            "unverifiable" => Status::Unverifiable,
            "hidden" => Status::Hidden,
            "redundant" => Status::Redundant,
            _ => return Err(Error::InvalidParams(format!("unknown status {s:?}"))),
        })
    }
}

/// A lofted surface patch with its provenance.
#[derive(Clone, Debug, PartialEq)]
pub struct SurfaceHypothesis {
    pub id: u64,
    pub source_fragment_ids: Vec<u64>,
    pub pairing: Pairing,
    pub mesh: QuadMesh,
    /// Triangulation of `mesh`.
    pub tri: TriMesh,
    pub mean_abs_k: f64,
    pub boundary_deviation: f64,
    pub status: Status,
    /// Every status held so far, oldest first, ending with `status`.
    pub status_history: Vec<Status>,
}

impl SurfaceHypothesis {
    pub fn new(id: u64, source_fragment_ids: Vec<u64>, pairing: Pairing, loft: LoftResult) -> Self {
        SurfaceHypothesis {
            id,
            source_fragment_ids,
            pairing,
            tri: loft.mesh.triangulate(),
            mesh: loft.mesh,
            mean_abs_k: loft.mean_abs_k,
            boundary_deviation: loft.boundary_deviation,
            status: Status::Formed,
            status_history: vec![Status::Formed],
        }
    }

    /// Moves to `next`, refusing backward transitions.
    pub fn advance(&mut self, next: Status) -> Result<()> {
        if !self.status.can_become(next) {
            return Err(Error::InvalidTransition {
                id: self.id,
                from: self.status.name(),
                to: next.name(),
            });
        }
        self.status = next;
        self.status_history.push(next);
        Ok(())
    }

    pub fn has_source(&self, fragment: u64) -> bool {
        self.source_fragment_ids.contains(&fragment)
    }

    pub fn area(&self) -> f64 {
        self.tri.area()
    }
}

fn one_sided_distance(a: &CurveFragment, b: &CurveFragment) -> f64 {
    a.points
        .iter()
        .map(|p| point_polyline_distance(p, &b.points, b.closed))
        .sum::<f64>()
        / a.points.len() as f64
}

/// Symmetric mean point-to-curve distance between two fragments (m).
pub fn curve_distance(c1: &CurveFragment, c2: &CurveFragment) -> f64 {
    0.5 * (one_sided_distance(c1, c2) + one_sided_distance(c2, c1))
}

/// Lofts both pairings and keeps the better one. A degenerate loft loses to a
/// clean one; otherwise the lower mean |K| wins, ties going to parallel.
pub fn best_pairing(c1: &CurveFragment, c2: &CurveFragment, loft: &LoftParams) -> Option<(Pairing, LoftResult)> {
    let mut best: Option<(Pairing, LoftResult)> = None;
    for pairing in [Pairing::Parallel, Pairing::Antiparallel] {
        match loft_pair(c1, c2, pairing, loft) {
            Ok(r) => {
                let better = match &best {
                    None => true,
                    Some((_, b)) => (r.degenerate, r.mean_abs_k) < (b.degenerate, b.mean_abs_k),
                };
                if better {
                    best = Some((pairing, r));
                }
            }
            Err(e) => log::debug!("loft of ({}, {}) {} failed: {e}", c1.id, c2.id, pairing.name()),
        }
    }
    best
}

/// Candidate fragment pairs passing the length and neighbourhood gates, in id order.
pub fn candidate_pairs(drawing: &CurveDrawing, views: &[CameraView], params: &HypothesisParams) -> Vec<FragmentPair> {
    let mut open: Vec<&CurveFragment> = drawing
        .fragments
        .iter()
        .filter(|f| !f.closed && f.arclength() > params.tau_length)
        .collect();
    open.sort_by_key(|f| f.id);
    let neighbors: BTreeSet<FragmentPair> = match params.topology_mode {
        TopologyMode::Off => BTreeSet::new(),
        _ => view_topology_neighbors(drawing, views),
    };
    let mut out = Vec::new();
    for (i, a) in open.iter().enumerate() {
        for b in &open[i + 1..] {
            let key = (a.id, b.id);
            let near = || curve_distance(a, b) < params.tau_alpha;
            let adjacent = neighbors.contains(&key);
            let keep = match params.topology_mode {
                TopologyMode::Or => adjacent || near(),
                TopologyMode::Only => adjacent,
                TopologyMode::Off => near(),
            };
            if keep {
                out.push(key);
            }
        }
    }
    out
}

/// Forms hypotheses from closed fragments and candidate pairs.
///
/// Each closed fragment longer than `tau_length` is filled directly. Each
/// candidate pair is lofted with both pairings and kept when the better loft
/// is non-degenerate with mean |K| below `tau_G`. Hypotheses are numbered in
/// order of their source ids.
pub fn form_hypotheses(
    drawing: &CurveDrawing,
    views: &[CameraView],
    params: &HypothesisParams,
    loft: &LoftParams,
) -> Result<Vec<SurfaceHypothesis>> {
    params.validate()?;
    loft.validate()?;
    let mut closed: Vec<&CurveFragment> = drawing
        .fragments
        .iter()
        .filter(|f| f.closed && f.arclength() > params.tau_length)
        .collect();
    closed.sort_by_key(|f| f.id);
    let pairs = candidate_pairs(drawing, views, params);

    let closed_results: Vec<Option<(Vec<u64>, Pairing, LoftResult)>> = closed
        .par_iter()
        .map(|f| match loft_closed(f, loft) {
            Ok(r) if !r.degenerate => Some((vec![f.id], Pairing::Closed, r)),
            Ok(_) => None,
            Err(e) => {
                log::debug!("closed loft of {} failed: {e}", f.id);
                None
            }
        })
        .collect();
    let pair_results: Vec<Option<(Vec<u64>, Pairing, LoftResult)>> = pairs
        .par_iter()
        .map(|&(a, b)| {
            let (fa, fb) = (drawing.fragment(a)?, drawing.fragment(b)?);
            let (pairing, r) = best_pairing(fa, fb, loft)?;
            (!r.degenerate && r.mean_abs_k < params.tau_g).then(|| (vec![a, b], pairing, r))
        })
        .collect();

    let mut kept: Vec<(Vec<u64>, Pairing, LoftResult)> =
        closed_results.into_iter().chain(pair_results).flatten().collect();
    kept.sort_by(|a, b| a.0.cmp(&b.0));
    Ok(kept
        .into_iter()
        .enumerate()
        .map(|(i, (ids, pairing, r))| SurfaceHypothesis::new(i as u64, ids, pairing, r))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Point3;

    fn seg(id: u64, a: [f64; 3], b: [f64; 3], n: usize) -> CurveFragment {
        let (a, b) = (Point3::from(a), Point3::from(b));
        CurveFragment::new(
            id,
            (0..n).map(|i| a + (b - a) * (i as f64 / (n - 1) as f64)).collect(),
            false,
        )
    }

    #[test]
    fn parallel_segments_distance() {
        let a = seg(0, [0.0, 0.0, 0.0], [1.0, 0.0, 0.0], 11);
        let b = seg(1, [0.0, 0.25, 0.0], [1.0, 0.25, 0.0], 7);
        assert!((curve_distance(&a, &b) - 0.25).abs() < 1e-12);
        assert_eq!(curve_distance(&a, &a), 0.0);
    }

    #[test]
    fn plane_rails_give_one_parallel_hypothesis() {
        let d = CurveDrawing::from_fragments(vec![
            seg(0, [0.0, 0.0, 0.0], [1.0, 0.0, 0.0], 21),
            seg(1, [0.0, 0.15, 0.0], [1.0, 0.15, 0.0], 21),
        ]);
        let hyps = form_hypotheses(&d, &[], &HypothesisParams::default(), &LoftParams::default()).unwrap();
        assert_eq!(hyps.len(), 1);
        assert_eq!(hyps[0].pairing, Pairing::Parallel);
        assert_eq!(hyps[0].source_fragment_ids, vec![0, 1]);
        assert_eq!(hyps[0].status, Status::Formed);
        assert_eq!(hyps[0].tri, hyps[0].mesh.triangulate());
    }

    #[test]
    fn far_pair_is_gated_out() {
        let d = CurveDrawing::from_fragments(vec![
            seg(0, [0.0, 0.0, 0.0], [1.0, 0.0, 0.0], 21),
            seg(1, [0.0, 1.0, 0.0], [1.0, 1.0, 0.0], 21),
        ]);
        let params = HypothesisParams {
            tau_alpha: 0.2,
            ..Default::default()
        };
        assert!(form_hypotheses(&d, &[], &params, &LoftParams::default())
            .unwrap()
            .is_empty());
    }

    #[test]
    fn status_only_moves_forward() {
        use Status::*;
        assert!(Formed.can_become(Confirmed));
        assert!(Confirmed.can_become(Redundant));
        assert!(!Confirmed.can_become(Rejected));
        assert!(!Redundant.can_become(Confirmed));
        assert!(!Rejected.can_become(Hidden));
        assert_eq!("hidden".parse::<Status>().unwrap(), Hidden);
    }
}
