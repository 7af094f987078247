//! Curve-graph reorganization: smoothing, corner breaking, gap bridging,
//! junction grouping, overlap removal, resampling and pruning.

mod cocirc;
mod curvature;
mod dedup;
mod join;
mod smooth;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use cocirc::{cocircularity, junction_continuity, TORSION_WEIGHT};
pub use curvature::{break_at_corners, corner_indices, discrete_curvature};
pub use dedup::{dedup_overlaps, DedupEvent};
pub use join::{bridge_gaps, merge_at_junctions, Bridge, JunctionMerge};
pub use smooth::{smooth_all, smooth_fragment, smoothing_objective};

use crate::curve_graph::{CurveDrawing, CurveFragment};
use crate::error::{Error, Result};
use crate::geom::{resample_closed, resample_open};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReorgParams {
    pub tau_length: f64,
    pub smooth_lambda: f64,
    pub kappa_break: f64,
    pub tau_dist: f64,
    pub tau_cocirc: f64,
    pub overlap_eps: f64,
    pub resample_step: f64,
    pub rounds: usize,
}

impl Default for ReorgParams {
    fn default() -> Self {
        ReorgParams {
            tau_length: 0.03,
            smooth_lambda: 5.0,
            kappa_break: 20.0,
            tau_dist: 0.02,
            tau_cocirc: 0.35,
            overlap_eps: 0.005,
            resample_step: 0.01,
            rounds: 3,
        }
    }
}

impl ReorgParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("tau_length", self.tau_length),
            ("smooth_lambda", self.smooth_lambda),
            ("kappa_break", self.kappa_break),
            ("tau_dist", self.tau_dist),
            ("tau_cocirc", self.tau_cocirc),
            ("overlap_eps", self.overlap_eps),
            ("resample_step", self.resample_step),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParams(format!("{name} must be positive, got {v}")));
            }
        }
        if !(1..=8).contains(&self.rounds) {
            return Err(Error::InvalidParams(format!(
                "rounds must be in 1..=8, got {}",
                self.rounds
            )));
        }
        Ok(())
    }

    /// Parameters in effect during round `r` (1-based) of `rounds`.
    pub fn ramped(&self, r: usize) -> ReorgParams {
        let f = r as f64 / self.rounds as f64;
        ReorgParams {
            tau_length: self.tau_length * f,
            smooth_lambda: self.smooth_lambda * f,
            kappa_break: self.kappa_break,
            tau_dist: self.tau_dist * f,
            tau_cocirc: self.tau_cocirc * f,
            overlap_eps: self.overlap_eps * f,
            resample_step: self.resample_step,
            rounds: self.rounds,
        }
    }
}

/// Uniform arclength resampling with spacing close to `step`.
///
/// Open fragments get `max(2, round(L/step) + 1)` points with both endpoints
/// kept exactly; closed fragments get `max(3, round(L/step))`.
pub fn resample(fragment: &CurveFragment, step: f64) -> CurveFragment {
    let len = fragment.arclength();
    let ratio = if step > 0.0 { (len / step).round() } else { 0.0 };
    let points = if fragment.closed {
        let n = (ratio as usize).max(3);
        resample_closed(&fragment.points, n)
    } else {
        let n = (ratio as usize + 1).max(2);
        resample_open(&fragment.points, n)
    };
    CurveFragment::new(fragment.id, points, fragment.closed)
}

/// Drops fragments shorter than `tau_length`.
pub fn prune_short(drawing: &CurveDrawing, tau_length: f64) -> CurveDrawing {
    let kept = drawing
        .fragments
        .iter()
        .filter(|f| f.arclength() >= tau_length)
        .cloned()
        .collect();
    CurveDrawing::from_fragments(kept)
}

/// Breaks every fragment at its corners. The first child keeps the parent id;
/// later children get fresh ids in fragment-id order.
pub fn break_drawing_at_corners(drawing: &CurveDrawing, kappa_break: f64) -> (CurveDrawing, usize) {
    let mut sorted: Vec<&CurveFragment> = drawing.fragments.iter().collect();
    sorted.sort_by_key(|f| f.id);
    let pieces: Vec<Vec<CurveFragment>> = sorted.par_iter().map(|f| break_at_corners(f, kappa_break)).collect();
    let mut next = drawing.next_id();
    let mut out = Vec::new();
    let mut splits = 0;
    for children in pieces {
        splits += children.len() - 1;
        for (k, mut c) in children.into_iter().enumerate() {
            if k > 0 {
                c.id = next;
                next += 1;
            }
            out.push(c);
        }
    }
    out.sort_by_key(|f| f.id);
    (CurveDrawing::from_fragments(out), splits)
}

/// What happened during one reorganization round.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RoundReport {
    pub round: usize,
    pub merges: Vec<JunctionMerge>,
    pub bridges: Vec<Bridge>,
    pub dedup: Vec<DedupEvent>,
    pub corner_splits: usize,
    pub pruned: Vec<u64>,
    pub fragments_out: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ReorgReport {
    pub rounds: Vec<RoundReport>,
}

impl ReorgReport {
    pub fn bridges(&self) -> impl Iterator<Item = &Bridge> {
        self.rounds.iter().flat_map(|r| r.bridges.iter())
    }

    pub fn merges(&self) -> impl Iterator<Item = &JunctionMerge> {
        self.rounds.iter().flat_map(|r| r.merges.iter())
    }
}

/// Runs the reorganization schedule.
///
/// Each round applies smooth, junction merge, gap bridging, overlap removal,
/// resampling and pruning with thresholds ramped linearly up to their final
/// values. Corners are broken only in the last round, just before pruning.
pub fn reorganize(drawing: &CurveDrawing, params: &ReorgParams) -> Result<(CurveDrawing, ReorgReport)> {
    params.validate()?;
    drawing.validate()?;
    let mut current = CurveDrawing::from_fragments(drawing.fragments.clone());
    let mut report = ReorgReport::default();
    for r in 1..=params.rounds {
        let p = params.ramped(r);
        let mut round = RoundReport {
            round: r,
            ..Default::default()
        };
        current = CurveDrawing::from_fragments(smooth_all(&current.fragments, p.smooth_lambda));
        let (merged, merges) = merge_at_junctions(&current, p.tau_cocirc);
        let (bridged, bridges) = bridge_gaps(&merged, p.tau_dist, p.tau_cocirc);
        let (deduped, dedup) = dedup_overlaps(&bridged, p.overlap_eps);
        let resampled: Vec<CurveFragment> = deduped
            .fragments
            .par_iter()
            .map(|f| resample(f, p.resample_step))
            .collect();
        current = CurveDrawing::from_fragments(resampled);
        if r == params.rounds {
            let (broken, splits) = break_drawing_at_corners(&current, p.kappa_break);
            current = broken;
            round.corner_splits = splits;
        }
        let before: Vec<u64> = current.fragments.iter().map(|f| f.id).collect();
        current = prune_short(&current, p.tau_length);
        round.pruned = before
            .into_iter()
            .filter(|id| current.fragment(*id).is_none())
            .collect();
        round.merges = merges;
        round.bridges = bridges;
        round.dedup = dedup;
        round.fragments_out = current.fragments.len();
        log::debug!(
            "reorg round {r}: {} merges, {} bridges, {} dedup events, {} pruned, {} fragments",
            round.merges.len(),
            round.bridges.len(),
            round.dedup.len(),
            round.pruned.len(),
            round.fragments_out
        );
        report.rounds.push(round);
    }
    Ok((current, report))
}
