//! Occlusion reasoning: hypotheses are ray traced against the drawing in
//! every view, and image edges found along predicted-hidden stretches of a
//! curve count against the hypothesis.

mod cleanup;
mod support;
mod svg;
mod trace;

use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use cleanup::{dedup_hypotheses, drop_fully_hidden, sample_hypothesis};
pub use support::{edge_support, polyline_cumulative, EdgeIndex, EdgeMatch, PhiWeighting};
pub use svg::overlay_svg;
pub use trace::{occluded_intervals, runs_to_intervals, DenseCurve, RayTracer, RAY_EPS};

use crate::curve_graph::{CameraView, CurveDrawing, CurveFragment};
use crate::error::{Error, Result};
use crate::geom::{orientation_difference, Point2};
use crate::hypothesis::{Status, SurfaceHypothesis};

/// How per-curve evidence turns into a verdict.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConfirmationRule {
    /// Rejected if any occluded curve has evidence at or above `tau_E`,
    /// confirmed if it occludes something and nothing violates.
    #[default]
    Strict,
    /// Confirmed if some occluded curve has evidence below `tau_E`, rejected
    /// only when every occluded curve violates.
    Lenient,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OcclusionParams {
    #[serde(rename = "tau_E")]
    pub tau_e: f64,
    /// Edge match radius (px).
    pub tau_loc: f64,
    /// Edge orientation tolerance (rad).
    pub tau_theta: f64,
    pub subsume_frac: f64,
    /// Distance under which a sample counts as covered by another patch (m).
    pub subsume_eps: f64,
    /// Hits this close to the traced sample are contact, not occlusion (m).
    pub contact_eps: f64,
    /// Samples per patch for visibility and redundancy tests.
    pub cleanup_samples: usize,
    /// A patch is hidden when no view sees more than this fraction of its
    /// samples. Absorbs rays leaking through seams between patches.
    pub hidden_visible_frac: f64,
    pub keep_unverifiable: bool,
    /// Discount edge support where another curve, left visible by the
    /// hypothesis, projects with the same location and orientation.
    pub explain_visible: bool,
    pub confirmation: ConfirmationRule,
    pub phi: PhiWeighting,
}

impl Default for OcclusionParams {
    fn default() -> Self {
        OcclusionParams {
            tau_e: 12.0,
            tau_loc: 2.0,
            tau_theta: 0.3,
            subsume_frac: 0.8,
            subsume_eps: 0.02,
            contact_eps: 0.01,
            cleanup_samples: 400,
            hidden_visible_frac: 0.02,
            keep_unverifiable: true,
            explain_visible: true,
            confirmation: ConfirmationRule::Strict,
            phi: PhiWeighting::Count,
        }
    }
}

impl OcclusionParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParams(m));
        if !(self.tau_e.is_finite() && self.tau_e >= 0.0) {
            return bad(format!("tau_E must be non-negative, got {}", self.tau_e));
        }
        if !(self.tau_loc > 0.0) {
            return bad(format!("tau_loc must be positive, got {}", self.tau_loc));
        }
        if !(self.tau_theta > 0.0 && self.tau_theta < std::f64::consts::FRAC_PI_2) {
            return bad(format!("tau_theta must be in (0, pi/2), got {}", self.tau_theta));
        }
        if !(self.subsume_frac > 0.0 && self.subsume_frac <= 1.0) {
            return bad(format!("subsume_frac must be in (0, 1], got {}", self.subsume_frac));
        }
        if !(self.subsume_eps > 0.0 && self.contact_eps >= 0.0) {
            return bad("subsume_eps must be positive and contact_eps non-negative".into());
        }
        if !(0.0..1.0).contains(&self.hidden_visible_frac) {
            return bad(format!(
                "hidden_visible_frac must be in [0, 1), got {}",
                self.hidden_visible_frac
            ));
        }
        if self.cleanup_samples < 200 {
            return bad(format!(
                "cleanup_samples must be at least 200, got {}",
                self.cleanup_samples
            ));
        }
        Ok(())
    }

    pub fn edge_match(&self) -> EdgeMatch {
        EdgeMatch {
            tau_loc: self.tau_loc,
            tau_theta: self.tau_theta,
            weighting: self.phi,
        }
    }

    /// Whether a verified hypothesis belongs to the final surface set.
    pub fn survives(&self, status: Status) -> bool {
        match status {
            Status::Confirmed => true,
            Status::Unverifiable => self.keep_unverifiable,
            _ => false,
        }
    }
}

/// Occlusion of curve `curve` by hypothesis `hypothesis` in view `view`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OcclusionRecord {
    pub hypothesis: u64,
    pub curve: u64,
    pub view: u64,
    /// Hidden 3D arclength ranges (m).
    pub intervals: Vec<(f64, f64)>,
    /// The same ranges in projected pixel arclength.
    pub pixel_intervals: Vec<(f64, f64)>,
    /// Edge support summed over the hidden ranges (px).
    pub evidence: f64,
}

/// A fragment traced in one view: dense samples, their line orientation in
/// the image and the hypotheses hiding each of them.
struct Traced {
    dense: DenseCurve,
    theta: Vec<Option<f64>>,
    occluders: Vec<Vec<u32>>,
}

fn trace_fragment(
    f: &CurveFragment,
    cands: &[&SurfaceHypothesis],
    tracer: &RayTracer,
    view: &CameraView,
    params: &OcclusionParams,
) -> Traced {
    let dense = DenseCurve::new(f, view);
    let n = dense.len();
    let theta = (0..n)
        .map(|i| {
            let a = dense.pixels[i.saturating_sub(1)]?;
            let b = dense.pixels[(i + 1).min(n - 1)]?;
            let d = b - a;
            (d.norm() > 0.0).then(|| d.y.atan2(d.x))
        })
        .collect();
    let occluders = (0..n)
        .map(|i| {
            if !dense.observable(i, view) {
                return Vec::new();
            }
            let mut hit = tracer.occluders(&view.camera_center, &dense.points[i], params.contact_eps);
            hit.retain(|&h| !cands[h as usize].has_source(f.id));
            hit
        })
        .collect();
    Traced {
        dense,
        theta,
        occluders,
    }
}

/// Projected samples of every traced fragment, bucketed by pixel.
struct ExplainIndex {
    cell: f64,
    buckets: HashMap<(i64, i64), Vec<(u32, u32)>>,
}

impl ExplainIndex {
    fn new(traced: &[Traced], view: &CameraView, cell: f64) -> Self {
        let mut buckets: HashMap<(i64, i64), Vec<(u32, u32)>> = HashMap::new();
        for (fi, t) in traced.iter().enumerate() {
            for i in 0..t.dense.len() {
                if t.theta[i].is_none() || !t.dense.observable(i, view) {
                    continue;
                }
                let p = t.dense.pixels[i].unwrap();
                buckets
                    .entry(cell_key(&p, cell))
                    .or_default()
                    .push((fi as u32, i as u32));
            }
        }
        ExplainIndex { cell, buckets }
    }

    /// Whether a fragment other than `skip`, left visible by hypothesis `hyp`,
    /// projects near `p` with a matching orientation.
    fn explained(&self, traced: &[Traced], p: &Point2, theta: f64, skip: usize, hyp: u32, m: &EdgeMatch) -> bool {
        let (cx, cy) = cell_key(p, self.cell);
        for x in cx - 1..=cx + 1 {
            for y in cy - 1..=cy + 1 {
                let Some(b) = self.buckets.get(&(x, y)) else {
                    continue;
                };
                for &(fi, i) in b {
                    let (fi, i) = (fi as usize, i as usize);
                    if fi == skip {
                        continue;
                    }
                    let t = &traced[fi];
                    let q = t.dense.pixels[i].unwrap();
                    if (q - p).norm() <= m.tau_loc
                        && orientation_difference(t.theta[i].unwrap(), theta) < m.tau_theta
                        && !t.occluders[i].contains(&hyp)
                    {
                        return true;
                    }
                }
            }
        }
        false
    }
}

fn cell_key(p: &Point2, cell: f64) -> (i64, i64) {
    ((p.x / cell).floor() as i64, (p.y / cell).floor() as i64)
}

/// Records for one view.
fn view_records(
    cands: &[&SurfaceHypothesis],
    tracer: &RayTracer,
    fragments: &[&CurveFragment],
    view: &CameraView,
    params: &OcclusionParams,
) -> Vec<OcclusionRecord> {
    let index = EdgeIndex::new(&view.edges, params.tau_loc);
    let m = params.edge_match();
    let traced: Vec<Traced> = fragments
        .iter()
        .map(|f| trace_fragment(f, cands, tracer, view, params))
        .collect();
    let explain = params
        .explain_visible
        .then(|| ExplainIndex::new(&traced, view, params.tau_loc.max(1e-6)));
    let mut out = Vec::new();
    for (fi, (f, t)) in fragments.iter().zip(&traced).enumerate() {
        let dense = &t.dense;
        let mut flags: BTreeMap<u32, Vec<bool>> = BTreeMap::new();
        for (i, hit) in t.occluders.iter().enumerate() {
            for &n in hit {
                flags.entry(n).or_insert_with(|| vec![false; dense.len()])[i] = true;
            }
        }
        if flags.is_empty() {
            continue;
        }
        let visible: Vec<usize> = (0..dense.len()).filter(|&i| dense.pixels[i].is_some()).collect();
        let gamma: Vec<Point2> = visible.iter().map(|&i| dense.pixels[i].unwrap()).collect();
        let cum: Vec<f64> = visible.iter().map(|&i| dense.s_px[i]).collect();
        for (n, fl) in flags {
            let intervals = runs_to_intervals(&fl, &dense.s);
            let pixel_intervals = runs_to_intervals(&fl, &dense.s_px);
            let evidence = pixel_intervals
                .iter()
                .map(|&iv| match &explain {
                    Some(ex) => index.support_unless(&gamma, &cum, iv, &m, |p, theta| {
                        ex.explained(&traced, p, theta, fi, n, &m)
                    }),
                    None => index.support(&gamma, &cum, iv, &m),
                })
                .sum();
            out.push(OcclusionRecord {
                hypothesis: cands[n as usize].id,
                curve: f.id,
                view: view.id,
                intervals,
                pixel_intervals,
                evidence,
            });
        }
    }
    out
}

/// Occlusion records of every formed hypothesis against every drawing curve in every view.
pub fn occlusion_records(
    hyps: &[SurfaceHypothesis],
    drawing: &CurveDrawing,
    views: &[CameraView],
    params: &OcclusionParams,
) -> Vec<OcclusionRecord> {
    let cands: Vec<&SurfaceHypothesis> = hyps.iter().filter(|h| h.status == Status::Formed).collect();
    let tracer = RayTracer::new(cands.iter().copied());
    let mut fragments: Vec<&CurveFragment> = drawing.fragments.iter().collect();
    fragments.sort_by_key(|f| f.id);
    let mut records: Vec<OcclusionRecord> = views
        .par_iter()
        .flat_map_iter(|v| view_records(&cands, &tracer, &fragments, v, params))
        .collect();
    records.sort_by_key(|r| (r.hypothesis, r.curve, r.view));
    records
}

/// Verdict for one hypothesis given its records.
pub fn verdict(records: &[&OcclusionRecord], params: &OcclusionParams) -> Status {
    if records.is_empty() {
        return Status::Unverifiable;
    }
    let violated = |r: &&&OcclusionRecord| r.evidence >= params.tau_e;
    match params.confirmation {
        ConfirmationRule::Strict => {
            if records.iter().any(|r| violated(&r)) {
                Status::Rejected
            } else {
                Status::Confirmed
            }
        }
        ConfirmationRule::Lenient => {
            if records.iter().all(|r| violated(&r)) {
                Status::Rejected
            } else {
                Status::Confirmed
            }
        }
    }
}

/// Verifies every formed hypothesis. Others pass through unchanged.
pub fn verify(
    hyps: &[SurfaceHypothesis],
    drawing: &CurveDrawing,
    views: &[CameraView],
    params: &OcclusionParams,
) -> Result<(Vec<SurfaceHypothesis>, Vec<OcclusionRecord>)> {
    params.validate()?;
    let records = occlusion_records(hyps, drawing, views, params);
    let mut by_hyp: BTreeMap<u64, Vec<&OcclusionRecord>> = BTreeMap::new();
    for r in &records {
        by_hyp.entry(r.hypothesis).or_default().push(r);
    }
    let mut out = hyps.to_vec();
    for h in out.iter_mut().filter(|h| h.status == Status::Formed) {
        let recs = by_hyp.get(&h.id).map(Vec::as_slice).unwrap_or(&[]);
        h.advance(verdict(recs, params))?;
    }
    Ok((out, records))
}

/// Fraction of hypotheses with at least one non-empty record.
pub fn occluding_fraction(hyps: &[SurfaceHypothesis], records: &[OcclusionRecord]) -> f64 {
    if hyps.is_empty() {
        return 0.0;
    }
    let n = hyps
        .iter()
        .filter(|h| records.iter().any(|r| r.hypothesis == h.id && !r.intervals.is_empty()))
        .count();
    n as f64 / hyps.len() as f64
}
