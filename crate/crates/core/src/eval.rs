//! Precision and recall of surface sets against a ground-truth mesh.

use std::fmt::Write as _;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bvh::{Aabb, TriangleBvh};
use crate::error::{Error, Result};
use crate::geom::Point3;
use crate::hypothesis::{Status, SurfaceHypothesis};
use crate::mesh::{write_text, TriMesh};
use crate::synth::{load_ground_truth, GroundTruth};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Formed,
    Confirmed,
    Cleaned,
}

impl Stage {
    pub fn name(self) -> &'static str {
        match self {
            Stage::Formed => "formed",
            Stage::Confirmed => "confirmed",
            Stage::Cleaned => "cleaned",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrPoint {
    pub stage: Stage,
    pub tau: f64,
    pub precision: f64,
    pub recall: f64,
    /// False when the result was empty and precision is reported as 1 by convention.
    pub precision_defined: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalParams {
    /// Samples per square metre.
    pub density: f64,
    pub min_samples: usize,
    pub max_samples: usize,
    pub seed: u64,
    /// Thresholds as fractions of the ground-truth bounding-box diagonal.
    pub tau_fractions: Vec<f64>,
}

impl Default for EvalParams {
    fn default() -> Self {
        EvalParams {
            density: 1e4,
            min_samples: 10_000,
            max_samples: 200_000,
            seed: 0,
            tau_fractions: vec![0.0025, 0.005, 0.01, 0.02, 0.04],
        }
    }
}

impl EvalParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.density > 0.0) || self.min_samples == 0 || self.max_samples < self.min_samples {
            return Err(Error::InvalidParams(
                "eval needs positive density and 0 < min_samples <= max_samples".into(),
            ));
        }
        if self.tau_fractions.iter().any(|t| !(*t > 0.0)) {
            return Err(Error::InvalidParams("tau_fractions must be positive".into()));
        }
        Ok(())
    }

    fn count(&self, area: f64) -> usize {
        ((area * self.density).ceil() as usize).clamp(self.min_samples, self.max_samples)
    }
}

fn sample(mesh: &TriMesh, params: &EvalParams, stream: u64) -> Vec<Point3> {
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    rng.set_stream(stream);
    mesh.sample_uniform(params.count(mesh.area()), &mut rng)
}

/// Fraction of `pts` within each threshold of `target`.
fn fractions_within(pts: &[Point3], target: &TriMesh, taus: &[f64]) -> Vec<f64> {
    if pts.is_empty() {
        return vec![0.0; taus.len()];
    }
    let bvh = TriangleBvh::from_mesh(target, 0);
    let max_tau = taus.iter().copied().fold(0.0, f64::max);
    let dists: Vec<f64> = pts
        .par_iter()
        .map(|p| bvh.nearest(p, max_tau, |_| true).map_or(f64::INFINITY, |(d, _)| d))
        .collect();
    taus.iter()
        .map(|&t| dists.iter().filter(|&&d| d <= t).count() as f64 / pts.len() as f64)
        .collect()
}

/// Precision and recall of `result` against `gt` at each threshold (m).
pub fn pr_curve(
    result: &[TriMesh],
    gt: &TriMesh,
    taus: &[f64],
    stage: Stage,
    params: &EvalParams,
) -> Result<Vec<PrPoint>> {
    pr_curve_split(result, gt, gt, taus, stage, params)
}

/// Like [`pr_curve`], with precision measured against `gt_precision` and
/// recall against `gt_recall`.
pub fn pr_curve_split(
    result: &[TriMesh],
    gt_precision: &TriMesh,
    gt_recall: &TriMesh,
    taus: &[f64],
    stage: Stage,
    params: &EvalParams,
) -> Result<Vec<PrPoint>> {
    params.validate()?;
    for gt in [gt_precision, gt_recall] {
        if gt.faces.is_empty() || gt.area() <= 0.0 {
            return Err(Error::InvalidMesh("ground truth mesh is empty".into()));
        }
    }
    let merged = TriMesh::merged(result.iter());
    let gt_pts = sample(gt_recall, params, 1);
    let res_pts = if merged.faces.is_empty() {
        Vec::new()
    } else {
        sample(&merged, params, 2)
    };
    let recall = if res_pts.is_empty() {
        vec![0.0; taus.len()]
    } else {
        fractions_within(&gt_pts, &merged, taus)
    };
    let precision = if res_pts.is_empty() {
        vec![1.0; taus.len()]
    } else {
        fractions_within(&res_pts, gt_precision, taus)
    };
    Ok(taus
        .iter()
        .enumerate()
        .map(|(i, &tau)| PrPoint {
            stage,
            tau,
            precision: precision[i],
            recall: recall[i],
            precision_defined: !res_pts.is_empty(),
        })
        .collect())
}

/// Ground truth for evaluation: precision is measured against the full
/// mesh, recall against the faces that occlude at least one curve.
#[derive(Clone, Debug)]
pub struct EvalTarget {
    pub full: TriMesh,
    pub occluding: TriMesh,
}

impl EvalTarget {
    pub fn from_ground_truth(gt: &GroundTruth) -> Self {
        EvalTarget {
            full: gt.gt_mesh.clone(),
            occluding: gt.face_mesh(|f| f.occludes_curves),
        }
    }

    /// Loads a scene directory, or an OBJ file. An OBJ with a `gt.json`
    /// sibling is read as a scene; a bare OBJ counts every face as occluding.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        if path.is_dir() {
            return Ok(Self::from_ground_truth(&load_ground_truth(path)?));
        }
        let dir = path.parent().unwrap_or(Path::new("."));
        if path.file_name().is_some_and(|n| n == "gt.obj") && dir.join("gt.json").is_file() {
            return Ok(Self::from_ground_truth(&load_ground_truth(dir)?));
        }
        let full = TriMesh::load_obj(path)?;
        Ok(EvalTarget {
            occluding: full.clone(),
            full,
        })
    }

    /// Bounding-box diagonal of the full mesh.
    pub fn diameter(&self) -> f64 {
        Aabb::from_points(self.full.vertices.iter()).diagonal()
    }

    pub fn taus(&self, params: &EvalParams) -> Vec<f64> {
        let d = self.diameter();
        params.tau_fractions.iter().map(|f| f * d).collect()
    }
}

/// Hypotheses counted at `stage`, judged from their status histories.
///
/// The confirmed stage holds whatever passed verification, and the cleaned
/// stage the subset that also survived cleanup.
pub fn stage_members(
    hyps: &[SurfaceHypothesis],
    stage: Stage,
    survives: impl Fn(Status) -> bool,
) -> Vec<&SurfaceHypothesis> {
    hyps.iter()
        .filter(|h| match stage {
            Stage::Formed => true,
            Stage::Confirmed => h.status_history.iter().any(|&s| survives(s)),
            Stage::Cleaned => survives(h.status),
        })
        .collect()
}

/// PR points for every stage, in stage then threshold order.
pub fn evaluate_stages(
    hyps: &[SurfaceHypothesis],
    target: &EvalTarget,
    survives: impl Fn(Status) -> bool,
    params: &EvalParams,
) -> Result<Vec<PrPoint>> {
    let taus = target.taus(params);
    let mut out = Vec::new();
    for stage in [Stage::Formed, Stage::Confirmed, Stage::Cleaned] {
        let meshes: Vec<TriMesh> = stage_members(hyps, stage, &survives)
            .into_iter()
            .map(|h| h.tri.clone())
            .collect();
        out.extend(pr_curve_split(
            &meshes,
            &target.full,
            &target.occluding,
            &taus,
            stage,
            params,
        )?);
    }
    Ok(out)
}

pub fn pr_csv(points: &[PrPoint]) -> String {
    let mut s = String::from("stage,tau,precision,recall\n");
    for p in points {
        let _ = writeln!(s, "{},{},{},{}", p.stage.name(), p.tau, p.precision, p.recall);
    }
    s
}

pub fn write_pr_csv(path: impl AsRef<Path>, points: &[PrPoint]) -> Result<()> {
    write_text(path, &pr_csv(points))
}

/// Precision-recall plot with one polyline per stage.
pub fn pr_svg(points: &[PrPoint]) -> String {
    let (w, h, m) = (420.0, 420.0, 40.0);
    let x = |r: f64| m + r * (w - 2.0 * m);
    let y = |p: f64| h - m - p * (h - 2.0 * m);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<path d="M{} {} L{} {} L{} {}" fill="none" stroke="black"/>"#,
        x(0.0),
        y(1.0),
        x(0.0),
        y(0.0),
        x(1.0),
        y(0.0)
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" font-size="12">recall</text>"#,
        x(0.45),
        h - 10.0
    );
    let _ = writeln!(s, r#"<text x="5" y="{}" font-size="12">precision</text>"#, y(1.0) - 8.0);
    for (stage, color) in [
        (Stage::Formed, "green"),
        (Stage::Confirmed, "blue"),
        (Stage::Cleaned, "red"),
    ] {
        let mut pts: Vec<&PrPoint> = points.iter().filter(|p| p.stage == stage).collect();
        if pts.is_empty() {
            continue;
        }
        pts.sort_by(|a, b| a.tau.total_cmp(&b.tau));
        let path: Vec<String> = pts
            .iter()
            .map(|p| format!("{:.2},{:.2}", x(p.recall), y(p.precision)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
            path.join(" ")
        );
        for p in pts {
            let _ = writeln!(
                s,
                r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{color}"/>"#,
                x(p.recall),
                y(p.precision)
            );
        }
    }
    s.push_str("</svg>\n");
    s
}
