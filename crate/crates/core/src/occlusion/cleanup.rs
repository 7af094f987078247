use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{OcclusionParams, RayTracer};
use crate::bvh::{Aabb, TriangleBvh};
use crate::curve_graph::CameraView;
use crate::geom::Point3;
use crate::hypothesis::{Status, SurfaceHypothesis};

/// Deterministic area-uniform samples of a hypothesis surface.
pub fn sample_hypothesis(h: &SurfaceHypothesis, count: usize) -> Vec<Point3> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x0cc1_u64 ^ h.id.wrapping_mul(0x9e37_79b9_7f4a_7c15));
    h.tri.sample_uniform(count, &mut rng)
}

/// Marks live hypotheses that no view can see past the other live patches,
/// up to `hidden_visible_frac` of their samples.
///
/// Hypotheses are tested in id order and a hidden one stops occluding the
/// ones tested after it, so of two coincident patches the lower id survives.
pub fn drop_fully_hidden(
    hyps: &[SurfaceHypothesis],
    views: &[CameraView],
    params: &OcclusionParams,
) -> crate::Result<Vec<SurfaceHypothesis>> {
    let mut out = hyps.to_vec();
    let mut order: Vec<usize> = (0..out.len()).filter(|&i| out[i].status.is_live()).collect();
    order.sort_by_key(|&i| out[i].id);
    let tracer = RayTracer::new(out.iter());
    let mut occluder: Vec<bool> = out.iter().map(|h| h.status.is_live()).collect();
    for &i in &order {
        let samples = sample_hypothesis(&out[i], params.cleanup_samples);
        let allowed = (params.hidden_visible_frac * samples.len() as f64).floor() as usize;
        let seen = views.iter().any(|v| {
            let visible = samples
                .par_iter()
                .filter(|p| {
                    let in_view = v.depth(p) > 0.0 && v.project(p).is_some_and(|px| v.in_image(&px));
                    in_view && !tracer.blocked(&v.camera_center, p, 0.0, |t| t as usize != i && occluder[t as usize])
                })
                .count();
            visible > allowed
        });
        if !seen {
            occluder[i] = false;
            log::debug!("hypothesis {} is hidden in every view", out[i].id);
            out[i].advance(Status::Hidden)?;
        }
    }
    Ok(out)
}

/// Marks live hypotheses mostly covered by a larger (or equal, lower id) live one.
pub fn dedup_hypotheses(hyps: &[SurfaceHypothesis], params: &OcclusionParams) -> crate::Result<Vec<SurfaceHypothesis>> {
    let mut out = hyps.to_vec();
    let mut order: Vec<usize> = (0..out.len()).filter(|&i| out[i].status.is_live()).collect();
    let areas: Vec<f64> = out.iter().map(|h| h.area()).collect();
    order.sort_by(|&a, &b| areas[b].total_cmp(&areas[a]).then(out[a].id.cmp(&out[b].id)));
    let bvh = TriangleBvh::from_meshes(out.iter().map(|h| &h.tri));
    let bounds: Vec<Aabb> = out
        .iter()
        .map(|h| Aabb::from_points(h.tri.vertices.iter()).expanded(params.subsume_eps))
        .collect();
    let mut kept: Vec<usize> = Vec::new();
    for &a in &order {
        let samples = sample_hypothesis(&out[a], params.cleanup_samples);
        let need = (params.subsume_frac * samples.len() as f64).ceil() as usize;
        let own = Aabb::from_points(out[a].tri.vertices.iter());
        let cover = kept.iter().copied().find(|&b| {
            if samples.is_empty() || !bounds[b].overlaps(&own) {
                return false;
            }
            let covered = samples
                .par_iter()
                .filter(|p| bvh.nearest(p, params.subsume_eps, |t| t as usize == b).is_some())
                .count();
            covered >= need
        });
        match cover {
            Some(b) => {
                log::debug!("hypothesis {} is subsumed by {}", out[a].id, out[b].id);
                out[a].advance(Status::Redundant)?;
            }
            None => kept.push(a),
        }
    }
    Ok(out)
}
