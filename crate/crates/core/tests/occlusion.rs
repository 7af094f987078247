use std::collections::BTreeSet;
use std::f64::consts::{FRAC_PI_2, PI};

use curveloft::curve_graph::{CameraView, CurveDrawing, EdgeElement};
use curveloft::geom::{point_triangle_distance, Point2, Point3, Vec3};
use curveloft::hypothesis::{form_hypotheses, HypothesisParams, Status, SurfaceHypothesis};
use curveloft::loft::{loft_pair, LoftParams, Pairing};
use curveloft::occlusion::{
    dedup_hypotheses, drop_fully_hidden, edge_support, occluded_intervals, occlusion_records, polyline_cumulative,
    runs_to_intervals, sample_hypothesis, verdict, verify, DenseCurve, OcclusionParams, OcclusionRecord, RayTracer,
};
use curveloft::synth::{generate, ring_cameras, Defects, SceneKind, SceneSpec};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

mod common;
use common::{brute_support, matcher, p, random_scene, seg};

/// Planar quad patch with corners `c` in loop order, lofted from two opposite sides.
fn patch(id: u64, c: [Point3; 4]) -> SurfaceHypothesis {
    let r1 = seg(1000 + 2 * id, c[0], c[1], 11);
    let r2 = seg(1001 + 2 * id, c[3], c[2], 11);
    let r = loft_pair(&r1, &r2, Pairing::Parallel, &LoftParams::default()).unwrap();
    SurfaceHypothesis::new(id, vec![r1.id, r2.id], Pairing::Parallel, r)
}

fn square_at_origin(id: u64) -> SurfaceHypothesis {
    patch(
        id,
        [
            p(-0.5, -0.5, 0.0),
            p(0.5, -0.5, 0.0),
            p(0.5, 0.5, 0.0),
            p(-0.5, 0.5, 0.0),
        ],
    )
}

fn camera(eye: Point3, target: Point3) -> CameraView {
    CameraView::look_at(0, eye, target, Vec3::y(), 500.0, 640, 480).unwrap()
}

#[test]
fn curve_in_front_is_not_occluded() {
    let h = square_at_origin(0);
    let view = camera(p(0.0, 0.0, 5.0), p(0.0, 0.0, 0.0));
    let curve = seg(1, p(-2.0, 0.0, 1.0), p(2.0, 0.0, 1.0), 41);
    assert!(occluded_intervals(&curve, &h, &view, 0.0).is_empty());
}

#[test]
fn shadow_of_square_matches_perspective() {
    let h = square_at_origin(0);
    let view = camera(p(0.0, 0.0, 5.0), p(0.0, 0.0, 0.0));
    let curve = seg(1, p(-2.0, 0.0, -1.0), p(2.0, 0.0, -1.0), 41);
    let iv = occluded_intervals(&curve, &h, &view, 0.0);
    assert_eq!(iv.len(), 1, "{iv:?}");
    // Rays through x = +-0.5 at depth 5 reach x = +-0.6 at depth 6.
    let (a, b) = iv[0];
    let dense = DenseCurve::new(&curve, &view);
    let spacing = dense.s.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
    assert!(
        (a - 1.4).abs() <= spacing && (b - 2.6).abs() <= spacing,
        "{iv:?} spacing {spacing}"
    );
}

#[test]
fn moved_camera_sees_past_square() {
    let h = square_at_origin(0);
    let view = camera(p(0.0, 4.0, 5.0), p(0.0, 0.0, -1.0));
    let curve = seg(1, p(-2.0, 0.0, -1.0), p(2.0, 0.0, -1.0), 41);
    assert!(occluded_intervals(&curve, &h, &view, 0.0).is_empty());
}

#[test]
fn source_fragments_are_never_occluded() {
    let h = square_at_origin(0);
    let view = camera(p(0.0, 0.0, 5.0), p(0.0, 0.0, 0.0));
    let curve = seg(h.source_fragment_ids[0], p(-2.0, 0.0, -1.0), p(2.0, 0.0, -1.0), 41);
    assert!(occluded_intervals(&curve, &h, &view, 0.0).is_empty());
}

#[test]
fn bvh_classification_matches_linear_scan() {
    for seed in 0..20 {
        let (hyps, curves, views) = random_scene(seed);
        let tracer = RayTracer::new(hyps.iter());
        for view in &views {
            for curve in &curves {
                let dense = DenseCurve::new(curve, view);
                for contact in [0.0, 0.01] {
                    for x in &dense.points {
                        assert_eq!(
                            tracer.occluders(&view.camera_center, x, contact),
                            tracer.occluders_linear(&view.camera_center, x, contact),
                            "seed {seed}"
                        );
                    }
                }
                for (k, h) in hyps.iter().enumerate() {
                    let single = RayTracer::new([h]);
                    let flags: Vec<bool> = (0..dense.len())
                        .map(|i| {
                            dense.observable(i, view)
                                && !single
                                    .occluders_linear(&view.camera_center, &dense.points[i], 0.0)
                                    .is_empty()
                        })
                        .collect();
                    assert_eq!(
                        occluded_intervals(curve, h, view, 0.0),
                        runs_to_intervals(&flags, &dense.s),
                        "seed {seed} hypothesis {k}"
                    );
                }
            }
        }
    }
}

fn view_with(edges: Vec<EdgeElement>) -> CameraView {
    camera(p(0.0, 0.0, 5.0), p(0.0, 0.0, 0.0)).with_edges(edges)
}

#[test]
fn edge_chain_support_matches_counting_oracle() {
    let (a, b) = (Point2::new(100.0, 100.0), Point2::new(300.0, 100.0));
    let edges: Vec<EdgeElement> = (0..=400)
        .map(|i| EdgeElement::new(Point2::new(i as f64, 100.0), 0.0, 1.0))
        .collect();
    let m = matcher();
    let got = edge_support(&view_with(edges.clone()), &[a, b], (20.0, 70.0), &m);
    let want = brute_support(a, b, &edges, (20.0, 70.0), &m);
    // Four or five edges lie within 2 px of every point: four on average.
    assert!((want - 200.0).abs() < 1.0, "{want}");
    assert!((got - want).abs() <= 0.01 * want, "{got} vs {want}");
}

#[test]
fn random_edge_maps_match_counting_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let m = matcher();
    for _ in 0..5 {
        let a = Point2::new(rng.random_range(50.0..150.0), rng.random_range(50.0..150.0));
        let ang: f64 = rng.random_range(0.0..PI);
        let b = a + curveloft::Vec2::new(ang.cos(), ang.sin()) * 200.0;
        let mut edges = Vec::new();
        for i in 0..2000 {
            let along = a + (b - a) * (i as f64 / 2000.0);
            let jitter = Point2::new(rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0));
            edges.push(EdgeElement::new(
                along + jitter.coords,
                ang + rng.random_range(-0.5..0.5),
                1.0,
            ));
        }
        let got = edge_support(&view_with(edges.clone()), &[a, b], (30.0, 80.0), &m);
        let want = brute_support(a, b, &edges, (30.0, 80.0), &m);
        assert!(want > 0.0);
        assert!((got - want).abs() <= 0.01 * want, "{got} vs {want}");
    }
}

#[test]
fn orientation_veto_and_empty_maps_give_zero() {
    let (a, b) = (Point2::new(100.0, 100.0), Point2::new(300.0, 100.0));
    let rotated: Vec<EdgeElement> = (0..=400)
        .map(|i| EdgeElement::new(Point2::new(i as f64, 100.0), FRAC_PI_2, 1.0))
        .collect();
    assert_eq!(
        edge_support(&view_with(rotated), &[a, b], (20.0, 70.0), &matcher()),
        0.0
    );
    assert_eq!(
        edge_support(&view_with(Vec::new()), &[a, b], (20.0, 70.0), &matcher()),
        0.0
    );
}

#[test]
fn cumulative_length_of_polyline() {
    let g = [Point2::new(0.0, 0.0), Point2::new(3.0, 4.0), Point2::new(3.0, 6.0)];
    assert_eq!(polyline_cumulative(&g), vec![0.0, 5.0, 7.0]);
}

fn clean_box() -> (CurveDrawing, Vec<CameraView>, curveloft::synth::GroundTruth) {
    let spec = SceneSpec {
        defects: Defects::none(),
        ..SceneSpec::for_scene(SceneKind::Box)
    };
    generate(&spec).unwrap()
}

#[test]
fn verdicts_on_box_scene() {
    let (drawing, views, gt) = clean_box();
    let mut hyps = form_hypotheses(&drawing, &views, &HypothesisParams::default(), &LoftParams::default()).unwrap();
    let next = hyps.len() as u64;
    // A screen between the box and one camera hides rendered box edges.
    let eye = views[0].camera_center;
    let towards = (p(0.0, 0.0, 0.5) - eye).normalize();
    let side = towards.cross(&Vec3::z()).normalize();
    let up = side.cross(&towards).normalize();
    let c = eye + towards * 1.5;
    let screen = patch(
        next,
        [
            c - side * 0.6 - up * 0.6,
            c + side * 0.6 - up * 0.6,
            c + side * 0.6 + up * 0.6,
            c - side * 0.6 + up * 0.6,
        ],
    );
    let far = patch(
        next + 1,
        [
            p(50.0, 50.0, 50.0),
            p(51.0, 50.0, 50.0),
            p(51.0, 51.0, 50.0),
            p(50.0, 51.0, 50.0),
        ],
    );
    hyps.push(screen);
    hyps.push(far);
    let params = OcclusionParams::default();
    let (out, records) = verify(&hyps, &drawing, &views, &params).unwrap();
    assert_eq!(out[next as usize].status, Status::Rejected);
    assert_eq!(out[next as usize + 1].status, Status::Unverifiable);
    assert!(records.iter().all(|r| r.evidence >= 0.0));

    // Patches lying on a box face that hide some curve are confirmed.
    let on_face = |h: &SurfaceHypothesis| {
        h.tri.vertices.iter().all(|v| {
            (0..gt.gt_mesh.faces.len()).any(|t| {
                let [a, b, c] = gt.gt_mesh.triangle(t);
                point_triangle_distance(v, &a, &b, &c) < 0.01
            })
        })
    };
    let mut true_faces = 0;
    for h in out.iter().take(next as usize) {
        let occludes = records.iter().any(|r| r.hypothesis == h.id && !r.intervals.is_empty());
        if occludes && on_face(h) {
            true_faces += 1;
            assert_eq!(h.status, Status::Confirmed, "hypothesis {}", h.id);
        }
    }
    assert!(true_faces >= 5, "{true_faces}");
}

#[test]
fn empty_edge_maps_give_zero_evidence() {
    let (drawing, views, _) = clean_box();
    let views: Vec<CameraView> = views.into_iter().map(|v| v.with_edges(Vec::new())).collect();
    let hyps = form_hypotheses(&drawing, &views, &HypothesisParams::default(), &LoftParams::default()).unwrap();
    let records = occlusion_records(&hyps, &drawing, &views, &OcclusionParams::default());
    assert!(!records.is_empty());
    assert!(records.iter().all(|r| r.evidence == 0.0));
}

#[test]
fn verify_ignores_hypothesis_order() {
    let (drawing, views, _) = clean_box();
    let hyps = form_hypotheses(&drawing, &views, &HypothesisParams::default(), &LoftParams::default()).unwrap();
    let params = OcclusionParams::default();
    let (a, ra) = verify(&hyps, &drawing, &views, &params).unwrap();
    let mut rev = hyps.clone();
    rev.reverse();
    let (mut b, rb) = verify(&rev, &drawing, &views, &params).unwrap();
    b.reverse();
    assert_eq!(a, b);
    assert_eq!(ra, rb);
}

fn box_face_patches() -> Vec<SurfaceHypothesis> {
    let c = |i: usize| {
        p(
            if i & 1 == 0 { -1.0 } else { 1.0 },
            if i & 2 == 0 { -1.0 } else { 1.0 },
            if i & 4 == 0 { -1.0 } else { 1.0 },
        )
    };
    let faces = [
        [0, 1, 3, 2],
        [4, 5, 7, 6],
        [0, 1, 5, 4],
        [2, 3, 7, 6],
        [0, 2, 6, 4],
        [1, 3, 7, 5],
    ];
    faces
        .iter()
        .enumerate()
        .map(|(i, f)| patch(i as u64, [c(f[0]), c(f[1]), c(f[2]), c(f[3])]))
        .collect()
}

fn ring(n: usize) -> Vec<CameraView> {
    let spec = SceneSpec {
        n_views: n,
        ..SceneSpec::for_scene(SceneKind::Box)
    };
    ring_cameras(&spec, &p(0.0, 0.0, 0.0)).unwrap()
}

#[test]
fn patch_inside_closed_box_is_hidden() {
    let mut hyps = box_face_patches();
    hyps.push(patch(
        6,
        [
            p(-0.5, -0.5, 0.0),
            p(0.5, -0.5, 0.0),
            p(0.5, 0.5, 0.0),
            p(-0.5, 0.5, 0.0),
        ],
    ));
    let out = drop_fully_hidden(&hyps, &ring(12), &OcclusionParams::default()).unwrap();
    assert_eq!(out[6].status, Status::Hidden);
    // The bottom face is seen from no ring camera either; every other face is.
    for h in &out[1..6] {
        assert_eq!(h.status, Status::Formed, "face {}", h.id);
    }
}

#[test]
fn seam_leaks_follow_visible_fraction() {
    // Box faces pulled 3% towards their centres leave seams at the edges.
    let mut hyps: Vec<SurfaceHypothesis> = box_face_patches()
        .into_iter()
        .map(|mut h| {
            let c = h.tri.vertices.iter().fold(Vec3::zeros(), |a, v| a + v.coords) / h.tri.vertices.len() as f64;
            h.tri = h.tri.transformed(|v| Point3::from(c + (v.coords - c) * 0.97));
            h
        })
        .collect();
    hyps.push(patch(
        6,
        [
            p(-0.95, -0.95, -0.95),
            p(0.95, -0.95, -0.95),
            p(0.95, 0.95, 0.95),
            p(-0.95, 0.95, 0.95),
        ],
    ));
    let views = ring(6);
    let params = OcclusionParams::default();
    let faces = drop_fully_hidden(&hyps[..6], &views, &params).unwrap();
    let tracer = RayTracer::new(hyps.iter());
    let samples = sample_hypothesis(&hyps[6], params.cleanup_samples);
    let best = views
        .iter()
        .map(|v| {
            samples
                .iter()
                .filter(|x| v.depth(x) > 0.0 && v.project(x).is_some_and(|px| v.in_image(&px)))
                .filter(|x| {
                    tracer
                        .occluders_linear(&v.camera_center, x, 0.0)
                        .iter()
                        .all(|&t| t == 6 || faces[t as usize].status == Status::Hidden)
                })
                .count() as f64
                / samples.len() as f64
        })
        .fold(0.0, f64::max);
    assert!(best > 0.0, "no leak to test");
    for frac in [0.0, best * 0.5, best, 0.5] {
        let params = OcclusionParams {
            hidden_visible_frac: frac,
            ..OcclusionParams::default()
        };
        let out = drop_fully_hidden(&hyps, &views, &params).unwrap();
        let allowed = (frac * samples.len() as f64).floor() / samples.len() as f64;
        assert_eq!(
            out[6].status == Status::Hidden,
            best <= allowed,
            "frac {frac}, best {best}"
        );
    }
}

#[test]
fn coincident_patches_keep_lower_id() {
    let hyps = vec![square_at_origin(0), square_at_origin(1)];
    let out = drop_fully_hidden(&hyps, &ring(8), &OcclusionParams::default()).unwrap();
    assert_eq!(out[0].status, Status::Formed);
}

#[test]
fn duplicate_patch_is_redundant() {
    let hyps = vec![square_at_origin(0), square_at_origin(1)];
    let out = dedup_hypotheses(&hyps, &OcclusionParams::default()).unwrap();
    assert_eq!(out[0].status, Status::Formed);
    assert_eq!(out[1].status, Status::Redundant);
}

#[test]
fn disjoint_patches_are_not_redundant() {
    let hyps = vec![
        square_at_origin(0),
        patch(
            1,
            [p(2.0, 0.0, 0.0), p(3.0, 0.0, 0.0), p(3.0, 1.0, 0.0), p(2.0, 1.0, 0.0)],
        ),
    ];
    let out = dedup_hypotheses(&hyps, &OcclusionParams::default()).unwrap();
    assert!(out.iter().all(|h| h.status == Status::Formed));
}

#[test]
fn partial_cover_follows_sampling_oracle() {
    let big = patch(
        0,
        [p(0.0, 0.0, 0.0), p(2.0, 0.0, 0.0), p(2.0, 1.0, 0.0), p(0.0, 1.0, 0.0)],
    );
    let inside = patch(
        1,
        [p(0.0, 0.0, 0.0), p(1.0, 0.0, 0.0), p(1.0, 1.0, 0.0), p(0.0, 1.0, 0.0)],
    );
    let half = patch(
        2,
        [p(1.5, 0.0, 0.0), p(2.5, 0.0, 0.0), p(2.5, 1.0, 0.0), p(1.5, 1.0, 0.0)],
    );
    let params = OcclusionParams::default();
    let covered = |h: &SurfaceHypothesis| {
        let s = sample_hypothesis(h, params.cleanup_samples);
        let n = s
            .iter()
            .filter(|x| {
                (0..big.tri.faces.len()).any(|t| {
                    let [a, b, c] = big.tri.triangle(t);
                    point_triangle_distance(x, &a, &b, &c) <= params.subsume_eps
                })
            })
            .count();
        n as f64 / s.len() as f64
    };
    let out = dedup_hypotheses(&[big.clone(), inside.clone(), half.clone()], &params).unwrap();
    for (h, o) in [(&inside, &out[1]), (&half, &out[2])] {
        let expect = covered(h) >= params.subsume_frac;
        assert_eq!(
            o.status == Status::Redundant,
            expect,
            "hypothesis {} covered {}",
            h.id,
            covered(h)
        );
    }
    assert_eq!(out[1].status, Status::Redundant);
    assert_eq!(out[2].status, Status::Formed);
}

fn rejected(records: &[OcclusionRecord], ids: &[u64], params: &OcclusionParams) -> BTreeSet<u64> {
    ids.iter()
        .copied()
        .filter(|&id| {
            let recs: Vec<&OcclusionRecord> = records.iter().filter(|r| r.hypothesis == id).collect();
            verdict(&recs, params) == Status::Rejected
        })
        .collect()
}

fn synthetic_records(seed: u64) -> Vec<OcclusionRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..60)
        .map(|i| OcclusionRecord {
            hypothesis: i % 12,
            curve: i / 12,
            view: 0,
            intervals: vec![(0.0, 1.0)],
            pixel_intervals: vec![(0.0, 10.0)],
            evidence: rng.random_range(0.0..40.0),
        })
        .collect()
}

proptest! {
    #[test]
    fn rejection_shrinks_as_tau_e_grows(seed in 0u64..1000, lo in 0.0f64..30.0, extra in 0.0f64..30.0, lenient in any::<bool>()) {
        let records = synthetic_records(seed);
        let ids: Vec<u64> = (0..12).collect();
        let mut params = OcclusionParams::default();
        if lenient {
            params.confirmation = curveloft::occlusion::ConfirmationRule::Lenient;
        }
        params.tau_e = lo;
        let a = rejected(&records, &ids, &params);
        params.tau_e = lo + extra;
        let b = rejected(&records, &ids, &params);
        prop_assert!(b.is_subset(&a));
    }
}
