use std::collections::BTreeSet;

use curveloft::bvh::{segment_triangle, Aabb};
use curveloft::geom::Point3;
use curveloft::synth::{generate, Defect, Defects, SceneKind, SceneSpec};

fn clean_box(n_views: usize) -> SceneSpec {
    SceneSpec {
        n_views,
        defects: Defects::none(),
        ..SceneSpec::for_scene(SceneKind::Box)
    }
}

#[test]
fn clean_box_has_twelve_fragments() {
    let (d, views, gt) = generate(&clean_box(8)).unwrap();
    assert_eq!(d.fragments.len(), 12);
    assert_eq!(views.len(), 8);
    assert!(gt.defects.is_empty());
    assert!(views.iter().all(|v| !v.edges.is_empty()));
}

/// Distance from `p` to the surface of an axis-aligned box.
fn box_surface_distance(b: &Aabb, p: &Point3) -> f64 {
    let outside = (0..3)
        .map(|k| (b.min[k] - p[k]).max(p[k] - b.max[k]).max(0.0))
        .collect::<Vec<_>>();
    let out = outside.iter().map(|x| x * x).sum::<f64>().sqrt();
    if out > 0.0 {
        return out;
    }
    (0..3)
        .map(|k| (p[k] - b.min[k]).min(b.max[k] - p[k]))
        .fold(f64::INFINITY, f64::min)
}

#[test]
fn drawn_samples_lie_on_the_box() {
    let spec = clean_box(2);
    let (d, _, gt) = generate(&spec).unwrap();
    let b = Aabb::from_points(gt.gt_mesh.vertices.iter());
    for f in &gt.veridical {
        assert!(f.points.iter().all(|p| box_surface_distance(&b, p) < 1e-12));
    }
    let dists: Vec<f64> = d
        .fragments
        .iter()
        .flat_map(|f| &f.points)
        .map(|p| box_surface_distance(&b, p))
        .collect();
    let sigma = spec.noise_sigma;
    let within = dists.iter().filter(|&&x| x <= 3.0 * sigma).count() as f64 / dists.len() as f64;
    assert!(within >= 0.95, "{within}");
    assert!(dists.iter().all(|&x| x <= 6.0 * sigma));
}

#[test]
fn edge_maps_hold_only_visible_samples() {
    let (_, views, gt) = generate(&clean_box(4)).unwrap();
    let tris: Vec<[Point3; 3]> = (0..gt.gt_mesh.faces.len()).map(|t| gt.gt_mesh.triangle(t)).collect();
    let dense: Vec<Point3> = gt
        .veridical
        .iter()
        .flat_map(|f| {
            f.points.windows(2).flat_map(|w| {
                let n = ((w[1] - w[0]).norm() / 5e-4).ceil() as usize;
                (0..=n).map(move |k| w[0] + (w[1] - w[0]) * (k as f64 / n as f64))
            })
        })
        .collect();
    for view in &views {
        let c = view.camera_center;
        let unoccluded = |x: &Point3| {
            let len = (x - c).norm();
            tris.iter()
                .all(|t| segment_triangle(&c, x, t).is_none_or(|s| (1.0 - s) * len < 3e-3))
        };
        let projected: Vec<_> = dense.iter().map(|x| (x, view.project(x).unwrap())).collect();
        let mut hidden_drawn = 0;
        for e in &view.edges {
            let ok = projected
                .iter()
                .any(|(x, p)| (p - e.position).norm() < 0.1 && unoccluded(x));
            if !ok {
                hidden_drawn += 1;
            }
        }
        assert_eq!(hidden_drawn, 0, "view {}", view.id);
        let hidden = projected.iter().filter(|(x, _)| !unoccluded(x)).count();
        assert!(hidden > 0, "box should hide some of its edges from view {}", view.id);
    }
}

#[test]
fn full_fragmentation_splits_every_fragment() {
    let spec = SceneSpec {
        defects: Defects {
            fragmentation_rate: 1.0,
            ..Defects::none()
        },
        ..clean_box(2)
    };
    let (d, _, gt) = generate(&spec).unwrap();
    let mut split = BTreeSet::new();
    let mut created = BTreeSet::new();
    for defect in &gt.defects {
        let Defect::Split {
            fragment,
            new_fragment,
            point,
        } = defect
        else {
            panic!("unexpected defect {defect:?}");
        };
        split.insert(*fragment);
        created.insert(*new_fragment);
        let head = d.fragment(*fragment).unwrap();
        let tail = d.fragment(*new_fragment).unwrap();
        let p = Point3::from(*point);
        assert_eq!(*head.points.last().unwrap(), p);
        assert_eq!(tail.points[0], p);
    }
    assert_eq!(split, (0..12).collect());
    let ids: BTreeSet<u64> = d.fragments.iter().map(|f| f.id).collect();
    assert_eq!(ids, split.union(&created).copied().collect());
}

#[test]
fn generation_is_deterministic() {
    let spec = SceneSpec {
        n_views: 3,
        ..SceneSpec::for_scene(SceneKind::House)
    };
    let (d1, v1, g1) = generate(&spec).unwrap();
    let (d2, v2, g2) = generate(&spec).unwrap();
    assert_eq!(d1, d2);
    assert_eq!(v1, v2);
    assert_eq!(g1.defects, g2.defects);
    assert_eq!(g1.veridical_fragments, g2.veridical_fragments);
    let (d3, _, _) = generate(&SceneSpec { rng_seed: 8, ..spec }).unwrap();
    assert_ne!(d1, d3);
}

#[test]
fn bad_specs_are_rejected() {
    assert!(generate(&SceneSpec {
        n_views: 1,
        ..clean_box(2)
    })
    .is_err());
    assert!(generate(&SceneSpec {
        focal_px: -1.0,
        ..clean_box(2)
    })
    .is_err());
    assert!("castle".parse::<SceneKind>().is_err());
}
