use curveloft::eval::{pr_csv, pr_curve, EvalParams, EvalTarget, PrPoint, Stage};
use curveloft::geom::{Point3, Vec3};
use curveloft::mesh::{grid, icosphere, TriMesh};
use proptest::prelude::*;

fn square(x0: f64, width: f64) -> TriMesh {
    grid(20, 20, width, 1.0)
        .triangulate()
        .transformed(|p| p + Vec3::new(x0, 0.0, 0.0))
}

fn params() -> EvalParams {
    EvalParams {
        density: 4e4,
        min_samples: 20_000,
        max_samples: 100_000,
        ..Default::default()
    }
}

fn pr(result: &TriMesh, gt: &TriMesh, taus: &[f64]) -> Vec<PrPoint> {
    pr_curve(std::slice::from_ref(result), gt, taus, Stage::Formed, &params()).unwrap()
}

#[test]
fn identical_meshes_score_one() {
    let m = square(0.0, 2.0);
    for p in pr(&m, &m, &[1e-4, 1e-2]) {
        assert_eq!((p.precision, p.recall), (1.0, 1.0));
        assert!(p.precision_defined);
    }
}

#[test]
fn half_result_recovers_half_the_area() {
    let gt = square(0.0, 1.0);
    let half = square(0.0, 0.5);
    for p in pr(&half, &gt, &[0.005, 0.02]) {
        let want = 0.5 + p.tau;
        assert!((p.recall - want).abs() < 0.02, "{} vs {want}", p.recall);
        assert_eq!(p.precision, 1.0);
    }
}

#[test]
fn offset_surface_switches_at_its_distance() {
    let gt = square(0.0, 1.0);
    let tau = 0.01;
    let lifted = gt.transformed(|p| p + Vec3::new(0.0, 0.0, 2.0 * tau));
    let pts = pr(&lifted, &gt, &[tau, 3.0 * tau]);
    assert_eq!((pts[0].precision, pts[0].recall), (0.0, 0.0));
    assert_eq!((pts[1].precision, pts[1].recall), (1.0, 1.0));
}

#[test]
fn shifted_squares_overlap_analytically() {
    // [0,1]x[0,1] against [0.5,1.5]x[0,1]: a point is within tau of the
    // other square on a strip of width 0.5 + tau.
    let a = square(0.0, 1.0);
    let b = square(0.5, 1.0);
    let ab = pr(&a, &b, &[0.01, 0.05]);
    let ba = pr(&b, &a, &[0.01, 0.05]);
    for (x, y) in ab.iter().zip(&ba) {
        let want = 0.5 + x.tau;
        for v in [x.precision, x.recall, y.precision, y.recall] {
            assert!((v - want).abs() < 0.02, "{v} vs {want}");
        }
        assert!((x.precision - y.recall).abs() < 0.02);
    }
}

#[test]
fn concentric_spheres_switch_at_the_gap() {
    let inner = icosphere(1.0, 4);
    let outer = icosphere(1.05, 4);
    let pts = pr(&outer, &inner, &[0.04, 0.06]);
    assert!(pts[0].precision < 1e-3 && pts[0].recall < 1e-3);
    assert!(pts[1].precision > 0.999 && pts[1].recall > 0.999);
}

#[test]
fn empty_result_has_flagged_precision() {
    let gt = square(0.0, 1.0);
    let pts = pr_curve(&[], &gt, &[0.01], Stage::Cleaned, &params()).unwrap();
    assert_eq!(pts[0].precision, 1.0);
    assert!(!pts[0].precision_defined);
    assert_eq!(pts[0].recall, 0.0);
    assert!(pr_curve(
        std::slice::from_ref(&gt),
        &TriMesh::default(),
        &[0.01],
        Stage::Formed,
        &params()
    )
    .is_err());
}

#[test]
fn bare_obj_target_counts_every_face() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("target.obj");
    let m = square(0.0, 1.0);
    std::fs::write(&path, m.to_obj()).unwrap();
    let t = EvalTarget::load(&path).unwrap();
    assert_eq!(t.full.faces, t.occluding.faces);
    assert!((t.diameter() - 2f64.sqrt()).abs() < 1e-12);
    let csv = pr_csv(&pr(&m, &m, &[0.01]));
    assert_eq!(csv.lines().next(), Some("stage,tau,precision,recall"));
    assert_eq!(csv.lines().count(), 2);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn pr_is_monotone_in_tau(dx in -0.3f64..0.3, dz in -0.2f64..0.2, r in 0.5f64..1.5) {
        let gt = icosphere(1.0, 2);
        let res = icosphere(r, 2).transformed(|p| Point3::new(p.x + dx, p.y, p.z + dz));
        let taus = [0.01, 0.02, 0.05, 0.1, 0.2, 0.4];
        let p = EvalParams { min_samples: 2000, max_samples: 4000, ..Default::default() };
        let pts = pr_curve(&[res], &gt, &taus, Stage::Formed, &p).unwrap();
        for w in pts.windows(2) {
            prop_assert!(w[1].precision >= w[0].precision);
            prop_assert!(w[1].recall >= w[0].recall);
        }
    }
}
