#![allow(dead_code)]

use std::f64::consts::PI;

use curveloft::curve_graph::{CameraView, CurveFragment, EdgeElement};
use curveloft::geom::{orientation_difference, Point2, Point3, Vec3};
use curveloft::hypothesis::SurfaceHypothesis;
use curveloft::loft::{loft_pair, LoftParams, Pairing};
use curveloft::mesh::{grid, QuadMesh};
use curveloft::occlusion::{EdgeMatch, PhiWeighting};
use nalgebra::{DMatrix, DVector, Rotation3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn seg(id: u64, a: Point3, b: Point3, n: usize) -> CurveFragment {
    CurveFragment::new(
        id,
        (0..n).map(|i| a + (b - a) * (i as f64 / (n - 1) as f64)).collect(),
        false,
    )
}

pub fn p(x: f64, y: f64, z: f64) -> Point3 {
    Point3::new(x, y, z)
}

pub fn random_vec(rng: &mut ChaCha8Rng, r: f64) -> Vec3 {
    Vec3::new(
        rng.random_range(-r..r),
        rng.random_range(-r..r),
        rng.random_range(-r..r),
    )
}

pub fn random_point(rng: &mut ChaCha8Rng, r: f64) -> Point3 {
    Point3::from(random_vec(rng, r))
}

pub fn random_scene(seed: u64) -> (Vec<SurfaceHypothesis>, Vec<CurveFragment>, Vec<CameraView>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut hyps = Vec::new();
    while hyps.len() < 4 {
        let a = random_point(&mut rng, 1.0);
        let b = a + random_vec(&mut rng, 0.8);
        let off = random_vec(&mut rng, 0.6);
        let lift = random_vec(&mut rng, 0.1);
        let r1 = seg(100, a, b, 9);
        let r2 = seg(101, a + off, b + off + lift, 9);
        let coarse = LoftParams {
            grid_step: 0.2,
            subdiv_levels: 1,
            ..Default::default()
        };
        if let Ok(r) = loft_pair(&r1, &r2, Pairing::Parallel, &coarse) {
            let id = hyps.len() as u64;
            hyps.push(SurfaceHypothesis::new(
                id,
                vec![100 + 2 * id, 101 + 2 * id],
                Pairing::Parallel,
                r,
            ));
        }
    }
    let curves = (0..3)
        .map(|i| {
            let pts = (0..10).map(|_| random_point(&mut rng, 1.5)).collect();
            CurveFragment::new(i, pts, false)
        })
        .collect();
    let views = (0..2)
        .map(|i| {
            let dir = random_vec(&mut rng, 1.0).normalize();
            CameraView::look_at(i, Point3::from(dir * 5.0), p(0.0, 0.0, 0.0), Vec3::z(), 200.0, 320, 240).unwrap()
        })
        .collect();
    (hyps, curves, views)
}

pub fn matcher() -> EdgeMatch {
    EdgeMatch {
        tau_loc: 2.0,
        tau_theta: 0.3,
        weighting: PhiWeighting::Count,
    }
}

/// Riemann sum of the matching-edge count along the straight polyline `a -> b`
/// over pixel arclength `[s0, s1]`, scanning every edge at every step.
pub fn brute_support(a: Point2, b: Point2, edges: &[EdgeElement], (s0, s1): (f64, f64), m: &EdgeMatch) -> f64 {
    let dir = (b - a).normalize();
    let theta = dir.y.atan2(dir.x);
    let steps = ((s1 - s0) / 0.005).ceil() as usize;
    let h = (s1 - s0) / steps as f64;
    let mut total = 0.0;
    for k in 0..steps {
        let q = a + dir * (s0 + h * (k as f64 + 0.5));
        let count = edges
            .iter()
            .filter(|e| {
                (e.position - q).norm() <= m.tau_loc && orientation_difference(e.orientation, theta) < m.tau_theta
            })
            .count();
        total += count as f64 * h;
    }
    total
}

/// Independent dense construction of the bi-Laplacian map on free vertices.
pub fn dense_oracle(mesh: &QuadMesh) -> Vec<Point3> {
    let n = mesh.vertices.len();
    let mut nbrs = vec![std::collections::BTreeSet::new(); n];
    let mut edge_count = std::collections::HashMap::new();
    for f in &mesh.faces {
        for k in 0..4 {
            let (a, b) = (f[k], f[(k + 1) % 4]);
            nbrs[a].insert(b);
            nbrs[b].insert(a);
            *edge_count.entry((a.min(b), a.max(b))).or_insert(0) += 1;
        }
    }
    let free: Vec<usize> = (0..n).filter(|&v| !mesh.boundary_tags[v]).collect();
    let col: std::collections::HashMap<usize, usize> = free.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let m = free.len();
    let mut out = mesh.vertices.clone();
    let chain = |v: usize| -> Vec<usize> {
        nbrs[v]
            .iter()
            .copied()
            .filter(|&w| edge_count[&(v.min(w), v.max(w))] == 1)
            .collect()
    };
    // Fixed vertices on straight boundary with one free neighbour copy that neighbour's Laplacian.
    let mirror_of = |v: usize| -> Option<usize> {
        let c = chain(v);
        let free_nbrs: Vec<usize> = nbrs[v].iter().copied().filter(|w| col.contains_key(w)).collect();
        if c.len() != 2 || free_nbrs.len() != 1 {
            return None;
        }
        let d1 = mesh.vertices[v] - mesh.vertices[c[0]];
        let d2 = mesh.vertices[c[1]] - mesh.vertices[v];
        (d1.cross(&d2).norm() <= 1e-9 * d1.norm() * d2.norm() && d1.dot(&d2) > 0.0).then_some(free_nbrs[0])
    };
    let anchored =
        (0..n).any(|v| !col.contains_key(&v) && mirror_of(v).is_none() && nbrs[v].iter().any(|w| col.contains_key(w)));
    for k in 0..3 {
        // Laplacian at every vertex as an affine function of the free coordinates: (coeffs, constant).
        let free_lap = |v: usize| -> (DVector<f64>, f64) {
            let mut c = DVector::zeros(m);
            let d = nbrs[v].len() as f64;
            let mut constant = 0.0;
            for &w in &nbrs[v] {
                match col.get(&w) {
                    Some(&j) => c[j] += 1.0 / d,
                    None => constant += mesh.vertices[w][k] / d,
                }
            }
            c[col[&v]] -= 1.0;
            (c, constant)
        };
        let lap = |v: usize| -> (DVector<f64>, f64) {
            if col.contains_key(&v) {
                return free_lap(v);
            }
            if anchored {
                if let Some(w) = mirror_of(v) {
                    return free_lap(w);
                }
            }
            let c = chain(v);
            if c.len() != 2 {
                return (DVector::zeros(m), 0.0);
            }
            let others = (nbrs[v].len() - 2) as f64;
            let val =
                (mesh.vertices[c[0]][k] + mesh.vertices[c[1]][k] - 2.0 * mesh.vertices[v][k]) / (2.0 + 2.0 * others);
            (DVector::zeros(m), val)
        };
        let mut a = DMatrix::zeros(m, m);
        let mut rhs = DVector::zeros(m);
        for (r, &v) in free.iter().enumerate() {
            let d = nbrs[v].len() as f64;
            let (cv, kv) = lap(v);
            let mut row = -cv;
            let mut constant = -kv;
            for &w in &nbrs[v] {
                let (cw, kw) = lap(w);
                row += cw / d;
                constant += kw / d;
            }
            a.set_row(r, &row.transpose());
            rhs[r] = -constant;
        }
        // Least squares by QR.
        let qr = a.clone().qr();
        let qtb = qr.q().transpose() * &rhs;
        let x = qr.r().solve_upper_triangular(&qtb).expect("full rank");
        for (i, &v) in free.iter().enumerate() {
            out[v][k] = x[i];
        }
    }
    out
}

pub fn random_rails(rng: &mut ChaCha8Rng) -> (CurveFragment, CurveFragment) {
    let len = rng.random_range(0.5..2.0);
    let gap = rng.random_range(0.2..1.0);
    let bow = rng.random_range(-0.3..0.3);
    let tilt = rng.random_range(-0.3..0.3);
    let n = 25;
    let a: Vec<Point3> = (0..n)
        .map(|i| {
            let t = i as f64 / (n - 1) as f64;
            Point3::new(len * t, 0.0, bow * (PI * t).sin())
        })
        .collect();
    let b: Vec<Point3> = (0..n)
        .map(|i| {
            let t = i as f64 / (n - 1) as f64;
            Point3::new(len * t, gap, tilt * t + bow * 0.5 * (PI * t).sin())
        })
        .collect();
    let rot = Rotation3::from_euler_angles(
        rng.random_range(0.0..PI),
        rng.random_range(0.0..PI),
        rng.random_range(0.0..PI),
    );
    let shift = Vector3::new(
        rng.random_range(-5.0..5.0),
        rng.random_range(-5.0..5.0),
        rng.random_range(-5.0..5.0),
    );
    let place = |pts: Vec<Point3>| pts.into_iter().map(|p| rot * p + shift).collect::<Vec<_>>();
    let mut b = place(b);
    if rng.random_bool(0.5) {
        b.reverse();
    }
    (CurveFragment::new(0, place(a), false), CurveFragment::new(1, b, false))
}

pub fn random_quad_mesh(rng: &mut ChaCha8Rng) -> QuadMesh {
    let nx = rng.random_range(1..5);
    let ny = rng.random_range(1..5);
    let mut g = grid(nx, ny, 1.0, 1.0);
    for v in &mut g.vertices {
        v.z = rng.random_range(-0.2..0.2);
    }
    g
}
