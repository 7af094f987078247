use rayon::prelude::*;

use crate::curve_graph::CurveFragment;
use crate::geom::Point3;
use crate::sparse::{solve_cg, CsrMatrix};

const SOLVER_TOL: f64 = 1e-14;

/// Penalized least-squares smoothing with a second-difference penalty.
///
/// Minimizes `sum |q_i - p_i|^2 + lambda * sum |q_{i-1} - 2 q_i + q_{i+1}|^2`.
/// Open fragments keep their endpoints; closed fragments use cyclic differences.
/// Fragments with fewer than 4 points, or `lambda <= 0`, are returned unchanged.
pub fn smooth_fragment(fragment: &CurveFragment, lambda: f64) -> CurveFragment {
    let n = fragment.points.len();
    if n < 4 || lambda <= 0.0 {
        return fragment.clone();
    }
    let (matrix, rhs, unknowns) = normal_equations(&fragment.points, fragment.closed, lambda);
    let mut out = fragment.points.clone();
    for k in 0..3 {
        let b: Vec<f64> = rhs.iter().map(|r| r[k]).collect();
        let mut x: Vec<f64> = unknowns.iter().map(|&i| fragment.points[i][k]).collect();
        // The system matrix has condition number at most 1 + 16 lambda, so CG converges quickly.
        let cap = 50 * unknowns.len() + 100;
        solve_cg(&matrix, &b, &mut x, SOLVER_TOL, cap).expect("smoothing system is positive definite");
        for (slot, &i) in unknowns.iter().enumerate() {
            out[i][k] = x[slot];
        }
    }
    CurveFragment::new(fragment.id, out, fragment.closed)
}

pub fn smooth_all(fragments: &[CurveFragment], lambda: f64) -> Vec<CurveFragment> {
    fragments.par_iter().map(|f| smooth_fragment(f, lambda)).collect()
}

/// Value of the smoothing objective for candidate points `q` against data `p`.
pub fn smoothing_objective(p: &[Point3], q: &[Point3], closed: bool, lambda: f64) -> f64 {
    let n = p.len();
    let fidelity: f64 = p.iter().zip(q).map(|(a, b)| (a - b).norm_squared()).sum();
    let rows: Vec<usize> = if closed { (0..n).collect() } else { (1..n - 1).collect() };
    let smooth: f64 = rows
        .into_iter()
        .map(|i| {
            let prev = q[(i + n - 1) % n];
            let next = q[(i + 1) % n];
            (prev.coords - 2.0 * q[i].coords + next.coords).norm_squared()
        })
        .sum();
    fidelity + lambda * smooth
}

/// Normal equations over the free samples: `(I + lambda D^T D) q = p - (fixed terms)`.
fn normal_equations(points: &[Point3], closed: bool, lambda: f64) -> (CsrMatrix, Vec<[f64; 3]>, Vec<usize>) {
    let n = points.len();
    let unknowns: Vec<usize> = if closed { (0..n).collect() } else { (1..n - 1).collect() };
    let slot = |i: usize| -> Option<usize> {
        if closed {
            Some(i)
        } else if i == 0 || i == n - 1 {
            None
        } else {
            Some(i - 1)
        }
    };
    let mut triplets = Vec::with_capacity(unknowns.len() * 6);
    let mut rhs: Vec<[f64; 3]> = unknowns.iter().map(|&i| points[i].coords.into()).collect();
    for s in 0..unknowns.len() {
        triplets.push((s, s, 1.0));
    }
    let rows: Vec<usize> = if closed { (0..n).collect() } else { (1..n - 1).collect() };
    for i in rows {
        let idx = [(i + n - 1) % n, i, (i + 1) % n];
        let coef = [1.0, -2.0, 1.0];
        for a in 0..3 {
            let Some(sa) = slot(idx[a]) else { continue };
            for b in 0..3 {
                let w = lambda * coef[a] * coef[b];
                match slot(idx[b]) {
                    Some(sb) => triplets.push((sa, sb, w)),
                    None => {
                        for k in 0..3 {
                            rhs[sa][k] -= w * points[idx[b]][k];
                        }
                    }
                }
            }
        }
    }
    (
        CsrMatrix::from_triplets(unknowns.len(), unknowns.len(), triplets),
        rhs,
        unknowns,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(n: usize) -> CurveFragment {
        CurveFragment::new(
            0,
            (0..n)
                .map(|i| Point3::new(i as f64 * 0.1, 2.0 * i as f64 * 0.1, -0.5))
                .collect(),
            false,
        )
    }

    #[test]
    fn collinear_points_are_fixed() {
        let f = line(12);
        let s = smooth_fragment(&f, 25.0);
        for (a, b) in f.points.iter().zip(&s.points) {
            assert!((a - b).norm() < 1e-9);
        }
    }

    #[test]
    fn vanishing_lambda_is_identity() {
        let f = CurveFragment::new(
            1,
            (0..20)
                .map(|i| Point3::new(i as f64, (i as f64).sin(), (i * i) as f64 * 0.01))
                .collect(),
            false,
        );
        let s = smooth_fragment(&f, 1e-13);
        for (a, b) in f.points.iter().zip(&s.points) {
            assert!((a - b).norm() < 1e-9);
        }
    }

    #[test]
    fn endpoints_stay_fixed_and_count_kept() {
        let f = CurveFragment::new(
            2,
            (0..30)
                .map(|i| Point3::new(i as f64, if i % 2 == 0 { 0.3 } else { -0.3 }, 0.0))
                .collect(),
            false,
        );
        let s = smooth_fragment(&f, 10.0);
        assert_eq!(s.points.len(), f.points.len());
        assert_eq!(s.points[0], f.points[0]);
        assert_eq!(s.points[29], f.points[29]);
    }

    #[test]
    fn short_fragments_pass_through() {
        let f = CurveFragment::new(
            3,
            vec![Point3::origin(), Point3::new(1.0, 1.0, 0.0), Point3::new(2.0, 0.0, 0.0)],
            false,
        );
        assert_eq!(smooth_fragment(&f, 5.0), f);
    }
}
