use crate::curve_graph::CurveFragment;
use crate::geom::angle_between;

/// Circumscribed-circle curvature `2 sin(theta/2) / l` at each interior sample.
///
/// `theta` is the turning angle and `l` the mean of the two adjacent segment
/// lengths. Open fragments yield `n - 2` values (for samples `1..n-1`); closed
/// fragments yield `n` values, one per sample.
pub fn discrete_curvature(fragment: &CurveFragment) -> Vec<f64> {
    let pts = &fragment.points;
    let n = pts.len();
    if n < 3 {
        return Vec::new();
    }
    let at = |prev: usize, i: usize, next: usize| {
        let a = pts[i] - pts[prev];
        let b = pts[next] - pts[i];
        let ell = 0.5 * (a.norm() + b.norm());
        if ell <= 0.0 {
            return 0.0;
        }
        let theta = angle_between(&a, &b);
        2.0 * (0.5 * theta).sin() / ell
    };
    if fragment.closed {
        (0..n).map(|i| at((i + n - 1) % n, i, (i + 1) % n)).collect()
    } else {
        (1..n - 1).map(|i| at(i - 1, i, i + 1)).collect()
    }
}

/// Sample indices where `fragment` should be split.
///
/// A sample qualifies when its curvature exceeds `kappa_break` and is a local
/// maximum (`>=` the previous sample, `>` the next, so plateaus split once).
/// Samples adjacent to an endpoint never qualify, which makes splitting idempotent.
pub fn corner_indices(fragment: &CurveFragment, kappa_break: f64) -> Vec<usize> {
    let kappa = discrete_curvature(fragment);
    let n = fragment.points.len();
    if fragment.closed {
        if n < 3 {
            return Vec::new();
        }
        (0..n)
            .filter(|&i| {
                let k = kappa[i];
                k > kappa_break && k >= kappa[(i + n - 1) % n] && k > kappa[(i + 1) % n]
            })
            .collect()
    } else {
        // kappa[j] belongs to sample j + 1.
        (2..n.saturating_sub(2))
            .filter(|&i| {
                let k = kappa[i - 1];
                k > kappa_break && k >= kappa[i - 2] && k > kappa[i]
            })
            .collect()
    }
}

/// Splits a fragment at its corners. Children share the split sample and keep the parent's id;
/// the caller assigns fresh ids. Closed fragments open up at their corners.
pub fn break_at_corners(fragment: &CurveFragment, kappa_break: f64) -> Vec<CurveFragment> {
    let cuts = corner_indices(fragment, kappa_break);
    if cuts.is_empty() {
        return vec![fragment.clone()];
    }
    let pts = &fragment.points;
    let n = pts.len();
    let mut out = Vec::with_capacity(cuts.len() + 1);
    if fragment.closed {
        for (k, &start) in cuts.iter().enumerate() {
            let end = cuts[(k + 1) % cuts.len()];
            let mut piece = Vec::new();
            let mut i = start;
            loop {
                piece.push(pts[i]);
                if piece.len() > 1 && i == end {
                    break;
                }
                i = (i + 1) % n;
            }
            out.push(CurveFragment::new(fragment.id, piece, false));
        }
    } else {
        let mut start = 0;
        for &c in cuts.iter().chain(std::iter::once(&(n - 1))) {
            out.push(CurveFragment::new(fragment.id, pts[start..=c].to_vec(), false));
            start = c;
        }
    }
    out
}
