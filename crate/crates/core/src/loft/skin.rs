use serde::{Deserialize, Serialize};

use super::LoftParams;
use crate::curve_graph::{CurveFragment, NODE_TOLERANCE};
use crate::error::{Error, Result};
use crate::geom::{cumulative_lengths, resample_closed, resample_open, Point3};
use crate::mesh::QuadMesh;

/// Tolerance for consecutive loop sides to meet.
pub const LOOP_TOLERANCE: f64 = 1e-9;

/// How the endpoints of two open curves are joined into a loop.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pairing {
    Parallel,
    Antiparallel,
    Closed,
}

impl Pairing {
    pub fn name(self) -> &'static str {
        match self {
            Pairing::Parallel => "parallel",
            Pairing::Antiparallel => "antiparallel",
            Pairing::Closed => "closed",
        }
    }
}

impl std::str::FromStr for Pairing {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "parallel" => Ok(Pairing::Parallel),
            "antiparallel" => Ok(Pairing::Antiparallel),
            "closed" => Ok(Pairing::Closed),
            other => Err(Error::InvalidParams(format!("unknown pairing '{other}'"))),
        }
    }
}

/// A closed boundary made of polyline sides traversed in order.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryLoop {
    pub sides: Vec<Vec<Point3>>,
}

impl BoundaryLoop {
    pub fn validate(&self) -> Result<()> {
        let k = self.sides.len();
        if k == 0 || self.sides.iter().any(|s| s.is_empty()) {
            return Err(Error::DegenerateLoop("empty side".into()));
        }
        for i in 0..k {
            let end = self.sides[i][self.sides[i].len() - 1];
            let next = self.sides[(i + 1) % k][0];
            if (end - next).norm() > LOOP_TOLERANCE {
                return Err(Error::DegenerateLoop(format!(
                    "side {i} does not meet side {}",
                    (i + 1) % k
                )));
            }
        }
        if self.polygon().len() < 3 {
            return Err(Error::DegenerateLoop("fewer than 3 distinct points".into()));
        }
        Ok(())
    }

    /// The loop as a closed polygon (shared side endpoints emitted once).
    pub fn polygon(&self) -> Vec<Point3> {
        let mut pts: Vec<Point3> = Vec::new();
        for side in &self.sides {
            for p in side {
                if pts.last().is_none_or(|q| (p - q).norm() > LOOP_TOLERANCE) {
                    pts.push(*p);
                }
            }
        }
        while pts.len() > 1 && (pts[0] - pts[pts.len() - 1]).norm() <= LOOP_TOLERANCE {
            pts.pop();
        }
        pts
    }

    pub fn perimeter(&self) -> f64 {
        let mut ring = self.polygon();
        if let Some(&first) = ring.first() {
            ring.push(first);
        }
        cumulative_lengths(&ring).last().copied().unwrap_or(0.0)
    }
}

/// Joins two open curves into a loop with straight bridges.
///
/// `Parallel` runs `c1`, bridges its end to `c2`'s end, runs `c2` backwards and
/// bridges back; `Antiparallel` bridges `c1`'s end to `c2`'s start. Bridges
/// shorter than the junction tolerance are omitted. A shared endpoint the
/// pairing does not connect gives a folded loop and is rejected.
pub fn make_loop(c1: &CurveFragment, c2: &CurveFragment, pairing: Pairing) -> Result<BoundaryLoop> {
    if c1.closed || c2.closed {
        return Err(Error::DegenerateLoop("closed fragments are lofted on their own".into()));
    }
    if pairing == Pairing::Closed {
        return Err(Error::DegenerateLoop("a pair of curves needs an open pairing".into()));
    }
    if c1.points.len() < 2 || c2.points.len() < 2 {
        return Err(Error::DegenerateLoop("curves need at least 2 points".into()));
    }
    let second: Vec<Point3> = match pairing {
        Pairing::Parallel => c2.points.iter().rev().copied().collect(),
        _ => c2.points.clone(),
    };
    let (a0, a1) = (c1.points[0], c1.points[c1.points.len() - 1]);
    let (b0, b1) = (second[0], second[second.len() - 1]);
    let near = |p: Point3, q: Point3| (p - q).norm() <= NODE_TOLERANCE;
    if near(a1, b1) || near(a0, b0) {
        return Err(Error::DegenerateLoop(format!(
            "curves {} and {} share an endpoint that the {} pairing leaves unconnected",
            c1.id,
            c2.id,
            pairing.name()
        )));
    }
    if near(a1, b0) && near(b1, a0) && c1.points.len() == 2 && second.len() == 2 {
        return Err(Error::DegenerateLoop("the two curves coincide".into()));
    }
    let mut sides = vec![c1.points.clone()];
    if !near(a1, b0) {
        sides.push(vec![a1, b0]);
    }
    let mut s2 = second;
    if near(a1, b0) {
        s2[0] = a1;
    }
    let last = s2.len() - 1;
    if near(b1, a0) {
        s2[last] = a0;
    }
    sides.push(s2);
    if !near(b1, a0) {
        sides.push(vec![b1, a0]);
    }
    let lp = BoundaryLoop { sides };
    lp.validate()?;
    Ok(lp)
}

/// Builds the quad base mesh over a loop with boundary vertices on the loop.
///
/// Four-sided loops become a structured grid between sides 0 and 2 with
/// transfinite interior; other loops are filled by rings shrinking toward the
/// centroid and closed by a fan of quads around it.
pub fn skin(lp: &BoundaryLoop, params: &LoftParams) -> Result<QuadMesh> {
    lp.validate()?;
    let polygon = lp.polygon();
    if polygon.len() < 4 && lp.sides.len() != 4 {
        return Err(Error::LoopTooShort(polygon.len()));
    }
    if lp.sides.len() == 4 {
        Ok(skin_four_sided(lp, params))
    } else {
        skin_polar(&polygon, params)
    }
}

fn length(pts: &[Point3]) -> f64 {
    cumulative_lengths(pts).last().copied().unwrap_or(0.0)
}

fn skin_four_sided(lp: &BoundaryLoop, params: &LoftParams) -> QuadMesh {
    let rail_a = &lp.sides[0];
    let rail_b: Vec<Point3> = lp.sides[2].iter().rev().copied().collect();
    let n = params.columns.unwrap_or_else(|| {
        let longest = length(rail_a).max(length(&rail_b));
        ((longest / params.grid_step).round() as usize + 1).clamp(2, params.max_columns)
    });
    let a = resample_open(rail_a, n);
    let b = resample_open(&rail_b, n);
    let rows = params.rows.unwrap_or_else(|| {
        let dist = a.iter().zip(&b).map(|(p, q)| (p - q).norm()).sum::<f64>() / n as f64;
        ((dist / params.grid_step).round() as usize).clamp(1, 32)
    });
    // Side 3 runs from rail_b's start back to rail_a's start; side 1 from rail_a's end to rail_b's end.
    let left: Vec<Point3> = resample_open(&lp.sides[3].iter().rev().copied().collect::<Vec<_>>(), rows + 1);
    let right = resample_open(&lp.sides[1], rows + 1);
    let mut vertices = Vec::with_capacity(n * (rows + 1));
    let mut tags = Vec::with_capacity(n * (rows + 1));
    for j in 0..=rows {
        let v = j as f64 / rows as f64;
        for i in 0..n {
            let u = i as f64 / (n - 1) as f64;
            let p = if j == 0 {
                a[i]
            } else if j == rows {
                b[i]
            } else if i == 0 {
                left[j]
            } else if i == n - 1 {
                right[j]
            } else {
                let ruled_v = a[i].coords * (1.0 - v) + b[i].coords * v;
                let ruled_u = left[j].coords * (1.0 - u) + right[j].coords * u;
                let bilinear = (a[0].coords * (1.0 - u) + a[n - 1].coords * u) * (1.0 - v)
                    + (b[0].coords * (1.0 - u) + b[n - 1].coords * u) * v;
                Point3::from(ruled_v + ruled_u - bilinear)
            };
            vertices.push(p);
            tags.push(j == 0 || j == rows || i == 0 || i == n - 1);
        }
    }
    let idx = |i: usize, j: usize| j * n + i;
    let mut faces = Vec::with_capacity((n - 1) * rows);
    for j in 0..rows {
        for i in 0..n - 1 {
            faces.push([idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1)]);
        }
    }
    QuadMesh {
        vertices,
        faces,
        boundary_tags: tags,
    }
}

/// Resamples a closed polygon to `m` points while keeping its sharp corners.
fn resample_ring(polygon: &[Point3], m: usize) -> Vec<Point3> {
    let k = polygon.len();
    let corner_angle = 0.5;
    let corners: Vec<usize> = (0..k)
        .filter(|&i| {
            let a = polygon[i] - polygon[(i + k - 1) % k];
            let b = polygon[(i + 1) % k] - polygon[i];
            crate::geom::angle_between(&a, &b) > corner_angle
        })
        .collect();
    if corners.len() < 2 || m < 2 * corners.len() {
        return resample_closed(polygon, m);
    }
    // Split into runs between corners and share the samples by length.
    let runs: Vec<Vec<Point3>> = (0..corners.len())
        .map(|c| {
            let (s, e) = (corners[c], corners[(c + 1) % corners.len()]);
            let mut run = vec![polygon[s]];
            let mut i = s;
            while i != e {
                i = (i + 1) % k;
                run.push(polygon[i]);
            }
            run
        })
        .collect();
    let lengths: Vec<f64> = runs.iter().map(|r| length(r)).collect();
    let total: f64 = lengths.iter().sum();
    let mut counts: Vec<usize> = lengths
        .iter()
        .map(|l| ((l / total) * m as f64).floor().max(1.0) as usize)
        .collect();
    // Hand out the remainder by largest fractional share, ties by run order.
    let mut assigned: usize = counts.iter().sum();
    let mut order: Vec<usize> = (0..runs.len()).collect();
    order.sort_by(|&x, &y| {
        let fx = lengths[x] / total * m as f64 - counts[x] as f64;
        let fy = lengths[y] / total * m as f64 - counts[y] as f64;
        fy.total_cmp(&fx).then(x.cmp(&y))
    });
    let mut k_iter = order.iter().cycle();
    while assigned < m {
        counts[*k_iter.next().unwrap()] += 1;
        assigned += 1;
    }
    while assigned > m {
        let (imax, _) = counts
            .iter()
            .enumerate()
            .max_by_key(|(i, c)| (**c, std::cmp::Reverse(*i)))
            .unwrap();
        counts[imax] -= 1;
        assigned -= 1;
    }
    let mut out = Vec::with_capacity(m);
    for (run, &c) in runs.iter().zip(&counts) {
        let pts = resample_open(run, c + 1);
        out.extend_from_slice(&pts[..c]);
    }
    out
}

fn skin_polar(polygon: &[Point3], params: &LoftParams) -> Result<QuadMesh> {
    let perimeter = {
        let mut ring = polygon.to_vec();
        ring.push(polygon[0]);
        length(&ring)
    };
    let m = params.columns.map(|c| c + c % 2).unwrap_or_else(|| {
        let half = (perimeter / (2.0 * params.grid_step)).round() as usize;
        (2 * half).clamp(8, 2 * params.max_columns)
    });
    if m < 4 {
        return Err(Error::LoopTooShort(m));
    }
    let boundary = resample_ring(polygon, m);
    let centroid = Point3::from(boundary.iter().map(|p| p.coords).sum::<nalgebra::Vector3<f64>>() / m as f64);
    let rings = params.rows.unwrap_or_else(|| {
        let radius = boundary.iter().map(|p| (p - centroid).norm()).sum::<f64>() / m as f64;
        ((radius / params.grid_step).round() as usize).clamp(2, 32)
    });
    let mut vertices = boundary.clone();
    let mut tags = vec![true; m];
    for r in 1..rings {
        let t = r as f64 / rings as f64;
        for p in &boundary {
            vertices.push(p + (centroid - p) * t);
            tags.push(false);
        }
    }
    let center = vertices.len();
    vertices.push(centroid);
    tags.push(false);
    let ring = |r: usize, i: usize| r * m + i % m;
    let mut faces = Vec::new();
    for r in 0..rings - 1 {
        for i in 0..m {
            faces.push([ring(r, i), ring(r, i + 1), ring(r + 1, i + 1), ring(r + 1, i)]);
        }
    }
    let last = rings - 1;
    for i in (0..m).step_by(2) {
        faces.push([ring(last, i), ring(last, i + 1), ring(last, i + 2), center]);
    }
    Ok(QuadMesh {
        vertices,
        faces,
        boundary_tags: tags,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seg(id: u64, a: [f64; 3], b: [f64; 3], n: usize) -> CurveFragment {
        let (a, b) = (Point3::from(a), Point3::from(b));
        CurveFragment::new(
            id,
            (0..n).map(|i| a + (b - a) * (i as f64 / (n - 1) as f64)).collect(),
            false,
        )
    }

    #[test]
    fn parallel_rails_make_rectangle() {
        let c1 = seg(0, [0.0, 0.0, 0.0], [1.0, 0.0, 0.0], 5);
        let c2 = seg(1, [0.0, 0.0, 1.0], [1.0, 0.0, 1.0], 5);
        let lp = make_loop(&c1, &c2, Pairing::Parallel).unwrap();
        assert_eq!(lp.sides.len(), 4);
        assert!((lp.perimeter() - 4.0).abs() < 1e-12);
        let bow = make_loop(&c1, &c2, Pairing::Antiparallel).unwrap();
        assert_eq!(bow.sides.len(), 4);
        assert!((bow.perimeter() - (2.0 + 2.0 * 2f64.sqrt())).abs() < 1e-12);
    }

    #[test]
    fn closed_input_rejected() {
        let c = CurveFragment::new(
            0,
            vec![Point3::origin(), Point3::new(1.0, 0.0, 0.0), Point3::new(0.0, 1.0, 0.0)],
            true,
        );
        let d = seg(1, [0.0, 0.0, 1.0], [1.0, 0.0, 1.0], 3);
        assert!(make_loop(&c, &d, Pairing::Parallel).is_err());
    }

    #[test]
    fn shared_corner_needs_matching_pairing() {
        let c1 = seg(0, [0.0, 0.0, 0.0], [1.0, 0.0, 0.0], 3);
        let c2 = seg(1, [1.0, 0.0, 0.0], [1.0, 1.0, 0.0], 3);
        let lp = make_loop(&c1, &c2, Pairing::Antiparallel).unwrap();
        assert_eq!(lp.sides.len(), 3);
        assert!(make_loop(&c1, &c2, Pairing::Parallel).is_err());
    }

    #[test]
    fn unit_square_single_quad() {
        let c1 = seg(0, [0.0, 0.0, 0.0], [1.0, 0.0, 0.0], 2);
        let c2 = seg(1, [0.0, 1.0, 0.0], [1.0, 1.0, 0.0], 2);
        let lp = make_loop(&c1, &c2, Pairing::Parallel).unwrap();
        let params = LoftParams {
            rows: Some(1),
            columns: Some(2),
            ..Default::default()
        };
        let m = skin(&lp, &params).unwrap();
        assert_eq!(m.faces.len(), 1);
        assert_eq!(m.vertices.len(), 4);
        assert!(m.boundary_tags.iter().all(|&t| t));
        let mut corners: Vec<[f64; 3]> = m.vertices.iter().map(|p| [p.x, p.y, p.z]).collect();
        corners.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(
            corners,
            vec![[0.0, 0.0, 0.0], [0.0, 1.0, 0.0], [1.0, 0.0, 0.0], [1.0, 1.0, 0.0]]
        );
    }

    #[test]
    fn polar_skin_of_square_keeps_corners() {
        let pts = vec![
            Point3::new(0.0, 0.0, 0.0),
            Point3::new(1.0, 0.0, 0.0),
            Point3::new(1.0, 1.0, 0.0),
            Point3::new(0.0, 1.0, 0.0),
        ];
        let lp = BoundaryLoop {
            sides: vec![vec![pts[0], pts[1], pts[2], pts[3], pts[0]]],
        };
        let m = skin(&lp, &LoftParams::default()).unwrap();
        m.validate().unwrap();
        for c in &pts {
            assert!(m.vertices.iter().any(|v| (v - c).norm() < 1e-12));
        }
        assert!((m.area() - 1.0).abs() < 0.05);
    }
}
