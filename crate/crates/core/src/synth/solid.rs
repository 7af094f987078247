use std::collections::BTreeMap;

use crate::geom::{Point3, Vec3};
use crate::mesh::{edge_key, TriMesh};

/// Polyhedral scene: convex polygons sharing vertex indices, each labelled
/// with the ground-truth face it belongs to.
#[derive(Clone, Debug, Default)]
pub struct Solid {
    pub vertices: Vec<Point3>,
    pub polygons: Vec<Vec<usize>>,
    pub labels: Vec<usize>,
    pub face_names: Vec<String>,
}

/// A straight run of feature edges between two corners.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureChain {
    pub vertices: Vec<usize>,
    pub faces: Vec<usize>,
}

const FEATURE_ANGLE: f64 = std::f64::consts::PI / 6.0;

impl Solid {
    fn add_vertex(&mut self, p: Point3) -> usize {
        self.vertices.push(p);
        self.vertices.len() - 1
    }

    fn new_face(&mut self, name: &str) -> usize {
        self.face_names.push(name.to_string());
        self.face_names.len() - 1
    }

    fn add_polygon(&mut self, poly: Vec<usize>, face: usize) {
        self.polygons.push(poly);
        self.labels.push(face);
    }

    /// Axis-aligned box, one face per side.
    pub fn add_box(&mut self, name: &str, lo: Point3, hi: Point3) {
        let v: Vec<usize> = (0..8)
            .map(|i| {
                let x = if i & 1 == 0 { lo.x } else { hi.x };
                let y = if i & 2 == 0 { lo.y } else { hi.y };
                let z = if i & 4 == 0 { lo.z } else { hi.z };
                self.add_vertex(Point3::new(x, y, z))
            })
            .collect();
        let sides: [(&str, [usize; 4]); 6] = [
            ("bottom", [0, 2, 3, 1]),
            ("top", [4, 5, 7, 6]),
            ("front", [0, 1, 5, 4]),
            ("back", [2, 6, 7, 3]),
            ("left", [0, 4, 6, 2]),
            ("right", [1, 3, 7, 5]),
        ];
        for (side, q) in sides {
            let f = self.new_face(&format!("{name}.{side}"));
            self.add_polygon(q.iter().map(|&k| v[k]).collect(), f);
        }
    }

    /// Box body with a gable roof whose ridge runs along x.
    pub fn add_gabled_house(&mut self, name: &str, lo: Point3, hi: Point3, ridge_z: f64) {
        let ym = 0.5 * (lo.y + hi.y);
        let p = |x: f64, y: f64, z: f64| Point3::new(x, y, z);
        let b = [
            p(lo.x, lo.y, lo.z),
            p(hi.x, lo.y, lo.z),
            p(hi.x, hi.y, lo.z),
            p(lo.x, hi.y, lo.z),
            p(lo.x, lo.y, hi.z),
            p(hi.x, lo.y, hi.z),
            p(hi.x, hi.y, hi.z),
            p(lo.x, hi.y, hi.z),
            p(lo.x, ym, ridge_z),
            p(hi.x, ym, ridge_z),
        ];
        let v: Vec<usize> = b.iter().map(|&q| self.add_vertex(q)).collect();
        let polys: [(&str, Vec<usize>); 7] = [
            ("floor", vec![0, 3, 2, 1]),
            ("front", vec![0, 1, 5, 4]),
            ("back", vec![2, 3, 7, 6]),
            ("gable_left", vec![0, 4, 8, 7, 3]),
            ("gable_right", vec![1, 2, 6, 9, 5]),
            ("roof_front", vec![4, 5, 9, 8]),
            ("roof_back", vec![6, 7, 8, 9]),
        ];
        for (side, q) in polys {
            let f = self.new_face(&format!("{name}.{side}"));
            self.add_polygon(q.iter().map(|&k| v[k]).collect(), f);
        }
    }

    /// L-shaped chair (back column plus cantilevered seat) extruded along x
    /// from `x0` over `width`, with its back at `y0` and the seat facing +y
    /// (or -y when `flip`).
    pub fn add_chair(&mut self, name: &str, x0: f64, width: f64, y0: f64, flip: bool) {
        // Profile (y, z) in boundary order; indices 8 and 9 split the back face.
        let prof = [
            (0.0, 0.0),
            (0.08, 0.0),
            (0.08, 0.40),
            (0.55, 0.40),
            (0.55, 0.48),
            (0.08, 0.48),
            (0.08, 1.0),
            (0.0, 1.0),
            (0.0, 0.48),
            (0.0, 0.40),
        ];
        let sy = if flip { -1.0 } else { 1.0 };
        let mut side = [[0usize; 10]; 2];
        for (s, x) in [x0, x0 + width].into_iter().enumerate() {
            for (k, &(y, z)) in prof.iter().enumerate() {
                side[s][k] = self.add_vertex(Point3::new(x, y0 + sy * y, z));
            }
        }
        let pieces: [&[usize]; 4] = [&[0, 1, 2, 9], &[9, 2, 5, 8], &[2, 3, 4, 5], &[8, 5, 6, 7]];
        for (s, label) in [(0usize, "side_a"), (1, "side_b")] {
            let f = self.new_face(&format!("{name}.{label}"));
            for piece in pieces {
                let mut poly: Vec<usize> = piece.iter().map(|&k| side[s][k]).collect();
                if (s == 1) != flip {
                    poly.reverse();
                }
                self.add_polygon(poly, f);
            }
        }
        // Band faces; the back (profile edges 7-8, 8-9, 9-0) is one face in three strips.
        let band_names = [
            "under_back",
            "seat_under",
            "seat_front",
            "seat_top",
            "back_front",
            "top",
            "back",
        ];
        let band_edges: [&[(usize, usize)]; 7] = [
            &[(0, 1)],
            &[(2, 3)],
            &[(3, 4)],
            &[(4, 5)],
            &[(1, 2), (5, 6)],
            &[(6, 7)],
            &[(7, 8), (8, 9), (9, 0)],
        ];
        for (nm, edges) in band_names.iter().zip(band_edges) {
            let f = self.new_face(&format!("{name}.{nm}"));
            for &(a, b) in edges {
                let mut poly = vec![side[0][a], side[0][b], side[1][b], side[1][a]];
                if flip {
                    poly.reverse();
                }
                self.add_polygon(poly, f);
            }
        }
    }

    fn normal(&self, poly: &[usize]) -> Vec3 {
        // Newell's method.
        let mut n = Vec3::zeros();
        for k in 0..poly.len() {
            let a = self.vertices[poly[k]];
            let b = self.vertices[poly[(k + 1) % poly.len()]];
            n += Vec3::new(
                (a.y - b.y) * (a.z + b.z),
                (a.z - b.z) * (a.x + b.x),
                (a.x - b.x) * (a.y + b.y),
            );
        }
        n.normalize()
    }

    /// Fan triangulation of every polygon, with the face label of each triangle.
    pub fn triangulate(&self) -> (TriMesh, Vec<usize>) {
        let mut mesh = TriMesh {
            vertices: self.vertices.clone(),
            faces: Vec::new(),
        };
        let mut labels = Vec::new();
        for (poly, &l) in self.polygons.iter().zip(&self.labels) {
            for k in 1..poly.len() - 1 {
                mesh.faces.push([poly[0], poly[k], poly[k + 1]]);
                labels.push(l);
            }
        }
        (mesh, labels)
    }

    /// Feature edges (dihedral above 30 degrees, or open) grouped into
    /// straight chains, in a deterministic order.
    pub fn feature_chains(&self) -> Vec<FeatureChain> {
        let mut adj: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
        for (pi, poly) in self.polygons.iter().enumerate() {
            for k in 0..poly.len() {
                adj.entry(edge_key(poly[k], poly[(k + 1) % poly.len()]))
                    .or_default()
                    .push(pi);
            }
        }
        let normals: Vec<Vec3> = self.polygons.iter().map(|p| self.normal(p)).collect();
        let mut feature: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
        for (e, ps) in &adj {
            let sharp = ps.len() == 1 || ps.len() > 2 || normals[ps[0]].angle(&normals[ps[1]]) > FEATURE_ANGLE;
            if sharp {
                let mut faces: Vec<usize> = ps.iter().map(|&p| self.labels[p]).collect();
                faces.sort_unstable();
                faces.dedup();
                feature.insert(*e, faces);
            }
        }
        let mut incident: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for &(a, b) in feature.keys() {
            incident.entry(a).or_default().push(b);
            incident.entry(b).or_default().push(a);
        }
        // A vertex continues a chain when it has exactly two collinear feature edges.
        let passes = |v: usize| -> bool {
            let n = &incident[&v];
            if n.len() != 2 {
                return false;
            }
            let d1 = self.vertices[n[0]] - self.vertices[v];
            let d2 = self.vertices[n[1]] - self.vertices[v];
            d1.normalize().dot(&d2.normalize()) < -1.0 + 1e-9
        };
        let mut used = std::collections::BTreeSet::new();
        let mut chains = Vec::new();
        for &(a, b) in feature.keys() {
            if used.contains(&(a, b)) {
                continue;
            }
            let mut verts = vec![a, b];
            used.insert((a, b));
            for dir in 0..2 {
                loop {
                    let (end, prev) = if dir == 0 {
                        (verts[verts.len() - 1], verts[verts.len() - 2])
                    } else {
                        (verts[0], verts[1])
                    };
                    if !passes(end) {
                        break;
                    }
                    let next = *incident[&end].iter().find(|&&n| n != prev).unwrap();
                    let e = edge_key(end, next);
                    if !used.insert(e) {
                        break;
                    }
                    if dir == 0 {
                        verts.push(next);
                    } else {
                        verts.insert(0, next);
                    }
                }
            }
            let mut faces: Vec<usize> = verts
                .windows(2)
                .flat_map(|w| feature[&edge_key(w[0], w[1])].clone())
                .collect();
            faces.sort_unstable();
            faces.dedup();
            chains.push(FeatureChain { vertices: verts, faces });
        }
        chains
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn box_has_twelve_edges() {
        let mut s = Solid::default();
        s.add_box("b", Point3::origin(), Point3::new(1.0, 1.0, 1.0));
        let chains = s.feature_chains();
        assert_eq!(chains.len(), 12);
        assert!(chains.iter().all(|c| c.vertices.len() == 2 && c.faces.len() == 2));
    }

    #[test]
    fn house_has_fifteen_edges() {
        let mut s = Solid::default();
        s.add_gabled_house("h", Point3::origin(), Point3::new(2.0, 1.5, 1.2), 1.8);
        assert_eq!(s.feature_chains().len(), 15);
        assert_eq!(s.face_names.len(), 7);
    }

    #[test]
    fn chair_back_is_one_chain() {
        let mut s = Solid::default();
        s.add_chair("c", 0.0, 0.5, 0.0, false);
        let chains = s.feature_chains();
        assert_eq!(chains.len(), 24);
        assert_eq!(s.face_names.len(), 9);
        assert!(chains.iter().any(|c| c.vertices.len() == 4));
    }
}
