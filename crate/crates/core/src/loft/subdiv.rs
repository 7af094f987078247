use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::geom::{Point3, Vec3};
use crate::mesh::{edge_faces, QuadMesh};

/// One Catmull-Clark step.
///
/// Interior rules are the standard ones. Boundary edges split at their
/// midpoint and boundary vertices move to `(p + 6v + q) / 8`, so the boundary
/// converges to the cubic B-spline of the boundary polygon. Boundary vertices
/// belonging to a single face are corners and stay put.
pub fn subdivide_once(mesh: &QuadMesh) -> Result<QuadMesh> {
    mesh.validate()?;
    let nv = mesh.vertices.len();
    let ef = edge_faces(&mesh.faces);
    let edge_index: BTreeMap<(usize, usize), usize> = ef.keys().enumerate().map(|(i, &e)| (e, i)).collect();
    let ne = ef.len();

    let face_points: Vec<Point3> = mesh
        .faces
        .iter()
        .map(|f| Point3::from(f.iter().map(|&i| mesh.vertices[i].coords).sum::<Vec3>() / 4.0))
        .collect();

    let mut edge_points = Vec::with_capacity(ne);
    let mut edge_tags = Vec::with_capacity(ne);
    let mut boundary_nbrs: Vec<Vec<usize>> = vec![Vec::new(); nv];
    let mut vertex_edges: Vec<Vec<(usize, usize)>> = vec![Vec::new(); nv];
    let mut vertex_faces: Vec<Vec<usize>> = vec![Vec::new(); nv];
    for (fi, f) in mesh.faces.iter().enumerate() {
        for &v in f {
            vertex_faces[v].push(fi);
        }
    }
    for (&(a, b), fs) in &ef {
        let mid = nalgebra::center(&mesh.vertices[a], &mesh.vertices[b]);
        vertex_edges[a].push((a, b));
        vertex_edges[b].push((a, b));
        if fs.len() == 1 {
            edge_points.push(mid);
            edge_tags.push(true);
            boundary_nbrs[a].push(b);
            boundary_nbrs[b].push(a);
        } else {
            let sum = mesh.vertices[a].coords
                + mesh.vertices[b].coords
                + face_points[fs[0]].coords
                + face_points[fs[1]].coords;
            edge_points.push(Point3::from(sum / 4.0));
            edge_tags.push(false);
        }
    }

    let mut vertices = Vec::with_capacity(nv + ne + mesh.faces.len());
    for v in 0..nv {
        let p = mesh.vertices[v];
        let moved = if vertex_faces[v].is_empty() {
            p
        } else if boundary_nbrs[v].is_empty() {
            let n = vertex_edges[v].len() as f64;
            let q = vertex_faces[v].iter().map(|&f| face_points[f].coords).sum::<Vec3>() / vertex_faces[v].len() as f64;
            let r = vertex_edges[v]
                .iter()
                .map(|&(a, b)| (mesh.vertices[a].coords + mesh.vertices[b].coords) * 0.5)
                .sum::<Vec3>()
                / n;
            Point3::from((q + 2.0 * r + (n - 3.0) * p.coords) / n)
        } else if boundary_nbrs[v].len() == 2 && vertex_faces[v].len() > 1 {
            let (l, r) = (mesh.vertices[boundary_nbrs[v][0]], mesh.vertices[boundary_nbrs[v][1]]);
            Point3::from((l.coords + 6.0 * p.coords + r.coords) / 8.0)
        } else {
            p
        };
        vertices.push(moved);
    }
    vertices.extend(edge_points);
    vertices.extend(face_points.iter().copied());

    let mut tags = mesh.boundary_tags.clone();
    tags.extend(edge_tags);
    tags.extend(std::iter::repeat_n(false, mesh.faces.len()));

    let e = |a: usize, b: usize| nv + edge_index[&crate::mesh::edge_key(a, b)];
    let mut faces = Vec::with_capacity(mesh.faces.len() * 4);
    for (fi, f) in mesh.faces.iter().enumerate() {
        let fp = nv + ne + fi;
        for k in 0..4 {
            let (prev, cur, next) = (f[(k + 3) % 4], f[k], f[(k + 1) % 4]);
            faces.push([cur, e(cur, next), fp, e(prev, cur)]);
        }
    }
    Ok(QuadMesh {
        vertices,
        faces,
        boundary_tags: tags,
    })
}

/// Applies `levels` Catmull-Clark steps.
pub fn subdivide(mesh: &QuadMesh, levels: usize) -> Result<QuadMesh> {
    if levels > 4 {
        return Err(Error::InvalidParams(format!(
            "subdivision levels must be at most 4, got {levels}"
        )));
    }
    let mut out = mesh.clone();
    for _ in 0..levels {
        out = subdivide_once(&out)?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{cube, grid};

    #[test]
    fn single_quad_splits_into_four() {
        let g = grid(1, 1, 1.0, 1.0);
        let s = subdivide(&g, 1).unwrap();
        assert_eq!(s.faces.len(), 4);
        assert_eq!(s.vertices.len(), 9);
        assert!(s.vertices.iter().all(|v| v.z == 0.0));
        // Corners stay, the centre is the face centroid.
        assert_eq!(s.vertices[0], g.vertices[0]);
        assert!(s
            .vertices
            .iter()
            .any(|v| (v - Point3::new(0.5, 0.5, 0.0)).norm() < 1e-15));
    }

    #[test]
    fn cube_vertex_rule() {
        // Known first-level position of a cube corner: (Q + 2R + (n-3)S)/n with n = 3.
        let c = cube(1.0);
        let s = subdivide_once(&c).unwrap();
        let expected = 5.0 / 9.0;
        for v in &s.vertices[..8] {
            for k in 0..3 {
                assert!((v[k].abs() - expected).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn boundary_tags_follow_boundary() {
        let g = grid(3, 2, 1.0, 1.0);
        let s = subdivide_once(&g).unwrap();
        let ref_tags = crate::mesh::topological_boundary(s.vertices.len(), &s.faces);
        assert_eq!(s.boundary_tags, ref_tags);
    }
}
