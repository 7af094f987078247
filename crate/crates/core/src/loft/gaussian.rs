use std::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::geom::angle_between;
use crate::mesh::{topological_boundary, QuadMesh, TriMesh};

/// Angle-deficit Gaussian curvature `(2 pi - sum of angles) / (area / 3)` at each interior vertex.
///
/// Returns `(vertex, K)` pairs. Vertices with zero barycentric area get an
/// infinite curvature.
pub fn vertex_gaussian_curvature(mesh: &TriMesh) -> Vec<(usize, f64)> {
    let n = mesh.vertices.len();
    let boundary = topological_boundary(n, &mesh.faces);
    let mut angle = vec![0.0; n];
    let mut area = vec![0.0; n];
    let mut used = vec![false; n];
    for (fi, f) in mesh.faces.iter().enumerate() {
        let a3 = mesh.face_area(fi) / 3.0;
        for k in 0..3 {
            let v = f[k];
            let p = mesh.vertices[v];
            let e1 = mesh.vertices[f[(k + 1) % 3]] - p;
            let e2 = mesh.vertices[f[(k + 2) % 3]] - p;
            angle[v] += angle_between(&e1, &e2);
            area[v] += a3;
            used[v] = true;
        }
    }
    (0..n)
        .filter(|&v| used[v] && !boundary[v])
        .map(|v| {
            let deficit = TAU - angle[v];
            let k = if area[v] > 0.0 {
                deficit / area[v]
            } else {
                f64::INFINITY
            };
            (v, k)
        })
        .collect()
}

/// Mean of `|K|` over interior vertices of a triangle mesh.
pub fn mean_abs_gaussian_curvature_tri(mesh: &TriMesh) -> Result<f64> {
    let ks = vertex_gaussian_curvature(mesh);
    if ks.is_empty() {
        return Err(Error::NoInteriorVertices);
    }
    Ok(ks.iter().map(|(_, k)| k.abs()).sum::<f64>() / ks.len() as f64)
}

/// Mean of `|K|` over interior vertices of a quad mesh, after splitting quads.
pub fn mean_abs_gaussian_curvature(mesh: &QuadMesh) -> Result<f64> {
    mean_abs_gaussian_curvature_tri(&mesh.triangulate())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{grid, icosphere};

    #[test]
    fn flat_grid_has_zero_curvature() {
        let g = grid(5, 4, 2.0, 1.0);
        assert!(mean_abs_gaussian_curvature(&g).unwrap() < 1e-9);
    }

    #[test]
    fn sphere_curvature() {
        let s = icosphere(2.0, 3);
        let k = mean_abs_gaussian_curvature_tri(&s).unwrap();
        assert!((k - 0.25).abs() / 0.25 < 0.05, "{k}");
        // A closed mesh has no boundary, so every vertex counts.
        assert_eq!(vertex_gaussian_curvature(&s).len(), s.vertices.len());
    }

    #[test]
    fn single_quad_has_no_interior() {
        let g = grid(1, 1, 1.0, 1.0);
        assert!(matches!(
            mean_abs_gaussian_curvature(&g),
            Err(Error::NoInteriorVertices)
        ));
    }
}
