use super::LoftParams;
use crate::error::Result;
use crate::geom::{Point3, Vec3};
use crate::mesh::{edge_faces, vertex_neighbors, QuadMesh};
use crate::sparse::{solve_cg, CsrMatrix};

/// How the Laplacian is prescribed at a fixed vertex.
#[derive(Clone, Copy, Debug)]
enum FixedRule {
    /// Known value from the boundary curve.
    Value(Vec3),
    /// Copies the Laplacian of its single free neighbour (straight boundary stretch).
    Mirror(usize),
}

/// Uniform umbrella operator data for a quad mesh with fixed (tagged) vertices.
struct Umbrella {
    nbrs: Vec<Vec<usize>>,
    rules: Vec<FixedRule>,
    /// Free vertex → unknown slot.
    slot: Vec<Option<usize>>,
    free: Vec<usize>,
}

/// Laplacian of a fixed vertex, reflecting its free neighbours through it.
///
/// With `p`, `q` its neighbours along the boundary and `k` other neighbours,
/// each reflected pair contributes `2b`, leaving `(p + q - 2b) / (2 + 2k)`.
/// Vertices without exactly two boundary-edge neighbours get zero.
fn boundary_laplacian(b: usize, mesh: &QuadMesh, nbrs: &[Vec<usize>], along: &[Vec<usize>]) -> Vec3 {
    let chain = &along[b];
    if chain.len() != 2 {
        return Vec3::zeros();
    }
    let k = nbrs[b].len() - 2;
    let v = mesh.vertices[b];
    (mesh.vertices[chain[0]] - v + (mesh.vertices[chain[1]] - v)) / (2.0 + 2.0 * k as f64)
}

/// Whether the boundary runs straight through `b`.
fn straight(b: usize, mesh: &QuadMesh, along: &[Vec<usize>]) -> bool {
    let chain = &along[b];
    if chain.len() != 2 {
        return false;
    }
    let v = mesh.vertices[b];
    let (d1, d2) = (v - mesh.vertices[chain[0]], mesh.vertices[chain[1]] - v);
    let (n1, n2) = (d1.norm(), d2.norm());
    n1 > 0.0 && n2 > 0.0 && d1.cross(&d2).norm() <= 1e-9 * n1 * n2 && d1.dot(&d2) > 0.0
}

impl Umbrella {
    /// Fixed vertices on curved boundary take the reflected value; on straight
    /// stretches with one free neighbour they mirror it, unless that would leave
    /// no prescribed value at all.
    fn new(mesh: &QuadMesh) -> Self {
        let n = mesh.vertices.len();
        let nbrs = vertex_neighbors(n, &mesh.faces);
        let mut along = vec![Vec::new(); n];
        for ((a, b), fs) in edge_faces(&mesh.faces) {
            if fs.len() == 1 {
                along[a].push(b);
                along[b].push(a);
            }
        }
        let mut slot = vec![None; n];
        let mut free = Vec::new();
        for v in 0..n {
            if !mesh.boundary_tags[v] && !nbrs[v].is_empty() {
                slot[v] = Some(free.len());
                free.push(v);
            }
        }
        let value = |v: usize| FixedRule::Value(boundary_laplacian(v, mesh, &nbrs, &along));
        let mut rules: Vec<FixedRule> = (0..n)
            .map(|v| {
                if slot[v].is_some() {
                    return FixedRule::Value(Vec3::zeros());
                }
                let free_nbrs: Vec<usize> = nbrs[v].iter().copied().filter(|&w| slot[w].is_some()).collect();
                if free_nbrs.len() == 1 && straight(v, mesh, &along) {
                    FixedRule::Mirror(free_nbrs[0])
                } else {
                    value(v)
                }
            })
            .collect();
        let anchored = (0..n).any(|v| {
            slot[v].is_none() && matches!(rules[v], FixedRule::Value(_)) && nbrs[v].iter().any(|&w| slot[w].is_some())
        });
        if !anchored {
            for v in 0..n {
                if slot[v].is_none() {
                    rules[v] = value(v);
                }
            }
        }
        Umbrella {
            nbrs,
            rules,
            slot,
            free,
        }
    }

    /// Umbrella Laplacian at every vertex for the given positions.
    fn laplacian(&self, pos: &[Point3]) -> Vec<Vec3> {
        let umbrella = |v: usize| {
            let nb = &self.nbrs[v];
            nb.iter().map(|&w| pos[w].coords).sum::<Vec3>() / nb.len() as f64 - pos[v].coords
        };
        (0..pos.len())
            .map(|v| {
                if self.slot[v].is_some() {
                    return umbrella(v);
                }
                match self.rules[v] {
                    FixedRule::Value(c) => c,
                    FixedRule::Mirror(w) => umbrella(w),
                }
            })
            .collect()
    }

    /// Symmetric positive definite `deg * (-L)` restricted to free vertices.
    ///
    /// With `mirror`, fixed neighbours that copy a free vertex's value act as
    /// that vertex (only ever the row's own vertex), lowering the diagonal.
    fn free_matrix(&self, mirror: bool) -> CsrMatrix {
        let mut trip = Vec::new();
        for (s, &v) in self.free.iter().enumerate() {
            trip.push((s, s, self.nbrs[v].len() as f64));
            for &w in &self.nbrs[v] {
                if let Some(t) = self.slot[w] {
                    trip.push((s, t, -1.0));
                } else if let (true, FixedRule::Mirror(m)) = (mirror, self.rules[w]) {
                    trip.push((s, self.slot[m].expect("mirror source is free"), -1.0));
                }
            }
        }
        CsrMatrix::from_triplets(self.free.len(), self.free.len(), trip)
    }

    /// Sum of prescribed Laplacian values over fixed neighbours of `v`.
    fn prescribed_sum(&self, v: usize) -> Vec3 {
        self.nbrs[v]
            .iter()
            .filter_map(|&w| match (self.slot[w], self.rules[w]) {
                (None, FixedRule::Value(c)) => Some(c),
                _ => None,
            })
            .sum()
    }
}

/// Bi-Laplacian (umbrella of umbrella) at each free vertex.
pub fn bilaplacian(mesh: &QuadMesh) -> Vec<(usize, Vec3)> {
    let op = Umbrella::new(mesh);
    let lap = op.laplacian(&mesh.vertices);
    op.free
        .iter()
        .map(|&v| {
            let nb = &op.nbrs[v];
            let mean = nb.iter().map(|&w| lap[w]).sum::<Vec3>() / nb.len() as f64;
            (v, mean - lap[v])
        })
        .collect()
}

/// Thin-plate proxy energy: sum of squared bi-Laplacian norms over free vertices.
pub fn fairness_energy(mesh: &QuadMesh) -> f64 {
    bilaplacian(mesh).iter().map(|(_, d)| d.norm_squared()).sum()
}

/// Moves the free vertices so the bi-Laplacian vanishes at each of them.
///
/// The square system factors into two problems for the uniform Laplacian:
/// first the Laplacian field `y` on free vertices with `L y = 0`, then
/// positions with `L x = y`. Both are solved by conjugate gradients on the
/// symmetric degree-scaled form.
pub fn fair(mesh: &QuadMesh, params: &LoftParams) -> Result<QuadMesh> {
    let op = Umbrella::new(mesh);
    if op.free.is_empty() {
        return Ok(mesh.clone());
    }
    let m = op.free.len();
    // Work relative to the fixed vertices' centroid so accuracy does not depend on placement.
    let fixed: Vec<usize> = (0..mesh.vertices.len()).filter(|&v| op.slot[v].is_none()).collect();
    let origin = if fixed.is_empty() {
        Vec3::zeros()
    } else {
        fixed.iter().map(|&v| mesh.vertices[v].coords).sum::<Vec3>() / fixed.len() as f64
    };
    let local: Vec<Vec3> = mesh.vertices.iter().map(|p| p.coords - origin).collect();
    // deg * y_v - sum_free y_w - sum_mirror y_v = sum_fixed c_w.
    let a_lap = op.free_matrix(true);
    let mut lap_free = vec![Vec3::zeros(); m];
    let prescribed: Vec<Vec3> = op.free.iter().map(|&v| op.prescribed_sum(v)).collect();
    for k in 0..3 {
        let rhs: Vec<f64> = prescribed.iter().map(|c| c[k]).collect();
        let mut y = vec![0.0; m];
        solve_cg(&a_lap, &rhs, &mut y, params.fairing_tol, params.fairing_max_iters)?;
        for s in 0..m {
            lap_free[s][k] = y[s];
        }
    }
    // deg * x_v - sum_free x_w = sum_fixed x_w - deg * y_v.
    let a_pos = op.free_matrix(false);
    let mut out = mesh.clone();
    for k in 0..3 {
        let rhs: Vec<f64> = op
            .free
            .iter()
            .enumerate()
            .map(|(s, &v)| {
                let fixed: f64 = op.nbrs[v]
                    .iter()
                    .filter(|&&w| op.slot[w].is_none())
                    .map(|&w| local[w][k])
                    .sum();
                fixed - op.nbrs[v].len() as f64 * lap_free[s][k]
            })
            .collect();
        let mut x: Vec<f64> = op.free.iter().map(|&v| local[v][k]).collect();
        solve_cg(&a_pos, &rhs, &mut x, params.fairing_tol, params.fairing_max_iters)?;
        for (s, &v) in op.free.iter().enumerate() {
            out.vertices[v][k] = x[s] + origin[k];
        }
    }
    Ok(out)
}

/// Free vertices of `mesh` in ascending order (the unknowns of [`fair`]).
pub fn free_vertices(mesh: &QuadMesh) -> Vec<usize> {
    Umbrella::new(mesh).free
}
