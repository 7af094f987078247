//! Indexed quad and triangle meshes, OBJ I/O and area-uniform sampling.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::Rng;

use crate::error::{Error, Result};
use crate::geom::{triangle_area, Point3};

/// Area below which a triangle counts as degenerate (m^2).
pub const MIN_TRIANGLE_AREA: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Default)]
pub struct QuadMesh {
    pub vertices: Vec<Point3>,
    pub faces: Vec<[usize; 4]>,
    /// `true` for vertices lying on the input curves (held fixed by fairing).
    pub boundary_tags: Vec<bool>,
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct TriMesh {
    pub vertices: Vec<Point3>,
    pub faces: Vec<[usize; 3]>,
}

/// Undirected edge key with the smaller index first.
pub fn edge_key(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

/// Edge → incident faces, for any polygon mesh.
pub fn edge_faces<const N: usize>(faces: &[[usize; N]]) -> BTreeMap<(usize, usize), Vec<usize>> {
    let mut map: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
    for (fi, f) in faces.iter().enumerate() {
        for k in 0..N {
            map.entry(edge_key(f[k], f[(k + 1) % N])).or_default().push(fi);
        }
    }
    map
}

/// Per-vertex sorted neighbour lists from face connectivity.
pub fn vertex_neighbors<const N: usize>(n_vertices: usize, faces: &[[usize; N]]) -> Vec<Vec<usize>> {
    let mut nbrs = vec![Vec::new(); n_vertices];
    for f in faces {
        for k in 0..N {
            let (a, b) = (f[k], f[(k + 1) % N]);
            nbrs[a].push(b);
            nbrs[b].push(a);
        }
    }
    for list in &mut nbrs {
        list.sort_unstable();
        list.dedup();
    }
    nbrs
}

/// Vertices touching an edge with exactly one incident face.
pub fn topological_boundary<const N: usize>(n_vertices: usize, faces: &[[usize; N]]) -> Vec<bool> {
    let mut on = vec![false; n_vertices];
    for ((a, b), fs) in edge_faces(faces) {
        if fs.len() == 1 {
            on[a] = true;
            on[b] = true;
        }
    }
    on
}

impl QuadMesh {
    pub fn validate(&self) -> Result<()> {
        if self.boundary_tags.len() != self.vertices.len() {
            return Err(Error::InvalidMesh(format!(
                "{} boundary tags for {} vertices",
                self.boundary_tags.len(),
                self.vertices.len()
            )));
        }
        for (fi, f) in self.faces.iter().enumerate() {
            if f.iter().any(|&i| i >= self.vertices.len()) {
                return Err(Error::InvalidMesh(format!("face {fi} has an out-of-range index")));
            }
            for a in 0..4 {
                for b in a + 1..4 {
                    if f[a] == f[b] {
                        return Err(Error::InvalidMesh(format!("face {fi} repeats vertex {}", f[a])));
                    }
                }
            }
        }
        for ((a, b), fs) in edge_faces(&self.faces) {
            if fs.len() > 2 {
                return Err(Error::NonManifold(format!("edge ({a},{b}) has {} faces", fs.len())));
            }
        }
        Ok(())
    }

    pub fn edges(&self) -> Vec<(usize, usize)> {
        edge_faces(&self.faces).into_keys().collect()
    }

    /// Splits each quad `abcd` into `abc` and `acd`.
    pub fn triangulate(&self) -> TriMesh {
        let mut faces = Vec::with_capacity(self.faces.len() * 2);
        for f in &self.faces {
            faces.push([f[0], f[1], f[2]]);
            faces.push([f[0], f[2], f[3]]);
        }
        TriMesh {
            vertices: self.vertices.clone(),
            faces,
        }
    }

    pub fn area(&self) -> f64 {
        self.triangulate().area()
    }

    pub fn boundary_vertices(&self) -> Vec<usize> {
        (0..self.vertices.len()).filter(|&i| self.boundary_tags[i]).collect()
    }

    pub fn transformed(&self, f: impl Fn(&Point3) -> Point3) -> QuadMesh {
        QuadMesh {
            vertices: self.vertices.iter().map(f).collect(),
            faces: self.faces.clone(),
            boundary_tags: self.boundary_tags.clone(),
        }
    }

    pub fn to_obj(&self) -> String {
        let faces: Vec<Vec<usize>> = self.faces.iter().map(|f| f.to_vec()).collect();
        obj_string(&self.vertices, &faces)
    }

    /// Reads a quad-only OBJ; boundary tags are recomputed from connectivity.
    pub fn from_obj(text: &str, path: &Path) -> Result<QuadMesh> {
        let (vertices, polys) = parse_obj(text, path)?;
        let mut faces = Vec::with_capacity(polys.len());
        for (fi, idx) in polys.into_iter().enumerate() {
            let f: [usize; 4] = idx
                .try_into()
                .map_err(|_| Error::InvalidMesh(format!("{}: face {fi} is not a quad", path.display())))?;
            faces.push(f);
        }
        let boundary_tags = topological_boundary(vertices.len(), &faces);
        let mesh = QuadMesh {
            vertices,
            faces,
            boundary_tags,
        };
        mesh.validate()?;
        Ok(mesh)
    }

    pub fn load_obj(path: impl AsRef<Path>) -> Result<QuadMesh> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        QuadMesh::from_obj(&text, path)
    }
}

impl TriMesh {
    pub fn validate(&self) -> Result<()> {
        for (fi, f) in self.faces.iter().enumerate() {
            if f.iter().any(|&i| i >= self.vertices.len()) {
                return Err(Error::InvalidMesh(format!("face {fi} has an out-of-range index")));
            }
            let area = self.face_area(fi);
            if area <= MIN_TRIANGLE_AREA {
                return Err(Error::InvalidMesh(format!("face {fi} has area {area:e}")));
            }
        }
        Ok(())
    }

    pub fn triangle(&self, fi: usize) -> [Point3; 3] {
        let f = self.faces[fi];
        [self.vertices[f[0]], self.vertices[f[1]], self.vertices[f[2]]]
    }

    pub fn face_area(&self, fi: usize) -> f64 {
        let [a, b, c] = self.triangle(fi);
        triangle_area(&a, &b, &c)
    }

    pub fn area(&self) -> f64 {
        (0..self.faces.len()).map(|i| self.face_area(i)).sum()
    }

    /// Concatenates meshes into one.
    pub fn merged<'a>(meshes: impl IntoIterator<Item = &'a TriMesh>) -> TriMesh {
        let mut out = TriMesh::default();
        for m in meshes {
            let base = out.vertices.len();
            out.vertices.extend_from_slice(&m.vertices);
            out.faces
                .extend(m.faces.iter().map(|f| [f[0] + base, f[1] + base, f[2] + base]));
        }
        out
    }

    /// Submesh made of the listed faces (vertices are not compacted).
    pub fn with_faces(&self, keep: impl Fn(usize) -> bool) -> TriMesh {
        TriMesh {
            vertices: self.vertices.clone(),
            faces: (0..self.faces.len())
                .filter(|&i| keep(i))
                .map(|i| self.faces[i])
                .collect(),
        }
    }

    pub fn transformed(&self, f: impl Fn(&Point3) -> Point3) -> TriMesh {
        TriMesh {
            vertices: self.vertices.iter().map(f).collect(),
            faces: self.faces.clone(),
        }
    }

    /// `count` points distributed uniformly by area.
    pub fn sample_uniform<R: Rng>(&self, count: usize, rng: &mut R) -> Vec<Point3> {
        let mut cdf = Vec::with_capacity(self.faces.len());
        let mut acc = 0.0;
        for i in 0..self.faces.len() {
            acc += self.face_area(i);
            cdf.push(acc);
        }
        if acc <= 0.0 || count == 0 {
            return Vec::new();
        }
        (0..count)
            .map(|_| {
                let r = rng.random::<f64>() * acc;
                let fi = cdf.partition_point(|&c| c < r).min(self.faces.len() - 1);
                let [a, b, c] = self.triangle(fi);
                let (mut u, mut v) = (rng.random::<f64>(), rng.random::<f64>());
                if u + v > 1.0 {
                    u = 1.0 - u;
                    v = 1.0 - v;
                }
                a + (b - a) * u + (c - a) * v
            })
            .collect()
    }

    pub fn to_obj(&self) -> String {
        let faces: Vec<Vec<usize>> = self.faces.iter().map(|f| f.to_vec()).collect();
        obj_string(&self.vertices, &faces)
    }

    /// Reads `v` and `f` records; polygons are fan-triangulated.
    pub fn from_obj(text: &str, path: &Path) -> Result<TriMesh> {
        let (vertices, polys) = parse_obj(text, path)?;
        let mut faces = Vec::new();
        for idx in polys {
            for k in 1..idx.len() - 1 {
                faces.push([idx[0], idx[k], idx[k + 1]]);
            }
        }
        Ok(TriMesh { vertices, faces })
    }

    pub fn load_obj(path: impl AsRef<Path>) -> Result<TriMesh> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        TriMesh::from_obj(&text, path)
    }
}

/// Reads `v` and `f` records of an OBJ file.
fn parse_obj(text: &str, path: &Path) -> Result<(Vec<Point3>, Vec<Vec<usize>>)> {
    let mut vertices: Vec<Point3> = Vec::new();
    let mut faces: Vec<Vec<usize>> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let mut parts = line.split_whitespace();
        let parse_err = |msg: &str| Error::Parse {
            path: path.to_path_buf(),
            line: lineno + 1,
            column: 0,
            message: msg.to_string(),
        };
        match parts.next() {
            Some("v") => {
                let xyz: Vec<f64> = parts
                    .take(3)
                    .map(|s| s.parse::<f64>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|_| parse_err("bad vertex coordinate"))?;
                if xyz.len() != 3 {
                    return Err(parse_err("vertex needs 3 coordinates"));
                }
                vertices.push(Point3::new(xyz[0], xyz[1], xyz[2]));
            }
            Some("f") => {
                let idx: Vec<usize> = parts
                    .map(|s| {
                        s.split('/').next().and_then(|i| i.parse::<i64>().ok()).and_then(|i| {
                            if i > 0 {
                                Some(i as usize - 1)
                            } else if i < 0 {
                                (vertices.len() as i64 + i).try_into().ok()
                            } else {
                                None
                            }
                        })
                    })
                    .collect::<Option<_>>()
                    .ok_or_else(|| parse_err("bad face index"))?;
                if idx.len() < 3 {
                    return Err(parse_err("face needs at least 3 vertices"));
                }
                faces.push(idx);
            }
            _ => {}
        }
    }
    if faces.iter().flatten().any(|&i| i >= vertices.len()) {
        return Err(Error::InvalidMesh(format!(
            "{}: face index out of range",
            path.display()
        )));
    }
    Ok((vertices, faces))
}

fn obj_string(vertices: &[Point3], faces: &[Vec<usize>]) -> String {
    let mut s = String::with_capacity(vertices.len() * 40 + faces.len() * 24);
    for v in vertices {
        let _ = writeln!(s, "v {} {} {}", v.x, v.y, v.z);
    }
    for f in faces {
        s.push('f');
        for i in f {
            let _ = write!(s, " {}", i + 1);
        }
        s.push('\n');
    }
    s
}

pub fn write_text(path: impl AsRef<Path>, text: &str) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Icosahedron refined `subdivisions` times and projected onto the sphere.
pub fn icosphere(radius: f64, subdivisions: usize) -> TriMesh {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let mut vertices: Vec<Point3> = [
        (-1.0, t, 0.0),
        (1.0, t, 0.0),
        (-1.0, -t, 0.0),
        (1.0, -t, 0.0),
        (0.0, -1.0, t),
        (0.0, 1.0, t),
        (0.0, -1.0, -t),
        (0.0, 1.0, -t),
        (t, 0.0, -1.0),
        (t, 0.0, 1.0),
        (-t, 0.0, -1.0),
        (-t, 0.0, 1.0),
    ]
    .iter()
    .map(|&(x, y, z)| Point3::from(nalgebra::Vector3::new(x, y, z).normalize() * radius))
    .collect();
    let mut faces: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for _ in 0..subdivisions {
        let mut mid: HashMap<(usize, usize), usize> = HashMap::new();
        let mut next = Vec::with_capacity(faces.len() * 4);
        let mut midpoint = |a: usize, b: usize, vertices: &mut Vec<Point3>| -> usize {
            *mid.entry(edge_key(a, b)).or_insert_with(|| {
                let m = nalgebra::center(&vertices[a], &vertices[b]);
                vertices.push(Point3::from(m.coords.normalize() * radius));
                vertices.len() - 1
            })
        };
        for f in &faces {
            let ab = midpoint(f[0], f[1], &mut vertices);
            let bc = midpoint(f[1], f[2], &mut vertices);
            let ca = midpoint(f[2], f[0], &mut vertices);
            next.push([f[0], ab, ca]);
            next.push([f[1], bc, ab]);
            next.push([f[2], ca, bc]);
            next.push([ab, bc, ca]);
        }
        faces = next;
    }
    TriMesh { vertices, faces }
}

/// Axis-aligned cube control mesh with outward-facing quads.
pub fn cube(half: f64) -> QuadMesh {
    let vertices: Vec<Point3> = (0..8)
        .map(|i| {
            Point3::new(
                if i & 1 == 0 { -half } else { half },
                if i & 2 == 0 { -half } else { half },
                if i & 4 == 0 { -half } else { half },
            )
        })
        .collect();
    let faces = vec![
        [0, 2, 3, 1],
        [4, 5, 7, 6],
        [0, 1, 5, 4],
        [2, 6, 7, 3],
        [0, 4, 6, 2],
        [1, 3, 7, 5],
    ];
    QuadMesh {
        boundary_tags: vec![false; 8],
        vertices,
        faces,
    }
}

/// Regular `nx` x `ny` quad grid over `[0, sx] x [0, sy]` at z = 0.
pub fn grid(nx: usize, ny: usize, sx: f64, sy: f64) -> QuadMesh {
    let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1));
    let mut tags = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            vertices.push(Point3::new(sx * i as f64 / nx as f64, sy * j as f64 / ny as f64, 0.0));
            tags.push(i == 0 || j == 0 || i == nx || j == ny);
        }
    }
    let idx = |i: usize, j: usize| j * (nx + 1) + i;
    let mut faces = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            faces.push([idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1)]);
        }
    }
    QuadMesh {
        vertices,
        faces,
        boundary_tags: tags,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn icosphere_area_converges() {
        let s = icosphere(2.0, 3);
        let exact = 4.0 * std::f64::consts::PI * 4.0;
        assert!((s.area() - exact).abs() / exact < 0.01);
        assert_eq!(s.faces.len(), 20 * 64);
    }

    #[test]
    fn obj_round_trip_preserves_geometry() {
        let g = grid(3, 2, 1.5, 1.0).triangulate();
        let back = TriMesh::from_obj(&g.to_obj(), Path::new("g.obj")).unwrap();
        assert_eq!(back, g);
    }

    #[test]
    fn quad_faces_fan_triangulate() {
        let text = "v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1/1 2/2 3/3 4/4\n";
        let m = TriMesh::from_obj(text, Path::new("q.obj")).unwrap();
        assert_eq!(m.faces, vec![[0, 1, 2], [0, 2, 3]]);
        assert!((m.area() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn grid_validates_and_tags_boundary() {
        let g = grid(4, 3, 1.0, 1.0);
        g.validate().unwrap();
        let topo = topological_boundary(g.vertices.len(), &g.faces);
        assert_eq!(topo, g.boundary_tags);
    }

    #[test]
    fn repeated_vertex_is_invalid() {
        let mut g = grid(1, 1, 1.0, 1.0);
        g.faces[0][3] = g.faces[0][0];
        assert!(g.validate().is_err());
    }
}
