//! Synthetic ground-truthed scenes: polyhedral models, ring cameras, curve
//! drawings with injected defects, and hidden-line-removed edge maps.

mod solid;

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

pub use solid::{FeatureChain, Solid};

use crate::bvh::{Aabb, TriangleBvh};
use crate::curve_graph::{save_cameras, save_drawing, CameraView, CurveDrawing, CurveFragment, EdgeElement};
use crate::error::{Error, Result};
use crate::geom::{point_polyline_distance, resample_open, Point2, Point3, Vec3};
use crate::mesh::{write_text, TriMesh};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SceneKind {
    Box,
    House,
    TwoChairs,
}

impl std::str::FromStr for SceneKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "box" => Ok(SceneKind::Box),
            "house" => Ok(SceneKind::House),
            "two_chairs" => Ok(SceneKind::TwoChairs),
            _ => Err(Error::InvalidParams(format!("unknown scene {s:?}"))),
        }
    }
}

/// Defect rates applied to the veridical drawing.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Defects {
    /// Probability that a fragment is split in two at an interior sample.
    pub fragmentation_rate: f64,
    /// Probability that a fragment loses a short run of samples.
    pub gap_rate: f64,
    /// Probability that a fragment is joined with a neighbour across a corner.
    pub overgroup_rate: f64,
    /// Probability that part of a fragment is drawn twice with jitter.
    pub duplicate_rate: f64,
    /// Clutter edges per square pixel.
    pub clutter_edge_density: f64,
    /// Number of 5 mm stray fragments.
    pub shard_count: usize,
}

impl Defects {
    pub fn none() -> Self {
        Defects {
            fragmentation_rate: 0.0,
            gap_rate: 0.0,
            overgroup_rate: 0.0,
            duplicate_rate: 0.0,
            clutter_edge_density: 0.0,
            shard_count: 0,
        }
    }

    pub fn moderate() -> Self {
        Defects {
            fragmentation_rate: 0.2,
            gap_rate: 0.2,
            overgroup_rate: 0.1,
            duplicate_rate: 0.1,
            clutter_edge_density: 5e-4,
            shard_count: 10,
        }
    }
}

impl Default for Defects {
    fn default() -> Self {
        Defects::moderate()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SceneSpec {
    pub scene: SceneKind,
    pub n_views: usize,
    /// Horizontal camera distance from the scene centre (m).
    pub ring_radius: f64,
    /// Camera height above the scene centre (m).
    pub camera_height: f64,
    pub focal_px: f64,
    pub image_width: u32,
    pub image_height: u32,
    /// Standard deviation of drawing sample noise (m).
    pub noise_sigma: f64,
    /// Drawing sample spacing (m).
    pub sample_step: f64,
    pub defects: Defects,
    pub rng_seed: u64,
}

impl Default for SceneSpec {
    fn default() -> Self {
        SceneSpec::for_scene(SceneKind::House)
    }
}

impl SceneSpec {
    /// Defaults sized to the scene.
    pub fn for_scene(scene: SceneKind) -> Self {
        let (ring_radius, camera_height) = match scene {
            SceneKind::Box => (4.0, 2.0),
            SceneKind::House => (7.0, 3.0),
            SceneKind::TwoChairs => (4.0, 2.0),
        };
        SceneSpec {
            scene,
            n_views: 27,
            ring_radius,
            camera_height,
            focal_px: 500.0,
            image_width: 640,
            image_height: 480,
            noise_sigma: 5e-4,
            sample_step: 5e-3,
            defects: Defects::moderate(),
            rng_seed: 7,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let d = &self.defects;
        if self.n_views < 2 {
            return Err(Error::InvalidParams(format!(
                "n_views must be at least 2, got {}",
                self.n_views
            )));
        }
        for (name, r) in [
            ("fragmentation_rate", d.fragmentation_rate),
            ("gap_rate", d.gap_rate),
            ("overgroup_rate", d.overgroup_rate),
            ("duplicate_rate", d.duplicate_rate),
        ] {
            if !(0.0..=1.0).contains(&r) {
                return Err(Error::InvalidParams(format!("{name} must be in [0, 1], got {r}")));
            }
        }
        if !(d.clutter_edge_density >= 0.0 && self.noise_sigma >= 0.0) {
            return Err(Error::InvalidParams(
                "clutter density and noise must be non-negative".into(),
            ));
        }
        if !(self.ring_radius > 0.0 && self.focal_px > 0.0 && self.sample_step > 0.0) {
            return Err(Error::InvalidParams(
                "ring_radius, focal_px and sample_step must be positive".into(),
            ));
        }
        if self.image_width == 0 || self.image_height == 0 {
            return Err(Error::InvalidParams("image size must be positive".into()));
        }
        Ok(())
    }
}

/// One injected defect.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Defect {
    Overgroup {
        fragment: u64,
        absorbed: u64,
        corner: [f64; 3],
    },
    Split {
        fragment: u64,
        new_fragment: u64,
        point: [f64; 3],
    },
    Gap {
        fragment: u64,
        new_fragment: u64,
        from: [f64; 3],
        to: [f64; 3],
    },
    Duplicate {
        source: u64,
        fragment: u64,
    },
    Shard {
        fragment: u64,
        point: [f64; 3],
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GtFace {
    pub id: usize,
    pub name: String,
    pub planar: bool,
    pub area: f64,
    /// Hides part of some veridical curve in some view.
    pub occludes_curves: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GroundTruth {
    pub gt_mesh: TriMesh,
    /// Face id of each triangle of `gt_mesh`.
    pub triangle_faces: Vec<usize>,
    pub faces: Vec<GtFace>,
    /// Defect-free corner-to-corner fragments.
    pub veridical: Vec<CurveFragment>,
    /// Face ids of each veridical fragment, by index.
    pub chain_faces: Vec<Vec<usize>>,
    /// Face ids touched by each fragment of the emitted drawing (shards excluded).
    pub veridical_fragments: BTreeMap<u64, Vec<usize>>,
    pub defects: Vec<Defect>,
}

impl GroundTruth {
    pub fn veridical_count(&self) -> usize {
        self.veridical.len()
    }

    pub fn diameter(&self) -> f64 {
        Aabb::from_points(self.gt_mesh.vertices.iter()).diagonal()
    }

    /// Triangles of the faces accepted by `keep`.
    pub fn face_mesh(&self, keep: impl Fn(&GtFace) -> bool) -> TriMesh {
        self.gt_mesh.with_faces(|t| keep(&self.faces[self.triangle_faces[t]]))
    }

    /// Pairs of veridical fragments lying on a common face, with that face.
    pub fn coplanar_pairs(&self, faces_of: &BTreeMap<u64, Vec<usize>>) -> Vec<(u64, u64, usize)> {
        let mut out = Vec::new();
        let ids: Vec<u64> = faces_of.keys().copied().collect();
        for (i, &a) in ids.iter().enumerate() {
            for &b in &ids[i + 1..] {
                if let Some(&f) = faces_of[&a].iter().find(|f| faces_of[&b].contains(f)) {
                    out.push((a, b, f));
                }
            }
        }
        out
    }

    /// Face ids of each veridical fragment, keyed by its id.
    pub fn veridical_faces(&self) -> BTreeMap<u64, Vec<usize>> {
        self.veridical
            .iter()
            .map(|f| (f.id, self.chain_faces[f.id as usize].clone()))
            .collect()
    }
}

/// Builds the polyhedral model of a scene.
pub fn scene_solid(kind: SceneKind) -> Solid {
    let mut s = Solid::default();
    match kind {
        SceneKind::Box => s.add_box("box", Point3::origin(), Point3::new(1.0, 1.0, 1.0)),
        SceneKind::House => {
            s.add_gabled_house("house", Point3::origin(), Point3::new(2.0, 1.5, 1.2), 1.8);
            s.add_box("shed", Point3::new(2.6, 0.2, 0.0), Point3::new(3.4, 1.0, 0.8));
        }
        SceneKind::TwoChairs => {
            s.add_chair("chair_a", 0.0, 0.5, 0.0, false);
            s.add_chair("chair_b", 0.9, 0.5, 1.6, true);
        }
    }
    s
}

fn arr(p: &Point3) -> [f64; 3] {
    [p.x, p.y, p.z]
}

struct Drawer {
    fragments: Vec<CurveFragment>,
    faces: BTreeMap<u64, Vec<usize>>,
    defects: Vec<Defect>,
    next: u64,
}

impl Drawer {
    fn fresh(&mut self) -> u64 {
        self.next += 1;
        self.next - 1
    }

    fn sorted_ids(&self) -> Vec<u64> {
        let mut ids: Vec<u64> = self.fragments.iter().map(|f| f.id).collect();
        ids.sort_unstable();
        ids
    }

    fn take(&mut self, id: u64) -> CurveFragment {
        let i = self.fragments.iter().position(|f| f.id == id).expect("fragment exists");
        self.fragments.swap_remove(i)
    }

    fn overgroup(&mut self, rate: f64, rng: &mut ChaCha8Rng) {
        let mut consumed = std::collections::BTreeSet::new();
        for id in self.sorted_ids() {
            if !rng.random_bool(rate) || consumed.contains(&id) {
                continue;
            }
            let f = self.fragments.iter().find(|f| f.id == id).unwrap();
            let end = *f.points.last().unwrap();
            let other = self
                .fragments
                .iter()
                .filter(|g| g.id != id && !consumed.contains(&g.id))
                .filter(|g| g.points[0] == end || *g.points.last().unwrap() == end)
                .map(|g| g.id)
                .min();
            let Some(gid) = other else {
                continue;
            };
            let g = self.take(gid);
            let f = self.take(id);
            let tail: Vec<Point3> = if g.points[0] == end {
                g.points[1..].to_vec()
            } else {
                g.points.iter().rev().skip(1).copied().collect()
            };
            let mut pts = f.points;
            pts.extend(tail);
            self.fragments.push(CurveFragment::new(id, pts, false));
            let mut faces = self.faces.remove(&gid).unwrap_or_default();
            faces.extend(self.faces[&id].iter().copied());
            faces.sort_unstable();
            faces.dedup();
            self.faces.insert(id, faces);
            consumed.insert(id);
            consumed.insert(gid);
            self.defects.push(Defect::Overgroup {
                fragment: id,
                absorbed: gid,
                corner: arr(&end),
            });
        }
    }

    /// Cuts fragment `id` into `[..=k]` and `[k + skip..]`.
    fn cut(&mut self, id: u64, k: usize, skip: usize) -> u64 {
        let f = self.take(id);
        let new_id = self.fresh();
        let a = f.points[..=k].to_vec();
        let b = f.points[k + skip..].to_vec();
        self.fragments.push(CurveFragment::new(id, a, false));
        self.fragments.push(CurveFragment::new(new_id, b, false));
        let faces = self.faces[&id].clone();
        self.faces.insert(new_id, faces);
        new_id
    }

    fn split(&mut self, rate: f64, rng: &mut ChaCha8Rng) {
        for id in self.sorted_ids() {
            if !rng.random_bool(rate) {
                continue;
            }
            let f = self.fragments.iter().find(|f| f.id == id).unwrap();
            let n = f.points.len();
            if n < 5 {
                continue;
            }
            let k = rng.random_range(n / 5..=(4 * n / 5).max(n / 5));
            let k = k.clamp(1, n - 2);
            let point = arr(&f.points[k]);
            let new_fragment = self.cut(id, k, 0);
            self.defects.push(Defect::Split {
                fragment: id,
                new_fragment,
                point,
            });
        }
    }

    fn gaps(&mut self, rate: f64, rng: &mut ChaCha8Rng) {
        const REMOVED: usize = 2;
        for id in self.sorted_ids() {
            if !rng.random_bool(rate) {
                continue;
            }
            let f = self.fragments.iter().find(|f| f.id == id).unwrap();
            let n = f.points.len();
            if n < 12 {
                continue;
            }
            let k = rng.random_range(n / 4..=3 * n / 4 - REMOVED - 1);
            let (from, to) = (arr(&f.points[k]), arr(&f.points[k + REMOVED + 1]));
            let new_fragment = self.cut(id, k, REMOVED + 1);
            self.defects.push(Defect::Gap {
                fragment: id,
                new_fragment,
                from,
                to,
            });
        }
    }

    fn duplicate(&mut self, rate: f64, jitter: f64, rng: &mut ChaCha8Rng) {
        let normal = Normal::new(0.0, jitter.max(f64::MIN_POSITIVE)).unwrap();
        for id in self.sorted_ids() {
            if !rng.random_bool(rate) {
                continue;
            }
            let f = self.fragments.iter().find(|f| f.id == id).unwrap();
            let n = f.points.len();
            if n < 6 {
                continue;
            }
            let len = rng.random_range(3 * n / 10..=7 * n / 10).max(2);
            let start = rng.random_range(0..=n - len);
            let pts: Vec<Point3> = f.points[start..start + len]
                .iter()
                .map(|p| p + Vec3::new(normal.sample(rng), normal.sample(rng), normal.sample(rng)))
                .collect();
            let new_id = self.fresh();
            let faces = self.faces[&id].clone();
            self.fragments.push(CurveFragment::new(new_id, pts, false));
            self.faces.insert(new_id, faces);
            self.defects.push(Defect::Duplicate {
                source: id,
                fragment: new_id,
            });
        }
    }

    fn shards(&mut self, count: usize, bounds: &Aabb, veridical: &[CurveFragment], rng: &mut ChaCha8Rng) {
        let mut placed = 0;
        let mut attempts = 0;
        while placed < count && attempts < 1000 * (count + 1) {
            attempts += 1;
            let p = Point3::new(
                rng.random_range(bounds.min.x..=bounds.max.x),
                rng.random_range(bounds.min.y..=bounds.max.y),
                rng.random_range(bounds.min.z..=bounds.max.z),
            );
            let dir = Vec3::new(
                rng.random::<f64>() - 0.5,
                rng.random::<f64>() - 0.5,
                rng.random::<f64>() - 0.5,
            );
            if dir.norm() < 1e-3 {
                continue;
            }
            let q = p + dir.normalize() * 0.005;
            let clear = veridical
                .iter()
                .chain(&self.fragments)
                .all(|f| point_polyline_distance(&p, &f.points, f.closed) > 0.05);
            if !clear {
                continue;
            }
            let id = self.fresh();
            self.fragments.push(CurveFragment::new(id, vec![p, q], false));
            self.defects.push(Defect::Shard {
                fragment: id,
                point: arr(&p),
            });
            placed += 1;
        }
    }
}

/// Camera ring around the scene centre, all looking at it.
pub fn ring_cameras(spec: &SceneSpec, center: &Point3) -> Result<Vec<CameraView>> {
    (0..spec.n_views)
        .map(|i| {
            let a = std::f64::consts::TAU * i as f64 / spec.n_views as f64;
            let eye = center
                + Vec3::new(
                    spec.ring_radius * a.cos(),
                    spec.ring_radius * a.sin(),
                    spec.camera_height,
                );
            CameraView::look_at(
                i as u64,
                eye,
                *center,
                Vec3::z(),
                spec.focal_px,
                spec.image_width,
                spec.image_height,
            )
        })
        .collect()
}

/// Relative ray margin used for hidden-line removal (1 mm at the target).
fn contact_eps(eye: &Point3, x: &Point3) -> f64 {
    (1e-3 / (x - eye).norm()).max(1e-9)
}

/// Whether `x` is visible from `view` past `bvh`.
pub fn visible(bvh: &TriangleBvh, view: &CameraView, x: &Point3) -> bool {
    let inside = view.project(x).is_some_and(|p| view.in_image(&p));
    inside && !bvh.segment_blocked(&view.camera_center, x, contact_eps(&view.camera_center, x), |_| true)
}

/// Edge map of the visible parts of `chains`, sampled at most 1 px apart.
pub fn render_edges(view: &CameraView, bvh: &TriangleBvh, chains: &[Vec<Point3>]) -> Vec<EdgeElement> {
    let mut out = Vec::new();
    for chain in chains {
        for w in chain.windows(2) {
            let (a, b) = (w[0], w[1]);
            let (Some(pa), Some(pb)) = (view.project(&a), view.project(&b)) else {
                continue;
            };
            let d = pb - pa;
            let theta = d.y.atan2(d.x);
            let n = (d.norm().ceil() as usize).max(1);
            for k in 0..=n {
                let x = a + (b - a) * (k as f64 / n as f64);
                if visible(bvh, view, &x) {
                    let p = view.project(&x).unwrap();
                    out.push(EdgeElement::new(p, theta, 1.0));
                }
            }
        }
    }
    out
}

fn clutter(view: &CameraView, density: f64, rng: &mut ChaCha8Rng) -> Vec<EdgeElement> {
    let count = (density * view.width as f64 * view.height as f64).round() as usize;
    (0..count)
        .map(|_| {
            let p = Point2::new(
                rng.random::<f64>() * view.width as f64,
                rng.random::<f64>() * view.height as f64,
            );
            EdgeElement::new(
                p,
                rng.random::<f64>() * std::f64::consts::PI,
                rng.random_range(0.2..=1.0),
            )
        })
        .collect()
}

/// Generates a drawing, cameras with edge maps, and ground truth. Fully
/// determined by `spec`.
pub fn generate(spec: &SceneSpec) -> Result<(CurveDrawing, Vec<CameraView>, GroundTruth)> {
    spec.validate()?;
    let solid = scene_solid(spec.scene);
    let (gt_mesh, triangle_faces) = solid.triangulate();
    let chains = solid.feature_chains();
    let corner_lines: Vec<Vec<Point3>> = chains
        .iter()
        .map(|c| c.vertices.iter().map(|&v| solid.vertices[v]).collect())
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.rng_seed);

    let veridical: Vec<CurveFragment> = corner_lines
        .iter()
        .enumerate()
        .map(|(i, line)| {
            let len: f64 = line.windows(2).map(|w| (w[1] - w[0]).norm()).sum();
            let n = ((len / spec.sample_step).round() as usize + 1).max(2);
            CurveFragment::new(i as u64, resample_open(line, n), false)
        })
        .collect();
    let noise = Normal::new(0.0, spec.noise_sigma.max(f64::MIN_POSITIVE)).unwrap();
    let noisy: Vec<CurveFragment> = veridical
        .iter()
        .map(|f| {
            let n = f.points.len();
            let pts = f
                .points
                .iter()
                .enumerate()
                .map(|(k, p)| {
                    if k == 0 || k == n - 1 || spec.noise_sigma == 0.0 {
                        *p
                    } else {
                        p + Vec3::new(noise.sample(&mut rng), noise.sample(&mut rng), noise.sample(&mut rng))
                    }
                })
                .collect();
            CurveFragment::new(f.id, pts, false)
        })
        .collect();

    let d = &spec.defects;
    let mut drawer = Drawer {
        faces: chains
            .iter()
            .enumerate()
            .map(|(i, c)| (i as u64, c.faces.clone()))
            .collect(),
        fragments: noisy,
        defects: Vec::new(),
        next: chains.len() as u64,
    };
    drawer.overgroup(d.overgroup_rate, &mut rng);
    drawer.split(d.fragmentation_rate, &mut rng);
    drawer.gaps(d.gap_rate, &mut rng);
    drawer.duplicate(d.duplicate_rate, spec.noise_sigma, &mut rng);
    let bounds = Aabb::from_points(gt_mesh.vertices.iter()).expanded(0.1);
    drawer.shards(d.shard_count, &bounds, &veridical, &mut rng);
    drawer.fragments.sort_by_key(|f| f.id);
    let drawing = CurveDrawing::from_fragments(drawer.fragments);
    drawing.validate()?;

    let center = Aabb::from_points(gt_mesh.vertices.iter()).center();
    let bvh = TriangleBvh::new(
        (0..gt_mesh.faces.len()).map(|t| gt_mesh.triangle(t)).collect(),
        triangle_faces.iter().map(|&f| f as u32).collect(),
    );
    let mut views = Vec::with_capacity(spec.n_views);
    for v in ring_cameras(spec, &center)? {
        let mut edges = render_edges(&v, &bvh, &corner_lines);
        edges.extend(clutter(&v, d.clutter_edge_density, &mut rng));
        views.push(v.with_edges(edges));
    }

    let mut occludes = vec![false; solid.face_names.len()];
    for v in &views {
        for (chain, f) in chains.iter().zip(&veridical) {
            let step = (f.points.len() / 50).max(1);
            for x in f.points.iter().step_by(step) {
                let eps = contact_eps(&v.camera_center, x);
                bvh.segment_hits(&v.camera_center, x, eps, |t, _| {
                    let face = bvh.tag(t) as usize;
                    if !chain.faces.contains(&face) {
                        occludes[face] = true;
                    }
                });
            }
        }
    }
    let mut area = vec![0.0; solid.face_names.len()];
    for (t, &f) in triangle_faces.iter().enumerate() {
        area[f] += gt_mesh.face_area(t);
    }
    let faces = solid
        .face_names
        .iter()
        .enumerate()
        .map(|(id, name)| GtFace {
            id,
            name: name.clone(),
            planar: true,
            area: area[id],
            occludes_curves: occludes[id],
        })
        .collect();
    let gt = GroundTruth {
        gt_mesh,
        triangle_faces,
        faces,
        chain_faces: chains.iter().map(|c| c.faces.clone()).collect(),
        veridical,
        veridical_fragments: drawer.faces,
        defects: drawer.defects,
    };
    Ok((drawing, views, gt))
}

#[derive(Serialize, Deserialize)]
struct GtFile {
    faces: Vec<GtFace>,
    triangle_faces: Vec<usize>,
    chain_faces: Vec<Vec<usize>>,
    veridical: Vec<Vec<[f64; 3]>>,
    veridical_fragments: BTreeMap<u64, Vec<usize>>,
    defects: Vec<Defect>,
}

/// Writes `drawing.json`, `cameras.json` with edge maps, `gt.obj`, `gt.json` and `spec.json`.
pub fn save_scene(
    dir: impl AsRef<Path>,
    spec: &SceneSpec,
    drawing: &CurveDrawing,
    views: &[CameraView],
    gt: &GroundTruth,
) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    save_drawing(dir.join("drawing.json"), drawing)?;
    save_cameras(dir.join("cameras.json"), views)?;
    write_text(dir.join("gt.obj"), &gt.gt_mesh.to_obj())?;
    let file = GtFile {
        faces: gt.faces.clone(),
        triangle_faces: gt.triangle_faces.clone(),
        chain_faces: gt.chain_faces.clone(),
        veridical: gt
            .veridical
            .iter()
            .map(|f| f.points.iter().map(arr).collect())
            .collect(),
        veridical_fragments: gt.veridical_fragments.clone(),
        defects: gt.defects.clone(),
    };
    write_text(
        dir.join("gt.json"),
        &serde_json::to_string_pretty(&file).expect("gt serializes"),
    )?;
    write_text(
        dir.join("spec.json"),
        &serde_json::to_string_pretty(spec).expect("spec serializes"),
    )
}

/// Reads `gt.obj` and `gt.json` from a scene directory.
pub fn load_ground_truth(dir: impl AsRef<Path>) -> Result<GroundTruth> {
    let dir = dir.as_ref();
    let gt_mesh = TriMesh::load_obj(dir.join("gt.obj"))?;
    let path = dir.join("gt.json");
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let file: GtFile = serde_json::from_str(&text).map_err(|e| Error::json(&path, e))?;
    if file.triangle_faces.len() != gt_mesh.faces.len() {
        return Err(Error::InvalidMesh("gt.json does not match gt.obj".into()));
    }
    Ok(GroundTruth {
        gt_mesh,
        triangle_faces: file.triangle_faces,
        faces: file.faces,
        chain_faces: file.chain_faces,
        veridical: file
            .veridical
            .into_iter()
            .enumerate()
            .map(|(i, pts)| CurveFragment::new(i as u64, pts.into_iter().map(Point3::from).collect(), false))
            .collect(),
        veridical_fragments: file.veridical_fragments,
        defects: file.defects,
    })
}
