//! Surface lofting over closed boundary loops: quad skinning, thin-plate
//! fairing and Catmull-Clark subdivision, plus curvature and degeneracy checks.

mod fair;
mod gaussian;
mod intersect;
mod skin;
mod subdiv;

use serde::{Deserialize, Serialize};

pub use fair::{bilaplacian, fair, fairness_energy, free_vertices};
pub use gaussian::{mean_abs_gaussian_curvature, mean_abs_gaussian_curvature_tri, vertex_gaussian_curvature};
pub use intersect::{is_degenerate, triangles_intersect};
pub use skin::{make_loop, skin, BoundaryLoop, Pairing, LOOP_TOLERANCE};
pub use subdiv::{subdivide, subdivide_once};

use crate::curve_graph::CurveFragment;
use crate::error::{Error, Result};
use crate::geom::point_polyline_distance;
use crate::mesh::QuadMesh;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LoftParams {
    /// Grid rows between rails (rings for single loops); derived from `grid_step` when unset.
    pub rows: Option<usize>,
    /// Samples per rail (boundary samples for single loops); derived from `grid_step` when unset.
    pub columns: Option<usize>,
    /// Target base-mesh edge length (m).
    pub grid_step: f64,
    pub max_columns: usize,
    pub subdiv_levels: usize,
    pub fairing_tol: f64,
    pub fairing_max_iters: usize,
}

impl Default for LoftParams {
    fn default() -> Self {
        LoftParams {
            rows: None,
            columns: None,
            grid_step: 0.1,
            max_columns: 48,
            subdiv_levels: 2,
            fairing_tol: 1e-10,
            fairing_max_iters: 20_000,
        }
    }
}

impl LoftParams {
    pub fn validate(&self) -> Result<()> {
        if self.rows == Some(0) {
            return Err(Error::InvalidParams("rows must be at least 1".into()));
        }
        if matches!(self.columns, Some(c) if c < 2) {
            return Err(Error::InvalidParams("columns must be at least 2".into()));
        }
        if self.subdiv_levels > 4 {
            return Err(Error::InvalidParams(format!(
                "subdiv_levels must be in 0..=4, got {}",
                self.subdiv_levels
            )));
        }
        if !(self.grid_step > 0.0 && self.fairing_tol > 0.0) || self.max_columns < 2 || self.fairing_max_iters == 0 {
            return Err(Error::InvalidParams(
                "grid_step, fairing_tol, max_columns and fairing_max_iters must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// A lofted patch with its diagnostics.
#[derive(Clone, Debug, PartialEq)]
pub struct LoftResult {
    pub mesh: QuadMesh,
    /// Largest distance from an output boundary vertex to the input loop (m).
    pub boundary_deviation: f64,
    pub mean_abs_k: f64,
    /// Self-intersecting or zero-area output.
    pub degenerate: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LoftSummary {
    pub boundary_deviation: f64,
    #[serde(rename = "mean_abs_K")]
    pub mean_abs_k: f64,
    pub degenerate: bool,
}

impl LoftResult {
    pub fn summary(&self) -> LoftSummary {
        LoftSummary {
            boundary_deviation: self.boundary_deviation,
            mean_abs_k: self.mean_abs_k,
            degenerate: self.degenerate,
        }
    }
}

/// Skin, fair and subdivide a loop.
pub fn loft_loop(lp: &BoundaryLoop, params: &LoftParams) -> Result<LoftResult> {
    params.validate()?;
    let base = skin(lp, params)?;
    let faired = fair(&base, params)?;
    let mesh = subdivide(&faired, params.subdiv_levels)?;
    let polygon = lp.polygon();
    let boundary_deviation = mesh
        .vertices
        .iter()
        .zip(&mesh.boundary_tags)
        .filter(|(_, &t)| t)
        .map(|(p, _)| point_polyline_distance(p, &polygon, true))
        .fold(0.0, f64::max);
    let mean_abs_k = mean_abs_gaussian_curvature(&mesh)?;
    let degenerate = !mean_abs_k.is_finite() || is_degenerate(&mesh.triangulate());
    Ok(LoftResult {
        mesh,
        boundary_deviation,
        mean_abs_k,
        degenerate,
    })
}

/// Lofts a surface spanning two open curves joined according to `pairing`.
pub fn loft_pair(c1: &CurveFragment, c2: &CurveFragment, pairing: Pairing, params: &LoftParams) -> Result<LoftResult> {
    loft_loop(&make_loop(c1, c2, pairing)?, params)
}

/// Lofts a surface filling a single closed curve.
pub fn loft_closed(c: &CurveFragment, params: &LoftParams) -> Result<LoftResult> {
    if !c.closed {
        return Err(Error::DegenerateLoop(format!("fragment {} is not closed", c.id)));
    }
    if c.points.len() < 4 {
        return Err(Error::LoopTooShort(c.points.len()));
    }
    let mut side = c.points.clone();
    side.push(c.points[0]);
    loft_loop(&BoundaryLoop { sides: vec![side] }, params)
}
