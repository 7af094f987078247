use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Status, SurfaceHypothesis};
use crate::error::{Error, Result};
use crate::loft::Pairing;
use crate::mesh::{write_text, QuadMesh};

/// Per-hypothesis metadata as written next to its mesh.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HypothesisMeta {
    pub id: u64,
    pub source_fragment_ids: Vec<u64>,
    pub pairing: Pairing,
    #[serde(rename = "mean_abs_K")]
    pub mean_abs_k: f64,
    pub boundary_deviation: f64,
    pub area: f64,
    pub status: Status,
    pub status_history: Vec<Status>,
    pub mesh: String,
}

#[derive(Serialize, Deserialize)]
struct Manifest {
    hypotheses: Vec<HypothesisMeta>,
}

impl HypothesisMeta {
    pub fn of(h: &SurfaceHypothesis) -> Self {
        HypothesisMeta {
            id: h.id,
            source_fragment_ids: h.source_fragment_ids.clone(),
            pairing: h.pairing,
            mean_abs_k: h.mean_abs_k,
            boundary_deviation: h.boundary_deviation,
            area: h.area(),
            status: h.status,
            status_history: h.status_history.clone(),
            mesh: format!("hyp_{:04}.obj", h.id),
        }
    }
}

/// Writes `hyp_NNNN.obj`, `hyp_NNNN.json` and `manifest.json` into `dir`.
pub fn save_hypotheses(dir: impl AsRef<Path>, hyps: &[SurfaceHypothesis]) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let metas: Vec<HypothesisMeta> = hyps.iter().map(HypothesisMeta::of).collect();
    for (h, m) in hyps.iter().zip(&metas) {
        write_text(dir.join(&m.mesh), &h.mesh.to_obj())?;
        let json = serde_json::to_string_pretty(m).expect("metadata serializes");
        write_text(dir.join(format!("hyp_{:04}.json", h.id)), &json)?;
    }
    let manifest = serde_json::to_string_pretty(&Manifest { hypotheses: metas }).expect("manifest serializes");
    write_text(dir.join("manifest.json"), &manifest)
}

/// Reads hypotheses written by [`save_hypotheses`].
pub fn load_hypotheses(dir: impl AsRef<Path>) -> Result<Vec<SurfaceHypothesis>> {
    let dir = dir.as_ref();
    let path = dir.join("manifest.json");
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let manifest: Manifest = serde_json::from_str(&text).map_err(|e| Error::json(&path, e))?;
    manifest
        .hypotheses
        .into_iter()
        .map(|m| {
            let mesh = QuadMesh::load_obj(dir.join(&m.mesh))?;
            Ok(SurfaceHypothesis {
                id: m.id,
                source_fragment_ids: m.source_fragment_ids,
                pairing: m.pairing,
                tri: mesh.triangulate(),
                mesh,
                mean_abs_k: m.mean_abs_k,
                boundary_deviation: m.boundary_deviation,
                status: m.status,
                status_history: m.status_history,
            })
        })
        .collect()
}
