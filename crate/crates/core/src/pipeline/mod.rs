//! End-to-end runs driven by a JSON config, with one artifact directory per stage.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::curve_graph::{load_cameras, load_drawing, save_drawing};
use crate::error::{Error, Result};
use crate::eval::{evaluate_stages, pr_svg, write_pr_csv, EvalParams, EvalTarget, PrPoint, Stage};
use crate::hypothesis::{form_hypotheses, save_hypotheses, HypothesisParams, Status, SurfaceHypothesis};
use crate::loft::LoftParams;
use crate::mesh::write_text;
use crate::occlusion::{dedup_hypotheses, drop_fully_hidden, overlay_svg, verify, OcclusionParams, OcclusionRecord};
use crate::reorg::{reorganize, ReorgParams};

pub const SCHEMA: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub schema: u32,
    pub drawing: PathBuf,
    pub cameras: PathBuf,
    /// Scene directory or OBJ mesh; evaluation is skipped without it.
    #[serde(default)]
    pub ground_truth: Option<PathBuf>,
    pub out: PathBuf,
    #[serde(default)]
    pub overlay_svg: bool,
    #[serde(default)]
    pub reorg: ReorgParams,
    #[serde(default)]
    pub hypothesis: HypothesisParams,
    #[serde(default)]
    pub loft: LoftParams,
    #[serde(default)]
    pub occlusion: OcclusionParams,
    #[serde(default)]
    pub eval: EvalParams,
}

impl PipelineConfig {
    /// Config with default parameters.
    pub fn new(drawing: impl Into<PathBuf>, cameras: impl Into<PathBuf>, out: impl Into<PathBuf>) -> Self {
        PipelineConfig {
            schema: SCHEMA,
            drawing: drawing.into(),
            cameras: cameras.into(),
            ground_truth: None,
            out: out.into(),
            overlay_svg: false,
            reorg: ReorgParams::default(),
            hypothesis: HypothesisParams::default(),
            loft: LoftParams::default(),
            occlusion: OcclusionParams::default(),
            eval: EvalParams::default(),
        }
    }

    /// Reads a config file. Relative paths are taken from the file's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg: PipelineConfig = serde_json::from_str(&text).map_err(|e| Error::json(path, e))?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [&mut cfg.drawing, &mut cfg.cameras, &mut cfg.out] {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        if let Some(gt) = cfg.ground_truth.as_mut().filter(|p| p.is_relative()) {
            *gt = base.join(&*gt);
        }
        Ok(cfg)
    }

    /// Schema, parameter and input-path checks.
    pub fn validate(&self) -> Result<()> {
        if self.schema != SCHEMA {
            return Err(Error::InvalidParams(format!(
                "unsupported config schema {}, expected {SCHEMA}",
                self.schema
            )));
        }
        self.reorg.validate()?;
        self.hypothesis.validate()?;
        self.loft.validate()?;
        self.occlusion.validate()?;
        self.eval.validate()?;
        for p in [Some(&self.drawing), Some(&self.cameras), self.ground_truth.as_ref()]
            .into_iter()
            .flatten()
        {
            if !p.exists() {
                return Err(Error::Io {
                    path: p.clone(),
                    source: std::io::Error::new(std::io::ErrorKind::NotFound, "input not found"),
                });
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PipelineStage {
    Config,
    Reorg,
    Hypothesize,
    Verify,
    Cleanup,
    Eval,
}

impl PipelineStage {
    pub fn name(self) -> &'static str {
        match self {
            PipelineStage::Config => "config",
            PipelineStage::Reorg => "reorg",
            PipelineStage::Hypothesize => "hypothesize",
            PipelineStage::Verify => "verify",
            PipelineStage::Cleanup => "cleanup",
            PipelineStage::Eval => "eval",
        }
    }

    pub fn exit_code(self) -> i32 {
        match self {
            PipelineStage::Config => 2,
            PipelineStage::Reorg => 3,
            PipelineStage::Hypothesize => 4,
            PipelineStage::Verify => 5,
            PipelineStage::Cleanup => 6,
            PipelineStage::Eval => 7,
        }
    }
}

impl std::fmt::Display for PipelineStage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, thiserror::Error)]
#[error("{stage} stage failed: {source}")]
pub struct PipelineError {
    pub stage: PipelineStage,
    #[source]
    pub source: Error,
}

impl PipelineError {
    pub fn exit_code(&self) -> i32 {
        self.stage.exit_code()
    }
}

trait AtStage<T> {
    fn at(self, stage: PipelineStage) -> std::result::Result<T, PipelineError>;
}

impl<T> AtStage<T> for Result<T> {
    fn at(self, stage: PipelineStage) -> std::result::Result<T, PipelineError> {
        self.map_err(|source| PipelineError { stage, source })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HypothesisEntry {
    pub id: u64,
    pub source_fragment_ids: Vec<u64>,
    pub pairing: crate::loft::Pairing,
    pub status: Status,
    pub status_history: Vec<Status>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StageCounts {
    pub fragments_in: usize,
    pub fragments_out: usize,
    pub formed: usize,
    pub confirmed: usize,
    pub rejected: usize,
    pub unverifiable: usize,
    pub hidden: usize,
    pub redundant: usize,
    pub surviving: usize,
}

/// Everything a run produced, as written to `manifest.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema: u32,
    pub config: PipelineConfig,
    pub counts: StageCounts,
    pub occluding_fraction: f64,
    pub hypotheses: Vec<HypothesisEntry>,
    pub pr: Vec<PrPoint>,
}

/// In-memory results of a run.
#[derive(Clone, Debug)]
pub struct PipelineOutput {
    pub manifest: RunManifest,
    pub hypotheses: Vec<SurfaceHypothesis>,
    pub records: Vec<OcclusionRecord>,
}

struct RunLog {
    file: fs::File,
    start: Instant,
}

impl RunLog {
    fn event(&mut self, stage: PipelineStage, mut fields: serde_json::Value) {
        if let Some(map) = fields.as_object_mut() {
            map.insert("stage".into(), json!(stage.name()));
            map.insert("elapsed_ms".into(), json!(self.start.elapsed().as_millis() as u64));
        }
        log::info!("{stage}: {fields}");
        // The log is advisory; a failed write must not abort the run.
        let _ = writeln!(self.file, "{fields}");
    }
}

fn mkdir(p: &Path) -> Result<()> {
    fs::create_dir_all(p).map_err(|e| Error::io(p, e))
}

fn to_json<T: Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("pipeline artifacts serialize")
}

fn count(hyps: &[SurfaceHypothesis], status: Status) -> usize {
    hyps.iter().filter(|h| h.status == status).count()
}

/// Runs reorg, hypothesis formation, verification, cleanup and (with ground
/// truth) evaluation, writing artifacts under `config.out`.
///
/// Inputs are checked before anything is written. A failing stage leaves the
/// artifacts of earlier stages in place.
pub fn run_pipeline(config: &PipelineConfig) -> std::result::Result<PipelineOutput, PipelineError> {
    use PipelineStage::*;
    config.validate().at(Config)?;
    let drawing = load_drawing(&config.drawing).at(Config)?;
    let views = load_cameras(&config.cameras).at(Config)?;
    let target = config
        .ground_truth
        .as_ref()
        .map(EvalTarget::load)
        .transpose()
        .at(Config)?;

    let out = &config.out;
    mkdir(out).at(Config)?;
    let log_path = out.join("log.jsonl");
    let file = fs::File::create(&log_path)
        .map_err(|e| Error::io(&log_path, e))
        .at(Config)?;
    let mut log = RunLog {
        file,
        start: Instant::now(),
    };
    let mut counts = StageCounts {
        fragments_in: drawing.fragments.len(),
        ..Default::default()
    };

    let (reorganized, report) = reorganize(&drawing, &config.reorg).at(Reorg)?;
    let dir = out.join("01_reorg");
    mkdir(&dir).at(Reorg)?;
    save_drawing(dir.join("drawing.json"), &reorganized).at(Reorg)?;
    write_text(dir.join("report.json"), &to_json(&report)).at(Reorg)?;
    counts.fragments_out = reorganized.fragments.len();
    log.event(
        Reorg,
        json!({"fragments_in": counts.fragments_in, "fragments_out": counts.fragments_out}),
    );

    let formed = form_hypotheses(&reorganized, &views, &config.hypothesis, &config.loft).at(Hypothesize)?;
    save_hypotheses(out.join("02_hyps"), &formed).at(Hypothesize)?;
    counts.formed = formed.len();
    log.event(Hypothesize, json!({"formed": counts.formed}));

    let (verified, records) = verify(&formed, &reorganized, &views, &config.occlusion).at(Verify)?;
    let dir = out.join("03_verified");
    save_hypotheses(&dir, &verified).at(Verify)?;
    write_text(dir.join("records.json"), &to_json(&records)).at(Verify)?;
    if config.overlay_svg {
        let svg_dir = dir.join("overlays");
        mkdir(&svg_dir).at(Verify)?;
        for v in &views {
            let svg = overlay_svg(v, &verified, &reorganized, &records, &config.occlusion);
            write_text(svg_dir.join(format!("view_{:03}.svg", v.id)), &svg).at(Verify)?;
        }
    }
    counts.confirmed = count(&verified, Status::Confirmed);
    counts.rejected = count(&verified, Status::Rejected);
    counts.unverifiable = count(&verified, Status::Unverifiable);
    let occluding_fraction = crate::occlusion::occluding_fraction(&formed, &records);
    log.event(
        Verify,
        json!({"confirmed": counts.confirmed, "rejected": counts.rejected, "unverifiable": counts.unverifiable,
               "records": records.len(), "occluding_fraction": occluding_fraction}),
    );

    let visible = drop_fully_hidden(&verified, &views, &config.occlusion).at(Cleanup)?;
    let cleaned = dedup_hypotheses(&visible, &config.occlusion).at(Cleanup)?;
    save_hypotheses(out.join("04_final"), &cleaned).at(Cleanup)?;
    counts.hidden = count(&cleaned, Status::Hidden);
    counts.redundant = count(&cleaned, Status::Redundant);
    counts.surviving = cleaned.iter().filter(|h| config.occlusion.survives(h.status)).count();
    log.event(
        Cleanup,
        json!({"hidden": counts.hidden, "redundant": counts.redundant, "surviving": counts.surviving}),
    );

    let mut pr = Vec::new();
    if let Some(target) = &target {
        let survives = |s: Status| config.occlusion.survives(s);
        pr = evaluate_stages(&cleaned, target, survives, &config.eval).at(Eval)?;
        let dir = out.join("eval");
        mkdir(&dir).at(Eval)?;
        write_pr_csv(dir.join("pr.csv"), &pr).at(Eval)?;
        write_text(dir.join("pr.svg"), &pr_svg(&pr)).at(Eval)?;
        write_text(dir.join("summary.json"), &to_json(&pr)).at(Eval)?;
        let at = |stage: Stage| {
            pr.iter()
                .filter(|p| p.stage == stage)
                .map(|p| json!({"tau": p.tau, "precision": p.precision, "recall": p.recall}))
                .collect::<Vec<_>>()
        };
        log.event(Eval, json!({"cleaned": at(Stage::Cleaned)}));
    }

    let manifest = RunManifest {
        schema: SCHEMA,
        config: config.clone(),
        counts,
        occluding_fraction,
        hypotheses: cleaned
            .iter()
            .map(|h| HypothesisEntry {
                id: h.id,
                source_fragment_ids: h.source_fragment_ids.clone(),
                pairing: h.pairing,
                status: h.status,
                status_history: h.status_history.clone(),
            })
            .collect(),
        pr,
    };
    write_text(out.join("manifest.json"), &to_json(&manifest)).at(Eval)?;
    Ok(PipelineOutput {
        manifest,
        hypotheses: cleaned,
        records,
    })
}
