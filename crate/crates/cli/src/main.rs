use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::Deserialize;

use curveloft::curve_graph::{load_cameras, load_drawing, save_drawing};
use curveloft::eval::{evaluate_stages, pr_svg, write_pr_csv, EvalParams, EvalTarget};
use curveloft::hypothesis::{form_hypotheses, load_hypotheses, save_hypotheses, HypothesisParams, Status};
use curveloft::loft::{loft_closed, loft_pair, LoftParams, Pairing};
use curveloft::mesh::write_text;
use curveloft::occlusion::{overlay_svg, verify, OcclusionParams};
use curveloft::pipeline::{run_pipeline, PipelineConfig};
use curveloft::reorg::{reorganize, ReorgParams};
use curveloft::synth::{generate, save_scene, Defects, SceneKind, SceneSpec};

/// Exit code for unreadable or invalid inputs.
const CONFIG_ERROR: u8 = 2;

#[derive(Parser)]
#[command(
    name = "curveloft",
    version,
    about = "Surface hypotheses for multiview 3D curve drawings"
)]
struct Cli {
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Log level filter, e.g. info or debug.
    #[arg(long, global = true, default_value = "warn")]
    log: String,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic scene with ground truth.
    Synth(SynthArgs),
    /// Reorganize a curve drawing.
    Reorg(ReorgArgs),
    /// Loft a patch over one closed or two open curves.
    Loft(LoftArgs),
    /// Form surface hypotheses from a reorganized drawing.
    Hypothesize(HypothesizeArgs),
    /// Verify hypotheses by occlusion reasoning.
    Verify(VerifyArgs),
    /// Precision-recall of hypothesis stages against ground truth.
    Evaluate(EvaluateArgs),
    /// Run every stage from a config file.
    Pipeline(PipelineArgs),
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, default_value = "house")]
    scene: String,
    #[arg(long)]
    views: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Defect preset: none or moderate.
    #[arg(long, default_value = "moderate")]
    defects: String,
    /// Full scene spec as JSON; overrides the other options.
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ReorgArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    params: Option<PathBuf>,
    /// Where to write the per-round report.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct LoftArgs {
    /// Drawing holding one closed fragment or two open ones.
    #[arg(long)]
    curves: PathBuf,
    /// parallel, antiparallel or closed.
    #[arg(long)]
    pairing: String,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    params: Option<PathBuf>,
}

#[derive(Args)]
struct HypothesizeArgs {
    #[arg(long)]
    drawing: PathBuf,
    #[arg(long)]
    cameras: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    params: Option<PathBuf>,
    #[arg(long)]
    loft_params: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    hyps: PathBuf,
    #[arg(long)]
    drawing: PathBuf,
    #[arg(long)]
    cameras: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    records: Option<PathBuf>,
    #[arg(long)]
    params: Option<PathBuf>,
    /// Directory for one SVG overlay per view.
    #[arg(long)]
    overlay_svg: Option<PathBuf>,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Hypothesis directory holding meshes and a manifest.
    #[arg(long)]
    result: PathBuf,
    /// Scene directory or ground-truth OBJ.
    #[arg(long)]
    gt: PathBuf,
    /// Manifest with status histories; defaults to the one in `--result`.
    #[arg(long)]
    stages: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    plot: Option<PathBuf>,
    #[arg(long)]
    params: Option<PathBuf>,
    /// Count only confirmed hypotheses as surviving.
    #[arg(long)]
    drop_unverifiable: bool,
}

#[derive(Args)]
struct PipelineArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    overlay_svg: bool,
}

/// An error carrying the exit code to report.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

impl<E: Into<anyhow::Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure {
            code: 1,
            error: e.into(),
        }
    }
}

type Outcome = std::result::Result<(), Failure>;

/// Tags an input or parameter error with the config exit code.
fn input<T, E: Into<anyhow::Error>>(r: std::result::Result<T, E>) -> std::result::Result<T, Failure> {
    r.map_err(|e| Failure {
        code: CONFIG_ERROR,
        error: e.into(),
    })
}

fn invalid(msg: String) -> Failure {
    Failure {
        code: CONFIG_ERROR,
        error: anyhow::Error::msg(msg),
    }
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn params_or_default<T: DeserializeOwned + Default>(path: Option<&PathBuf>) -> Result<T> {
    path.map_or_else(|| Ok(T::default()), |p| read_json(p))
}

fn sidecar(path: &Path) -> PathBuf {
    path.with_extension("json")
}

fn run_synth(a: &SynthArgs) -> Outcome {
    let spec = input((|| {
        if let Some(p) = &a.spec {
            return read_json::<SceneSpec>(p);
        }
        let kind: SceneKind = a.scene.parse()?;
        let mut spec = SceneSpec::for_scene(kind);
        if let Some(v) = a.views {
            spec.n_views = v;
        }
        if let Some(s) = a.seed {
            spec.rng_seed = s;
        }
        spec.defects = match a.defects.as_str() {
            "none" => Defects::none(),
            "moderate" => Defects::moderate(),
            other => bail!("unknown defect preset {other:?}"),
        };
        spec.validate()?;
        Ok(spec)
    })())?;
    let (drawing, views, gt) = generate(&spec)?;
    save_scene(&a.out, &spec, &drawing, &views, &gt)?;
    let mut run = PipelineConfig::new("drawing.json", "cameras.json", "run");
    run.ground_truth = Some(".".into());
    write_text(a.out.join("run.json"), &serde_json::to_string_pretty(&run)?)?;
    println!(
        "{} fragments, {} views, {} veridical edges -> {}",
        drawing.fragments.len(),
        views.len(),
        gt.veridical_count(),
        a.out.display()
    );
    Ok(())
}

fn run_reorg(a: &ReorgArgs) -> Outcome {
    let drawing = input(load_drawing(&a.input))?;
    let params: ReorgParams = input(params_or_default(a.params.as_ref()))?;
    let (out, report) = reorganize(&drawing, &params)?;
    save_drawing(&a.out, &out)?;
    if let Some(p) = &a.report {
        write_text(p, &serde_json::to_string_pretty(&report)?)?;
    }
    println!("{} -> {} fragments", drawing.fragments.len(), out.fragments.len());
    Ok(())
}

fn run_loft(a: &LoftArgs) -> Outcome {
    let drawing = input(load_drawing(&a.curves))?;
    let pairing: Pairing = input(a.pairing.parse())?;
    let params: LoftParams = input(params_or_default(a.params.as_ref()))?;
    let f = &drawing.fragments;
    let result = match (pairing, f.len()) {
        (Pairing::Closed, 1) => loft_closed(&f[0], &params),
        (Pairing::Closed, n) => return Err(invalid(format!("closed pairing needs 1 fragment, got {n}"))),
        (p, 2) => loft_pair(&f[0], &f[1], p, &params),
        (_, n) => {
            return Err(invalid(format!(
                "{} pairing needs 2 fragments, got {n}",
                pairing.name()
            )))
        }
    };
    let result = result?;
    write_text(&a.out, &result.mesh.to_obj())?;
    write_text(sidecar(&a.out), &serde_json::to_string_pretty(&result.summary())?)?;
    println!(
        "boundary_deviation {:.3e} m, mean |K| {:.3e}, degenerate {}",
        result.boundary_deviation, result.mean_abs_k, result.degenerate
    );
    Ok(())
}

fn run_hypothesize(a: &HypothesizeArgs) -> Outcome {
    let drawing = input(load_drawing(&a.drawing))?;
    let views = input(load_cameras(&a.cameras))?;
    let params: HypothesisParams = input(params_or_default(a.params.as_ref()))?;
    let loft: LoftParams = input(params_or_default(a.loft_params.as_ref()))?;
    let hyps = form_hypotheses(&drawing, &views, &params, &loft)?;
    save_hypotheses(&a.out, &hyps)?;
    println!("{} hypotheses -> {}", hyps.len(), a.out.display());
    Ok(())
}

fn run_verify(a: &VerifyArgs) -> Outcome {
    let hyps = input(load_hypotheses(&a.hyps))?;
    let drawing = input(load_drawing(&a.drawing))?;
    let views = input(load_cameras(&a.cameras))?;
    let params: OcclusionParams = input(params_or_default(a.params.as_ref()))?;
    let (verified, records) = verify(&hyps, &drawing, &views, &params)?;
    save_hypotheses(&a.out, &verified)?;
    let records_path = a.records.clone().unwrap_or_else(|| a.out.join("records.json"));
    write_text(&records_path, &serde_json::to_string_pretty(&records)?)?;
    if let Some(dir) = &a.overlay_svg {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        for v in &views {
            let svg = overlay_svg(v, &verified, &drawing, &records, &params);
            write_text(dir.join(format!("view_{:03}.svg", v.id)), &svg)?;
        }
    }
    let n = |s: Status| verified.iter().filter(|h| h.status == s).count();
    println!(
        "confirmed {}, rejected {}, unverifiable {}",
        n(Status::Confirmed),
        n(Status::Rejected),
        n(Status::Unverifiable)
    );
    Ok(())
}

#[derive(Deserialize)]
struct StageEntry {
    id: u64,
    status: Status,
    status_history: Vec<Status>,
}

#[derive(Deserialize)]
struct StageFile {
    hypotheses: Vec<StageEntry>,
}

fn run_evaluate(a: &EvaluateArgs) -> Outcome {
    let mut hyps = input(load_hypotheses(&a.result))?;
    if let Some(p) = &a.stages {
        let file: StageFile = input(read_json(p))?;
        for h in &mut hyps {
            let entry = file.hypotheses.iter().find(|e| e.id == h.id);
            let Some(e) = entry else {
                return Err(invalid(format!("hypothesis {} missing from {}", h.id, p.display())));
            };
            h.status = e.status;
            h.status_history = e.status_history.clone();
        }
    }
    let target = input(EvalTarget::load(&a.gt))?;
    let params: EvalParams = input(params_or_default(a.params.as_ref()))?;
    let keep = OcclusionParams {
        keep_unverifiable: !a.drop_unverifiable,
        ..OcclusionParams::default()
    };
    let pr = evaluate_stages(&hyps, &target, |s| keep.survives(s), &params)?;
    write_pr_csv(&a.out, &pr)?;
    if let Some(p) = &a.plot {
        write_text(p, &pr_svg(&pr))?;
    }
    for p in &pr {
        println!(
            "{:<10} tau {:.4} precision {:.3} recall {:.3}",
            p.stage.name(),
            p.tau,
            p.precision,
            p.recall
        );
    }
    Ok(())
}

fn run_pipeline_cmd(a: &PipelineArgs) -> Outcome {
    let mut config = input(PipelineConfig::load(&a.config))?;
    config.overlay_svg |= a.overlay_svg;
    match run_pipeline(&config) {
        Ok(out) => {
            let c = &out.manifest.counts;
            println!(
                "fragments {} -> {}, formed {}, confirmed {}, rejected {}, unverifiable {}, hidden {}, redundant {}, surviving {}",
                c.fragments_in,
                c.fragments_out,
                c.formed,
                c.confirmed,
                c.rejected,
                c.unverifiable,
                c.hidden,
                c.redundant,
                c.surviving
            );
            Ok(())
        }
        Err(e) => Err(Failure {
            code: e.exit_code() as u8,
            error: e.into(),
        }),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::new().parse_filters(&cli.log).init();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot set up {n} threads: {e}");
            return ExitCode::from(CONFIG_ERROR);
        }
    }
    let result = match &cli.command {
        Command::Synth(a) => run_synth(a),
        Command::Reorg(a) => run_reorg(a),
        Command::Loft(a) => run_loft(a),
        Command::Hypothesize(a) => run_hypothesize(a),
        Command::Verify(a) => run_verify(a),
        Command::Evaluate(a) => run_evaluate(a),
        Command::Pipeline(a) => run_pipeline_cmd(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}
