//! The `resim` command line.
//!
//! Usage errors exit with 2, runtime failures with 1. Every subcommand takes
//! `--config <file.json>` (see [`crate::config`]) and `--seed`; flags win
//! over the file.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::config::RunConfig;
use crate::eval::run_benchmark;
use crate::formats::{load_depth, save_depth, write_json};
use crate::neural::{load_depthnet, load_trajnet, save_depthnet, save_regressor, save_trajnet, write_history, RegressionTarget};
use crate::pipeline::{
    history_file, regressor_file, run_pipeline, train_baseline, train_depth_stage, train_finetune_stage,
    train_initial_trajnet, train_pipeline, ModelDir, DEPTHNET_FILE, FINETUNED_FILE, TRAJNET_FILE,
};
use crate::render::render_overlay;
use crate::scenegen::{build_dataset, simulate_depth, Dataset, NoiseDistribution, RecordMeta, Split};
use crate::simulator::Trajectory;
use crate::{Error, Result};

#[derive(Debug, Parser)]
#[command(name = "resim", version, about = "Simulate, correct and render ball trajectories over depth maps")]
struct Cli {
    /// JSON run configuration; missing fields take defaults.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Master seed for data generation and training.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a dataset of scenes, depth maps and trajectories.
    Gen(GenArgs),
    /// Simulate the ball over one depth map.
    Simulate(SimulateArgs),
    /// Train the trajectory update network.
    TrainTraj(TrainTrajArgs),
    /// Train the depth correction network.
    TrainDepth(TrainArgs),
    /// Train every stage and the regression baselines.
    Train(TrainArgs),
    /// Score every method on the test split.
    Eval(EvalArgs),
    /// Draw a trajectory over a shaded depth map.
    Render(RenderArgs),
    /// Correct one record end to end and render the result.
    Pipeline(PipelineArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum NoisePreset {
    Default,
    Identity,
    ScaleDominant,
}

#[derive(Debug, Args)]
struct GenArgs {
    /// Output directory [default: paths.data].
    #[arg(long)]
    out: Option<PathBuf>,
    /// Number of records.
    #[arg(long)]
    n: Option<usize>,
    /// Replace the configured corruption distribution.
    #[arg(long, value_enum)]
    noise: Option<NoisePreset>,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// Depth map (PFM).
    #[arg(long)]
    depth: PathBuf,
    /// Intrinsics JSON [default: intrinsics.json next to the depth map].
    #[arg(long)]
    intrinsics: Option<PathBuf>,
    /// Record metadata supplying launch state and simulator settings
    /// [default: meta.json next to the depth map if present, else the config].
    #[arg(long)]
    meta: Option<PathBuf>,
    /// Trajectory JSON to write.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct TrainArgs {
    /// Dataset directory [default: paths.data].
    #[arg(long)]
    data: Option<PathBuf>,
    /// Checkpoint directory [default: paths.models].
    #[arg(long)]
    models: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum TrajStage {
    /// On trajectories simulated over the noisy depth.
    Initial,
    /// Warm-started from the initial stage, on depth-corrected trajectories.
    Finetune,
}

#[derive(Debug, Args)]
struct TrainTrajArgs {
    #[command(flatten)]
    common: TrainArgs,
    #[arg(long, value_enum, default_value = "initial")]
    stage: TrajStage,
    /// With the initial stage, also train the two regression baselines.
    #[arg(long)]
    baselines: bool,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[command(flatten)]
    common: TrainArgs,
    /// Report directory [default: paths.out].
    #[arg(long)]
    out: Option<PathBuf>,
    /// Exit with 1 unless every expected ordering holds.
    #[arg(long)]
    assert_orderings: bool,
}

#[derive(Debug, Args)]
struct RenderArgs {
    /// Depth map (PFM) to shade as the background.
    #[arg(long)]
    depth: PathBuf,
    /// Intrinsics JSON [default: intrinsics.json next to the depth map].
    #[arg(long)]
    intrinsics: Option<PathBuf>,
    /// Trajectory JSON.
    #[arg(long)]
    traj: PathBuf,
    /// Output directory for frames/ and composite.ppm.
    #[arg(long)]
    out: PathBuf,
    /// Ball radius in meters.
    #[arg(long, default_value_t = 0.1)]
    radius: f64,
    /// Output pixels per depth pixel [default: render.scale].
    #[arg(long)]
    scale: Option<usize>,
}

#[derive(Debug, Args)]
struct PipelineArgs {
    #[command(flatten)]
    common: TrainArgs,
    /// Record id, e.g. 000042.
    #[arg(long)]
    record: String,
    /// Output root; artifacts go to <out>/<record>/ [default: paths.out].
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn execute(cli: Cli) -> Result<()> {
    let cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    }
    .with_seed(cli.seed);
    match cli.command {
        Command::Gen(a) => gen(cfg, a),
        Command::Simulate(a) => simulate(&cfg, a),
        Command::TrainTraj(a) => train_traj(&cfg, a),
        Command::TrainDepth(a) => train_depth(&cfg, a),
        Command::Train(a) => train_all(&cfg, a),
        Command::Eval(a) => eval(&cfg, a),
        Command::Render(a) => render(&cfg, a),
        Command::Pipeline(a) => pipeline(&cfg, a),
    }
}

fn sibling(path: &Path, name: &str) -> PathBuf {
    path.with_file_name(name)
}

fn gen(mut cfg: RunConfig, a: GenArgs) -> Result<()> {
    if let Some(n) = a.n {
        cfg.dataset.n = n;
    }
    if let Some(p) = a.noise {
        cfg.dataset.noise = match p {
            NoisePreset::Default => NoiseDistribution::default(),
            NoisePreset::Identity => NoiseDistribution::identity(),
            NoisePreset::ScaleDominant => NoiseDistribution::scale_dominant(),
        };
    }
    let out = a.out.unwrap_or(cfg.paths.data);
    let manifest = build_dataset(&cfg.dataset, &out)?;
    println!(
        "wrote {} records to {} (train {}, val {}, test {})",
        manifest.n,
        out.display(),
        manifest.splits.train.len(),
        manifest.splits.val.len(),
        manifest.splits.test.len()
    );
    Ok(())
}

fn simulate(cfg: &RunConfig, a: SimulateArgs) -> Result<()> {
    let intr = a.intrinsics.unwrap_or_else(|| sibling(&a.depth, "intrinsics.json"));
    let depth = load_depth(&a.depth, &intr)?;
    let meta_path = a.meta.or_else(|| Some(sibling(&a.depth, "meta.json")).filter(|p| p.exists()));
    let traj = match meta_path {
        Some(p) => {
            let meta: RecordMeta = crate::formats::read_json(&p)?;
            simulate_depth(&depth, &meta.rho, &meta.sim, meta.discontinuity_threshold)?
        }
        None => simulate_depth(&depth, &cfg.dataset.rho, &cfg.dataset.sim_config(), cfg.dataset.discontinuity_threshold)?,
    };
    traj.save_json(&a.out)?;
    println!("wrote {} samples to {}", traj.len(), a.out.display());
    Ok(())
}

struct Loaded {
    train: Vec<crate::scenegen::SceneSample>,
    val: Vec<crate::scenegen::SceneSample>,
    models: PathBuf,
}

fn load_training(cfg: &RunConfig, a: TrainArgs) -> Result<Loaded> {
    let ds = Dataset::open(&a.data.unwrap_or_else(|| cfg.paths.data.clone()))?;
    let models = a.models.unwrap_or_else(|| cfg.paths.models.clone());
    fs::create_dir_all(&models).map_err(|e| Error::io(&models, e))?;
    Ok(Loaded {
        train: ds.load_split(Split::Train)?,
        val: ds.load_split(Split::Val)?,
        models,
    })
}

fn train_traj(cfg: &RunConfig, a: TrainTrajArgs) -> Result<()> {
    let l = load_training(cfg, a.common)?;
    let t = &cfg.training;
    match a.stage {
        TrajStage::Initial => {
            let r = train_initial_trajnet(&l.train, &l.val, &t.trajnet)?;
            save_trajnet(&l.models.join(TRAJNET_FILE), &r.model, &r.disc, r.best_epoch, &t.trajnet)?;
            write_history(&l.models.join(history_file(TRAJNET_FILE)), &r.history)?;
            println!("trajnet: best epoch {}", r.best_epoch);
            if a.baselines {
                for target in [RegressionTarget::Positions3d, RegressionTarget::Pixels2d] {
                    let file = regressor_file(target);
                    let r = train_baseline(&l.train, &l.val, target, &t.regression)?;
                    save_regressor(&l.models.join(file), &r.model, r.best_epoch, &t.regression)?;
                    write_history(&l.models.join(history_file(file)), &r.history)?;
                    println!("{file}: best epoch {}", r.best_epoch);
                }
            }
        }
        TrajStage::Finetune => {
            let (g1, d1) = load_trajnet(&l.models.join(TRAJNET_FILE))?;
            let h = load_depthnet(&l.models.join(DEPTHNET_FILE))?;
            let r = train_finetune_stage(&g1, &d1, &h, &l.train, &l.val, &t.finetune)?;
            save_trajnet(&l.models.join(FINETUNED_FILE), &r.model, &r.disc, r.best_epoch, &t.finetune)?;
            write_history(&l.models.join(history_file(FINETUNED_FILE)), &r.history)?;
            println!("finetune: best epoch {}", r.best_epoch);
        }
    }
    Ok(())
}

fn train_depth(cfg: &RunConfig, a: TrainArgs) -> Result<()> {
    let l = load_training(cfg, a)?;
    let models = ModelDir::load(&l.models)?;
    let g1 = models.require_trajnet()?;
    let t = &cfg.training.depthnet;
    let r = train_depth_stage(g1, &l.train, &l.val, t)?;
    save_depthnet(&l.models.join(DEPTHNET_FILE), &r.model, r.best_epoch, t)?;
    write_history(&l.models.join(history_file(DEPTHNET_FILE)), &r.history)?;
    println!("depthnet: best epoch {}", r.best_epoch);
    Ok(())
}

fn train_all(cfg: &RunConfig, a: TrainArgs) -> Result<()> {
    let l = load_training(cfg, a)?;
    train_pipeline(&l.train, &l.val, &cfg.training, Some(&l.models))?;
    println!("checkpoints in {}", l.models.display());
    Ok(())
}

fn eval(cfg: &RunConfig, a: EvalArgs) -> Result<()> {
    let ds = Dataset::open(&a.common.data.unwrap_or_else(|| cfg.paths.data.clone()))?;
    let models = ModelDir::load(&a.common.models.unwrap_or_else(|| cfg.paths.models.clone()))?;
    let train = ds.load_split(Split::Train)?;
    let test = ds.load_split(Split::Test)?;
    let report = run_benchmark(&train, &test, &models, &cfg.benchmark)?;
    let out = a.out.unwrap_or_else(|| cfg.paths.out.clone());
    fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;
    report.save(&out.join("report.json"), &out.join("report.txt"))?;
    print!("{}", report.to_table());
    let checks = report.check_orderings();
    for c in &checks {
        println!("{} {}", if c.holds { "ok  " } else { "FAIL" }, c.description);
    }
    if a.assert_orderings && !checks.iter().all(|c| c.holds) {
        return Err(Error::InvalidInput("expected method ordering does not hold".into()));
    }
    Ok(())
}

fn render(cfg: &RunConfig, a: RenderArgs) -> Result<()> {
    let intr = a.intrinsics.unwrap_or_else(|| sibling(&a.depth, "intrinsics.json"));
    let depth = load_depth(&a.depth, &intr)?;
    let traj = Trajectory::load_json(&a.traj)?;
    let files = render_overlay(&depth, &traj, a.radius, a.scale.unwrap_or(cfg.render.scale), &a.out)?;
    println!("wrote {} images to {}", files.len(), a.out.display());
    Ok(())
}

fn pipeline(cfg: &RunConfig, a: PipelineArgs) -> Result<()> {
    let ds = Dataset::open(&a.common.data.unwrap_or_else(|| cfg.paths.data.clone()))?;
    let models = ModelDir::load(&a.common.models.unwrap_or_else(|| cfg.paths.models.clone()))?;
    let sample = ds.load_record(&a.record)?;
    let out = a.out.unwrap_or_else(|| cfg.paths.out.clone()).join(sample.id());
    let result = run_pipeline(
        models.require_trajnet()?,
        models.require_depthnet()?,
        models.require_final_trajnet()?,
        std::slice::from_ref(&sample),
    )?
    .remove(0);
    fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;
    save_depth(&result.correction.depth, &out.join("corrected.pfm"), &out.join("intrinsics.json"))?;
    result.initial.save_json(&out.join("traj_initial.json"))?;
    result.correction.trajectory.save_json(&out.join("traj_resimulated.json"))?;
    result.final_trajectory.save_json(&out.join("traj_final.json"))?;
    write_json(
        &out.join("depth_range.json"),
        &serde_json::json!({ "z_min": result.correction.range.0, "z_max": result.correction.range.1 }),
    )?;
    render_overlay(&sample.gt_depth, &result.final_trajectory, sample.rho().radius, cfg.render.scale, &out)?;
    println!("wrote {}", out.display());
    Ok(())
}
