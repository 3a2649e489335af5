//! Three-stage training and inference of the full correction pipeline.
//!
//! Stage 1 trains the trajectory update network `G` on trajectories
//! simulated over the noisy depth. Stage 2 trains the depth correction
//! network `H` with `G` frozen; `H` sees `G`'s output on the initial
//! trajectory. Stage 3 fine-tunes a copy of `G` on trajectories
//! re-simulated over `H`-corrected depth.
//!
//! At inference the corrected trajectory is
//! `G3(simulate(rescale(noisy, H(desc_I, desc_Z0, G1(X0)))))`.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::eval::estimate_contact_times;
use crate::geometry::{project_point, rescale_depth, DepthMap};
use crate::neural::{
    encode_scene, load_depthnet, load_regressor, load_trajnet, save_depthnet, save_regressor,
    save_trajnet, train_depthnet, train_regressor, train_trajnet, write_history, DepthExample,
    DepthModel, EpochLog, RegressionExample, RegressionModel, RegressionTarget, TrainConfig,
    TrainedDepthNet, TrainedRegressor, TrainedTrajNet, TrajExample, TrajectoryModel, TwoStageNet,
};
use crate::scenegen::SceneSample;
use crate::simulator::Trajectory;
use crate::{Error, Result, Vec3};

pub const TRAJNET_FILE: &str = "trajnet.ckpt";
pub const DEPTHNET_FILE: &str = "depthnet.ckpt";
pub const FINETUNED_FILE: &str = "trajnet_finetuned.ckpt";
pub const REGRESS_3D_FILE: &str = "regress3d.ckpt";
pub const REGRESS_2D_FILE: &str = "regress2d.ckpt";

/// Smallest depth a trajectory point may have before it is projected.
pub const MIN_PROJECTION_DEPTH: f64 = 0.01;

/// Training schedules for every network in the pipeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub trajnet: TrainConfig,
    pub depthnet: TrainConfig,
    pub finetune: TrainConfig,
    pub regression: TrainConfig,
    /// Run stage 3; without it the stage-1 network finishes the pipeline.
    pub finetune_enabled: bool,
    /// Also train the two descriptor-only regression baselines.
    pub train_baselines: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            trajnet: TrainConfig::default(),
            depthnet: TrainConfig::default(),
            finetune: TrainConfig {
                epochs: 200,
                anneal_epochs: 40,
                ..TrainConfig::default()
            },
            regression: TrainConfig::default(),
            finetune_enabled: true,
            train_baselines: true,
        }
    }
}

impl PipelineConfig {
    pub fn desk() -> Self {
        Self {
            trajnet: TrainConfig::desk(),
            depthnet: TrainConfig::desk(),
            finetune: TrainConfig {
                epochs: 60,
                anneal_epochs: 12,
                ..TrainConfig::desk()
            },
            regression: TrainConfig::desk(),
            finetune_enabled: true,
            train_baselines: true,
        }
    }

    /// Same schedules with every seed replaced by one derived from `seed`.
    pub fn with_seed(mut self, seed: u64) -> Self {
        for (i, c) in [&mut self.trajnet, &mut self.depthnet, &mut self.finetune, &mut self.regression]
            .into_iter()
            .enumerate()
        {
            c.seed = seed.wrapping_add(i as u64);
        }
        self
    }
}

/// Network inputs derived from one record.
#[derive(Debug, Clone, PartialEq)]
pub struct RecordFeatures {
    /// Stand-in for the image encoding: descriptor of the true geometry.
    pub desc_image: Vec<f64>,
    /// Descriptor of the noisy depth.
    pub desc_depth: Vec<f64>,
    pub initial: Vec<f64>,
    pub gt: Vec<f64>,
}

pub fn record_features(sample: &SceneSample) -> Result<RecordFeatures> {
    Ok(RecordFeatures {
        desc_image: encode_scene(&sample.gt_depth)?.0,
        desc_depth: encode_scene(&sample.noisy_depth)?.0,
        initial: sample.initial_trajectory.flatten(),
        gt: sample.gt_trajectory.flatten(),
    })
}

pub fn features_of(samples: &[SceneSample]) -> Result<Vec<RecordFeatures>> {
    samples.par_iter().map(record_features).collect()
}

/// Flattened pixel coordinates of a trajectory, depth clamped so every
/// point projects.
pub fn pixel_track(traj: &Trajectory, depth: &DepthMap) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(traj.len() * 2);
    for p in &traj.samples {
        let q = Vec3::new(p.x, p.y, p.z.max(MIN_PROJECTION_DEPTH));
        let px = project_point(&q, &depth.intrinsics)?;
        out.extend([px.x, px.y]);
    }
    Ok(out)
}

/// Trajectory from a network's flattened output, with contact times
/// estimated from its positions.
pub fn network_trajectory(flat: &[f64], sample: &SceneSample) -> Result<Trajectory> {
    let mut t = Trajectory::from_flat(sample.sim().sample_rate, flat)?;
    t.contact_times = estimate_contact_times(&t, &sample.sim().gravity);
    Ok(t)
}

fn slices<'a>(rows: impl Iterator<Item = &'a Vec<f64>>) -> Vec<&'a [f64]> {
    rows.map(|v| v.as_slice()).collect()
}

/// Applies `G` at `z = 0` to each trajectory.
pub fn apply_trajnet(model: &TrajectoryModel, trajs: &[&[f64]], descs: &[&[f64]]) -> Result<Vec<Vec<f64>>> {
    let z = vec![0.0; trajs.len()];
    model.apply_flat(trajs, &z, descs)
}

fn depth_examples(g1: &TrajectoryModel, samples: &[SceneSample], feats: &[RecordFeatures]) -> Result<Vec<DepthExample>> {
    let trajs = slices(feats.iter().map(|f| &f.initial));
    let descs = slices(feats.iter().map(|f| &f.desc_image));
    let z = vec![0.0; trajs.len()];
    let g_out = g1.apply_normalized(&trajs, &z, &descs)?;
    Ok(feats
        .iter()
        .zip(samples)
        .zip(g_out.rows())
        .map(|((f, s), g)| DepthExample {
            desc_image: f.desc_image.clone(),
            desc_depth: f.desc_depth.clone(),
            g_out: g.to_vec(),
            target: (s.gt_depth.min(), s.gt_depth.max()),
        })
        .collect())
}

/// Noisy depth rescaled to `H`'s range and the trajectory simulated on it.
#[derive(Debug, Clone, PartialEq)]
pub struct Correction {
    pub range: (f64, f64),
    pub depth: DepthMap,
    pub trajectory: Trajectory,
}

fn correct_one(sample: &SceneSample, range: (f64, f64)) -> Result<Correction> {
    // stored as PFM, so simulate what will be stored
    let mut depth = rescale_depth(&sample.noisy_depth, range.0, range.1)?;
    depth.quantize_f32();
    let trajectory = sample.simulate_on(&depth)?;
    Ok(Correction { range, depth, trajectory })
}

/// Runs `H` on every record and re-simulates over the corrected depth.
pub fn correct_depths(
    g1: &TrajectoryModel,
    h: &DepthModel,
    samples: &[SceneSample],
    feats: &[RecordFeatures],
) -> Result<Vec<Correction>> {
    let ex = depth_examples(g1, samples, feats)?;
    let ranges = h.apply(&ex.iter().collect::<Vec<_>>())?;
    samples
        .par_iter()
        .zip(ranges)
        .map(|(s, r)| correct_one(s, r))
        .collect()
}

fn traj_examples(feats: &[RecordFeatures], initial: Option<&[Correction]>) -> Vec<TrajExample> {
    feats
        .iter()
        .enumerate()
        .map(|(i, f)| TrajExample {
            initial: match initial {
                Some(c) => c[i].trajectory.flatten(),
                None => f.initial.clone(),
            },
            gt: f.gt.clone(),
            desc: f.desc_image.clone(),
        })
        .collect()
}

fn regression_examples(samples: &[SceneSample], feats: &[RecordFeatures], target: RegressionTarget) -> Result<Vec<RegressionExample>> {
    samples
        .iter()
        .zip(feats)
        .map(|(s, f)| {
            let target = match target {
                RegressionTarget::Positions3d => f.gt.clone(),
                RegressionTarget::Pixels2d => pixel_track(&s.gt_trajectory, &s.gt_depth)?,
            };
            Ok(RegressionExample { desc: f.desc_image.clone(), target })
        })
        .collect()
}

/// Every trained network of the pipeline.
#[derive(Debug, Clone)]
pub struct Models {
    pub trajnet: TrajectoryModel,
    pub disc: TwoStageNet,
    pub depthnet: DepthModel,
    /// Stage-3 generator; `None` when fine-tuning was skipped.
    pub finetuned: Option<(TrajectoryModel, TwoStageNet)>,
    pub regress_3d: Option<RegressionModel>,
    pub regress_2d: Option<RegressionModel>,
}

impl Models {
    /// The generator applied after depth correction.
    pub fn final_trajnet(&self) -> &TrajectoryModel {
        self.finetuned.as_ref().map_or(&self.trajnet, |(g, _)| g)
    }
}

/// One record run through the whole pipeline.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineOutput {
    pub initial: Trajectory,
    /// `G1(X0)` without depth correction.
    pub updated_initial: Trajectory,
    pub correction: Correction,
    pub final_trajectory: Trajectory,
}

/// Applies the trained pipeline to a batch of records.
pub fn run_pipeline(
    g1: &TrajectoryModel,
    h: &DepthModel,
    g_final: &TrajectoryModel,
    samples: &[SceneSample],
) -> Result<Vec<PipelineOutput>> {
    let feats = features_of(samples)?;
    let descs = slices(feats.iter().map(|f| &f.desc_image));
    let g0 = apply_trajnet(g1, &slices(feats.iter().map(|f| &f.initial)), &descs)?;
    let corrections = correct_depths(g1, h, samples, &feats)?;
    let xh: Vec<Vec<f64>> = corrections.iter().map(|c| c.trajectory.flatten()).collect();
    let finals = apply_trajnet(g_final, &slices(xh.iter()), &descs)?;
    samples
        .iter()
        .zip(corrections)
        .zip(g0.iter().zip(&finals))
        .map(|((s, c), (a, b))| {
            Ok(PipelineOutput {
                initial: s.initial_trajectory.clone(),
                updated_initial: network_trajectory(a, s)?,
                correction: c,
                final_trajectory: network_trajectory(b, s)?,
            })
        })
        .collect()
}

fn log_stage(name: &str, best_epoch: usize, history: &[EpochLog]) {
    if let Some(best) = history.get(best_epoch) {
        eprintln!("{name}: best epoch {best_epoch}, validation loss {:.4}", best.val_l2);
    }
}

fn sample_rate(train: &[SceneSample], val: &[SceneSample]) -> Result<f64> {
    match (train.first(), val.is_empty()) {
        (Some(s), false) => Ok(s.sim().sample_rate),
        _ => Err(Error::Training("empty training or validation split".into())),
    }
}

/// Stage 1: `G` and `D` on trajectories simulated over the noisy depth.
pub fn train_initial_trajnet(train: &[SceneSample], val: &[SceneSample], cfg: &TrainConfig) -> Result<TrainedTrajNet> {
    let rate = sample_rate(train, val)?;
    let (tf, vf) = (features_of(train)?, features_of(val)?);
    train_trajnet(&traj_examples(&tf, None), &traj_examples(&vf, None), cfg, rate, None)
}

/// Stage 2: `H` with the stage-1 generator frozen.
pub fn train_depth_stage(
    g1: &TrajectoryModel,
    train: &[SceneSample],
    val: &[SceneSample],
    cfg: &TrainConfig,
) -> Result<TrainedDepthNet> {
    sample_rate(train, val)?;
    let (tf, vf) = (features_of(train)?, features_of(val)?);
    train_depthnet(&depth_examples(g1, train, &tf)?, &depth_examples(g1, val, &vf)?, cfg)
}

/// Stage 3: continues `G` and `D` on trajectories re-simulated over
/// `H`-corrected depth.
pub fn train_finetune_stage(
    g1: &TrajectoryModel,
    d1: &TwoStageNet,
    h: &DepthModel,
    train: &[SceneSample],
    val: &[SceneSample],
    cfg: &TrainConfig,
) -> Result<TrainedTrajNet> {
    let rate = sample_rate(train, val)?;
    let (tf, vf) = (features_of(train)?, features_of(val)?);
    let tc = correct_depths(g1, h, train, &tf)?;
    let vc = correct_depths(g1, h, val, &vf)?;
    train_trajnet(&traj_examples(&tf, Some(&tc)), &traj_examples(&vf, Some(&vc)), cfg, rate, Some((g1, d1)))
}

/// A descriptor-only regression baseline.
pub fn train_baseline(
    train: &[SceneSample],
    val: &[SceneSample],
    target: RegressionTarget,
    cfg: &TrainConfig,
) -> Result<TrainedRegressor> {
    let rate = sample_rate(train, val)?;
    let (tf, vf) = (features_of(train)?, features_of(val)?);
    train_regressor(
        &regression_examples(train, &tf, target)?,
        &regression_examples(val, &vf, target)?,
        cfg,
        target,
        rate,
    )
}

pub fn regressor_file(target: RegressionTarget) -> &'static str {
    match target {
        RegressionTarget::Positions3d => REGRESS_3D_FILE,
        RegressionTarget::Pixels2d => REGRESS_2D_FILE,
    }
}

/// Loss-history file written next to a checkpoint.
pub fn history_file(checkpoint: &str) -> String {
    checkpoint.replace(".ckpt", "_loss.csv")
}

/// Trains all stages; when `out_dir` is given, writes each checkpoint and
/// loss history there as soon as its stage finishes.
pub fn train_pipeline(
    train: &[SceneSample],
    val: &[SceneSample],
    cfg: &PipelineConfig,
    out_dir: Option<&Path>,
) -> Result<Models> {
    sample_rate(train, val)?;
    if let Some(dir) = out_dir {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let save_hist = |file: &str, h: &[EpochLog]| match out_dir {
        Some(dir) => write_history(&dir.join(history_file(file)), h),
        None => Ok(()),
    };

    let stage1 = train_initial_trajnet(train, val, &cfg.trajnet)?;
    log_stage("trajnet", stage1.best_epoch, &stage1.history);
    if let Some(dir) = out_dir {
        save_trajnet(&dir.join(TRAJNET_FILE), &stage1.model, &stage1.disc, stage1.best_epoch, &cfg.trajnet)?;
    }
    save_hist(TRAJNET_FILE, &stage1.history)?;

    let stage2 = train_depth_stage(&stage1.model, train, val, &cfg.depthnet)?;
    log_stage("depthnet", stage2.best_epoch, &stage2.history);
    if let Some(dir) = out_dir {
        save_depthnet(&dir.join(DEPTHNET_FILE), &stage2.model, stage2.best_epoch, &cfg.depthnet)?;
    }
    save_hist(DEPTHNET_FILE, &stage2.history)?;

    let finetuned = if cfg.finetune_enabled {
        let stage3 = train_finetune_stage(&stage1.model, &stage1.disc, &stage2.model, train, val, &cfg.finetune)?;
        log_stage("finetune", stage3.best_epoch, &stage3.history);
        if let Some(dir) = out_dir {
            save_trajnet(&dir.join(FINETUNED_FILE), &stage3.model, &stage3.disc, stage3.best_epoch, &cfg.finetune)?;
        }
        save_hist(FINETUNED_FILE, &stage3.history)?;
        Some((stage3.model, stage3.disc))
    } else {
        None
    };

    let (mut regress_3d, mut regress_2d) = (None, None);
    if cfg.train_baselines {
        for (target, slot) in [
            (RegressionTarget::Positions3d, &mut regress_3d),
            (RegressionTarget::Pixels2d, &mut regress_2d),
        ] {
            let file = regressor_file(target);
            let r = train_baseline(train, val, target, &cfg.regression)?;
            log_stage(file, r.best_epoch, &r.history);
            if let Some(dir) = out_dir {
                save_regressor(&dir.join(file), &r.model, r.best_epoch, &cfg.regression)?;
            }
            save_hist(file, &r.history)?;
            *slot = Some(r.model);
        }
    }

    Ok(Models {
        trajnet: stage1.model,
        disc: stage1.disc,
        depthnet: stage2.model,
        finetuned,
        regress_3d,
        regress_2d,
    })
}

/// Checkpoints found in a directory; absent files stay `None`.
#[derive(Debug, Clone, Default)]
pub struct ModelDir {
    pub root: PathBuf,
    pub trajnet: Option<TrajectoryModel>,
    pub depthnet: Option<DepthModel>,
    pub finetuned: Option<TrajectoryModel>,
    pub regress_3d: Option<RegressionModel>,
    pub regress_2d: Option<RegressionModel>,
}

fn load_if<T>(path: PathBuf, load: impl Fn(&Path) -> Result<T>) -> Result<Option<T>> {
    if path.exists() {
        load(&path).map(Some)
    } else {
        Ok(None)
    }
}

impl ModelDir {
    pub fn load(root: &Path) -> Result<Self> {
        Ok(Self {
            root: root.to_path_buf(),
            trajnet: load_if(root.join(TRAJNET_FILE), |p| load_trajnet(p).map(|m| m.0))?,
            depthnet: load_if(root.join(DEPTHNET_FILE), load_depthnet)?,
            finetuned: load_if(root.join(FINETUNED_FILE), |p| load_trajnet(p).map(|m| m.0))?,
            regress_3d: load_if(root.join(REGRESS_3D_FILE), load_regressor)?,
            regress_2d: load_if(root.join(REGRESS_2D_FILE), load_regressor)?,
        })
    }

    pub fn from_models(models: &Models) -> Self {
        Self {
            root: PathBuf::new(),
            trajnet: Some(models.trajnet.clone()),
            depthnet: Some(models.depthnet.clone()),
            finetuned: models.finetuned.as_ref().map(|m| m.0.clone()),
            regress_3d: models.regress_3d.clone(),
            regress_2d: models.regress_2d.clone(),
        }
    }

    fn missing(&self, name: &str, file: &str) -> Error {
        Error::MissingCheckpoint {
            name: name.into(),
            path: self.root.join(file),
        }
    }

    pub fn require_trajnet(&self) -> Result<&TrajectoryModel> {
        self.trajnet.as_ref().ok_or_else(|| self.missing("trajnet", TRAJNET_FILE))
    }

    pub fn require_depthnet(&self) -> Result<&DepthModel> {
        self.depthnet.as_ref().ok_or_else(|| self.missing("depthnet", DEPTHNET_FILE))
    }

    /// Fine-tuned generator, falling back to the stage-1 one.
    pub fn require_final_trajnet(&self) -> Result<&TrajectoryModel> {
        match &self.finetuned {
            Some(g) => Ok(g),
            None => self.require_trajnet(),
        }
    }

    pub fn require_regressor(&self, target: RegressionTarget) -> Result<&RegressionModel> {
        match target {
            RegressionTarget::Positions3d => self.regress_3d.as_ref().ok_or_else(|| self.missing("regress3d", REGRESS_3D_FILE)),
            RegressionTarget::Pixels2d => self.regress_2d.as_ref().ok_or_else(|| self.missing("regress2d", REGRESS_2D_FILE)),
        }
    }
}
