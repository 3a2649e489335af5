use std::path::Path;

use ndarray::{Array2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::nets::{sigmoid, softplus, DepthNet, Normalizer, TwoStageNet, TwoStageShape};
use super::params::{adam_step, AdamState, ParamSet};
use crate::{Error, Result};

/// How the weight on the L2 term decays over epochs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnnealSchedule {
    /// `max(0, 1 - e / anneal_epochs)`.
    Linear,
    /// `0.995^e`, never reaching zero.
    Multiplicative,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub anneal_epochs: usize,
    pub anneal: AnnealSchedule,
    pub batch_size: usize,
    pub lr: f64,
    pub disc_lr: f64,
    /// Width of the generator's noise input; 1 in the standard model.
    pub z_dim: usize,
    pub seed: u64,
    pub a_hidden: Vec<usize>,
    pub embedding: usize,
    pub b_hidden: Vec<usize>,
    pub h_hidden: Vec<usize>,
    /// `(z_min, z_max)` the depth net outputs before training.
    pub depth_prior: (f64, f64),
    pub traj_std_floor: f64,
    pub desc_std_floor: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 1000,
            anneal_epochs: 200,
            anneal: AnnealSchedule::Linear,
            batch_size: 64,
            lr: 1e-3,
            disc_lr: 1e-3,
            z_dim: 1,
            seed: 0,
            a_hidden: vec![128],
            embedding: 64,
            b_hidden: vec![256, 128],
            h_hidden: vec![256, 64],
            depth_prior: (1.0, 5.0),
            traj_std_floor: 1e-2,
            desc_std_floor: 1e-2,
        }
    }
}

impl TrainConfig {
    /// Short schedule for a few thousand records on one machine.
    pub fn desk() -> Self {
        Self {
            epochs: 150,
            anneal_epochs: 30,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.anneal_epochs > self.epochs || self.batch_size == 0 || !(self.lr > 0.0) || !(self.disc_lr > 0.0) {
            return Err(Error::InvalidInput(format!("bad training config {self:?}")));
        }
        Ok(())
    }

    /// Weight on the L2 term at epoch `e`.
    pub fn anneal_weight(&self, e: usize) -> f64 {
        match self.anneal {
            AnnealSchedule::Linear if self.anneal_epochs == 0 => 0.0,
            AnnealSchedule::Linear => (1.0 - e as f64 / self.anneal_epochs as f64).max(0.0),
            AnnealSchedule::Multiplicative => 0.995f64.powi(e as i32),
        }
    }

    pub fn generator_shape(&self, traj_dim: usize, desc_dim: usize) -> TwoStageShape {
        TwoStageShape {
            input: traj_dim + self.z_dim,
            a_hidden: self.a_hidden.clone(),
            embedding: self.embedding,
            side: desc_dim,
            b_hidden: self.b_hidden.clone(),
            output: traj_dim,
        }
    }

    pub fn discriminator_shape(&self, traj_dim: usize, desc_dim: usize) -> TwoStageShape {
        TwoStageShape {
            input: traj_dim,
            output: 1,
            ..self.generator_shape(traj_dim, desc_dim)
        }
    }

    pub fn regressor_shape(&self, desc_dim: usize, out_dim: usize) -> TwoStageShape {
        TwoStageShape {
            input: desc_dim,
            output: out_dim,
            ..self.generator_shape(out_dim, desc_dim)
        }
    }

    pub fn depth_sizes(&self, in_dim: usize) -> Vec<usize> {
        let mut s = vec![in_dim];
        s.extend(&self.h_hidden);
        s.push(2);
        s
    }
}

/// One row of a loss history.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub d_loss: f64,
    pub g_adv: f64,
    pub g_l2: f64,
    pub w: f64,
    pub val_l2: f64,
}

pub fn write_history(path: &Path, history: &[EpochLog]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::format(path, e.to_string()))?;
    for row in history {
        w.serialize(row).map_err(|e| Error::format(path, e.to_string()))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_history(path: &Path) -> Result<Vec<EpochLog>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| Error::format(path, e.to_string()))?;
    r.deserialize()
        .map(|row| row.map_err(|e| Error::format(path, e.to_string())))
        .collect()
}

/// Inputs and target for the trajectory update network, unnormalized.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajExample {
    pub initial: Vec<f64>,
    pub gt: Vec<f64>,
    pub desc: Vec<f64>,
}

/// Trajectory update network with the statistics it was trained under.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryModel {
    pub net: TwoStageNet,
    pub traj_norm: Normalizer,
    pub desc_norm: Normalizer,
    pub sample_rate: f64,
    pub z_dim: usize,
}

fn rows<'a>(xs: impl Iterator<Item = &'a Vec<f64>>) -> Vec<&'a [f64]> {
    xs.map(|v| v.as_slice()).collect()
}

fn z_batch(z: &[f64], z_dim: usize) -> Array2<f64> {
    let mut out = Array2::zeros((z.len(), z_dim));
    if z_dim > 0 {
        for (i, &v) in z.iter().enumerate() {
            out[[i, 0]] = v;
        }
    }
    out
}

impl TrajectoryModel {
    fn inputs(&self, trajs: &[&[f64]], z: &[f64]) -> Result<Array2<f64>> {
        let x = self.traj_norm.batch(trajs.iter().copied())?;
        Ok(super::mlp::hcat(x.view(), z_batch(z, self.z_dim).view()))
    }

    /// Normalized output for a batch of raw trajectories and descriptors.
    pub fn apply_normalized(&self, trajs: &[&[f64]], z: &[f64], descs: &[&[f64]]) -> Result<Array2<f64>> {
        if trajs.len() != z.len() || trajs.len() != descs.len() {
            return Err(Error::InvalidInput("batch inputs differ in length".into()));
        }
        let input = self.inputs(trajs, z)?;
        let side = self.desc_norm.batch(descs.iter().copied())?;
        self.net.predict(input.view(), side.view())
    }

    /// Updated flattened trajectories in meters.
    pub fn apply_flat(&self, trajs: &[&[f64]], z: &[f64], descs: &[&[f64]]) -> Result<Vec<Vec<f64>>> {
        let out = self.apply_normalized(trajs, z, descs)?;
        out.axis_iter(Axis(0))
            .map(|r| self.traj_norm.invert(&r.to_vec()))
            .collect()
    }
}

/// Outcome of generator/discriminator training.
#[derive(Debug, Clone)]
pub struct TrainedTrajNet {
    /// Generator from the epoch with the lowest validation L2.
    pub model: TrajectoryModel,
    /// Discriminator from the same epoch.
    pub disc: TwoStageNet,
    pub best_epoch: usize,
    pub history: Vec<EpochLog>,
}

/// Mean over samples of the time-averaged Euclidean distance between
/// flattened 3D trajectories.
pub fn mean_l2_flat(a: &[Vec<f64>], b: &[&[f64]]) -> f64 {
    let total: f64 = a
        .iter()
        .zip(b)
        .map(|(x, y)| {
            let n = x.len() / 3;
            x.chunks(3)
                .zip(y.chunks(3))
                .map(|(p, q)| ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2) + (p[2] - q[2]).powi(2)).sqrt())
                .sum::<f64>()
                / n as f64
        })
        .sum();
    total / a.len().max(1) as f64
}

fn check_finite(what: &str, epoch: usize, batch: usize, value: f64) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(Error::Training(format!("non-finite {what} at epoch {epoch}, batch {batch}")))
    }
}

fn select(x: &Array2<f64>, idx: &[usize]) -> Array2<f64> {
    x.select(Axis(0), idx)
}

/// Adversarial training of the trajectory update network `G` against a
/// discriminator `D`, with an annealed L2 term.
///
/// Each batch takes one `D` step on ground-truth (real) and generated
/// (fake) trajectories, then one `G` step on the non-saturating loss plus
/// `w(e)` times the mean squared error to ground truth in normalized
/// units. Validation uses `z = 0`. Passing `warm` continues from an
/// existing generator and discriminator, keeping their normalization.
pub fn train_trajnet(
    train: &[TrajExample],
    val: &[TrajExample],
    cfg: &TrainConfig,
    sample_rate: f64,
    warm: Option<(&TrajectoryModel, &TwoStageNet)>,
) -> Result<TrainedTrajNet> {
    cfg.validate()?;
    if train.is_empty() || val.is_empty() {
        return Err(Error::Training("empty training or validation set".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (mut model, mut disc) = match warm {
        Some((g, d)) => (g.clone(), d.clone()),
        None => {
            let traj_norm = Normalizer::fit(rows(train.iter().map(|e| &e.gt)), cfg.traj_std_floor)?;
            let desc_norm = Normalizer::fit(rows(train.iter().map(|e| &e.desc)), cfg.desc_std_floor)?;
            let (t, d) = (traj_norm.dim(), desc_norm.dim());
            let net = TwoStageNet::new(&cfg.generator_shape(t, d), &mut rng)?;
            let disc = TwoStageNet::new(&cfg.discriminator_shape(t, d), &mut rng)?;
            let model = TrajectoryModel { net, traj_norm, desc_norm, sample_rate, z_dim: cfg.z_dim };
            (model, disc)
        }
    };
    let x0 = model.traj_norm.batch(rows(train.iter().map(|e| &e.initial)))?;
    let xgt = model.traj_norm.batch(rows(train.iter().map(|e| &e.gt)))?;
    let desc = model.desc_norm.batch(rows(train.iter().map(|e| &e.desc)))?;
    let val_init = rows(val.iter().map(|e| &e.initial));
    let val_gt = rows(val.iter().map(|e| &e.gt));
    let val_desc = rows(val.iter().map(|e| &e.desc));
    let val_z = vec![0.0; val.len()];

    let mut g_opt = AdamState::new(&model.net, cfg.lr);
    let mut d_opt = AdamState::new(&disc, cfg.disc_lr);
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut history = Vec::with_capacity(cfg.epochs);
    let mut best: Option<(f64, usize, TwoStageNet, TwoStageNet)> = None;
    let dim = x0.ncols();

    for epoch in 0..cfg.epochs {
        let w = cfg.anneal_weight(epoch);
        order.shuffle(&mut rng);
        let (mut d_sum, mut adv_sum, mut l2_sum, mut batches) = (0.0, 0.0, 0.0, 0usize);
        for (bi, idx) in order.chunks(cfg.batch_size).enumerate() {
            let n = idx.len() as f64;
            let xb = select(&x0, idx);
            let gb = select(&xgt, idx);
            let db = select(&desc, idx);
            let z: Vec<f64> = idx.iter().map(|_| StandardNormal.sample(&mut rng)).collect();
            let g_in = super::mlp::hcat(xb.view(), z_batch(&z, cfg.z_dim).view());
            let (fake, g_cache) = model.net.forward(g_in.view(), db.view())?;

            // discriminator: maximize log D(real) + log(1 - D(fake))
            let (real_logit, real_cache) = disc.forward(gb.view(), db.view())?;
            let (fake_logit, fake_cache) = disc.forward(fake.view(), db.view())?;
            let d_loss = (real_logit.iter().map(|&l| softplus(-l)).sum::<f64>()
                + fake_logit.iter().map(|&l| softplus(l)).sum::<f64>())
                / n;
            check_finite("discriminator loss", epoch, bi, d_loss)?;
            let (mut d_grad, _) = disc.backward(&real_cache, real_logit.mapv(|l| (sigmoid(l) - 1.0) / n).view())?;
            let (fake_grad, _) = disc.backward(&fake_cache, fake_logit.mapv(|l| sigmoid(l) / n).view())?;
            accumulate(&mut d_grad, &fake_grad);
            adam_step(&mut d_opt, &mut disc, &d_grad)?;

            // generator: -log D(fake) + w * mse
            let (logit, cache) = disc.forward(fake.view(), db.view())?;
            let g_adv = logit.iter().map(|&l| softplus(-l)).sum::<f64>() / n;
            let (_, d_fake) = disc.backward(&cache, logit.mapv(|l| (sigmoid(l) - 1.0) / n).view())?;
            let diff = &fake - &gb;
            let g_l2 = diff.iter().map(|d| d * d).sum::<f64>() / (n * dim as f64);
            check_finite("generator loss", epoch, bi, g_adv + g_l2)?;
            let grad_out = d_fake + &(diff * (2.0 * w / (n * dim as f64)));
            let (g_grad, _) = model.net.backward(&g_cache, grad_out.view())?;
            adam_step(&mut g_opt, &mut model.net, &g_grad)?;

            d_sum += d_loss;
            adv_sum += g_adv;
            l2_sum += g_l2;
            batches += 1;
        }
        let pred = model.apply_flat(&val_init, &val_z, &val_desc)?;
        let val_l2 = mean_l2_flat(&pred, &val_gt);
        check_finite("validation L2", epoch, batches, val_l2)?;
        let b = batches as f64;
        history.push(EpochLog { epoch, d_loss: d_sum / b, g_adv: adv_sum / b, g_l2: l2_sum / b, w, val_l2 });
        if best.as_ref().is_none_or(|(v, ..)| val_l2 < *v) {
            best = Some((val_l2, epoch, model.net.clone(), disc.clone()));
        }
    }
    let (_, best_epoch, net, best_disc) = best.ok_or_else(|| Error::Training("zero epochs".into()))?;
    model.net = net;
    Ok(TrainedTrajNet { model, disc: best_disc, best_epoch, history })
}

fn accumulate<P: ParamSet>(acc: &mut P, other: &P) {
    for ((_, a), (_, b)) in acc.blocks_mut().into_iter().zip(other.blocks()) {
        for (x, y) in a.iter_mut().zip(b) {
            *x += y;
        }
    }
}

/// Output space of a regression baseline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegressionTarget {
    /// Flattened camera-frame positions (m).
    Positions3d,
    /// Flattened pixel coordinates.
    Pixels2d,
}

/// Scene-descriptor-only regressor of whole trajectories.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionModel {
    pub net: TwoStageNet,
    pub desc_norm: Normalizer,
    pub target_norm: Normalizer,
    pub target: RegressionTarget,
    pub sample_rate: f64,
}

impl RegressionModel {
    pub fn apply(&self, descs: &[&[f64]]) -> Result<Vec<Vec<f64>>> {
        let d = self.desc_norm.batch(descs.iter().copied())?;
        let out = self.net.predict(d.view(), d.view())?;
        out.axis_iter(Axis(0))
            .map(|r| self.target_norm.invert(&r.to_vec()))
            .collect()
    }
}

/// A descriptor and the trajectory (3D or pixel) it should regress to.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionExample {
    pub desc: Vec<f64>,
    pub target: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct TrainedRegressor {
    pub model: RegressionModel,
    pub best_epoch: usize,
    pub history: Vec<EpochLog>,
}

fn mean_sq_rows(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    let n = a.len().max(1) as f64;
    (a - b).iter().map(|d| d * d).sum::<f64>() / n
}

/// Pure-L2 training of a regression baseline; keeps the best validation
/// epoch. The same two-stage layout as the generator, fed the descriptor
/// in place of trajectory and noise.
pub fn train_regressor(
    train: &[RegressionExample],
    val: &[RegressionExample],
    cfg: &TrainConfig,
    target: RegressionTarget,
    sample_rate: f64,
) -> Result<TrainedRegressor> {
    cfg.validate()?;
    if train.is_empty() || val.is_empty() {
        return Err(Error::Training("empty training or validation set".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let desc_norm = Normalizer::fit(rows(train.iter().map(|e| &e.desc)), cfg.desc_std_floor)?;
    let floor = match target {
        RegressionTarget::Positions3d => cfg.traj_std_floor,
        RegressionTarget::Pixels2d => 1.0,
    };
    let target_norm = Normalizer::fit(rows(train.iter().map(|e| &e.target)), floor)?;
    let shape = cfg.regressor_shape(desc_norm.dim(), target_norm.dim());
    let mut net = TwoStageNet::new(&shape, &mut rng)?;
    let x = desc_norm.batch(rows(train.iter().map(|e| &e.desc)))?;
    let y = target_norm.batch(rows(train.iter().map(|e| &e.target)))?;
    let vx = desc_norm.batch(rows(val.iter().map(|e| &e.desc)))?;
    let vy = target_norm.batch(rows(val.iter().map(|e| &e.target)))?;
    let mut opt = AdamState::new(&net, cfg.lr);
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut history = Vec::with_capacity(cfg.epochs);
    let mut best: Option<(f64, usize, TwoStageNet)> = None;
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let (mut sum, mut batches) = (0.0, 0usize);
        for (bi, idx) in order.chunks(cfg.batch_size).enumerate() {
            let xb = select(&x, idx);
            let yb = select(&y, idx);
            let (out, cache) = net.forward(xb.view(), xb.view())?;
            let diff = &out - &yb;
            let loss = mean_sq_rows(&out, &yb);
            check_finite("regression loss", epoch, bi, loss)?;
            let (grad, _) = net.backward(&cache, (diff * (2.0 / out.len() as f64)).view())?;
            adam_step(&mut opt, &mut net, &grad)?;
            sum += loss;
            batches += 1;
        }
        let val_loss = mean_sq_rows(&net.predict(vx.view(), vx.view())?, &vy);
        history.push(EpochLog { epoch, d_loss: 0.0, g_adv: 0.0, g_l2: sum / batches as f64, w: 1.0, val_l2: val_loss });
        if best.as_ref().is_none_or(|(v, ..)| val_loss < *v) {
            best = Some((val_loss, epoch, net.clone()));
        }
    }
    let (_, best_epoch, net) = best.ok_or_else(|| Error::Training("zero epochs".into()))?;
    Ok(TrainedRegressor {
        model: RegressionModel { net, desc_norm, target_norm, target, sample_rate },
        best_epoch,
        history,
    })
}

/// Inputs and target for the depth correction network, unnormalized
/// except `g_out`, which is the generator's normalized output.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthExample {
    pub desc_image: Vec<f64>,
    pub desc_depth: Vec<f64>,
    pub g_out: Vec<f64>,
    pub target: (f64, f64),
}

/// Depth correction network with its input statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DepthModel {
    pub net: DepthNet,
    pub image_norm: Normalizer,
    pub depth_norm: Normalizer,
}

impl DepthModel {
    fn inputs(&self, ex: &[&DepthExample]) -> Result<Array2<f64>> {
        let a = self.image_norm.batch(ex.iter().map(|e| e.desc_image.as_slice()))?;
        let b = self.depth_norm.batch(ex.iter().map(|e| e.desc_depth.as_slice()))?;
        let mut g = Vec::new();
        for e in ex {
            if e.g_out.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidInput("non-finite generator output".into()));
            }
            g.extend_from_slice(&e.g_out);
        }
        let g = Array2::from_shape_vec((ex.len(), g.len() / ex.len().max(1)), g)
            .map_err(|e| Error::InvalidInput(e.to_string()))?;
        Ok(ndarray::concatenate(Axis(1), &[a.view(), b.view(), g.view()]).expect("equal rows"))
    }

    /// Predicted `(z_min, z_max)` per example; targets are ignored.
    pub fn apply(&self, ex: &[&DepthExample]) -> Result<Vec<(f64, f64)>> {
        if ex.is_empty() {
            return Ok(Vec::new());
        }
        self.net.predict(self.inputs(ex)?.view())
    }
}

#[derive(Debug, Clone)]
pub struct TrainedDepthNet {
    pub model: DepthModel,
    pub best_epoch: usize,
    pub history: Vec<EpochLog>,
}

fn depth_loss(pred: &[(f64, f64)], ex: &[&DepthExample]) -> f64 {
    pred.iter()
        .zip(ex)
        .map(|(p, e)| (p.0 - e.target.0).powi(2) + (p.1 - e.target.1).powi(2))
        .sum::<f64>()
        / pred.len().max(1) as f64
}

/// L2 regression of `(z_min, z_max)` in meters; keeps the best
/// validation epoch.
pub fn train_depthnet(train: &[DepthExample], val: &[DepthExample], cfg: &TrainConfig) -> Result<TrainedDepthNet> {
    cfg.validate()?;
    if train.is_empty() || val.is_empty() {
        return Err(Error::Training("empty training or validation set".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let image_norm = Normalizer::fit(rows(train.iter().map(|e| &e.desc_image)), cfg.desc_std_floor)?;
    let depth_norm = Normalizer::fit(rows(train.iter().map(|e| &e.desc_depth)), cfg.desc_std_floor)?;
    let in_dim = image_norm.dim() + depth_norm.dim() + train[0].g_out.len();
    let net = DepthNet::new(&cfg.depth_sizes(in_dim), cfg.depth_prior, &mut rng)?;
    let mut model = DepthModel { net, image_norm, depth_norm };
    let all: Vec<&DepthExample> = train.iter().collect();
    let x = model.inputs(&all)?;
    let val_refs: Vec<&DepthExample> = val.iter().collect();
    let vx = model.inputs(&val_refs)?;
    let mut opt = AdamState::new(&model.net, cfg.lr);
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut history = Vec::with_capacity(cfg.epochs);
    let mut best: Option<(f64, usize, DepthNet)> = None;
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let (mut sum, mut batches) = (0.0, 0usize);
        for (bi, idx) in order.chunks(cfg.batch_size).enumerate() {
            let xb = select(&x, idx);
            let batch: Vec<&DepthExample> = idx.iter().map(|&i| all[i]).collect();
            let (pred, cache) = model.net.forward(xb.view())?;
            let loss = depth_loss(&pred, &batch);
            check_finite("depth loss", epoch, bi, loss)?;
            let n = idx.len() as f64;
            let grad: Vec<(f64, f64)> = pred
                .iter()
                .zip(&batch)
                .map(|(p, e)| (2.0 * (p.0 - e.target.0) / n, 2.0 * (p.1 - e.target.1) / n))
                .collect();
            let (g, _) = model.net.backward(&cache, &grad)?;
            adam_step(&mut opt, &mut model.net, &g)?;
            sum += loss;
            batches += 1;
        }
        let val_loss = depth_loss(&model.net.predict(vx.view())?, &val_refs);
        history.push(EpochLog { epoch, d_loss: 0.0, g_adv: 0.0, g_l2: sum / batches as f64, w: 1.0, val_l2: val_loss });
        if best.as_ref().is_none_or(|(v, ..)| val_loss < *v) {
            best = Some((val_loss, epoch, model.net.clone()));
        }
    }
    let (_, best_epoch, net) = best.ok_or_else(|| Error::Training("zero epochs".into()))?;
    model.net = net;
    Ok(TrainedDepthNet { model, best_epoch, history })
}

/// Discriminator probability for raw trajectories and descriptors.
pub fn disc_apply(
    disc: &TwoStageNet,
    model: &TrajectoryModel,
    trajs: &[&[f64]],
    descs: &[&[f64]],
) -> Result<Vec<f64>> {
    let x = model.traj_norm.batch(trajs.iter().copied())?;
    let d = model.desc_norm.batch(descs.iter().copied())?;
    Ok(disc.predict(x.view(), d.view())?.iter().map(|&l| sigmoid(l)).collect())
}
