use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::nets::{DepthNet, Normalizer, TwoStageNet, TwoStageShape};
use super::params::ParamSet;
use super::train::{DepthModel, RegressionModel, RegressionTarget, TrainConfig, TrajectoryModel};
use crate::{Error, Result};

const MAGIC: &[u8; 8] = b"RESIMNN1";

/// Writes `MAGIC`, the header length (u64 LE), the JSON header and the
/// parameters as little-endian f64.
pub fn write_checkpoint<H: Serialize>(path: &Path, header: &H, params: &[f64]) -> Result<()> {
    let json = serde_json::to_vec(header).map_err(|e| Error::json(path, e))?;
    let mut bytes = Vec::with_capacity(16 + json.len() + 8 * params.len());
    bytes.extend_from_slice(MAGIC);
    bytes.extend_from_slice(&(json.len() as u64).to_le_bytes());
    bytes.extend_from_slice(&json);
    for p in params {
        bytes.extend_from_slice(&p.to_le_bytes());
    }
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn read_checkpoint<H: DeserializeOwned>(path: &Path) -> Result<(H, Vec<f64>)> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.len() < 16 || &bytes[..8] != MAGIC {
        return Err(Error::format(path, "not a checkpoint file"));
    }
    let len = u64::from_le_bytes(bytes[8..16].try_into().expect("8 bytes")) as usize;
    let body = bytes
        .get(16..16 + len)
        .ok_or_else(|| Error::format(path, "truncated header"))?;
    let header = serde_json::from_slice(body).map_err(|e| Error::json(path, e))?;
    let blob = &bytes[16 + len..];
    if blob.len() % 8 != 0 {
        return Err(Error::format(path, "parameter blob is not a whole number of f64"));
    }
    let params = blob
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    Ok((header, params))
}

/// Reads a checkpoint whose header must carry `"kind": kind`.
fn read_kind<H: DeserializeOwned>(path: &Path, kind: &str) -> Result<(H, Vec<f64>)> {
    let (value, blob): (serde_json::Value, Vec<f64>) = read_checkpoint(path)?;
    let found = value.get("kind").and_then(|k| k.as_str()).unwrap_or("unknown");
    if found != kind {
        return Err(Error::format(path, format!("expected a {kind} checkpoint, found {found}")));
    }
    let header = serde_json::from_value(value).map_err(|e| Error::json(path, e))?;
    Ok((header, blob))
}

fn split_blob(path: &Path, blob: &[f64], sizes: &[usize]) -> Result<Vec<Vec<f64>>> {
    if blob.len() != sizes.iter().sum::<usize>() {
        return Err(Error::format(path, "parameter count does not match header shapes"));
    }
    let mut out = Vec::new();
    let mut at = 0;
    for s in sizes {
        out.push(blob[at..at + s].to_vec());
        at += s;
    }
    Ok(out)
}

fn two_stage(shape: &TwoStageShape, flat: &[f64]) -> Result<TwoStageNet> {
    let mut net = TwoStageNet {
        a: super::mlp::Mlp::zeros(&shape.a_sizes())?,
        b: super::mlp::Mlp::zeros(&shape.b_sizes())?,
    };
    net.load_flat(flat)?;
    Ok(net)
}

#[derive(Serialize, Deserialize)]
struct TrajNetHeader {
    kind: String,
    generator: TwoStageShape,
    discriminator: TwoStageShape,
    traj_norm: Normalizer,
    desc_norm: Normalizer,
    sample_rate: f64,
    z_dim: usize,
    best_epoch: usize,
    config: TrainConfig,
}

/// Saves a generator and its discriminator.
pub fn save_trajnet(
    path: &Path,
    model: &TrajectoryModel,
    disc: &TwoStageNet,
    best_epoch: usize,
    cfg: &TrainConfig,
) -> Result<()> {
    let header = TrajNetHeader {
        kind: "trajnet".into(),
        generator: model.net.shape(),
        discriminator: disc.shape(),
        traj_norm: model.traj_norm.clone(),
        desc_norm: model.desc_norm.clone(),
        sample_rate: model.sample_rate,
        z_dim: model.z_dim,
        best_epoch,
        config: cfg.clone(),
    };
    let mut blob = model.net.to_flat();
    blob.extend(disc.to_flat());
    write_checkpoint(path, &header, &blob)
}

pub fn load_trajnet(path: &Path) -> Result<(TrajectoryModel, TwoStageNet)> {
    let (h, blob): (TrajNetHeader, Vec<f64>) = read_kind(path, "trajnet")?;
    let g_len: usize = param_len(&h.generator);
    let d_len: usize = param_len(&h.discriminator);
    let parts = split_blob(path, &blob, &[g_len, d_len])?;
    let model = TrajectoryModel {
        net: two_stage(&h.generator, &parts[0])?,
        traj_norm: h.traj_norm,
        desc_norm: h.desc_norm,
        sample_rate: h.sample_rate,
        z_dim: h.z_dim,
    };
    Ok((model, two_stage(&h.discriminator, &parts[1])?))
}

fn mlp_len(sizes: &[usize]) -> usize {
    sizes.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
}

fn param_len(shape: &TwoStageShape) -> usize {
    mlp_len(&shape.a_sizes()) + mlp_len(&shape.b_sizes())
}

#[derive(Serialize, Deserialize)]
struct DepthHeader {
    kind: String,
    layer_sizes: Vec<usize>,
    prior: (f64, f64),
    image_norm: Normalizer,
    depth_norm: Normalizer,
    best_epoch: usize,
    config: TrainConfig,
}

pub fn save_depthnet(path: &Path, model: &DepthModel, best_epoch: usize, cfg: &TrainConfig) -> Result<()> {
    let header = DepthHeader {
        kind: "depthnet".into(),
        layer_sizes: model.net.mlp.layer_sizes.clone(),
        prior: model.net.prior,
        image_norm: model.image_norm.clone(),
        depth_norm: model.depth_norm.clone(),
        best_epoch,
        config: cfg.clone(),
    };
    write_checkpoint(path, &header, &model.net.to_flat())
}

pub fn load_depthnet(path: &Path) -> Result<DepthModel> {
    let (h, blob): (DepthHeader, Vec<f64>) = read_kind(path, "depthnet")?;
    split_blob(path, &blob, &[mlp_len(&h.layer_sizes)])?;
    let mut net = DepthNet {
        mlp: super::mlp::Mlp::zeros(&h.layer_sizes)?,
        prior: h.prior,
    };
    net.load_flat(&blob)?;
    Ok(DepthModel { net, image_norm: h.image_norm, depth_norm: h.depth_norm })
}

#[derive(Serialize, Deserialize)]
struct RegressorHeader {
    kind: String,
    shape: TwoStageShape,
    desc_norm: Normalizer,
    target_norm: Normalizer,
    target: RegressionTarget,
    sample_rate: f64,
    best_epoch: usize,
    config: TrainConfig,
}

pub fn save_regressor(path: &Path, model: &RegressionModel, best_epoch: usize, cfg: &TrainConfig) -> Result<()> {
    let header = RegressorHeader {
        kind: "regressor".into(),
        shape: model.net.shape(),
        desc_norm: model.desc_norm.clone(),
        target_norm: model.target_norm.clone(),
        target: model.target,
        sample_rate: model.sample_rate,
        best_epoch,
        config: cfg.clone(),
    };
    write_checkpoint(path, &header, &model.net.to_flat())
}

pub fn load_regressor(path: &Path) -> Result<RegressionModel> {
    let (h, blob): (RegressorHeader, Vec<f64>) = read_kind(path, "regressor")?;
    split_blob(path, &blob, &[param_len(&h.shape)])?;
    Ok(RegressionModel {
        net: two_stage(&h.shape, &blob)?,
        desc_norm: h.desc_norm,
        target_norm: h.target_norm,
        target: h.target,
        sample_rate: h.sample_rate,
    })
}
