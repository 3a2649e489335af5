//! Trains the trajectory update network on generated records and compares
//! its validation error against the uncorrected simulation.
//!
//! cargo run --release --example train_trajectory_net

use resim::eval::{l2_traj, L2Mode};
use resim::neural::TrainConfig;
use resim::pipeline::{apply_trajnet, features_of, network_trajectory, train_initial_trajnet};
use resim::scenegen::{generate_records, partition, DatasetConfig};

fn main() -> resim::Result<()> {
    let cfg = DatasetConfig { n: 600, ..DatasetConfig::default() };
    let [train, val, _] = partition(generate_records(&cfg)?);
    let trained = train_initial_trajnet(&train, &val, &TrainConfig::desk())?;
    for e in trained.history.iter().step_by(15) {
        println!("epoch {:3}  L2 {:.4}  D {:.4}  val L2 {:.4}", e.epoch, e.g_l2, e.d_loss, e.val_l2);
    }

    let feats = features_of(&val)?;
    let trajs: Vec<&[f64]> = feats.iter().map(|f| f.initial.as_slice()).collect();
    let descs: Vec<&[f64]> = feats.iter().map(|f| f.desc_image.as_slice()).collect();
    let out = apply_trajnet(&trained.model, &trajs, &descs)?;
    let (mut before, mut after) = (0.0, 0.0);
    for (s, flat) in val.iter().zip(&out) {
        before += l2_traj(&s.initial_trajectory, &s.gt_trajectory, L2Mode::ThreeD)?;
        after += l2_traj(&network_trajectory(flat, s)?, &s.gt_trajectory, L2Mode::ThreeD)?;
    }
    let n = val.len() as f64;
    println!("validation L2-3D: simulated {:.3} m, corrected {:.3} m", before / n, after / n);
    Ok(())
}
