//! Trains the pipeline, saves checkpoints, reloads them and corrects one
//! test record end to end.
//!
//! cargo run --release --example full_pipeline -- pipeline_out

use std::path::PathBuf;

use resim::eval::{l2_traj, L2Mode};
use resim::pipeline::{run_pipeline, train_pipeline, ModelDir, PipelineConfig};
use resim::render::render_overlay;
use resim::scenegen::{generate_records, partition, DatasetConfig};

fn main() -> resim::Result<()> {
    let out = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "pipeline_out".into()));
    let [train, val, test] = partition(generate_records(&DatasetConfig { n: 800, ..DatasetConfig::default() })?);
    let cfg = PipelineConfig { train_baselines: false, ..PipelineConfig::desk() };
    train_pipeline(&train, &val, &cfg, Some(&out.join("models")))?;

    let models = ModelDir::load(&out.join("models"))?;
    let sample = &test[0];
    let result = run_pipeline(
        models.require_trajnet()?,
        models.require_depthnet()?,
        models.require_final_trajnet()?,
        std::slice::from_ref(sample),
    )?
    .remove(0);
    let err = |t| l2_traj(t, &sample.gt_trajectory, L2Mode::ThreeD);
    println!("record {}", sample.id());
    println!("  depth range {:.2}..{:.2} m (true {:.2}..{:.2})", result.correction.range.0, result.correction.range.1, sample.gt_depth.min(), sample.gt_depth.max());
    println!("  initial      {:.3} m", err(&result.initial)?);
    println!("  re-simulated {:.3} m", err(&result.correction.trajectory)?);
    println!("  final        {:.3} m", err(&result.final_trajectory)?);
    render_overlay(&sample.gt_depth, &result.final_trajectory, sample.rho().radius, 4, &out.join(sample.id()))?;
    Ok(())
}
