//! Renders a generated record's true and initial trajectories over its
//! depth map.
//!
//! cargo run --release --example overlay -- overlay_out

use std::path::PathBuf;

use resim::render::render_overlay;
use resim::scenegen::{generate_record, DatasetConfig};

fn main() -> resim::Result<()> {
    let out = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "overlay_out".into()));
    let sample = generate_record(&DatasetConfig::default(), 3)?;
    let r = sample.rho().radius;
    let gt = render_overlay(&sample.gt_depth, &sample.gt_trajectory, r, 4, &out.join("gt"))?;
    let init = render_overlay(&sample.gt_depth, &sample.initial_trajectory, r, 4, &out.join("initial"))?;
    println!("wrote {} images under {}", gt.len() + init.len(), out.display());
    Ok(())
}
