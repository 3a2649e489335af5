//! Writes a small dataset to disk and reads a record back.
//!
//! cargo run --release --example build_dataset -- data_small

use std::path::PathBuf;
use std::time::Instant;

use resim::eval::{l2_traj, L2Mode};
use resim::scenegen::{build_dataset, Dataset, DatasetConfig, Split};

fn main() -> resim::Result<()> {
    let out = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "data_small".into()));
    let cfg = DatasetConfig { n: 100, seed: 1, ..DatasetConfig::default() };
    let t0 = Instant::now();
    let manifest = build_dataset(&cfg, &out)?;
    let secs = t0.elapsed().as_secs_f64();
    println!("{} records in {secs:.2} s ({:.0} rec/s)", manifest.n, manifest.n as f64 / secs);

    let ds = Dataset::open(&out)?;
    let test = ds.load_split(Split::Test)?;
    for s in &test {
        let err = l2_traj(&s.initial_trajectory, &s.gt_trajectory, L2Mode::ThreeD)?;
        println!("{}  scale {:.2}  initial error {err:.3} m", s.id(), s.meta.noise.scale);
    }
    Ok(())
}
