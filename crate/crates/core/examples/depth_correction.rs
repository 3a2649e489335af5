//! Trains the depth correction network on scale-corrupted data and reports
//! how often re-simulating over the corrected depth moves the first bounce
//! closer to the truth.
//!
//! cargo run --release --example depth_correction

use resim::eval::first_bounce_error;
use resim::neural::TrainConfig;
use resim::pipeline::{correct_depths, features_of, train_depth_stage, train_initial_trajnet};
use resim::scenegen::{generate_records, partition, DatasetConfig, NoiseDistribution};

fn main() -> resim::Result<()> {
    let cfg = DatasetConfig {
        n: 800,
        noise: NoiseDistribution::scale_dominant(),
        ..DatasetConfig::default()
    };
    let [train, val, test] = partition(generate_records(&cfg)?);
    let g1 = train_initial_trajnet(&train, &val, &TrainConfig::desk())?.model;
    let h = train_depth_stage(&g1, &train, &val, &TrainConfig::desk())?.model;

    let corrections = correct_depths(&g1, &h, &test, &features_of(&test)?)?;
    let mut improved = 0;
    for (s, c) in test.iter().zip(&corrections) {
        let horizon = s.gt_trajectory.duration();
        let before = first_bounce_error(&s.initial_trajectory, &s.gt_trajectory, horizon);
        let after = first_bounce_error(&c.trajectory, &s.gt_trajectory, horizon);
        improved += usize::from(after < before);
        println!(
            "{}  true range {:.2}..{:.2}  predicted {:.2}..{:.2}  bounce error {before:.3} -> {after:.3} s",
            s.id(),
            s.gt_depth.min(),
            s.gt_depth.max(),
            c.range.0,
            c.range.1
        );
    }
    println!("improved on {improved} of {} records", test.len());
    Ok(())
}
