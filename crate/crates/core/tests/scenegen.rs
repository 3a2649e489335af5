use resim::eval::first_bounce_error;
use resim::geometry::CameraIntrinsics;
use resim::scenegen::{generate_records, generate_scene, render_depth, DatasetConfig, SceneParams};

#[test]
fn thousand_scenes_cover_every_metre_of_depth() {
    let params = SceneParams::default();
    let intr = CameraIntrinsics::from_fov(64, 64, params.fov_deg).unwrap();
    let mut buckets = [0usize; 8];
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for seed in 0..1000 {
        let depth = render_depth(&generate_scene(seed, &params).unwrap(), &intr);
        for &d in &depth.values {
            assert!(d > 0.0 && d <= params.max_depth);
            lo = lo.min(d);
            hi = hi.max(d);
            buckets[(d.floor() as usize).min(7)] += 1;
        }
    }
    assert!(lo <= 0.5 && hi >= 8.0, "span {lo}..{hi}");
    assert!(buckets.iter().all(|&c| c > 0), "{buckets:?}");
}

#[test]
fn default_noise_moves_the_first_bounce() {
    let cfg = DatasetConfig { n: 100, seed: 2, ..DatasetConfig::default() };
    let records = generate_records(&cfg).unwrap();
    let horizon = cfg.sim.duration;
    let mean = records
        .iter()
        .map(|r| first_bounce_error(&r.initial_trajectory, &r.gt_trajectory, horizon))
        .sum::<f64>()
        / records.len() as f64;
    assert!(mean > 0.0);
}
