//! Generates one procedural room, renders its depth, corrupts it and saves
//! both maps as PFM with a shaded preview.
//!
//! cargo run --release --example procedural_scene -- 7 scene_out

use std::path::PathBuf;

use resim::formats::save_depth;
use resim::geometry::CameraIntrinsics;
use resim::render::shade_depth;
use resim::scenegen::{corrupt_depth, generate_scene, render_depth, NoiseDistribution, SceneParams};
use rand::SeedableRng;

fn main() -> resim::Result<()> {
    let mut args = std::env::args().skip(1);
    let seed: u64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(7);
    let out = PathBuf::from(args.next().unwrap_or_else(|| "scene_out".into()));

    let params = SceneParams::default();
    let scene = generate_scene(seed, &params)?;
    println!("camera at {:.2} m, {} obstacles", scene.camera.height, scene.obstacles.len());

    let intr = CameraIntrinsics::from_fov(64, 64, params.fov_deg)?;
    let gt = render_depth(&scene, &intr);
    let noise = NoiseDistribution::default().sample(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed))?;
    let noisy = corrupt_depth(&gt, &noise, seed)?;
    println!("depth range {:.2}..{:.2} m, corrupted {:.2}..{:.2} m", gt.min(), gt.max(), noisy.min(), noisy.max());

    std::fs::create_dir_all(&out).map_err(|e| resim::Error::io(&out, e))?;
    save_depth(&gt, &out.join("gt.pfm"), &out.join("intrinsics.json"))?;
    save_depth(&noisy, &out.join("noisy.pfm"), &out.join("intrinsics.json"))?;
    shade_depth(&gt, 4).save_ppm(&out.join("gt.ppm"))?;
    println!("wrote {}", out.display());
    Ok(())
}
