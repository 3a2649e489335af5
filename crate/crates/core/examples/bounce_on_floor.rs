//! Drops a ball onto a flat depth map and prints each contact.
//!
//! cargo run --release --example bounce_on_floor

use resim::geometry::{mesh_from_depth, CameraIntrinsics, DepthMap};
use resim::simulator::{simulate_mesh, InitialConditions, SimConfig};
use resim::Vec3;

fn main() -> resim::Result<()> {
    // camera looking straight down at a floor 1.5 m away
    let intr = CameraIntrinsics::from_fov(32, 32, 90.0)?;
    let floor = DepthMap::constant(1.5, intr)?;
    let mesh = mesh_from_depth(&floor, None)?;

    let rho = InitialConditions {
        position: Vec3::new(0.0, 0.0, 0.5),
        velocity: Vec3::new(0.2, 0.0, 0.0),
        ..InitialConditions::default()
    };
    let cfg = SimConfig {
        gravity: Vec3::new(0.0, 0.0, 9.81),
        ..SimConfig::default()
    };
    let traj = simulate_mesh(mesh, &rho, &cfg)?;
    for (k, p) in traj.samples.iter().enumerate() {
        println!("t={:.2}s  x={:+.3} z={:.3}", traj.time_of(k), p.x, p.z);
    }
    println!("contacts at {:.3?} s", traj.contact_times);
    Ok(())
}
