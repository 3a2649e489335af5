//! Turns a synthetic depth map into a triangle mesh and writes it as OBJ.
//!
//! cargo run --release --example depth_to_mesh -- out.obj

use resim::geometry::{mesh_from_depth, project_point, unproject_pixel, CameraIntrinsics, DepthMap};

fn main() -> resim::Result<()> {
    let intr = CameraIntrinsics::from_fov(64, 48, 90.0)?;
    // a floor-like ramp: farther toward the top of the image
    let values = (0..48)
        .flat_map(|v| (0..64).map(move |_| 1.0 + 3.0 * (1.0 - v as f64 / 47.0)))
        .collect();
    let depth = DepthMap::new(values, intr)?;

    let p = unproject_pixel(10.0, 20.0, depth.get(10, 20), &intr);
    let back = project_point(&p, &intr)?;
    println!("pixel (10, 20) -> ({:.3}, {:.3}, {:.3}) -> ({:.6}, {:.6})", p.x, p.y, p.z, back.x, back.y);

    let mesh = mesh_from_depth(&depth, Some(0.5))?;
    println!("{} vertices, {} triangles", mesh.vertices.len(), mesh.triangles.len());
    if let Some(path) = std::env::args().nth(1) {
        mesh.write_obj(path.as_ref())?;
        println!("wrote {path}");
    }
    Ok(())
}
