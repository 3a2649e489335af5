use super::scene::Scene;
use crate::geometry::{CameraIntrinsics, DepthMap};

/// Ray-casts every pixel against the floor and obstacles and stores the
/// z-depth of the nearest hit, capped at `scene.max_depth`.
pub fn render_depth(scene: &Scene, intrinsics: &CameraIntrinsics) -> DepthMap {
    let [ax, ay, az] = scene.camera.axes();
    let origin = scene.camera.position();
    let solids: Vec<_> = scene.obstacles.iter().map(|o| o.solid()).collect();
    let (w, h) = (intrinsics.width, intrinsics.height);
    let mut values = Vec::with_capacity(w * h);
    for v in 0..h {
        for u in 0..w {
            let r = intrinsics.ray(u as f64, v as f64);
            // unit z component in camera frame, so the ray parameter is z-depth
            let dir = ax * r.x + ay * r.y + az * r.z;
            let mut t = f64::INFINITY;
            if dir.y < 0.0 {
                t = (scene.floor - origin.y) / dir.y;
            }
            for solid in &solids {
                if let Some(hit) = solid.ray_hit(&origin, &dir) {
                    t = t.min(hit);
                }
            }
            values.push(t.min(scene.max_depth));
        }
    }
    DepthMap {
        width: w,
        height: h,
        values,
        intrinsics: *intrinsics,
    }
}
