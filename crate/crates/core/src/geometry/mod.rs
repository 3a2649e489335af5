//! Camera model, depth maps, and depth-to-mesh conversion.
//!
//! Depth is z-depth along the optical axis. Points live in the camera frame:
//! `x` right, `y` down, `z` forward.

mod camera;
mod depth;
mod mesh;

pub use camera::{project_point, unproject_pixel, CameraIntrinsics};
pub use depth::{rescale_depth, unproject_depth, DepthMap};
pub use mesh::{mesh_from_depth, triangle_area, triangulate_grid, TriangleMesh, DEGENERATE_AREA};
