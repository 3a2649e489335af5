use serde::{Deserialize, Serialize};

use crate::geometry::DepthMap;
use crate::Result;

/// Side of the downsampled log-depth grid.
pub const DESCRIPTOR_GRID: usize = 16;
/// Grid cells plus min, max, mean and std of depth.
pub const DESCRIPTOR_LEN: usize = DESCRIPTOR_GRID * DESCRIPTOR_GRID + 4;

/// Fixed-length depth summary used in place of an image encoding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneDescriptor(pub Vec<f64>);

impl SceneDescriptor {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// Source coordinate and weights for bilinear sampling at cell `j` of `n`
/// over `len` pixels.
fn tap(j: usize, n: usize, len: usize) -> (usize, usize, f64) {
    let x = ((j as f64 + 0.5) * len as f64 / n as f64 - 0.5).clamp(0.0, (len - 1) as f64);
    let i0 = x.floor() as usize;
    let i1 = (i0 + 1).min(len - 1);
    (i0, i1, x - i0 as f64)
}

/// Bilinear 16x16 downsample of log-depth followed by depth statistics.
pub fn encode_scene(depth: &DepthMap) -> Result<SceneDescriptor> {
    depth.validate()?;
    let (w, h) = (depth.width, depth.height);
    let log = |u: usize, v: usize| depth.get(u, v).ln();
    let mut out = Vec::with_capacity(DESCRIPTOR_LEN);
    for j in 0..DESCRIPTOR_GRID {
        let (v0, v1, fy) = tap(j, DESCRIPTOR_GRID, h);
        for i in 0..DESCRIPTOR_GRID {
            let (u0, u1, fx) = tap(i, DESCRIPTOR_GRID, w);
            let top = (1.0 - fx) * log(u0, v0) + fx * log(u1, v0);
            let bottom = (1.0 - fx) * log(u0, v1) + fx * log(u1, v1);
            out.push((1.0 - fy) * top + fy * bottom);
        }
    }
    let n = depth.values.len() as f64;
    let mean = depth.values.iter().sum::<f64>() / n;
    let var = depth.values.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / n;
    out.extend([depth.min(), depth.max(), mean, var.sqrt()]);
    Ok(SceneDescriptor(out))
}
