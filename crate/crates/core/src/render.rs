//! Ball overlays on a shaded depth background.
//!
//! Step `k` of `T` is drawn in hue `240 * k / (T - 1)` degrees: red for the
//! first step through yellow and green to blue for the last.

use std::fs;
use std::path::{Path, PathBuf};

use crate::formats::RgbImage;
use crate::geometry::DepthMap;
use crate::simulator::Trajectory;
use crate::{Error, Result};

/// Grayscale depth: nearest pixel brightest.
pub fn shade_depth(depth: &DepthMap, scale: usize) -> RgbImage {
    let (lo, hi) = (depth.min(), depth.max());
    let span = if hi > lo { hi - lo } else { 1.0 };
    let mut img = RgbImage::new(depth.width * scale, depth.height * scale, [0, 0, 0]);
    for y in 0..img.height {
        for x in 0..img.width {
            let t = (depth.get(x / scale, y / scale) - lo) / span;
            let g = (40.0 + 200.0 * (1.0 - t)).round() as u8;
            img.put(x, y, [g, g, g]);
        }
    }
    img
}

/// Colour of step `k` out of `count`, warm to cold.
pub fn time_color(k: usize, count: usize) -> [u8; 3] {
    let t = if count > 1 { k as f64 / (count - 1) as f64 } else { 0.0 };
    hsv_to_rgb(240.0 * t)
}

fn hsv_to_rgb(hue: f64) -> [u8; 3] {
    let h = hue / 60.0;
    let x = 1.0 - (h % 2.0 - 1.0).abs();
    let (r, g, b) = match h as u32 {
        0 => (1.0, x, 0.0),
        1 => (x, 1.0, 0.0),
        2 => (0.0, 1.0, x),
        3 => (0.0, x, 1.0),
        _ => (x, 0.0, 1.0),
    };
    [r, g, b].map(|c: f64| (255.0 * c).round() as u8)
}

/// Projected disc of one trajectory step, in output pixels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Disc {
    pub u: f64,
    pub v: f64,
    pub radius: f64,
    /// Camera depth of the ball center.
    pub z: f64,
}

/// Projection of a sphere of `radius` at each step; `None` for steps
/// behind the camera or entirely outside the frame.
pub fn project_discs(depth: &DepthMap, traj: &Trajectory, radius: f64, scale: usize) -> Vec<Option<Disc>> {
    let intr = &depth.intrinsics;
    let s = scale as f64;
    // pixel centers of the upscaled image sit at k*s + (s-1)/2
    let offset = (s - 1.0) / 2.0;
    traj.samples
        .iter()
        .map(|p| {
            if p.z <= 0.0 {
                return None;
            }
            let disc = Disc {
                u: (intr.fx * p.x / p.z + intr.cx) * s + offset,
                v: (intr.fy * p.y / p.z + intr.cy) * s + offset,
                radius: intr.fx * radius / p.z * s,
                z: p.z,
            };
            let (w, h) = ((depth.width * scale) as f64, (depth.height * scale) as f64);
            let outside = disc.u + disc.radius < -0.5
                || disc.v + disc.radius < -0.5
                || disc.u - disc.radius > w - 0.5
                || disc.v - disc.radius > h - 0.5;
            (!outside && disc.u.is_finite() && disc.v.is_finite()).then_some(disc)
        })
        .collect()
}

/// Paints the disc; pixels where the scene is nearer than the ball's
/// front surface stay unchanged.
fn draw(img: &mut RgbImage, depth: &DepthMap, scale: usize, disc: &Disc, ball_radius: f64, color: [u8; 3]) {
    let x0 = (disc.u - disc.radius).floor().max(0.0) as usize;
    let y0 = (disc.v - disc.radius).floor().max(0.0) as usize;
    let x1 = ((disc.u + disc.radius).ceil() as usize).min(img.width.saturating_sub(1));
    let y1 = ((disc.v + disc.radius).ceil() as usize).min(img.height.saturating_sub(1));
    for y in y0..=y1 {
        for x in x0..=x1 {
            let (dx, dy) = (x as f64 - disc.u, y as f64 - disc.v);
            if dx * dx + dy * dy > disc.radius * disc.radius {
                continue;
            }
            if depth.get(x / scale, y / scale) < disc.z - ball_radius {
                continue;
            }
            img.put(x, y, color);
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Overlay {
    pub frames: Vec<RgbImage>,
    pub composite: RgbImage,
}

/// One frame per trajectory step plus a composite with every step, later
/// steps painted over earlier ones. `scale` upsamples the output.
pub fn overlay(depth: &DepthMap, traj: &Trajectory, radius: f64, scale: usize) -> Result<Overlay> {
    depth.validate()?;
    if scale == 0 || !(radius > 0.0) {
        return Err(Error::InvalidInput(format!("overlay scale {scale}, radius {radius}")));
    }
    let background = shade_depth(depth, scale);
    let discs = project_discs(depth, traj, radius, scale);
    let mut composite = background.clone();
    let mut frames = Vec::with_capacity(discs.len());
    for (k, disc) in discs.iter().enumerate() {
        let mut frame = background.clone();
        if let Some(d) = disc {
            let color = time_color(k, discs.len());
            draw(&mut frame, depth, scale, d, radius, color);
            draw(&mut composite, depth, scale, d, radius, color);
        }
        frames.push(frame);
    }
    Ok(Overlay { frames, composite })
}

/// Writes `frames/f000.ppm ...` and `composite.ppm` under `out_dir`.
pub fn render_overlay(depth: &DepthMap, traj: &Trajectory, radius: f64, scale: usize, out_dir: &Path) -> Result<Vec<PathBuf>> {
    let ov = overlay(depth, traj, radius, scale)?;
    let frame_dir = out_dir.join("frames");
    fs::create_dir_all(&frame_dir).map_err(|e| Error::io(&frame_dir, e))?;
    let mut written = Vec::with_capacity(ov.frames.len() + 1);
    for (k, frame) in ov.frames.iter().enumerate() {
        let path = frame_dir.join(format!("f{k:03}.ppm"));
        frame.save_ppm(&path)?;
        written.push(path);
    }
    let path = out_dir.join("composite.ppm");
    ov.composite.save_ppm(&path)?;
    written.push(path);
    Ok(written)
}
