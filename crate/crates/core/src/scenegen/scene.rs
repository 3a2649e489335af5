use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::render::render_depth;
use crate::geometry::CameraIntrinsics;
use crate::{Error, Result, Vec3};

/// Camera held upright at `height` above the floor, optical axis tilted
/// `pitch` degrees below horizontal, looking along world +z.
///
/// World frame: `y` up, floor at `y = 0`, `z` forward (horizontal).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraPose {
    pub height: f64,
    pub pitch: f64,
}

impl CameraPose {
    pub fn position(&self) -> Vec3 {
        Vec3::new(0.0, self.height, 0.0)
    }

    /// World-frame directions of the camera's x (right), y (down) and z
    /// (forward) axes.
    pub fn axes(&self) -> [Vec3; 3] {
        let (s, c) = self.pitch.to_radians().sin_cos();
        [
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(0.0, -c, -s),
            Vec3::new(0.0, -s, c),
        ]
    }

    pub fn camera_to_world(&self, p: &Vec3) -> Vec3 {
        let [x, y, z] = self.axes();
        self.position() + x * p.x + y * p.y + z * p.z
    }

    pub fn world_to_camera(&self, p: &Vec3) -> Vec3 {
        let [x, y, z] = self.axes();
        let d = p - self.position();
        Vec3::new(d.dot(&x), d.dot(&y), d.dot(&z))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObstacleKind {
    Box,
    /// Wedge rising from the floor at local `-z` to full height at `+z`.
    Ramp,
}

/// An obstacle standing on the floor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Obstacle {
    pub kind: ObstacleKind,
    /// Footprint center on the floor, world x and z.
    pub center: [f64; 2],
    /// Full extents along local x, y (height) and z.
    pub size: [f64; 3],
    /// Rotation about world y, radians.
    pub yaw: f64,
}

/// Convex solid as the intersection of half-spaces `n . x <= d`.
#[derive(Debug, Clone)]
pub struct ConvexSolid {
    pub planes: Vec<(Vec3, f64)>,
}

impl ConvexSolid {
    /// Entry distance along `origin + t * dir`, if the ray hits at `t >= 0`.
    pub fn ray_hit(&self, origin: &Vec3, dir: &Vec3) -> Option<f64> {
        let mut t_in = f64::NEG_INFINITY;
        let mut t_out = f64::INFINITY;
        for (n, d) in &self.planes {
            let denom = n.dot(dir);
            let num = d - n.dot(origin);
            if denom == 0.0 {
                if num < 0.0 {
                    return None;
                }
            } else if denom < 0.0 {
                t_in = t_in.max(num / denom);
            } else {
                t_out = t_out.min(num / denom);
            }
            if t_in > t_out {
                return None;
            }
        }
        if t_out < 0.0 {
            None
        } else {
            Some(t_in.max(0.0))
        }
    }

    /// Whether `p` lies inside the solid grown by `margin`.
    pub fn contains(&self, p: &Vec3, margin: f64) -> bool {
        self.planes.iter().all(|(n, d)| n.dot(p) <= d + margin)
    }
}

impl Obstacle {
    pub fn solid(&self) -> ConvexSolid {
        let [sx, sy, sz] = self.size;
        let (hx, hz) = (sx / 2.0, sz / 2.0);
        let mut local = vec![
            (Vec3::new(1.0, 0.0, 0.0), hx),
            (Vec3::new(-1.0, 0.0, 0.0), hx),
            (Vec3::new(0.0, 0.0, 1.0), hz),
            (Vec3::new(0.0, 0.0, -1.0), hz),
            (Vec3::new(0.0, -1.0, 0.0), 0.0),
        ];
        match self.kind {
            ObstacleKind::Box => local.push((Vec3::new(0.0, 1.0, 0.0), sy)),
            ObstacleKind::Ramp => {
                let n = Vec3::new(0.0, 1.0, -sy / sz);
                let len = n.norm();
                local.push((n / len, sy / 2.0 / len));
            }
        }
        let (s, c) = self.yaw.sin_cos();
        let rotate = |v: &Vec3| Vec3::new(c * v.x + s * v.z, v.y, -s * v.x + c * v.z);
        let shift = Vec3::new(self.center[0], 0.0, self.center[1]);
        ConvexSolid {
            planes: local
                .iter()
                .map(|(n, d)| {
                    let nw = rotate(n);
                    (nw, d + nw.dot(&shift))
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    pub camera: CameraPose,
    /// Floor plane height in world y.
    pub floor: f64,
    pub obstacles: Vec<Obstacle>,
    /// Depth assigned to rays that hit nothing.
    pub max_depth: f64,
}

/// Distributions the procedural generator samples from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SceneParams {
    pub camera_height: [f64; 2],
    pub camera_pitch: f64,
    /// Horizontal field of view used for frustum placement and the
    /// median-depth filter.
    pub fov_deg: f64,
    pub obstacle_count: [usize; 2],
    /// Chance that an obstacle is placed near the ball's path.
    pub near_path_probability: f64,
    /// Horizontal distance band for that obstacle.
    pub near_path_distance: [f64; 2],
    pub ramp_probability: f64,
    pub box_footprint: [f64; 2],
    pub box_height: [f64; 2],
    pub ramp_footprint: [f64; 2],
    pub ramp_height: [f64; 2],
    /// Horizontal distance band (m) in front of the camera for obstacles.
    pub placement_distance: [f64; 2],
    pub max_depth: f64,
    /// Scenes whose rendered median depth is below this are resampled.
    pub min_median_depth: f64,
    pub max_retries: usize,
    /// Camera-frame point (and radius) no obstacle may enclose: the ball
    /// start.
    pub keep_clear: Vec3,
    pub keep_clear_radius: f64,
}

impl Default for SceneParams {
    fn default() -> Self {
        Self {
            camera_height: [0.9, 1.8],
            camera_pitch: 30.0,
            fov_deg: 120.0,
            obstacle_count: [1, 6],
            near_path_probability: 0.5,
            near_path_distance: [0.5, 1.1],
            ramp_probability: 0.35,
            box_footprint: [0.25, 1.2],
            box_height: [0.1, 1.0],
            ramp_footprint: [0.4, 1.4],
            ramp_height: [0.1, 0.6],
            placement_distance: [0.5, 7.0],
            max_depth: 8.0,
            min_median_depth: 1.5,
            max_retries: 64,
            keep_clear: Vec3::new(0.0, 0.0, 0.3),
            keep_clear_radius: 0.15,
        }
    }
}

impl SceneParams {
    fn validate(&self) -> Result<()> {
        let range = |r: [f64; 2]| r[0] <= r[1] && r[0].is_finite() && r[1].is_finite();
        let ok = range(self.camera_height)
            && self.camera_height[0] > 0.0
            && self.obstacle_count[0] <= self.obstacle_count[1]
            && range(self.box_footprint)
            && range(self.box_height)
            && range(self.ramp_footprint)
            && range(self.ramp_height)
            && range(self.placement_distance)
            && self.placement_distance[0] >= 0.5
            && self.max_depth > self.placement_distance[0]
            && self.fov_deg > 0.0
            && self.fov_deg < 180.0;
        if ok {
            Ok(())
        } else {
            Err(Error::Generation(format!("inconsistent scene parameters {self:?}")))
        }
    }
}

fn uniform(rng: &mut impl Rng, r: [f64; 2]) -> f64 {
    if r[0] == r[1] {
        r[0]
    } else {
        rng.random_range(r[0]..r[1])
    }
}

fn sample_obstacle(rng: &mut impl Rng, params: &SceneParams, near_path: bool) -> Obstacle {
    let kind = if rng.random_bool(params.ramp_probability) {
        ObstacleKind::Ramp
    } else {
        ObstacleKind::Box
    };
    let (footprint, height) = match kind {
        ObstacleKind::Box => (params.box_footprint, params.box_height),
        ObstacleKind::Ramp => (params.ramp_footprint, params.ramp_height),
    };
    let size = [uniform(rng, footprint), uniform(rng, height), uniform(rng, footprint)];
    let center = if near_path {
        // where the ball lands and rolls
        let z = uniform(rng, params.near_path_distance);
        [rng.random_range(-0.35..0.35), z]
    } else {
        let half_fov = (params.fov_deg / 2.0).to_radians();
        let z = uniform(rng, params.placement_distance).max(0.5);
        let x = rng.random_range(-1.0..1.0) * z * half_fov.tan();
        [x, z]
    };
    Obstacle {
        kind,
        center,
        size,
        yaw: rng.random_range(-std::f64::consts::PI..std::f64::consts::PI),
    }
}

fn median_depth(scene: &Scene, fov_deg: f64) -> f64 {
    let intr = CameraIntrinsics::from_fov(16, 16, fov_deg).expect("valid preview camera");
    let mut values = render_depth(scene, &intr).values;
    let mid = values.len() / 2;
    *values.select_nth_unstable_by(mid, f64::total_cmp).1
}

/// Samples a scene; identical `(seed, params)` give identical scenes.
pub fn generate_scene(seed: u64, params: &SceneParams) -> Result<Scene> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..params.max_retries.max(1) {
        let camera = CameraPose {
            height: uniform(&mut rng, params.camera_height),
            pitch: params.camera_pitch,
        };
        let start = camera.camera_to_world(&params.keep_clear);
        let count = rng.random_range(params.obstacle_count[0]..=params.obstacle_count[1]);
        let mut obstacles = Vec::with_capacity(count);
        let mut attempts = 0;
        while obstacles.len() < count && attempts < 16 * (count + 1) {
            attempts += 1;
            let near = rng.random_bool(params.near_path_probability);
            let obstacle = sample_obstacle(&mut rng, params, near);
            if obstacle.solid().contains(&start, params.keep_clear_radius) {
                continue;
            }
            obstacles.push(obstacle);
        }
        if obstacles.len() < count {
            continue;
        }
        let scene = Scene {
            camera,
            floor: 0.0,
            obstacles,
            max_depth: params.max_depth,
        };
        if median_depth(&scene, params.fov_deg) >= params.min_median_depth {
            return Ok(scene);
        }
    }
    Err(Error::Generation(format!(
        "no acceptable scene after {} attempts (seed {seed})",
        params.max_retries
    )))
}
