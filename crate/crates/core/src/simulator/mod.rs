//! Deterministic rigid-sphere simulation against a static triangle mesh.
//!
//! Symplectic Euler substeps (velocity, then position) with impulse-based
//! contacts resolved at their time of impact inside each substep. No spin.

mod broadphase;
mod contact;
mod trajectory;

use serde::{Deserialize, Serialize};

pub use broadphase::{CollisionWorld, Contact, TriangleGrid};
pub use contact::{
    closest_point_on_triangle, contact_impulse, resolve_contact, BodyState, ContactEvent,
    ContactParams,
};
pub use trajectory::{first_bounce_time, Trajectory};

use crate::geometry::TriangleMesh;
use crate::{Error, Result, Vec3};

pub const STANDARD_GRAVITY: f64 = 9.81;

/// Start state and material of the ball.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InitialConditions {
    pub position: Vec3,
    pub velocity: Vec3,
    pub radius: f64,
    pub restitution: f64,
    pub friction: f64,
}

impl Default for InitialConditions {
    /// 0.6 m/s straight out along the optical axis from 0.3 m in front of
    /// the camera; friction and restitution 0.5; 10 cm radius.
    fn default() -> Self {
        Self {
            position: Vec3::new(0.0, 0.0, 0.3),
            velocity: Vec3::new(0.0, 0.0, 0.6),
            radius: 0.1,
            restitution: 0.5,
            friction: 0.5,
        }
    }
}

impl InitialConditions {
    pub fn validate(&self) -> Result<()> {
        let finite = self.position.iter().chain(self.velocity.iter()).all(|c| c.is_finite());
        if !finite
            || !(self.radius > 0.0)
            || !(0.0..=1.0).contains(&self.restitution)
            || !(self.friction >= 0.0)
        {
            return Err(Error::InvalidInput(format!("bad initial conditions {self:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    /// Camera-frame gravity (m/s^2).
    pub gravity: Vec3,
    pub sample_rate: f64,
    pub duration: f64,
    pub substeps_per_sample: usize,
    /// Downward tilt of the optical axis from horizontal, degrees.
    pub camera_pitch: f64,
}

impl Default for SimConfig {
    /// 20 Hz for 1.5 s with the camera pitched 30 degrees.
    fn default() -> Self {
        Self::with_pitch(30.0)
    }
}

impl SimConfig {
    pub fn with_pitch(camera_pitch: f64) -> Self {
        Self {
            gravity: gravity_in_camera(camera_pitch, STANDARD_GRAVITY),
            sample_rate: 20.0,
            duration: 1.5,
            substeps_per_sample: 64,
            camera_pitch,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sample_rate > 0.0 && self.duration > 0.0 && self.substeps_per_sample >= 1)
            || !self.gravity.iter().all(|g| g.is_finite())
        {
            return Err(Error::SimConfig(format!("bad simulation config {self:?}")));
        }
        Ok(())
    }

    pub fn sample_count(&self) -> usize {
        (self.duration * self.sample_rate).round() as usize
    }

    pub fn dt(&self) -> f64 {
        1.0 / (self.sample_rate * self.substeps_per_sample as f64)
    }
}

/// World gravity `(0, -g, 0)` (y up) expressed in a camera frame (y down,
/// z forward) whose optical axis is tilted `pitch_deg` below horizontal.
pub fn gravity_in_camera(pitch_deg: f64, magnitude: f64) -> Vec3 {
    let (s, c) = pitch_deg.to_radians().sin_cos();
    Vec3::new(0.0, magnitude * c, magnitude * s)
}

/// A trajectory together with every contact resolved along the way.
#[derive(Debug, Clone)]
pub struct SimulationTrace {
    pub trajectory: Trajectory,
    pub events: Vec<(f64, ContactEvent)>,
}

/// Forward-simulates the ball over `world`.
///
/// `contact_times` lists the onset of every contact episode: a substep with
/// a contact that follows a substep without one. Resting contact therefore
/// contributes a single entry. Fails only when the tunneling guard trips.
pub fn simulate(world: &CollisionWorld, rho: &InitialConditions, cfg: &SimConfig) -> Result<Trajectory> {
    run(world, rho, cfg, false).map(|t| t.trajectory)
}

/// Like [`simulate`] but also returns the contact events.
pub fn simulate_traced(
    world: &CollisionWorld,
    rho: &InitialConditions,
    cfg: &SimConfig,
) -> Result<SimulationTrace> {
    run(world, rho, cfg, true)
}

/// Builds the collision structure for `mesh` and simulates once.
pub fn simulate_mesh(mesh: TriangleMesh, rho: &InitialConditions, cfg: &SimConfig) -> Result<Trajectory> {
    simulate(&CollisionWorld::new(mesh, cfg.gravity), rho, cfg)
}

fn run(world: &CollisionWorld, rho: &InitialConditions, cfg: &SimConfig, keep_events: bool) -> Result<SimulationTrace> {
    rho.validate()?;
    cfg.validate()?;
    let dt = cfg.dt();
    let gravity = world.gravity;
    let params = ContactParams {
        radius: rho.radius,
        restitution: rho.restitution,
        friction: rho.friction,
        rest_speed: 2.0 * gravity.norm() * dt,
    };
    let mut state = BodyState {
        position: rho.position,
        velocity: rho.velocity,
    };
    let count = cfg.sample_count();
    let mut samples = Vec::with_capacity(count);
    let mut contact_times = Vec::new();
    let mut events = Vec::new();
    let mut touching = false;
    let mut step: u64 = 0;
    for _ in 0..count {
        for _ in 0..cfg.substeps_per_sample {
            let t0 = step as f64 * dt;
            state.velocity += gravity * dt;
            let (next, event) = resolve_contact(state, world, &params, dt)?;
            state = next;
            match event {
                Some(ev) => {
                    if !touching {
                        contact_times.push(t0 + ev.time_of_impact);
                    }
                    touching = true;
                    if keep_events {
                        events.push((t0 + ev.time_of_impact, ev));
                    }
                }
                None => touching = false,
            }
            step += 1;
        }
        samples.push(state.position);
    }
    Ok(SimulationTrace {
        trajectory: Trajectory {
            sample_rate: cfg.sample_rate,
            samples,
            contact_times,
        },
        events,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Horizontal floor in a straight-ahead camera frame (+y down).
    pub(crate) fn floor(y: f64) -> TriangleMesh {
        TriangleMesh::new(
            vec![
                Vec3::new(-20.0, y, -20.0),
                Vec3::new(20.0, y, -20.0),
                Vec3::new(-20.0, y, 20.0),
                Vec3::new(20.0, y, 20.0),
            ],
            vec![[0, 3, 1], [0, 2, 3]],
        )
        .unwrap()
    }

    fn level_cfg(substeps: usize) -> SimConfig {
        SimConfig {
            substeps_per_sample: substeps,
            ..SimConfig::with_pitch(0.0)
        }
    }

    fn drop_from(height: f64, restitution: f64, friction: f64) -> InitialConditions {
        InitialConditions {
            position: Vec3::new(0.0, -height, 2.0),
            velocity: Vec3::zeros(),
            radius: 0.1,
            restitution,
            friction,
        }
    }

    fn world(mesh: TriangleMesh, cfg: &SimConfig) -> CollisionWorld {
        CollisionWorld::new(mesh, cfg.gravity)
    }

    #[test]
    fn default_gravity_points_down_and_forward() {
        let g = SimConfig::default().gravity;
        assert!((g.norm() - 9.81).abs() < 1e-12);
        assert!(g.y > 0.0 && g.z > 0.0 && g.x == 0.0);
        assert_eq!(SimConfig::default().sample_count(), 30);
    }

    #[test]
    fn free_fall_matches_parabola() {
        let cfg = SimConfig::default();
        let rho = InitialConditions {
            position: Vec3::new(0.0, 0.0, 2.0),
            velocity: Vec3::zeros(),
            ..Default::default()
        };
        let traj = simulate_mesh(TriangleMesh::default(), &rho, &cfg).unwrap();
        assert!(traj.contact_times.is_empty());
        let k = 9; // t = 0.5 s
        let t = traj.time_of(k);
        assert!((t - 0.5).abs() < 1e-12);
        let analytic = rho.position + cfg.gravity * (0.5 * t * t);
        let err = (traj.samples[k] - analytic).norm();
        assert!(err < 2e-3, "free-fall error {err}");
    }

    #[test]
    fn first_bounce_time_from_one_meter() {
        let cfg = level_cfg(64);
        // sphere bottom 1 m above the floor
        let rho = drop_from(1.1, 0.5, 0.5);
        let traj = simulate(&world(floor(0.0), &cfg), &rho, &cfg).unwrap();
        let t = first_bounce_time(&traj).unwrap();
        assert!((t - (2.0f64 / 9.81).sqrt()).abs() <= cfg.dt(), "t = {t}");

        let rho = drop_from(0.35, 0.5, 0.5);
        let traj = simulate(&world(floor(0.0), &cfg), &rho, &cfg).unwrap();
        let t = first_bounce_time(&traj).unwrap();
        assert!((t - 0.2258).abs() <= cfg.dt() + 1e-4, "t = {t}");
    }

    fn positional_apex(traj: &Trajectory, radius: f64) -> f64 {
        let (t1, t2) = (traj.contact_times[0], traj.contact_times[1]);
        traj.samples
            .iter()
            .enumerate()
            .filter(|(k, _)| traj.time_of(*k) > t1 && traj.time_of(*k) < t2)
            .map(|(_, p)| -p.y - radius)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    #[test]
    fn rebound_apex() {
        let rho = drop_from(1.1, 0.5, 0.0);
        // rebound velocity at 16 substeps implies the e^2 h apex
        let cfg = level_cfg(16);
        let trace = simulate_traced(&world(floor(0.0), &cfg), &rho, &cfg).unwrap();
        let v_up = -trace.events[0].1.velocity_after.y;
        let ballistic = v_up * v_up / (2.0 * 9.81);
        assert!((ballistic - 0.25).abs() < 0.25 * 0.02, "ballistic apex {ballistic}");

        // highest simulated position, sampled every substep at the default
        // 64 substeps per 20 Hz sample
        let fine = SimConfig {
            sample_rate: 20.0 * 64.0,
            substeps_per_sample: 1,
            ..SimConfig::with_pitch(0.0)
        };
        let traj = simulate(&world(floor(0.0), &fine), &rho, &fine).unwrap();
        let apex = positional_apex(&traj, rho.radius);
        assert!((apex - 0.25).abs() < 0.25 * 0.02, "apex {apex}");
    }

    #[test]
    fn inelastic_sticky_ball_comes_to_rest() {
        let cfg = SimConfig::default();
        let rho = InitialConditions {
            restitution: 0.0,
            friction: 10.0,
            ..Default::default()
        };
        // floor 1.4 m below a camera pitched 30 degrees: in the camera frame
        // the floor normal is -gravity
        let up = -cfg.gravity.normalize();
        let origin = -up * 1.4;
        let (a, b) = (Vec3::new(1.0, 0.0, 0.0), up.cross(&Vec3::new(1.0, 0.0, 0.0)));
        let corners = [(-20.0, -20.0), (20.0, -20.0), (-20.0, 20.0), (20.0, 20.0)]
            .map(|(s, t)| origin + a * s + b * t);
        let mesh = TriangleMesh::new(corners.to_vec(), vec![[0, 3, 1], [0, 2, 3]]).unwrap();
        let traj = simulate(&world(mesh, &cfg), &rho, &cfg).unwrap();
        let t0 = first_bounce_time(&traj).unwrap();
        for k in 1..traj.len() {
            if traj.time_of(k - 1) > t0 {
                let speed = (traj.samples[k] - traj.samples[k - 1]).norm() * cfg.sample_rate;
                assert!(speed < 1e-3, "speed {speed} at sample {k}");
            }
        }
        assert_eq!(traj.contact_times.len(), 1);
    }

    #[test]
    fn deterministic() {
        let cfg = SimConfig::default();
        let w = world(floor(1.2), &cfg);
        let a = simulate(&w, &InitialConditions::default(), &cfg).unwrap();
        let b = simulate(&w, &InitialConditions::default(), &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_bad_inputs() {
        let cfg = SimConfig::default();
        let w = world(TriangleMesh::default(), &cfg);
        let bad = InitialConditions { restitution: 1.5, ..Default::default() };
        assert!(simulate(&w, &bad, &cfg).is_err());
        let bad_cfg = SimConfig { substeps_per_sample: 0, ..cfg };
        assert!(simulate(&w, &InitialConditions::default(), &bad_cfg).is_err());
    }
}
