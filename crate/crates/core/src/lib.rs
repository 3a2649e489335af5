//! Ball-bounce re-simulation.
//!
//! A ball is forward-simulated over geometry recovered from a depth map.
//! When that depth map is wrong, the trajectory is wrong too; this crate
//! learns to fix both the depth calibration and the trajectory so that the
//! result matches a simulation on the true geometry.
//!
//! * [`geometry`]: camera model, depth maps, depth-to-mesh conversion
//! * [`simulator`]: sphere-vs-mesh simulation with a grid broadphase
//! * [`scenegen`]: procedural scenes, depth rendering and corruption, datasets
//! * [`neural`]: dense networks, Adam, trajectory/discriminator/depth nets
//! * [`pipeline`]: three-stage training and end-to-end correction
//! * [`eval`]: metrics, baselines, and the benchmark table
//! * [`render`]: trajectory overlays on shaded depth
//! * [`config`]: JSON run configuration
//! * [`cli`]: the `resim` command-line tool

pub mod cli;
pub mod config;
pub mod error;
pub mod eval;
pub mod formats;
pub mod geometry;
pub mod neural;
pub mod pipeline;
pub mod render;
pub mod scenegen;
pub mod simulator;

pub use error::{Error, Result};

/// Three-vector used for all positions, velocities and directions.
pub type Vec3 = nalgebra::Vector3<f64>;
