use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::formats::{read_json, write_json};
use crate::{Error, Result, Vec3};

/// Sampled center-of-mass positions in the camera frame. Sample `k`
/// (zero-based) is taken at `t = (k + 1) / sample_rate`; the start state is
/// not part of the trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub sample_rate: f64,
    pub samples: Vec<Vec3>,
    /// Times (s) at which the ball came into contact with the mesh.
    pub contact_times: Vec<f64>,
}

impl Trajectory {
    pub fn new(sample_rate: f64, samples: Vec<Vec3>) -> Self {
        Self {
            sample_rate,
            samples,
            contact_times: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate
    }

    pub fn time_of(&self, k: usize) -> f64 {
        (k + 1) as f64 / self.sample_rate
    }

    /// `[x0, y0, z0, x1, ...]`
    pub fn flatten(&self) -> Vec<f64> {
        self.samples.iter().flat_map(|p| [p.x, p.y, p.z]).collect()
    }

    pub fn from_flat(sample_rate: f64, flat: &[f64]) -> Result<Self> {
        if !flat.len().is_multiple_of(3) {
            return Err(Error::InvalidInput(format!(
                "flattened trajectory length {} is not a multiple of 3",
                flat.len()
            )));
        }
        Ok(Self::new(
            sample_rate,
            flat.chunks_exact(3).map(|c| Vec3::new(c[0], c[1], c[2])).collect(),
        ))
    }

    pub fn is_finite(&self) -> bool {
        self.samples.iter().all(|p| p.iter().all(|c| c.is_finite()))
    }

    pub fn save_json(&self, path: &Path) -> Result<()> {
        write_json(path, self)
    }

    pub fn load_json(path: &Path) -> Result<Self> {
        read_json(path)
    }

    /// `t,x,y,z` rows for plotting.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| Error::io(path, e.into());
        w.write_record(["t", "x", "y", "z"]).map_err(io)?;
        for (k, p) in self.samples.iter().enumerate() {
            w.serialize((self.time_of(k), p.x, p.y, p.z)).map_err(io)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::io(path, e.into_error()))?;
        std::fs::File::create(path)
            .and_then(|mut f| f.write_all(&bytes))
            .map_err(|e| Error::io(path, e))
    }
}

/// Earliest contact, if the ball ever touched the mesh.
pub fn first_bounce_time(traj: &Trajectory) -> Option<f64> {
    traj.contact_times.first().copied()
}
