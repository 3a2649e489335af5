use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::noise::{corrupt_depth, NoiseDistribution, NoiseModel};
use super::render::render_depth;
use super::scene::{generate_scene, Scene, SceneParams};
use crate::formats::{load_depth, read_json, save_depth, write_json};
use crate::geometry::{mesh_from_depth, CameraIntrinsics, DepthMap};
use crate::simulator::{gravity_in_camera, simulate_mesh, InitialConditions, SimConfig, Trajectory};
use crate::{Error, Result};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const RECORDS_DIR: &str = "records";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        })
    }
}

impl FromStr for Split {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "val" => Ok(Split::Val),
            "test" => Ok(Split::Test),
            other => Err(Error::InvalidInput(format!("unknown split {other:?}"))),
        }
    }
}

/// Everything that determines a dataset besides the output directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DatasetConfig {
    pub n: usize,
    pub seed: u64,
    /// Train, validation and test fractions.
    pub split: [f64; 3],
    pub width: usize,
    pub height: usize,
    pub scene: SceneParams,
    pub noise: NoiseDistribution,
    /// Rate, duration and substeps; gravity is re-derived from the scene's
    /// camera pitch.
    pub sim: SimConfig,
    pub rho: InitialConditions,
    /// Randomize launch speed (x0.8 to x1.2) and heading (up to 10 degrees)
    /// per record.
    pub jitter_rho: bool,
    /// Depth-jump threshold for dropping mesh triangles; `None` keeps all.
    pub discontinuity_threshold: Option<f64>,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        Self {
            n: 3000,
            seed: 0,
            split: [0.8, 0.1, 0.1],
            width: 64,
            height: 64,
            scene: SceneParams::default(),
            noise: NoiseDistribution::default(),
            sim: SimConfig::default(),
            rho: InitialConditions::default(),
            jitter_rho: false,
            discontinuity_threshold: None,
        }
    }
}

impl DatasetConfig {
    pub fn validate(&self) -> Result<()> {
        let sum: f64 = self.split.iter().sum();
        if self.split.iter().any(|f| !(*f >= 0.0)) || (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidInput(format!(
                "split fractions {:?} must be non-negative and sum to 1",
                self.split
            )));
        }
        self.intrinsics()?;
        self.rho.validate()?;
        self.sim_config().validate()
    }

    pub fn intrinsics(&self) -> Result<CameraIntrinsics> {
        CameraIntrinsics::from_fov(self.width, self.height, self.scene.fov_deg)
    }

    pub fn sim_config(&self) -> SimConfig {
        SimConfig {
            gravity: gravity_in_camera(self.scene.camera_pitch, self.sim.gravity.norm()),
            camera_pitch: self.scene.camera_pitch,
            ..self.sim
        }
    }

    /// Record counts per split; the test split takes the rounding remainder.
    pub fn split_counts(&self) -> [usize; 3] {
        let train = (self.n as f64 * self.split[0]).round() as usize;
        let val = ((self.n as f64 * self.split[1]).round() as usize).min(self.n - train);
        [train, val, self.n - train - val]
    }

    pub fn split_of(&self, index: usize) -> Split {
        let [train, val, _] = self.split_counts();
        if index < train {
            Split::Train
        } else if index < train + val {
            Split::Val
        } else {
            Split::Test
        }
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Seed owned by record `index` of a dataset with master seed `master`.
pub fn record_seed(master: u64, index: u64) -> u64 {
    splitmix64(splitmix64(master) ^ index)
}

fn sub_seed(seed: u64, stream: u64) -> u64 {
    splitmix64(seed ^ stream.wrapping_mul(0xD6E8_FEB8_6659_FD93))
}

pub fn record_id(index: usize) -> String {
    format!("{index:06}")
}

/// Metadata stored next to each record's depth maps and trajectories.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordMeta {
    pub id: String,
    pub index: usize,
    pub seed: u64,
    pub split: Split,
    pub rho: InitialConditions,
    pub noise: NoiseModel,
    pub scene: Scene,
    pub sim: SimConfig,
    /// Mesh edge cut used for both simulations.
    #[serde(default)]
    pub discontinuity_threshold: Option<f64>,
}

/// One dataset record.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneSample {
    pub meta: RecordMeta,
    pub gt_depth: DepthMap,
    pub noisy_depth: DepthMap,
    pub gt_trajectory: Trajectory,
    pub initial_trajectory: Trajectory,
}

impl SceneSample {
    pub fn id(&self) -> &str {
        &self.meta.id
    }

    pub fn rho(&self) -> &InitialConditions {
        &self.meta.rho
    }

    pub fn sim(&self) -> &SimConfig {
        &self.meta.sim
    }

    /// Simulates this record's ball over `depth` with its own settings.
    pub fn simulate_on(&self, depth: &DepthMap) -> Result<Trajectory> {
        simulate_depth(depth, &self.meta.rho, &self.meta.sim, self.meta.discontinuity_threshold)
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let f = RecordFiles::new(dir);
        save_depth(&self.gt_depth, &f.gt, &f.intrinsics)?;
        save_depth(&self.noisy_depth, &f.noisy, &f.intrinsics)?;
        self.gt_trajectory.save_json(&f.gt_traj)?;
        self.initial_trajectory.save_json(&f.init_traj)?;
        write_json(&f.meta, &self.meta)
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let f = RecordFiles::new(dir);
        Ok(Self {
            meta: read_json(&f.meta)?,
            gt_depth: load_depth(&f.gt, &f.intrinsics)?,
            noisy_depth: load_depth(&f.noisy, &f.intrinsics)?,
            gt_trajectory: Trajectory::load_json(&f.gt_traj)?,
            initial_trajectory: Trajectory::load_json(&f.init_traj)?,
        })
    }
}

/// Paths of the files making up one record directory.
pub struct RecordFiles {
    pub gt: PathBuf,
    pub noisy: PathBuf,
    pub intrinsics: PathBuf,
    pub gt_traj: PathBuf,
    pub init_traj: PathBuf,
    pub meta: PathBuf,
}

impl RecordFiles {
    pub fn new(dir: &Path) -> Self {
        Self {
            gt: dir.join("gt.pfm"),
            noisy: dir.join("noisy.pfm"),
            intrinsics: dir.join("intrinsics.json"),
            gt_traj: dir.join("gt_traj.json"),
            init_traj: dir.join("init_traj.json"),
            meta: dir.join("meta.json"),
        }
    }
}

/// Simulates `rho` over the mesh built from `depth`.
pub fn simulate_depth(
    depth: &DepthMap,
    rho: &InitialConditions,
    sim: &SimConfig,
    discontinuity_threshold: Option<f64>,
) -> Result<Trajectory> {
    simulate_mesh(mesh_from_depth(depth, discontinuity_threshold)?, rho, sim)
}

fn jitter(rho: &InitialConditions, rng: &mut impl Rng) -> InitialConditions {
    let speed = rho.velocity.norm() * rng.random_range(0.8..1.2);
    let heading = rng.random_range(-10.0f64..10.0).to_radians();
    let (s, c) = heading.sin_cos();
    let mut out = *rho;
    out.velocity.x = speed * s;
    out.velocity.z = speed * c;
    out
}

/// Generates record `index` of the dataset described by `cfg` in memory.
pub fn generate_record(cfg: &DatasetConfig, index: usize) -> Result<SceneSample> {
    let seed = record_seed(cfg.seed, index as u64);
    let scene = generate_scene(sub_seed(seed, 0), &cfg.scene)?;
    let intrinsics = cfg.intrinsics()?;
    // single precision up front so PFM storage is lossless
    let mut gt_depth = render_depth(&scene, &intrinsics);
    gt_depth.quantize_f32();
    let noise = cfg.noise.sample(&mut ChaCha8Rng::seed_from_u64(sub_seed(seed, 1)))?;
    let mut noisy_depth = corrupt_depth(&gt_depth, &noise, sub_seed(seed, 2))?;
    noisy_depth.quantize_f32();
    let rho = if cfg.jitter_rho {
        jitter(&cfg.rho, &mut ChaCha8Rng::seed_from_u64(sub_seed(seed, 3)))
    } else {
        cfg.rho
    };
    let sim = cfg.sim_config();
    let gt_trajectory = simulate_depth(&gt_depth, &rho, &sim, cfg.discontinuity_threshold)?;
    let initial_trajectory = simulate_depth(&noisy_depth, &rho, &sim, cfg.discontinuity_threshold)?;
    Ok(SceneSample {
        meta: RecordMeta {
            id: record_id(index),
            index,
            seed,
            split: cfg.split_of(index),
            rho,
            noise,
            scene,
            sim,
            discontinuity_threshold: cfg.discontinuity_threshold,
        },
        gt_depth,
        noisy_depth,
        gt_trajectory,
        initial_trajectory,
    })
}

/// Generates all records in memory, in index order.
pub fn generate_records(cfg: &DatasetConfig) -> Result<Vec<SceneSample>> {
    cfg.validate()?;
    (0..cfg.n).into_par_iter().map(|i| generate_record(cfg, i)).collect()
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Splits {
    pub train: Vec<String>,
    pub val: Vec<String>,
    pub test: Vec<String>,
}

impl Splits {
    pub fn get(&self, split: Split) -> &[String] {
        match split {
            Split::Train => &self.train,
            Split::Val => &self.val,
            Split::Test => &self.test,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub n: usize,
    pub seed: u64,
    pub splits: Splits,
    pub record_seeds: Vec<u64>,
    pub config: DatasetConfig,
}

/// Generates every record in parallel, writes each to
/// `out_dir/records/<id>/`, then writes `out_dir/manifest.json`.
pub fn build_dataset(cfg: &DatasetConfig, out_dir: &Path) -> Result<Manifest> {
    cfg.validate()?;
    let records = out_dir.join(RECORDS_DIR);
    fs::create_dir_all(&records).map_err(|e| Error::io(&records, e))?;
    let seeds = (0..cfg.n)
        .into_par_iter()
        .map(|i| {
            let sample = generate_record(cfg, i)?;
            sample.save(&records.join(sample.id()))?;
            Ok(sample.meta.seed)
        })
        .collect::<Result<Vec<u64>>>()?;
    let mut splits = Splits::default();
    for i in 0..cfg.n {
        let list = match cfg.split_of(i) {
            Split::Train => &mut splits.train,
            Split::Val => &mut splits.val,
            Split::Test => &mut splits.test,
        };
        list.push(record_id(i));
    }
    let manifest = Manifest {
        n: cfg.n,
        seed: cfg.seed,
        splits,
        record_seeds: seeds,
        config: cfg.clone(),
    };
    write_json(&out_dir.join(MANIFEST_FILE), &manifest)?;
    Ok(manifest)
}

/// A dataset directory written by [`build_dataset`].
#[derive(Debug, Clone)]
pub struct Dataset {
    pub root: PathBuf,
    pub manifest: Manifest,
}

impl Dataset {
    pub fn open(root: &Path) -> Result<Self> {
        Ok(Self {
            root: root.to_path_buf(),
            manifest: read_json(&root.join(MANIFEST_FILE))?,
        })
    }

    pub fn record_dir(&self, id: &str) -> PathBuf {
        self.root.join(RECORDS_DIR).join(id)
    }

    pub fn load_record(&self, id: &str) -> Result<SceneSample> {
        SceneSample::load(&self.record_dir(id))
    }

    pub fn load_split(&self, split: Split) -> Result<Vec<SceneSample>> {
        self.manifest
            .splits
            .get(split)
            .par_iter()
            .map(|id| self.load_record(id))
            .collect()
    }
}

/// Splits in-memory records by their assigned split, keeping order.
pub fn partition(records: Vec<SceneSample>) -> [Vec<SceneSample>; 3] {
    let mut out: [Vec<SceneSample>; 3] = Default::default();
    for r in records {
        let slot = match r.meta.split {
            Split::Train => 0,
            Split::Val => 1,
            Split::Test => 2,
        };
        out[slot].push(r);
    }
    out
}
