//! Procedural scenes, ground-truth depth rendering, depth corruption and
//! paired-trajectory datasets.

mod dataset;
mod noise;
mod render;
mod scene;

pub use dataset::{
    build_dataset, generate_record, generate_records, partition, record_id, record_seed,
    simulate_depth, Dataset, DatasetConfig, Manifest, RecordFiles, RecordMeta, SceneSample, Split,
    Splits, MANIFEST_FILE, RECORDS_DIR,
};
pub use noise::{corrupt_depth, NoiseDistribution, NoiseModel, MIN_CORRUPTED_DEPTH};
pub use render::render_depth;
pub use scene::{generate_scene, CameraPose, ConvexSolid, Obstacle, ObstacleKind, Scene, SceneParams};
