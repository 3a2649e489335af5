//! Dense networks with hand-written backpropagation, Adam, and the
//! trajectory update, discriminator, depth correction and regression
//! networks with their training loops.
//!
//! All networks take batches as rows of an `ndarray` matrix. Trajectories
//! and scene descriptors are standardized with training-set statistics
//! before entering a network.

mod checkpoint;
mod descriptor;
mod mlp;
mod nets;
mod params;
mod train;

pub use checkpoint::{
    load_depthnet, load_regressor, load_trajnet, read_checkpoint, save_depthnet, save_regressor,
    save_trajnet, write_checkpoint,
};
pub use descriptor::{encode_scene, SceneDescriptor, DESCRIPTOR_GRID, DESCRIPTOR_LEN};
pub use mlp::{Mlp, MlpCache, LEAKY_SLOPE};
pub use nets::{
    sigmoid, softplus, DepthNet, DepthNetCache, Normalizer, TwoStageCache, TwoStageNet, TwoStageShape,
};
pub use params::{adam_step, AdamState, ParamSet};
pub use train::{
    disc_apply, mean_l2_flat, read_history, train_depthnet, train_regressor, train_trajnet,
    write_history, AnnealSchedule, DepthExample, DepthModel, EpochLog, RegressionExample,
    RegressionModel, RegressionTarget, TrainConfig, TrainedDepthNet, TrainedRegressor,
    TrainedTrajNet, TrajExample, TrajectoryModel,
};
