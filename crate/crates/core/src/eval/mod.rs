//! Trajectory metrics, the non-learned baselines and the benchmark table.

mod benchmark;
mod histeq;
mod metrics;

pub use benchmark::{
    run_benchmark, score_trajectory, BenchmarkConfig, EvalReport, Method, OrderingCheck, Row, Scores,
};
pub use histeq::{hist_equalize_depth, DepthCdf, HISTOGRAM_BINS};
pub use metrics::{clamp_depth, estimate_contact_times, first_bounce_error, l2_traj, mean_trajectory, L2Mode};
