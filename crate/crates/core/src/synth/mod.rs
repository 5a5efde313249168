//! Synthetic layouts, scripted scenes, a descent optimizer and Ripley K statistics.

mod generate;
mod optimize;
mod ripley;
mod scenario;

pub use generate::{generate, generate_matern, ClassCount, PointProcessSpec, ProcessKind, RingSpec};
pub use optimize::{optimize_layout, OptimizeResult, OptimizerConfig, TraceRow};
pub use ripley::{
    k_discrepancy_test, paired_t_test, ripley_k, ripley_k_with, EdgeCorrection, KReport, PairStats, DEFAULT_RADII,
    SIGNIFICANCE,
};
pub use scenario::{ring_scenario, Scenario, ScenarioParams};
