//! Monte Carlo study of how response-category count, measurement error,
//! item count and sample size affect true-score recovery and regression
//! inference under the normal-ogive graded response model.

pub mod chart;
pub mod config;
pub mod curves;
pub mod dependency;
pub mod engine;
pub mod error;
pub mod grm;
pub mod output;
pub mod seeding;
pub mod stats;

pub use config::{expand_grid, parse_config, Mode, Overrides, ProfileSpec, RunConfig};
pub use dependency::{named_profile, DependencyProfile, ProfileName};
pub use engine::{
    run_grid, run_grid_detailed, run_replication, CellSummary, ConditionCell, PredictorSpec,
    ReplicationResult,
};
pub use error::{Error, Result};
