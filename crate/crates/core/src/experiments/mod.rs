//! Configured Monte Carlo experiments and their on-disk results.

mod config;
mod result;
mod runners;

pub use config::{ExperimentConfig, ExperimentKind, CONFIG_SCHEMA, MIN_DISTRIBUTIONAL_M, MIN_TRIALS};
pub use result::{timestamp, CsvTable, ExperimentOutput, Metadata, ResultRow, ResultTable};
pub use runners::{
    ks_distance, lines_at, reference_table, run_continuity_probe, run_edge_distribution, run_experiment,
    run_l1_stationarity, run_moment_convergence,
};
