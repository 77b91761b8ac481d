//! Experiment orchestration: configuration, statistics, reporting and the
//! desk-scale claim checks behind the CLI subcommands.
//!
//! Every experiment is reproducible given `(config, seed)`: replicas own
//! counter-based RNG streams, per-replica results are collected in replica
//! order and reduced sequentially, so thread count does not affect output.

pub mod config;
pub mod experiments;
pub mod report;
pub mod stats;

pub use config::{EllPolicy, ExperimentConfig, ProfileSpec};
pub use experiments::{
    clt_samples, run_bg_decay, run_entropy_growth, run_equilibrium_clt, run_flow_sweep,
    run_hydro_rate, CltSample, ExperimentOutcome,
};
pub use report::{RunWriter, SummaryRow};
