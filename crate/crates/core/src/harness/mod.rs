//! Experiment runner: configuration, synthetic scenarios, parameter sweeps,
//! statistics and CSV output behind the `rss-align` command line.

pub mod cli;
pub mod config;
pub mod experiment;
pub mod output;
pub mod presets;
pub mod stats;

pub use config::ExperimentConfig;
pub use experiment::{
    compare_modes, compare_sources, run_localization_experiment, run_map_experiment, Draw, Scenario,
    SweepKind,
};
pub use presets::Preset;
