//! Experiment configuration, orchestration and file output.

pub mod config;
pub mod initial;
pub mod output;
pub mod run;

pub use config::{Experiment, ExperimentConfig};
pub use output::{fmt_f64, read_polyline, OutputDir, MANIFEST};
pub use run::{
    compare_files, converge_study, curve_run, residual_study, run_config, ConvergenceReport, RunSummary,
};
