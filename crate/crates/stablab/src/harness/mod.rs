//! Experiment harness: configuration, data, drivers and report output.

pub mod config;
pub mod data;
pub mod experiments;
pub mod report;

pub use config::{DataSource, Experiment, ExperimentConfig, LossKind, MethodName, ScheduleKind};
pub use experiments::{run_experiment, run_experiment_with};
pub use report::{emit_plot_data, load_series, Format, Report, Series};
