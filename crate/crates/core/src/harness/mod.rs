//! Experiment orchestration: configuration, file formats, the
//! strategy x descriptor-mode x fold runner, and reports.

pub mod config;
pub mod experiment;
pub mod io;
pub mod report;

pub use config::{DataSource, DescriptorMode, ExperimentConfig, SimSource, Strategy};
pub use experiment::{build_splits, load_data, run_experiment, run_on_data, ExperimentData};
pub use report::{read_report, write_report, Aggregate, FoldMetric, Report};
