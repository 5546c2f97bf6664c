//! Ingestion, configuration, orchestration and reporting of experiment runs.

mod config;
pub mod data;
mod prepare;
mod report;
mod run;

pub use config::{DatasetFormat, ExperimentConfig};
pub use data::{load_adjacency_list, load_edge_list, load_movielens, parse_adjacency_list, parse_edge_list, split_holdout, Holdout};
pub use prepare::{load_dataset, make_plan, prepare, PreparedData};
pub use report::{MetricsWriter, RunMetadata, CSV_HEADER};
pub use run::{evaluate_checkpoint, run_centralized, run_experiment, run_method, ModelCheckpoint, RunOutcome};
