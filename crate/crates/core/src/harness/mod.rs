//! Monte Carlo experiments: model building and persistence, paired
//! classification trials over an SNR grid, and CSV output.

mod config;
mod experiment;
mod models;
mod report;
mod seeds;
pub mod significance;

pub use config::{ClassifierKind, ExperimentConfig};
pub use experiment::{run_experiment, ModelSource, ResultRow};
pub use models::{build_models, load_snr_models, BuildReport, SnrModels, TestpointModel};
pub use report::{emit_csv, read_summary_csv, ConfusionMatrix, SummaryRow};
pub use seeds::trial_seed;

/// Environment variable naming the default model directory.
pub const MODEL_DIR_ENV: &str = "MODCLASS_MODEL_DIR";
