//! Experiment layer of the micropolar shell solver: configuration parsing,
//! the radial-compression experiment driver, wrinkle quantification, and the
//! on-disk state formats.  The `shell` binary is a thin command-line wrapper
//! around this crate.

pub mod config;
pub mod experiment;
pub mod output;
pub mod wrinkle;

pub use config::ExperimentConfig;
pub use experiment::{run_experiment, ExperimentOutcome};
pub use output::{read_state_csv, write_state_csv, write_summary, write_vtk};
pub use wrinkle::{wrinkle_metric, WrinkleMetric};
