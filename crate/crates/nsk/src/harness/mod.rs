//! Experiment orchestration: configuration, initial-data profiles, the
//! coupling-strength sweep, the perturbation stability study, and report
//! emission (JSON, CSV, SVG).

pub mod config;
pub mod experiments;
pub mod init;
pub mod report;
pub mod svg;

pub use config::{BetaRule, ExperimentConfig, HarnessError};
pub use experiments::{sweep_alpha, weak_strong_study, well_prepared_init, SweepReport, WeakStrongReport};
pub use init::InitProfile;
