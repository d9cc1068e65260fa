//! Config-driven experiment runner on top of the `semiclassical` crate.

pub mod catalog;
pub mod config;
pub mod dynamics;
pub mod experiments;
pub mod lattice;
pub mod output;
pub mod plot;
pub mod properties;

pub use catalog::list_experiments;
pub use config::{ConfigError, Experiment, ExperimentConfig};
pub use experiments::run;
pub use output::{Check, ExperimentManifest};
