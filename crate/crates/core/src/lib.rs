//! Coupled social-climate simulator: a carbon-cycle and energy-balance box
//! model with an optional positive-feedback tipping flux, driven by
//! emissions that a replicator model of mitigation opinion scales down.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod coupled;
pub mod earth_system;
pub mod emissions;
pub mod io;
pub mod metrics;
pub mod numfmt;
pub mod simulation;
pub mod social;
pub mod sweeps;

pub use config::{default_params, load_config, ModelParams};
pub use emissions::EmissionSeries;
pub use metrics::{compute_metrics, MetricRecord};
pub use simulation::{run_pair, simulate, Trajectory, Variant};
