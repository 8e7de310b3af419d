//! End-to-end pipeline for triggered 6DOF mouthguard kinematics: device
//! trigger simulation, labeled synthetic data generation, signal
//! conditioning into fixed-size windows, a from-scratch convolutional
//! classifier and an SVM baseline, evaluation metrics, and standardized
//! event-file exports.
//!
//! Start with the runnable programs under `examples/` — there is one per
//! major capability — or with the `impact-pipe` binary, which exposes the
//! same pipeline as subcommands.

pub mod cli;
pub mod config;
pub mod dataset;
pub mod error;
pub mod eval;
pub mod kinematics;
pub mod mignet;
pub mod sim;
pub mod svm;

pub use error::{PipeError, Result};

/// Version string embedded in reports, manifests, and model files.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
