//! Domain types for triggered kinematic events and the signal chain that
//! turns raw dual-rate sensor data into the fixed-size classifier input.
//!
//! The chain is: low-pass conditioning, optional differentiation of angular
//! velocity into angular acceleration, decimation onto the linear-channel
//! grid, and full-scale normalization. All operations are pure functions
//! over immutable inputs.

mod filter;
mod types;
mod window;

pub use filter::{decimate, differentiate, lowpass_filter};
pub use types::{
    AngularMode, ChannelSeries, KinematicEvent, Label, LabelSource, LabelValue, ProcessedWindow,
    ProcessingConfig, Unit, ANG_VEL_FULL_SCALE_DPS, LIN_FULL_SCALE_G,
};
pub use window::{build_window, normalize};
