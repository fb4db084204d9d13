//! Idiotypic immune-network behaviour arbitration for a simulated mobile robot.
//!
//! The crate contains the reduced Farmer-style network that picks a robot
//! behaviour (antibody) from sensed conditions (antigens), nine probabilistic
//! rival selectors, a deterministic 2D maze simulator to drive them, and the
//! statistics used to compare controllers over run campaigns.
//!
//! Module map:
//! - [`immune`]: matching, suppression/stimulation, concentration dynamics.
//! - [`rl`]: reward evaluation and paratope updates.
//! - [`arbitration`]: the ten controllers and mu-rate bookkeeping.
//! - [`sensing`]: sensor metrics to antigen sets.
//! - [`actions`]: antibody to motor command table.
//! - [`world`]: maps, raycast sensors, kinematics and the episode loop.
//! - [`experiments`]: campaigns, fitness, run classification and t-tests.

// `!(x > 0.0)` style checks also reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod actions;
pub mod arbitration;
pub mod config;
pub mod error;
pub mod experiments;
pub mod geometry;
pub mod immune;
pub mod rl;
pub mod sensing;
pub mod world;

pub use error::{Error, Result};

/// Number of antibodies (behaviours).
pub const N_ANTIBODIES: usize = 16;
/// Number of antigens (environmental conditions).
pub const N_ANTIGENS: usize = 8;
/// Control period in seconds.
pub const TICK_SECONDS: f64 = 0.5;
