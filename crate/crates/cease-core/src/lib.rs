//! Active-sensing stack for collaborative robot arms.
//!
//! The crate models everything a camera-scheduling safety layer needs to
//! decide where to look next while a robot arm executes a known trajectory
//! among dynamic obstacles:
//!
//! - [`geometry`] — pointing directions on the unit sphere, a discretized
//!   spherical grid, rotation-vector propagation, and field-of-view tests.
//! - [`belief`] — per-obstacle state confidence envelopes (SCEs): kinematic
//!   state, block covariance, and a scalar certainty that evolves with each
//!   valid or invalid observation.
//! - [`safe_region`] — a per-direction depth field bounding how close an
//!   unseen, velocity-bounded adversary could be, plus worst-case obstacle
//!   spawning from its boundary.
//! - [`collision`] — capsule/sphere collision predicates and the per-obstacle
//!   collision probability estimate combining collision checks, observation
//!   validity, and certainty.
//! - [`planner`] — receding-horizon search over camera view trajectories that
//!   maximizes discounted log-safety plus log transition probability.
//! - [`sim`] — a deterministic discrete-time world with scripted humanoid
//!   obstacles, observation synthesis, baseline policies, and the temporal
//!   coverage metric.

pub mod belief;
pub mod collision;
mod error;
pub mod geometry;
pub mod planner;
pub mod safe_region;
pub mod sim;

pub use error::{Error, Result};
