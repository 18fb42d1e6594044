//! Policy-space zooming for average-reward reinforcement learning on
//! continuous state/action spaces.
//!
//! The crate is `no_std` (with `alloc`) and contains everything that is pure
//! computation: the benchmark environments, parameterized policy families and
//! their covering oracle, the model-free and model-based zooming agents, the
//! uniform-net baseline, and the seeded simulation loop. File formats, caching
//! and the command line live in the companion `policy-zoom` crate.
#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod agent;
pub mod constants;
pub mod env;
mod error;
pub mod evi;
pub mod kernel;
pub mod math;
pub mod partition;
pub mod policy;
pub mod rng;
pub mod sim;

pub use error::{Error, Result};

/// Maximum dimension supported for states, actions and policy parameters.
pub const MAX_DIM: usize = 3;
