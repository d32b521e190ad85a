//! Damage-minimizing manipulation sequence planning by mental simulation,
//! and learned manipulation strategies by label ranking.

// matrix code reads better with explicit indices
#![allow(clippy::needless_range_loop)]

pub mod cli;
pub mod dynamics;
pub mod error;
pub mod features;
pub mod geometry;
pub mod pipeline;
pub mod planner;
pub mod ranking;
pub mod scene;

pub use error::{Error, Result};
