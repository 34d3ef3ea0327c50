//! Reconstruction-based competency estimation for an image classifier and
//! a competency-aware sampling planner with LQR path tracking, exercised in
//! a deterministic flat-ground simulator.

pub mod competency;
pub mod control;
pub mod dynamics;
pub mod error;
pub mod eval;
pub mod image;
mod io;
pub mod perception;
pub mod planner;
pub mod reconstruction;
pub mod segmentation;
pub mod world;

pub use error::{Error, Result};
