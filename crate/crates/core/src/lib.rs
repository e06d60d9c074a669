//! Numerical verification engine for quasi-Einstein metrics.

pub mod error;
pub mod cli;
pub mod cohom1;
pub mod expr;
pub mod geometry;
pub mod jet;
pub mod kahler;
pub mod quasi_einstein;
pub mod sampling;
pub mod warp;

#[cfg(test)]
mod testutil;

pub use error::{Error, Result};
