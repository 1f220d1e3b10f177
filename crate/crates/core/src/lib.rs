//! Vector-valued Allen–Cahn dynamics on the disk with a boundary contact
//! energy, and tools to compare them against curve-shortening flow.

pub mod calibration;
pub mod config;
pub mod curve;
pub mod diagnostics;
pub mod energetics;
pub mod export;
pub mod error;
pub mod grid;
pub mod linsolve;
pub mod manifolds;
pub mod par;
pub mod profile;
pub mod quad;
pub mod solver;
pub mod study;

pub use error::{Error, Result};
