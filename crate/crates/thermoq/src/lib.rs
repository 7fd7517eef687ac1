//! Finite-dimensional quantum operations toolkit.
//!
//! Classifies channels, operations and instruments against the weak/strong
//! third law hierarchy (tiers I, II, III), with certificates attached to every
//! verdict. Matrices are dense `nalgebra` complex matrices throughout.

pub mod cli;
pub mod error;
pub mod fixedpoints;
pub mod generators;
pub mod hierarchy;
pub mod matser;
pub mod measurements;
pub mod opalg;
pub mod processes;
pub mod qmaps;
pub mod scaling;

pub use error::{Error, Result};
pub use opalg::{CMatrix, Tolerances, C64};
pub use qmaps::CPMap;
