//! Design, simulation and control planning for voxel lattice skins with
//! phase-change variable stiffness.

pub mod calibration;
pub mod design;
pub mod error;
pub mod geometry;
pub mod joints;
pub mod mechanics;
pub mod provenance;
pub mod scheduler;
pub mod thermal;
pub mod voxel;

pub use error::{Result, SkinError};

/// Toolkit version embedded in every output artifact.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
