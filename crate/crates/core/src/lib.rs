pub mod cli;
pub mod dtn;
pub mod error;
pub mod json17;
pub mod linalg;
pub mod point_vortex;
pub mod spectral;
pub mod vortex_green;
pub mod vortex_patch;

pub use error::{Error, Result};
