//! Pigeonring filtering for thresholded similarity search.

pub mod analysis;
pub mod error;
pub mod framework;
pub mod hamming;
pub mod io;
pub mod registry;
pub mod ring;
pub mod setsim;
pub mod stats;
pub mod strsim;

pub use error::{Error, Result};
