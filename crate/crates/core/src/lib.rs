//! Steady-state cavity-EIT transmission of a trapped ion with a quantized
//! motional mode, linewidth extraction, and linewidth-based thermometry.

pub mod dynamics;
pub mod error;
pub mod fit;
pub mod hilbert;
pub mod model;
pub mod sideband;
pub mod spectrum;
pub mod thermometry;

mod sparse;

pub use error::{Error, Result};
pub use sparse::SparseMatrix;
