//! Transfer matrices, Robin spectra and perfect-transmission energies for
//! piecewise-constant potentials on a finite interval.

pub mod contour;
mod entire;
pub mod error;
pub mod exceptional;
pub mod family;
pub mod interp;
pub mod inverse;
pub mod potential;
pub mod pte;
pub mod spectrum;
pub mod transfer;

pub use error::{Error, Result};
pub use potential::{make_square_well, make_steps, PotentialSpec, Segment, StepFamilySpec};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
