//! Exceptional points of PT-symmetric subwavelength resonator arrays in the
//! dilute capacitance-matrix model.
//!
//! * [`linalg`]: small dense complex linear algebra (characteristic
//!   polynomials, polynomial roots, numerical rank)
//! * [`model`] and [`capacitance`]: gain/loss profiles and the matrices built
//!   from them
//! * [`epfinder`]: exceptional points by coefficient matching
//! * [`spectra`]: eigenvalue trajectories and resonant frequencies
//! * [`sensing`]: eigenvalue splitting under perturbation

pub mod capacitance;
pub mod epfinder;
pub mod linalg;
pub mod model;
pub mod sensing;
pub mod spectra;
