//! Numerical lab for the two-dimensional four-well model of the
//! cubic-to-orthorhombic martensitic transformation.
//!
//! Fields live on the periodic unit torus sampled at cell centers. Energies
//! follow the nondimensional scaling `E = eta^(1/3) E_surf + eta^(-2/3) E_elast`.

pub mod energy;
pub mod error;
pub mod fields;
pub mod io;
pub mod microstructures;
pub mod model;
pub mod rigidity;
pub mod spectral;

pub use error::{Error, Result};
pub use fields::{Axis, Grid, ModifiedIndicators, PhaseField, ScalarField, SymStrainField, VectorField2};

/// Crate version embedded in every output header.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
