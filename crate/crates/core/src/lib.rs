//! Numerical laboratory for level-spacing statistics and information
//! functionals.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

pub mod calogero;
pub mod densities;
pub mod entropy;
pub mod error;
pub mod fokker_planck;
pub mod grid;
pub mod maxent;
pub mod processes;
pub mod quad;
pub mod rmt;
pub mod rng;
pub mod special;
pub mod stats;

pub use densities::{Density, DensityModel, SurmiseLabel};
pub use error::{Error, Result};
pub use grid::{GridDensity, UniformGrid};
