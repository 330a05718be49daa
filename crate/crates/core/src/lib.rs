//! Magneto-quasistatic dosimetry with the co-simulation scalar potential
//! finite difference scheme.
//!
//! Pipeline: magnetic flux density samples → face fluxes on a voxel grid →
//! tree-cotree gauged edge vector potential → reduced Poisson system for the
//! time-integrated nodal potential → AMG-preconditioned FGMRES → edge
//! voltages → nodal and voxel-averaged field strength → percentile report.

pub mod dosimetry;
pub mod error;
pub mod field_source;
pub mod fit;
pub mod gauging;
pub mod linsolve;
pub mod pipeline;
pub mod registry;
pub mod voxel_model;

pub use error::{Error, Result};
