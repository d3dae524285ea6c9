//! Numerical laboratory for entropy defects of eikonal weak solutions.
//!
//! A solution is given by a lifting `phi` of a divergence-free unit field
//! `u = e^{i phi}` on a grid. The crate computes the kinetic defect measure,
//! builds approximate Lagrangian representations of the hypograph and
//! epigraph by characteristic transport with per-step W1 corrections, and
//! runs finite-scale rectifiability diagnostics on the defect.

pub mod cli;
pub mod config;
pub mod error;
pub mod field;
pub mod io;
pub mod kinetic;
pub mod lagrangian;
pub mod measure;
pub mod rectifiability;
pub mod testfn;
pub mod transport;

pub use error::{Error, Result};
pub use field::LiftedField;
pub use measure::{Atom, DiscreteMeasure, MeasureKind};
