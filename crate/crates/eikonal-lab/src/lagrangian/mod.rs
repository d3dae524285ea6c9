//! Approximate Lagrangian representations of the hypograph and epigraph.

pub mod build;
pub mod curve;
pub mod functionals;
pub mod partition;

pub use build::{
    build_block_curves, build_representation, build_representation_with, BuildOptions,
};
pub use curve::{curve_defect, BuildStats, Curve, CurveDefect, CurveEnsemble, DefectAtom, Node};
pub use functionals::{
    decomposition_residual, good_curve_filter, horizontal_error, pushforward_at,
    representation_error, vertical_cost, DecompositionReport, FilteredEnsemble,
    RepresentationError,
};
pub use partition::{classify_point, partition_e123, BlockClass, Seed};
