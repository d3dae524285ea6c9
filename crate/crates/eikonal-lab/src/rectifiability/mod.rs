//! Structure of the defect measure: pairing of curve jumps, sector
//! classification, shock curves and density diagnostics.

mod density;
mod envelope;
mod events;
mod report;
mod sector;
mod shock;

pub use density::{
    default_floors, default_sigma_threshold, density_dichotomy, jump_formula_check,
    mass_near_sigma, region_mass_fraction, sigma_detect, vmo_check, Dichotomy, DichotomyReport,
    JumpFormulaReport, MassIndex, SigmaPoint, SigmaSet,
};
pub use envelope::{anchored_envelope, lipschitz_envelope, min_constant};
pub use events::{
    classify_event, jump_events, pair_class, pair_defects, JumpEvent, PairGrid, PairedEvent,
    PairingResult, Part,
};
pub use report::{
    coarse_nu, rectifiability_report, RectifyDiagnostics, RectifyOptions, RectifyOutput,
    RectifyReport,
};
pub use sector::{classify_angles, sector_cover, EventClass, SectorCover};
pub use shock::{
    graph_distance, no_crossing_audit, reflect_ensemble, shock_concentration, shock_family,
    AuditReport, SectorFrame, ShockCurve, ShockFamily, ShockOptions,
};
