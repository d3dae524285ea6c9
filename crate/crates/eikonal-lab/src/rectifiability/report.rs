//! Concentration report of the paired defect measures.

use serde::{Deserialize, Serialize};

use super::density::{default_sigma_threshold, mass_near_sigma, sigma_detect, SigmaSet};
use super::events::{jump_events, pair_defects, PairGrid, PairingResult, Part};
use super::sector::{sector_cover, EventClass};
use super::shock::{
    no_crossing_audit, shock_concentration, shock_family, AuditReport, ShockFamily, ShockOptions,
};
use crate::error::Result;
use crate::field::LiftedField;
use crate::kinetic::{entropy_measure, entropy_measure_coarse, nu_projection};
use crate::lagrangian::{good_curve_filter, CurveEnsemble};
use crate::measure::{ABins, DiscreteMeasure};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RectifyOptions {
    pub sigma_threshold: f64,
    /// Pairing tolerance in cells.
    pub pair_tol: usize,
    /// Block size of the coarse `nu`.
    pub nu_block: usize,
    /// Distance in cells counted as "on" the shock family or on the jump set.
    pub band_cells: f64,
    /// Drop curve portions that leave their side of the graph.
    pub good_curves: bool,
    pub shock: ShockOptions,
}

impl Default for RectifyOptions {
    fn default() -> Self {
        RectifyOptions {
            sigma_threshold: default_sigma_threshold(),
            pair_tol: 2,
            nu_block: 4,
            band_cells: 2.0,
            good_curves: false,
            shock: ShockOptions::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RectifyReport {
    pub n: u32,
    pub sector_masses: Vec<f64>,
    pub jump_mass: f64,
    pub shock_concentration: Vec<f64>,
    pub jump_on_sigma_fraction: f64,
    pub nu_on_sigma_fraction: f64,
    pub unpaired_residual: f64,
}

/// Quantities outside the report schema that help judge it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RectifyDiagnostics {
    pub n: u32,
    pub part: Part,
    pub hyp_mass: f64,
    pub epi_mass: f64,
    pub paired_mass: f64,
    /// Fraction of ball cells within the band of the sector-`l` family.
    pub band_area_fraction: Vec<f64>,
    pub shock_curves: usize,
    pub sigma_points: usize,
    pub dropped_hyp_mass: f64,
    pub dropped_epi_mass: f64,
    pub audit: AuditReport,
}

pub struct RectifyOutput {
    pub negative: RectifyReport,
    pub positive: RectifyReport,
    pub negative_diagnostics: RectifyDiagnostics,
    pub positive_diagnostics: RectifyDiagnostics,
    pub sigma: SigmaSet,
    pub family: ShockFamily,
    pub negative_pairs: PairingResult,
    pub positive_pairs: PairingResult,
}

/// Coarse `nu` used for mass fractions.
pub fn coarse_nu(f: &LiftedField, bins: &ABins, block: usize) -> DiscreteMeasure {
    nu_projection(&entropy_measure_coarse(f, bins, block))
}

/// Pair defects of both parts, build shock curves, detect the jump set and
/// measure how the paired measures concentrate on them.
pub fn rectifiability_report(
    f: &LiftedField,
    bins: &ABins,
    hyp: &CurveEnsemble,
    epi: &CurveEnsemble,
    opts: &RectifyOptions,
) -> Result<RectifyOutput> {
    let cover = sector_cover(f.m)?;
    let (hyp_f, epi_f) = if opts.good_curves {
        (
            good_curve_filter(hyp, f, 0.0),
            good_curve_filter(epi, f, 0.0),
        )
    } else {
        let keep = |e: &CurveEnsemble| crate::lagrangian::FilteredEnsemble {
            ensemble: e.clone(),
            dropped_mass: 0.0,
            dropped_curves: 0,
        };
        (keep(hyp), keep(epi))
    };
    let (h, e) = (&hyp_f.ensemble, &epi_f.ensemble);
    let fine_nu = nu_projection(&entropy_measure(f, bins));
    let sigma = sigma_detect(f, &fine_nu, opts.sigma_threshold);
    let nu_hat = coarse_nu(f, bins, opts.nu_block).restrict(|a| f.in_ball(a.x));
    let band = opts.band_cells * f.h();
    let nu_on_sigma = mass_near_sigma(&nu_hat, &sigma, band);
    let family = shock_family(h, f, &cover, opts.shock)?;
    let audit = no_crossing_audit(h, e, f, &family);
    let grid = PairGrid::new(f, hyp.n, *bins);
    let (he, ee) = (jump_events(h), jump_events(e));

    let summarize = |part: Part| -> (RectifyReport, RectifyDiagnostics, PairingResult) {
        let pairs = pair_defects(&he, &ee, &grid, &cover, part, opts.pair_tol);
        let mut sector_masses = Vec::new();
        let mut concentration = Vec::new();
        let mut baseline = Vec::new();
        for l in 0..cover.len() {
            let nu_l = pairs.projection(|c| c == EventClass::Sector(l));
            sector_masses.push(nu_l.total_variation());
            let (frac, base) = shock_concentration(&family, f, l, &nu_l, opts.band_cells);
            concentration.push(frac);
            baseline.push(base);
        }
        let nu_jump = pairs.projection(|c| c == EventClass::Jump);
        let report = RectifyReport {
            n: hyp.n,
            sector_masses,
            jump_mass: nu_jump.total_variation(),
            shock_concentration: concentration,
            jump_on_sigma_fraction: mass_near_sigma(&nu_jump, &sigma, band),
            nu_on_sigma_fraction: nu_on_sigma,
            unpaired_residual: pairs.residual(),
        };
        let diag = RectifyDiagnostics {
            n: hyp.n,
            part,
            hyp_mass: pairs.hyp_mass,
            epi_mass: pairs.epi_mass,
            paired_mass: pairs.paired_mass,
            band_area_fraction: baseline,
            shock_curves: family.curves.len(),
            sigma_points: sigma.points.len(),
            dropped_hyp_mass: hyp_f.dropped_mass,
            dropped_epi_mass: epi_f.dropped_mass,
            audit,
        };
        (report, diag, pairs)
    };
    let (negative, negative_diagnostics, negative_pairs) = summarize(Part::Negative);
    let (positive, positive_diagnostics, positive_pairs) = summarize(Part::Positive);
    Ok(RectifyOutput {
        negative,
        positive,
        negative_diagnostics,
        positive_diagnostics,
        sigma,
        family,
        negative_pairs,
        positive_pairs,
    })
}
