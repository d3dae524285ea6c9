//! Kinetic indicator, entropy defect measure `U` and its spatial projection.
//!
//! Sign convention: `<U, psi> = int e^{i(phi ^ a)} . grad_x psi dx da`.
//! For a piecewise-constant field this puts, on every cell edge with unit
//! normal `n` pointing from cell `lo` to cell `hi`, the weight
//! `-(e^{i(phi_hi ^ a)} - e^{i(phi_lo ^ a)}) . n * length * da`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{bump_flux_by, weak_divergence_residual, LiftedField};
use crate::measure::{ABins, Atom, DiscreteMeasure, MeasureKind};
use crate::testfn::{kinetic_family, KineticTest};

/// Hypograph `{a <= phi}` or epigraph `{a >= phi}` of the lifting.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Hypograph,
    Epigraph,
}

impl Side {
    pub fn contains(self, phi: f64, a: f64) -> bool {
        match self {
            Side::Hypograph => a <= phi,
            Side::Epigraph => a >= phi,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Side::Hypograph => "hypograph",
            Side::Epigraph => "epigraph",
        }
    }
}

impl std::str::FromStr for Side {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hypograph" => Ok(Side::Hypograph),
            "epigraph" => Ok(Side::Epigraph),
            other => Err(Error::Usage(format!("unknown side `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KineticSlice {
    pub a: f64,
    pub nx: usize,
    pub ny: usize,
    /// Row-major, 1 iff `phi >= a`.
    pub indicator: Vec<u8>,
}

pub fn chi(f: &LiftedField, a: f64) -> Result<KineticSlice> {
    if !(0.0..=f.m).contains(&a) {
        return Err(Error::OutOfRange(format!("a = {a} outside [0, {}]", f.m)));
    }
    Ok(KineticSlice {
        a,
        nx: f.nx,
        ny: f.ny,
        indicator: f.phi.iter().map(|&p| u8::from(p >= a)).collect(),
    })
}

/// Visit the nonzero edge atoms of `U` in the fixed order: vertical edges
/// row by row, then horizontal edges, bins innermost. The callback gets
/// `(edge midpoint, lo cell (i, j), bin, weight)`.
pub fn visit_edge_atoms(
    f: &LiftedField,
    bins: &ABins,
    mut visit: impl FnMut([f64; 2], (usize, usize), usize, f64),
) {
    let e: Vec<[f64; 2]> = f.unit_field();
    let ea: Vec<(f64, [f64; 2])> = (0..bins.k)
        .map(|b| {
            let a = bins.center(b);
            (a, [a.cos(), a.sin()])
        })
        .collect();
    let da = bins.width();
    let (dx, dy) = (f.dx(), f.dy());
    let flux = |k: usize, b: usize, comp: usize| {
        if f.phi[k] <= ea[b].0 {
            e[k][comp]
        } else {
            ea[b].1[comp]
        }
    };
    for j in 0..f.ny {
        for i in 0..f.nx - 1 {
            let (lo, hi) = (j * f.nx + i, j * f.nx + i + 1);
            if f.phi[lo] == f.phi[hi] {
                continue;
            }
            let mid = [
                f.x_min + (i + 1) as f64 * dx,
                f.y_min + (j as f64 + 0.5) * dy,
            ];
            for b in 0..bins.k {
                let w = -(flux(hi, b, 0) - flux(lo, b, 0)) * dy * da;
                if w != 0.0 {
                    visit(mid, (i, j), b, w);
                }
            }
        }
    }
    for j in 0..f.ny - 1 {
        for i in 0..f.nx {
            let (lo, hi) = (j * f.nx + i, (j + 1) * f.nx + i);
            if f.phi[lo] == f.phi[hi] {
                continue;
            }
            let mid = [
                f.x_min + (i as f64 + 0.5) * dx,
                f.y_min + (j + 1) as f64 * dy,
            ];
            for b in 0..bins.k {
                let w = -(flux(hi, b, 1) - flux(lo, b, 1)) * dx * da;
                if w != 0.0 {
                    visit(mid, (i, j), b, w);
                }
            }
        }
    }
}

/// Per-edge atoms of `U` on `(x, a)`.
pub fn entropy_measure(f: &LiftedField, bins: &ABins) -> DiscreteMeasure {
    let mut atoms = Vec::new();
    visit_edge_atoms(f, bins, |x, _, b, w| {
        atoms.push(Atom::kinetic(x, bins.center(b), w))
    });
    DiscreteMeasure::from_atoms(MeasureKind::Kinetic, "U", atoms)
}

/// `U` aggregated over blocks of `block x block` cells per angle bin.
/// Weights are signed sums, so smooth regions cancel to their truncation
/// error; each atom sits at the `|w|`-weighted barycenter of its edges.
pub fn entropy_measure_coarse(f: &LiftedField, bins: &ABins, block: usize) -> DiscreteMeasure {
    assert!(block >= 1, "block must be positive");
    let nbx = f.nx.div_ceil(block);
    let nby = f.ny.div_ceil(block);
    let k = bins.k;
    let mut acc = vec![[0.0f64; 4]; nbx * nby * k];
    visit_edge_atoms(f, bins, |x, (i, j), b, w| {
        let slot = &mut acc[((j / block) * nbx + i / block) * k + b];
        let aw = w.abs();
        slot[0] += w;
        slot[1] += aw * x[0];
        slot[2] += aw * x[1];
        slot[3] += aw;
    });
    let mut atoms = Vec::new();
    for (idx, s) in acc.iter().enumerate() {
        if s[0] != 0.0 {
            let b = idx % k;
            atoms.push(Atom::kinetic(
                [s[1] / s[3], s[2] / s[3]],
                bins.center(b),
                s[0],
            ));
        }
    }
    DiscreteMeasure::from_atoms(MeasureKind::Kinetic, "U (coarse)", atoms)
}

/// `nu = (p_x)# |U|`: atoms grouped by identical position, in order of
/// first appearance.
pub fn nu_projection(u: &DiscreteMeasure) -> DiscreteMeasure {
    let mut index: std::collections::HashMap<(u64, u64), usize> = std::collections::HashMap::new();
    let mut atoms: Vec<Atom> = Vec::new();
    for a in &u.atoms {
        let key = (a.x[0].to_bits(), a.x[1].to_bits());
        match index.get(&key) {
            Some(&k) => atoms[k].w += a.w.abs(),
            None => {
                index.insert(key, atoms.len());
                atoms.push(Atom::spatial(a.x, a.w.abs()));
            }
        }
    }
    DiscreteMeasure::from_atoms(MeasureKind::Spatial, "nu", atoms)
}

/// Kinetic-equation residual over a seeded test family.
pub fn kinetic_residual(
    f: &LiftedField,
    u: &DiscreteMeasure,
    bins: &ABins,
    test_count: usize,
    seed: u64,
) -> f64 {
    kinetic_residual_with(f, u, bins, &kinetic_family(f, test_count, seed))
}

/// `max_psi |int chi ie^{ia} . grad_x psi + sum w d_a psi| / |psi|_{C^1}`.
/// The angle integral uses the bin midpoints; the spatial integral is exact
/// per cell.
pub fn kinetic_residual_with(
    f: &LiftedField,
    u: &DiscreteMeasure,
    bins: &ABins,
    tests: &[KineticTest],
) -> f64 {
    let da = bins.width();
    let vals: Vec<f64> = tests
        .par_iter()
        .map(|t| {
            let mut lhs = 0.0;
            for b in 0..bins.k {
                let a = bins.center(b);
                let g = t.a.value(a);
                if g == 0.0 {
                    continue;
                }
                let v = [-a.sin(), a.cos()];
                let zero = [0.0, 0.0];
                lhs +=
                    da * g * bump_flux_by(f, t.x, t.sx, |k| if f.phi[k] >= a { v } else { zero });
            }
            let rhs: f64 = u.atoms.iter().map(|at| at.w * t.d_a(at.x, at.a)).sum();
            (lhs + rhs).abs() / t.c1_norm()
        })
        .collect();
    vals.into_iter().fold(0.0, f64::max)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BurgersReport {
    /// `v = cos phi` per cell.
    pub v: Vec<f64>,
    /// Weak residual of `d_1 v + d_2 sqrt(1 - v^2) = 0`.
    pub residual: f64,
}

/// Burgers-type transfer for fields with range in `(0, pi)`.
pub fn burgers_transform(f: &LiftedField) -> Result<BurgersReport> {
    if let Some(p) = f
        .phi
        .iter()
        .find(|&&p| !(p > 0.0 && p < std::f64::consts::PI))
    {
        return Err(Error::NotApplicable(format!(
            "phi = {p} is outside (0, pi)"
        )));
    }
    let v: Vec<f64> = f.phi.iter().map(|p| p.cos()).collect();
    let flux: Vec<[f64; 2]> = v
        .iter()
        .map(|&c| [c, (1.0 - c * c).max(0.0).sqrt()])
        .collect();
    let residual = weak_divergence_residual(f, &flux, 0.0).l1_residual;
    Ok(BurgersReport { v, residual })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{make_builtin, parse_params, Builtin};
    use std::f64::consts::PI;

    #[test]
    fn chi_thresholds_single_jump() {
        let f = make_builtin(Builtin::SingleJump, &parse_params("nx=16").unwrap()).unwrap();
        let s = chi(&f, PI / 2.0).unwrap();
        for j in 0..16 {
            for i in 0..16 {
                assert_eq!(s.indicator[j * 16 + i], u8::from(j >= 8));
            }
        }
        assert!(chi(&f, 4.0).is_err());
    }

    #[test]
    fn nu_sums_absolute_weights() {
        let u = DiscreteMeasure::from_atoms(
            MeasureKind::Kinetic,
            "u",
            vec![
                Atom::kinetic([0.5, 0.0], 0.1, 0.3),
                Atom::kinetic([0.5, 0.0], 0.7, -0.2),
            ],
        );
        let nu = nu_projection(&u);
        assert_eq!(nu.len(), 1);
        assert!((nu.atoms[0].w - 0.5).abs() < 1e-15);
        assert!(nu_projection(&DiscreteMeasure::new(MeasureKind::Kinetic, "e")).is_empty());
    }

    #[test]
    fn coarse_measure_keeps_signed_mass() {
        let f = make_builtin(Builtin::Vortex, &parse_params("nx=32").unwrap()).unwrap();
        let bins = ABins::new(16, f.m);
        let fine = entropy_measure(&f, &bins);
        let coarse = entropy_measure_coarse(&f, &bins, 4);
        assert!((fine.mass() - coarse.mass()).abs() < 1e-12);
        assert!(coarse.total_variation() <= fine.total_variation() + 1e-12);
    }
}
