//! Error functionals of a curve ensemble and the decomposition of `U` along
//! its curves.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::curve::{advance, curve_defect, Curve, CurveEnsemble, Node};
use crate::error::Result;
use crate::field::LiftedField;
use crate::kinetic::Side;
use crate::measure::{ABins, Atom, DiscreteMeasure, MeasureKind};
use crate::testfn::SpaceTimeTest;
use crate::transport::step::{Lattice, Site};
use crate::transport::{trim_unbalanced, velocity, AnisotropicMetric};

/// Order-independent sum: contributions are sorted before accumulation.
fn stable_sum(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    v.into_iter().fold(0.0, |acc, x| acc + x)
}

/// Atoms at the positions of curves alive at `t`, with curve weights.
pub fn pushforward_at(ens: &CurveEnsemble, t: f64) -> DiscreteMeasure {
    let atoms = ens
        .curves
        .iter()
        .filter(|c| c.alive_at(t))
        .map(|c| {
            let (x, a) = c.state_at(t);
            Atom::kinetic(x, a, c.weight)
        })
        .collect();
    DiscreteMeasure::from_atoms(MeasureKind::Kinetic, "pushforward", atoms)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RepresentationError {
    /// `sum |occupancy - target|` over lattice sites.
    pub tv: f64,
    /// W1 (unit metric) between the pushforward and the indicator measure,
    /// with unbalanced mass charged at the diameter.
    pub w1: f64,
}

/// Lattice site of an atom at time `t`.
pub fn infer_site(lat: &Lattice, x: [f64; 2], a: f64, t: f64) -> Site {
    let f = lat.field;
    let b = ((a / lat.bins.width()) - 0.5)
        .round()
        .clamp(0.0, (lat.bins.k - 1) as f64) as usize;
    let v = lat.vel[b];
    let i = ((x[0] - v[0] * t - f.x_min) / f.dx() - 0.5).round();
    let j = ((x[1] - v[1] * t - f.y_min) / f.dy() - 0.5).round();
    Site {
        i: i as i32,
        j: j as i32,
        b: b as u32,
    }
}

/// Distances between the pushforward at `t` and the indicator of the side
/// sampled on the lattice at `t`.
pub fn representation_error(
    ens: &CurveEnsemble,
    f: &LiftedField,
    bins: &ABins,
    t: f64,
) -> Result<RepresentationError> {
    let lat = Lattice::new(f, *bins);
    let mut occ: BTreeMap<Site, f64> = BTreeMap::new();
    for a in pushforward_at(ens, t).atoms {
        *occ.entry(infer_site(&lat, a.x, a.a, t)).or_default() += a.w;
    }
    let mut target: BTreeMap<Site, f64> = BTreeMap::new();
    for b in 0..bins.k {
        for s in lat.sites_in_ball(b, t) {
            if lat.indicator(ens.side, lat.pos(s, t), b) {
                target.insert(s, lat.volume);
            }
        }
    }
    let mut keys: Vec<Site> = occ.keys().chain(target.keys()).copied().collect();
    keys.sort();
    keys.dedup();
    let (mut over, mut under) = (Vec::new(), Vec::new());
    let mut tv = Vec::new();
    for s in keys {
        let d = occ.get(&s).copied().unwrap_or(0.0) - target.get(&s).copied().unwrap_or(0.0);
        tv.push(d.abs());
        if d > 0.0 {
            over.push(lat.atom(s, t, d));
        } else if d < 0.0 {
            under.push(lat.atom(s, t, -d));
        }
    }
    let metric = AnisotropicMetric::new(1.0)?;
    let diam = lat.diameter(&metric);
    let mu1 = DiscreteMeasure::from_atoms(MeasureKind::Kinetic, "over", over);
    let mu2 = DiscreteMeasure::from_atoms(MeasureKind::Kinetic, "under", under);
    let trimmed = trim_unbalanced(&mu1, &mu2, &metric, diam)?;
    Ok(RepresentationError {
        tv: stable_sum(tv),
        w1: trimmed.bound,
    })
}

/// `e_h`: weighted sum of spatial relocations at the nodes.
pub fn horizontal_error(ens: &CurveEnsemble) -> f64 {
    stable_sum(
        ens.curves
            .iter()
            .map(|c| c.weight * c.spatial_jumps())
            .collect(),
    )
}

/// `e_v`: weighted total variation of the angle along the curves.
pub fn vertical_cost(ens: &CurveEnsemble) -> f64 {
    stable_sum(
        ens.curves
            .iter()
            .map(|c| c.weight * c.total_variation())
            .collect(),
    )
}

/// Weighted curve defects as space-time atoms with angle intervals:
/// `(t, x, a_lo, a_hi, signed weight)`.
pub fn aggregated_defects(ens: &CurveEnsemble) -> Vec<(f64, [f64; 2], f64, f64, f64)> {
    let mut out = Vec::new();
    for c in &ens.curves {
        for d in curve_defect(c).atoms {
            out.push((d.t, d.x, d.a_lo, d.a_hi, c.weight * d.sign as f64));
        }
    }
    out
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DecompositionReport {
    /// Hypograph defects against `L1 x U`.
    pub res_signed: f64,
    /// Hypograph absolute defects against `L1 x |U|`.
    pub res_abs: f64,
    /// Epigraph defects against `-L1 x U`.
    pub res_signed_epi: f64,
    /// Epigraph absolute defects against `L1 x |U|`.
    pub res_abs_epi: f64,
    pub hyp_negative_mass: f64,
    pub hyp_positive_mass: f64,
    pub epi_negative_mass: f64,
    pub epi_positive_mass: f64,
    pub u_negative_mass: f64,
    pub u_positive_mass: f64,
}

fn defect_masses(ens: &CurveEnsemble) -> (f64, f64) {
    let (mut neg, mut pos) = (Vec::new(), Vec::new());
    for (_, _, lo, hi, w) in aggregated_defects(ens) {
        if w < 0.0 {
            neg.push(-w * (hi - lo));
        } else {
            pos.push(w * (hi - lo));
        }
    }
    (stable_sum(neg), stable_sum(pos))
}

/// Pairing of curve defects with `L1 x U` over a family of space-time tests,
/// each normalized by its `C^1` norm; the maximum over the family.
pub fn decomposition_residual(
    ens_h: &CurveEnsemble,
    ens_e: &CurveEnsemble,
    u: &DiscreteMeasure,
    f: &LiftedField,
    tests: &[SpaceTimeTest],
) -> DecompositionReport {
    let u_in: Vec<&Atom> = u.atoms.iter().filter(|a| f.in_ball(a.x)).collect();
    let dh = aggregated_defects(ens_h);
    let de = aggregated_defects(ens_e);
    let pair = |defs: &[(f64, [f64; 2], f64, f64, f64)], psi: &SpaceTimeTest| {
        let (mut s, mut a) = (0.0, 0.0);
        for &(t, x, lo, hi, w) in defs {
            let v = psi.a_integral(t, x, lo, hi);
            s += w * v;
            a += w.abs() * v;
        }
        (s, a)
    };
    let mut rep = DecompositionReport::default();
    for psi in tests {
        let tau = psi.t.integral(0.0, 1.0);
        let (mut us, mut ua) = (0.0, 0.0);
        for at in &u_in {
            let v = psi.k.value(at.x, at.a) * tau;
            us += at.w * v;
            ua += at.w.abs() * v;
        }
        let n = psi.c1_norm();
        let (hs, ha) = pair(&dh, psi);
        let (es, ea) = pair(&de, psi);
        rep.res_signed = rep.res_signed.max((hs - us).abs() / n);
        rep.res_abs = rep.res_abs.max((ha - ua).abs() / n);
        rep.res_signed_epi = rep.res_signed_epi.max((es + us).abs() / n);
        rep.res_abs_epi = rep.res_abs_epi.max((ea - ua).abs() / n);
    }
    (rep.hyp_negative_mass, rep.hyp_positive_mass) = defect_masses(ens_h);
    (rep.epi_negative_mass, rep.epi_positive_mass) = defect_masses(ens_e);
    rep.u_negative_mass = stable_sum(u_in.iter().filter(|a| a.w < 0.0).map(|a| -a.w).collect());
    rep.u_positive_mass = stable_sum(u_in.iter().filter(|a| a.w > 0.0).map(|a| a.w).collect());
    rep
}

/// Sub-intervals of `[t0, t1)` on which `x0 + v t` stays in one grid cell.
fn cell_pieces(f: &LiftedField, x0: [f64; 2], v: [f64; 2], t0: f64, t1: f64) -> Vec<(f64, f64)> {
    if t1 <= t0 {
        return Vec::new();
    }
    let mut cuts = vec![t0, t1];
    for (comp, (lo, d)) in [(f.x_min, f.dx()), (f.y_min, f.dy())]
        .into_iter()
        .enumerate()
    {
        if v[comp] == 0.0 {
            continue;
        }
        let (e0, e1) = (x0[comp] + v[comp] * t0, x0[comp] + v[comp] * t1);
        let k0 = ((e0.min(e1) - lo) / d).ceil() as i64;
        let k1 = ((e0.max(e1) - lo) / d).floor() as i64;
        for k in k0..=k1 {
            let t = (lo + k as f64 * d - x0[comp]) / v[comp];
            if t > t0 && t < t1 {
                cuts.push(t);
            }
        }
    }
    cuts.sort_by(f64::total_cmp);
    cuts.windows(2)
        .map(|w| (w[0], w[1]))
        .filter(|w| w.1 > w.0)
        .collect()
}

fn satisfies(side: Side, a: f64, phi: f64) -> bool {
    match side {
        Side::Hypograph => a < phi,
        Side::Epigraph => a > phi,
    }
}

/// Pieces of segment `k` of `c` with whether the strict side inequality holds.
fn segment_verdicts(f: &LiftedField, c: &Curve, k: usize) -> Vec<(f64, f64, bool)> {
    let n = c.nodes[k];
    let end = c.nodes.get(k + 1).map_or(c.t_plus, |m| m.t).min(c.t_plus);
    let v = velocity(n.a);
    // Position extrapolated to time 0, so that `x(t) = x0 + v t`.
    let x0 = advance(n, 0.0);
    cell_pieces(f, x0, v, n.t.max(c.t_minus), end)
        .into_iter()
        .map(|(lo, hi)| {
            let tm = 0.5 * (lo + hi);
            let phi = f.phi_at([x0[0] + v[0] * tm, x0[1] + v[1] * tm]);
            (lo, hi, satisfies(c.side, n.a, phi))
        })
        .collect()
}

/// Total time along a curve where `a < phi(x)` (hypograph) or `a > phi(x)`
/// (epigraph) fails.
pub fn curve_violation_time(f: &LiftedField, c: &Curve) -> f64 {
    (0..c.nodes.len())
        .flat_map(|k| segment_verdicts(f, c, k))
        .filter(|p| !p.2)
        .map(|p| p.1 - p.0)
        .sum()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FilteredEnsemble {
    pub ensemble: CurveEnsemble,
    /// `sum weight * violating time`.
    pub dropped_mass: f64,
    pub dropped_curves: usize,
}

/// Remove the violating time portions of curves whose violating fraction of
/// lifetime exceeds `theta`. Each remaining curve keeps its id; portions are
/// split into separate curves with the same id.
pub fn good_curve_filter(ens: &CurveEnsemble, f: &LiftedField, theta: f64) -> FilteredEnsemble {
    let mut curves = Vec::new();
    let mut dropped = Vec::new();
    let mut count = 0;
    for c in &ens.curves {
        let life = c.t_plus - c.t_minus;
        let bad = curve_violation_time(f, c);
        if life <= 0.0 || bad <= theta * life {
            curves.push(c.clone());
            continue;
        }
        count += 1;
        dropped.push(c.weight * bad);
        curves.extend(split_good_portions(f, c));
    }
    FilteredEnsemble {
        ensemble: CurveEnsemble {
            n: ens.n,
            side: ens.side,
            curves,
            stats: ens.stats.clone(),
        },
        dropped_mass: stable_sum(dropped),
        dropped_curves: count,
    }
}

/// Maximal time intervals of `c` where the side inequality holds, as curves.
fn split_good_portions(f: &LiftedField, c: &Curve) -> Vec<Curve> {
    let mut intervals: Vec<(f64, f64)> = Vec::new();
    for k in 0..c.nodes.len() {
        for (lo, hi, ok) in segment_verdicts(f, c, k) {
            if !ok {
                continue;
            }
            match intervals.last_mut() {
                Some(last) if last.1 == lo => last.1 = hi,
                _ => intervals.push((lo, hi)),
            }
        }
    }
    intervals
        .into_iter()
        .map(|(lo, hi)| {
            let k = c.segment_at(lo);
            let mut nodes = vec![{
                let (x, a) = c.state_at(lo);
                Node { t: lo, x, a }
            }];
            nodes.extend(c.nodes[k + 1..].iter().copied().filter(|n| n.t < hi));
            Curve {
                id: c.id,
                side: c.side,
                weight: c.weight,
                t_minus: lo,
                t_plus: hi,
                nodes,
            }
        })
        .collect()
}
