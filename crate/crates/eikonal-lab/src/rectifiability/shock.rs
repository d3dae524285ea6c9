//! Lipschitz shock curves built from hypograph curve portions, their
//! no-crossing audit and concentration of paired defects near them.

use serde::{Deserialize, Serialize};

use super::envelope::{check_constant, envelope_sorted};
use super::events::{classify_event, jump_events};
use super::sector::{EventClass, SectorCover};
use crate::error::Result;
use crate::field::LiftedField;
use crate::lagrangian::{Curve, CurveEnsemble, Node};
use crate::measure::DiscreteMeasure;
use crate::transport::velocity;

/// Coordinates adapted to sector `l`: `s` along `e_l`, `w` along `zeta_l`,
/// both relative to the ball center.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SectorFrame {
    pub center: [f64; 2],
    pub e: [f64; 2],
    pub zeta: [f64; 2],
}

impl SectorFrame {
    pub fn new(f: &LiftedField, cover: &SectorCover, l: usize) -> Self {
        SectorFrame {
            center: f.center(),
            e: cover.e[l],
            zeta: cover.zeta(l),
        }
    }

    pub fn to_frame(&self, x: [f64; 2]) -> (f64, f64) {
        let d = [x[0] - self.center[0], x[1] - self.center[1]];
        (
            d[0] * self.e[0] + d[1] * self.e[1],
            d[0] * self.zeta[0] + d[1] * self.zeta[1],
        )
    }

    pub fn from_frame(&self, s: f64, w: f64) -> [f64; 2] {
        [
            self.center[0] + s * self.e[0] + w * self.zeta[0],
            self.center[1] + s * self.e[1] + w * self.zeta[1],
        ]
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ShockOptions {
    /// Lipschitz constant of the envelopes.
    pub c: f64,
    /// Anchor spacing in cells.
    pub anchor_spacing: usize,
    /// Audit tolerance in cells.
    pub audit_tol: f64,
}

impl Default for ShockOptions {
    fn default() -> Self {
        ShockOptions {
            c: 2.5,
            anchor_spacing: 4,
            audit_tol: 1.0,
        }
    }
}

/// Graph `w = f(s)` of one shock curve on the half-cell grid `s = k h / 2`,
/// `k >= k0`, in the frame of sector `l`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShockCurve {
    pub l: usize,
    pub anchor: [f64; 2],
    pub s_bar: f64,
    pub w_bar: f64,
    pub k0: i64,
    pub ds: f64,
    pub f: Vec<f64>,
    /// Number of hypograph portions crossing above the anchor.
    pub portions: usize,
}

impl ShockCurve {
    pub fn s(&self, idx: usize) -> f64 {
        (self.k0 + idx as i64) as f64 * self.ds
    }

    pub fn value_at_k(&self, k: i64) -> Option<f64> {
        let idx = k - self.k0;
        (idx >= 0)
            .then(|| self.f.get(idx as usize).copied())
            .flatten()
    }

    /// Graph points `(s, f(s))`.
    pub fn graph(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.f.iter().enumerate().map(|(i, &w)| (self.s(i), w))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ShockFamily {
    pub cover: SectorCover,
    pub options: ShockOptions,
    pub ds: f64,
    pub curves: Vec<ShockCurve>,
}

impl ShockFamily {
    pub fn sector(&self, l: usize) -> impl Iterator<Item = &ShockCurve> {
        self.curves.iter().filter(move |c| c.l == l)
    }
}

/// Part of a curve moving with angles inside one sector, sampled on the
/// half-cell grid of that sector's frame.
#[derive(Clone, Debug, PartialEq)]
pub(crate) struct Portion {
    pub weight: f64,
    pub ks: Vec<i64>,
    pub ws: Vec<f64>,
}

impl Portion {
    fn at(&self, k: i64) -> Option<f64> {
        self.ks.binary_search(&k).ok().map(|i| self.ws[i])
    }
}

fn segments(c: &Curve) -> impl Iterator<Item = (Node, f64)> + '_ {
    c.nodes.iter().enumerate().filter_map(move |(k, n)| {
        let end = c.nodes.get(k + 1).map_or(c.t_plus, |m| m.t).min(c.t_plus);
        (end > n.t).then_some((*n, end))
    })
}

fn sample_portion(
    run: &[(Node, f64)],
    frame: &SectorFrame,
    ds: f64,
    weight: f64,
) -> Option<Portion> {
    let mut pts: Vec<(i64, f64)> = Vec::new();
    for &(n, end) in run {
        let v = velocity(n.a);
        let ve = v[0] * frame.e[0] + v[1] * frame.e[1];
        let vz = v[0] * frame.zeta[0] + v[1] * frame.zeta[1];
        let (s0, w0) = frame.to_frame(n.x);
        let s1 = s0 + ve * (end - n.t);
        let mut k = (s0 / ds).ceil() as i64;
        while (k as f64) * ds <= s1 {
            let dt = ((k as f64) * ds - s0) / ve;
            pts.push((k, w0 + vz * dt));
            k += 1;
        }
    }
    if pts.is_empty() {
        return None;
    }
    pts.sort_by(|p, q| p.0.cmp(&q.0).then(p.1.total_cmp(&q.1)));
    pts.dedup_by_key(|p| p.0);
    Some(Portion {
        weight,
        ks: pts.iter().map(|p| p.0).collect(),
        ws: pts.iter().map(|p| p.1).collect(),
    })
}

/// Maximal runs of segments with angle in `I_l`, sampled on the grid.
pub(crate) fn sector_portions(
    ens: &CurveEnsemble,
    cover: &SectorCover,
    l: usize,
    frame: &SectorFrame,
    ds: f64,
) -> Vec<Portion> {
    let mut out = Vec::new();
    for c in &ens.curves {
        let mut run: Vec<(Node, f64)> = Vec::new();
        for (n, end) in segments(c) {
            if cover.contains(l, n.a) {
                run.push((n, end));
            } else if !run.is_empty() {
                out.extend(sample_portion(&run, frame, ds, c.weight));
                run.clear();
            }
        }
        if !run.is_empty() {
            out.extend(sample_portion(&run, frame, ds, c.weight));
        }
    }
    out
}

#[derive(Clone, Copy, Debug)]
struct Anchor {
    p: i64,
    w_bar: f64,
}

fn anchors(f: &LiftedField, spacing: f64) -> Vec<Anchor> {
    let n = (f.r / spacing).ceil() as i64;
    let mut out = Vec::new();
    for p in -n..=n {
        for q in -n..=n {
            let (s, w) = (p as f64 * spacing, q as f64 * spacing);
            if s * s + w * w < f.r * f.r {
                out.push(Anchor { p, w_bar: w });
            }
        }
    }
    out
}

/// Portions crossing the grid line `k = k_line`, with the crossing value.
fn crossings(portions: &[Portion], k_line: i64) -> Vec<(f64, usize)> {
    portions
        .iter()
        .enumerate()
        .filter_map(|(i, p)| p.at(k_line).map(|w| (w, i)))
        .collect()
}

struct Grid {
    ds: f64,
    k_max: i64,
    step: i64,
}

/// Envelope for every anchor on the line `k = k_line`, visiting anchors in
/// decreasing height so the running minimum only grows its support.
fn line_curves(
    portions: &[Portion],
    anchors_on_line: &mut [Anchor],
    k_line: i64,
    grid: &Grid,
    c: f64,
    l: usize,
    frame: &SectorFrame,
) -> Vec<ShockCurve> {
    let mut cross = crossings(portions, k_line);
    cross.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    anchors_on_line.sort_by(|a, b| b.w_bar.total_cmp(&a.w_bar));
    let len = (grid.k_max - k_line + 1).max(1) as usize;
    let s: Vec<f64> = (0..len)
        .map(|i| (k_line + i as i64) as f64 * grid.ds)
        .collect();
    let mut running = vec![f64::INFINITY; len];
    let mut next = 0;
    let mut out = Vec::new();
    for a in anchors_on_line.iter() {
        while next < cross.len() && cross[next].0 > a.w_bar {
            let p = &portions[cross[next].1];
            for (&k, &w) in p.ks.iter().zip(&p.ws) {
                if k >= k_line && k <= grid.k_max {
                    let slot = &mut running[(k - k_line) as usize];
                    *slot = slot.min(w);
                }
            }
            next += 1;
        }
        if next == 0 {
            continue;
        }
        let mut g = running.clone();
        g[0] = g[0].min(a.w_bar);
        envelope_sorted(&s, &mut g, c);
        let s_bar = k_line as f64 * grid.ds;
        out.push(ShockCurve {
            l,
            anchor: frame.from_frame(s_bar, a.w_bar),
            s_bar,
            w_bar: a.w_bar,
            k0: k_line,
            ds: grid.ds,
            f: g,
            portions: next,
        });
    }
    out
}

/// One shock curve per anchor and sector: the anchored `C`-Lipschitz lower
/// envelope of hypograph portions crossing the anchor line above the anchor.
/// Sectors without any hypograph jump of their class get no curves.
pub fn shock_family(
    hyp: &CurveEnsemble,
    f: &LiftedField,
    cover: &SectorCover,
    opts: ShockOptions,
) -> Result<ShockFamily> {
    check_constant(opts.c)?;
    let ds = f.h() / 2.0;
    let spacing = opts.anchor_spacing as f64 * f.h();
    let grid = Grid {
        ds,
        k_max: (f.r / ds).floor() as i64,
        step: 2 * opts.anchor_spacing as i64,
    };
    let all = anchors(f, spacing);
    let events = jump_events(hyp);
    let mut curves = Vec::new();
    for l in 0..cover.len() {
        if !events
            .iter()
            .any(|e| classify_event(e, cover) == EventClass::Sector(l))
        {
            continue;
        }
        let frame = SectorFrame::new(f, cover, l);
        let portions = sector_portions(hyp, cover, l, &frame, ds);
        let mut p_values: Vec<i64> = all.iter().map(|a| a.p).collect();
        p_values.dedup();
        for p in p_values {
            let mut line: Vec<Anchor> = all.iter().filter(|a| a.p == p).copied().collect();
            curves.extend(line_curves(
                &portions,
                &mut line,
                p * grid.step,
                &grid,
                opts.c,
                l,
                &frame,
            ));
        }
    }
    Ok(ShockFamily {
        cover: cover.clone(),
        options: opts,
        ds,
        curves,
    })
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub hyp_audited: f64,
    pub hyp_violation: f64,
    pub epi_audited: f64,
    pub epi_violation: f64,
}

impl AuditReport {
    pub fn violation_fraction(&self) -> f64 {
        let audited = self.hyp_audited + self.epi_audited;
        if audited > 0.0 {
            (self.hyp_violation + self.epi_violation) / audited
        } else {
            0.0
        }
    }
}

/// For every shock curve, hypograph portions crossing above the anchor must
/// stay above the curve and epigraph portions crossing below must stay
/// below, up to `audit_tol` cells. Each (curve, portion) pair counts its
/// portion weight once.
pub fn no_crossing_audit(
    hyp: &CurveEnsemble,
    epi: &CurveEnsemble,
    f: &LiftedField,
    family: &ShockFamily,
) -> AuditReport {
    let tol = family.options.audit_tol * f.h();
    let cover = &family.cover;
    let mut rep = AuditReport::default();
    for l in 0..cover.len() {
        let frame = SectorFrame::new(f, cover, l);
        let hp = sector_portions(hyp, cover, l, &frame, family.ds);
        let ep = sector_portions(epi, cover, l, &frame, family.ds);
        let mut lines: Vec<i64> = family.sector(l).map(|c| c.k0).collect();
        lines.dedup();
        for k_line in lines {
            let hc = crossings(&hp, k_line);
            let ec = crossings(&ep, k_line);
            for curve in family.sector(l).filter(|c| c.k0 == k_line) {
                let below = |p: &Portion| {
                    p.ks.iter()
                        .zip(&p.ws)
                        .any(|(&k, &w)| curve.value_at_k(k).is_some_and(|fk| w < fk - tol))
                };
                let above = |p: &Portion| {
                    p.ks.iter()
                        .zip(&p.ws)
                        .any(|(&k, &w)| curve.value_at_k(k).is_some_and(|fk| w > fk + tol))
                };
                for &(wc, i) in &hc {
                    if wc > curve.w_bar {
                        rep.hyp_audited += hp[i].weight;
                        if below(&hp[i]) {
                            rep.hyp_violation += hp[i].weight;
                        }
                    }
                }
                for &(wc, i) in &ec {
                    if wc < curve.w_bar {
                        rep.epi_audited += ep[i].weight;
                        if above(&ep[i]) {
                            rep.epi_violation += ep[i].weight;
                        }
                    }
                }
            }
        }
    }
    rep
}

/// Mirror every curve across the line through `point` with unit `normal`.
pub fn reflect_ensemble(ens: &CurveEnsemble, point: [f64; 2], normal: [f64; 2]) -> CurveEnsemble {
    let refl = |v: [f64; 2], origin: [f64; 2]| {
        let d = [v[0] - origin[0], v[1] - origin[1]];
        let k = 2.0 * (d[0] * normal[0] + d[1] * normal[1]);
        [v[0] - k * normal[0], v[1] - k * normal[1]]
    };
    let mut out = ens.clone();
    for c in &mut out.curves {
        for n in &mut c.nodes {
            n.x = refl(n.x, point);
            let v = refl(velocity(n.a), [0.0, 0.0]);
            n.a = (-v[0]).atan2(v[1]).rem_euclid(2.0 * std::f64::consts::PI);
        }
    }
    out
}

fn segment_distance(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    let d = (b.0 - a.0, b.1 - a.1);
    let len2 = d.0 * d.0 + d.1 * d.1;
    let t = if len2 > 0.0 {
        (((p.0 - a.0) * d.0 + (p.1 - a.1) * d.1) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    (p.0 - a.0 - t * d.0).hypot(p.1 - a.1 - t * d.1)
}

/// Distance from `(s, w)` to the graph of `curve`, or infinity when it
/// exceeds `cap`.
pub fn graph_distance(curve: &ShockCurve, s: f64, w: f64, cap: f64) -> f64 {
    let k_lo = ((s - cap) / curve.ds).floor() as i64 - 1;
    let k_hi = ((s + cap) / curve.ds).ceil() as i64 + 1;
    let lo = (k_lo - curve.k0).max(0) as usize;
    let hi = ((k_hi - curve.k0).max(-1) + 1).min(curve.f.len() as i64) as usize;
    if lo >= hi {
        return f64::INFINITY;
    }
    if hi - lo == 1 {
        return (s - curve.s(lo)).hypot(w - curve.f[lo]);
    }
    let mut best = f64::INFINITY;
    for i in lo..hi - 1 {
        let a = (curve.s(i), curve.f[i]);
        let b = (curve.s(i + 1), curve.f[i + 1]);
        best = best.min(segment_distance((s, w), a, b));
    }
    best
}

/// Whether `x` lies within `band` of some sector-`l` curve of the family.
pub fn near_family(
    family: &ShockFamily,
    frame: &SectorFrame,
    l: usize,
    x: [f64; 2],
    band: f64,
) -> bool {
    let (s, w) = frame.to_frame(x);
    family.sector(l).any(|c| {
        if s + band < c.s_bar {
            return false;
        }
        graph_distance(c, s, w, band) <= band
    })
}

/// Fraction of the mass of `nu_l` within `band_cells` cells of the sector-`l`
/// curves of the family, and the fraction of ball cells in that band.
pub fn shock_concentration(
    family: &ShockFamily,
    f: &LiftedField,
    l: usize,
    nu_l: &DiscreteMeasure,
    band_cells: f64,
) -> (f64, f64) {
    let frame = SectorFrame::new(f, &family.cover, l);
    let band = band_cells * f.h();
    let total: f64 = nu_l.atoms.iter().map(|a| a.w.abs()).sum();
    let near: f64 = nu_l
        .atoms
        .iter()
        .filter(|a| near_family(family, &frame, l, a.x, band))
        .map(|a| a.w.abs())
        .sum();
    let mut cells = 0usize;
    let mut covered = 0usize;
    for j in 0..f.ny {
        for i in 0..f.nx {
            let x = f.cell_center(i, j);
            if f.in_ball(x) {
                cells += 1;
                if near_family(family, &frame, l, x, band) {
                    covered += 1;
                }
            }
        }
    }
    let frac = if total > 0.0 { near / total } else { 1.0 };
    let base = if cells > 0 {
        covered as f64 / cells as f64
    } else {
        0.0
    };
    (frac, base)
}
