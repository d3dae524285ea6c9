//! Vertical jumps of curves and their pairing across the two ensembles.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::sector::{classify_angles, EventClass, SectorCover};
use crate::field::LiftedField;
use crate::kinetic::Side;
use crate::lagrangian::{curve_defect, CurveEnsemble};
use crate::measure::{ABins, Atom, DiscreteMeasure, MeasureKind};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct JumpEvent {
    pub curve: u64,
    pub side: Side,
    pub t: f64,
    /// Position just before the jump.
    pub x: [f64; 2],
    pub a_lo: f64,
    pub a_hi: f64,
    pub sign: i8,
    /// Curve weight.
    pub weight: f64,
    /// `weight * (a_hi - a_lo)`.
    pub mass: f64,
}

impl JumpEvent {
    pub fn a_from(&self) -> f64 {
        if self.sign > 0 {
            self.a_lo
        } else {
            self.a_hi
        }
    }

    pub fn a_to(&self) -> f64 {
        if self.sign > 0 {
            self.a_hi
        } else {
            self.a_lo
        }
    }
}

/// One event per curve node where the angle changes, in curve order.
pub fn jump_events(ens: &CurveEnsemble) -> Vec<JumpEvent> {
    let mut out = Vec::new();
    for c in &ens.curves {
        for d in curve_defect(c).atoms {
            out.push(JumpEvent {
                curve: c.id,
                side: c.side,
                t: d.t,
                x: d.x,
                a_lo: d.a_lo,
                a_hi: d.a_hi,
                sign: d.sign,
                weight: c.weight,
                mass: c.weight * d.length(),
            });
        }
    }
    out
}

pub fn classify_event(ev: &JumpEvent, cover: &SectorCover) -> EventClass {
    classify_angles(ev.a_from(), ev.a_to(), cover)
}

/// Which part of the defect is paired: hypograph decreases with epigraph
/// increases (negative part) or the reverse (positive part).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Part {
    Negative,
    Positive,
}

impl Part {
    fn hyp_sign(self) -> i8 {
        match self {
            Part::Negative => -1,
            Part::Positive => 1,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Part::Negative => "negative",
            Part::Positive => "positive",
        }
    }
}

/// Discretization of the pairing: time steps, grid cells and angle bins.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PairGrid {
    pub t_bar: f64,
    pub x_min: f64,
    pub y_min: f64,
    pub dx: f64,
    pub dy: f64,
    pub bins: ABins,
}

impl PairGrid {
    pub fn new(f: &LiftedField, n: u32, bins: ABins) -> Self {
        PairGrid {
            t_bar: 0.5f64.powi(n as i32),
            x_min: f.x_min,
            y_min: f.y_min,
            dx: f.dx(),
            dy: f.dy(),
            bins,
        }
    }

    fn cell(&self, x: [f64; 2]) -> (i64, i64) {
        (
            ((x[0] - self.x_min) / self.dx).floor() as i64,
            ((x[1] - self.y_min) / self.dy).floor() as i64,
        )
    }

    /// `(bin, overlap length)` of `[lo, hi]` with each angle bin.
    fn bin_pieces(&self, lo: f64, hi: f64) -> Vec<(usize, f64, f64, f64)> {
        let w = self.bins.width();
        let b0 = (lo / w).floor().max(0.0) as usize;
        let b1 = ((hi / w).ceil() as usize).min(self.bins.k);
        (b0..b1)
            .filter_map(|b| {
                let (e0, e1) = (b as f64 * w, (b + 1) as f64 * w);
                let (p, q) = (lo.max(e0), hi.min(e1));
                (q > p).then_some((b, q - p, p, q))
            })
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairedEvent {
    /// Index into the hypograph event list.
    pub hyp: usize,
    /// Index into the epigraph event list.
    pub epi: usize,
    pub t: f64,
    /// Position of the hypograph event.
    pub x: [f64; 2],
    pub a_lo: f64,
    pub a_hi: f64,
    pub mass: f64,
    pub class: EventClass,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PairingResult {
    pub pairs: Vec<PairedEvent>,
    pub hyp_mass: f64,
    pub epi_mass: f64,
    pub paired_mass: f64,
    pub unpaired_hyp: f64,
    pub unpaired_epi: f64,
}

impl PairingResult {
    pub fn residual(&self) -> f64 {
        self.unpaired_hyp + self.unpaired_epi
    }

    /// Spatial projection of the pairs of one class, located at the
    /// hypograph events.
    pub fn projection(&self, keep: impl Fn(EventClass) -> bool) -> DiscreteMeasure {
        let mut acc: BTreeMap<usize, (f64, [f64; 2])> = BTreeMap::new();
        for p in self.pairs.iter().filter(|p| keep(p.class)) {
            acc.entry(p.hyp).or_insert((0.0, p.x)).0 += p.mass;
        }
        DiscreteMeasure::from_atoms(
            MeasureKind::Spatial,
            "nu paired",
            acc.into_values()
                .map(|(w, x)| Atom::spatial(x, w))
                .collect(),
        )
    }
}

#[derive(Clone, Copy, Debug)]
struct Piece {
    event: usize,
    mass: f64,
    lo: f64,
    hi: f64,
}

type Key = (i64, usize, i64, i64);

fn pieces_by_key(events: &[JumpEvent], sign: i8, grid: &PairGrid) -> BTreeMap<Key, Vec<Piece>> {
    let mut map: BTreeMap<Key, Vec<Piece>> = BTreeMap::new();
    for (k, ev) in events.iter().enumerate() {
        if ev.sign != sign {
            continue;
        }
        let step = (ev.t / grid.t_bar).round() as i64;
        let (i, j) = grid.cell(ev.x);
        for (b, len, lo, hi) in grid.bin_pieces(ev.a_lo, ev.a_hi) {
            map.entry((step, b, i, j)).or_default().push(Piece {
                event: k,
                mass: ev.weight * len,
                lo,
                hi,
            });
        }
    }
    map
}

/// Match hypograph and epigraph pieces of one slice proportionally.
fn match_pieces(
    hyp: &mut [Piece],
    epi: &mut [Piece],
    hyp_events: &[JumpEvent],
    epi_events: &[JumpEvent],
    cover: &SectorCover,
    out: &mut Vec<PairedEvent>,
) -> f64 {
    let h: f64 = hyp.iter().map(|p| p.mass).sum();
    let e: f64 = epi.iter().map(|p| p.mass).sum();
    let m = h.min(e);
    if m <= 0.0 {
        return 0.0;
    }
    for hp in hyp.iter() {
        if hp.mass <= 0.0 {
            continue;
        }
        for ep in epi.iter() {
            if ep.mass <= 0.0 {
                continue;
            }
            let mass = hp.mass * ep.mass * m / (h * e);
            if mass <= 0.0 {
                continue;
            }
            let (he, ee) = (&hyp_events[hp.event], &epi_events[ep.event]);
            let class = pair_class(he, ee, cover);
            out.push(PairedEvent {
                hyp: hp.event,
                epi: ep.event,
                t: he.t,
                x: he.x,
                a_lo: hp.lo,
                a_hi: hp.hi,
                mass,
                class,
            });
        }
    }
    for hp in hyp.iter_mut() {
        hp.mass *= 1.0 - m / h;
    }
    for ep in epi.iter_mut() {
        ep.mass *= 1.0 - m / e;
    }
    m
}

/// Jump if either member jumps; otherwise the smallest sector holding all
/// four endpoint angles, or a jump when none does.
pub fn pair_class(h: &JumpEvent, e: &JumpEvent, cover: &SectorCover) -> EventClass {
    if classify_event(h, cover) == EventClass::Jump || classify_event(e, cover) == EventClass::Jump
    {
        return EventClass::Jump;
    }
    cover
        .smallest_containing(&[h.a_from(), h.a_to(), e.a_from(), e.a_to()])
        .map_or(EventClass::Jump, EventClass::Sector)
}

/// Proportional matching within each (step, angle bin, cell) slice, then
/// across cells at Chebyshev distance up to `tol_cells`.
pub fn pair_defects(
    hyp_events: &[JumpEvent],
    epi_events: &[JumpEvent],
    grid: &PairGrid,
    cover: &SectorCover,
    part: Part,
    tol_cells: usize,
) -> PairingResult {
    let mut hyp = pieces_by_key(hyp_events, part.hyp_sign(), grid);
    let mut epi = pieces_by_key(epi_events, -part.hyp_sign(), grid);
    let total = |m: &BTreeMap<Key, Vec<Piece>>| -> f64 {
        m.values().flatten().fold(0.0, |s, p| s + p.mass)
    };
    let mut res = PairingResult {
        hyp_mass: total(&hyp),
        epi_mass: total(&epi),
        ..PairingResult::default()
    };
    let mut paired = 0.0;
    let keys: Vec<Key> = hyp.keys().copied().collect();
    for d in 0..=tol_cells as i64 {
        for key in &keys {
            let (step, b, i, j) = *key;
            for dj in -d..=d {
                for di in -d..=d {
                    if di.abs().max(dj.abs()) != d {
                        continue;
                    }
                    let other = (step, b, i + di, j + dj);
                    let (Some(hp), Some(ep)) = (hyp.get_mut(key), epi.get_mut(&other)) else {
                        continue;
                    };
                    paired += match_pieces(hp, ep, hyp_events, epi_events, cover, &mut res.pairs);
                }
            }
        }
    }
    res.paired_mass = paired;
    res.unpaired_hyp = total(&hyp);
    res.unpaired_epi = total(&epi);
    res
}
