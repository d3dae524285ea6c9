//! Recursive construction of the approximate representation on the moving
//! lattice: free transport over each block, boundary exits and injections,
//! then the optimal correction of the pushed mass onto the static indicator.

use super::curve::{BuildStats, Curve, CurveEnsemble, Node};
use super::partition::circle_times;
use crate::error::{Error, Result};
use crate::field::LiftedField;
use crate::kinetic::Side;
use crate::measure::{ABins, DiscreteMeasure, MeasureKind};
use crate::transport::step::{metric_scale, Lattice, Site};
use crate::transport::{boundary_discrepancy, trim_unbalanced, AnisotropicMetric, TransportStep};

pub const MIN_LEVEL: u32 = 3;
pub const MAX_LEVEL: u32 = 12;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BuildOptions {
    /// Maximum number of pieces a particle splits into at one node.
    pub fork_cap: usize,
    /// With `false` every plan is replaced by the identity (no relocation).
    pub relocate: bool,
}

impl Default for BuildOptions {
    fn default() -> Self {
        BuildOptions {
            fork_cap: 8,
            relocate: true,
        }
    }
}

/// Dense index of all lattice sites reachable from the ball within `[0, 1]`.
struct SiteIndex {
    i0: i64,
    j0: i64,
    ni: usize,
    nj: usize,
}

impl SiteIndex {
    fn new(f: &LiftedField, k: usize) -> (Self, usize) {
        let c = f.center();
        let reach = f.r + 1.0;
        let i0 = ((c[0] - reach - f.x_min) / f.dx()).floor() as i64 - 2;
        let i1 = ((c[0] + reach - f.x_min) / f.dx()).ceil() as i64 + 2;
        let j0 = ((c[1] - reach - f.y_min) / f.dy()).floor() as i64 - 2;
        let j1 = ((c[1] + reach - f.y_min) / f.dy()).ceil() as i64 + 2;
        let idx = SiteIndex {
            i0,
            j0,
            ni: (i1 - i0 + 1) as usize,
            nj: (j1 - j0 + 1) as usize,
        };
        let len = idx.ni * idx.nj * k;
        (idx, len)
    }

    fn of(&self, s: Site) -> usize {
        let i = (s.i as i64 - self.i0) as usize;
        let j = (s.j as i64 - self.j0) as usize;
        (s.b as usize * self.nj + j) * self.ni + i
    }
}

#[derive(Clone, Copy, Debug)]
struct Particle {
    curve: usize,
    site: Site,
}

struct Engine<'a> {
    lat: Lattice<'a>,
    side: Side,
    metric: AnisotropicMetric,
    opts: BuildOptions,
    curves: Vec<Curve>,
    particles: Vec<Particle>,
    stats: BuildStats,
    index: SiteIndex,
    occ: Vec<f64>,
    slot: Vec<u32>,
}

impl<'a> Engine<'a> {
    fn new(
        f: &'a LiftedField,
        bins: ABins,
        side: Side,
        metric: AnisotropicMetric,
        opts: BuildOptions,
    ) -> Self {
        let (index, len) = SiteIndex::new(f, bins.k);
        Engine {
            index,
            occ: vec![0.0; len],
            slot: vec![u32::MAX; len],
            lat: Lattice::new(f, bins),
            side,
            metric,
            opts,
            curves: Vec::new(),
            particles: Vec::new(),
            stats: BuildStats {
                l: metric.l,
                ..BuildStats::default()
            },
        }
    }

    fn spawn(&mut self, site: Site, t: f64, w: f64) {
        let a = self.lat.angle[site.b as usize];
        self.curves.push(Curve {
            id: self.curves.len() as u64,
            side: self.side,
            weight: w,
            t_minus: t,
            t_plus: 1.0,
            nodes: vec![Node {
                t,
                x: self.lat.pos(site, t),
                a,
            }],
        });
        self.particles.push(Particle {
            curve: self.curves.len() - 1,
            site,
        });
    }

    fn seed(&mut self) {
        for b in 0..self.lat.bins.k {
            for s in self.lat.sites_in_ball(b, 0.0) {
                if self.lat.indicator(self.side, self.lat.pos(s, 0.0), b) {
                    self.spawn(s, 0.0, self.lat.volume);
                    self.stats.initial_mass += self.lat.volume;
                }
            }
        }
    }

    /// Advance from `t0` to `t1`: exits, then injections.
    fn advance(&mut self, t0: f64, t1: f64) {
        let f = self.lat.field;
        let mut kept = Vec::with_capacity(self.particles.len());
        for p in std::mem::take(&mut self.particles) {
            if f.in_ball(self.lat.pos(p.site, t1)) {
                kept.push(p);
                continue;
            }
            let a = self.lat.angle[p.site.b as usize];
            let start = self.lat.pos(p.site, t0);
            let exit = circle_times(f, start, a).map_or(0.0, |(_, hi)| hi);
            let c = &mut self.curves[p.curve];
            c.t_plus = (t0 + exit.clamp(0.0, t1 - t0)).max(c.nodes.last().expect("nodes").t);
            self.stats.exited_mass += c.weight;
        }
        self.particles = kept;
        for b in 0..self.lat.bins.k {
            for s in self.lat.sites_in_ball(b, t1) {
                let start = self.lat.pos(s, t0);
                if f.in_ball(start) || !self.lat.indicator(self.side, start, b) {
                    continue;
                }
                let a = self.lat.angle[b];
                let entry = circle_times(f, start, a).map_or(0.0, |(lo, _)| lo);
                self.spawn(s, t0 + entry.clamp(0.0, t1 - t0), self.lat.volume);
                self.stats.injected_mass += self.lat.volume;
            }
        }
    }

    /// Correct the occupancy at `t` onto the indicator at `t`.
    fn relocate(&mut self, t: f64) -> Result<()> {
        for p in &self.particles {
            self.occ[self.index.of(p.site)] += self.curves[p.curve].weight;
        }
        let vol = self.lat.volume;
        let tol = 1e-9 * vol;
        let mut excess: Vec<(Site, f64)> = Vec::new();
        let mut deficit: Vec<(Site, f64)> = Vec::new();
        let mut seen = 0.0;
        for b in 0..self.lat.bins.k {
            for s in self.lat.sites_in_ball(b, t) {
                let k = self.index.of(s);
                let occ = std::mem::take(&mut self.occ[k]);
                seen += occ;
                let target = if self.lat.indicator(self.side, self.lat.pos(s, t), b) {
                    vol
                } else {
                    0.0
                };
                if occ > target + tol {
                    self.slot[k] = excess.len() as u32;
                    excess.push((s, occ - target));
                } else if target > occ + tol {
                    deficit.push((s, target - occ));
                }
            }
        }
        let alive: f64 = self
            .particles
            .iter()
            .map(|p| self.curves[p.curve].weight)
            .sum();
        if (alive - seen).abs() > tol.max(1e-12 * alive) {
            self.occ.iter_mut().for_each(|v| *v = 0.0);
            return Err(Error::Bookkeeping(format!(
                "particle outside the ball at t = {t}"
            )));
        }
        let mut members: Vec<Vec<usize>> = vec![Vec::new(); excess.len()];
        for (k, p) in self.particles.iter().enumerate() {
            let e = self.slot[self.index.of(p.site)];
            if e != u32::MAX {
                members[e as usize].push(k);
            }
        }
        for (s, _) in &excess {
            self.slot[self.index.of(*s)] = u32::MAX;
        }
        let conv = |v: &[(Site, f64)]| {
            DiscreteMeasure::from_atoms(
                MeasureKind::Kinetic,
                "",
                v.iter().map(|&(s, w)| self.lat.atom(s, t, w)).collect(),
            )
        };
        let (mu_ex, mu_de) = (conv(&excess), conv(&deficit));
        let diam = self.lat.diameter(&self.metric);
        let trimmed = trim_unbalanced(&mu_ex, &mu_de, &self.metric, diam)?;
        let moved: f64 = trimmed.plan.pairs.iter().map(|p| p.mass).sum();
        self.stats.moved_mass += moved;
        self.stats.plan_cost += trimmed.plan.cost;
        self.stats.trimmed_mass += (mu_ex.mass() - moved).max(0.0);
        self.stats.unfilled_mass += (mu_de.mass() - moved).max(0.0);

        let mut flows: Vec<Vec<(Site, f64)>> = vec![Vec::new(); excess.len()];
        for p in &trimmed.plan.pairs {
            flows[p.src].push((deficit[p.dst].0, p.mass));
        }
        for e in 0..excess.len() {
            if flows[e].is_empty() {
                continue;
            }
            let occ: f64 = members[e]
                .iter()
                .map(|&k| self.curves[self.particles[k].curve].weight)
                .sum();
            let out: f64 = flows[e].iter().map(|f| f.1).sum();
            if out > occ * (1.0 + 1e-9) {
                return Err(Error::Bookkeeping(format!(
                    "plan moves {out} from site holding {occ}"
                )));
            }
            let group = std::mem::take(&mut members[e]);
            self.split_site(&group, (occ - out).max(0.0), &flows[e], t);
        }
        Ok(())
    }

    /// Northwest-corner fill of the site's particles onto `[stay, flows...]`.
    fn split_site(&mut self, members: &[usize], stay: f64, flows: &[(Site, f64)], t: f64) {
        let mut slots: Vec<(Option<Site>, f64)> = Vec::with_capacity(flows.len() + 1);
        slots.push((None, stay));
        slots.extend(flows.iter().map(|&(s, m)| (Some(s), m)));
        let mut slot = 0;
        let mut slot_left = slots[0].1;
        let tiny = 1e-12 * self.lat.volume;
        for &k in members {
            let w = self.curves[self.particles[k].curve].weight;
            let mut left = w;
            let mut pieces: Vec<(Option<Site>, f64)> = Vec::new();
            while left > 0.0 && slot < slots.len() {
                let take = left.min(slot_left);
                if take > 0.0 {
                    pieces.push((slots[slot].0, take));
                }
                left -= take;
                slot_left -= take;
                if slot_left <= tiny && slot + 1 < slots.len() {
                    slot += 1;
                    slot_left = slots[slot].1;
                } else if slot_left <= 0.0 {
                    break;
                }
            }
            if left > 0.0 {
                // Rounding residue stays with the last piece.
                match pieces.last_mut() {
                    Some(p) => p.1 += left,
                    None => pieces.push((None, left)),
                }
            }
            self.apply_pieces(k, w, pieces, t);
        }
    }

    fn apply_pieces(&mut self, k: usize, w: f64, mut pieces: Vec<(Option<Site>, f64)>, t: f64) {
        let tiny = 1e-12 * self.lat.volume;
        if pieces.len() > 1 {
            let big = pieces.iter().map(|p| p.1).fold(0.0, f64::max);
            let dust: f64 = pieces
                .iter()
                .filter(|p| p.1 <= tiny && p.1 < big)
                .map(|p| p.1)
                .sum();
            if dust > 0.0 {
                pieces.retain(|p| p.1 > tiny || p.1 == big);
                let top = pieces
                    .iter_mut()
                    .max_by(|a, b| a.1.total_cmp(&b.1))
                    .expect("nonempty");
                top.1 += dust;
            }
        }
        if pieces.len() > self.opts.fork_cap {
            self.stats.capped_forks += 1;
            pieces.sort_by(|a, b| b.1.total_cmp(&a.1));
            pieces.truncate(self.opts.fork_cap);
            let kept: f64 = pieces.iter().map(|p| p.1).sum();
            for p in &mut pieces {
                p.1 *= w / kept;
            }
        }
        let base = self.particles[k];
        let snapshot = self.curves[base.curve].clone();
        for (idx, (dest, m)) in pieces.into_iter().enumerate() {
            let curve = if idx == 0 {
                base.curve
            } else {
                let mut c = snapshot.clone();
                c.id = self.curves.len() as u64;
                self.curves.push(c);
                self.particles.push(Particle {
                    curve: self.curves.len() - 1,
                    site: base.site,
                });
                self.curves.len() - 1
            };
            self.curves[curve].weight = m;
            let pk = if idx == 0 {
                k
            } else {
                self.particles.len() - 1
            };
            if let Some(d) = dest {
                self.curves[curve].nodes.push(Node {
                    t,
                    x: self.lat.pos(d, t),
                    a: self.lat.angle[d.b as usize],
                });
                self.particles[pk].site = d;
            }
        }
    }

    fn finish(self, n: u32) -> CurveEnsemble {
        CurveEnsemble {
            n,
            side: self.side,
            curves: self.curves,
            stats: self.stats,
        }
    }
}

fn check_level(n: u32) -> Result<()> {
    if !(MIN_LEVEL..=MAX_LEVEL).contains(&n) {
        return Err(Error::OutOfRange(format!(
            "level n = {n} outside [{MIN_LEVEL}, {MAX_LEVEL}]"
        )));
    }
    Ok(())
}

/// Curves of one block `[0, t_bar]` starting from the static indicator and
/// corrected by the plan of `step`.
pub fn build_block_curves(
    f: &LiftedField,
    bins: &ABins,
    step: &TransportStep,
    side: Side,
) -> Result<Vec<Curve>> {
    let metric = AnisotropicMetric::new(step.l)?;
    let mut eng = Engine::new(f, *bins, side, metric, BuildOptions::default());
    eng.seed();
    eng.advance(0.0, step.t_bar);
    eng.relocate(step.t_bar)?;
    let scale = step.plan.cost.abs().max(1e-300);
    if (eng.stats.plan_cost - step.plan.cost).abs() > 1e-9 * scale.max(1.0) {
        return Err(Error::Bookkeeping(format!(
            "block plan cost {} differs from step cost {}",
            eng.stats.plan_cost, step.plan.cost
        )));
    }
    let mut curves = eng.curves;
    for c in &mut curves {
        c.t_plus = c.t_plus.min(step.t_bar);
    }
    Ok(curves)
}

pub fn build_representation(
    f: &LiftedField,
    n: u32,
    bins: &ABins,
    side: Side,
) -> Result<CurveEnsemble> {
    build_representation_with(f, n, bins, side, BuildOptions::default())
}

pub fn build_representation_with(
    f: &LiftedField,
    n: u32,
    bins: &ABins,
    side: Side,
    opts: BuildOptions,
) -> Result<CurveEnsemble> {
    check_level(n)?;
    let t_bar = 0.5f64.powi(n as i32);
    let eps = boundary_discrepancy(f, t_bar, bins)?;
    let metric = AnisotropicMetric::new(metric_scale(eps, t_bar))?;
    let mut eng = Engine::new(f, *bins, side, metric, opts);
    eng.stats.epsilon = eps;
    eng.seed();
    let steps = 1u64 << n;
    for k in 1..=steps {
        let (t0, t1) = ((k - 1) as f64 * t_bar, k as f64 * t_bar);
        eng.advance(t0, t1);
        if k < steps && opts.relocate {
            eng.relocate(t1)?;
        }
    }
    Ok(eng.finish(n))
}
