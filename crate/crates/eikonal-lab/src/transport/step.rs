//! One building block of the construction: free transport over `[0, t]`
//! followed by the W1 correction of the pushed indicator onto the static one.
//!
//! Sites live on a moving lattice: site `(i, j, b)` sits at
//! `lattice_point(i, j) + ie^{i a_b} t`. Transport of `chi` over time `t`
//! then maps site masses onto sites exactly, and the correction compares
//! `chi(y - ie^{ia} t)` (pushed mass) with `chi(y)` at each site `y`.

use serde::{Deserialize, Serialize};

use super::{trim_unbalanced, velocity, AnisotropicMetric, TransportPlan};
use crate::error::{Error, Result};
use crate::field::LiftedField;
use crate::kinetic::{entropy_measure, Side};
use crate::measure::{ABins, Atom, DiscreteMeasure, MeasureKind};

/// Site key on the moving lattice.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Site {
    pub i: i32,
    pub j: i32,
    pub b: u32,
}

/// Moving lattice over a field with fixed angle bins.
#[derive(Clone, Debug)]
pub struct Lattice<'a> {
    pub field: &'a LiftedField,
    pub bins: ABins,
    pub vel: Vec<[f64; 2]>,
    pub angle: Vec<f64>,
    pub volume: f64,
}

impl<'a> Lattice<'a> {
    pub fn new(field: &'a LiftedField, bins: ABins) -> Self {
        let angle: Vec<f64> = (0..bins.k).map(|b| bins.center(b)).collect();
        Lattice {
            field,
            vel: angle.iter().map(|&a| velocity(a)).collect(),
            angle,
            volume: field.cell_area() * bins.width(),
            bins,
        }
    }

    pub fn pos(&self, s: Site, t: f64) -> [f64; 2] {
        let p = self.field.lattice_point(s.i as i64, s.j as i64);
        let v = self.vel[s.b as usize];
        [p[0] + v[0] * t, p[1] + v[1] * t]
    }

    /// Sites of bin `b` whose position at time `t` lies in the open ball.
    pub fn sites_in_ball(&self, b: usize, t: f64) -> Vec<Site> {
        let f = self.field;
        let c = f.center();
        let v = self.vel[b];
        let (dx, dy) = (f.dx(), f.dy());
        let lo_i = ((c[0] - f.r - v[0] * t - f.x_min) / dx - 0.5).floor() as i64 - 1;
        let hi_i = ((c[0] + f.r - v[0] * t - f.x_min) / dx - 0.5).ceil() as i64 + 1;
        let lo_j = ((c[1] - f.r - v[1] * t - f.y_min) / dy - 0.5).floor() as i64 - 1;
        let hi_j = ((c[1] + f.r - v[1] * t - f.y_min) / dy - 0.5).ceil() as i64 + 1;
        let mut out = Vec::new();
        for j in lo_j..=hi_j {
            for i in lo_i..=hi_i {
                let s = Site {
                    i: i as i32,
                    j: j as i32,
                    b: b as u32,
                };
                if f.in_ball(self.pos(s, t)) {
                    out.push(s);
                }
            }
        }
        out
    }

    /// Whether the indicator of `side` holds at position `p` for site bin.
    pub fn indicator(&self, side: Side, p: [f64; 2], b: usize) -> bool {
        side.contains(self.field.phi_at(p), self.angle[b])
    }

    pub fn atom(&self, s: Site, t: f64, w: f64) -> Atom {
        Atom::kinetic(self.pos(s, t), self.angle[s.b as usize], w)
    }

    /// Metric diameter of `B_R x [0, M]`.
    pub fn diameter(&self, metric: &AnisotropicMetric) -> f64 {
        metric.l * 2.0 * self.field.r + self.field.m
    }

    /// Metric diameter of one lattice cell.
    pub fn cell_diameter(&self, metric: &AnisotropicMetric) -> f64 {
        let f = self.field;
        metric.l * f.dx().hypot(f.dy()) + self.bins.width()
    }
}

/// Excess (pushed mass above target) and deficit sites of one correction.
#[derive(Clone, Debug, Default)]
pub struct Imbalance {
    pub excess: Vec<(Site, f64)>,
    pub deficit: Vec<(Site, f64)>,
    pub shared: f64,
}

impl Imbalance {
    pub fn measures(&self, lat: &Lattice, t: f64) -> (DiscreteMeasure, DiscreteMeasure) {
        let conv = |v: &[(Site, f64)], label: &str| {
            DiscreteMeasure::from_atoms(
                MeasureKind::Kinetic,
                label,
                v.iter().map(|&(s, w)| lat.atom(s, t, w)).collect(),
            )
        };
        (conv(&self.excess, "excess"), conv(&self.deficit, "deficit"))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransportStep {
    pub n: u32,
    pub t_bar: f64,
    pub epsilon: f64,
    pub l: f64,
    /// Trimmed deficit of `chi^1` (targets of the plan).
    pub rho1: DiscreteMeasure,
    /// Trimmed excess of `chi^2` (sources of the plan).
    pub rho2: DiscreteMeasure,
    pub plan: TransportPlan,
    pub bound: f64,
    /// `2 * cell diameter * moved mass`.
    pub slack: f64,
    /// Mass common to both measures, kept in place at zero cost.
    pub shared_mass: f64,
    /// Mass removed by trimming.
    pub trimmed_mass: f64,
    /// `nu(B_R)` of the kinetic defect measure.
    pub nu_ball: f64,
    /// `|chi^1 - chi^2|` on the lattice.
    pub tv_mismatch: f64,
}

#[derive(Serialize)]
struct StepSummary {
    n: u32,
    t_bar: f64,
    epsilon: f64,
    #[serde(rename = "L")]
    l: f64,
    cost: f64,
    bound: f64,
}

impl TransportStep {
    /// JSON summary with keys `n, t_bar, epsilon, L, cost, bound`.
    pub fn summary_json(&self) -> String {
        serde_json::to_string_pretty(&StepSummary {
            n: self.n,
            t_bar: self.t_bar,
            epsilon: self.epsilon,
            l: self.l,
            cost: self.plan.cost,
            bound: self.bound,
        })
        .expect("summary serializes")
    }

    pub fn vertical_cost(&self) -> f64 {
        self.plan.vertical_cost(&self.rho2, &self.rho1)
    }
}

/// `(t + t^{3/2}) nu(B_R) + eps^{1/2} t (2R + eps^{1/2} M)`.
pub fn step_bound(t: f64, eps: f64, nu_ball: f64, r: f64, m: f64) -> f64 {
    (t + t.powf(1.5)) * nu_ball + eps.sqrt() * t * (2.0 * r + eps.sqrt() * m)
}

/// `L = max(eps, t)^{-1/2}`.
pub fn metric_scale(eps: f64, t: f64) -> f64 {
    eps.max(t).powf(-0.5)
}

/// `nu(B_R)` of the per-edge defect measure.
pub fn nu_in_ball(f: &LiftedField, bins: &ABins) -> f64 {
    entropy_measure(f, bins)
        .atoms
        .iter()
        .filter(|a| f.in_ball(a.x))
        .map(|a| a.w.abs())
        .sum()
}

/// Compare pushed mass `chi(y - ie^{ia} t)` with `chi(y)` on lattice sites
/// inside the ball at time `t`, starting from the static lattice at 0.
pub fn first_step_imbalance(lat: &Lattice, side: Side, t: f64) -> Imbalance {
    let mut out = Imbalance::default();
    let tol = 1e-9 * lat.volume;
    for b in 0..lat.bins.k {
        for s in lat.sites_in_ball(b, t) {
            let origin = lat.pos(s, 0.0);
            let pushed = if lat.indicator(side, origin, b) {
                lat.volume
            } else {
                0.0
            };
            let target = if lat.indicator(side, lat.pos(s, t), b) {
                lat.volume
            } else {
                0.0
            };
            out.shared += pushed.min(target);
            if pushed > target + tol {
                out.excess.push((s, pushed - target));
            } else if target > pushed + tol {
                out.deficit.push((s, target - pushed));
            }
        }
    }
    out
}

/// Building block at level `n` for one side: measured `eps`, the scale `L`,
/// and the optimal correction of the pushed indicator.
pub fn building_block_map(
    f: &LiftedField,
    n: u32,
    bins: &ABins,
    side: Side,
) -> Result<TransportStep> {
    if n < 1 {
        return Err(Error::OutOfRange("level n must be at least 1".into()));
    }
    let t = (0.5f64).powi(n as i32);
    let eps = super::boundary_discrepancy(f, t, bins)?;
    let l = metric_scale(eps, t);
    let metric = AnisotropicMetric::new(l)?;
    let lat = Lattice::new(f, *bins);
    let imb = first_step_imbalance(&lat, side, t);
    let (excess, deficit) = imb.measures(&lat, t);
    let tv = excess.mass() + deficit.mass();
    let trimmed = trim_unbalanced(&excess, &deficit, &metric, lat.diameter(&metric))?;
    let moved: f64 = trimmed.plan.pairs.iter().map(|p| p.mass).sum();
    let nu_ball = nu_in_ball(f, bins);
    Ok(TransportStep {
        n,
        t_bar: t,
        epsilon: eps,
        l,
        slack: 2.0 * lat.cell_diameter(&metric) * moved,
        shared_mass: imb.shared,
        trimmed_mass: trimmed.c2,
        bound: step_bound(t, eps, nu_ball, f.r, f.m),
        nu_ball,
        tv_mismatch: tv,
        rho1: trimmed.mu2,
        rho2: trimmed.mu1,
        plan: trimmed.plan,
    })
}
