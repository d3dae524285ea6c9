//! Exact discrete W1 transport under `d = L |dx| + |da|`.

mod simplex;
pub mod step;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::LiftedField;
use crate::measure::{ABins, Atom, DiscreteMeasure};

pub use step::{building_block_map, TransportStep};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnisotropicMetric {
    pub l: f64,
}

impl AnisotropicMetric {
    pub fn new(l: f64) -> Result<Self> {
        if !(l > 0.0 && l.is_finite()) {
            return Err(Error::OutOfRange(format!(
                "metric scale L = {l} must be positive"
            )));
        }
        Ok(AnisotropicMetric { l })
    }

    pub fn dist(&self, p: &Atom, q: &Atom) -> f64 {
        let dx = p.x[0] - q.x[0];
        let dy = p.x[1] - q.x[1];
        self.l * (dx * dx + dy * dy).sqrt() + (p.a - q.a).abs()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanPair {
    pub src: usize,
    pub dst: usize,
    pub mass: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransportPlan {
    pub pairs: Vec<PlanPair>,
    /// `sum mass * d(src, dst)` in pair order.
    pub cost: f64,
    /// Dual variables with `u_i + v_j <= d(x_i, y_j)`.
    pub dual_src: Vec<f64>,
    pub dual_dst: Vec<f64>,
}

impl TransportPlan {
    fn empty(n1: usize, n2: usize) -> Self {
        TransportPlan {
            pairs: Vec::new(),
            cost: 0.0,
            dual_src: vec![0.0; n1],
            dual_dst: vec![0.0; n2],
        }
    }

    /// Row and column sums of the plan.
    pub fn marginals(&self, n1: usize, n2: usize) -> (Vec<f64>, Vec<f64>) {
        let mut r = vec![0.0; n1];
        let mut c = vec![0.0; n2];
        for p in &self.pairs {
            r[p.src] += p.mass;
            c[p.dst] += p.mass;
        }
        (r, c)
    }

    /// `sum mass |da|`.
    pub fn vertical_cost(&self, mu1: &DiscreteMeasure, mu2: &DiscreteMeasure) -> f64 {
        self.pairs
            .iter()
            .map(|p| p.mass * (mu1.atoms[p.src].a - mu2.atoms[p.dst].a).abs())
            .sum()
    }
}

fn check_nonnegative(mu: &DiscreteMeasure) -> Result<()> {
    match mu.atoms.iter().position(|a| !(a.w >= 0.0)) {
        Some(k) => Err(Error::OutOfRange(format!(
            "atom {k} of `{}` has negative weight {}",
            mu.label, mu.atoms[k].w
        ))),
        None => Ok(()),
    }
}

/// Balance tolerance for transport inputs.
pub fn mass_tolerance(m1: f64, m2: f64) -> f64 {
    1e-12 * m1.max(m2).max(1.0)
}

/// Optimal plan between measures of equal mass.
pub fn w1_plan(
    mu1: &DiscreteMeasure,
    mu2: &DiscreteMeasure,
    metric: &AnisotropicMetric,
) -> Result<TransportPlan> {
    check_nonnegative(mu1)?;
    check_nonnegative(mu2)?;
    let m1 = mu1.mass();
    let m2 = mu2.mass();
    if (m1 - m2).abs() > mass_tolerance(m1, m2) {
        return Err(Error::Unbalanced {
            mass1: m1,
            mass2: m2,
        });
    }
    let (n1, n2) = (mu1.len(), mu2.len());
    if n1 == 0 || n2 == 0 {
        return Ok(TransportPlan::empty(n1, n2));
    }
    let supply: Vec<f64> = mu1.atoms.iter().map(|a| a.w).collect();
    let mut demand: Vec<f64> = mu2.atoms.iter().map(|a| a.w).collect();
    let total_demand: f64 = demand.iter().sum();
    let total_supply: f64 = supply.iter().sum();
    let big = (0..n2)
        .max_by(|&a, &b| demand[a].total_cmp(&demand[b]).then(b.cmp(&a)))
        .unwrap_or(0);
    demand[big] = (demand[big] + total_supply - total_demand).max(0.0);
    let cost: Vec<f64> = if n1 * n2 > 4096 {
        mu1.atoms
            .par_iter()
            .flat_map_iter(|p| mu2.atoms.iter().map(move |q| metric.dist(p, q)))
            .collect()
    } else {
        mu1.atoms
            .iter()
            .flat_map(|p| mu2.atoms.iter().map(move |q| metric.dist(p, q)))
            .collect()
    };
    let sol = simplex::solve(&supply, &demand, &cost);
    let pairs: Vec<PlanPair> = sol
        .flows
        .iter()
        .map(|&(i, j, f)| PlanPair {
            src: i,
            dst: j,
            mass: f,
        })
        .collect();
    let cost_total = pairs
        .iter()
        .map(|p| p.mass * cost[p.src * n2 + p.dst])
        .sum();
    Ok(TransportPlan {
        pairs,
        cost: cost_total,
        dual_src: sol.pi[..n1].iter().map(|p| -p).collect(),
        dual_dst: sol.pi[n1..].to_vec(),
    })
}

/// Kantorovich potential on the union support (sources then targets)
/// built from the plan's duals: `psi(z) = min_j d(z, y_j) - v_j`.
pub fn dual_potential(
    plan: &TransportPlan,
    mu1: &DiscreteMeasure,
    mu2: &DiscreteMeasure,
    metric: &AnisotropicMetric,
) -> Vec<f64> {
    mu1.atoms
        .iter()
        .chain(mu2.atoms.iter())
        .map(|z| {
            mu2.atoms
                .iter()
                .zip(&plan.dual_dst)
                .map(|(y, v)| metric.dist(z, y) - v)
                .fold(f64::INFINITY, f64::min)
        })
        .map(|v| if v.is_finite() { v } else { 0.0 })
        .collect()
}

/// `sum psi dmu1 - sum psi dmu2` for a 1-Lipschitz potential given on
/// the union support (sources then targets).
pub fn w1_dual_lower_bound(
    mu1: &DiscreteMeasure,
    mu2: &DiscreteMeasure,
    metric: &AnisotropicMetric,
    potential: &[f64],
) -> Result<f64> {
    let pts: Vec<&Atom> = mu1.atoms.iter().chain(mu2.atoms.iter()).collect();
    if potential.len() != pts.len() {
        return Err(Error::OutOfRange(format!(
            "potential has {} values for {} atoms",
            potential.len(),
            pts.len()
        )));
    }
    let scale = potential.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let tol = 1e-12 * scale;
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            let excess = (potential[i] - potential[j]).abs() - metric.dist(pts[i], pts[j]);
            if excess > tol {
                return Err(Error::InvalidPotential { i, j, excess });
            }
        }
    }
    let n1 = mu1.len();
    let a: f64 = mu1.atoms.iter().zip(potential).map(|(p, v)| p.w * v).sum();
    let b: f64 = mu2
        .atoms
        .iter()
        .zip(&potential[n1..])
        .map(|(p, v)| p.w * v)
        .sum();
    Ok(a - b)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trimmed {
    /// Same atoms as the inputs with reduced weights.
    pub mu1: DiscreteMeasure,
    pub mu2: DiscreteMeasure,
    /// Optimal plan between the trimmed measures (indices into the inputs).
    pub plan: TransportPlan,
    /// W1 of the trimmed measures.
    pub c1: f64,
    /// Removed mass, `| |mu1| - |mu2| |`.
    pub c2: f64,
    /// `c1 + diam * c2`, an upper bound for the unbalanced cost.
    pub bound: f64,
}

/// Reduce to equal masses by adding a virtual atom at the centroid of the
/// union support to the lighter side, solving, and dropping virtual pairs.
pub fn trim_unbalanced(
    mu1: &DiscreteMeasure,
    mu2: &DiscreteMeasure,
    metric: &AnisotropicMetric,
    diam: f64,
) -> Result<Trimmed> {
    check_nonnegative(mu1)?;
    check_nonnegative(mu2)?;
    let m1 = mu1.mass();
    let m2 = mu2.mass();
    let zeroed = |mu: &DiscreteMeasure| mu.scaled(0.0);
    if m1 <= 0.0 || m2 <= 0.0 || mu1.is_empty() || mu2.is_empty() {
        let c2 = (m1 - m2).abs();
        return Ok(Trimmed {
            mu1: zeroed(mu1),
            mu2: zeroed(mu2),
            plan: TransportPlan::empty(mu1.len(), mu2.len()),
            c1: 0.0,
            c2,
            bound: diam * c2,
        });
    }
    if (m1 - m2).abs() <= mass_tolerance(m1, m2) {
        let plan = w1_plan(mu1, mu2, metric)?;
        let c1 = plan.cost;
        return Ok(Trimmed {
            mu1: mu1.clone(),
            mu2: mu2.clone(),
            plan,
            c1,
            c2: 0.0,
            bound: c1,
        });
    }
    let alpha = (m1 - m2).abs();
    let count = (mu1.len() + mu2.len()) as f64;
    let mut centroid = Atom::kinetic([0.0, 0.0], 0.0, alpha);
    for p in mu1.atoms.iter().chain(mu2.atoms.iter()) {
        centroid.x[0] += p.x[0] / count;
        centroid.x[1] += p.x[1] / count;
        centroid.a += p.a / count;
    }
    let (mut a1, mut a2) = (mu1.clone(), mu2.clone());
    let virtual_on_target = m1 > m2;
    if virtual_on_target {
        a2.atoms.push(centroid);
    } else {
        a1.atoms.push(centroid);
    }
    let full = w1_plan(&a1, &a2, metric)?;
    let (n1, n2) = (mu1.len(), mu2.len());
    let pairs: Vec<PlanPair> = full
        .pairs
        .iter()
        .copied()
        .filter(|p| p.src < n1 && p.dst < n2)
        .collect();
    let mut plan = TransportPlan {
        cost: pairs
            .iter()
            .map(|p| p.mass * metric.dist(&mu1.atoms[p.src], &mu2.atoms[p.dst]))
            .sum(),
        pairs,
        dual_src: full.dual_src[..n1].to_vec(),
        dual_dst: full.dual_dst[..n2].to_vec(),
    };
    let (r, c) = plan.marginals(n1, n2);
    let mut t1 = mu1.clone();
    let mut t2 = mu2.clone();
    for (a, w) in t1.atoms.iter_mut().zip(&r) {
        a.w = *w;
    }
    for (a, w) in t2.atoms.iter_mut().zip(&c) {
        a.w = *w;
    }
    plan.pairs.retain(|p| p.mass > 0.0);
    let c1 = plan.cost;
    Ok(Trimmed {
        mu1: t1,
        mu2: t2,
        plan,
        c1,
        c2: alpha,
        bound: c1 + diam * alpha,
    })
}

/// Characteristic velocity `i e^{ia} = (-sin a, cos a)`.
pub fn velocity(a: f64) -> [f64; 2] {
    [-a.sin(), a.cos()]
}

/// Number of boundary samples used by [`boundary_discrepancy`].
pub fn boundary_samples(f: &LiftedField) -> usize {
    (16 * f.nx.max(f.ny)).max(512)
}

/// `eps = (1/t) int_0^t int_0^M int_{dB_R} |chi(x,a) - chi(x - ie^{ia}s, a)|`
/// by midpoint quadrature in all three variables.
pub fn boundary_discrepancy(f: &LiftedField, tbar: f64, bins: &ABins) -> Result<f64> {
    if !(tbar > 0.0) || tbar >= f.boundary_gap() {
        return Err(Error::Geometry(format!(
            "t = {tbar} must lie in (0, {}) so shifted points stay in the domain",
            f.boundary_gap()
        )));
    }
    let nb = boundary_samples(f);
    let nt = 16;
    let c = f.center();
    let dl = 2.0 * std::f64::consts::PI * f.r / nb as f64;
    let sums: Vec<f64> = (0..nb)
        .into_par_iter()
        .map(|k| {
            let th = 2.0 * std::f64::consts::PI * (k as f64 + 0.5) / nb as f64;
            let x = [c[0] + f.r * th.cos(), c[1] + f.r * th.sin()];
            let px = f.phi_at(x);
            let mut acc = 0.0;
            for b in 0..bins.k {
                let a = bins.center(b);
                let v = velocity(a);
                let here = px >= a;
                for s in 0..nt {
                    let t = tbar * (s as f64 + 0.5) / nt as f64;
                    let there = f.phi_at([x[0] - v[0] * t, x[1] - v[1] * t]) >= a;
                    if here != there {
                        acc += 1.0;
                    }
                }
            }
            acc
        })
        .collect();
    let total: f64 = sums.iter().sum();
    // (1/t) * dl * da * (t / nt) * count
    Ok(total * dl * bins.width() / nt as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::MeasureKind;

    fn atoms(v: &[([f64; 2], f64, f64)]) -> DiscreteMeasure {
        DiscreteMeasure::from_atoms(
            MeasureKind::Kinetic,
            "t",
            v.iter().map(|&(x, a, w)| Atom::kinetic(x, a, w)).collect(),
        )
    }

    #[test]
    fn single_pair_costs() {
        let m = AnisotropicMetric::new(3.0).unwrap();
        let p = w1_plan(
            &atoms(&[([0.0, 0.0], 0.0, 1.0)]),
            &atoms(&[([0.0, 0.0], 1.0, 1.0)]),
            &m,
        )
        .unwrap();
        assert_eq!(p.cost, 1.0);
        let m2 = AnisotropicMetric::new(2.0).unwrap();
        let p = w1_plan(
            &atoms(&[([0.0, 0.0], 0.0, 1.0)]),
            &atoms(&[([1.0, 0.0], 0.0, 1.0)]),
            &m2,
        )
        .unwrap();
        assert_eq!(p.cost, 2.0);
    }

    #[test]
    fn mismatch_is_unbalanced_error() {
        let m = AnisotropicMetric::new(1.0).unwrap();
        let e = w1_plan(
            &atoms(&[([0.0, 0.0], 0.0, 1.0)]),
            &atoms(&[([0.0, 0.0], 1.0, 2.0)]),
            &m,
        );
        assert!(matches!(e, Err(Error::Unbalanced { .. })));
    }
}
