//! Pointwise density diagnostics of `nu` and of the field.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{abs_deviation, disk_values, JumpLine, LiftedField};
use crate::measure::{ABins, DiscreteMeasure};

/// Uniform bucket grid over atom positions for fast disk sums.
pub struct MassIndex {
    origin: [f64; 2],
    cell: f64,
    nx: usize,
    ny: usize,
    buckets: Vec<Vec<([f64; 2], f64)>>,
}

impl MassIndex {
    pub fn new(mu: &DiscreteMeasure, cell: f64) -> Self {
        let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
        for a in &mu.atoms {
            for d in 0..2 {
                lo[d] = lo[d].min(a.x[d]);
                hi[d] = hi[d].max(a.x[d]);
            }
        }
        if mu.atoms.is_empty() {
            lo = [0.0; 2];
            hi = [0.0; 2];
        }
        let nx = ((hi[0] - lo[0]) / cell).floor() as usize + 1;
        let ny = ((hi[1] - lo[1]) / cell).floor() as usize + 1;
        let mut buckets = vec![Vec::new(); nx * ny];
        for a in &mu.atoms {
            let i = ((a.x[0] - lo[0]) / cell).floor() as usize;
            let j = ((a.x[1] - lo[1]) / cell).floor() as usize;
            buckets[j.min(ny - 1) * nx + i.min(nx - 1)].push((a.x, a.w.abs()));
        }
        MassIndex {
            origin: lo,
            cell,
            nx,
            ny,
            buckets,
        }
    }

    /// Mass of `|w|` in the open disk.
    pub fn disk(&self, c: [f64; 2], r: f64) -> f64 {
        let range = |v: f64, o: f64, n: usize| {
            let lo = ((v - r - o) / self.cell).floor().max(0.0) as usize;
            let hi = ((v + r - o) / self.cell).floor();
            if hi < 0.0 {
                return (1, 0);
            }
            (lo, (hi as usize).min(n - 1))
        };
        let (i0, i1) = range(c[0], self.origin[0], self.nx);
        let (j0, j1) = range(c[1], self.origin[1], self.ny);
        let r2 = r * r;
        let mut sum = 0.0;
        for j in j0..=j1 {
            for i in i0..=i1 {
                for &(x, w) in &self.buckets[j * self.nx + i] {
                    let (dx, dy) = (x[0] - c[0], x[1] - c[1]);
                    if dx * dx + dy * dy < r2 {
                        sum += w;
                    }
                }
            }
        }
        sum
    }
}

/// Default threshold `0.1 (sqrt 3 - pi/3)` for membership in the jump set.
pub fn default_sigma_threshold() -> f64 {
    0.1 * (3f64.sqrt() - std::f64::consts::FRAC_PI_3)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SigmaPoint {
    pub x: [f64; 2],
    /// Largest `nu(B_r)/r` over the probed radii.
    pub max_ratio: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SigmaSet {
    pub points: Vec<SigmaPoint>,
    pub threshold: f64,
}

/// Cell centers of the ball where `nu(B_r)/r >= threshold` for every probed
/// radius `r in {h, 2h, 4h}`.
pub fn sigma_detect(f: &LiftedField, nu: &DiscreteMeasure, threshold: f64) -> SigmaSet {
    let h = f.h();
    let radii = [h, 2.0 * h, 4.0 * h];
    let index = MassIndex::new(nu, 2.0 * h);
    let mut points = Vec::new();
    for j in 0..f.ny {
        for i in 0..f.nx {
            let x = f.cell_center(i, j);
            if !f.in_ball(x) {
                continue;
            }
            let ratios: Vec<f64> = radii.iter().map(|&r| index.disk(x, r) / r).collect();
            let lo = ratios.iter().copied().fold(f64::INFINITY, f64::min);
            if lo >= threshold {
                let hi = ratios.iter().copied().fold(0.0, f64::max);
                points.push(SigmaPoint { x, max_ratio: hi });
            }
        }
    }
    SigmaSet { points, threshold }
}

/// Mass fraction of `mu` located within `radius` of the detected set; 1 for
/// an empty measure.
pub fn mass_near_sigma(mu: &DiscreteMeasure, sigma: &SigmaSet, radius: f64) -> f64 {
    let total: f64 = mu.atoms.iter().map(|a| a.w.abs()).sum();
    if total == 0.0 {
        return 1.0;
    }
    let pts = DiscreteMeasure::from_atoms(
        crate::measure::MeasureKind::Spatial,
        "sigma",
        sigma
            .points
            .iter()
            .map(|p| crate::measure::Atom::spatial(p.x, 1.0))
            .collect(),
    );
    let index = MassIndex::new(&pts, radius.max(f64::MIN_POSITIVE));
    let near: f64 = mu
        .atoms
        .iter()
        .filter(|a| index.disk(a.x, radius * (1.0 + 1e-12)) > 0.0)
        .map(|a| a.w.abs())
        .sum();
    near / total
}

/// Normalized mean oscillation `r^{-2} int_{B_r} |phi - mean|` for each
/// radius.
pub fn vmo_check(f: &LiftedField, x: [f64; 2], radii: &[f64]) -> Result<Vec<f64>> {
    radii
        .iter()
        .map(|&r| {
            if r < f.h() {
                return Err(Error::OutOfRange(format!(
                    "radius {r} below the grid spacing {}",
                    f.h()
                )));
            }
            let vals = disk_values(f, x, r);
            if vals.is_empty() {
                return Err(Error::Geometry(format!(
                    "no samples in the disk around {x:?}"
                )));
            }
            let osc = abs_deviation(&vals) * f.cell_area();
            Ok(osc / (r * r))
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Dichotomy {
    First,
    Second,
    Both,
    Neither,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DichotomyReport {
    /// `|{phi >= a - delta} cap B_r| / r^2` per radius.
    pub ratio1: Vec<f64>,
    /// `nu(B_r)/r` per radius.
    pub ratio2: Vec<f64>,
    pub floor1: f64,
    pub floor2: f64,
    pub verdict: Dichotomy,
}

/// Floors `0.05 delta` and `0.01 delta^3`.
pub fn default_floors(delta: f64) -> (f64, f64) {
    (0.05 * delta, 0.01 * delta.powi(3))
}

/// Which of the two lower density bounds holds at `x` for level `a_bar`.
#[allow(clippy::too_many_arguments)]
pub fn density_dichotomy(
    f: &LiftedField,
    nu: &DiscreteMeasure,
    x: [f64; 2],
    a_bar: f64,
    delta: f64,
    radii: &[f64],
    floors: (f64, f64),
) -> Result<DichotomyReport> {
    if radii.is_empty() || radii.iter().any(|&r| r <= 0.0) {
        return Err(Error::OutOfRange("radii must be positive".into()));
    }
    let mut ratio1 = Vec::with_capacity(radii.len());
    let mut ratio2 = Vec::with_capacity(radii.len());
    for &r in radii {
        let vals = disk_values(f, x, r);
        let area = vals.iter().filter(|&&v| v >= a_bar - delta).count() as f64 * f.cell_area();
        ratio1.push(area / (r * r));
        ratio2.push(nu.ball_variation(x, r) / r);
    }
    let min = |v: &[f64]| v.iter().copied().fold(f64::INFINITY, f64::min);
    let verdict = match (min(&ratio1) >= floors.0, min(&ratio2) >= floors.1) {
        (true, true) => Dichotomy::Both,
        (true, false) => Dichotomy::First,
        (false, true) => Dichotomy::Second,
        (false, false) => Dichotomy::Neither,
    };
    Ok(DichotomyReport {
        ratio1,
        ratio2,
        floor1: floors.0,
        floor2: floors.1,
        verdict,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JumpFormulaReport {
    /// Bin centers.
    pub a: Vec<f64>,
    /// Measured density of `-U` per unit length and unit angle near the line.
    pub measured: Vec<f64>,
    /// `1_{phi- < a < phi+} (e^{ia} - e^{i phi-}) . n`, averaged over each bin.
    pub predicted: Vec<f64>,
    /// `sum |measured - predicted| / sum |predicted|`.
    pub relative_l1: f64,
}

/// Compare `U` near a straight jump line with the trace formula.
pub fn jump_formula_check(
    f: &LiftedField,
    u: &DiscreteMeasure,
    bins: &ABins,
    line: &JumpLine,
) -> Result<JumpFormulaReport> {
    if line.trace_mismatch() > 1e-9 {
        return Err(Error::InconsistentJump {
            mismatch: line.trace_mismatch(),
        });
    }
    let c = f.center();
    let dist = line.signed_distance(c).abs();
    if dist >= f.r {
        return Err(Error::Geometry("jump line misses the ball".into()));
    }
    let chord = 2.0 * (f.r * f.r - dist * dist).sqrt();
    let band = f.h() * std::f64::consts::SQRT_2;
    let width = bins.width();
    let mut measured = vec![0.0; bins.k];
    for a in &u.atoms {
        if line.signed_distance(a.x).abs() <= band && f.in_ball(a.x) {
            measured[bins.index_of(a.a)] -= a.w;
        }
    }
    for m in &mut measured {
        *m /= chord * width;
    }
    let n = line.normal;
    let (lo, hi) = (
        line.phi_minus.min(line.phi_plus),
        line.phi_minus.max(line.phi_plus),
    );
    let formula = |a: f64| {
        if lo < a && a < hi {
            (a.cos() - line.phi_minus.cos()) * n[0] + (a.sin() - line.phi_minus.sin()) * n[1]
        } else {
            0.0
        }
    };
    const Q: usize = 64;
    let predicted: Vec<f64> = (0..bins.k)
        .map(|b| {
            let a0 = b as f64 * width;
            (0..Q)
                .map(|q| formula(a0 + (q as f64 + 0.5) * width / Q as f64))
                .sum::<f64>()
                / Q as f64
        })
        .collect();
    let num: f64 = measured
        .iter()
        .zip(&predicted)
        .map(|(m, p)| (m - p).abs())
        .sum();
    let den: f64 = predicted.iter().map(|p| p.abs()).sum();
    Ok(JumpFormulaReport {
        a: (0..bins.k).map(|b| bins.center(b)).collect(),
        measured,
        predicted,
        relative_l1: if den > 0.0 { num / den } else { num },
    })
}

/// Fraction of `|mu|` whose atoms satisfy `keep`.
pub fn region_mass_fraction(mu: &DiscreteMeasure, keep: impl Fn([f64; 2]) -> bool) -> f64 {
    let total: f64 = mu.atoms.iter().map(|a| a.w.abs()).sum();
    if total == 0.0 {
        return 0.0;
    }
    mu.atoms
        .iter()
        .filter(|a| keep(a.x))
        .map(|a| a.w.abs())
        .sum::<f64>()
        / total
}
