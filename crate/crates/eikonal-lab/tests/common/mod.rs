//! Shared oracles for integration tests.
#![allow(dead_code)]

use eikonal_lab::measure::{Atom, DiscreteMeasure, MeasureKind};
use eikonal_lab::transport::AnisotropicMetric;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Random balanced instance with integer weights scaled by `1 / total`.
/// Returns the measures and the integer weights.
pub fn random_instance(
    rng: &mut ChaCha8Rng,
    max_atoms: usize,
    max_weight: u32,
) -> (DiscreteMeasure, DiscreteMeasure, Vec<u32>, Vec<u32>) {
    let n1 = rng.gen_range(1..=max_atoms);
    let n2 = rng.gen_range(1..=max_atoms);
    let mut w1: Vec<u32> = (0..n1).map(|_| rng.gen_range(1..=max_weight)).collect();
    let total: u32 = w1.iter().sum();
    // Random composition of `total` into `n2` positive parts when possible.
    let parts = n2.min(total as usize);
    let mut cuts: Vec<u32> = Vec::new();
    while cuts.len() + 1 < parts {
        let c = rng.gen_range(1..total);
        if !cuts.contains(&c) {
            cuts.push(c);
        }
    }
    cuts.sort();
    let mut w2 = Vec::new();
    let mut prev = 0;
    for c in cuts.iter().chain(std::iter::once(&total)) {
        w2.push(c - prev);
        prev = *c;
    }
    if w1.is_empty() {
        w1.push(1);
    }
    let scale = 1.0 / total as f64;
    let mk = |w: &[u32], rng: &mut ChaCha8Rng| {
        DiscreteMeasure::from_atoms(
            MeasureKind::Kinetic,
            "rand",
            w.iter()
                .map(|&k| {
                    Atom::kinetic(
                        [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)],
                        rng.gen_range(0.0..3.0),
                        k as f64 * scale,
                    )
                })
                .collect(),
        )
    };
    let mu1 = mk(&w1, rng);
    let mu2 = mk(&w2, rng);
    (mu1, mu2, w1, w2)
}

/// Minimum cost over all integral plans (all vertices of the integral
/// transportation polytope are among them), by exhaustive enumeration.
pub fn brute_force_cost(
    mu1: &DiscreteMeasure,
    mu2: &DiscreteMeasure,
    w1: &[u32],
    w2: &[u32],
    metric: &AnisotropicMetric,
) -> f64 {
    let n2 = w2.len();
    let total: u32 = w1.iter().sum();
    let unit = 1.0 / total as f64;
    let cost: Vec<f64> = mu1
        .atoms
        .iter()
        .flat_map(|p| mu2.atoms.iter().map(move |q| metric.dist(p, q)))
        .collect();
    let mut rows = w1.to_vec();
    let mut cols = w2.to_vec();
    let mut best = f64::INFINITY;
    #[allow(clippy::too_many_arguments)]
    fn rec(
        cell: usize,
        n2: usize,
        rows: &mut [u32],
        cols: &mut [u32],
        cost: &[f64],
        flows: &mut Vec<u32>,
        unit: f64,
        best: &mut f64,
    ) {
        let n1 = rows.len();
        if cell == n1 * n2 {
            if rows.iter().all(|&r| r == 0) && cols.iter().all(|&c| c == 0) {
                // Sum in a fixed order to match plan-cost summation as closely as possible.
                let mut c = 0.0;
                for (k, &f) in flows.iter().enumerate() {
                    if f > 0 {
                        c += f as f64 * unit * cost[k];
                    }
                }
                if c < *best {
                    *best = c;
                }
            }
            return;
        }
        let (i, j) = (cell / n2, cell % n2);
        let hi = rows[i].min(cols[j]);
        // The last column of a row must take the remainder.
        let lo = if j == n2 - 1 { rows[i] } else { 0 };
        if lo > hi {
            return;
        }
        for f in lo..=hi {
            rows[i] -= f;
            cols[j] -= f;
            flows.push(f);
            rec(cell + 1, n2, rows, cols, cost, flows, unit, best);
            flows.pop();
            rows[i] += f;
            cols[j] += f;
        }
    }
    let mut flows = Vec::new();
    rec(
        0, n2, &mut rows, &mut cols, &cost, &mut flows, unit, &mut best,
    );
    best
}
