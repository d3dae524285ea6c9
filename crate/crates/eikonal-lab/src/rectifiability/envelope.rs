//! Lower Lipschitz envelopes `f(s) = inf_z (g(z) + C |s - z|)`.

use crate::error::{Error, Result};

/// Smallest admissible Lipschitz constant; the envelope requires `C` above it.
pub fn min_constant() -> f64 {
    (3.0 * std::f64::consts::PI / 8.0).tan()
}

pub fn check_constant(c: f64) -> Result<()> {
    if c.is_finite() && c > min_constant() {
        Ok(())
    } else {
        Err(Error::InvalidConstant(c))
    }
}

/// In-place envelope of values on sorted coordinates. Entries may be
/// infinite (no sample there).
pub(crate) fn envelope_sorted(s: &[f64], g: &mut [f64], c: f64) {
    for k in 1..g.len() {
        let cand = g[k - 1] + c * (s[k] - s[k - 1]);
        if cand < g[k] {
            g[k] = cand;
        }
    }
    for k in (0..g.len().saturating_sub(1)).rev() {
        let cand = g[k + 1] + c * (s[k + 1] - s[k]);
        if cand < g[k] {
            g[k] = cand;
        }
    }
}

/// Envelope of `samples` `(s, w)` evaluated at the sample coordinates, in
/// input order.
pub fn lipschitz_envelope(samples: &[(f64, f64)], c: f64) -> Result<Vec<(f64, f64)>> {
    check_constant(c)?;
    let mut order: Vec<usize> = (0..samples.len()).collect();
    order.sort_by(|&i, &j| samples[i].0.total_cmp(&samples[j].0));
    let s: Vec<f64> = order.iter().map(|&i| samples[i].0).collect();
    let mut g: Vec<f64> = order.iter().map(|&i| samples[i].1).collect();
    envelope_sorted(&s, &mut g, c);
    let mut out = samples.to_vec();
    for (k, &i) in order.iter().enumerate() {
        out[i].1 = g[k];
    }
    Ok(out)
}

/// Envelope of `samples` together with the anchor `(s_bar, w_bar)`,
/// evaluated at the points of `grid`.
pub fn anchored_envelope(
    samples: &[(f64, f64)],
    anchor: (f64, f64),
    grid: &[f64],
    c: f64,
) -> Result<Vec<f64>> {
    check_constant(c)?;
    let mut all: Vec<(f64, f64)> = samples.to_vec();
    all.push(anchor);
    let env = lipschitz_envelope(&all, c)?;
    Ok(grid
        .iter()
        .map(|&s| {
            env.iter()
                .map(|&(z, w)| w + c * (s - z).abs())
                .fold(f64::INFINITY, f64::min)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_point_example() {
        let c = 2.4143;
        let f = lipschitz_envelope(&[(0.0, 0.0), (1.0, 5.0)], c).unwrap();
        assert_eq!(f[0], (0.0, 0.0));
        assert!((f[1].1 - 2.4143).abs() < 1e-12);
    }

    #[test]
    fn rejects_small_constant() {
        assert!(matches!(
            lipschitz_envelope(&[(0.0, 0.0)], 2.4),
            Err(Error::InvalidConstant(_))
        ));
    }

    #[test]
    fn anchored_passes_through_anchor() {
        let f = anchored_envelope(&[(1.0, 3.0)], (0.0, 1.0), &[0.0, 0.5, 1.0], 3.0).unwrap();
        assert_eq!(f, vec![1.0, 2.5, 3.0]);
    }
}
