//! Overlapping cover of `[0, M]` by angular sectors of length `3 pi / 4`.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, FRAC_PI_8};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SectorCover {
    pub m: f64,
    /// Largest sector index.
    pub l_max: usize,
    /// Open intervals `I_l`.
    pub intervals: Vec<(f64, f64)>,
    /// `e_l = ie^{i(l pi/2 + pi/4)}`.
    pub e: Vec<[f64; 2]>,
    /// `e_l^perp = i e_l`.
    pub e_perp: Vec<[f64; 2]>,
}

impl SectorCover {
    pub fn len(&self) -> usize {
        self.intervals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn contains(&self, l: usize, a: f64) -> bool {
        let (lo, hi) = self.intervals[l];
        lo < a && a < hi
    }

    /// Smallest `l` with every value in `I_l`.
    pub fn smallest_containing(&self, values: &[f64]) -> Option<usize> {
        (0..self.len()).find(|&l| values.iter().all(|&a| self.contains(l, a)))
    }

    /// Unit vector `e^{i(l pi/2 + pi/4)} = -e_l^perp`; the transverse axis of
    /// the sector frame.
    pub fn zeta(&self, l: usize) -> [f64; 2] {
        [-self.e_perp[l][0], -self.e_perp[l][1]]
    }
}

pub fn sector_cover(m: f64) -> Result<SectorCover> {
    if !(m > 0.0 && m.is_finite()) {
        return Err(Error::OutOfRange(format!("M = {m} must be positive")));
    }
    let l_max = (2.0 * m / std::f64::consts::PI).floor() as usize;
    let mut cover = SectorCover {
        m,
        l_max,
        intervals: Vec::new(),
        e: Vec::new(),
        e_perp: Vec::new(),
    };
    for l in 0..=l_max {
        let lf = l as f64;
        cover.intervals.push((
            lf * FRAC_PI_2 - FRAC_PI_8,
            (lf + 1.0) * FRAC_PI_2 + FRAC_PI_8,
        ));
        let th = lf * FRAC_PI_2 + FRAC_PI_4;
        // i e^{i th} and i * i e^{i th} = -e^{i th}.
        cover.e.push([-th.sin(), th.cos()]);
        cover.e_perp.push([-th.cos(), -th.sin()]);
    }
    Ok(cover)
}

/// Class of a vertical jump of a curve.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EventClass {
    Jump,
    Sector(usize),
}

impl EventClass {
    pub fn label(self) -> (&'static str, i64) {
        match self {
            EventClass::Jump => ("jump", -1),
            EventClass::Sector(l) => ("sector", l as i64),
        }
    }
}

/// Sector of the smallest index containing both angles, or a jump.
pub fn classify_angles(from: f64, to: f64, cover: &SectorCover) -> EventClass {
    cover
        .smallest_containing(&[from, to])
        .map_or(EventClass::Jump, EventClass::Sector)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn cover_examples() {
        let c = sector_cover(2.0 * PI).unwrap();
        assert_eq!(c.l_max, 4);
        assert!((c.intervals[0].0 + PI / 8.0).abs() < 1e-15);
        assert!((c.intervals[0].1 - 5.0 * PI / 8.0).abs() < 1e-15);
        let h = sector_cover(PI / 2.0).unwrap();
        assert_eq!(h.l_max, 1);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert!((c.e[0][0] + s).abs() < 1e-15 && (c.e[0][1] - s).abs() < 1e-15);
        assert!(sector_cover(0.0).is_err());
    }

    #[test]
    fn classification_examples() {
        let c = sector_cover(2.0 * PI).unwrap();
        assert_eq!(classify_angles(0.3, 0.1, &c), EventClass::Sector(0));
        assert_eq!(classify_angles(3.0, 0.1, &c), EventClass::Jump);
        assert_eq!(classify_angles(1.6, 1.4, &c), EventClass::Sector(0));
    }
}
