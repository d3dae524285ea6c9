//! Finite signed measures on x, (x,a) or (t,x,a).

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum MeasureKind {
    /// Atoms on the plane; `a` and `t` are unused.
    Spatial,
    /// Atoms on (x, a).
    Kinetic,
    /// Atoms on (t, x, a).
    SpaceTime,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub t: f64,
    pub x: [f64; 2],
    pub a: f64,
    pub w: f64,
}

impl Atom {
    pub fn spatial(x: [f64; 2], w: f64) -> Self {
        Atom {
            t: 0.0,
            x,
            a: 0.0,
            w,
        }
    }

    pub fn kinetic(x: [f64; 2], a: f64, w: f64) -> Self {
        Atom { t: 0.0, x, a, w }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscreteMeasure {
    pub kind: MeasureKind,
    pub atoms: Vec<Atom>,
    pub label: String,
}

impl DiscreteMeasure {
    pub fn new(kind: MeasureKind, label: impl Into<String>) -> Self {
        DiscreteMeasure {
            kind,
            atoms: Vec::new(),
            label: label.into(),
        }
    }

    pub fn from_atoms(kind: MeasureKind, label: impl Into<String>, atoms: Vec<Atom>) -> Self {
        DiscreteMeasure {
            kind,
            atoms,
            label: label.into(),
        }
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn total_variation(&self) -> f64 {
        self.atoms.iter().map(|a| a.w.abs()).fold(0.0, |s, w| s + w)
    }

    pub fn mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.w).fold(0.0, |s, w| s + w)
    }

    pub fn positive_part(&self) -> DiscreteMeasure {
        self.filter_map_weight(|w| (w > 0.0).then_some(w))
    }

    pub fn negative_part(&self) -> DiscreteMeasure {
        self.filter_map_weight(|w| (w < 0.0).then_some(-w))
    }

    pub fn abs(&self) -> DiscreteMeasure {
        self.filter_map_weight(|w| Some(w.abs()))
    }

    pub fn scaled(&self, c: f64) -> DiscreteMeasure {
        self.filter_map_weight(|w| Some(c * w))
    }

    /// Atoms whose spatial position satisfies `keep`.
    pub fn restrict(&self, mut keep: impl FnMut(&Atom) -> bool) -> DiscreteMeasure {
        DiscreteMeasure {
            kind: self.kind,
            atoms: self.atoms.iter().copied().filter(|a| keep(a)).collect(),
            label: self.label.clone(),
        }
    }

    /// Mass of `|w|` inside the open disk of radius `r` around `c`.
    pub fn ball_variation(&self, c: [f64; 2], r: f64) -> f64 {
        let r2 = r * r;
        self.atoms
            .iter()
            .filter(|a| {
                let dx = a.x[0] - c[0];
                let dy = a.x[1] - c[1];
                dx * dx + dy * dy < r2
            })
            .map(|a| a.w.abs())
            .sum()
    }

    fn filter_map_weight(&self, mut f: impl FnMut(f64) -> Option<f64>) -> DiscreteMeasure {
        DiscreteMeasure {
            kind: self.kind,
            atoms: self
                .atoms
                .iter()
                .filter_map(|a| f(a.w).map(|w| Atom { w, ..*a }))
                .collect(),
            label: self.label.clone(),
        }
    }
}

/// Uniform binning of the angle range `[0, M]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ABins {
    pub k: usize,
    pub m: f64,
}

impl ABins {
    pub fn new(k: usize, m: f64) -> Self {
        assert!(k > 0 && m > 0.0, "bins need k > 0 and M > 0");
        ABins { k, m }
    }

    pub fn width(&self) -> f64 {
        self.m / self.k as f64
    }

    pub fn center(&self, b: usize) -> f64 {
        (b as f64 + 0.5) * self.m / self.k as f64
    }

    /// Bin whose center is nearest to `a` (clamped to the range).
    pub fn index_of(&self, a: f64) -> usize {
        let b = (a / self.width() - 0.5).round();
        b.clamp(0.0, (self.k - 1) as f64) as usize
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parts_split_variation() {
        let m = DiscreteMeasure::from_atoms(
            MeasureKind::Kinetic,
            "u",
            vec![
                Atom::kinetic([0.0, 0.0], 0.1, 0.3),
                Atom::kinetic([0.0, 0.0], 0.2, -0.2),
            ],
        );
        assert_eq!(m.positive_part().total_variation(), 0.3);
        assert_eq!(m.negative_part().total_variation(), 0.2);
        assert!((m.total_variation() - 0.5).abs() < 1e-15);
        assert!((m.mass() - 0.1).abs() < 1e-15);
    }

    #[test]
    fn bin_centers_round_trip() {
        let bins = ABins::new(64, std::f64::consts::PI);
        for b in 0..64 {
            assert_eq!(bins.index_of(bins.center(b)), b);
        }
    }
}
