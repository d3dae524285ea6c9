//! Piecewise-straight characteristic curves and their ensembles.

use serde::{Deserialize, Serialize};

use crate::kinetic::Side;
use crate::transport::velocity;

/// Start of a straight segment: position and angle at time `t`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub t: f64,
    pub x: [f64; 2],
    pub a: f64,
}

/// Unit-speed curve `x(t) = x_k + ie^{i a_k}(t - t_k)` on `[t_k, t_{k+1})`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Curve {
    pub id: u64,
    pub side: Side,
    pub weight: f64,
    pub t_minus: f64,
    pub t_plus: f64,
    pub nodes: Vec<Node>,
}

impl Curve {
    pub fn alive_at(&self, t: f64) -> bool {
        self.t_minus <= t && t < self.t_plus
    }

    /// Index of the segment active at `t` (right-continuous at nodes).
    pub fn segment_at(&self, t: f64) -> usize {
        self.nodes.partition_point(|n| n.t <= t).saturating_sub(1)
    }

    /// Position and angle at `t`, right-continuous at nodes.
    pub fn state_at(&self, t: f64) -> ([f64; 2], f64) {
        let n = self.nodes[self.segment_at(t)];
        (advance(n, t), n.a)
    }

    /// Position just before node `k` (`k >= 1`).
    pub fn left_limit(&self, k: usize) -> [f64; 2] {
        advance(self.nodes[k - 1], self.nodes[k].t)
    }

    /// `sum |a_{k+1} - a_k|`.
    pub fn total_variation(&self) -> f64 {
        self.nodes.windows(2).map(|w| (w[1].a - w[0].a).abs()).sum()
    }

    /// `sum |x_k - x(t_k -)|` over relocation nodes.
    pub fn spatial_jumps(&self) -> f64 {
        (1..self.nodes.len())
            .map(|k| {
                let p = self.left_limit(k);
                let q = self.nodes[k].x;
                (q[0] - p[0]).hypot(q[1] - p[1])
            })
            .sum()
    }

    /// Endpoint `x(t_plus -)`.
    pub fn end_position(&self) -> [f64; 2] {
        advance(*self.nodes.last().expect("curve has nodes"), self.t_plus)
    }
}

pub(crate) fn advance(n: Node, t: f64) -> [f64; 2] {
    let v = velocity(n.a);
    let dt = t - n.t;
    [n.x[0] + v[0] * dt, n.x[1] + v[1] * dt]
}

/// Mass bookkeeping of one construction.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BuildStats {
    pub initial_mass: f64,
    pub injected_mass: f64,
    pub exited_mass: f64,
    /// Excess mass left in place because no deficit could absorb it.
    pub trimmed_mass: f64,
    /// Deficit mass left unfilled.
    pub unfilled_mass: f64,
    /// Relocated mass over all steps.
    pub moved_mass: f64,
    /// Sum of per-step plan costs.
    pub plan_cost: f64,
    /// Number of forks truncated to the child cap.
    pub capped_forks: u64,
    pub epsilon: f64,
    pub l: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurveEnsemble {
    pub n: u32,
    pub side: Side,
    pub curves: Vec<Curve>,
    pub stats: BuildStats,
}

impl CurveEnsemble {
    pub fn t_bar(&self) -> f64 {
        0.5f64.powi(self.n as i32)
    }

    pub fn total_weight(&self) -> f64 {
        self.curves.iter().map(|c| c.weight).fold(0.0, |s, w| s + w)
    }

    pub fn alive_mass(&self, t: f64) -> f64 {
        self.curves
            .iter()
            .filter(|c| c.alive_at(t))
            .map(|c| c.weight)
            .fold(0.0, |s, w| s + w)
    }

    /// Mass whose curves ended through the boundary strictly before `t`.
    pub fn exited_mass(&self, t: f64) -> f64 {
        self.curves
            .iter()
            .filter(|c| c.t_plus <= t && c.t_plus < 1.0)
            .map(|c| c.weight)
            .fold(0.0, |s, w| s + w)
    }

    /// Mass of curves started at time 0.
    pub fn initial_mass(&self) -> f64 {
        self.curves
            .iter()
            .filter(|c| c.t_minus == 0.0)
            .map(|c| c.weight)
            .fold(0.0, |s, w| s + w)
    }

    /// Mass of curves injected through the boundary at times `<= t`.
    pub fn injected_mass(&self, t: f64) -> f64 {
        self.curves
            .iter()
            .filter(|c| c.t_minus > 0.0 && c.t_minus <= t)
            .map(|c| c.weight)
            .fold(0.0, |s, w| s + w)
    }

    pub fn scaled(&self, c: f64) -> CurveEnsemble {
        let mut out = self.clone();
        for curve in &mut out.curves {
            curve.weight *= c;
        }
        out
    }
}

/// Vertical jump of one curve at a node.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DefectAtom {
    pub t: f64,
    /// Position `x(t-)` just before the relocation.
    pub x: [f64; 2],
    pub a_lo: f64,
    pub a_hi: f64,
    /// `+1` if the angle increases, `-1` if it decreases.
    pub sign: i8,
}

impl DefectAtom {
    pub fn length(&self) -> f64 {
        self.a_hi - self.a_lo
    }

    /// Angle before the jump.
    pub fn a_from(&self) -> f64 {
        if self.sign > 0 {
            self.a_lo
        } else {
            self.a_hi
        }
    }

    /// Angle after the jump.
    pub fn a_to(&self) -> f64 {
        if self.sign > 0 {
            self.a_hi
        } else {
            self.a_lo
        }
    }
}

/// Jump part of the curve defect; the diffuse part vanishes for piecewise
/// constant angles.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CurveDefect {
    pub atoms: Vec<DefectAtom>,
}

impl CurveDefect {
    pub fn total_length(&self) -> f64 {
        self.atoms.iter().map(|a| a.length()).sum()
    }
}

pub fn curve_defect(c: &Curve) -> CurveDefect {
    let atoms = (1..c.nodes.len())
        .filter_map(|k| {
            let (a0, a1) = (c.nodes[k - 1].a, c.nodes[k].a);
            if a0 == a1 {
                return None;
            }
            Some(DefectAtom {
                t: c.nodes[k].t,
                x: c.left_limit(k),
                a_lo: a0.min(a1),
                a_hi: a0.max(a1),
                sign: if a1 > a0 { 1 } else { -1 },
            })
        })
        .collect();
    CurveDefect { atoms }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn curve(nodes: Vec<Node>) -> Curve {
        Curve {
            id: 0,
            side: Side::Hypograph,
            weight: 1.0,
            t_minus: nodes[0].t,
            t_plus: 1.0,
            nodes,
        }
    }

    #[test]
    fn defect_of_single_jump() {
        let c = curve(vec![
            Node {
                t: 0.0,
                x: [0.0, 0.0],
                a: 1.0,
            },
            Node {
                t: 0.5,
                x: [0.1, 0.0],
                a: 0.4,
            },
        ]);
        let d = curve_defect(&c);
        assert_eq!(d.atoms.len(), 1);
        let a = d.atoms[0];
        assert_eq!(a.sign, -1);
        assert_eq!((a.a_lo, a.a_hi), (0.4, 1.0));
        assert!((a.length() - 0.6).abs() < 1e-15);
        assert!((d.total_length() - c.total_variation()).abs() < 1e-15);
    }

    #[test]
    fn straight_curve_has_no_defect() {
        let c = curve(vec![Node {
            t: 0.0,
            x: [0.0, 0.0],
            a: 0.0,
        }]);
        assert!(curve_defect(&c).atoms.is_empty());
        let (x, a) = c.state_at(0.25);
        assert_eq!(a, 0.0);
        assert!((x[1] - 0.25).abs() < 1e-15 && x[0].abs() < 1e-15);
    }

    #[test]
    fn state_is_right_continuous() {
        let c = curve(vec![
            Node {
                t: 0.0,
                x: [0.0, 0.0],
                a: 0.0,
            },
            Node {
                t: 0.5,
                x: [1.0, 0.0],
                a: 2.0,
            },
        ]);
        assert_eq!(c.state_at(0.5), ([1.0, 0.0], 2.0));
        assert_eq!(c.left_limit(1), [0.0, 0.5]);
        assert!((c.spatial_jumps() - 0.5f64.hypot(1.0)).abs() < 1e-15);
    }
}
