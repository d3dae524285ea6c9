//! Split of seeds by their straight motion over one block against the ball.

use serde::{Deserialize, Serialize};

use crate::field::LiftedField;
use crate::measure::ABins;
use crate::transport::velocity;

/// Behaviour of the segment `x + ie^{ia} t`, `t in [0, t_bar]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum BlockClass {
    /// Starts and ends inside the ball.
    E1,
    /// Starts inside, leaves at `t_plus`.
    E2 { t_plus: f64 },
    /// Starts outside, enters at `t_minus`.
    E3 { t_minus: f64 },
    /// Never relevant for this block.
    Outside,
}

/// Roots of `|x + v t - c|^2 = R^2` as `(t_enter, t_exit)`, if the line
/// meets the circle.
pub fn circle_times(f: &LiftedField, x: [f64; 2], a: f64) -> Option<(f64, f64)> {
    let c = f.center();
    let v = velocity(a);
    let d = [x[0] - c[0], x[1] - c[1]];
    let b = d[0] * v[0] + d[1] * v[1];
    let cc = d[0] * d[0] + d[1] * d[1] - f.r * f.r;
    let disc = b * b - cc;
    if disc < 0.0 {
        return None;
    }
    let s = disc.sqrt();
    Some((-b - s, -b + s))
}

pub fn classify_point(f: &LiftedField, x: [f64; 2], a: f64, t_bar: f64) -> BlockClass {
    let v = velocity(a);
    let end = [x[0] + v[0] * t_bar, x[1] + v[1] * t_bar];
    match (f.in_ball(x), f.in_ball(end)) {
        (true, true) => BlockClass::E1,
        (true, false) => {
            let (_, t_plus) = circle_times(f, x, a).expect("start inside the ball");
            BlockClass::E2 {
                t_plus: t_plus.clamp(0.0, t_bar),
            }
        }
        (false, true) => {
            let (t_minus, _) = circle_times(f, x, a).expect("end inside the ball");
            BlockClass::E3 {
                t_minus: t_minus.clamp(0.0, t_bar),
            }
        }
        (false, false) => BlockClass::Outside,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Seed {
    pub x: [f64; 2],
    pub a: f64,
    pub class: BlockClass,
}

/// Classify every cell-center seed within `t_bar` of the closed ball.
pub fn partition_e123(f: &LiftedField, bins: &ABins, t_bar: f64) -> Vec<Seed> {
    let c = f.center();
    let reach = f.r + t_bar + f.h();
    let mut out = Vec::new();
    for j in 0..f.ny {
        for i in 0..f.nx {
            let x = f.cell_center(i, j);
            if (x[0] - c[0]).hypot(x[1] - c[1]) > reach {
                continue;
            }
            for b in 0..bins.k {
                let a = bins.center(b);
                let class = classify_point(f, x, a, t_bar);
                if class != BlockClass::Outside {
                    out.push(Seed { x, a, class });
                }
            }
        }
    }
    out
}
