//! Smooth compactly supported test functions built from the profile
//! `b(t) = (1 - t^2)^2`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::field::{bump, bump_prime, LiftedField, BUMP_PRIME_SUP};

/// `b((t - c) / s)` on the line.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bump1 {
    pub c: f64,
    pub s: f64,
}

impl Bump1 {
    pub fn value(&self, t: f64) -> f64 {
        bump((t - self.c) / self.s)
    }

    pub fn deriv(&self, t: f64) -> f64 {
        bump_prime((t - self.c) / self.s) / self.s
    }

    pub fn deriv_sup(&self) -> f64 {
        BUMP_PRIME_SUP / self.s
    }

    /// Exact integral over `[lo, hi]`.
    pub fn integral(&self, lo: f64, hi: f64) -> f64 {
        use crate::field::bump_integral;
        self.s * (bump_integral((hi - self.c) / self.s) - bump_integral((lo - self.c) / self.s))
    }
}

/// `psi(x, a) = b(x1) b(x2) g(a)` with an isotropic spatial bump.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KineticTest {
    pub x: [f64; 2],
    pub sx: f64,
    pub a: Bump1,
}

impl KineticTest {
    pub fn spatial(&self, p: [f64; 2]) -> f64 {
        bump((p[0] - self.x[0]) / self.sx) * bump((p[1] - self.x[1]) / self.sx)
    }

    pub fn value(&self, p: [f64; 2], a: f64) -> f64 {
        self.spatial(p) * self.a.value(a)
    }

    pub fn d_a(&self, p: [f64; 2], a: f64) -> f64 {
        self.spatial(p) * self.a.deriv(a)
    }

    pub fn grad_x(&self, p: [f64; 2], a: f64) -> [f64; 2] {
        let u = (p[0] - self.x[0]) / self.sx;
        let v = (p[1] - self.x[1]) / self.sx;
        let g = self.a.value(a) / self.sx;
        [bump_prime(u) * bump(v) * g, bump(u) * bump_prime(v) * g]
    }

    /// `max(sup|psi|, sup|d_x1 psi|, sup|d_x2 psi|, sup|d_a psi|)`.
    pub fn c1_norm(&self) -> f64 {
        1f64.max(BUMP_PRIME_SUP / self.sx).max(self.a.deriv_sup())
    }
}

/// `psi(t, x, a) = tau(t) phi(x, a)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpaceTimeTest {
    pub t: Bump1,
    pub k: KineticTest,
}

impl SpaceTimeTest {
    pub fn value(&self, t: f64, p: [f64; 2], a: f64) -> f64 {
        self.t.value(t) * self.k.value(p, a)
    }

    /// `int_lo^hi psi(t, p, a) da`, exact.
    pub fn a_integral(&self, t: f64, p: [f64; 2], lo: f64, hi: f64) -> f64 {
        self.t.value(t) * self.k.spatial(p) * self.k.a.integral(lo, hi)
    }

    pub fn c1_norm(&self) -> f64 {
        self.k.c1_norm().max(self.t.deriv_sup())
    }
}

/// Seeded family of kinetic test functions with spatial support inside the
/// ball of radius `0.9 R` and angular support inside `(0, M)`.
pub fn kinetic_family(f: &LiftedField, count: usize, seed: u64) -> Vec<KineticTest> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let c = f.center();
    (0..count)
        .map(|_| {
            let sx = f.r * rng.gen_range(0.15..0.4);
            let room = (0.9 * f.r - sx * std::f64::consts::SQRT_2).max(0.0);
            let (rad, th) = (
                room * rng.gen::<f64>().sqrt(),
                rng.gen_range(0.0..std::f64::consts::TAU),
            );
            let sa = f.m * rng.gen_range(0.15..0.4);
            let ca = rng.gen_range(sa..(f.m - sa));
            KineticTest {
                x: [c[0] + rad * th.cos(), c[1] + rad * th.sin()],
                sx,
                a: Bump1 { c: ca, s: sa },
            }
        })
        .collect()
}

/// Seeded family of space-time test functions with time support inside
/// `(0, 1)`.
pub fn space_time_family(f: &LiftedField, count: usize, seed: u64) -> Vec<SpaceTimeTest> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    kinetic_family(f, count, seed)
        .into_iter()
        .map(|k| {
            let st = rng.gen_range(0.2..0.5);
            let ct = rng.gen_range(st..(1.0 - st));
            SpaceTimeTest {
                t: Bump1 { c: ct, s: st },
                k,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{make_builtin, Builtin, BuiltinParams};

    #[test]
    fn families_respect_supports() {
        let f = make_builtin(Builtin::SingleJump, &BuiltinParams::new()).unwrap();
        for t in space_time_family(&f, 50, 3) {
            let d = (t.k.x[0].powi(2) + t.k.x[1].powi(2)).sqrt();
            assert!(d + t.k.sx * std::f64::consts::SQRT_2 <= 0.9 * f.r + 1e-12);
            assert!(t.k.a.c - t.k.a.s >= 0.0 && t.k.a.c + t.k.a.s <= f.m);
            assert!(t.t.c - t.t.s >= 0.0 && t.t.c + t.t.s <= 1.0);
        }
    }

    #[test]
    fn bump_integral_matches_midpoint() {
        let b = Bump1 { c: 0.3, s: 0.7 };
        let n = 20_000;
        let (lo, hi) = (-0.1, 0.8);
        let h = (hi - lo) / n as f64;
        let q: f64 = (0..n).map(|k| b.value(lo + (k as f64 + 0.5) * h) * h).sum();
        assert!((q - b.integral(lo, hi)).abs() < 1e-9);
    }
}
