use std::f64::consts::PI;

use eikonal_lab::field::{make_builtin, parse_params, Builtin, LiftedField};
use eikonal_lab::kinetic::{
    burgers_transform, chi, entropy_measure, kinetic_residual, kinetic_residual_with, nu_projection,
};
use eikonal_lab::measure::ABins;
use eikonal_lab::testfn::{Bump1, KineticTest};
use eikonal_lab::Error;
use proptest::prelude::*;

fn builtin(kind: Builtin, params: &str) -> LiftedField {
    make_builtin(kind, &parse_params(params).unwrap()).unwrap()
}

fn bins(f: &LiftedField) -> ABins {
    ABins::new(f.nx, f.m)
}

#[test]
fn constant_field_has_no_defect() {
    let f = builtin(Builtin::Constant, "nx=32");
    let u = entropy_measure(&f, &bins(&f));
    assert!(u.is_empty());
    assert_eq!(nu_projection(&u).total_variation(), 0.0);
}

#[test]
fn single_jump_line_density() {
    let target = 3f64.sqrt() - PI / 3.0;
    for nx in [64usize, 128] {
        let f = builtin(Builtin::SingleJump, &format!("nx={nx}"));
        let nu = nu_projection(&entropy_measure(&f, &bins(&f))).restrict(|a| f.in_ball(a.x));
        let density = nu.total_variation() / (2.0 * f.r);
        assert!(
            (density - target).abs() / target < 0.02,
            "nx={nx}: {density} vs {target}"
        );
    }
}

#[test]
fn single_jump_support() {
    let f = builtin(Builtin::SingleJump, "nx=64");
    let (lo, hi) = (PI / 6.0, 5.0 * PI / 6.0);
    let b = bins(&f);
    for at in &entropy_measure(&f, &b).atoms {
        assert!(at.x[1].abs() <= f.h(), "atom off the line at {:?}", at.x);
        assert!(
            at.a >= lo - b.width() && at.a <= hi + b.width(),
            "angle {}",
            at.a
        );
    }
}

#[test]
fn projection_preserves_total_variation() {
    for kind in [
        Builtin::SingleJump,
        Builtin::TwoJump,
        Builtin::Vortex,
        Builtin::Rarefaction,
    ] {
        let f = builtin(kind, "nx=32");
        let u = entropy_measure(&f, &bins(&f));
        let nu = nu_projection(&u);
        let (a, b) = (u.total_variation(), nu.total_variation());
        assert!((a - b).abs() <= 1e-12 * (1.0 + a), "{kind:?}: {a} vs {b}");
    }
}

#[test]
fn kinetic_residual_on_constant_field() {
    let f = builtin(Builtin::Constant, "nx=64");
    let b = bins(&f);
    assert!(kinetic_residual(&f, &entropy_measure(&f, &b), &b, 20, 7) < 1e-10);
}

#[test]
fn kinetic_residual_on_single_jump() {
    let f = builtin(Builtin::SingleJump, "nx=128");
    let b = ABins::new(32, f.m);
    let r = kinetic_residual(&f, &entropy_measure(&f, &b), &b, 20, 7);
    assert!(r < 3.0 * f.h(), "{r}");
}

#[test]
fn kinetic_residual_on_vortex_away_from_cut_and_center() {
    let f = builtin(Builtin::Vortex, "nx=128");
    let b = ABins::new(64, f.m);
    let tests: Vec<KineticTest> = [[-0.5, 0.0], [0.0, 0.5], [0.0, -0.5]]
        .iter()
        .map(|&x| KineticTest {
            x,
            sx: 0.2,
            a: Bump1 {
                c: f.m / 2.0,
                s: f.m / 2.0 - 0.01,
            },
        })
        .collect();
    let r = kinetic_residual_with(&f, &entropy_measure(&f, &b), &b, &tests);
    assert!(r < 3.0 * f.h(), "{r}");
}

#[test]
fn kinetic_residual_shrinks_under_refinement() {
    let r: Vec<f64> = [32usize, 64, 128]
        .iter()
        .map(|&nx| {
            let f = builtin(Builtin::SingleJump, &format!("nx={nx}"));
            let b = ABins::new(nx / 2, f.m);
            kinetic_residual(&f, &entropy_measure(&f, &b), &b, 20, 7)
        })
        .collect();
    assert!(r[1] <= 0.5 * r[0] && r[2] <= 0.5 * r[1], "{r:?}");
}

#[test]
fn kinetic_residual_detects_a_missing_defect() {
    let f = builtin(Builtin::SingleJump, "nx=64");
    let b = bins(&f);
    let empty = entropy_measure(&builtin(Builtin::Constant, "nx=64"), &b);
    assert!(kinetic_residual(&f, &empty, &b, 20, 7) > 1e-3);
}

#[test]
fn chi_rejects_angles_outside_range() {
    let f = builtin(Builtin::Constant, "nx=16");
    assert!(chi(&f, -0.1).is_err());
    assert!(chi(&f, f.m + 0.1).is_err());
    assert!(chi(&f, f.m).is_ok());
}

#[test]
fn burgers_on_single_jump() {
    let f = builtin(Builtin::SingleJump, "nx=64");
    let r = burgers_transform(&f).unwrap();
    assert_eq!(r.v.len(), f.phi.len());
    assert!(r.residual < 2.0 * f.h(), "{}", r.residual);
    let v = builtin(Builtin::Vortex, "nx=16");
    assert!(matches!(
        burgers_transform(&v),
        Err(Error::NotApplicable(_))
    ));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn chi_is_monotone_in_a(a in 0.0f64..PI, b in 0.0f64..PI) {
        let f = builtin(Builtin::Vortex, "nx=16,m=2.5pi");
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let s_lo = chi(&f, lo).unwrap();
        let s_hi = chi(&f, hi).unwrap();
        prop_assert!(s_lo.indicator.iter().zip(&s_hi.indicator).all(|(x, y)| x >= y));
    }
}
