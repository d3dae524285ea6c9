mod common;

use eikonal_lab::field::{make_builtin, parse_params, Builtin};
use eikonal_lab::kinetic::Side;
use eikonal_lab::measure::{ABins, Atom, DiscreteMeasure, MeasureKind};
use eikonal_lab::transport::{
    boundary_discrepancy, building_block_map, dual_potential, trim_unbalanced, w1_dual_lower_bound,
    w1_plan, AnisotropicMetric,
};
use eikonal_lab::Error;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn measure(v: &[([f64; 2], f64, f64)]) -> DiscreteMeasure {
    DiscreteMeasure::from_atoms(
        MeasureKind::Kinetic,
        "m",
        v.iter().map(|&(x, a, w)| Atom::kinetic(x, a, w)).collect(),
    )
}

#[test]
fn matches_exhaustive_enumeration_on_small_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for k in 0..40 {
        let (mu1, mu2, w1, w2) = common::random_instance(&mut rng, 5, 3);
        let metric = AnisotropicMetric::new(1.0 + k as f64 * 0.1).unwrap();
        let plan = w1_plan(&mu1, &mu2, &metric).unwrap();
        let brute = common::brute_force_cost(&mu1, &mu2, &w1, &w2, &metric);
        assert!(
            (plan.cost - brute).abs() < 1e-12,
            "instance {k}: {} vs {brute}",
            plan.cost
        );
    }
}

#[test]
fn plan_marginals_match_inputs() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..20 {
        let (mu1, mu2, _, _) = common::random_instance(&mut rng, 40, 5);
        let plan = w1_plan(&mu1, &mu2, &AnisotropicMetric::new(2.0).unwrap()).unwrap();
        let (r, c) = plan.marginals(mu1.len(), mu2.len());
        for (a, m) in mu1.atoms.iter().zip(&r) {
            assert!((a.w - m).abs() < 1e-12);
        }
        for (a, m) in mu2.atoms.iter().zip(&c) {
            assert!((a.w - m).abs() < 1e-12);
        }
        assert!(plan.pairs.iter().all(|p| p.mass > 0.0));
    }
}

#[test]
fn dual_bound_examples() {
    let m = AnisotropicMetric::new(1.0).unwrap();
    let mu1 = measure(&[([0.0, 0.0], 0.0, 1.0)]);
    let mu2 = measure(&[([0.0, 0.0], 1.0, 1.0)]);
    assert_eq!(
        w1_dual_lower_bound(&mu1, &mu2, &m, &[0.0, 0.0]).unwrap(),
        0.0
    );
    assert_eq!(
        w1_dual_lower_bound(&mu1, &mu2, &m, &[0.0, 1.0]).unwrap(),
        -1.0
    );
    assert_eq!(
        w1_dual_lower_bound(&mu1, &mu2, &m, &[-0.0, -1.0]).unwrap(),
        1.0
    );
    let err = w1_dual_lower_bound(&mu1, &mu2, &m, &[0.0, 3.0]).unwrap_err();
    assert!(matches!(err, Error::InvalidPotential { i: 0, j: 1, .. }));
}

#[test]
fn primal_dual_gap_vanishes() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..20 {
        let (mu1, mu2, _, _) = common::random_instance(&mut rng, 25, 4);
        let metric = AnisotropicMetric::new(3.0).unwrap();
        let plan = w1_plan(&mu1, &mu2, &metric).unwrap();
        let psi = dual_potential(&plan, &mu1, &mu2, &metric);
        let lb = w1_dual_lower_bound(&mu1, &mu2, &metric, &psi).unwrap();
        assert!((plan.cost - lb).abs() < 1e-9, "{} vs {lb}", plan.cost);
    }
}

#[test]
fn trimming_examples() {
    let m = AnisotropicMetric::new(1.0).unwrap();
    let mu1 = measure(&[([0.0, 0.0], 0.0, 1.0), ([0.0, 0.0], 2.0, 1.0)]);
    let mu2 = measure(&[([0.0, 0.0], 0.2, 1.0)]);
    let t = trim_unbalanced(&mu1, &mu2, &m, 10.0).unwrap();
    assert!((t.mu1.atoms[0].w - 1.0).abs() < 1e-12);
    assert!(t.mu1.atoms[1].w.abs() < 1e-12);
    assert!((t.c1 - 0.2).abs() < 1e-12);
    assert!((t.c2 - 1.0).abs() < 1e-12);

    let same = trim_unbalanced(&mu2, &mu2, &m, 10.0).unwrap();
    assert_eq!(same.mu1, mu2);
    assert_eq!(same.mu2, mu2);

    let empty = DiscreteMeasure::new(MeasureKind::Kinetic, "e");
    let t = trim_unbalanced(&mu1, &empty, &m, 10.0).unwrap();
    assert_eq!(t.mu1.mass(), 0.0);
    assert!(t.mu2.is_empty());
}

#[test]
fn trimming_respects_mass_bounds() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..20 {
        let (mu1, _, _, _) = common::random_instance(&mut rng, 10, 4);
        let (mu2, _, _, _) = common::random_instance(&mut rng, 10, 4);
        let mu2 = mu2.scaled(0.6);
        let m = AnisotropicMetric::new(2.0).unwrap();
        let t = trim_unbalanced(&mu1, &mu2, &m, 20.0).unwrap();
        assert!((t.mu1.mass() - t.mu2.mass()).abs() < 1e-12);
        for (a, b) in t.mu1.atoms.iter().zip(&mu1.atoms) {
            assert!(a.w <= b.w + 1e-15);
        }
        for (a, b) in t.mu2.atoms.iter().zip(&mu2.atoms) {
            assert!(a.w <= b.w + 1e-15);
        }
        let gap = (mu1.mass() - mu2.mass()).abs();
        assert!(mu1.mass() - t.mu1.mass() <= gap + 1e-12);
        assert!(mu2.mass() - t.mu2.mass() <= gap + 1e-12);
    }
}

fn arb_measure(n: usize) -> impl Strategy<Value = DiscreteMeasure> {
    prop::collection::vec(
        ((-1.0f64..1.0), (-1.0f64..1.0), (0.0f64..3.0), (0.1f64..1.0)),
        1..n,
    )
    .prop_map(|v| {
        let total: f64 = v.iter().map(|t| t.3).sum();
        measure(
            &v.iter()
                .map(|&(x, y, a, w)| ([x, y], a, w / total))
                .collect::<Vec<_>>(),
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn metric_triangle_inequality(p in prop::array::uniform3(-2.0f64..2.0), q in prop::array::uniform3(-2.0f64..2.0), r in prop::array::uniform3(-2.0f64..2.0), l in 0.5f64..5.0) {
        let m = AnisotropicMetric::new(l).unwrap();
        let (p, q, r) = (Atom::kinetic([p[0], p[1]], p[2], 1.0), Atom::kinetic([q[0], q[1]], q[2], 1.0), Atom::kinetic([r[0], r[1]], r[2], 1.0));
        prop_assert!(m.dist(&p, &r) <= m.dist(&p, &q) + m.dist(&q, &r) + 1e-12);
    }

    #[test]
    fn self_transport_is_free(mu in arb_measure(12)) {
        let plan = w1_plan(&mu, &mu, &AnisotropicMetric::new(2.0).unwrap()).unwrap();
        prop_assert!(plan.cost.abs() < 1e-12);
    }

    #[test]
    fn w1_triangle_inequality(a in arb_measure(10), b in arb_measure(10), c in arb_measure(10)) {
        let m = AnisotropicMetric::new(1.5).unwrap();
        let ac = w1_plan(&a, &c, &m).unwrap().cost;
        let ab = w1_plan(&a, &b, &m).unwrap().cost;
        let bc = w1_plan(&b, &c, &m).unwrap().cost;
        prop_assert!(ac <= ab + bc + 1e-9);
    }

    #[test]
    fn cost_scales_linearly(a in arb_measure(10), b in arb_measure(10), k in 1u32..8) {
        let m = AnisotropicMetric::new(1.0).unwrap();
        let c = 0.5f64.powi(k as i32);
        let base = w1_plan(&a, &b, &m).unwrap().cost;
        let scaled = w1_plan(&a.scaled(c), &b.scaled(c), &m).unwrap().cost;
        prop_assert!((scaled - c * base).abs() <= 1e-12 * base.max(1.0));
    }
}

#[test]
fn boundary_discrepancy_behaviour() {
    let bins = ABins::new(32, std::f64::consts::PI);
    let c = make_builtin(Builtin::Constant, &parse_params("m=pi").unwrap()).unwrap();
    assert_eq!(boundary_discrepancy(&c, 0.05, &bins).unwrap(), 0.0);
    assert!(matches!(
        boundary_discrepancy(&c, 0.3, &bins),
        Err(Error::Geometry(_))
    ));

    let f = make_builtin(Builtin::SingleJump, &parse_params("nx=256").unwrap()).unwrap();
    let ts: Vec<f64> = (4..=8).map(|n| 0.5f64.powi(n)).collect();
    let eps: Vec<f64> = ts
        .iter()
        .map(|&t| boundary_discrepancy(&f, t, &bins).unwrap())
        .collect();
    let slope = (eps[0] / eps[4]).ln() / (ts[0] / ts[4]).ln();
    assert!(slope >= 0.9, "log-log slope {slope}, eps {eps:?}");
}

#[test]
fn building_block_on_constant_field_is_identity() {
    let f = make_builtin(Builtin::Constant, &parse_params("nx=32").unwrap()).unwrap();
    let bins = ABins::new(16, f.m);
    let s = building_block_map(&f, 4, &bins, Side::Hypograph).unwrap();
    assert_eq!(s.plan.cost, 0.0);
    assert!(s.plan.pairs.is_empty());
}

#[test]
fn building_block_on_single_jump() {
    let f = make_builtin(Builtin::SingleJump, &parse_params("nx=64").unwrap()).unwrap();
    let bins = ABins::new(64, f.m);
    for n in 5..=8 {
        let s = building_block_map(&f, n, &bins, Side::Hypograph).unwrap();
        assert!(
            s.plan.cost <= s.bound + s.slack,
            "n={n}: {} > {} + {}",
            s.plan.cost,
            s.bound,
            s.slack
        );
        // Below half a cell of displacement the pushed indicator equals the
        // static one on the lattice and nothing moves.
        if s.t_bar < 0.5 * f.dy() {
            assert_eq!(s.tv_mismatch, 0.0);
            continue;
        }
        let vert = s.vertical_cost();
        assert!(vert <= s.t_bar * s.nu_ball * 2.0, "n={n}: {vert}");
    }
}
